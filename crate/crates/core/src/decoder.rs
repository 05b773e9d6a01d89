//! Constrained label generation over a token trie.
//!
//! Each label is tokenized once; generation walks the trie from the root,
//! asking the backend only for the logits of the ids that continue some
//! label, and samples from the softmax restricted to those ids. The result is
//! always one of the configured labels.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{BackendError, ModelBackend};
use crate::tokenizer::{TokenId, Tokenizer, TokenizerError};

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("need at least 2 labels, got {0}")]
    TooFewLabels(usize),
    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),
    #[error("label {0:?} tokenizes to an empty sequence")]
    EmptyLabel(String),
    #[error("label {label:?}: {source}")]
    Tokenizer {
        label: String,
        #[source]
        source: TokenizerError,
    },
    #[error("labels {shorter:?} and {longer:?} conflict: the token sequence of the first is a prefix of the second (consider eos-terminated labels)")]
    PrefixConflict { shorter: String, longer: String },
    #[error("eos-terminated labels requested but the tokenizer has no eos token")]
    NoEos,
    #[error("invalid sampler policy: {0}")]
    InvalidPolicy(String),
    #[error("step {step}: {source}")]
    Backend {
        step: usize,
        #[source]
        source: BackendError,
    },
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

/// How a label's token sequence ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// A label is complete when its last token is emitted; labels must be prefix-free.
    #[default]
    Leaf,
    /// Every label is followed by the tokenizer's eos id, which removes prefix conflicts.
    Eos,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrieOptions {
    /// Prepended to every label before tokenization.
    pub label_prefix: String,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Node {
    /// (token id, child node index), sorted by id.
    children: Vec<(TokenId, usize)>,
    label: Option<usize>,
}

/// Immutable token trie over a label set; each root-to-leaf path spells
/// exactly one label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelTrie {
    labels: Vec<String>,
    sequences: Vec<Vec<TokenId>>,
    nodes: Vec<Node>,
}

pub const ROOT: usize = 0;

impl LabelTrie {
    /// Build from pre-tokenized sequences. Order of `labels` is preserved.
    pub fn from_sequences(
        labels: Vec<String>,
        sequences: Vec<Vec<TokenId>>,
    ) -> Result<Self, DecodeError> {
        if labels.len() < 2 {
            return Err(DecodeError::TooFewLabels(labels.len()));
        }
        assert_eq!(labels.len(), sequences.len(), "one sequence per label");
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(DecodeError::DuplicateLabel(l.clone()));
            }
            if sequences[i].is_empty() {
                return Err(DecodeError::EmptyLabel(l.clone()));
            }
        }
        // Check prefix-freeness pairwise so the error can name both labels.
        for i in 0..labels.len() {
            for j in 0..labels.len() {
                if i != j && sequences[j].starts_with(&sequences[i]) {
                    let (shorter, longer) = if sequences[i].len() == sequences[j].len() {
                        (labels[i.min(j)].clone(), labels[i.max(j)].clone())
                    } else {
                        (labels[i].clone(), labels[j].clone())
                    };
                    return Err(DecodeError::PrefixConflict { shorter, longer });
                }
            }
        }
        let mut nodes = vec![Node {
            children: Vec::new(),
            label: None,
        }];
        for (li, seq) in sequences.iter().enumerate() {
            let mut at = ROOT;
            for &id in seq {
                at = match nodes[at].children.binary_search_by_key(&id, |&(t, _)| t) {
                    Ok(k) => nodes[at].children[k].1,
                    Err(k) => {
                        let new = nodes.len();
                        nodes.push(Node {
                            children: Vec::new(),
                            label: None,
                        });
                        nodes[at].children.insert(k, (id, new));
                        new
                    }
                };
            }
            nodes[at].label = Some(li);
        }
        Ok(Self {
            labels,
            sequences,
            nodes,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn sequences(&self) -> &[Vec<TokenId>] {
        &self.sequences
    }

    /// Ids that may follow `node`, ascending.
    pub fn allowed(&self, node: usize) -> Vec<TokenId> {
        self.nodes[node].children.iter().map(|&(t, _)| t).collect()
    }

    pub fn child(&self, node: usize, id: TokenId) -> Option<usize> {
        let ch = &self.nodes[node].children;
        ch.binary_search_by_key(&id, |&(t, _)| t).ok().map(|k| ch[k].1)
    }

    /// Label index when `node` is a leaf.
    pub fn leaf_label(&self, node: usize) -> Option<usize> {
        self.nodes[node].label
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.children.is_empty()).count()
    }
}

/// Tokenize each label (no special tokens) and build the trie.
pub fn build_trie(
    labels: &[String],
    tokenizer: &dyn Tokenizer,
    options: &TrieOptions,
) -> Result<LabelTrie, DecodeError> {
    let eos = match options.termination {
        Termination::Leaf => None,
        Termination::Eos => Some(tokenizer.eos_id().ok_or(DecodeError::NoEos)?),
    };
    let mut sequences = Vec::with_capacity(labels.len());
    for label in labels {
        let text = format!("{}{label}", options.label_prefix);
        let mut seq = tokenizer.encode(&text).map_err(|source| DecodeError::Tokenizer {
            label: label.clone(),
            source,
        })?;
        if seq.is_empty() {
            return Err(DecodeError::EmptyLabel(label.clone()));
        }
        seq.extend(eos);
        sequences.push(seq);
    }
    LabelTrie::from_sequences(labels.to_vec(), sequences)
}

/// Sampling settings. Only plain temperature-1 sampling over the full
/// (masked) distribution is supported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerPolicy {
    pub temperature: f64,
    pub top_p: Option<f64>,
    pub top_k: Option<usize>,
    pub seed: u64,
}

impl Default for SamplerPolicy {
    fn default() -> Self {
        Self {
            temperature: 1.0,
            top_p: None,
            top_k: None,
            seed: 0,
        }
    }
}

impl SamplerPolicy {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), DecodeError> {
        if self.temperature != 1.0 {
            return Err(DecodeError::InvalidPolicy(format!(
                "temperature must be 1.0, got {}",
                self.temperature
            )));
        }
        if self.top_p.is_some() || self.top_k.is_some() {
            return Err(DecodeError::InvalidPolicy("top_p/top_k truncation is not supported".into()));
        }
        Ok(())
    }

    pub fn rng(&self) -> ChaCha8Rng {
        rng_for_seed(self.seed)
    }
}

pub fn rng_for_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sampled {
    pub label: String,
    pub label_index: usize,
    /// Tokens emitted, forced ones included.
    pub steps: usize,
}

/// Index drawn from softmax(`logits`) using one uniform from `rng`.
pub fn sample_softmax<R: RngCore + ?Sized>(logits: &[f64], rng: &mut R) -> usize {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    // u lands past the accumulated sum only through rounding
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Walk the trie from the root, sampling one token per branching node.
/// Nodes with a single continuation are taken without querying the backend
/// or drawing from `rng`.
pub fn sample_label<R: RngCore + ?Sized>(
    trie: &LabelTrie,
    backend: &dyn ModelBackend,
    prompt_ids: &[TokenId],
    policy: &SamplerPolicy,
    rng: &mut R,
) -> Result<Sampled, DecodeError> {
    policy.validate()?;
    let mut context = prompt_ids.to_vec();
    let mut node = ROOT;
    let mut steps = 0;
    loop {
        if let Some(label_index) = trie.leaf_label(node) {
            return Ok(Sampled {
                label: trie.labels[label_index].clone(),
                label_index,
                steps,
            });
        }
        let allowed = trie.allowed(node);
        let id = match allowed.len() {
            0 => return Err(DecodeError::Internal(format!("node {node} has no continuation"))),
            1 => allowed[0],
            _ => {
                let scores = backend
                    .next_token_scores(&context, &allowed)
                    .map_err(|source| DecodeError::Backend { step: steps, source })?;
                if scores.len() != allowed.len() {
                    return Err(DecodeError::Backend {
                        step: steps,
                        source: BackendError::LengthMismatch {
                            expected: allowed.len(),
                            got: scores.len(),
                        },
                    });
                }
                allowed[sample_softmax(&scores, rng)]
            }
        };
        node = trie.child(node, id).expect("allowed id has a child");
        context.push(id);
        steps += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{BackendInfo, MockBackend, ScriptEntry};
    use crate::hash::prompt_hash;
    use std::collections::HashMap;
    use std::sync::Mutex;

    fn toy() -> crate::tokenizer::BpeModel {
        let vocab: HashMap<String, TokenId> =
            [("a", 0), ("b", 1), ("c", 2)].iter().map(|(k, v)| (k.to_string(), *v)).collect();
        crate::tokenizer::BpeModel::from_parts(vocab, vec![]).unwrap()
    }

    fn labels(ls: &[&str]) -> Vec<String> {
        ls.iter().map(|s| s.to_string()).collect()
    }

    struct CountingRng<R> {
        inner: R,
        draws: usize,
    }

    impl<R: RngCore> RngCore for CountingRng<R> {
        fn next_u32(&mut self) -> u32 {
            self.draws += 1;
            self.inner.next_u32()
        }
        fn next_u64(&mut self) -> u64 {
            self.draws += 1;
            self.inner.next_u64()
        }
        fn fill_bytes(&mut self, dest: &mut [u8]) {
            self.draws += 1;
            self.inner.fill_bytes(dest)
        }
        fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
            self.draws += 1;
            self.inner.try_fill_bytes(dest)
        }
    }

    /// Records every candidate list it is asked about.
    struct Recording(Mutex<Vec<Vec<TokenId>>>);

    impl ModelBackend for Recording {
        fn next_token_scores(&self, _: &[TokenId], c: &[TokenId]) -> Result<Vec<f64>, BackendError> {
            self.0.lock().unwrap().push(c.to_vec());
            Ok(vec![0.0; c.len()])
        }
        fn info(&self) -> BackendInfo {
            BackendInfo {
                name: "recording".into(),
                max_context: 8192,
                supports_chat: false,
            }
        }
    }

    #[test]
    fn hand_built_trie() {
        let trie = build_trie(&labels(&["ab", "c"]), &toy(), &TrieOptions::default()).unwrap();
        assert_eq!(trie.sequences(), &[vec![0, 1], vec![2]]);
        assert_eq!(trie.allowed(ROOT), vec![0, 2]);
        let after_a = trie.child(ROOT, 0).unwrap();
        assert_eq!(trie.allowed(after_a), vec![1]);
        assert_eq!(trie.leaf_count(), 2);
    }

    #[test]
    fn prefix_conflict_names_both() {
        let err = build_trie(&labels(&["ab", "a"]), &toy(), &TrieOptions::default()).unwrap_err();
        match err {
            DecodeError::PrefixConflict { shorter, longer } => {
                assert_eq!((shorter.as_str(), longer.as_str()), ("a", "ab"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn eos_termination_resolves_prefixes() {
        let tok = crate::tokenizer::BpeModel::from_parts(
            [("a", 0), ("b", 1), ("<|endoftext|>", 2)]
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
            vec![],
        )
        .unwrap();
        let opts = TrieOptions {
            termination: Termination::Eos,
            ..Default::default()
        };
        let trie = build_trie(&labels(&["a", "ab"]), &tok, &opts).unwrap();
        assert_eq!(trie.sequences(), &[vec![0, 2], vec![0, 1, 2]]);
        assert!(matches!(
            build_trie(&labels(&["a", "ab"]), &toy(), &opts),
            Err(DecodeError::NoEos)
        ));
    }

    #[test]
    fn label_set_errors() {
        let t = toy();
        let o = TrieOptions::default();
        assert!(matches!(build_trie(&labels(&["a"]), &t, &o), Err(DecodeError::TooFewLabels(1))));
        assert!(matches!(
            build_trie(&labels(&["c", "c"]), &t, &o),
            Err(DecodeError::DuplicateLabel(_))
        ));
        assert!(matches!(build_trie(&labels(&["", "c"]), &t, &o), Err(DecodeError::EmptyLabel(_))));
        assert!(matches!(build_trie(&labels(&["a", "x"]), &t, &o), Err(DecodeError::Tokenizer { .. })));
    }

    #[test]
    fn label_prefix_is_tokenized() {
        let tok = crate::tokenizer::BpeModel::byte_level(&[]).unwrap();
        let opts = TrieOptions {
            label_prefix: " ".into(),
            ..Default::default()
        };
        let trie = build_trie(&labels(&["A", "B"]), &tok, &opts).unwrap();
        assert_eq!(trie.sequences(), &[vec![32, 65], vec![32, 66]]);
    }

    #[test]
    fn forced_steps_skip_rng_and_backend() {
        let trie = build_trie(&labels(&["ab", "c"]), &toy(), &TrieOptions::default()).unwrap();
        let backend = Recording(Mutex::new(Vec::new()));
        for seed in 0..50 {
            let mut rng = CountingRng {
                inner: rng_for_seed(seed),
                draws: 0,
            };
            backend.0.lock().unwrap().clear();
            let s = sample_label(&trie, &backend, &[9], &SamplerPolicy::default(), &mut rng).unwrap();
            assert_eq!(rng.draws, 1, "only the root branches");
            assert_eq!(*backend.0.lock().unwrap(), vec![vec![0, 2]]);
            assert_eq!(s.steps, if s.label == "ab" { 2 } else { 1 });
        }
    }

    #[test]
    fn scripted_three_to_one() {
        let trie = LabelTrie::from_sequences(labels(&["yes", "no"]), vec![vec![5], vec![6]]).unwrap();
        let h = prompt_hash(&[1, 2]);
        let backend = MockBackend::scripted(vec![
            ScriptEntry { prompt_hash: h, candidate: 5, logit: 3f64.ln() },
            ScriptEntry { prompt_hash: h, candidate: 6, logit: 0.0 },
        ])
        .unwrap();
        let n = 10_000;
        let yes = (0..n)
            .filter(|&s| {
                let p = SamplerPolicy::with_seed(s);
                sample_label(&trie, &backend, &[1, 2], &p, &mut p.rng()).unwrap().label == "yes"
            })
            .count();
        let freq = yes as f64 / n as f64;
        assert!((freq - 0.75).abs() < 0.03, "{freq}");
    }

    #[test]
    fn deterministic_given_seed() {
        let trie = LabelTrie::from_sequences(labels(&["x", "y", "z"]), vec![vec![1], vec![2], vec![3]]).unwrap();
        let backend = MockBackend::hash_logits(11);
        let p = SamplerPolicy::with_seed(42);
        let a = sample_label(&trie, &backend, &[4, 5], &p, &mut p.rng()).unwrap();
        let b = sample_label(&trie, &backend, &[4, 5], &p, &mut p.rng()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn policy_rejects_truncation() {
        let p = SamplerPolicy {
            top_k: Some(5),
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = SamplerPolicy {
            temperature: 0.7,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn softmax_handles_extreme_logits() {
        let mut rng = rng_for_seed(0);
        for _ in 0..100 {
            assert_eq!(sample_softmax(&[-1e308, 700.0, -700.0], &mut rng), 1);
        }
    }
}

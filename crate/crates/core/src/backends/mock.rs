use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::{BackendError, BackendInfo, ModelBackend};
use crate::hash::{prompt_hash, Fnv1a};
use crate::tokenizer::TokenId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MockMode {
    /// Every candidate scores 0.
    Uniform,
    /// Logit derived from FNV-1a over (seed, prompt ids, candidate), in [-5, 5).
    #[default]
    HashLogits,
    /// Table lookup keyed by (prompt hash, candidate); misses are errors.
    Scripted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEntry {
    /// [`crate::hash::prompt_hash`] of the full prompt (including emitted ids).
    pub prompt_hash: u64,
    pub candidate: TokenId,
    pub logit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MockBackendConfig {
    pub seed: u64,
    pub mode: MockMode,
    pub script: Vec<ScriptEntry>,
    pub max_context: usize,
}

impl Default for MockBackendConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            mode: MockMode::HashLogits,
            script: Vec::new(),
            max_context: 8192,
        }
    }
}

fn hash_logit(seed: u64, prompt_ids: &[TokenId], candidate: TokenId) -> f64 {
    let mut h = Fnv1a::new();
    h.write_u64(seed);
    for &id in prompt_ids {
        h.write_u32(id);
    }
    h.write_u32(candidate);
    let unit = (h.finish() >> 11) as f64 / (1u64 << 53) as f64;
    unit * 10.0 - 5.0
}

/// Scores for the uniform and hash modes, or for scripted mode given its table.
fn scores_with(
    cfg: &MockBackendConfig,
    table: Option<&HashMap<(u64, TokenId), f64>>,
    prompt_ids: &[TokenId],
    candidate_ids: &[TokenId],
) -> Result<Vec<f64>, BackendError> {
    match cfg.mode {
        MockMode::Uniform => Ok(vec![0.0; candidate_ids.len()]),
        MockMode::HashLogits => Ok(candidate_ids
            .iter()
            .map(|&c| hash_logit(cfg.seed, prompt_ids, c))
            .collect()),
        MockMode::Scripted => {
            let key = prompt_hash(prompt_ids);
            candidate_ids
                .iter()
                .map(|&c| {
                    let hit = match table {
                        Some(t) => t.get(&(key, c)).copied(),
                        None => cfg
                            .script
                            .iter()
                            .find(|e| e.prompt_hash == key && e.candidate == c)
                            .map(|e| e.logit),
                    };
                    hit.ok_or(BackendError::ScriptMiss {
                        prompt_hash: key,
                        candidate: c,
                    })
                })
                .collect()
        }
    }
}

/// Stateless form of the mock backend's scoring rule.
pub fn mock_scores(
    cfg: &MockBackendConfig,
    prompt_ids: &[TokenId],
    candidate_ids: &[TokenId],
) -> Result<Vec<f64>, BackendError> {
    scores_with(cfg, None, prompt_ids, candidate_ids)
}

/// Deterministic in-process backend for tests and dry runs.
#[derive(Debug)]
pub struct MockBackend {
    cfg: MockBackendConfig,
    table: HashMap<(u64, TokenId), f64>,
    calls: AtomicU64,
}

impl MockBackend {
    pub fn new(cfg: MockBackendConfig) -> Result<Self, BackendError> {
        let mut table = HashMap::with_capacity(cfg.script.len());
        for e in &cfg.script {
            if !e.logit.is_finite() {
                return Err(BackendError::Config(format!(
                    "script logit for candidate {} is not finite",
                    e.candidate
                )));
            }
            if table.insert((e.prompt_hash, e.candidate), e.logit).is_some() {
                return Err(BackendError::Config(format!(
                    "duplicate script entry for prompt hash {:#018x}, candidate {}",
                    e.prompt_hash, e.candidate
                )));
            }
        }
        if cfg.max_context == 0 {
            return Err(BackendError::Config("max_context must be positive".into()));
        }
        Ok(Self {
            cfg,
            table,
            calls: AtomicU64::new(0),
        })
    }

    pub fn uniform() -> Self {
        Self::new(MockBackendConfig {
            mode: MockMode::Uniform,
            ..Default::default()
        })
        .expect("valid config")
    }

    pub fn hash_logits(seed: u64) -> Self {
        Self::new(MockBackendConfig {
            seed,
            ..Default::default()
        })
        .expect("valid config")
    }

    pub fn scripted(script: Vec<ScriptEntry>) -> Result<Self, BackendError> {
        Self::new(MockBackendConfig {
            mode: MockMode::Scripted,
            script,
            ..Default::default()
        })
    }

    pub fn config(&self) -> &MockBackendConfig {
        &self.cfg
    }

    /// Number of scoring calls served so far.
    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

impl ModelBackend for MockBackend {
    fn next_token_scores(
        &self,
        prompt_ids: &[TokenId],
        candidate_ids: &[TokenId],
    ) -> Result<Vec<f64>, BackendError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        scores_with(&self.cfg, Some(&self.table), prompt_ids, candidate_ids)
    }

    fn info(&self) -> BackendInfo {
        let mode = match self.cfg.mode {
            MockMode::Uniform => "uniform",
            MockMode::HashLogits => "hash_logits",
            MockMode::Scripted => "scripted",
        };
        BackendInfo {
            name: format!("mock-{mode}"),
            max_context: self.cfg.max_context,
            supports_chat: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_is_zero() {
        let b = MockBackend::uniform();
        assert_eq!(b.next_token_scores(&[1, 2], &[3, 4, 5]).unwrap(), vec![0.0; 3]);
        assert!(b.next_token_scores(&[], &[]).unwrap().is_empty());
    }

    #[test]
    fn hash_logits_pinned() {
        let cfg = MockBackendConfig {
            seed: 7,
            ..Default::default()
        };
        let a = mock_scores(&cfg, &[10, 20, 30], &[1, 2, 3]).unwrap();
        let b = MockBackend::new(cfg).unwrap().next_token_scores(&[10, 20, 30], &[1, 2, 3]).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|x| (-5.0..5.0).contains(x)));
        // Frozen from an independent FNV-1a computation over the LE bytes.
        let mut h: u64 = 0xcbf29ce484222325;
        let mut bytes = 7u64.to_le_bytes().to_vec();
        for id in [10u32, 20, 30, 1] {
            bytes.extend(id.to_le_bytes());
        }
        for b in bytes {
            h = (h ^ b as u64).wrapping_mul(0x100000001b3);
        }
        let expect = (h >> 11) as f64 / 9007199254740992.0 * 10.0 - 5.0;
        assert_eq!(a[0], expect);
    }

    #[test]
    fn hash_logits_depend_on_seed_and_prompt() {
        let a = mock_scores(&MockBackendConfig { seed: 1, ..Default::default() }, &[1], &[2]).unwrap();
        let b = mock_scores(&MockBackendConfig { seed: 2, ..Default::default() }, &[1], &[2]).unwrap();
        let c = mock_scores(&MockBackendConfig { seed: 1, ..Default::default() }, &[1, 1], &[2]).unwrap();
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn scripted_lookup_and_miss() {
        let h = prompt_hash(&[1, 2]);
        let b = MockBackend::scripted(vec![ScriptEntry {
            prompt_hash: h,
            candidate: 7,
            logit: 2.0,
        }])
        .unwrap();
        assert_eq!(b.next_token_scores(&[1, 2], &[7]).unwrap(), vec![2.0]);
        let err = b.next_token_scores(&[1, 2], &[9]).unwrap_err();
        assert!(matches!(err, BackendError::ScriptMiss { candidate: 9, prompt_hash } if prompt_hash == h));
        assert!(err.to_string().contains("candidate 9"));
        assert_eq!(b.calls(), 2);
    }

    #[test]
    fn duplicate_script_rejected() {
        let e = ScriptEntry {
            prompt_hash: 1,
            candidate: 1,
            logit: 0.0,
        };
        assert!(MockBackend::scripted(vec![e.clone(), e]).is_err());
    }
}

//! Byte-level BPE compatible with the GPT-2 `vocab.json` + `merges.txt` pair.

use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use fancy_regex::Regex;

use super::{TokenId, Tokenizer, TokenizerError};

/// Contraction / word / number / punctuation / whitespace split used by the
/// GPT-2 tokenizer family.
pub const GPT2_PRETOKENIZE_PATTERN: &str =
    r"'s|'t|'re|'ve|'m|'ll|'d| ?\p{L}+| ?\p{N}+| ?[^\s\p{L}\p{N}]+|\s+(?!\S)|\s+";

/// Bytes to printable surrogate characters. Printable Latin-1 bytes map to
/// themselves; the rest are shifted to U+0100 and up in byte order.
pub fn byte_encoder() -> &'static [char; 256] {
    static TABLE: OnceLock<[char; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let keep = |b: u32| (0x21..=0x7e).contains(&b) || (0xa1..=0xac).contains(&b) || (0xae..=0xff).contains(&b);
        let mut table = ['\0'; 256];
        let mut shifted = 0u32;
        for b in 0..256u32 {
            let cp = if keep(b) {
                b
            } else {
                shifted += 1;
                255 + shifted
            };
            table[b as usize] = char::from_u32(cp).expect("valid code point");
        }
        table
    })
}

pub fn byte_decoder() -> &'static HashMap<char, u8> {
    static TABLE: OnceLock<HashMap<char, u8>> = OnceLock::new();
    TABLE.get_or_init(|| {
        byte_encoder()
            .iter()
            .enumerate()
            .map(|(b, &c)| (c, b as u8))
            .collect()
    })
}

fn pretokenizer() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(GPT2_PRETOKENIZE_PATTERN).expect("pattern compiles"))
}

/// Split `text` into pre-tokens. The pieces always concatenate back to `text`.
pub(crate) fn pretokenize(text: &str) -> Vec<&str> {
    let mut pieces = Vec::new();
    let mut last = 0;
    for m in pretokenizer().find_iter(text) {
        let Ok(m) = m else { break };
        if m.start() > last {
            pieces.push(&text[last..m.start()]);
        }
        pieces.push(m.as_str());
        last = m.end();
    }
    if last < text.len() {
        pieces.push(&text[last..]);
    }
    pieces
}

#[derive(Debug, Clone)]
pub struct BpeModel {
    vocab: HashMap<String, TokenId>,
    tokens: HashMap<TokenId, String>,
    merges: Vec<(String, String)>,
    /// (left, right) -> (rank, merged id)
    merge_table: HashMap<(TokenId, TokenId), (usize, TokenId)>,
    byte_ids: [Option<TokenId>; 256],
    vocab_size: usize,
    eos_id: Option<TokenId>,
}

impl BpeModel {
    /// Build from an in-memory vocabulary and ordered merge list (rank = index).
    pub fn from_parts(
        vocab: HashMap<String, TokenId>,
        merges: Vec<(String, String)>,
    ) -> Result<Self, TokenizerError> {
        let mut tokens = HashMap::with_capacity(vocab.len());
        for (tok, &id) in &vocab {
            if let Some(prev) = tokens.insert(id, tok.clone()) {
                let (a, b) = if prev < *tok { (prev, tok.clone()) } else { (tok.clone(), prev) };
                return Err(TokenizerError::Format(format!(
                    "duplicate vocab id {id} for {a:?} and {b:?}"
                )));
            }
        }
        let mut merge_table = HashMap::with_capacity(merges.len());
        for (rank, (left, right)) in merges.iter().enumerate() {
            let merged = format!("{left}{right}");
            let ids = (vocab.get(left), vocab.get(right), vocab.get(&merged));
            let (Some(&l), Some(&r), Some(&m)) = ids else {
                return Err(TokenizerError::Format(format!(
                    "merge '{left} {right}' has no vocab entry"
                )));
            };
            merge_table.entry((l, r)).or_insert((rank, m));
        }
        let enc = byte_encoder();
        let mut byte_ids = [None; 256];
        for (b, slot) in byte_ids.iter_mut().enumerate() {
            *slot = vocab.get(enc[b].to_string().as_str()).copied();
        }
        let vocab_size = vocab.values().map(|&id| id as usize + 1).max().unwrap_or(0);
        let eos_id = vocab.get("<|endoftext|>").copied();
        Ok(Self {
            vocab,
            tokens,
            merges,
            merge_table,
            byte_ids,
            vocab_size,
            eos_id,
        })
    }

    /// All 256 single-byte tokens (id = byte value) plus the given merges,
    /// whose results get consecutive ids from 256 on.
    pub fn byte_level(merges: &[(&str, &str)]) -> Result<Self, TokenizerError> {
        let enc = byte_encoder();
        let mut vocab: HashMap<String, TokenId> =
            (0..256).map(|b| (enc[b].to_string(), b as TokenId)).collect();
        let mut owned = Vec::with_capacity(merges.len());
        for (l, r) in merges {
            let merged = format!("{l}{r}");
            let next = vocab.len() as TokenId;
            vocab.entry(merged).or_insert(next);
            owned.push((l.to_string(), r.to_string()));
        }
        Self::from_parts(vocab, owned)
    }

    pub fn vocab(&self) -> &HashMap<String, TokenId> {
        &self.vocab
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn token_id(&self, token: &str) -> Option<TokenId> {
        self.vocab.get(token).copied()
    }

    /// True when every byte value has its own token, making `encode` total.
    pub fn covers_all_bytes(&self) -> bool {
        self.byte_ids.iter().all(Option::is_some)
    }

    /// Apply merges to one pre-token: repeatedly merge every occurrence of the
    /// lowest-ranked adjacent pair until none applies.
    fn encode_piece(&self, piece: &str, out: &mut Vec<TokenId>) -> Result<(), TokenizerError> {
        let mut ids = piece
            .bytes()
            .map(|b| self.byte_ids[b as usize].ok_or(TokenizerError::UnknownByte(b)))
            .collect::<Result<Vec<_>, _>>()?;
        while ids.len() > 1 {
            let best = ids
                .windows(2)
                .filter_map(|w| self.merge_table.get(&(w[0], w[1])).map(|&(rank, m)| (rank, w[0], w[1], m)))
                .min_by_key(|&(rank, ..)| rank);
            let Some((_, left, right, merged)) = best else { break };
            let mut next = Vec::with_capacity(ids.len());
            let mut i = 0;
            while i < ids.len() {
                if i + 1 < ids.len() && ids[i] == left && ids[i + 1] == right {
                    next.push(merged);
                    i += 2;
                } else {
                    next.push(ids[i]);
                    i += 1;
                }
            }
            ids = next;
        }
        out.extend(ids);
        Ok(())
    }
}

impl Tokenizer for BpeModel {
    fn encode(&self, text: &str) -> Result<Vec<TokenId>, TokenizerError> {
        let mut out = Vec::with_capacity(text.len() / 3 + 1);
        for piece in pretokenize(text) {
            self.encode_piece(piece, &mut out)?;
        }
        Ok(out)
    }

    fn decode(&self, ids: &[TokenId]) -> Result<String, TokenizerError> {
        let dec = byte_decoder();
        let mut bytes = Vec::with_capacity(ids.len() * 2);
        for &id in ids {
            let tok = self.tokens.get(&id).ok_or(TokenizerError::UnknownId(id))?;
            for c in tok.chars() {
                match dec.get(&c) {
                    Some(&b) => bytes.push(b),
                    // tokens outside the byte alphabet (e.g. specials) decode as text
                    None => bytes.extend_from_slice(c.encode_utf8(&mut [0; 4]).as_bytes()),
                }
            }
        }
        String::from_utf8(bytes).map_err(|_| TokenizerError::InvalidUtf8)
    }

    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn token_text(&self, id: TokenId) -> Option<String> {
        self.tokens.get(&id).cloned()
    }

    fn eos_id(&self) -> Option<TokenId> {
        self.eos_id
    }
}

/// Load a `vocab.json` (token -> id) and `merges.txt` (one `left right` pair
/// per line, optional leading `#` header) pair.
pub fn load_bpe(
    vocab_path: impl AsRef<Path>,
    merges_path: impl AsRef<Path>,
) -> Result<BpeModel, TokenizerError> {
    let read = |p: &Path| {
        std::fs::read_to_string(p).map_err(|source| TokenizerError::Io {
            path: p.to_path_buf(),
            source,
        })
    };
    let vocab_text = read(vocab_path.as_ref())?;
    let vocab: HashMap<String, TokenId> = serde_json::from_str(&vocab_text)
        .map_err(|e| TokenizerError::Format(format!("vocab: {e}")))?;
    let merges = parse_merges(&read(merges_path.as_ref())?)?;
    BpeModel::from_parts(vocab, merges)
}

fn parse_merges(text: &str) -> Result<Vec<(String, String)>, TokenizerError> {
    let mut merges = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if (i == 0 && line.starts_with('#')) || line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(' ');
        match (parts.next(), parts.next(), parts.next()) {
            (Some(l), Some(r), None) if !l.is_empty() && !r.is_empty() => {
                merges.push((l.to_string(), r.to_string()))
            }
            _ => {
                return Err(TokenizerError::Format(format!(
                    "merges line {}: expected two space-separated symbols, got {line:?}",
                    i + 1
                )))
            }
        }
    }
    Ok(merges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy() -> BpeModel {
        let vocab = [("a", 0), ("b", 1), ("ab", 2)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        BpeModel::from_parts(vocab, vec![("a".into(), "b".into())]).unwrap()
    }

    #[test]
    fn byte_encoder_is_bijection() {
        let enc = byte_encoder();
        let mut seen: Vec<char> = enc.to_vec();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 256);
        assert_eq!(enc[b' ' as usize], 'Ġ');
        assert_eq!(enc[b'\n' as usize], 'Ċ');
        assert_eq!(enc[b'a' as usize], 'a');
        for (b, c) in enc.iter().enumerate() {
            assert_eq!(byte_decoder()[c] as usize, b);
        }
    }

    #[test]
    fn toy_model_merges() {
        let m = toy();
        assert_eq!(m.encode("ab").unwrap(), vec![2]);
        assert_eq!(m.encode("ba").unwrap(), vec![1, 0]);
        assert_eq!(m.encode("abab").unwrap(), vec![2, 2]);
        assert_eq!(m.vocab_size(), 3);
        assert!(!m.covers_all_bytes());
        assert!(matches!(m.encode("c"), Err(TokenizerError::UnknownByte(b'c'))));
    }

    #[test]
    fn missing_merge_entry_is_error() {
        let vocab = [("a", 0), ("c", 1)].into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        let err = BpeModel::from_parts(vocab, vec![("a".into(), "c".into())]).unwrap_err();
        assert_eq!(err.to_string(), "format error: merge 'a c' has no vocab entry");
    }

    #[test]
    fn duplicate_ids_are_error() {
        let vocab = [("a", 0), ("b", 0)].into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        let err = BpeModel::from_parts(vocab, vec![]).unwrap_err();
        assert!(err.to_string().contains("duplicate vocab id 0"), "{err}");
    }

    #[test]
    fn load_from_files() {
        let dir = tempfile::tempdir().unwrap();
        let v = dir.path().join("vocab.json");
        let m = dir.path().join("merges.txt");
        std::fs::write(&v, r#"{"a":0,"b":1,"ab":2}"#).unwrap();
        std::fs::write(&m, "#version: 0.2\na b\n").unwrap();
        let model = load_bpe(&v, &m).unwrap();
        assert_eq!(model.encode("ab").unwrap(), vec![2]);
        assert_eq!(model.merges().len(), 1);

        std::fs::write(&m, "a b c\n").unwrap();
        assert!(matches!(load_bpe(&v, &m), Err(TokenizerError::Format(_))));
        std::fs::write(&m, "a c\n").unwrap();
        assert!(load_bpe(&v, &m).unwrap_err().to_string().contains("'a c'"));
    }

    #[test]
    fn pretokenizer_splits_like_gpt2() {
        assert_eq!(
            pretokenize("Hello world's  end!! 123"),
            vec!["Hello", " world", "'s", " ", " end", "!!", " 123"]
        );
        assert_eq!(pretokenize("a\r\nb"), vec!["a", "\r", "\n", "b"]);
        assert!(pretokenize("").is_empty());
    }

    #[test]
    fn byte_level_round_trip_examples() {
        let m = BpeModel::byte_level(&[("Ġ", "d"), ("Ġd", "e")]).unwrap();
        for t in ["de kat 🐈", "e\u{301}\r\n\ttab", "", "  leading", "中文 text"] {
            let ids = m.encode(t).unwrap();
            assert!(ids.iter().all(|&i| (i as usize) < m.vocab_size()));
            assert_eq!(m.decode(&ids).unwrap(), t);
        }
        assert_eq!(m.encode(" de").unwrap(), vec![257]);
    }

    proptest! {
        #[test]
        fn round_trip_any_unicode(text in "\\PC*") {
            let m = BpeModel::byte_level(&[("Ġ", "t"), ("e", "n"), ("Ġt", "en")]).unwrap();
            let ids = m.encode(&text).unwrap();
            prop_assert_eq!(m.decode(&ids).unwrap(), text.clone());
            prop_assert_eq!(ids, m.encode(&text).unwrap());
        }
    }
}

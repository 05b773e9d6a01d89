use std::collections::HashMap;
use std::sync::RwLock;

use super::{TokenId, Tokenizer, TokenizerError};

/// Reference tokenizer: every whitespace-delimited word is one token and the
/// vocabulary grows on demand. Fertility is exactly 1 by construction.
///
/// Decoding joins words with a single space, so runs of whitespace are not
/// preserved.
#[derive(Debug, Default)]
pub struct WhitespaceTokenizer {
    vocab: RwLock<Vocab>,
}

#[derive(Debug, Default)]
struct Vocab {
    ids: HashMap<String, TokenId>,
    words: Vec<String>,
}

impl WhitespaceTokenizer {
    fn id_for(&self, word: &str) -> TokenId {
        if let Some(&id) = self.vocab.read().expect("vocab lock").ids.get(word) {
            return id;
        }
        let mut v = self.vocab.write().expect("vocab lock");
        if let Some(&id) = v.ids.get(word) {
            return id;
        }
        let id = v.words.len() as TokenId;
        v.words.push(word.to_string());
        v.ids.insert(word.to_string(), id);
        id
    }
}

impl Tokenizer for WhitespaceTokenizer {
    fn encode(&self, text: &str) -> Result<Vec<TokenId>, TokenizerError> {
        Ok(text.split_whitespace().map(|w| self.id_for(w)).collect())
    }

    fn decode(&self, ids: &[TokenId]) -> Result<String, TokenizerError> {
        let v = self.vocab.read().expect("vocab lock");
        let words = ids
            .iter()
            .map(|&id| {
                v.words
                    .get(id as usize)
                    .map(String::as_str)
                    .ok_or(TokenizerError::UnknownId(id))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(words.join(" "))
    }

    fn vocab_size(&self) -> usize {
        self.vocab.read().expect("vocab lock").words.len()
    }

    fn token_text(&self, id: TokenId) -> Option<String> {
        self.vocab.read().expect("vocab lock").words.get(id as usize).cloned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_words() {
        let t = WhitespaceTokenizer::default();
        assert_eq!(t.encode("de kat slaapt").unwrap().len(), 3);
        assert!(t.encode("").unwrap().is_empty());
        let ids = t.encode("de kat de").unwrap();
        assert_eq!(ids[0], ids[2]);
        assert_eq!(t.vocab_size(), 3);
        assert_eq!(t.decode(&ids).unwrap(), "de kat de");
        assert!(ids.iter().all(|&i| (i as usize) < t.vocab_size()));
        assert!(matches!(t.decode(&[99]), Err(TokenizerError::UnknownId(99))));
    }
}

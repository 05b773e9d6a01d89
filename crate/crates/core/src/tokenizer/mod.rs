//! Tokenizer abstraction plus the two concrete implementations the toolkit
//! ships: a byte-level BPE model and a whitespace reference tokenizer.

mod bpe;
mod whitespace;

use std::path::PathBuf;

use thiserror::Error;

pub use bpe::{byte_decoder, byte_encoder, load_bpe, BpeModel, GPT2_PRETOKENIZE_PATTERN};
pub use whitespace::WhitespaceTokenizer;

pub type TokenId = u32;

#[derive(Debug, Error)]
pub enum TokenizerError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("byte 0x{0:02x} has no vocab entry")]
    UnknownByte(u8),
    #[error("token id {0} is not in the vocabulary")]
    UnknownId(TokenId),
    #[error("decoded bytes are not valid UTF-8")]
    InvalidUtf8,
}

/// Text to token-id encoding. Implementations are immutable once built, or
/// synchronise internally, so they can be shared across threads.
pub trait Tokenizer: Send + Sync {
    /// Encode without adding any special tokens.
    fn encode(&self, text: &str) -> Result<Vec<TokenId>, TokenizerError>;
    fn decode(&self, ids: &[TokenId]) -> Result<String, TokenizerError>;
    /// Exclusive upper bound on ids returned by `encode`.
    fn vocab_size(&self) -> usize;
    fn token_text(&self, id: TokenId) -> Option<String>;
    fn eos_id(&self) -> Option<TokenId> {
        None
    }
}

/// Build a whitespace tokenizer (one token per whitespace-delimited word).
pub fn whitespace_tokenizer() -> WhitespaceTokenizer {
    WhitespaceTokenizer::default()
}

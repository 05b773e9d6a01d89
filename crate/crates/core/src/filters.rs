//! Two-stage document rejection chain.
//!
//! Stage 1 (web-crawl sources only): copyright phrase, URL substring, bad word,
//! non-Latin script. Stage 2 (all sources): punctuation, uppercase and digit
//! ratios, and average whitespace-token length. The chain stops at the first
//! stage that fires; that stage's tag becomes the verdict reason.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_script::{Script, UnicodeScript};

use crate::ingest::Document;

/// Bad-word list shipped with the crate, one word per line.
pub const DEFAULT_BAD_WORDS: &str = include_str!("../data/bad_words.txt");

pub fn default_bad_words() -> BTreeSet<String> {
    DEFAULT_BAD_WORDS
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("invalid filter config: {0}")]
    InvalidConfig(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Parse {
        path: std::path::PathBuf,
        message: String,
    },
}

/// Why a document was rejected. Declaration order is chain order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    CopyrightPhrase,
    WikipediaUrl,
    BadWord,
    NonLatin,
    PunctRatio,
    UpperRatio,
    DigitRatio,
    AvgTokenLen,
}

impl Reason {
    pub const ALL: [Reason; 8] = [
        Reason::CopyrightPhrase,
        Reason::WikipediaUrl,
        Reason::BadWord,
        Reason::NonLatin,
        Reason::PunctRatio,
        Reason::UpperRatio,
        Reason::DigitRatio,
        Reason::AvgTokenLen,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Reason::CopyrightPhrase => "copyright_phrase",
            Reason::WikipediaUrl => "wikipedia_url",
            Reason::BadWord => "bad_word",
            Reason::NonLatin => "non_latin",
            Reason::PunctRatio => "punct_ratio",
            Reason::UpperRatio => "upper_ratio",
            Reason::DigitRatio => "digit_ratio",
            Reason::AvgTokenLen => "avg_token_len",
        }
    }

    /// 1 for the web-only stage, 2 for the all-sources stage.
    pub fn stage(self) -> u8 {
        match self {
            Reason::CopyrightPhrase | Reason::WikipediaUrl | Reason::BadWord | Reason::NonLatin => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub keep: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<Reason>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl FilterVerdict {
    pub fn keep() -> Self {
        Self {
            keep: true,
            reason: None,
            detail: None,
        }
    }

    pub fn reject(reason: Reason, detail: impl Into<String>) -> Self {
        Self {
            keep: false,
            reason: Some(reason),
            detail: Some(detail.into()),
        }
    }
}

/// Which stage groups to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageSelection {
    One,
    Two,
    Both,
}

impl std::str::FromStr for StageSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "1" => Ok(Self::One),
            "2" => Ok(Self::Two),
            "both" => Ok(Self::Both),
            other => Err(format!("unknown stage {other:?}, expected 1, 2 or both")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub copyright_phrases: Vec<String>,
    pub url_substrings: Vec<String>,
    pub bad_words: BTreeSet<String>,
    pub punct_ratio_max: f64,
    pub upper_ratio_max: f64,
    pub digit_ratio_max: f64,
    pub avg_token_len_min: f64,
    pub avg_token_len_max: f64,
    pub apply_stage1: bool,
    pub apply_stage2: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            copyright_phrases: vec!["rechten voorbehouden".into(), "rights reserved".into()],
            url_substrings: vec!["wikipedia.org".into()],
            bad_words: default_bad_words(),
            punct_ratio_max: 0.2,
            upper_ratio_max: 0.22,
            digit_ratio_max: 0.16,
            avg_token_len_min: 2.0,
            avg_token_len_max: 20.0,
            apply_stage1: true,
            apply_stage2: true,
        }
    }
}

impl FilterConfig {
    /// Load from a `.toml` or `.json` file; missing keys take their defaults.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, FilterError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| FilterError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let parse_err = |message: String| FilterError::Parse {
            path: path.to_path_buf(),
            message,
        };
        let cfg: FilterConfig = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?,
            _ => toml::from_str(&text).map_err(|e| parse_err(e.to_string()))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_stages(mut self, stages: StageSelection) -> Self {
        self.apply_stage1 = matches!(stages, StageSelection::One | StageSelection::Both);
        self.apply_stage2 = matches!(stages, StageSelection::Two | StageSelection::Both);
        self
    }

    pub fn validate(&self) -> Result<(), FilterError> {
        let bad = |m: String| Err(FilterError::InvalidConfig(m));
        for (name, v) in [
            ("punct_ratio_max", self.punct_ratio_max),
            ("upper_ratio_max", self.upper_ratio_max),
            ("digit_ratio_max", self.digit_ratio_max),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("{name} = {v} must lie in (0, 1)"));
            }
        }
        if self.avg_token_len_min.partial_cmp(&self.avg_token_len_max) != Some(std::cmp::Ordering::Less) {
            return bad(format!(
                "avg_token_len_min {} must be below avg_token_len_max {}",
                self.avg_token_len_min, self.avg_token_len_max
            ));
        }
        for w in &self.bad_words {
            if w.is_empty() || !w.chars().all(is_letter) || w.to_lowercase() != *w {
                return bad(format!("bad word {w:?} must be a non-empty lowercase letter sequence"));
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form. Bad words are a sorted set,
    /// so equal configurations always hash equally.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("filter config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

/// Character-class statistics over Unicode scalar values.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct CharRatios {
    pub punct: f64,
    pub upper: f64,
    pub digit: f64,
    pub avg_token_len: f64,
    pub non_ws_chars: usize,
    pub tokens: usize,
}

fn is_punct(c: char) -> bool {
    use GeneralCategory::*;
    matches!(
        get_general_category(c),
        ConnectorPunctuation
            | DashPunctuation
            | OpenPunctuation
            | ClosePunctuation
            | InitialPunctuation
            | FinalPunctuation
            | OtherPunctuation
    )
}

fn is_letter(c: char) -> bool {
    use GeneralCategory::*;
    matches!(
        get_general_category(c),
        UppercaseLetter | LowercaseLetter | TitlecaseLetter | ModifierLetter | OtherLetter
    )
}

pub fn char_ratios(text: &str) -> CharRatios {
    let (mut non_ws, mut punct, mut upper, mut digit) = (0usize, 0usize, 0usize, 0usize);
    for c in text.chars().filter(|c| !c.is_whitespace()) {
        non_ws += 1;
        match get_general_category(c) {
            GeneralCategory::UppercaseLetter => upper += 1,
            GeneralCategory::DecimalNumber => digit += 1,
            _ if is_punct(c) => punct += 1,
            _ => {}
        }
    }
    let tokens = text.split_whitespace().count();
    if non_ws == 0 {
        return CharRatios {
            tokens,
            ..CharRatios::default()
        };
    }
    let n = non_ws as f64;
    CharRatios {
        punct: punct as f64 / n,
        upper: upper as f64 / n,
        digit: digit as f64 / n,
        avg_token_len: n / tokens as f64,
        non_ws_chars: non_ws,
        tokens,
    }
}

/// First character whose Script is neither Latin, Common nor Inherited.
pub fn is_non_latin(text: &str) -> Option<(char, Script)> {
    text.chars().find_map(|c| match c.script() {
        Script::Latin | Script::Common | Script::Inherited => None,
        s => Some((c, s)),
    })
}

/// First bad word occurring as a whole word, case-insensitively.
///
/// Words are maximal runs of letters (general category L*); anything else is
/// a boundary, so "zak" never matches inside "zakelijk".
pub fn contains_bad_word<'a>(text: &str, bad_words: &'a BTreeSet<String>) -> Option<&'a str> {
    if bad_words.is_empty() {
        return None;
    }
    let mut word = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if is_letter(c) {
            word.extend(c.to_lowercase());
        }
        let at_end = !is_letter(c) || chars.peek().is_none_or(|&n| !is_letter(n));
        if at_end && !word.is_empty() {
            if let Some(hit) = bad_words.get(word.as_str()) {
                return Some(hit.as_str());
            }
            word.clear();
        }
    }
    None
}

fn find_ci<'a>(haystack_lower: &str, needles: &'a [String]) -> Option<&'a str> {
    needles
        .iter()
        .find(|n| !n.is_empty() && haystack_lower.contains(n.to_lowercase().as_str()))
        .map(String::as_str)
}

/// Run the chain on one document. `cfg` is assumed validated.
pub fn apply_chain(doc: &Document, cfg: &FilterConfig) -> FilterVerdict {
    if cfg.apply_stage1 {
        let lower = doc.text.to_lowercase();
        if let Some(p) = find_ci(&lower, &cfg.copyright_phrases) {
            return FilterVerdict::reject(Reason::CopyrightPhrase, p);
        }
        if let Some(url) = &doc.url {
            if let Some(s) = find_ci(&url.to_lowercase(), &cfg.url_substrings) {
                return FilterVerdict::reject(Reason::WikipediaUrl, s);
            }
        }
        if let Some(w) = contains_bad_word(&doc.text, &cfg.bad_words) {
            return FilterVerdict::reject(Reason::BadWord, w);
        }
        if let Some((c, script)) = is_non_latin(&doc.text) {
            return FilterVerdict::reject(
                Reason::NonLatin,
                format!("{c} (U+{:04X}, {})", u32::from(c), script.full_name()),
            );
        }
    }
    if cfg.apply_stage2 {
        let r = char_ratios(&doc.text);
        let checks = [
            (Reason::PunctRatio, r.punct, cfg.punct_ratio_max),
            (Reason::UpperRatio, r.upper, cfg.upper_ratio_max),
            (Reason::DigitRatio, r.digit, cfg.digit_ratio_max),
        ];
        for (reason, value, max) in checks {
            if value > max {
                return FilterVerdict::reject(reason, format!("{value:.4}>{max}"));
            }
        }
        let len = r.avg_token_len;
        if len < cfg.avg_token_len_min {
            return FilterVerdict::reject(
                Reason::AvgTokenLen,
                format!("{len:.4}<{}", cfg.avg_token_len_min),
            );
        }
        if len > cfg.avg_token_len_max {
            return FilterVerdict::reject(
                Reason::AvgTokenLen,
                format!("{len:.4}>{}", cfg.avg_token_len_max),
            );
        }
    }
    FilterVerdict::keep()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(text: &str) -> Document {
        Document::new("d", text)
    }

    fn words(ws: &[&str]) -> BTreeSet<String> {
        ws.iter().map(|s| s.to_string()).collect()
    }

    /// Independent category oracle built on regex Unicode classes.
    fn regex_counts(text: &str) -> (usize, usize, usize, usize) {
        let p = regex::Regex::new(r"\p{P}").unwrap();
        let u = regex::Regex::new(r"\p{Lu}").unwrap();
        let d = regex::Regex::new(r"\p{Nd}").unwrap();
        let ws = regex::Regex::new(r"\s").unwrap();
        let mut buf = [0u8; 4];
        let mut counts = (0, 0, 0, 0);
        for c in text.chars() {
            let s = c.encode_utf8(&mut buf);
            if ws.is_match(s) {
                continue;
            }
            counts.0 += 1;
            counts.1 += p.is_match(s) as usize;
            counts.2 += u.is_match(s) as usize;
            counts.3 += d.is_match(s) as usize;
        }
        counts
    }

    #[test]
    fn ratios_simple() {
        let r = char_ratios("abc def");
        assert_eq!((r.punct, r.upper, r.digit), (0.0, 0.0, 0.0));
        assert_eq!(r.tokens, 2);
        assert_eq!(r.avg_token_len, 3.0);
    }

    #[test]
    fn ratios_mixed_classes() {
        let r = char_ratios("A1.");
        let (n, p, u, d) = regex_counts("A1.");
        assert_eq!((n, p, u, d), (3, 1, 1, 1));
        assert_eq!(r.non_ws_chars, 3);
        assert_eq!(r.upper, 1.0 / 3.0);
        assert_eq!(r.digit, 1.0 / 3.0);
        assert_eq!(r.punct, 1.0 / 3.0);
    }

    #[test]
    fn ratios_empty() {
        assert_eq!(char_ratios(""), CharRatios::default());
        let r = char_ratios(" \n\t ");
        assert_eq!((r.punct, r.avg_token_len, r.non_ws_chars), (0.0, 0.0, 0));
    }

    #[test]
    fn ratios_count_scalars_not_bytes() {
        let r = char_ratios("ÉÉ éé");
        assert_eq!(r.non_ws_chars, 4);
        assert_eq!(r.upper, 0.5);
        assert_eq!(r.avg_token_len, 2.0);
    }

    proptest! {
        #[test]
        fn ratios_match_regex_oracle(text in "\\PC{0,40}") {
            let r = char_ratios(&text);
            let (n, p, u, d) = regex_counts(&text);
            prop_assert_eq!(r.non_ws_chars, n);
            if n > 0 {
                prop_assert_eq!(r.punct, p as f64 / n as f64);
                prop_assert_eq!(r.upper, u as f64 / n as f64);
                prop_assert_eq!(r.digit, d as f64 / n as f64);
            }
        }
    }

    #[test]
    fn non_latin_detection() {
        assert_eq!(is_non_latin("café, №12"), None);
        let (c, s) = is_non_latin("café Алло").unwrap();
        assert_eq!(c, 'А');
        assert_eq!(s, Script::Cyrillic);
        assert_eq!(is_non_latin("plain ASCII text 123 !?"), None);
        assert_eq!(is_non_latin("中文").map(|x| x.1), Some(Script::Han));
        // combining acute accent is Inherited
        assert_eq!(is_non_latin("cafe\u{301}"), None);
    }

    #[test]
    fn bad_word_whole_word() {
        let set = words(&["zak", "fuck"]);
        assert_eq!(contains_bad_word("die zak daar", &set), Some("zak"));
        assert_eq!(contains_bad_word("zakelijk gesprek", &set), None);
        assert_eq!(contains_bad_word("Fuck!", &set), Some("fuck"));
        assert_eq!(contains_bad_word("een ZAK.", &set), Some("zak"));
        assert_eq!(contains_bad_word("x-zak-y", &set), Some("zak"));
        assert_eq!(contains_bad_word("zak2", &set), Some("zak"));
        assert_eq!(contains_bad_word("", &set), None);
    }

    #[test]
    fn bad_word_first_in_document_order() {
        let set = words(&["aaa", "zzz"]);
        assert_eq!(contains_bad_word("zzz en aaa", &set), Some("zzz"));
    }

    /// Oracle: split on non-letters, lowercase, look up.
    fn split_oracle<'a>(text: &str, set: &'a BTreeSet<String>) -> Option<&'a str> {
        text.split(|c: char| !is_letter(c))
            .filter(|w| !w.is_empty())
            .find_map(|w| set.get(&w.to_lowercase()).map(String::as_str))
    }

    proptest! {
        #[test]
        fn bad_word_matches_split_oracle(text in "[a-zA-Z .,!-]{0,30}") {
            let set = words(&["ab", "zak", "b"]);
            prop_assert_eq!(contains_bad_word(&text, &set), split_oracle(&text, &set));
        }
    }

    #[test]
    fn chain_examples() {
        let cfg = FilterConfig::default();
        let v = apply_chain(&doc("Alle rechten voorbehouden."), &cfg);
        assert_eq!(v.reason, Some(Reason::CopyrightPhrase));
        assert!(!v.keep);

        // 20 non-whitespace chars, 5 of them punctuation
        let v = apply_chain(&doc("abc, def, ghi, jkl, mno."), &cfg);
        assert_eq!(v.reason, Some(Reason::PunctRatio));
        assert_eq!(v.detail.as_deref(), Some("0.2500>0.2"));

        let v = apply_chain(&doc("De kat slaapt op de mat."), &cfg);
        assert_eq!(v, FilterVerdict::keep());
    }

    #[test]
    fn url_rule() {
        let cfg = FilterConfig::default();
        let d = doc("Een gewone zin hier.").with_url("https://nl.Wikipedia.org/wiki/Kat");
        assert_eq!(apply_chain(&d, &cfg).reason, Some(Reason::WikipediaUrl));
    }

    #[test]
    fn avg_token_len_bounds() {
        let cfg = FilterConfig::default();
        assert_eq!(apply_chain(&doc("a b c d"), &cfg).reason, Some(Reason::AvgTokenLen));
        assert!(apply_chain(&doc("ab cd ef"), &cfg).keep);
        let long = "a".repeat(20);
        assert!(apply_chain(&doc(&long), &cfg).keep);
        let too_long = "a".repeat(21);
        let v = apply_chain(&doc(&too_long), &cfg);
        assert_eq!(v.detail.as_deref(), Some("21.0000>20"));
    }

    #[test]
    fn threshold_equal_is_kept() {
        let cfg = FilterConfig::default();
        // punct 1/5
        assert!(apply_chain(&doc("abcd."), &cfg).keep);
        assert!(!apply_chain(&doc("abc.."), &cfg).keep);
        // upper 11/50 and digit 4/25, split into 5-char words to stay within
        // the token-length bounds
        let words = |s: String| {
            let chars: Vec<char> = s.chars().collect();
            chars.chunks(5).map(|c| c.iter().collect::<String>()).collect::<Vec<_>>().join(" ")
        };
        let upper = words(format!("{}{}", "A".repeat(11), "a".repeat(39)));
        assert!(apply_chain(&doc(&upper), &cfg).keep);
        let upper = words(format!("{}{}", "A".repeat(12), "a".repeat(38)));
        assert_eq!(apply_chain(&doc(&upper), &cfg).reason, Some(Reason::UpperRatio));
        let digit = words(format!("{}{}", "1".repeat(4), "a".repeat(21)));
        assert!(apply_chain(&doc(&digit), &cfg).keep);
        let digit = words(format!("{}{}", "1".repeat(5), "a".repeat(20)));
        assert_eq!(apply_chain(&doc(&digit), &cfg).reason, Some(Reason::DigitRatio));
    }

    #[test]
    fn stage_gating() {
        let text = "Alle rechten voorbehouden!!!!!!";
        let both = FilterConfig::default();
        assert_eq!(apply_chain(&doc(text), &both).reason, Some(Reason::CopyrightPhrase));
        let two = FilterConfig::default().with_stages(StageSelection::Two);
        assert_eq!(apply_chain(&doc(text), &two).reason, Some(Reason::PunctRatio));
        let one = FilterConfig::default().with_stages(StageSelection::One);
        assert!(apply_chain(&doc("a b c"), &one).keep);
    }

    #[test]
    fn config_validation() {
        let mut cfg = FilterConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.punct_ratio_max = 1.0;
        assert!(cfg.validate().is_err());
        let cfg = FilterConfig {
            avg_token_len_min: 30.0,
            ..FilterConfig::default()
        };
        assert!(cfg.validate().is_err());
        let mut cfg = FilterConfig::default();
        cfg.bad_words.insert("Zak".into());
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_loads_partial_toml_and_json() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.toml");
        std::fs::write(&p, "punct_ratio_max = 0.3\napply_stage1 = false\n").unwrap();
        let cfg = FilterConfig::load(&p).unwrap();
        assert_eq!(cfg.punct_ratio_max, 0.3);
        assert!(!cfg.apply_stage1);
        assert_eq!(cfg.bad_words, default_bad_words());

        let p = dir.path().join("f.json");
        std::fs::write(&p, r#"{"bad_words": ["zak"]}"#).unwrap();
        assert_eq!(FilterConfig::load(&p).unwrap().bad_words.len(), 1);

        std::fs::write(&p, r#"{"bogus": 1}"#).unwrap();
        assert!(matches!(FilterConfig::load(&p), Err(FilterError::Parse { .. })));
    }

    #[test]
    fn fingerprint_is_deterministic() {
        let a = FilterConfig::default();
        assert_eq!(a.fingerprint(), FilterConfig::default().fingerprint());
        let b = a.clone().with_stages(StageSelection::One);
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 64);
    }

    proptest! {
        #[test]
        fn reason_is_first_firing_stage(text in "[a-zA-Z0-9 .,!Я]{0,40}", url in proptest::option::of("[a-z.]{0,20}")) {
            let mut d = doc(&text);
            d.url = url;
            let cfg = FilterConfig::default();
            let v = apply_chain(&d, &cfg);
            prop_assert_eq!(v.keep, v.reason.is_none());
            prop_assert_eq!(v.clone(), apply_chain(&d, &cfg));
            if let Some(reason) = v.reason {
                // no earlier stage fires when run alone
                for earlier in Reason::ALL.iter().take_while(|r| **r != reason) {
                    prop_assert!(!single_stage_fires(*earlier, &d, &cfg));
                }
                prop_assert!(single_stage_fires(reason, &d, &cfg));
            }
        }

        #[test]
        fn adding_bad_word_only_rejects_more(text in "[a-z ]{0,30}", extra in "[a-z]{1,4}") {
            let base = FilterConfig::default();
            let mut more = base.clone();
            more.bad_words.insert(extra);
            let d = doc(&text);
            if !apply_chain(&d, &base).keep {
                prop_assert!(!apply_chain(&d, &more).keep);
            }
        }

        #[test]
        fn stage1_off_never_yields_stage1_reason(text in "\\PC{0,40}") {
            let cfg = FilterConfig::default().with_stages(StageSelection::Two);
            if let Some(r) = apply_chain(&doc(&text), &cfg).reason {
                prop_assert_eq!(r.stage(), 2);
            }
        }

        #[test]
        fn punct_boundary(k in 1usize..20) {
            // 5k non-ws chars with exactly k punctuation marks: ratio == 0.2 is kept
            let text = format!("{}{}", "a".repeat(4 * k), ".".repeat(k));
            let cfg = FilterConfig::default().with_stages(StageSelection::Two);
            let mut cfg = cfg;
            cfg.avg_token_len_max = 1000.0;
            prop_assert!(apply_chain(&doc(&text), &cfg).keep);
            let over = format!("{}{}", "a".repeat(4 * k - 1), ".".repeat(k + 1));
            prop_assert_eq!(apply_chain(&doc(&over), &cfg).reason, Some(Reason::PunctRatio));
        }
    }

    fn single_stage_fires(reason: Reason, d: &Document, cfg: &FilterConfig) -> bool {
        let r = char_ratios(&d.text);
        match reason {
            Reason::CopyrightPhrase => find_ci(&d.text.to_lowercase(), &cfg.copyright_phrases).is_some(),
            Reason::WikipediaUrl => d
                .url
                .as_ref()
                .is_some_and(|u| find_ci(&u.to_lowercase(), &cfg.url_substrings).is_some()),
            Reason::BadWord => contains_bad_word(&d.text, &cfg.bad_words).is_some(),
            Reason::NonLatin => is_non_latin(&d.text).is_some(),
            Reason::PunctRatio => r.punct > cfg.punct_ratio_max,
            Reason::UpperRatio => r.upper > cfg.upper_ratio_max,
            Reason::DigitRatio => r.digit > cfg.digit_ratio_max,
            Reason::AvgTokenLen => {
                r.avg_token_len < cfg.avg_token_len_min || r.avg_token_len > cfg.avg_token_len_max
            }
        }
    }
}

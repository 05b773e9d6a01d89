use std::path::Path;

use corpusgate::harness::{render_prompt, BenchmarkConfig, ChatMode};
use serde_json::{Map, Value};

fn golden(name: &str) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn record(bench: &str) -> Map<String, Value> {
    serde_json::from_str(&golden(&format!("{bench}.record.json"))).unwrap()
}

fn configs() -> Vec<(String, BenchmarkConfig)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    BenchmarkConfig::PRESETS
        .iter()
        .map(|b| (b.to_string(), BenchmarkConfig::load(dir.join(format!("{b}.toml"))).unwrap()))
        .collect()
}

#[test]
fn base_prompts_match_golden_files() {
    for (bench, cfg) in configs() {
        let got = render_prompt(&cfg, &record(&bench), ChatMode::None, "g").unwrap();
        assert_eq!(got, golden(&format!("{bench}.base.txt")), "{bench}");
    }
}

#[test]
fn chatml_prompts_match_golden_files() {
    for (bench, cfg) in configs() {
        let got = render_prompt(&cfg, &record(&bench), ChatMode::Chatml, "g").unwrap();
        assert_eq!(got, golden(&format!("{bench}.chatml.txt")), "{bench}");
    }
}

#[test]
fn chat_prompts_have_no_suffix() {
    for (bench, _) in configs() {
        let chat = golden(&format!("{bench}.chatml.txt"));
        let base = golden(&format!("{bench}.base.txt"));
        let body = chat
            .strip_prefix("<|im_start|>user\n")
            .and_then(|s| s.strip_suffix("<|im_end|>\n<|im_start|>assistant\n"))
            .unwrap();
        assert!(base.starts_with(body), "{bench}");
        assert!(!base[body.len()..].is_empty(), "{bench} base suffix");
    }
}

#[test]
fn rendering_is_pure() {
    for (bench, cfg) in configs() {
        let r = record(&bench);
        let a = render_prompt(&cfg, &r, ChatMode::None, "g").unwrap();
        let b = render_prompt(&cfg, &r, ChatMode::None, "g").unwrap();
        assert_eq!(a, b);
    }
}

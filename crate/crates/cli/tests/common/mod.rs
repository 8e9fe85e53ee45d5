#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_solidarity"))
}

/// Writes `solidarity.toml` into `dir` pointing at the fixture corpus and
/// shipped templates; `extra` is appended verbatim.
pub fn write_config(dir: &Path, base_url: &str, extra: &str) -> PathBuf {
    let root = repo_root();
    let text = format!(
        r#"target = "migrant"
seed = 11

[paths]
corpus_dir = "{corpus}"
output_dir = "out"
templates_dir = "{templates}"

[backend]
base_url = "{base_url}"
model_name = "mock-model"
api_key_env = "SOLIDARITY_TEST_UNSET_KEY"
concurrency_limit = 3
max_retries = 2
backoff_base_ms = 1
request_timeout_secs = 10
{extra}
"#,
        corpus = root.join("fixtures/corpus").display(),
        templates = root.join("templates").display(),
    );
    let path = dir.join("solidarity.toml");
    std::fs::write(&path, text).unwrap();
    path
}

pub fn run(config: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .arg("--config")
        .arg(config)
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

pub fn ok(config: &Path, args: &[&str]) -> Output {
    let out = run(config, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// The single JSON error line a failing command writes to stderr.
pub fn error_line(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let last = stderr.lines().last().unwrap_or_default();
    serde_json::from_str(last).unwrap_or_else(|_| panic!("not a JSON error line: {stderr}"))
}

/// Every file under `dir` with its bytes, keyed by relative path.
pub fn snapshot_tree(dir: &Path) -> std::collections::BTreeMap<String, Vec<u8>> {
    let mut out = std::collections::BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().to_string();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

/// Keyword-bearing sentence found by the brute-force token scanner:
/// protocol, speech index, sentence index, hits, left and right context.
pub type OracleInstance = (String, usize, usize, Vec<String>, Vec<String>, Vec<String>);

/// Scans the fixture corpus with the token-scan oracle. Also returns the
/// number of `Frau` tokens dropped as forms of address.
pub fn oracle_instances(target: solidarity_core::taxonomy::TargetGroup) -> (Vec<OracleInstance>, usize) {
    use solidarity_core::corpus::{detect_dialect, parse_protocol};
    use solidarity_core::extraction::{KeywordSet, CONTEXT_WINDOW};
    use solidarity_core::taxonomy::TargetGroup;
    use solidarity_testkit::extraction::{context_bounds, scan_sentence};

    let ks = KeywordSet::builtin(target);
    let kws: Vec<&str> = ks.keywords.iter().map(String::as_str).collect();
    let mut paths: Vec<_> = std::fs::read_dir(repo_root().join("fixtures/corpus"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    paths.sort();
    let mut out = Vec::new();
    let mut dropped = 0;
    for p in paths {
        let b = std::fs::read(&p).unwrap();
        let protocol = parse_protocol(&b, detect_dialect(&b)).unwrap();
        for (si, speech) in protocol.speeches.iter().enumerate() {
            let texts: Vec<&str> = speech.sentences.iter().map(|s| s.text.as_str()).collect();
            for (i, text) in texts.iter().enumerate() {
                let scan = scan_sentence(text, &kws, target == TargetGroup::Woman);
                dropped += scan.frau_dropped;
                if scan.hits.is_empty() {
                    continue;
                }
                let (l, r) = context_bounds(i, texts.len(), CONTEXT_WINDOW);
                let own = |r: std::ops::Range<usize>| texts[r].iter().map(|s| s.to_string()).collect();
                out.push((protocol.source_id.clone(), si, i, scan.hits, own(l), own(r)));
            }
        }
    }
    (out, dropped)
}

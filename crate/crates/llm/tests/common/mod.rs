#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use solidarity_core::corpus::{detect_dialect, parse_protocol};
use solidarity_core::extraction::{build_instances, Instance, KeywordSet};
use solidarity_core::prompt::{PromptFormat, ShotMode, TemplateSet};
use solidarity_core::taxonomy::TargetGroup;
use solidarity_llm::mock::{MockServer, Responder};
use solidarity_llm::{BackendConfig, ChatClient, ResponseCache, RunSpec};

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn fixture_instances(target: TargetGroup) -> Vec<Instance> {
    let dir = repo_root().join("fixtures/corpus");
    let mut paths: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    paths.sort();
    let protocols: Vec<_> = paths
        .iter()
        .map(|p| {
            let b = std::fs::read(p).unwrap();
            parse_protocol(&b, detect_dialect(&b)).unwrap()
        })
        .collect();
    build_instances(&protocols, &KeywordSet::builtin(target))
}

pub fn spec(format: PromptFormat, mode: ShotMode) -> RunSpec {
    let templates = TemplateSet::load_dir(&repo_root().join("templates/migrant"), TargetGroup::Migrant).unwrap();
    RunSpec { run_id: "test-run".into(), format, mode, templates }
}

pub fn config(base_url: String, concurrency: usize) -> BackendConfig {
    BackendConfig {
        base_url,
        model_name: "mock-model".into(),
        api_key_env: "SOLIDARITY_TEST_UNSET_KEY".into(),
        concurrency_limit: concurrency,
        max_retries: 3,
        backoff_base_ms: 1,
        request_timeout_secs: 10,
        ..Default::default()
    }
}

pub async fn server(responder: Responder, delay_ms: u64) -> MockServer {
    MockServer::start(responder, Duration::from_millis(delay_ms)).await.unwrap()
}

pub fn client(server: &MockServer, concurrency: usize, cache: Option<&std::path::Path>) -> Arc<ChatClient> {
    let cache = cache.map(|p| Arc::new(ResponseCache::open(p).unwrap()));
    Arc::new(ChatClient::new(config(server.base_url(), concurrency), cache).unwrap())
}

mod common;

use std::time::Duration;

use common::*;
use solidarity_core::taxonomy::TargetGroup;
use solidarity_llm::mock::{hash_labeler, scripted, MockReply, MockServer};

#[test]
fn missing_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&dir.path().join("absent.toml"), &["ingest"]);
    assert_eq!(out.status.code(), Some(1));
    let e = error_line(&out);
    assert_eq!(e["error"], "config");
    assert_eq!(e["exit_code"], 1);
}

#[test]
fn bad_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "http://127.0.0.1:9/v1", "");
    let out = run(&cfg, &["--format", "three-step", "ingest"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_line(&out)["error"], "usage");
    let out = run(&cfg, &["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn unset_environment_variable_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "${SOLIDARITY_TEST_UNSET_URL}", "");
    let out = run(&cfg, &["ingest"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(error_line(&out)["message"].as_str().unwrap().contains("SOLIDARITY_TEST_UNSET_URL"));
}

#[test]
fn stage_order_is_enforced_as_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "http://127.0.0.1:9/v1", "");
    let out = run(&cfg, &["extract"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"], "data");
}

#[test]
fn extract_matches_token_scan_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "http://127.0.0.1:9/v1", "");
    ok(&cfg, &["ingest"]);
    for target in [TargetGroup::Migrant, TargetGroup::Woman] {
        let out = ok(&cfg, &["--target", target.as_str(), "extract"]);
        let manifest: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(manifest["params"]["instances"], oracle_instances(target).0.len(), "{target}");
        let file = dir.path().join(format!("out/instances/{target}.jsonl"));
        assert_eq!(std::fs::read_to_string(file).unwrap().lines().count(), oracle_instances(target).0.len());
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn dry_run_makes_no_requests() {
    let srv = MockServer::start(hash_labeler(), Duration::ZERO).await.unwrap();
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &srv.base_url(), "[prompt]\nmode = \"few\"\n");
    let cfg2 = cfg.clone();
    tokio::task::spawn_blocking(move || {
        ok(&cfg2, &["ingest"]);
        ok(&cfg2, &["extract"]);
        ok(&cfg2, &["annotate", "--dry-run", "--limit", "4"]);
    })
    .await
    .unwrap();
    assert_eq!(srv.requests(), 0);
    let prompts = dir.path().join("out/prompts/migrant-two-step-few");
    let files = std::fs::read_dir(&prompts).unwrap().count();
    assert_eq!(files, 4 * 3 + 1);
    assert!(!dir.path().join("out/runs").exists());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn auth_failure_exits_with_backend_code() {
    let srv = MockServer::start(scripted(vec![MockReply::Status(401)]), Duration::ZERO).await.unwrap();
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &srv.base_url(), "");
    let out = tokio::task::spawn_blocking(move || {
        ok(&cfg, &["ingest"]);
        ok(&cfg, &["extract"]);
        run(&cfg, &["annotate", "--limit", "3"])
    })
    .await
    .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let e = error_line(&out);
    assert_eq!(e["error"], "backend");
    assert!(e["message"].as_str().unwrap().contains("401"));
    let preds = std::fs::read_to_string(dir.path().join("out/runs/migrant-two-step-zero.jsonl")).unwrap();
    assert_eq!(preds.matches("\"status\":\"backend_error\"").count(), 3);
}

#[test]
fn evaluate_gold_against_itself() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "http://127.0.0.1:9/v1", "");
    let gold = dir.path().join("consensus.jsonl");
    let runs = dir.path().join("out/runs");
    std::fs::create_dir_all(&runs).unwrap();
    let labels = ["solidarity:empathic", "none", "mixed", "anti-solidarity:group-based", "none"];
    let mut g = String::new();
    let mut p = String::new();
    for (i, l) in labels.iter().enumerate() {
        let high = l.split(':').next().unwrap();
        g.push_str(&format!("{{\"instance_id\":\"i{i}\",\"fine_label\":\"{l}\"}}\n"));
        p.push_str(&format!(
            "{{\"instance_id\":\"i{i}\",\"run_id\":\"self\",\"high\":\"{high}\",\"fine\":\"{l}\",\"status\":\"ok\",\"raw_high\":null,\"raw_fine\":null}}\n"
        ));
    }
    std::fs::write(&gold, g).unwrap();
    std::fs::write(runs.join("self.jsonl"), p).unwrap();
    ok(&cfg, &["evaluate", "--run", "self", "--gold", gold.to_str().unwrap()]);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/eval/self.json")).unwrap()).unwrap();
    assert_eq!(report["high"]["report"]["macro_f1"], 1.0);
    assert_eq!(report["fine"]["report"]["macro_f1"], 1.0);
    assert_eq!(report["fine"]["report"]["cohen_kappa"], 1.0);
    assert!(report.get("human").is_none());

    let out = run(&cfg, &["evaluate", "--run", "missing", "--gold", gold.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn export_gold_from_journal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "http://127.0.0.1:9/v1", "");
    let data = dir.path().join("store");
    {
        use solidarity_core::taxonomy::FineLabel;
        let (mut s, _) = solidarity_service::GoldStore::open(&data, 100).unwrap();
        s.annotate("b", "x", FineLabel::Mixed, false).unwrap();
        s.annotate("a", "x", FineLabel::None, false).unwrap();
        s.annotate("a", "y", FineLabel::None, false).unwrap();
    }
    ok(&cfg, &["export-gold", "--data", data.to_str().unwrap()]);
    let consensus = std::fs::read_to_string(dir.path().join("out/gold/consensus.jsonl")).unwrap();
    let ids: Vec<&str> = consensus.lines().map(|l| if l.contains("\"a\"") { "a" } else { "b" }).collect();
    assert_eq!(ids, vec!["a", "b"]);
    let records = std::fs::read_to_string(dir.path().join("out/gold/annotations.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 3);
    // the per-annotator export is a valid gold file for `evaluate`
    assert!(records.lines().all(|l| l.contains("\"annotator_id\"")));
}

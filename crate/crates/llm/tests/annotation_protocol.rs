mod common;

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use common::*;
use solidarity_core::prediction::{parse_predictions_jsonl, Status};
use solidarity_core::prompt::{PromptFormat, ShotMode, Step};
use solidarity_core::taxonomy::{FineLabel, HighLevel, Subtype, TargetGroup};
use solidarity_llm::mock::{guess_step, hash_labeler, scripted, MockReply, MockRequest};
use solidarity_llm::{annotate_instance, dry_run, run_batch};

fn text(s: &str) -> MockReply {
    MockReply::Text(s.into())
}

#[tokio::test]
async fn none_needs_one_call() {
    let srv = server(scripted(vec![text("Nothing here.\nLABEL: none")]), 0).await;
    let c = client(&srv, 1, None);
    let inst = &fixture_instances(TargetGroup::Migrant)[0];
    let p = annotate_instance(inst, &spec(PromptFormat::TwoStep, ShotMode::Zero), &c).await.unwrap();
    assert_eq!((p.status, p.high, p.fine, p.calls), (Status::Ok, Some(HighLevel::None), Some(FineLabel::None), 1));
    assert_eq!(srv.requests(), 1);
}

#[tokio::test]
async fn solidarity_then_subtype() {
    let srv = server(scripted(vec![text("LABEL: solidarity"), text("LABEL: compassionate")]), 0).await;
    let c = client(&srv, 1, None);
    let inst = &fixture_instances(TargetGroup::Migrant)[0];
    let p = annotate_instance(inst, &spec(PromptFormat::TwoStep, ShotMode::Few), &c).await.unwrap();
    assert_eq!(p.fine, Some(FineLabel::Solidarity(Subtype::Compassionate)));
    assert_eq!(p.high, Some(HighLevel::Solidarity));
    assert_eq!((p.calls, p.prompt_hashes.len()), (2, 2));
    assert_eq!(p.raw_fine.as_deref(), Some("LABEL: compassionate"));
    let log = srv.log();
    assert_eq!(guess_step(&log[0].prompt), "high_level");
    assert!(log[1].prompt.contains("expressed solidarity") || log[1].prompt.contains("express solidarity"));
}

#[tokio::test]
async fn garbage_twice_is_unparseable() {
    let srv = server(scripted(vec![text("hmm"), text("still no idea")]), 0).await;
    let c = client(&srv, 1, None);
    let inst = &fixture_instances(TargetGroup::Migrant)[0];
    let p = annotate_instance(inst, &spec(PromptFormat::TwoStep, ShotMode::Zero), &c).await.unwrap();
    assert_eq!((p.status, p.high, p.fine, p.calls), (Status::Unparseable, None, None, 2));
    assert_eq!(p.raw_discarded, vec!["hmm".to_string()]);
    assert_eq!(p.raw_high.as_deref(), Some("still no idea"));
}

#[tokio::test]
async fn reask_recovers() {
    let srv = server(scripted(vec![text("hmm"), text("LABEL: mixed")]), 0).await;
    let c = client(&srv, 1, None);
    let inst = &fixture_instances(TargetGroup::Migrant)[0];
    let p = annotate_instance(inst, &spec(PromptFormat::TwoStep, ShotMode::Zero), &c).await.unwrap();
    assert_eq!((p.status, p.fine, p.calls), (Status::Ok, Some(FineLabel::Mixed), 2));
}

#[tokio::test]
async fn one_step_format() {
    let srv = server(scripted(vec![text("LABEL: anti-solidarity:exchange-based")]), 0).await;
    let c = client(&srv, 1, None);
    let inst = &fixture_instances(TargetGroup::Migrant)[0];
    let p = annotate_instance(inst, &spec(PromptFormat::OneStep, ShotMode::Few), &c).await.unwrap();
    assert_eq!(p.fine, Some(FineLabel::AntiSolidarity(Subtype::ExchangeBased)));
    assert_eq!(p.high, Some(HighLevel::AntiSolidarity));
    assert_eq!(p.calls, 1);
    assert_eq!(guess_step(&srv.log()[0].prompt), "one_step");
}

#[tokio::test]
async fn backend_error_is_recorded() {
    let srv = server(scripted(vec![MockReply::Status(401)]), 0).await;
    let c = client(&srv, 1, None);
    let inst = &fixture_instances(TargetGroup::Migrant)[0];
    let p = annotate_instance(inst, &spec(PromptFormat::TwoStep, ShotMode::Zero), &c).await.unwrap();
    assert_eq!(p.status, Status::BackendError);
    assert!(p.error.unwrap().contains("401"));
}

#[tokio::test]
async fn batch_is_sorted_and_bounded() {
    let srv = server(hash_labeler(), 20).await;
    let c = client(&srv, 4, None);
    let instances: Vec<_> = fixture_instances(TargetGroup::Migrant).into_iter().take(10).collect();
    assert_eq!(instances.len(), 10);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("preds.jsonl");
    let m = run_batch(&instances, &spec(PromptFormat::TwoStep, ShotMode::Zero), c, &out).await.unwrap();
    assert_eq!(m.instances, 10);
    let preds = parse_predictions_jsonl(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let ids: Vec<_> = preds.iter().map(|p| p.instance_id.clone()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
    assert!(srv.max_in_flight() <= 4);
    assert!(preds.iter().all(|p| p.is_consistent()));
    assert!(dir.path().join("preds.manifest.json").exists());
}

#[tokio::test]
async fn rerun_only_retries_failures() {
    // the first three requests fail hard, everything after answers "none"
    let calls = Arc::new(AtomicUsize::new(0));
    let counter = calls.clone();
    let responder = Arc::new(move |_: &MockRequest| {
        if counter.fetch_add(1, Ordering::SeqCst) < 3 {
            MockReply::Status(400)
        } else {
            MockReply::Text("LABEL: none".into())
        }
    });
    let srv = server(responder, 0).await;
    let c = client(&srv, 1, None);
    let instances: Vec<_> = fixture_instances(TargetGroup::Migrant).into_iter().take(10).collect();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.jsonl");
    let s = spec(PromptFormat::TwoStep, ShotMode::Zero);
    let m = run_batch(&instances, &s, c.clone(), &out).await.unwrap();
    assert_eq!(m.counts.get("backend_error"), Some(&3));
    assert_eq!(srv.requests(), 10);
    let m2 = run_batch(&instances, &s, c, &out).await.unwrap();
    assert_eq!(srv.requests(), 13);
    assert_eq!((m2.reused, m2.annotated), (7, 3));
    assert_eq!(m2.counts.get("ok"), Some(&10));
}

#[tokio::test]
async fn empty_batch() {
    let srv = server(hash_labeler(), 0).await;
    let c = client(&srv, 2, None);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.jsonl");
    let m = run_batch(&[], &spec(PromptFormat::OneStep, ShotMode::Zero), c, &out).await.unwrap();
    assert_eq!(m.instances, 0);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("p.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["instances"], 0);
    assert_eq!(srv.requests(), 0);
}

#[tokio::test]
async fn warm_cache_is_byte_identical() {
    let srv = server(hash_labeler(), 0).await;
    let cache = tempfile::tempdir().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let instances = fixture_instances(TargetGroup::Migrant);
    let s = spec(PromptFormat::TwoStep, ShotMode::Few);
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    run_batch(&instances, &s, client(&srv, 4, Some(cache.path())), &a).await.unwrap();
    let cold = srv.requests();
    run_batch(&instances, &s, client(&srv, 4, Some(cache.path())), &b).await.unwrap();
    assert_eq!(srv.requests(), cold);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[tokio::test]
async fn dry_run_renders_every_step() {
    let instances: Vec<_> = fixture_instances(TargetGroup::Migrant).into_iter().take(3).collect();
    let prompts = dry_run(&instances, &spec(PromptFormat::TwoStep, ShotMode::Few)).unwrap();
    assert_eq!(prompts.len(), 9);
    let steps: BTreeSet<Step> = prompts.iter().map(|p| p.step).collect();
    assert_eq!(steps.len(), 3);
    for p in &prompts {
        let inst = instances.iter().find(|i| i.id == p.instance_id).unwrap();
        assert!(p.prompt.contains(&inst.text));
        assert!(!p.prompt.contains(&inst.speaker) || inst.speaker == "Unknown");
        assert!(!p.prompt.contains("{"), "unrendered slot in {:?}", p.step);
    }
}

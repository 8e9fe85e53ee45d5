//! Per-instance annotation protocol and the batch runner.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use solidarity_core::extraction::Instance;
use solidarity_core::prediction::{parse_predictions_jsonl, predictions_to_jsonl, status_counts, Prediction, Status};
use solidarity_core::prompt::{
    plan_steps, render_prompt, PlanStep, PromptError, PromptFormat, ShotMode, Step, TemplateSet,
};
use solidarity_core::taxonomy::{FineLabel, HighLevel};
use thiserror::Error;

use crate::client::ChatClient;
use crate::parse::{parse_step_output, Parsed};

/// Number of times an unparseable step is asked again.
pub const REASKS: u32 = 1;

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub run_id: String,
    pub format: PromptFormat,
    pub mode: ShotMode,
    pub templates: TemplateSet,
}

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("no template for step {0}")]
    MissingTemplate(Step),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> BatchError {
    BatchError::Io { path: path.display().to_string(), message: e.to_string() }
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Steps that can be reached under a format.
pub fn reachable_steps(format: PromptFormat) -> Vec<Step> {
    match format {
        PromptFormat::OneStep => vec![Step::OneStep],
        PromptFormat::TwoStep => vec![Step::HighLevel, Step::SubtypeSolidarity, Step::SubtypeAntisolidarity],
    }
}

fn render(spec: &RunSpec, step: Step, inst: &Instance) -> Result<String, BatchError> {
    let template = spec.templates.get(step).ok_or(BatchError::MissingTemplate(step))?;
    Ok(render_prompt(template, inst, spec.mode, spec.templates.exemplars.as_ref())?)
}

/// Runs the step plan for one instance.
///
/// An unparseable answer is asked once more with the same prompt; a second
/// failure marks the prediction `unparseable`. Backend errors mark it
/// `backend_error`. Raw outputs are kept in every case.
pub async fn annotate_instance(inst: &Instance, spec: &RunSpec, client: &ChatClient) -> Result<Prediction, BatchError> {
    let mut pred = Prediction {
        instance_id: inst.id.clone(),
        run_id: spec.run_id.clone(),
        high: None,
        fine: None,
        status: Status::Ok,
        raw_high: None,
        raw_fine: None,
        raw_discarded: Vec::new(),
        prompt_hashes: Vec::new(),
        calls: 0,
        error: None,
    };
    let mut high: Option<HighLevel> = None;
    while let PlanStep::Run(step) = plan_steps(spec.format, high) {
        let prompt = render(spec, step, inst)?;
        pred.prompt_hashes.push(sha256_hex(&prompt));
        let mut parsed = None;
        let mut raw = String::new();
        for attempt in 0..=REASKS {
            pred.calls += 1;
            match client.complete(&prompt, attempt).await {
                Ok(c) => {
                    if !raw.is_empty() {
                        pred.raw_discarded.push(std::mem::take(&mut raw));
                    }
                    raw = c.text;
                    parsed = parse_step_output(&raw, step);
                    if parsed.is_some() {
                        break;
                    }
                }
                Err(e) => {
                    pred.status = Status::BackendError;
                    pred.error = Some(e.to_string());
                    if !raw.is_empty() {
                        pred.raw_discarded.push(raw);
                    }
                    pred.high = None;
                    pred.fine = None;
                    return Ok(pred);
                }
            }
        }
        match step {
            Step::HighLevel | Step::OneStep => pred.raw_high = Some(raw),
            Step::SubtypeSolidarity | Step::SubtypeAntisolidarity => pred.raw_fine = Some(raw),
        }
        match parsed {
            None => {
                pred.status = Status::Unparseable;
                pred.high = None;
                pred.fine = None;
                return Ok(pred);
            }
            Some(Parsed::High(h)) => {
                high = Some(h);
                pred.high = Some(h);
            }
            Some(Parsed::Fine(f)) => {
                high = Some(f.high());
                pred.high = Some(f.high());
                pred.fine = Some(f);
            }
            Some(Parsed::Subtype(s)) => {
                pred.fine = high.and_then(|h| FineLabel::from_parts(h, Some(s)));
                break;
            }
        }
    }
    if pred.fine.is_none() {
        pred.fine = high.and_then(|h| FineLabel::from_parts(h, None));
    }
    debug_assert!(pred.is_consistent());
    Ok(pred)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub format: PromptFormat,
    pub mode: ShotMode,
    pub target: String,
    pub model_name: String,
    pub base_url: String,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: Option<u32>,
    pub serving_description: Option<String>,
    pub template_hashes: BTreeMap<String, String>,
    pub exemplar_hash: Option<String>,
    pub instances: usize,
    pub counts: BTreeMap<String, usize>,
    /// Predictions carried over from an earlier run with the same id.
    pub reused: usize,
    pub annotated: usize,
}

fn exemplar_hash(templates: &TemplateSet) -> Option<String> {
    templates.exemplars.as_ref().map(|ex| {
        let lines: Vec<String> = ex
            .exemplars
            .iter()
            .map(|e| serde_json::to_string(e).expect("exemplar serializes"))
            .collect();
        sha256_hex(&lines.join("\n"))
    })
}

/// Writes `text` to `path` through a temporary file and rename.
pub fn write_atomic(path: &Path, text: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
    let mut f = std::fs::File::create(&tmp)?;
    f.write_all(text.as_bytes())?;
    f.sync_all()?;
    std::fs::rename(tmp, path)
}

pub fn manifest_path(predictions_path: &Path) -> PathBuf {
    predictions_path.with_extension("manifest.json")
}

/// Annotates `instances` and writes a predictions JSONL file sorted by
/// instance id, plus `<name>.manifest.json` beside it.
///
/// Predictions already present in the output file for the same run id are
/// kept unless they ended in `backend_error`, so an interrupted or partly
/// failed run can be resumed by calling this again.
pub async fn run_batch(
    instances: &[Instance],
    spec: &RunSpec,
    client: Arc<ChatClient>,
    out: &Path,
) -> Result<RunManifest, BatchError> {
    let steps = reachable_steps(spec.format);
    for step in &steps {
        if spec.templates.get(*step).is_none() {
            return Err(BatchError::MissingTemplate(*step));
        }
    }
    if let Some(first) = instances.first() {
        for step in &steps {
            render(spec, *step, first)?;
        }
    }

    let wanted: BTreeSet<&str> = instances.iter().map(|i| i.id.as_str()).collect();
    let mut kept: BTreeMap<String, Prediction> = BTreeMap::new();
    if out.exists() {
        let text = std::fs::read_to_string(out).map_err(|e| io_err(out, e))?;
        for p in parse_predictions_jsonl(&text).map_err(|e| io_err(out, e))? {
            if p.run_id == spec.run_id && p.status != Status::BackendError && wanted.contains(p.instance_id.as_str()) {
                kept.insert(p.instance_id.clone(), p);
            }
        }
    }
    let reused = kept.len();
    let todo: Vec<&Instance> = instances.iter().filter(|i| !kept.contains_key(&i.id)).collect();
    tracing::info!(total = instances.len(), reused, todo = todo.len(), "annotating");

    let limit = client.config().concurrency_limit;
    let fresh: Vec<Result<Prediction, BatchError>> = stream::iter(todo)
        .map(|inst| {
            let client = client.clone();
            async move { annotate_instance(inst, spec, &client).await }
        })
        .buffer_unordered(limit)
        .collect()
        .await;
    let annotated = fresh.len();
    for p in fresh {
        let p = p?;
        kept.insert(p.instance_id.clone(), p);
    }
    let predictions: Vec<Prediction> = kept.into_values().collect();
    write_atomic(out, &predictions_to_jsonl(&predictions)).map_err(|e| io_err(out, e))?;

    let cfg = client.config();
    let manifest = RunManifest {
        run_id: spec.run_id.clone(),
        format: spec.format,
        mode: spec.mode,
        target: spec.templates.target.to_string(),
        model_name: cfg.model_name.clone(),
        base_url: cfg.base_url.clone(),
        temperature: cfg.temperature,
        top_p: cfg.top_p,
        max_tokens: cfg.max_tokens,
        serving_description: cfg.serving_description.clone(),
        template_hashes: steps
            .iter()
            .filter_map(|s| spec.templates.get(*s).map(|t| (s.to_string(), sha256_hex(&t.body))))
            .collect(),
        exemplar_hash: exemplar_hash(&spec.templates),
        instances: predictions.len(),
        counts: status_counts(&predictions).into_iter().map(|(s, n)| (s.to_string(), n)).collect(),
        reused,
        annotated,
    };
    let mpath = manifest_path(out);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    write_atomic(&mpath, &json).map_err(|e| io_err(&mpath, e))?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DryRunPrompt {
    pub instance_id: String,
    pub step: Step,
    pub prompt_hash: String,
    pub prompt: String,
}

/// Renders every reachable step's prompt without contacting a backend.
pub fn dry_run(instances: &[Instance], spec: &RunSpec) -> Result<Vec<DryRunPrompt>, BatchError> {
    let mut out = Vec::new();
    for inst in instances {
        for step in reachable_steps(spec.format) {
            let prompt = render(spec, step, inst)?;
            out.push(DryRunPrompt {
                instance_id: inst.id.clone(),
                step,
                prompt_hash: sha256_hex(&prompt),
                prompt,
            });
        }
    }
    Ok(out)
}

//! One function per subcommand. Stages talk to each other only through files
//! under the output directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;
use solidarity_core::corpus::{
    corpus_stats, detect_dialect, parse_protocol, protocol_rows, protocols_from_rows, Protocol, SentenceRow,
};
use solidarity_core::evaluation::{
    averaged_loo_confusion, avg_pairwise_kappa, consensus, evaluate_run, loo_upper_bound, rater_labels, GoldRecord,
    PairwiseKappa, RaterLabels, RealConfusion, RunEvaluation,
};
use solidarity_core::extraction::{
    build_instances, instances_to_jsonl, keyword_distribution, parse_instances_jsonl, Instance, KeywordSet,
};
use solidarity_core::prediction::{ok_labels, parse_predictions_jsonl, status_counts, Prediction, Status};
use solidarity_core::prompt::TemplateSet;
use solidarity_core::taxonomy::{FineLabel, Level};
use solidarity_core::trends::{
    chart_data, decade_shares_high, decade_shares_subtypes, join, stability_test, trend_correlation, trend_csv,
    LabeledInstance, TrendError,
};
use solidarity_llm::annotate::{manifest_path, BatchError};
use solidarity_llm::{dry_run, run_batch, ChatClient, ResponseCache, RunManifest, RunSpec};

use crate::artifacts::{files_with_extension, StageManifest, Tracker};
use crate::config::RunConfig;
use crate::error::{data, CliError};

fn protocols_path(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir().join("protocols.jsonl")
}

pub fn instances_path(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir().join("instances").join(format!("{}.jsonl", cfg.target))
}

pub fn run_path(cfg: &RunConfig, run_id: &str) -> PathBuf {
    cfg.output_dir().join("runs").join(format!("{run_id}.jsonl"))
}

fn check_run_id(run_id: &str) -> Result<(), CliError> {
    let ok = !run_id.is_empty()
        && !run_id.starts_with('.')
        && run_id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c));
    if ok {
        Ok(())
    } else {
        Err(CliError::Usage(format!("invalid run id {run_id:?}: use letters, digits, '-', '_' and '.'")))
    }
}

fn jsonl<T: Serialize>(rows: &[T]) -> String {
    let mut out = String::new();
    for r in rows {
        out.push_str(&serde_json::to_string(r).expect("row serializes"));
        out.push('\n');
    }
    out
}

pub fn ingest(cfg: &RunConfig) -> Result<StageManifest, CliError> {
    let mut t = Tracker::new(&cfg.base_dir);
    let files = files_with_extension(&cfg.corpus_dir(), "xml")?;
    let mut protocols: Vec<Protocol> = Vec::new();
    let mut failed = Vec::new();
    for f in &files {
        let bytes = t.read_bytes(f)?;
        let dialect = cfg.corpus.dialect.unwrap_or_else(|| detect_dialect(&bytes));
        match parse_protocol(&bytes, dialect) {
            Ok(p) => protocols.push(p),
            Err(e) => {
                tracing::warn!(file = %f.display(), error = %e, "skipping protocol");
                failed.push(json!({ "file": t.display(f), "error": e.to_string() }));
            }
        }
    }
    if protocols.is_empty() {
        return Err(CliError::Data(format!(
            "no protocol parsed from {} ({} XML files)",
            cfg.corpus_dir().display(),
            files.len()
        )));
    }
    let rows: Vec<SentenceRow> = protocols.iter().flat_map(protocol_rows).collect();
    t.write(&protocols_path(cfg), &jsonl(&rows))?;
    let params = json!({
        "files": files.len(),
        "protocols": protocols.len(),
        "sentences": rows.len(),
        "failed": failed,
    });
    t.finish(&cfg.output_dir(), "ingest", "ingest", params)
}

fn read_protocols(cfg: &RunConfig, t: &mut Tracker) -> Result<Vec<Protocol>, CliError> {
    let path = protocols_path(cfg);
    if !path.exists() {
        return Err(CliError::Data(format!("{} not found; run `ingest` first", path.display())));
    }
    let text = t.read(&path)?;
    let rows: Vec<SentenceRow> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| CliError::Data(format!("{}:{}: {e}", path.display(), i + 1))))
        .collect::<Result<_, _>>()?;
    protocols_from_rows(&rows).map_err(data)
}

pub fn extract(cfg: &RunConfig) -> Result<StageManifest, CliError> {
    let mut t = Tracker::new(&cfg.base_dir);
    let protocols = read_protocols(cfg, &mut t)?;
    let ks = match cfg.keywords_path() {
        Some(p) => KeywordSet::parse(cfg.target, &t.read(&p)?),
        None => KeywordSet::builtin(cfg.target),
    };
    if ks.keywords.is_empty() {
        return Err(CliError::Config(format!("keyword list for {} is empty", cfg.target)));
    }
    let instances = build_instances(&protocols, &ks);
    let out = instances_path(cfg);
    t.write(&out, &instances_to_jsonl(&instances))?;
    t.write_json(&out.with_extension("stats.json"), &corpus_stats(&protocols, &instances))?;
    t.write_json(&out.with_extension("keywords.json"), &keyword_distribution(&instances, &ks.keywords))?;
    let params = json!({
        "target": cfg.target,
        "keywords": ks.keywords.len(),
        "special_rules": ks.special_rules,
        "instances": instances.len(),
    });
    t.finish(&cfg.output_dir(), "extract", &format!("extract-{}", cfg.target), params)
}

pub fn read_instances(cfg: &RunConfig, t: &mut Tracker) -> Result<Vec<Instance>, CliError> {
    let path = instances_path(cfg);
    if !path.exists() {
        return Err(CliError::Data(format!("{} not found; run `extract` first", path.display())));
    }
    parse_instances_jsonl(&t.read(&path)?)
        .map_err(|(line, e)| CliError::Data(format!("{}:{line}: {e}", path.display())))
}

fn read_predictions(path: &Path, t: &mut Tracker) -> Result<Vec<Prediction>, CliError> {
    if !path.exists() {
        return Err(CliError::Data(format!("{} not found; run `annotate` first", path.display())));
    }
    parse_predictions_jsonl(&t.read(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn batch_error(e: BatchError) -> CliError {
    match e {
        BatchError::Io { .. } => CliError::Data(e.to_string()),
        other => CliError::Config(other.to_string()),
    }
}

pub struct AnnotateOptions {
    pub dry_run: bool,
    pub limit: Option<usize>,
}

pub async fn annotate(cfg: &RunConfig, opts: &AnnotateOptions) -> Result<StageManifest, CliError> {
    let mut t = Tracker::new(&cfg.base_dir);
    let run_id = cfg.run_id();
    check_run_id(&run_id)?;
    let mut instances = read_instances(cfg, &mut t)?;
    if let Some(n) = opts.limit {
        instances.truncate(n);
    }
    let tdir = cfg.target_templates_dir();
    let templates = TemplateSet::load_dir(&tdir, cfg.target).map_err(|e| CliError::Config(e.to_string()))?;
    let spec = RunSpec { run_id: run_id.clone(), format: cfg.prompt.format, mode: cfg.prompt.mode, templates };
    let out = cfg.output_dir();

    if opts.dry_run {
        let prompts = dry_run(&instances, &spec).map_err(batch_error)?;
        let dir = out.join("prompts").join(&run_id);
        for p in &prompts {
            t.write(&dir.join(format!("{}.{}.txt", p.instance_id, p.step)), &p.prompt)?;
        }
        t.write(&dir.join("prompts.jsonl"), &jsonl(&prompts))?;
        let params = json!({ "run_id": run_id, "dry_run": true, "instances": instances.len(), "prompts": prompts.len() });
        return t.finish(&out, "annotate", &format!("annotate-{run_id}-dry-run"), params);
    }

    let cache = match &cfg.paths.cache_dir {
        Some(dir) => Some(Arc::new(ResponseCache::open(cfg.resolve(dir)).map_err(data)?)),
        None => None,
    };
    let client = Arc::new(ChatClient::new(cfg.backend.clone(), cache).map_err(|e| CliError::Config(e.to_string()))?);
    let path = run_path(cfg, &run_id);
    let manifest = run_batch(&instances, &spec, client, &path).await.map_err(batch_error)?;
    t.note_output(&path)?;
    t.note_output(&manifest_path(&path))?;
    let failed = manifest.counts.get("backend_error").copied().unwrap_or(0);
    let params = json!({
        "run_id": run_id,
        "dry_run": false,
        "instances": manifest.instances,
        "counts": manifest.counts,
        "reused": manifest.reused,
        "annotated": manifest.annotated,
    });
    let stage = t.finish(&out, "annotate", &format!("annotate-{run_id}"), params)?;
    if failed > 0 {
        let first = parse_predictions_jsonl(&std::fs::read_to_string(&path).map_err(data)?)
            .ok()
            .and_then(|ps| ps.into_iter().find_map(|p| p.error));
        return Err(CliError::Backend(format!(
            "{failed} of {} instances ended in backend_error (first: {}); re-run to retry them",
            manifest.instances,
            first.unwrap_or_default()
        )));
    }
    Ok(stage)
}

/// Gold labels as read from a gold file.
pub enum Gold {
    /// Per-annotator records; consensus by majority vote.
    Raters { raters: RaterLabels, consensus: BTreeMap<String, FineLabel>, ties: usize },
    /// One already-decided label per instance.
    Consensus(BTreeMap<String, FineLabel>),
}

impl Gold {
    pub fn labels(&self) -> &BTreeMap<String, FineLabel> {
        match self {
            Gold::Raters { consensus, .. } => consensus,
            Gold::Consensus(c) => c,
        }
    }
}

#[derive(Deserialize)]
struct GoldLineIn {
    instance_id: String,
    #[serde(default)]
    annotator_id: Option<String>,
    fine_label: FineLabel,
}

/// Reads a gold JSONL file. Lines either all carry `annotator_id` or none do.
pub fn parse_gold(text: &str) -> Result<Gold, String> {
    let mut lines = Vec::new();
    for (i, l) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let g: GoldLineIn = serde_json::from_str(l).map_err(|e| format!("line {}: {e}", i + 1))?;
        lines.push((i + 1, g));
    }
    let with_annotator = lines.iter().filter(|(_, g)| g.annotator_id.is_some()).count();
    if with_annotator == 0 {
        let mut map = BTreeMap::new();
        for (n, g) in lines {
            if map.insert(g.instance_id.clone(), g.fine_label).is_some() {
                return Err(format!("line {n}: duplicate instance {}", g.instance_id));
            }
        }
        return Ok(Gold::Consensus(map));
    }
    if with_annotator != lines.len() {
        return Err("either every gold line has annotator_id or none does".into());
    }
    let records: Vec<GoldRecord> = lines
        .into_iter()
        .map(|(_, g)| GoldRecord {
            instance_id: g.instance_id,
            annotator_id: g.annotator_id.expect("checked above"),
            fine_label: g.fine_label,
        })
        .collect();
    let raters = rater_labels(&records);
    let (agreed, ties) = consensus(&raters);
    Ok(Gold::Raters { raters, consensus: agreed, ties: ties.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HumanAgreement {
    pub annotators: usize,
    pub kappa_high: Option<PairwiseKappa>,
    pub kappa_fine: Option<PairwiseKappa>,
    pub loo_upper_bound_high: Option<f64>,
    pub loo_upper_bound_fine: Option<f64>,
    pub loo_confusion_high: Option<RealConfusion>,
}

pub fn human_agreement(raters: &RaterLabels) -> HumanAgreement {
    HumanAgreement {
        annotators: raters.len(),
        kappa_high: avg_pairwise_kappa(raters, Level::High).ok(),
        kappa_fine: avg_pairwise_kappa(raters, Level::Fine).ok(),
        loo_upper_bound_high: loo_upper_bound(raters, Level::High).ok(),
        loo_upper_bound_fine: loo_upper_bound(raters, Level::Fine).ok(),
        loo_confusion_high: averaged_loo_confusion(raters, Level::High).ok(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationSummary {
    pub run_id: String,
    pub gold_instances: usize,
    /// Gold instances left out because their annotators tied.
    pub gold_ties: usize,
    pub prediction_status: BTreeMap<Status, usize>,
    pub high: RunEvaluation,
    pub fine: RunEvaluation,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub human: Option<HumanAgreement>,
}

impl EvaluationSummary {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "run: {}", self.run_id);
        let _ = writeln!(
            out,
            "gold instances: {}  tied: {}  scored: {}  unscored predictions: {}",
            self.gold_instances,
            self.gold_ties,
            self.high.report.n,
            self.prediction_status.iter().filter(|(s, _)| **s != Status::Ok).map(|(_, n)| n).sum::<usize>()
        );
        for eval in [&self.high, &self.fine] {
            out.push('\n');
            out.push_str(&eval.report.render_text());
        }
        if let Some(h) = &self.human {
            let f = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
            let _ = writeln!(out, "\nhuman annotators: {}", h.annotators);
            let _ = writeln!(
                out,
                "avg pairwise kappa  high: {}  fine: {}",
                f(h.kappa_high.as_ref().map(|k| k.mean)),
                f(h.kappa_fine.as_ref().map(|k| k.mean))
            );
            let _ = writeln!(
                out,
                "LOO upper bound     high: {}  fine: {}",
                f(h.loo_upper_bound_high),
                f(h.loo_upper_bound_fine)
            );
        }
        out
    }
}

pub fn evaluate_files(
    run_id: &str,
    gold: &Gold,
    predictions: &[Prediction],
    decades: Option<&BTreeMap<String, i32>>,
) -> Result<EvaluationSummary, CliError> {
    let preds = ok_labels(predictions);
    let high = evaluate_run(gold.labels(), &preds, Level::High, decades).map_err(data)?;
    let fine = evaluate_run(gold.labels(), &preds, Level::Fine, decades).map_err(data)?;
    let (ties, human) = match gold {
        Gold::Raters { raters, ties, .. } => (*ties, Some(human_agreement(raters))),
        Gold::Consensus(_) => (0, None),
    };
    Ok(EvaluationSummary {
        run_id: run_id.to_string(),
        gold_instances: gold.labels().len(),
        gold_ties: ties,
        prediction_status: status_counts(predictions),
        high,
        fine,
        human,
    })
}

fn gold_path(cfg: &RunConfig, flag: Option<&Path>) -> Result<PathBuf, CliError> {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.paths.gold.as_ref().map(|g| cfg.resolve(g)))
        .ok_or_else(|| CliError::Config("no gold file: set paths.gold or pass --gold".into()))
}

pub fn evaluate(cfg: &RunConfig, run_id: &str, gold_flag: Option<&Path>) -> Result<StageManifest, CliError> {
    check_run_id(run_id)?;
    let mut t = Tracker::new(&cfg.base_dir);
    let gpath = gold_path(cfg, gold_flag)?;
    let gold = parse_gold(&t.read(&gpath)?).map_err(|e| CliError::Data(format!("{}: {e}", gpath.display())))?;
    let predictions = read_predictions(&run_path(cfg, run_id), &mut t)?;
    let decades: Option<BTreeMap<String, i32>> = if instances_path(cfg).exists() {
        Some(read_instances(cfg, &mut t)?.into_iter().map(|i| (i.id, i.decade)).collect())
    } else {
        None
    };
    let summary = evaluate_files(run_id, &gold, &predictions, decades.as_ref())?;
    let dir = cfg.output_dir().join("eval");
    t.write_json(&dir.join(format!("{run_id}.json")), &summary)?;
    t.write(&dir.join(format!("{run_id}.txt")), &summary.render_text())?;
    t.write(&dir.join(format!("{run_id}.high.confusion.csv")), &summary.high.report.confusion.to_csv())?;
    t.write(&dir.join(format!("{run_id}.fine.confusion.csv")), &summary.fine.report.confusion.to_csv())?;
    if let Some(c) = summary.human.as_ref().and_then(|h| h.loo_confusion_high.as_ref()) {
        t.write(&dir.join("human.loo.high.confusion.csv"), &c.to_csv())?;
    }
    let params = json!({
        "run_id": run_id,
        "scored": summary.high.report.n,
        "macro_f1_high": summary.high.report.macro_f1,
        "macro_f1_fine": summary.fine.report.macro_f1,
    });
    t.finish(&cfg.output_dir(), "evaluate", &format!("evaluate-{run_id}"), params)
}

fn labeled(cfg: &RunConfig, run_id: &str, t: &mut Tracker) -> Result<(Vec<LabeledInstance>, usize), CliError> {
    let instances = read_instances(cfg, t)?;
    let predictions = read_predictions(&run_path(cfg, run_id), t)?;
    Ok(join(&instances, &predictions))
}

fn trend_error(e: TrendError) -> CliError {
    CliError::Data(e.to_string())
}

pub fn trends(cfg: &RunConfig, run_id: &str, compare: Option<&str>) -> Result<StageManifest, CliError> {
    check_run_id(run_id)?;
    let mut t = Tracker::new(&cfg.base_dir);
    let exclusion = cfg.exclusion();
    let (items, missing) = labeled(cfg, run_id, &mut t)?;
    let high = decade_shares_high(&items, &exclusion).map_err(trend_error)?;
    let subtypes = decade_shares_subtypes(&items, &exclusion).map_err(trend_error)?;
    let dir = cfg.output_dir().join("trends");
    t.write(&dir.join(format!("{run_id}.high.csv")), &trend_csv(&high))?;
    t.write(&dir.join(format!("{run_id}.subtypes.csv")), &trend_csv(&subtypes))?;
    let charts = json!({
        "high": chart_data(&format!("{run_id}: high-level shares by decade"), &high, &exclusion),
        "subtypes": chart_data(&format!("{run_id}: subtype shares by decade"), &subtypes, &exclusion),
    });
    t.write_json(&dir.join(format!("{run_id}.chart.json")), &charts)?;
    if let Some(other) = compare {
        check_run_id(other)?;
        let (other_items, _) = labeled(cfg, other, &mut t)?;
        let table = json!({
            "run_a": run_id,
            "run_b": other,
            "high": trend_correlation(&items, &other_items, Level::High, &exclusion).map_err(trend_error)?,
            "fine": trend_correlation(&items, &other_items, Level::Fine, &exclusion).map_err(trend_error)?,
        });
        t.write_json(&dir.join(format!("{run_id}.vs.{other}.json")), &table)?;
    }
    let params = json!({
        "run_id": run_id,
        "compare": compare,
        "exclusion": exclusion,
        "joined": items.len(),
        "missing_predictions": missing,
        "status": items.iter().fold(BTreeMap::<String, usize>::new(), |mut m, i| {
            *m.entry(i.status.to_string()).or_default() += 1;
            m
        }),
    });
    t.finish(&cfg.output_dir(), "trends", &format!("trends-{run_id}"), params)
}

pub fn stability(cfg: &RunConfig, run_id: &str) -> Result<StageManifest, CliError> {
    check_run_id(run_id)?;
    let mut t = Tracker::new(&cfg.base_dir);
    let (items, missing) = labeled(cfg, run_id, &mut t)?;
    let params = cfg.stability_params();
    let report = stability_test(&items, &params).map_err(trend_error)?;
    t.write_json(&cfg.output_dir().join("stability").join(format!("{run_id}.json")), &report)?;
    let summary = json!({
        "run_id": run_id,
        "seed": params.seed,
        "num_subsets": report.num_subsets,
        "pairs": report.pairs,
        "missing_predictions": missing,
        "labels": report.labels,
    });
    t.finish(&cfg.output_dir(), "stability", &format!("stability-{run_id}"), summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct GridRow {
    pub run_id: String,
    pub format: Option<String>,
    pub mode: Option<String>,
    pub model: Option<String>,
    pub instances: usize,
    pub status: BTreeMap<Status, usize>,
    pub scored: Option<usize>,
    pub macro_f1_high: Option<f64>,
    pub macro_f1_fine: Option<f64>,
}

pub fn report(cfg: &RunConfig, gold_flag: Option<&Path>) -> Result<StageManifest, CliError> {
    let mut t = Tracker::new(&cfg.base_dir);
    let out = cfg.output_dir();
    let gold = match gold_path(cfg, gold_flag) {
        Ok(p) => Some(parse_gold(&t.read(&p)?).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?),
        Err(_) => None,
    };
    let runs_dir = out.join("runs");
    let run_files: Vec<PathBuf> = if runs_dir.is_dir() {
        files_with_extension(&runs_dir, "jsonl")?
    } else {
        Vec::new()
    };
    let mut rows = Vec::new();
    let mut confusions = BTreeMap::new();
    for path in &run_files {
        let run_id = path.file_stem().expect("jsonl file has a stem").to_string_lossy().to_string();
        let predictions = read_predictions(path, &mut t)?;
        let manifest: Option<RunManifest> = std::fs::read_to_string(manifest_path(path))
            .ok()
            .and_then(|s| serde_json::from_str(&s).ok());
        let eval = match &gold {
            Some(g) => evaluate_files(&run_id, g, &predictions, None).ok(),
            None => None,
        };
        if let Some(e) = &eval {
            confusions.insert(run_id.clone(), json!({ "high": e.high.report.confusion, "fine": e.fine.report.confusion }));
        }
        rows.push(GridRow {
            run_id,
            format: manifest.as_ref().map(|m| m.format.to_string()),
            mode: manifest.as_ref().map(|m| m.mode.to_string()),
            model: manifest.as_ref().map(|m| m.model_name.clone()),
            instances: predictions.len(),
            status: status_counts(&predictions),
            scored: eval.as_ref().map(|e| e.high.report.n),
            macro_f1_high: eval.as_ref().map(|e| e.high.report.macro_f1),
            macro_f1_fine: eval.as_ref().map(|e| e.fine.report.macro_f1),
        });
    }
    let human = match &gold {
        Some(Gold::Raters { raters, .. }) => Some(human_agreement(raters)),
        _ => None,
    };
    let trend_files: Vec<String> = if out.join("trends").is_dir() {
        let mut v: Vec<String> = files_with_extension(&out.join("trends"), "csv")?.iter().map(|p| t.display(p)).collect();
        v.extend(files_with_extension(&out.join("trends"), "json")?.iter().map(|p| t.display(p)));
        v.sort();
        v
    } else {
        Vec::new()
    };

    let mut text = String::new();
    let _ = writeln!(text, "{:<32} {:>9} {:>6} {:>9} {:>9}", "run", "instances", "scored", "F1 high", "F1 fine");
    let f = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
    for r in &rows {
        let scored = r.scored.map_or_else(|| "-".to_string(), |n| n.to_string());
        let _ = writeln!(
            text,
            "{:<32} {:>9} {:>6} {:>9} {:>9}",
            r.run_id,
            r.instances,
            scored,
            f(r.macro_f1_high),
            f(r.macro_f1_fine)
        );
    }
    if let Some(h) = &human {
        let _ = writeln!(
            text,
            "{:<32} {:>9} {:>6} {:>9} {:>9}",
            "human (LOO upper bound)",
            "-",
            "-",
            f(h.loo_upper_bound_high),
            f(h.loo_upper_bound_fine)
        );
    }
    if !trend_files.is_empty() {
        let _ = writeln!(text, "\ntrend files:");
        for p in &trend_files {
            let _ = writeln!(text, "  {p}");
        }
    }
    let combined = json!({ "runs": rows, "human": human, "confusion": confusions, "trend_files": trend_files });
    t.write_json(&out.join("report.json"), &combined)?;
    t.write(&out.join("report.txt"), &text)?;
    print!("{text}");
    let params = json!({ "runs": rows.len(), "gold": gold.is_some() });
    t.finish(&out, "report", "report", params)
}

pub fn export_gold(cfg: &RunConfig, data_dir: &Path) -> Result<StageManifest, CliError> {
    let mut t = Tracker::new(&cfg.base_dir);
    if !data_dir.is_dir() {
        return Err(CliError::Data(format!("{} is not a directory", data_dir.display())));
    }
    let state = solidarity_service::store::load_state(data_dir).map_err(data)?;
    let dir = cfg.output_dir().join("gold");
    let consensus = state.export_gold();
    let records = state.gold_records();
    t.write(&dir.join("consensus.jsonl"), &jsonl(&consensus))?;
    t.write(&dir.join("annotations.jsonl"), &jsonl(&records))?;
    let params = json!({
        "journal_rev": state.rev,
        "consensus": consensus.len(),
        "records": records.len(),
        "pending_adjudications": state.pending_adjudications().len(),
    });
    t.finish(&cfg.output_dir(), "export-gold", "export-gold", params)
}

pub struct ServeArgs {
    pub addr: SocketAddr,
    pub data_dir: PathBuf,
    pub instances: PathBuf,
    pub static_dir: Option<PathBuf>,
}

pub async fn serve(cfg: &RunConfig, args: ServeArgs) -> Result<(), CliError> {
    let opts = solidarity_service::ServeOptions {
        addr: args.addr,
        data_dir: args.data_dir,
        instances_path: args.instances,
        runs_dir: Some(cfg.output_dir().join("runs")),
        static_dir: args.static_dir,
        tokens: cfg.service.tokens.clone(),
        snapshot_every: cfg.service.snapshot_every,
    };
    solidarity_service::serve(opts, |addr| {
        use std::io::Write;
        println!("{}", json!({ "listening": format!("http://{addr}") }));
        let _ = std::io::stdout().flush();
    })
    .await
    .map_err(|e| match e {
        solidarity_service::ServeError::Input { .. } | solidarity_service::ServeError::Store(_) => data(e),
        other => CliError::Config(other.to_string()),
    })
}

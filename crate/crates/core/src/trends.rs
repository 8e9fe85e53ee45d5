//! Decade-normalized label shares, trend correlations and the keyword
//! stability test.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::decade_of;
use crate::extraction::Instance;
use crate::prediction::{Prediction, Status};
use crate::taxonomy::{FineLabel, HighLevel, Level};

#[derive(Debug, Error, PartialEq)]
pub enum TrendError {
    #[error("no decade has data after exclusions")]
    EmptyDecadeSet,
    #[error("series has zero variance")]
    DegenerateSeries,
    #[error("series too short: need at least 3 points of equal length, got {x} and {y}")]
    TooShort { x: usize, y: usize },
    #[error("no keyword subset satisfies the constraints after {draws} draws")]
    InfeasibleConstraints { draws: usize },
}

/// Inclusive year range removed from trend series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearRange {
    pub start: i32,
    pub end: i32,
}

pub const DEFAULT_EXCLUSION: YearRange = YearRange { start: 1933, end: 1949 };

impl YearRange {
    /// True if any year of the decade falls in the range.
    pub fn covers_decade(&self, decade: i32) -> bool {
        decade <= self.end && decade + 9 >= self.start
    }
}

pub fn decade_excluded(decade: i32, exclusion: &[YearRange]) -> bool {
    exclusion.iter().any(|r| r.covers_decade(decade))
}

/// An instance joined with its prediction; the unit of trend aggregation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledInstance {
    pub instance_id: String,
    pub year: i32,
    pub keyword: String,
    pub status: Status,
    pub high: Option<HighLevel>,
    pub fine: Option<FineLabel>,
}

impl LabeledInstance {
    pub fn decade(&self) -> i32 {
        decade_of(self.year)
    }
}

/// Inner join on instance id. Returns the joined rows (in instance order) and
/// the number of instances without a prediction.
pub fn join(instances: &[Instance], predictions: &[Prediction]) -> (Vec<LabeledInstance>, usize) {
    let by_id: BTreeMap<&str, &Prediction> =
        predictions.iter().map(|p| (p.instance_id.as_str(), p)).collect();
    let mut missing = 0;
    let mut rows = Vec::with_capacity(instances.len());
    for inst in instances {
        match by_id.get(inst.id.as_str()) {
            Some(p) => rows.push(LabeledInstance {
                instance_id: inst.id.clone(),
                year: inst.year,
                keyword: inst.keyword.clone(),
                status: p.status,
                high: p.high,
                fine: p.fine,
            }),
            None => missing += 1,
        }
    }
    (rows, missing)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    pub decade: i32,
    pub share: f64,
    /// Denominator of the share.
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendSeries {
    pub label: String,
    pub exclusion: Vec<YearRange>,
    pub points: Vec<TrendPoint>,
}

impl TrendSeries {
    pub fn shares(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.share).collect()
    }

    pub fn share_at(&self, decade: i32) -> Option<f64> {
        self.points.iter().find(|p| p.decade == decade).map(|p| p.share)
    }
}

pub const HIGH_TREND_LABELS: [HighLevel; 3] = [HighLevel::Solidarity, HighLevel::AntiSolidarity, HighLevel::Mixed];

pub fn subtype_labels() -> Vec<FineLabel> {
    FineLabel::MODEL_FACING.iter().copied().filter(|l| l.subtype().is_some()).collect()
}

fn shares<K: Ord + Copy>(
    counts: &BTreeMap<i32, (usize, BTreeMap<K, usize>)>,
    labels: &[K],
    names: impl Fn(K) -> String,
    exclusion: &[YearRange],
) -> Result<Vec<TrendSeries>, TrendError> {
    if counts.is_empty() {
        return Err(TrendError::EmptyDecadeSet);
    }
    Ok(labels
        .iter()
        .map(|&label| TrendSeries {
            label: names(label),
            exclusion: exclusion.to_vec(),
            points: counts
                .iter()
                .map(|(&decade, (n, by_label))| TrendPoint {
                    decade,
                    share: 100.0 * by_label.get(&label).copied().unwrap_or(0) as f64 / *n as f64,
                    n: *n,
                })
                .collect(),
        })
        .collect())
}

/// Shares of solidarity, anti-solidarity and mixed among `ok` predictions per
/// decade. `none` counts only in the denominator.
pub fn decade_shares_high(
    items: &[LabeledInstance],
    exclusion: &[YearRange],
) -> Result<Vec<TrendSeries>, TrendError> {
    let mut counts: BTreeMap<i32, (usize, BTreeMap<HighLevel, usize>)> = BTreeMap::new();
    for it in items {
        let (Status::Ok, Some(high)) = (it.status, it.high) else { continue };
        let decade = it.decade();
        if decade_excluded(decade, exclusion) {
            continue;
        }
        let entry = counts.entry(decade).or_default();
        entry.0 += 1;
        *entry.1.entry(high).or_default() += 1;
    }
    shares(&counts, &HIGH_TREND_LABELS, |h| h.canonical(), exclusion)
}

/// Shares of the eight subtypes per decade, normalized over subtype-labeled
/// `ok` predictions only. Decades without any subtype label are omitted.
pub fn decade_shares_subtypes(
    items: &[LabeledInstance],
    exclusion: &[YearRange],
) -> Result<Vec<TrendSeries>, TrendError> {
    let mut counts: BTreeMap<i32, (usize, BTreeMap<FineLabel, usize>)> = BTreeMap::new();
    for it in items {
        let (Status::Ok, Some(fine)) = (it.status, it.fine) else { continue };
        if fine.subtype().is_none() {
            continue;
        }
        let decade = it.decade();
        if decade_excluded(decade, exclusion) {
            continue;
        }
        let entry = counts.entry(decade).or_default();
        entry.0 += 1;
        *entry.1.entry(fine).or_default() += 1;
    }
    shares(&counts, &subtype_labels(), |l| l.canonical(), exclusion)
}

/// Sample Pearson correlation and two-sided p-value (t test, n-2 df).
pub fn pearson(x: &[f64], y: &[f64]) -> Result<(f64, f64), TrendError> {
    let n = x.len();
    if n != y.len() || n < 3 {
        return Err(TrendError::TooShort { x: x.len(), y: y.len() });
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(TrendError::DegenerateSeries);
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p = if r.abs() == 1.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
        (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
    };
    Ok((r, p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendCorrelation {
    pub label: String,
    pub pearson_r: f64,
    pub p_value: f64,
    pub n_decades: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmittedRow {
    pub label: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTable {
    pub rows: Vec<TrendCorrelation>,
    pub omitted: Vec<OmittedRow>,
}

fn label_present(items: &[LabeledInstance], label: &str) -> bool {
    items.iter().filter(|i| i.status == Status::Ok).any(|i| {
        i.high.map(|h| h.canonical() == label).unwrap_or(false)
            || i.fine.map(|f| f.canonical() == label).unwrap_or(false)
    })
}

fn correlate_series(
    a: &[TrendSeries],
    b: &[TrendSeries],
    run_a: &[LabeledInstance],
    run_b: &[LabeledInstance],
    table: &mut CorrelationTable,
) {
    for sa in a {
        let Some(sb) = b.iter().find(|s| s.label == sa.label) else { continue };
        if !label_present(run_a, &sa.label) || !label_present(run_b, &sa.label) {
            table.omitted.push(OmittedRow { label: sa.label.clone(), reason: "label absent in a run".into() });
            continue;
        }
        let (x, y): (Vec<f64>, Vec<f64>) = sa
            .points
            .iter()
            .filter_map(|p| sb.share_at(p.decade).map(|s| (p.share, s)))
            .unzip();
        match pearson(&x, &y) {
            Ok((r, p)) => table.rows.push(TrendCorrelation {
                label: sa.label.clone(),
                pearson_r: r,
                p_value: p,
                n_decades: x.len(),
            }),
            Err(e) => table.omitted.push(OmittedRow { label: sa.label.clone(), reason: e.to_string() }),
        }
    }
}

/// Per-label correlation of two runs' decade trends over shared decades.
///
/// At the high level the rows are solidarity, anti-solidarity and mixed; at
/// the fine level the eight subtypes come first, followed by the high rows.
pub fn trend_correlation(
    run_a: &[LabeledInstance],
    run_b: &[LabeledInstance],
    level: Level,
    exclusion: &[YearRange],
) -> Result<CorrelationTable, TrendError> {
    let mut table = CorrelationTable { rows: Vec::new(), omitted: Vec::new() };
    if level == Level::Fine {
        let a = decade_shares_subtypes(run_a, exclusion)?;
        let b = decade_shares_subtypes(run_b, exclusion)?;
        correlate_series(&a, &b, run_a, run_b, &mut table);
    }
    let a = decade_shares_high(run_a, exclusion)?;
    let b = decade_shares_high(run_b, exclusion)?;
    correlate_series(&a, &b, run_a, run_b, &mut table);
    Ok(table)
}

/// Keeps instances whose primary keyword is in the allowlist.
pub fn restrict_keywords<'a>(instances: &[Instance], allowlist: impl IntoIterator<Item = &'a str>) -> Vec<Instance> {
    let allow: BTreeSet<&str> = allowlist.into_iter().collect();
    instances.iter().filter(|i| allow.contains(i.keyword.as_str())).cloned().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityParams {
    pub num_subsets: usize,
    pub min_keywords: usize,
    pub min_dataset_share: f64,
    pub min_timeline_span: f64,
    /// Rejection-sampling budget per subset.
    pub max_draws: usize,
    pub seed: u64,
    pub exclusion: Vec<YearRange>,
}

impl Default for StabilityParams {
    fn default() -> Self {
        StabilityParams {
            num_subsets: 200,
            min_keywords: 5,
            min_dataset_share: 0.10,
            min_timeline_span: 0.75,
            max_draws: 10_000,
            seed: 0,
            exclusion: vec![DEFAULT_EXCLUSION],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordSubset {
    pub keywords: Vec<String>,
    pub instances: usize,
    pub dataset_share: f64,
    pub timeline_span: f64,
    /// Draws needed to find this subset.
    pub draws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelStability {
    pub label: String,
    pub pairs: usize,
    /// Pairs skipped for zero variance or fewer than three shared decades.
    pub degenerate: usize,
    pub mean_r: Option<f64>,
    pub q25_r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub seed: u64,
    pub num_subsets: usize,
    pub pairs: usize,
    pub params: StabilityParams,
    pub labels: Vec<LabelStability>,
    pub subsets: Vec<KeywordSubset>,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

fn decade_range_len(min: i32, max: i32) -> f64 {
    ((max - min) / 10 + 1) as f64
}

fn draw_subset(
    keywords: &[String],
    by_keyword: &BTreeMap<&str, (usize, i32, i32)>,
    total: usize,
    corpus_span: f64,
    params: &StabilityParams,
    index: usize,
) -> Result<KeywordSubset, TrendError> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(index as u64);
    for draw in 1..=params.max_draws {
        let size = rng.gen_range(params.min_keywords..=keywords.len());
        let mut chosen: Vec<String> = keywords.choose_multiple(&mut rng, size).cloned().collect();
        chosen.sort();
        let mut n = 0;
        let (mut lo, mut hi) = (i32::MAX, i32::MIN);
        for kw in &chosen {
            if let Some(&(count, min, max)) = by_keyword.get(kw.as_str()) {
                n += count;
                lo = lo.min(min);
                hi = hi.max(max);
            }
        }
        if n == 0 {
            continue;
        }
        let share = n as f64 / total as f64;
        let span = decade_range_len(lo, hi) / corpus_span;
        if share >= params.min_dataset_share && span >= params.min_timeline_span {
            return Ok(KeywordSubset { keywords: chosen, instances: n, dataset_share: share, timeline_span: span, draws: draw });
        }
    }
    Err(TrendError::InfeasibleConstraints { draws: params.max_draws })
}

/// Correlates high-level decade trends across random keyword subsets.
///
/// Each subset draws its size uniformly from `min_keywords..=K` and then that
/// many distinct keywords; subsets are drawn independently, so two subsets may
/// coincide. Subset `i` uses stream `i` of a ChaCha generator seeded with
/// `seed`, which makes the result independent of thread scheduling.
/// Instances in excluded decades are dropped before sampling.
pub fn stability_test(items: &[LabeledInstance], params: &StabilityParams) -> Result<StabilityReport, TrendError> {
    let items: Vec<&LabeledInstance> =
        items.iter().filter(|i| !decade_excluded(i.decade(), &params.exclusion)).collect();
    let mut by_keyword: BTreeMap<&str, (usize, i32, i32)> = BTreeMap::new();
    for it in &items {
        let e = by_keyword.entry(it.keyword.as_str()).or_insert((0, i32::MAX, i32::MIN));
        e.0 += 1;
        e.1 = e.1.min(it.decade());
        e.2 = e.2.max(it.decade());
    }
    let keywords: Vec<String> = by_keyword.keys().map(|k| k.to_string()).collect();
    if items.is_empty() || params.min_keywords == 0 || params.min_keywords > keywords.len() {
        return Err(TrendError::InfeasibleConstraints { draws: 0 });
    }
    let corpus_lo = by_keyword.values().map(|v| v.1).min().expect("non-empty");
    let corpus_hi = by_keyword.values().map(|v| v.2).max().expect("non-empty");
    let corpus_span = decade_range_len(corpus_lo, corpus_hi);

    let subsets: Vec<KeywordSubset> = (0..params.num_subsets)
        .into_par_iter()
        .map(|i| draw_subset(&keywords, &by_keyword, items.len(), corpus_span, params, i))
        .collect::<Result<_, _>>()?;

    let series: Vec<BTreeMap<String, BTreeMap<i32, f64>>> = subsets
        .par_iter()
        .map(|s| {
            let allow: BTreeSet<&str> = s.keywords.iter().map(String::as_str).collect();
            let subset_items: Vec<LabeledInstance> =
                items.iter().filter(|i| allow.contains(i.keyword.as_str())).map(|i| (*i).clone()).collect();
            match decade_shares_high(&subset_items, &params.exclusion) {
                Ok(all) => all
                    .into_iter()
                    .map(|ts| (ts.label, ts.points.into_iter().map(|p| (p.decade, p.share)).collect()))
                    .collect(),
                Err(_) => BTreeMap::new(),
            }
        })
        .collect();

    let n = params.num_subsets;
    let pairs = n * n.saturating_sub(1) / 2;
    let labels = HIGH_TREND_LABELS
        .iter()
        .map(|label| {
            let name = label.canonical();
            let rs: Vec<Option<f64>> = (0..n)
                .into_par_iter()
                .flat_map_iter(|i| {
                    let series = &series;
                    let name = &name;
                    (i + 1..n).map(move |j| pair_r(series[i].get(name), series[j].get(name)))
                })
                .collect();
            let mut valid: Vec<f64> = rs.iter().flatten().copied().collect();
            let degenerate = rs.len() - valid.len();
            let mean_r = if valid.is_empty() { None } else { Some(valid.iter().sum::<f64>() / valid.len() as f64) };
            valid.sort_by(f64::total_cmp);
            LabelStability { label: name, pairs: rs.len(), degenerate, mean_r, q25_r: quantile_sorted(&valid, 0.25) }
        })
        .collect();

    Ok(StabilityReport { seed: params.seed, num_subsets: n, pairs, params: params.clone(), labels, subsets })
}

fn pair_r(a: Option<&BTreeMap<i32, f64>>, b: Option<&BTreeMap<i32, f64>>) -> Option<f64> {
    let (a, b) = (a?, b?);
    let (x, y): (Vec<f64>, Vec<f64>) = a.iter().filter_map(|(d, s)| b.get(d).map(|t| (*s, *t))).unzip();
    pearson(&x, &y).ok().map(|(r, _)| r)
}

/// `decade,label,share,n` rows, series after series.
pub fn trend_csv(series: &[TrendSeries]) -> String {
    let mut out = String::from("decade,label,share,n\n");
    for s in series {
        for p in &s.points {
            let _ = writeln!(out, "{},{},{},{}", p.decade, s.label, p.share, p.n);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartData {
    pub title: String,
    pub unit: String,
    pub exclusion: Vec<YearRange>,
    pub series: Vec<TrendSeries>,
}

pub fn chart_data(title: &str, series: &[TrendSeries], exclusion: &[YearRange]) -> ChartData {
    ChartData {
        title: title.to_string(),
        unit: "percent of decade".into(),
        exclusion: exclusion.to_vec(),
        series: series.to_vec(),
    }
}

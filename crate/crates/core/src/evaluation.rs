//! Agreement and performance statistics between rater sources.
//!
//! Conventions:
//! * per-class F1 is `2·tp / (gold + predicted)`; a class with neither gold nor
//!   predicted instances is excluded from the macro average, and a class with
//!   only one of the two scores 0;
//! * Cohen's κ is `(p_o − p_e) / (1 − p_e)`, defined as 1 when `p_e = 1`;
//! * consensus is the unique most frequent label; ties yield no consensus.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Debug, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::taxonomy::{FineLabel, HighLevel, Level};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("length mismatch: {gold} gold vs {pred} predicted labels")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("label {0} is not in the class list")]
    UnknownClass(String),
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("empty input")]
    EmptyInput,
    #[error("need at least {needed} annotators, got {got}")]
    TooFewAnnotators { needed: usize, got: usize },
    #[error("no pair of annotators shares an instance")]
    NoOverlap,
    #[error("gold and predictions share no instance")]
    EmptyIntersection,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix<L> {
    pub classes: Vec<L>,
    /// `counts[gold][pred]`
    pub counts: Vec<Vec<u64>>,
}

impl<L> ConfusionMatrix<L> {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn gold_count(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn pred_count(&self, class: usize) -> u64 {
        self.counts.iter().map(|row| row[class]).sum()
    }
}

impl<L: fmt::Display> ConfusionMatrix<L> {
    /// CSV with a `gold\pred` header row and one row per gold class.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gold\\pred");
        for c in &self.classes {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
        for (c, row) in self.classes.iter().zip(&self.counts) {
            let _ = write!(out, "{c}");
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Counts `(gold, pred)` pairs over a fixed class list.
pub fn confusion_matrix<L: PartialEq + Clone + Debug>(
    gold: &[L],
    pred: &[L],
    classes: &[L],
) -> Result<ConfusionMatrix<L>, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch { gold: gold.len(), pred: pred.len() });
    }
    let index = |l: &L| {
        classes
            .iter()
            .position(|c| c == l)
            .ok_or_else(|| EvalError::UnknownClass(format!("{l:?}")))
    };
    let k = classes.len();
    let mut counts = vec![vec![0u64; k]; k];
    for (g, p) in gold.iter().zip(pred) {
        counts[index(g)?][index(p)?] += 1;
    }
    Ok(ConfusionMatrix { classes: classes.to_vec(), counts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore<L> {
    pub label: L,
    /// `None` when the class has neither gold nor predicted instances.
    pub f1: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub support: u64,
    pub predicted: u64,
}

pub fn per_class_f1<L: Clone>(cm: &ConfusionMatrix<L>) -> Vec<ClassScore<L>> {
    (0..cm.classes.len())
        .map(|i| {
            let tp = cm.counts[i][i];
            let support = cm.gold_count(i);
            let predicted = cm.pred_count(i);
            let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
            ClassScore {
                label: cm.classes[i].clone(),
                f1: ratio(2 * tp, support + predicted),
                precision: ratio(tp, predicted),
                recall: ratio(tp, support),
                support,
                predicted,
            }
        })
        .collect()
}

/// Unweighted mean of per-class F1 over classes that occur in gold or predictions.
pub fn macro_f1<L: Clone>(cm: &ConfusionMatrix<L>) -> Result<f64, EvalError> {
    if cm.total() == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let scores: Vec<f64> = per_class_f1(cm).into_iter().filter_map(|s| s.f1).collect();
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

pub fn cohen_kappa<L: Ord>(a: &[L], b: &[L]) -> Result<f64, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch { gold: a.len(), pred: b.len() });
    }
    if a.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let n = a.len() as u128;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as u128;
    let mut marg_a: BTreeMap<&L, u128> = BTreeMap::new();
    let mut marg_b: BTreeMap<&L, u128> = BTreeMap::new();
    for (x, y) in a.iter().zip(b) {
        *marg_a.entry(x).or_default() += 1;
        *marg_b.entry(y).or_default() += 1;
    }
    // chance agreement scaled by n²
    let expected: u128 = marg_a
        .iter()
        .map(|(l, ca)| ca * marg_b.get(l).copied().unwrap_or(0))
        .sum();
    if expected == n * n {
        return Ok(1.0);
    }
    let numerator = (n * agree) as f64 - expected as f64;
    Ok(numerator / (n * n - expected) as f64)
}

/// Outcome of a vote among raters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "vote", content = "label")]
pub enum Vote<L> {
    Winner(L),
    Tie,
}

impl<L> Vote<L> {
    pub fn winner(self) -> Option<L> {
        match self {
            Vote::Winner(l) => Some(l),
            Vote::Tie => None,
        }
    }
}

/// Majority vote: the unique most frequent label wins, otherwise `Tie`.
/// An empty ballot is a tie.
pub fn majority_vote<L: Ord + Clone>(labels: &[L]) -> Vote<L> {
    let mut counts: BTreeMap<&L, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let Some(max) = counts.values().max().copied() else {
        return Vote::Tie;
    };
    let mut top = counts.into_iter().filter(|(_, c)| *c == max);
    match (top.next(), top.next()) {
        (Some((l, _)), None) => Vote::Winner(l.clone()),
        _ => Vote::Tie,
    }
}

/// rater id → instance id → label.
pub type RaterLabels = BTreeMap<String, BTreeMap<String, FineLabel>>;

/// Canonical class name of a fine label at a level.
pub fn level_key(label: FineLabel, level: Level) -> String {
    match level {
        Level::High => label.high().canonical(),
        Level::Fine => label.canonical(),
    }
}

/// Ordered class list scored at a level.
pub fn level_classes(level: Level) -> Vec<String> {
    match level {
        Level::High => HighLevel::ALL.iter().map(|h| h.canonical()).collect(),
        Level::Fine => FineLabel::ALL.iter().map(|l| l.canonical()).collect(),
    }
}

/// One leave-one-out comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooFold {
    pub held_out: String,
    /// Held-out annotator against consensus of the others (gold side).
    pub confusion: ConfusionMatrix<String>,
    /// Instances dropped because the remaining annotators tied or were absent.
    pub dropped: usize,
}

fn loo_folds(raters: &RaterLabels, level: Level) -> Result<Vec<LooFold>, EvalError> {
    let classes = level_classes(level);
    raters
        .iter()
        .map(|(held_out, labels)| {
            let mut gold = Vec::new();
            let mut pred = Vec::new();
            let mut dropped = 0;
            for (inst, own) in labels {
                let others: Vec<String> = raters
                    .iter()
                    .filter(|(r, _)| *r != held_out)
                    .filter_map(|(_, m)| m.get(inst))
                    .map(|l| level_key(*l, level))
                    .collect();
                match majority_vote(&others) {
                    Vote::Winner(c) if !others.is_empty() => {
                        gold.push(c);
                        pred.push(level_key(*own, level));
                    }
                    _ => dropped += 1,
                }
            }
            Ok(LooFold {
                held_out: held_out.clone(),
                confusion: confusion_matrix(&gold, &pred, &classes)?,
                dropped,
            })
        })
        .collect()
}

/// Human upper bound: each annotator's macro F1 against the consensus of the
/// others, averaged over annotators. Folds with nothing to score are skipped.
pub fn loo_upper_bound(raters: &RaterLabels, level: Level) -> Result<f64, EvalError> {
    if raters.len() < 2 {
        return Err(EvalError::TooFewAnnotators { needed: 2, got: raters.len() });
    }
    let scores: Vec<f64> = loo_folds(raters, level)?
        .iter()
        .filter_map(|f| macro_f1(&f.confusion).ok())
        .collect();
    if scores.is_empty() {
        return Err(EvalError::EmptyIntersection);
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealConfusion {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<f64>>,
}

impl RealConfusion {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gold\\pred");
        for c in &self.classes {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
        for (c, row) in self.classes.iter().zip(&self.counts) {
            let _ = write!(out, "{c}");
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Mean over annotators of the (consensus-of-others × held-out) confusion matrix.
pub fn averaged_loo_confusion(raters: &RaterLabels, level: Level) -> Result<RealConfusion, EvalError> {
    if raters.len() < 3 {
        return Err(EvalError::TooFewAnnotators { needed: 3, got: raters.len() });
    }
    let folds = loo_folds(raters, level)?;
    let classes = level_classes(level);
    let k = classes.len();
    let mut counts = vec![vec![0.0; k]; k];
    for f in &folds {
        for (g, row) in f.confusion.counts.iter().enumerate() {
            for (p, v) in row.iter().enumerate() {
                counts[g][p] += *v as f64;
            }
        }
    }
    let n = folds.len() as f64;
    counts.iter_mut().flatten().for_each(|v| *v /= n);
    Ok(RealConfusion { classes, counts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairKappa {
    pub a: String,
    pub b: String,
    pub n: usize,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseKappa {
    pub pairs: Vec<PairKappa>,
    pub mean: f64,
}

/// Mean Cohen's κ over annotator pairs, each on the pair's shared instances.
/// Pairs without shared instances are left out.
pub fn avg_pairwise_kappa(raters: &RaterLabels, level: Level) -> Result<PairwiseKappa, EvalError> {
    if raters.len() < 2 {
        return Err(EvalError::TooFewAnnotators { needed: 2, got: raters.len() });
    }
    let ids: Vec<&String> = raters.keys().collect();
    let mut pairs = Vec::new();
    for (i, a) in ids.iter().enumerate() {
        for b in &ids[i + 1..] {
            let (ma, mb) = (&raters[*a], &raters[*b]);
            let (xs, ys): (Vec<String>, Vec<String>) = ma
                .iter()
                .filter_map(|(inst, la)| mb.get(inst).map(|lb| (level_key(*la, level), level_key(*lb, level))))
                .unzip();
            if xs.is_empty() {
                continue;
            }
            pairs.push(PairKappa {
                a: (*a).clone(),
                b: (*b).clone(),
                n: xs.len(),
                kappa: cohen_kappa(&xs, &ys)?,
            });
        }
    }
    if pairs.is_empty() {
        return Err(EvalError::NoOverlap);
    }
    let mean = pairs.iter().map(|p| p.kappa).sum::<f64>() / pairs.len() as f64;
    Ok(PairwiseKappa { pairs, mean })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub level: Level,
    pub n: usize,
    pub macro_f1: f64,
    pub per_class_f1: Vec<ClassScore<String>>,
    pub cohen_kappa: f64,
    pub confusion: ConfusionMatrix<String>,
}

impl EvalReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "level: {}  n: {}", self.level, self.n);
        let _ = writeln!(out, "macro F1: {:.4}  Cohen's kappa: {:.4}", self.macro_f1, self.cohen_kappa);
        let width = self.per_class_f1.iter().map(|c| c.label.len()).max().unwrap_or(5).max(5);
        let _ = writeln!(out, "{:<width$}  {:>6}  {:>7}  {:>9}", "class", "F1", "support", "predicted");
        for c in &self.per_class_f1 {
            let f1 = c.f1.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
            let _ = writeln!(out, "{:<width$}  {:>6}  {:>7}  {:>9}", c.label, f1, c.support, c.predicted);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEvaluation {
    pub report: EvalReport,
    /// Instances with gold but no prediction.
    pub gold_only: usize,
    /// Instances with a prediction but no gold.
    pub pred_only: usize,
    pub per_decade: BTreeMap<i32, EvalReport>,
}

fn report_for(pairs: &[(FineLabel, FineLabel)], level: Level) -> Result<EvalReport, EvalError> {
    let classes = level_classes(level);
    let gold: Vec<String> = pairs.iter().map(|(g, _)| level_key(*g, level)).collect();
    let pred: Vec<String> = pairs.iter().map(|(_, p)| level_key(*p, level)).collect();
    let confusion = confusion_matrix(&gold, &pred, &classes)?;
    Ok(EvalReport {
        level,
        n: pairs.len(),
        macro_f1: macro_f1(&confusion)?,
        per_class_f1: per_class_f1(&confusion),
        cohen_kappa: cohen_kappa(&gold, &pred)?,
        confusion,
    })
}

/// Scores predictions against gold consensus on their shared instances.
///
/// At the high level both sides are projected from their fine labels. With
/// `decades`, a report is also produced for every decade that has scored
/// instances.
pub fn evaluate_run(
    gold: &BTreeMap<String, FineLabel>,
    predictions: &BTreeMap<String, FineLabel>,
    level: Level,
    decades: Option<&BTreeMap<String, i32>>,
) -> Result<RunEvaluation, EvalError> {
    let shared: Vec<(&String, FineLabel, FineLabel)> = gold
        .iter()
        .filter_map(|(id, g)| predictions.get(id).map(|p| (id, *g, *p)))
        .collect();
    if shared.is_empty() {
        return Err(EvalError::EmptyIntersection);
    }
    let all: Vec<_> = shared.iter().map(|(_, g, p)| (*g, *p)).collect();
    let report = report_for(&all, level)?;

    let mut per_decade = BTreeMap::new();
    if let Some(decades) = decades {
        let mut buckets: BTreeMap<i32, Vec<(FineLabel, FineLabel)>> = BTreeMap::new();
        for (id, g, p) in &shared {
            if let Some(d) = decades.get(*id) {
                buckets.entry(*d).or_default().push((*g, *p));
            }
        }
        for (d, pairs) in buckets {
            per_decade.insert(d, report_for(&pairs, level)?);
        }
    }
    Ok(RunEvaluation {
        report,
        gold_only: gold.len() - shared.len(),
        pred_only: predictions.len() - shared.len(),
        per_decade,
    })
}

/// One line of a gold file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldRecord {
    pub instance_id: String,
    pub annotator_id: String,
    pub fine_label: FineLabel,
}

/// Groups gold records by annotator. A later record for the same
/// (annotator, instance) replaces an earlier one.
pub fn rater_labels(records: &[GoldRecord]) -> RaterLabels {
    let mut out: RaterLabels = BTreeMap::new();
    for r in records {
        out.entry(r.annotator_id.clone())
            .or_default()
            .insert(r.instance_id.clone(), r.fine_label);
    }
    out
}

/// Majority-vote consensus per instance; tied instances are returned separately.
pub fn consensus(raters: &RaterLabels) -> (BTreeMap<String, FineLabel>, BTreeSet<String>) {
    let mut ballots: BTreeMap<&String, Vec<FineLabel>> = BTreeMap::new();
    for labels in raters.values() {
        for (inst, l) in labels {
            ballots.entry(inst).or_default().push(*l);
        }
    }
    let mut agreed = BTreeMap::new();
    let mut ties = BTreeSet::new();
    for (inst, votes) in ballots {
        match majority_vote(&votes) {
            Vote::Winner(l) => {
                agreed.insert(inst.clone(), l);
            }
            Vote::Tie => {
                ties.insert(inst.clone());
            }
        }
    }
    (agreed, ties)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::Subtype;

    #[test]
    fn confusion_examples() {
        let cm = confusion_matrix(&["A", "B"], &["A", "B"], &["A", "B"]).unwrap();
        assert_eq!(cm.counts, vec![vec![1, 0], vec![0, 1]]);
        let cm = confusion_matrix(&["A", "A"], &["B", "B"], &["A", "B"]).unwrap();
        assert_eq!(cm.counts[0][1], 2);
        assert_eq!(
            confusion_matrix(&["A"], &["A", "B"], &["A", "B"]),
            Err(EvalError::LengthMismatch { gold: 1, pred: 2 })
        );
        assert!(matches!(
            confusion_matrix(&["A"], &["C"], &["A", "B"]),
            Err(EvalError::UnknownClass(_))
        ));
    }

    #[test]
    fn macro_f1_examples() {
        let cls = ["A", "B", "C"];
        let cm = confusion_matrix(&["A", "B"], &["A", "B"], &cls).unwrap();
        assert_eq!(macro_f1(&cm).unwrap(), 1.0);

        // A: 2/3, B: 1/2, C: 0
        let cm = confusion_matrix(&["A", "A", "B", "C"], &["A", "B", "B", "B"], &cls).unwrap();
        let expected = (2.0 / 3.0 + 0.5 + 0.0) / 3.0;
        assert!((macro_f1(&cm).unwrap() - expected).abs() < 1e-15);
        assert!((macro_f1(&cm).unwrap() - 0.3889).abs() < 5e-5);

        let cm = confusion_matrix(&["A", "A"], &["B", "B"], &cls).unwrap();
        assert_eq!(macro_f1(&cm).unwrap(), 0.0);

        let cm = confusion_matrix::<&str>(&[], &[], &cls).unwrap();
        assert_eq!(macro_f1(&cm), Err(EvalError::EmptyMatrix));
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(cohen_kappa(&["A", "B", "A"], &["A", "B", "A"]).unwrap(), 1.0);
        assert_eq!(cohen_kappa(&["A", "A", "B", "B"], &["A", "B", "A", "B"]).unwrap(), 0.0);
        assert_eq!(cohen_kappa::<&str>(&[], &[]), Err(EvalError::EmptyInput));
        assert_eq!(cohen_kappa(&["A", "A"], &["A", "A"]).unwrap(), 1.0);
        assert!(matches!(cohen_kappa(&["A"], &["A", "B"]), Err(EvalError::LengthMismatch { .. })));
    }

    const COMP: FineLabel = FineLabel::Solidarity(Subtype::Compassionate);
    const GROUP_ANTI: FineLabel = FineLabel::AntiSolidarity(Subtype::GroupBased);

    #[test]
    fn vote_examples() {
        assert_eq!(majority_vote(&[COMP, COMP, GROUP_ANTI]), Vote::Winner(COMP));
        assert_eq!(majority_vote(&[COMP, GROUP_ANTI]), Vote::Tie);
        assert_eq!(majority_vote(&[GROUP_ANTI; 3]), Vote::Winner(GROUP_ANTI));
        assert_eq!(majority_vote::<FineLabel>(&[]), Vote::Tie);
    }

    fn raters(rows: &[(&str, &[FineLabel])]) -> RaterLabels {
        rows.iter()
            .map(|(r, labels)| {
                let m = labels.iter().enumerate().map(|(i, l)| (format!("i{i}"), *l)).collect();
                (r.to_string(), m)
            })
            .collect()
    }

    const A: FineLabel = FineLabel::Mixed;
    const B: FineLabel = FineLabel::None;

    #[test]
    fn loo_examples() {
        let r = raters(&[("a1", &[A, A]), ("a2", &[A, B]), ("a3", &[A, B])]);
        let ub = loo_upper_bound(&r, Level::Fine).unwrap();
        assert!((ub - 7.0 / 9.0).abs() < 1e-12);

        let same = raters(&[("a1", &[A, B]), ("a2", &[A, B]), ("a3", &[A, B])]);
        assert_eq!(loo_upper_bound(&same, Level::High).unwrap(), 1.0);

        let one = raters(&[("a1", &[A])]);
        assert!(matches!(
            loo_upper_bound(&one, Level::High),
            Err(EvalError::TooFewAnnotators { .. })
        ));
    }

    #[test]
    fn averaged_confusion() {
        let same = raters(&[("a1", &[A, B, B]), ("a2", &[A, B, B]), ("a3", &[A, B, B])]);
        let c = averaged_loo_confusion(&same, Level::High).unwrap();
        let (mixed, none) = (2, 3);
        assert_eq!(c.counts[mixed][mixed], 1.0);
        assert_eq!(c.counts[none][none], 2.0);
        assert_eq!(c.counts.iter().flatten().sum::<f64>(), 3.0);

        let two = raters(&[("a1", &[A]), ("a2", &[A])]);
        assert!(matches!(
            averaged_loo_confusion(&two, Level::High),
            Err(EvalError::TooFewAnnotators { .. })
        ));
    }

    #[test]
    fn pairwise_kappa() {
        let two = raters(&[("a1", &[A, B]), ("a2", &[A, B])]);
        assert_eq!(avg_pairwise_kappa(&two, Level::Fine).unwrap().mean, 1.0);

        // κ(a1,a2)=1, κ(a1,a3)=0, κ(a2,a3)=0
        let three = raters(&[("a1", &[A, A, B, B]), ("a2", &[A, A, B, B]), ("a3", &[A, B, A, B])]);
        let k = avg_pairwise_kappa(&three, Level::Fine).unwrap();
        assert!((k.mean - 1.0 / 3.0).abs() < 1e-15);

        let mut disjoint = raters(&[("a1", &[A])]);
        disjoint.insert("a2".into(), BTreeMap::from([("other".to_string(), A)]));
        assert_eq!(avg_pairwise_kappa(&disjoint, Level::Fine), Err(EvalError::NoOverlap));
    }

    #[test]
    fn evaluate_run_examples() {
        let gold: BTreeMap<String, FineLabel> =
            [("x", COMP), ("y", B), ("z", GROUP_ANTI)].iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let run = evaluate_run(&gold, &gold, Level::Fine, None).unwrap();
        assert_eq!(run.report.macro_f1, 1.0);
        assert_eq!(run.report.cohen_kappa, 1.0);
        assert_eq!(run.report.n, 3);

        let other: BTreeMap<String, FineLabel> = [("q".to_string(), COMP)].into();
        assert_eq!(
            evaluate_run(&gold, &other, Level::High, None),
            Err(EvalError::EmptyIntersection)
        );
    }

    #[test]
    fn high_level_projects_fine_labels() {
        let gold: BTreeMap<String, FineLabel> = [("x".to_string(), FineLabel::SolidarityNoSubtype)].into();
        let pred: BTreeMap<String, FineLabel> = [("x".to_string(), COMP)].into();
        let high = evaluate_run(&gold, &pred, Level::High, None).unwrap();
        assert_eq!(high.report.macro_f1, 1.0);
        let fine = evaluate_run(&gold, &pred, Level::Fine, None).unwrap();
        assert_eq!(fine.report.macro_f1, 0.0);
    }

    #[test]
    fn consensus_splits_ties() {
        let r = raters(&[("a1", &[A, A]), ("a2", &[A, B])]);
        let (agreed, ties) = consensus(&r);
        assert_eq!(agreed.get("i0"), Some(&A));
        assert!(ties.contains("i1"));
    }
}

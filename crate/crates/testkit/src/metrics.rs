use std::collections::BTreeMap;

/// `m[g][p]` by scanning the data once per cell.
pub fn confusion(gold: &[&str], pred: &[&str], classes: &[&str]) -> Vec<Vec<u64>> {
    classes
        .iter()
        .map(|g| {
            classes
                .iter()
                .map(|p| gold.iter().zip(pred).filter(|(a, b)| *a == g && *b == p).count() as u64)
                .collect()
        })
        .collect()
}

/// Per-class F1 as the harmonic mean of precision and recall; `None` for a
/// class absent from both sequences, 0 when either ratio is undefined or zero.
pub fn per_class_f1(gold: &[&str], pred: &[&str], classes: &[&str]) -> Vec<Option<f64>> {
    classes
        .iter()
        .map(|c| {
            let tp = gold.iter().zip(pred).filter(|(g, p)| *g == c && *p == c).count() as f64;
            let in_gold = gold.iter().filter(|g| *g == c).count() as f64;
            let in_pred = pred.iter().filter(|p| *p == c).count() as f64;
            if in_gold == 0.0 && in_pred == 0.0 {
                return None;
            }
            if in_gold == 0.0 || in_pred == 0.0 || tp == 0.0 {
                return Some(0.0);
            }
            let precision = tp / in_pred;
            let recall = tp / in_gold;
            Some(2.0 * precision * recall / (precision + recall))
        })
        .collect()
}

pub fn macro_f1(gold: &[&str], pred: &[&str], classes: &[&str]) -> f64 {
    let scores: Vec<f64> = per_class_f1(gold, pred, classes).into_iter().flatten().collect();
    scores.iter().sum::<f64>() / scores.len() as f64
}

pub fn cohen_kappa(a: &[&str], b: &[&str]) -> f64 {
    let n = a.len() as f64;
    let p_o = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;
    let mut labels: Vec<&str> = a.iter().chain(b).copied().collect();
    labels.sort();
    labels.dedup();
    let p_e: f64 = labels
        .iter()
        .map(|l| {
            let pa = a.iter().filter(|x| *x == l).count() as f64 / n;
            let pb = b.iter().filter(|x| *x == l).count() as f64 / n;
            pa * pb
        })
        .sum();
    if p_e == 1.0 {
        return 1.0;
    }
    (p_o - p_e) / (1.0 - p_e)
}

/// Pearson r from raw sums.
pub fn pearson_r(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// Label held by the strict plurality of `labels`, if any.
pub fn plurality<'a>(labels: &[&'a str]) -> Option<&'a str> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let best = *counts.values().max()?;
    let winners: Vec<&str> = counts.iter().filter(|(_, c)| **c == best).map(|(l, _)| *l).collect();
    (winners.len() == 1).then(|| winners[0])
}

/// Leave-one-out human upper bound over annotators labelling the same items
/// (`raters[r][i]`, `None` = not labelled).
pub fn loo_upper_bound(raters: &[Vec<Option<&str>>], classes: &[&str]) -> f64 {
    let mut scores = Vec::new();
    for (held, own) in raters.iter().enumerate() {
        let mut gold = Vec::new();
        let mut pred = Vec::new();
        for (i, label) in own.iter().enumerate() {
            let Some(label) = label else { continue };
            let others: Vec<&str> = raters
                .iter()
                .enumerate()
                .filter(|(r, _)| *r != held)
                .filter_map(|(_, labels)| labels[i])
                .collect();
            if let Some(c) = plurality(&others) {
                gold.push(c);
                pred.push(*label);
            }
        }
        if !gold.is_empty() {
            scores.push(macro_f1(&gold, &pred, classes));
        }
    }
    scores.iter().sum::<f64>() / scores.len() as f64
}

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticItem {
    pub year: i32,
    pub keyword: String,
    /// Canonical fine label, e.g. `solidarity:compassionate` or `none`.
    pub label: String,
}

const SUBTYPES: [&str; 4] = ["group-based", "exchange-based", "compassionate", "empathic"];

/// Labelled instances whose label depends on the decade only, never on the
/// keyword. Keyword frequencies follow a 1/rank law; years are uniform over
/// 1950-2019. The solidarity share rises from 10% to 70% across the decades.
pub fn null_corpus(seed: u64, n: usize, num_keywords: usize) -> Vec<SyntheticItem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kw_weights = WeightedIndex::new((1..=num_keywords).map(|r| 1.0 / r as f64)).expect("keywords");
    (0..n)
        .map(|_| {
            let year = rng.gen_range(1950..2020);
            let step = ((year - 1950) / 10) as f64;
            let sol = 0.10 + 0.10 * step;
            let anti = 0.30 - 0.03 * step;
            let mixed = 0.05;
            let u: f64 = rng.gen();
            let sub = SUBTYPES[rng.gen_range(0..4)];
            let label = if u < sol {
                format!("solidarity:{sub}")
            } else if u < sol + anti {
                format!("anti-solidarity:{sub}")
            } else if u < sol + anti + mixed {
                "mixed".to_string()
            } else {
                "none".to_string()
            };
            SyntheticItem { year, keyword: format!("kw{:02}", kw_weights.sample(&mut rng)), label }
        })
        .collect()
}

/// Random gold/pred sequences over `k` classes named `c0..c{k-1}`; each
/// prediction copies gold with probability `agree`, otherwise it is uniform.
pub fn random_pair(rng: &mut impl Rng, n: usize, k: usize, agree: f64) -> (Vec<String>, Vec<String>, Vec<String>) {
    let classes: Vec<String> = (0..k).map(|i| format!("c{i}")).collect();
    let gold: Vec<String> = (0..n).map(|_| classes[rng.gen_range(0..k)].clone()).collect();
    let pred = gold
        .iter()
        .map(|g| if rng.gen_bool(agree) { g.clone() } else { classes[rng.gen_range(0..k)].clone() })
        .collect();
    (classes, gold, pred)
}

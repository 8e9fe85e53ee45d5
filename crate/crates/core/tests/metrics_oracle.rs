use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use solidarity_core::evaluation::{cohen_kappa, confusion_matrix, macro_f1, per_class_f1};
use solidarity_testkit::{metrics as oracle, synthetic::random_pair};

fn strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

fn check_case(classes: &[String], gold: &[String], pred: &[String]) {
    let (c, g, p) = (strs(classes), strs(gold), strs(pred));
    let cm = confusion_matrix(gold, pred, classes).unwrap();
    assert_eq!(cm.counts, oracle::confusion(&g, &p, &c));
    let f1: Vec<Option<f64>> = per_class_f1(&cm).into_iter().map(|s| s.f1).collect();
    for (a, b) in f1.iter().zip(oracle::per_class_f1(&g, &p, &c)) {
        match (a, b) {
            (Some(a), Some(b)) => assert!((a - b).abs() <= 1e-12, "{a} vs {b}"),
            (None, None) => {}
            other => panic!("presence mismatch {other:?}"),
        }
    }
    let m = macro_f1(&cm).unwrap();
    assert!((m - oracle::macro_f1(&g, &p, &c)).abs() <= 1e-12);
    let k = cohen_kappa(gold, pred).unwrap();
    assert!((k - oracle::cohen_kappa(&g, &p)).abs() <= 1e-12, "{k}");
}

#[test]
fn thousand_random_cases_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let n = rng.gen_range(1..=100);
        let k = rng.gen_range(1..=10);
        let agree = rng.gen_range(0.0..1.0);
        let (classes, gold, pred) = random_pair(&mut rng, n, k, agree);
        check_case(&classes, &gold, &pred);
    }
}

fn case() -> impl Strategy<Value = (Vec<String>, Vec<String>, Vec<String>)> {
    (1usize..=10, 1usize..=100).prop_flat_map(|(k, n)| {
        let classes: Vec<String> = (0..k).map(|i| format!("c{i}")).collect();
        (
            Just(classes),
            proptest::collection::vec(0..k, n),
            proptest::collection::vec(0..k, n),
        )
            .prop_map(|(classes, g, p)| {
                let g = g.into_iter().map(|i| classes[i].clone()).collect();
                let p = p.into_iter().map(|i| classes[i].clone()).collect();
                (classes, g, p)
            })
    })
}

proptest! {
    #[test]
    fn matches_oracle((classes, gold, pred) in case()) {
        check_case(&classes, &gold, &pred);
    }

    #[test]
    fn kappa_symmetric((_c, gold, pred) in case()) {
        let ab = cohen_kappa(&gold, &pred).unwrap();
        let ba = cohen_kappa(&pred, &gold).unwrap();
        prop_assert!((ab - ba).abs() < 1e-15);
        prop_assert!((-1.0..=1.0).contains(&ab));
    }

    #[test]
    fn relabeling_invariant((classes, gold, pred) in case(), shift in 0usize..10) {
        let k = classes.len();
        let rename = |l: &String| {
            let i: usize = l[1..].parse().unwrap();
            format!("r{}", (i + shift) % k)
        };
        let g2: Vec<String> = gold.iter().map(rename).collect();
        let p2: Vec<String> = pred.iter().map(rename).collect();
        let c2: Vec<String> = classes.iter().map(rename).collect();
        let m1 = macro_f1(&confusion_matrix(&gold, &pred, &classes).unwrap()).unwrap();
        let m2 = macro_f1(&confusion_matrix(&g2, &p2, &c2).unwrap()).unwrap();
        prop_assert!((m1 - m2).abs() < 1e-12);
        prop_assert!((cohen_kappa(&gold, &pred).unwrap() - cohen_kappa(&g2, &p2).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn totals_and_ranges((classes, gold, pred) in case()) {
        let cm = confusion_matrix(&gold, &pred, &classes).unwrap();
        prop_assert_eq!(cm.total() as usize, gold.len());
        for s in per_class_f1(&cm) {
            if let Some(f) = s.f1 {
                prop_assert!((0.0..=1.0).contains(&f));
            }
        }
    }
}

#[test]
fn independent_sequences_have_near_zero_kappa() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let (_, gold, pred) = random_pair(&mut rng, 10_000, 4, 0.0);
        assert!(cohen_kappa(&gold, &pred).unwrap().abs() < 0.05);
    }
}

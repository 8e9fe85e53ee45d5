use proptest::prelude::*;
use solidarity_core::prediction::Status;
use solidarity_core::taxonomy::{FineLabel, HighLevel};
use solidarity_core::trends::{
    decade_shares_high, decade_shares_subtypes, pearson, LabeledInstance, YearRange, DEFAULT_EXCLUSION,
};
use solidarity_testkit::metrics::pearson_r;

fn item(i: usize, year: i32, label: usize, status: Status) -> LabeledInstance {
    let fine = FineLabel::ALL[label % FineLabel::ALL.len()];
    LabeledInstance {
        instance_id: format!("i{i}"),
        year,
        keyword: "k".into(),
        status,
        high: Some(fine.high()),
        fine: Some(fine),
    }
}

fn items() -> impl Strategy<Value = Vec<LabeledInstance>> {
    proptest::collection::vec((1900i32..2030, 0usize..12, 0u8..10), 1..400).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (y, l, s))| {
                let status = match s {
                    0 => Status::Unparseable,
                    1 => Status::BackendError,
                    _ => Status::Ok,
                };
                item(i, y, l, status)
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn subtype_shares_sum_to_100(items in items()) {
        if let Ok(series) = decade_shares_subtypes(&items, &[]) {
            let decades: Vec<i32> = series[0].points.iter().map(|p| p.decade).collect();
            for d in decades {
                let total: f64 = series.iter().map(|s| s.share_at(d).unwrap()).sum();
                prop_assert!((total - 100.0).abs() <= 1e-9, "{total}");
            }
        }
    }

    #[test]
    fn high_shares_leave_room_for_none(items in items()) {
        if let Ok(series) = decade_shares_high(&items, &[]) {
            for (i, p) in series[0].points.iter().enumerate() {
                let total: f64 = series.iter().map(|s| s.points[i].share).sum();
                prop_assert!(total <= 100.0 + 1e-9);
                let none = items
                    .iter()
                    .filter(|it| it.status == Status::Ok && it.decade() == p.decade && it.high == Some(HighLevel::None))
                    .count();
                let expected_none = 100.0 * none as f64 / p.n as f64;
                prop_assert!((100.0 - total - expected_none).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn exclusion_removes_exactly_30s_and_40s(items in items()) {
        let all = decade_shares_high(&items, &[]);
        let cut = decade_shares_high(&items, &[DEFAULT_EXCLUSION]);
        if let Ok(all) = all {
            let before: Vec<i32> = all[0].points.iter().map(|p| p.decade).collect();
            let expected: Vec<i32> = before.iter().copied().filter(|d| *d != 1930 && *d != 1940).collect();
            match cut {
                Ok(cut) => {
                    let after: Vec<i32> = cut[0].points.iter().map(|p| p.decade).collect();
                    prop_assert_eq!(after, expected);
                    for s in &cut {
                        let full = all.iter().find(|a| a.label == s.label).unwrap();
                        for p in &s.points {
                            prop_assert_eq!(Some(p.share), full.share_at(p.decade));
                        }
                    }
                }
                Err(_) => prop_assert!(expected.is_empty()),
            }
        }
    }

    #[test]
    fn pearson_affine_invariance(
        x in proptest::collection::vec(-100.0f64..100.0, 3..30),
        seed in proptest::collection::vec(-100.0f64..100.0, 30),
        a in 0.1f64..10.0,
        b in -50.0f64..50.0,
    ) {
        let y: Vec<f64> = seed[..x.len()].to_vec();
        if let Ok((r, _)) = pearson(&x, &y) {
            let xs: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let (r2, _) = pearson(&xs, &y).unwrap();
            prop_assert!((r - r2).abs() < 1e-9);
            let neg: Vec<f64> = x.iter().map(|v| -a * v + b).collect();
            let (r3, _) = pearson(&neg, &y).unwrap();
            prop_assert!((r + r3).abs() < 1e-9);
            prop_assert!((r - pearson_r(&x, &y)).abs() < 1e-9);
        }
    }
}

#[test]
fn custom_exclusion_ranges() {
    let items: Vec<_> = (0..10).map(|i| item(i, 1950 + 10 * i as i32, 0, Status::Ok)).collect();
    let s = decade_shares_high(&items, &[YearRange { start: 1965, end: 1971 }]).unwrap();
    let decades: Vec<i32> = s[0].points.iter().map(|p| p.decade).collect();
    assert!(!decades.contains(&1960) && !decades.contains(&1970));
    assert_eq!(decades.len(), 8);
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Protocol;
use crate::extraction::Instance;
use crate::taxonomy::TargetGroup;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct YearStats {
    pub sentences: usize,
    pub instances: BTreeMap<TargetGroup, usize>,
    /// Instances as a percentage of all sentences of the year.
    pub share_pct: BTreeMap<TargetGroup, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub years: BTreeMap<i32, YearStats>,
}

/// Per-year sentence totals and instance shares per target group.
pub fn corpus_stats(protocols: &[Protocol], instances: &[Instance]) -> CorpusStats {
    let mut years: BTreeMap<i32, YearStats> = BTreeMap::new();
    for p in protocols {
        years.entry(p.year()).or_default().sentences += p.sentence_count();
    }
    for inst in instances {
        *years
            .entry(inst.year)
            .or_default()
            .instances
            .entry(inst.target)
            .or_default() += 1;
    }
    for stats in years.values_mut() {
        stats.share_pct = stats
            .instances
            .iter()
            .map(|(t, &n)| {
                let share = if stats.sentences == 0 {
                    0.0
                } else {
                    100.0 * n as f64 / stats.sentences as f64
                };
                (*t, share)
            })
            .collect();
    }
    CorpusStats { years }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{PartyId, Sentence, Speech};
    use crate::extraction::{build_instances, KeywordSet};
    use chrono::NaiveDate;

    fn protocol(id: &str, n: usize, hits: usize) -> Protocol {
        let sentences = (0..n)
            .map(|i| Sentence {
                text: if i < hits { "Die Migranten kommen.".into() } else { "Nichts.".into() },
                index_in_speech: i,
                global_index: i,
            })
            .collect();
        Protocol {
            source_id: id.into(),
            date: NaiveDate::from_ymd_opt(1999, 5, 5).unwrap(),
            session_number: 1,
            legislative_period: 14,
            speeches: vec![Speech { speaker_name: "A".into(), party: PartyId::FDP, sentences }],
        }
    }

    #[test]
    fn share_is_ratio() {
        let p = vec![protocol("a", 100, 4)];
        let inst = build_instances(&p, &KeywordSet::builtin(TargetGroup::Migrant));
        let s = corpus_stats(&p, &inst);
        assert_eq!(s.years[&1999].sentences, 100);
        assert_eq!(s.years[&1999].share_pct[&TargetGroup::Migrant], 4.0);
    }

    #[test]
    fn empty_corpus() {
        assert!(corpus_stats(&[], &[]).years.is_empty());
    }

    #[test]
    fn same_year_summed() {
        let p = vec![protocol("a", 10, 1), protocol("b", 30, 3)];
        let inst = build_instances(&p, &KeywordSet::builtin(TargetGroup::Migrant));
        let s = corpus_stats(&p, &inst);
        assert_eq!(s.years[&1999].sentences, 40);
        assert_eq!(s.years[&1999].instances[&TargetGroup::Migrant], 4);
        assert_eq!(s.years[&1999].share_pct[&TargetGroup::Migrant], 10.0);
    }
}

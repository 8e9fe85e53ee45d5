//! Keyword-anchored instance extraction.
//!
//! A sentence becomes an instance when it contains at least one keyword of the
//! target group as a whole token. Tokens are maximal runs of alphabetic
//! characters (umlauts and ß included), and matching is case-sensitive, so
//! `Ausländer` never matches inside `Ausländerbehörde`.

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{PartyId, Protocol};
use crate::decade_of;
use crate::taxonomy::TargetGroup;

/// Number of context sentences kept on each side of the keyword sentence.
pub const CONTEXT_WINDOW: usize = 3;

const MIGRANT_KEYWORDS: &str = include_str!("../data/keywords/migrant.txt");
const WOMAN_KEYWORDS: &str = include_str!("../data/keywords/woman.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpecialRule {
    /// `Frau` directly followed by a capitalized word is a form of address.
    FrauBeforeName,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordSet {
    pub target: TargetGroup,
    pub keywords: Vec<String>,
    pub special_rules: Vec<SpecialRule>,
}

impl KeywordSet {
    /// Parses a keyword file: one keyword per line, blank lines and `#`
    /// comments ignored. Special rules follow from the target group.
    pub fn parse(target: TargetGroup, text: &str) -> Self {
        let mut keywords: Vec<String> = Vec::new();
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') || keywords.iter().any(|k| k == line) {
                continue;
            }
            keywords.push(line.to_string());
        }
        let special_rules = match target {
            TargetGroup::Woman => vec![SpecialRule::FrauBeforeName],
            TargetGroup::Migrant => Vec::new(),
        };
        KeywordSet { target, keywords, special_rules }
    }

    /// The shipped keyword list for a target group.
    pub fn builtin(target: TargetGroup) -> Self {
        let text = match target {
            TargetGroup::Migrant => MIGRANT_KEYWORDS,
            TargetGroup::Woman => WOMAN_KEYWORDS,
        };
        Self::parse(target, text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    pub start: usize,
    pub end: usize,
}

/// Splits text into maximal alphabetic runs with byte offsets.
pub fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        match (c.is_alphabetic(), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                tokens.push(Token { text: &text[s..i], start: s, end: i });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        tokens.push(Token { text: &text[s..], start: s, end: text.len() });
    }
    tokens
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrauDecision {
    Keep,
    Drop,
}

/// Decides whether the `Frau` token at `pos` refers to a woman.
///
/// Dropped iff the next token follows after whitespace only and starts with
/// an uppercase letter (`Frau Müller`). A sentence-final `Frau`, or one
/// followed by punctuation (`die Frau, die ...`), is kept.
pub fn frau_rule(text: &str, tokens: &[Token<'_>], pos: usize) -> FrauDecision {
    let Some(next) = tokens.get(pos + 1) else {
        return FrauDecision::Keep;
    };
    let gap = &text[tokens[pos].end..next.start];
    let adjacent = !gap.is_empty() && gap.chars().all(char::is_whitespace);
    let capitalized = next.text.chars().next().is_some_and(char::is_uppercase);
    if adjacent && capitalized {
        FrauDecision::Drop
    } else {
        FrauDecision::Keep
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordHit {
    pub keyword: String,
    /// Position of the keyword in the keyword list.
    pub rank: usize,
}

/// Keyword hits in a sentence, one per keyword, in keyword-list order.
pub fn match_keywords(sentence: &str, ks: &KeywordSet) -> Vec<KeywordHit> {
    let tokens = tokenize(sentence);
    let frau_rule_on = ks.special_rules.contains(&SpecialRule::FrauBeforeName);
    ks.keywords
        .iter()
        .enumerate()
        .filter(|(_, kw)| {
            tokens.iter().enumerate().any(|(pos, t)| {
                t.text == kw.as_str()
                    && !(frau_rule_on
                        && t.text == "Frau"
                        && frau_rule(sentence, &tokens, pos) == FrauDecision::Drop)
            })
        })
        .map(|(rank, kw)| KeywordHit { keyword: kw.clone(), rank })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    pub target: TargetGroup,
    /// First hit in keyword-list order.
    pub keyword: String,
    /// All hits in keyword-list order.
    pub keywords: Vec<String>,
    pub text: String,
    pub context_left: Vec<String>,
    pub context_right: Vec<String>,
    pub date: NaiveDate,
    pub year: i32,
    pub decade: i32,
    pub speaker: String,
    pub party: PartyId,
    pub protocol_id: String,
    pub session: u32,
    pub period: u32,
    pub speech_idx: usize,
    pub sentence_idx: usize,
    pub global_idx: usize,
}

impl Instance {
    /// Context and keyword sentence in document order.
    pub fn full_text(&self) -> String {
        self.context_left
            .iter()
            .chain(std::iter::once(&self.text))
            .chain(self.context_right.iter())
            .map(String::as_str)
            .collect::<Vec<_>>()
            .join(" ")
    }
}

pub fn instances_to_jsonl(instances: &[Instance]) -> String {
    let mut out = String::new();
    for i in instances {
        out.push_str(&serde_json::to_string(i).expect("instance serializes"));
        out.push('\n');
    }
    out
}

/// Parses an instances file; errors carry the 1-based line number.
pub fn parse_instances_jsonl(text: &str) -> Result<Vec<Instance>, (usize, String)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| (i + 1, e.to_string())))
        .collect()
}

/// Stable id derived from the source coordinates.
pub fn instance_id(protocol_id: &str, global_idx: usize, target: TargetGroup) -> String {
    let mut h = Sha256::new();
    h.update(protocol_id.as_bytes());
    h.update([0x1f]);
    h.update(global_idx.to_string().as_bytes());
    h.update([0x1f]);
    h.update(target.as_str().as_bytes());
    hex::encode(&h.finalize()[..8])
}

fn protocol_instances(protocol: &Protocol, ks: &KeywordSet) -> Vec<Instance> {
    let year = protocol.date.year();
    let mut out = Vec::new();
    for (speech_idx, speech) in protocol.speeches.iter().enumerate() {
        let texts: Vec<&str> = speech.sentences.iter().map(|s| s.text.as_str()).collect();
        for (i, sentence) in speech.sentences.iter().enumerate() {
            let hits = match_keywords(&sentence.text, ks);
            let Some(first) = hits.first() else { continue };
            let left = i.saturating_sub(CONTEXT_WINDOW);
            let right = (i + 1 + CONTEXT_WINDOW).min(texts.len());
            out.push(Instance {
                id: instance_id(&protocol.source_id, sentence.global_index, ks.target),
                target: ks.target,
                keyword: first.keyword.clone(),
                keywords: hits.iter().map(|h| h.keyword.clone()).collect(),
                text: sentence.text.clone(),
                context_left: texts[left..i].iter().map(|s| s.to_string()).collect(),
                context_right: texts[i + 1..right].iter().map(|s| s.to_string()).collect(),
                date: protocol.date,
                year,
                decade: decade_of(year),
                speaker: speech.speaker_name.clone(),
                party: speech.party,
                protocol_id: protocol.source_id.clone(),
                session: protocol.session_number,
                period: protocol.legislative_period,
                speech_idx,
                sentence_idx: i,
                global_idx: sentence.global_index,
            });
        }
    }
    out
}

/// One instance per keyword-bearing sentence, in protocol then sentence order.
///
/// Context windows never cross speech boundaries.
pub fn build_instances(protocols: &[Protocol], ks: &KeywordSet) -> Vec<Instance> {
    protocols
        .par_iter()
        .map(|p| protocol_instances(p, ks))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordSeries {
    pub keyword: String,
    pub total: usize,
    /// Year → percentage of this keyword's occurrences falling in that year.
    pub years: BTreeMap<i32, f64>,
}

/// Per-keyword yearly distribution, each keyword normalized to 100 %.
///
/// Every hit keyword of an instance counts, not only the primary one.
pub fn keyword_distribution(instances: &[Instance], keywords: &[String]) -> Vec<KeywordSeries> {
    keywords
        .iter()
        .map(|kw| {
            let mut counts: BTreeMap<i32, usize> = BTreeMap::new();
            for inst in instances.iter().filter(|i| i.keywords.contains(kw)) {
                *counts.entry(inst.year).or_default() += 1;
            }
            let total: usize = counts.values().sum();
            let years = counts
                .into_iter()
                .map(|(y, c)| (y, 100.0 * c as f64 / total as f64))
                .collect();
            KeywordSeries { keyword: kw.clone(), total, years }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Sentence, Speech};

    fn migrant() -> KeywordSet {
        KeywordSet::builtin(TargetGroup::Migrant)
    }

    fn woman() -> KeywordSet {
        KeywordSet::builtin(TargetGroup::Woman)
    }

    fn hit_words(s: &str, ks: &KeywordSet) -> Vec<String> {
        match_keywords(s, ks).into_iter().map(|h| h.keyword).collect()
    }

    #[test]
    fn builtin_sizes() {
        assert_eq!(migrant().keywords.len(), 32);
        assert_eq!(woman().keywords.len(), 18);
        assert_eq!(woman().special_rules, vec![SpecialRule::FrauBeforeName]);
    }

    #[test]
    fn keyword_matching_examples() {
        assert_eq!(hit_words("Die Flüchtlinge kamen an.", &migrant()), vec!["Flüchtlinge"]);
        assert!(hit_words("Ausländerbehörde prüft.", &migrant()).is_empty());
        assert_eq!(hit_words("Flüchtlinge trafen Flüchtlinge.", &migrant()), vec!["Flüchtlinge"]);
        assert!(hit_words("die flüchtlinge", &migrant()).is_empty());
        assert_eq!(
            hit_words("Ausländer und Flüchtlinge", &migrant()),
            vec!["Flüchtlinge", "Ausländer"]
        );
    }

    fn frau_at(s: &str) -> FrauDecision {
        let tokens = tokenize(s);
        let pos = tokens.iter().position(|t| t.text == "Frau").unwrap();
        frau_rule(s, &tokens, pos)
    }

    #[test]
    fn frau_rule_examples() {
        assert_eq!(frau_at("Frau Müller sprach."), FrauDecision::Drop);
        assert_eq!(frau_at("Die Frau arbeitet hier."), FrauDecision::Keep);
        assert_eq!(frau_at("…sagte die Frau."), FrauDecision::Keep);
        assert_eq!(frau_at("eine Frau, Mutter von drei Kindern"), FrauDecision::Keep);
        assert!(hit_words("Frau Müller sprach.", &woman()).is_empty());
        assert_eq!(hit_words("Frau Müller ehrt jede Frau.", &woman()), vec!["Frau"]);
        assert_eq!(hit_words("Frauen Müller", &woman()), vec!["Frauen"]);
    }

    fn speech(n: usize, hit_at: &[usize], offset: usize) -> Speech {
        Speech {
            speaker_name: "X".into(),
            party: PartyId::SPD,
            sentences: (0..n)
                .map(|i| Sentence {
                    text: if hit_at.contains(&i) {
                        format!("Satz {i} über Flüchtlinge.")
                    } else {
                        format!("Satz {i}.")
                    },
                    index_in_speech: i,
                    global_index: offset + i,
                })
                .collect(),
        }
    }

    fn protocol(speeches: Vec<Speech>) -> Protocol {
        Protocol {
            source_id: "P".into(),
            date: NaiveDate::from_ymd_opt(1957, 3, 1).unwrap(),
            session_number: 1,
            legislative_period: 2,
            speeches,
        }
    }

    #[test]
    fn context_windows() {
        let p = protocol(vec![speech(12, &[5], 0)]);
        let inst = build_instances(&[p], &migrant());
        assert_eq!(inst.len(), 1);
        assert_eq!(inst[0].context_left, vec!["Satz 2.", "Satz 3.", "Satz 4."]);
        assert_eq!(inst[0].context_right, vec!["Satz 6.", "Satz 7.", "Satz 8."]);
        assert_eq!(inst[0].decade, 1950);

        let p = protocol(vec![speech(12, &[0], 0)]);
        assert!(build_instances(&[p], &migrant())[0].context_left.is_empty());

        let p = protocol(vec![speech(2, &[], 0), speech(3, &[1], 2), speech(2, &[], 5)]);
        let inst = build_instances(&[p], &migrant());
        assert_eq!(inst[0].context_left, vec!["Satz 0."]);
        assert_eq!(inst[0].context_right, vec!["Satz 2."]);
    }

    #[test]
    fn ids_are_deterministic_and_distinct() {
        let p = protocol(vec![speech(6, &[1, 4], 0)]);
        let a = build_instances(std::slice::from_ref(&p), &migrant());
        let b = build_instances(&[p], &migrant());
        assert_eq!(a, b);
        assert_ne!(a[0].id, a[1].id);
        assert_ne!(
            instance_id("P", 1, TargetGroup::Migrant),
            instance_id("P", 1, TargetGroup::Woman)
        );
    }

    fn inst_in(year: i32, kw: &str) -> Instance {
        let p = protocol(vec![speech(1, &[0], 0)]);
        let mut i = build_instances(&[p], &migrant()).remove(0);
        i.year = year;
        i.keyword = kw.into();
        i.keywords = vec![kw.into()];
        i
    }

    #[test]
    fn keyword_distribution_examples() {
        let inst = vec![
            inst_in(1950, "Ausländer"),
            inst_in(1950, "Ausländer"),
            inst_in(1960, "Ausländer"),
            inst_in(1960, "Ausländer"),
            inst_in(1971, "Migration"),
        ];
        let kws: Vec<String> = ["Ausländer", "Migration", "Aussiedler"].map(String::from).to_vec();
        let d = keyword_distribution(&inst, &kws);
        assert_eq!(d[0].years, BTreeMap::from([(1950, 50.0), (1960, 50.0)]));
        assert_eq!(d[1].years, BTreeMap::from([(1971, 100.0)]));
        assert!(d[2].years.is_empty());
        assert_eq!(d[2].total, 0);
    }
}

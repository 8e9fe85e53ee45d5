//! The single alias table for label spellings.
//!
//! Input text is lowercased and split into words on every non-alphanumeric
//! character, so `Anti_Solidarity`, `anti-solidarity` and `ANTI SOLIDARITY`
//! all normalize to `["anti", "solidarity"]`. A lookup succeeds only if the
//! full word sequence equals an alias.
//!
//! | label            | aliases (normalized)                                         |
//! |------------------|--------------------------------------------------------------|
//! | solidarity       | solidarity, solidarität, solidarisch*                        |
//! | anti-solidarity  | anti solidarity, antisolidarity, anti solidarität, antisolidarität, antisolidarisch*, anti solidarisch* |
//! | mixed            | mixed, mixed stance, gemischt, ambivalent*                   |
//! | none             | none, no stance, keine*, neutral*                            |
//! | group-based      | group based, groupbased, gruppenbasiert, group*              |
//! | exchange-based   | exchange based, exchangebased, austauschbasiert, exchange*   |
//! | compassionate    | compassionate, compassion*, mitfühlend, mitgefühl*            |
//! | empathic         | empathic, empathetic, empathisch, empathy*                   |
//!
//! Fine labels are a stance alias combined with a subtype alias in either
//! order (`solidarity group based`, `group based solidarity`), a stance alias
//! followed by `unspecified` / `no subtype` / `without subtype` / `ohne subtyp`
//! for the gold-only forms, or a mixed/none alias.
//!
//! Aliases marked `*` are accepted when a whole answer is parsed but are not
//! used when scanning free text for the last label mention, since they occur
//! too often in ordinary prose.

use std::collections::HashMap;
use std::sync::LazyLock;

use super::{FineLabel, HighLevel, Subtype};

/// Lowercases and splits on non-alphanumeric characters.
pub fn normalize_words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
        .collect()
}

#[derive(Debug, Clone)]
pub struct Alias<T> {
    pub words: Vec<String>,
    pub label: T,
    /// Whether this alias may be picked up by free-text scanning.
    pub scannable: bool,
}

#[derive(Debug)]
pub struct AliasTable {
    high: Vec<Alias<HighLevel>>,
    subtype: Vec<Alias<Subtype>>,
    fine: Vec<Alias<FineLabel>>,
    high_index: HashMap<Vec<String>, HighLevel>,
    subtype_index: HashMap<Vec<String>, Subtype>,
    fine_index: HashMap<Vec<String>, FineLabel>,
}

pub static ALIASES: LazyLock<AliasTable> = LazyLock::new(AliasTable::build);

const HIGH: &[(HighLevel, &str, bool)] = &[
    (HighLevel::Solidarity, "solidarity", true),
    (HighLevel::Solidarity, "solidarität", true),
    (HighLevel::Solidarity, "solidarisch", false),
    (HighLevel::AntiSolidarity, "anti solidarity", true),
    (HighLevel::AntiSolidarity, "antisolidarity", true),
    (HighLevel::AntiSolidarity, "anti solidarität", true),
    (HighLevel::AntiSolidarity, "antisolidarität", true),
    (HighLevel::AntiSolidarity, "antisolidarisch", false),
    (HighLevel::AntiSolidarity, "anti solidarisch", false),
    (HighLevel::Mixed, "mixed", true),
    (HighLevel::Mixed, "mixed stance", true),
    (HighLevel::Mixed, "gemischt", true),
    (HighLevel::Mixed, "ambivalent", false),
    (HighLevel::None, "none", true),
    (HighLevel::None, "no stance", true),
    (HighLevel::None, "keine", false),
    (HighLevel::None, "neutral", false),
];

const SUBTYPE: &[(Subtype, &str, bool)] = &[
    (Subtype::GroupBased, "group based", true),
    (Subtype::GroupBased, "groupbased", true),
    (Subtype::GroupBased, "gruppenbasiert", true),
    (Subtype::GroupBased, "group", false),
    (Subtype::ExchangeBased, "exchange based", true),
    (Subtype::ExchangeBased, "exchangebased", true),
    (Subtype::ExchangeBased, "austauschbasiert", true),
    (Subtype::ExchangeBased, "exchange", false),
    (Subtype::Compassionate, "compassionate", true),
    (Subtype::Compassionate, "compassion", false),
    (Subtype::Compassionate, "mitfühlend", true),
    (Subtype::Compassionate, "mitgefühl", false),
    (Subtype::Empathic, "empathic", true),
    (Subtype::Empathic, "empathetic", true),
    (Subtype::Empathic, "empathisch", true),
    (Subtype::Empathic, "empathy", false),
];

const UNSPECIFIED: &[&str] = &["unspecified", "no subtype", "without subtype", "ohne subtyp"];

fn words(s: &str) -> Vec<String> {
    s.split(' ').map(str::to_string).collect()
}

impl AliasTable {
    fn build() -> Self {
        let high: Vec<_> = HIGH
            .iter()
            .map(|&(label, s, scannable)| Alias { words: words(s), label, scannable })
            .collect();
        let subtype: Vec<_> = SUBTYPE
            .iter()
            .map(|&(label, s, scannable)| Alias { words: words(s), label, scannable })
            .collect();

        let mut fine = Vec::new();
        for h in &high {
            let (with, without): (fn(Subtype) -> FineLabel, FineLabel) = match h.label {
                HighLevel::Solidarity => (FineLabel::Solidarity, FineLabel::SolidarityNoSubtype),
                HighLevel::AntiSolidarity => {
                    (FineLabel::AntiSolidarity, FineLabel::AntiSolidarityNoSubtype)
                }
                HighLevel::Mixed => {
                    fine.push(Alias { words: h.words.clone(), label: FineLabel::Mixed, scannable: h.scannable });
                    continue;
                }
                HighLevel::None => {
                    fine.push(Alias { words: h.words.clone(), label: FineLabel::None, scannable: h.scannable });
                    continue;
                }
            };
            for t in &subtype {
                let scannable = h.scannable && t.scannable;
                let label = with(t.label);
                fine.push(Alias { words: [h.words.clone(), t.words.clone()].concat(), label, scannable });
                fine.push(Alias { words: [t.words.clone(), h.words.clone()].concat(), label, scannable });
            }
            for u in UNSPECIFIED {
                fine.push(Alias {
                    words: [h.words.clone(), words(u)].concat(),
                    label: without,
                    scannable: h.scannable,
                });
            }
        }

        let high_index = high.iter().map(|a| (a.words.clone(), a.label)).collect();
        let subtype_index = subtype.iter().map(|a| (a.words.clone(), a.label)).collect();
        let fine_index = fine.iter().map(|a| (a.words.clone(), a.label)).collect();
        AliasTable { high, subtype, fine, high_index, subtype_index, fine_index }
    }

    pub fn lookup_high(&self, text: &str) -> Option<HighLevel> {
        self.high_index.get(&normalize_words(text)).copied()
    }

    pub fn lookup_subtype(&self, text: &str) -> Option<Subtype> {
        self.subtype_index.get(&normalize_words(text)).copied()
    }

    pub fn lookup_fine(&self, text: &str) -> Option<FineLabel> {
        self.fine_index.get(&normalize_words(text)).copied()
    }

    pub fn high(&self) -> &[Alias<HighLevel>] {
        &self.high
    }

    pub fn subtype(&self) -> &[Alias<Subtype>] {
        &self.subtype
    }

    pub fn fine(&self) -> &[Alias<FineLabel>] {
        &self.fine
    }
}

/// Finds the last alias mention in free text.
///
/// Scans left to right taking the longest scannable alias at each position and
/// skipping past it, so `anti-solidarity` is never also read as `solidarity`.
pub fn scan_last<T: Copy>(text: &str, entries: &[Alias<T>]) -> Option<T> {
    let tokens = normalize_words(text);
    let mut last = None;
    let mut i = 0;
    while i < tokens.len() {
        let best = entries
            .iter()
            .filter(|a| a.scannable)
            .filter(|a| tokens[i..].starts_with(&a.words))
            .max_by_key(|a| a.words.len());
        match best {
            Some(a) => {
                last = Some(a.label);
                i += a.words.len();
            }
            None => i += 1,
        }
    }
    last
}

//! Label space for (anti-)solidarity framing.
//!
//! Four high-level stances; solidarity and anti-solidarity each split into
//! four subtypes. Human gold data additionally contains stance labels without
//! a subtype, which models never produce.

mod aliases;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use aliases::{normalize_words, scan_last, Alias, AliasTable, ALIASES};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelError {
    #[error("unknown label: {0:?}")]
    UnknownLabel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HighLevel {
    Solidarity,
    AntiSolidarity,
    Mixed,
    None,
}

impl HighLevel {
    pub const ALL: [HighLevel; 4] = [
        HighLevel::Solidarity,
        HighLevel::AntiSolidarity,
        HighLevel::Mixed,
        HighLevel::None,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HighLevel::Solidarity => "solidarity",
            HighLevel::AntiSolidarity => "anti-solidarity",
            HighLevel::Mixed => "mixed",
            HighLevel::None => "none",
        }
    }

    /// Whether this stance is followed by a subtype decision.
    pub fn takes_subtype(self) -> bool {
        matches!(self, HighLevel::Solidarity | HighLevel::AntiSolidarity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Subtype {
    GroupBased,
    ExchangeBased,
    Compassionate,
    Empathic,
}

impl Subtype {
    pub const ALL: [Subtype; 4] = [
        Subtype::GroupBased,
        Subtype::ExchangeBased,
        Subtype::Compassionate,
        Subtype::Empathic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Subtype::GroupBased => "group-based",
            Subtype::ExchangeBased => "exchange-based",
            Subtype::Compassionate => "compassionate",
            Subtype::Empathic => "empathic",
        }
    }
}

/// Fine-grained label.
///
/// Serialized as `solidarity:<subtype>`, `anti-solidarity:<subtype>`,
/// `solidarity:unspecified`, `anti-solidarity:unspecified`, `mixed`, `none`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FineLabel {
    Solidarity(Subtype),
    AntiSolidarity(Subtype),
    SolidarityNoSubtype,
    AntiSolidarityNoSubtype,
    Mixed,
    None,
}

impl FineLabel {
    /// The ten classes a model can be asked to produce, in canonical order.
    pub const MODEL_FACING: [FineLabel; 10] = [
        FineLabel::Solidarity(Subtype::GroupBased),
        FineLabel::Solidarity(Subtype::ExchangeBased),
        FineLabel::Solidarity(Subtype::Compassionate),
        FineLabel::Solidarity(Subtype::Empathic),
        FineLabel::AntiSolidarity(Subtype::GroupBased),
        FineLabel::AntiSolidarity(Subtype::ExchangeBased),
        FineLabel::AntiSolidarity(Subtype::Compassionate),
        FineLabel::AntiSolidarity(Subtype::Empathic),
        FineLabel::Mixed,
        FineLabel::None,
    ];

    /// Every fine label, including the gold-only no-subtype forms.
    pub const ALL: [FineLabel; 12] = [
        FineLabel::Solidarity(Subtype::GroupBased),
        FineLabel::Solidarity(Subtype::ExchangeBased),
        FineLabel::Solidarity(Subtype::Compassionate),
        FineLabel::Solidarity(Subtype::Empathic),
        FineLabel::SolidarityNoSubtype,
        FineLabel::AntiSolidarity(Subtype::GroupBased),
        FineLabel::AntiSolidarity(Subtype::ExchangeBased),
        FineLabel::AntiSolidarity(Subtype::Compassionate),
        FineLabel::AntiSolidarity(Subtype::Empathic),
        FineLabel::AntiSolidarityNoSubtype,
        FineLabel::Mixed,
        FineLabel::None,
    ];

    /// Builds a label from a stance and an optional subtype.
    ///
    /// Returns `None` for combinations the two-step scheme forbids: a subtype on
    /// mixed/none, or a missing subtype on solidarity/anti-solidarity.
    pub fn from_parts(high: HighLevel, subtype: Option<Subtype>) -> Option<FineLabel> {
        match (high, subtype) {
            (HighLevel::Solidarity, Some(s)) => Some(FineLabel::Solidarity(s)),
            (HighLevel::AntiSolidarity, Some(s)) => Some(FineLabel::AntiSolidarity(s)),
            (HighLevel::Mixed, None) => Some(FineLabel::Mixed),
            (HighLevel::None, None) => Some(FineLabel::None),
            _ => None,
        }
    }

    pub fn subtype(self) -> Option<Subtype> {
        match self {
            FineLabel::Solidarity(s) | FineLabel::AntiSolidarity(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_model_facing(self) -> bool {
        !matches!(
            self,
            FineLabel::SolidarityNoSubtype | FineLabel::AntiSolidarityNoSubtype
        )
    }

    pub fn high(self) -> HighLevel {
        fine_to_high(self)
    }
}

/// Projects a fine label onto its high-level stance.
pub fn fine_to_high(label: FineLabel) -> HighLevel {
    match label {
        FineLabel::Solidarity(_) | FineLabel::SolidarityNoSubtype => HighLevel::Solidarity,
        FineLabel::AntiSolidarity(_) | FineLabel::AntiSolidarityNoSubtype => {
            HighLevel::AntiSolidarity
        }
        FineLabel::Mixed => HighLevel::Mixed,
        FineLabel::None => HighLevel::None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetGroup {
    Migrant,
    Woman,
}

impl TargetGroup {
    pub const ALL: [TargetGroup; 2] = [TargetGroup::Migrant, TargetGroup::Woman];

    pub fn as_str(self) -> &'static str {
        match self {
            TargetGroup::Migrant => "migrant",
            TargetGroup::Woman => "woman",
        }
    }
}

impl fmt::Display for TargetGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TargetGroup {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "migrant" | "migranten" | "migration" => Ok(TargetGroup::Migrant),
            "woman" | "women" | "frau" | "frauen" => Ok(TargetGroup::Woman),
            _ => Err(LabelError::UnknownLabel(s.to_string())),
        }
    }
}

/// Evaluation and parsing granularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    High,
    Fine,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::High => "high",
            Level::Fine => "fine",
        })
    }
}

/// Result of [`parse_label`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    High(HighLevel),
    Fine(FineLabel),
}

/// Parses a rater or model label at the requested level.
///
/// Matching is case-insensitive and tolerant of whitespace, hyphen, underscore
/// and colon variations; anything not in the alias table is rejected.
pub fn parse_label(text: &str, level: Level) -> Result<Label, LabelError> {
    match level {
        Level::High => parse_high(text).map(Label::High),
        Level::Fine => parse_fine(text).map(Label::Fine),
    }
}

pub fn parse_high(text: &str) -> Result<HighLevel, LabelError> {
    ALIASES
        .lookup_high(text)
        .ok_or_else(|| LabelError::UnknownLabel(text.to_string()))
}

pub fn parse_subtype(text: &str) -> Result<Subtype, LabelError> {
    ALIASES
        .lookup_subtype(text)
        .ok_or_else(|| LabelError::UnknownLabel(text.to_string()))
}

pub fn parse_fine(text: &str) -> Result<FineLabel, LabelError> {
    ALIASES
        .lookup_fine(text)
        .ok_or_else(|| LabelError::UnknownLabel(text.to_string()))
}

macro_rules! string_serde {
    ($ty:ty, $parse:path, $name:literal) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.canonical())
            }
        }

        impl FromStr for $ty {
            type Err = LabelError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                $parse(s)
            }
        }

        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(&self.canonical())
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                $parse(&s).map_err(|_| {
                    serde::de::Error::custom(format!(concat!("invalid ", $name, ": {:?}"), s))
                })
            }
        }
    };
}

impl HighLevel {
    pub fn canonical(&self) -> String {
        self.as_str().to_string()
    }
}

impl Subtype {
    pub fn canonical(&self) -> String {
        self.as_str().to_string()
    }
}

impl FineLabel {
    pub fn canonical(&self) -> String {
        match self {
            FineLabel::Solidarity(s) => format!("solidarity:{}", s.as_str()),
            FineLabel::AntiSolidarity(s) => format!("anti-solidarity:{}", s.as_str()),
            FineLabel::SolidarityNoSubtype => "solidarity:unspecified".to_string(),
            FineLabel::AntiSolidarityNoSubtype => "anti-solidarity:unspecified".to_string(),
            FineLabel::Mixed => "mixed".to_string(),
            FineLabel::None => "none".to_string(),
        }
    }
}

string_serde!(HighLevel, parse_high, "high-level label");
string_serde!(Subtype, parse_subtype, "subtype");
string_serde!(FineLabel, parse_fine, "fine label");

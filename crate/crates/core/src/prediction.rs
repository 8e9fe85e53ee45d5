//! Model predictions as stored in predictions JSONL files.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::taxonomy::{fine_to_high, FineLabel, HighLevel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Unparseable,
    BackendError,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Ok => "ok",
            Status::Unparseable => "unparseable",
            Status::BackendError => "backend_error",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub instance_id: String,
    pub run_id: String,
    pub high: Option<HighLevel>,
    pub fine: Option<FineLabel>,
    pub status: Status,
    pub raw_high: Option<String>,
    pub raw_fine: Option<String>,
    /// Unparseable answers that were followed by a re-ask.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub raw_discarded: Vec<String>,
    /// sha256 of every rendered prompt, in call order.
    #[serde(default)]
    pub prompt_hashes: Vec<String>,
    #[serde(default)]
    pub calls: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Prediction {
    /// `status = ok` implies a fine label that projects onto `high`.
    pub fn is_consistent(&self) -> bool {
        match (self.status, self.high, self.fine) {
            (Status::Ok, Some(h), Some(f)) => {
                fine_to_high(f) == h && f.subtype().is_some() == h.takes_subtype()
            }
            (Status::Ok, _, _) => false,
            _ => true,
        }
    }

    pub fn ok_label(&self) -> Option<FineLabel> {
        match self.status {
            Status::Ok => self.fine,
            _ => None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("predictions line {line}: {message}")]
pub struct PredictionParseError {
    pub line: usize,
    pub message: String,
}

pub fn parse_predictions_jsonl(text: &str) -> Result<Vec<Prediction>, PredictionParseError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| PredictionParseError { line: i + 1, message: e.to_string() })
        })
        .collect()
}

/// One line per prediction, sorted by instance id.
pub fn predictions_to_jsonl(predictions: &[Prediction]) -> String {
    let mut sorted: Vec<&Prediction> = predictions.iter().collect();
    sorted.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    let mut out = String::new();
    for p in sorted {
        out.push_str(&serde_json::to_string(p).expect("prediction serializes"));
        out.push('\n');
    }
    out
}

/// Fine labels of `ok` predictions keyed by instance id.
pub fn ok_labels(predictions: &[Prediction]) -> BTreeMap<String, FineLabel> {
    predictions
        .iter()
        .filter_map(|p| p.ok_label().map(|l| (p.instance_id.clone(), l)))
        .collect()
}

pub fn status_counts(predictions: &[Prediction]) -> BTreeMap<Status, usize> {
    let mut counts = BTreeMap::new();
    for p in predictions {
        *counts.entry(p.status).or_insert(0) += 1;
    }
    counts
}

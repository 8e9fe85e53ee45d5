//! Prompt templates and rendering.
//!
//! Templates are plain UTF-8 files with `{PLACEHOLDER}` slots:
//!
//! | slot                 | content                                              |
//! |----------------------|------------------------------------------------------|
//! | `{TEXT}`             | left context, keyword sentence, right context         |
//! | `{KEYWORD_SENTENCE}` | the keyword sentence alone                            |
//! | `{CONTEXT_LEFT}`     | up to three preceding sentences                       |
//! | `{CONTEXT_RIGHT}`    | up to three following sentences                       |
//! | `{EXAMPLES}`         | few-shot block (empty in zero-shot mode)              |
//!
//! Any other `{UPPER_CASE}` token is rejected. Speaker and party are never
//! available to a template.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extraction::Instance;
use crate::taxonomy::{FineLabel, HighLevel, Subtype, TargetGroup};

pub const PLACEHOLDERS: [&str; 5] = ["TEXT", "KEYWORD_SENTENCE", "CONTEXT_LEFT", "CONTEXT_RIGHT", "EXAMPLES"];

const COT_CUE: &str = "think step by step";

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("few-shot prompt lacks an exemplar for label {0}")]
    MissingExemplar(String),
    #[error("unbound placeholder {{{0}}}")]
    UnboundPlaceholder(String),
    #[error("few-shot mode needs an {{EXAMPLES}} slot in the {0} template")]
    NoExamplesSlot(Step),
    #[error("invalid exemplar line {line}: {message}")]
    InvalidExemplar { line: usize, message: String },
    #[error("template {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    OneStep,
    HighLevel,
    SubtypeSolidarity,
    SubtypeAntisolidarity,
}

impl Step {
    pub const ALL: [Step; 4] = [
        Step::OneStep,
        Step::HighLevel,
        Step::SubtypeSolidarity,
        Step::SubtypeAntisolidarity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Step::OneStep => "one_step",
            Step::HighLevel => "high_level",
            Step::SubtypeSolidarity => "subtype_solidarity",
            Step::SubtypeAntisolidarity => "subtype_antisolidarity",
        }
    }

    /// Answer labels of this step, in the fixed order used for exemplars.
    pub fn answer_labels(self) -> Vec<String> {
        match self {
            Step::OneStep => FineLabel::MODEL_FACING.iter().map(|l| l.canonical()).collect(),
            Step::HighLevel => HighLevel::ALL.iter().map(|h| h.canonical()).collect(),
            Step::SubtypeSolidarity | Step::SubtypeAntisolidarity => {
                Subtype::ALL.iter().map(|s| s.canonical()).collect()
            }
        }
    }

    /// Exemplar-file label that covers the given answer label.
    fn exemplar_label(self, answer: &str) -> String {
        match self {
            Step::SubtypeSolidarity => format!("solidarity:{answer}"),
            Step::SubtypeAntisolidarity => format!("anti-solidarity:{answer}"),
            _ => answer.to_string(),
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptFormat {
    OneStep,
    TwoStep,
}

impl FromStr for PromptFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "one-step" | "one_step" => Ok(PromptFormat::OneStep),
            "two-step" | "two_step" => Ok(PromptFormat::TwoStep),
            other => Err(format!("unknown prompt format {other:?}")),
        }
    }
}

impl fmt::Display for PromptFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PromptFormat::OneStep => "one-step",
            PromptFormat::TwoStep => "two-step",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShotMode {
    Zero,
    Few,
}

impl FromStr for ShotMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zero" => Ok(ShotMode::Zero),
            "few" => Ok(ShotMode::Few),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

impl fmt::Display for ShotMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShotMode::Zero => "zero",
            ShotMode::Few => "few",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Literal(String),
    Slot(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub target: TargetGroup,
    pub step: Step,
    pub body: String,
    pub cot: bool,
    segments: Vec<Segment>,
}

impl PromptTemplate {
    pub fn new(target: TargetGroup, step: Step, body: impl Into<String>) -> Result<Self, PromptError> {
        let body = body.into();
        let segments = parse_segments(&body)?;
        let cot = body.to_lowercase().contains(COT_CUE);
        Ok(PromptTemplate { target, step, body, cot, segments })
    }

    /// Loads `<dir>/<step>.txt`.
    pub fn load(dir: &Path, target: TargetGroup, step: Step) -> Result<Self, PromptError> {
        let path = dir.join(format!("{}.txt", step.as_str()));
        let body = std::fs::read_to_string(&path)
            .map_err(|source| PromptError::Io { path: path.display().to_string(), source })?;
        Self::new(target, step, body)
    }

    pub fn has_slot(&self, name: &str) -> bool {
        self.segments.iter().any(|s| *s == Segment::Slot(slot_name(name).unwrap_or("")))
    }
}

fn slot_name(name: &str) -> Option<&'static str> {
    PLACEHOLDERS.iter().copied().find(|p| *p == name)
}

fn parse_segments(body: &str) -> Result<Vec<Segment>, PromptError> {
    let mut segments = Vec::new();
    let mut literal = String::new();
    let mut rest = body;
    while let Some(open) = rest.find('{') {
        literal.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let name_len = after
            .find(|c: char| !(c.is_ascii_uppercase() || c == '_'))
            .unwrap_or(after.len());
        let name = &after[..name_len];
        if name_len > 0 && after[name_len..].starts_with('}') {
            let slot = slot_name(name).ok_or_else(|| PromptError::UnboundPlaceholder(name.to_string()))?;
            if !literal.is_empty() {
                segments.push(Segment::Literal(std::mem::take(&mut literal)));
            }
            segments.push(Segment::Slot(slot));
            rest = &after[name_len + 1..];
        } else {
            literal.push('{');
            rest = after;
        }
    }
    literal.push_str(rest);
    if !literal.is_empty() {
        segments.push(Segment::Literal(literal));
    }
    Ok(segments)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub label: String,
    pub text: String,
    pub rationale: String,
}

/// Worked examples keyed by canonical label; one file serves every step.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExemplarSet {
    pub exemplars: Vec<Exemplar>,
}

impl ExemplarSet {
    pub fn from_jsonl(text: &str) -> Result<Self, PromptError> {
        let mut exemplars = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let ex: Exemplar = serde_json::from_str(line)
                .map_err(|e| PromptError::InvalidExemplar { line: i + 1, message: e.to_string() })?;
            exemplars.push(ex);
        }
        Ok(ExemplarSet { exemplars })
    }

    pub fn load(path: &Path) -> Result<Self, PromptError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| PromptError::Io { path: path.display().to_string(), source })?;
        Self::from_jsonl(&text)
    }

    /// Exactly one exemplar per answer label of `step`, in label order.
    pub fn for_step(&self, step: Step) -> Result<Vec<(String, &Exemplar)>, PromptError> {
        step.answer_labels()
            .into_iter()
            .map(|answer| {
                let wanted = step.exemplar_label(&answer);
                self.exemplars
                    .iter()
                    .find(|e| e.label == wanted)
                    .map(|e| (answer, e))
                    .ok_or(PromptError::MissingExemplar(wanted))
            })
            .collect()
    }
}

fn render_examples(step: Step, ex: &ExemplarSet) -> Result<String, PromptError> {
    let mut out = String::from("Examples:\n\n");
    for (i, (answer, e)) in ex.for_step(step)?.into_iter().enumerate() {
        out.push_str(&format!(
            "Example {}\nText: {}\nReasoning: {}\nLABEL: {}\n\n",
            i + 1,
            e.text.trim(),
            e.rationale.trim(),
            answer
        ));
    }
    Ok(out)
}

/// Renders the prompt for one instance. Pure and deterministic.
pub fn render_prompt(
    template: &PromptTemplate,
    inst: &Instance,
    mode: ShotMode,
    exemplars: Option<&ExemplarSet>,
) -> Result<String, PromptError> {
    let examples = match mode {
        ShotMode::Zero => String::new(),
        ShotMode::Few => {
            let ex = exemplars.ok_or_else(|| {
                PromptError::MissingExemplar(template.step.exemplar_label(&template.step.answer_labels()[0]))
            })?;
            let block = render_examples(template.step, ex)?;
            if !template.has_slot("EXAMPLES") {
                return Err(PromptError::NoExamplesSlot(template.step));
            }
            block
        }
    };
    let mut out = String::with_capacity(template.body.len() + 512);
    for seg in &template.segments {
        match seg {
            Segment::Literal(s) => out.push_str(s),
            Segment::Slot("TEXT") => out.push_str(&inst.full_text()),
            Segment::Slot("KEYWORD_SENTENCE") => out.push_str(&inst.text),
            Segment::Slot("CONTEXT_LEFT") => out.push_str(&inst.context_left.join(" ")),
            Segment::Slot("CONTEXT_RIGHT") => out.push_str(&inst.context_right.join(" ")),
            Segment::Slot("EXAMPLES") => out.push_str(&examples),
            Segment::Slot(other) => return Err(PromptError::UnboundPlaceholder(other.to_string())),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanStep {
    Run(Step),
    Done,
}

/// Next step given the format and the high-level result so far.
///
/// Two-step: high level first, then the matching subtype step for
/// solidarity/anti-solidarity, done for mixed/none. One-step: the combined
/// step, then done.
pub fn plan_steps(format: PromptFormat, high_result: Option<HighLevel>) -> PlanStep {
    match (format, high_result) {
        (PromptFormat::OneStep, None) => PlanStep::Run(Step::OneStep),
        (PromptFormat::OneStep, Some(_)) => PlanStep::Done,
        (PromptFormat::TwoStep, None) => PlanStep::Run(Step::HighLevel),
        (PromptFormat::TwoStep, Some(HighLevel::Solidarity)) => PlanStep::Run(Step::SubtypeSolidarity),
        (PromptFormat::TwoStep, Some(HighLevel::AntiSolidarity)) => {
            PlanStep::Run(Step::SubtypeAntisolidarity)
        }
        (PromptFormat::TwoStep, Some(HighLevel::Mixed | HighLevel::None)) => PlanStep::Done,
    }
}

/// Templates for every step of one target group.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    pub target: TargetGroup,
    pub templates: Vec<PromptTemplate>,
    pub exemplars: Option<ExemplarSet>,
}

impl TemplateSet {
    /// Loads `<dir>/<step>.txt` for every step that exists plus an optional
    /// `<dir>/exemplars.jsonl`.
    pub fn load_dir(dir: &Path, target: TargetGroup) -> Result<Self, PromptError> {
        let mut templates = Vec::new();
        for step in Step::ALL {
            if dir.join(format!("{}.txt", step.as_str())).exists() {
                templates.push(PromptTemplate::load(dir, target, step)?);
            }
        }
        let ex_path = dir.join("exemplars.jsonl");
        let exemplars = if ex_path.exists() { Some(ExemplarSet::load(&ex_path)?) } else { None };
        Ok(TemplateSet { target, templates, exemplars })
    }

    pub fn get(&self, step: Step) -> Option<&PromptTemplate> {
        self.templates.iter().find(|t| t.step == step)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::PartyId;
    use chrono::NaiveDate;

    fn instance(left: &[&str], right: &[&str]) -> Instance {
        Instance {
            id: "id".into(),
            target: TargetGroup::Migrant,
            keyword: "Flüchtlinge".into(),
            keywords: vec!["Flüchtlinge".into()],
            text: "Wir nehmen Flüchtlinge auf.".into(),
            context_left: left.iter().map(|s| s.to_string()).collect(),
            context_right: right.iter().map(|s| s.to_string()).collect(),
            date: NaiveDate::from_ymd_opt(2015, 9, 9).unwrap(),
            year: 2015,
            decade: 2010,
            speaker: "SENTINEL_SPEAKER".into(),
            party: PartyId::AfD,
            protocol_id: "BT-18-118".into(),
            session: 118,
            period: 18,
            speech_idx: 0,
            sentence_idx: 0,
            global_idx: 0,
        }
    }

    fn exemplars(labels: &[&str]) -> ExemplarSet {
        ExemplarSet {
            exemplars: labels
                .iter()
                .map(|l| Exemplar { label: l.to_string(), text: format!("text for {l}"), rationale: "weil".into() })
                .collect(),
        }
    }

    #[test]
    fn zero_shot_with_empty_context_is_the_sentence() {
        let t = PromptTemplate::new(TargetGroup::Migrant, Step::HighLevel, "{EXAMPLES}{TEXT}").unwrap();
        let p = render_prompt(&t, &instance(&[], &[]), ShotMode::Zero, None).unwrap();
        assert_eq!(p, "Wir nehmen Flüchtlinge auf.");
    }

    #[test]
    fn text_is_in_document_order() {
        let t = PromptTemplate::new(TargetGroup::Migrant, Step::HighLevel, "[{TEXT}] <{CONTEXT_LEFT}|{CONTEXT_RIGHT}>").unwrap();
        let p = render_prompt(&t, &instance(&["L1.", "L2."], &["R1."]), ShotMode::Zero, None).unwrap();
        assert_eq!(p, "[L1. L2. Wir nehmen Flüchtlinge auf. R1.] <L1. L2.|R1.>");
    }

    #[test]
    fn few_shot_covers_labels_in_order() {
        let t = PromptTemplate::new(TargetGroup::Migrant, Step::HighLevel, "{EXAMPLES}---{TEXT}").unwrap();
        let ex = exemplars(&["none", "mixed", "anti-solidarity", "solidarity"]);
        let p = render_prompt(&t, &instance(&[], &[]), ShotMode::Few, Some(&ex)).unwrap();
        let pos: Vec<usize> = ["text for solidarity", "text for anti-solidarity", "text for mixed", "text for none"]
            .iter()
            .map(|s| p.find(s).unwrap())
            .collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn few_shot_missing_exemplar() {
        let t = PromptTemplate::new(TargetGroup::Migrant, Step::HighLevel, "{EXAMPLES}{TEXT}").unwrap();
        let ex = exemplars(&["solidarity", "anti-solidarity", "mixed"]);
        let err = render_prompt(&t, &instance(&[], &[]), ShotMode::Few, Some(&ex)).unwrap_err();
        assert!(matches!(err, PromptError::MissingExemplar(l) if l == "none"));
        assert!(matches!(
            render_prompt(&t, &instance(&[], &[]), ShotMode::Few, None),
            Err(PromptError::MissingExemplar(_))
        ));
    }

    #[test]
    fn subtype_exemplars_use_stance_prefix() {
        let ex = exemplars(&[
            "solidarity:group-based",
            "solidarity:exchange-based",
            "solidarity:compassionate",
            "solidarity:empathic",
        ]);
        assert_eq!(ex.for_step(Step::SubtypeSolidarity).unwrap().len(), 4);
        assert!(ex.for_step(Step::SubtypeAntisolidarity).is_err());
    }

    #[test]
    fn unknown_placeholder_rejected() {
        let err = PromptTemplate::new(TargetGroup::Woman, Step::HighLevel, "{TEXT} {SPEAKER}").unwrap_err();
        assert!(matches!(err, PromptError::UnboundPlaceholder(n) if n == "SPEAKER"));
        // JSON-ish braces are literal
        let t = PromptTemplate::new(TargetGroup::Woman, Step::HighLevel, "{\"a\": 1} {x} {TEXT}").unwrap();
        let p = render_prompt(&t, &instance(&[], &[]), ShotMode::Zero, None).unwrap();
        assert!(p.starts_with("{\"a\": 1} {x} Wir"));
    }

    #[test]
    fn cot_flag() {
        let t = PromptTemplate::new(TargetGroup::Woman, Step::HighLevel, "Think step by step. {TEXT}").unwrap();
        assert!(t.cot);
        let t = PromptTemplate::new(TargetGroup::Woman, Step::HighLevel, "{TEXT}").unwrap();
        assert!(!t.cot);
    }

    #[test]
    fn metadata_never_rendered() {
        let body = PLACEHOLDERS.iter().map(|p| format!("{{{p}}}")).collect::<Vec<_>>().join("\n");
        let t = PromptTemplate::new(TargetGroup::Migrant, Step::HighLevel, body).unwrap();
        let ex = exemplars(&["solidarity", "anti-solidarity", "mixed", "none"]);
        let p = render_prompt(&t, &instance(&["a."], &["b."]), ShotMode::Few, Some(&ex)).unwrap();
        assert!(!p.contains("SENTINEL_SPEAKER"));
        assert!(!p.contains("AfD"));
    }

    #[test]
    fn plan() {
        assert_eq!(plan_steps(PromptFormat::TwoStep, None), PlanStep::Run(Step::HighLevel));
        assert_eq!(plan_steps(PromptFormat::TwoStep, Some(HighLevel::None)), PlanStep::Done);
        assert_eq!(plan_steps(PromptFormat::TwoStep, Some(HighLevel::Mixed)), PlanStep::Done);
        assert_eq!(
            plan_steps(PromptFormat::TwoStep, Some(HighLevel::Solidarity)),
            PlanStep::Run(Step::SubtypeSolidarity)
        );
        assert_eq!(
            plan_steps(PromptFormat::TwoStep, Some(HighLevel::AntiSolidarity)),
            PlanStep::Run(Step::SubtypeAntisolidarity)
        );
        assert_eq!(plan_steps(PromptFormat::OneStep, None), PlanStep::Run(Step::OneStep));
        assert_eq!(plan_steps(PromptFormat::OneStep, Some(HighLevel::Mixed)), PlanStep::Done);
    }
}

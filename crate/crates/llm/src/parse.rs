//! Extraction of the answer label from raw model output.

use solidarity_core::prompt::Step;
use solidarity_core::taxonomy::{scan_last, FineLabel, HighLevel, Subtype, ALIASES};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parsed {
    High(HighLevel),
    Subtype(Subtype),
    /// Only model-facing fine labels are ever produced.
    Fine(FineLabel),
}

fn lookup(text: &str, step: Step) -> Option<Parsed> {
    match step {
        Step::HighLevel => ALIASES.lookup_high(text).map(Parsed::High),
        Step::SubtypeSolidarity | Step::SubtypeAntisolidarity => {
            ALIASES.lookup_subtype(text).map(Parsed::Subtype)
        }
        Step::OneStep => ALIASES.lookup_fine(text).filter(|l| l.is_model_facing()).map(Parsed::Fine),
    }
}

fn scan(text: &str, step: Step) -> Option<Parsed> {
    match step {
        Step::HighLevel => scan_last(text, ALIASES.high()).map(Parsed::High),
        Step::SubtypeSolidarity | Step::SubtypeAntisolidarity => {
            scan_last(text, ALIASES.subtype()).map(Parsed::Subtype)
        }
        Step::OneStep => scan_last(text, ALIASES.fine()).filter(|l| l.is_model_facing()).map(Parsed::Fine),
    }
}

/// Value of the last line of the form `LABEL: <value>` (case-insensitive,
/// markdown emphasis and heading marks ignored).
fn label_line(raw: &str) -> Option<&str> {
    raw.lines().rev().find_map(|line| {
        let line = line.trim().trim_start_matches(['#', '*', '-', '>', ' ']);
        let head = line.get(..5)?;
        if !head.eq_ignore_ascii_case("label") {
            return None;
        }
        let rest = line[5..].trim_start_matches(['*', '_', ' ']);
        rest.strip_prefix(':').map(|v| v.trim().trim_matches(['*', '_']).trim())
    })
}

/// Parses one step's answer: the final `LABEL:` line if it names a label of
/// the step, otherwise the last label alias anywhere in the text.
pub fn parse_step_output(raw: &str, step: Step) -> Option<Parsed> {
    if let Some(value) = label_line(raw) {
        if let Some(p) = lookup(value, step).or_else(|| scan(value, step)) {
            return Some(p);
        }
    }
    scan(raw, step)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_line_wins() {
        let raw = "The speaker shows solidarity at first...\nLABEL: anti-solidarity";
        assert_eq!(parse_step_output(raw, Step::HighLevel), Some(Parsed::High(HighLevel::AntiSolidarity)));
        assert_eq!(
            parse_step_output("**Label:** Mixed\n", Step::HighLevel),
            Some(Parsed::High(HighLevel::Mixed))
        );
        assert_eq!(
            parse_step_output("label: none (no stance)", Step::HighLevel),
            Some(Parsed::High(HighLevel::None))
        );
    }

    #[test]
    fn fallback_scan() {
        assert_eq!(
            parse_step_output("the stance is solidarity", Step::HighLevel),
            Some(Parsed::High(HighLevel::Solidarity))
        );
        assert_eq!(parse_step_output("cannot decide", Step::HighLevel), None);
        assert_eq!(parse_step_output("", Step::HighLevel), None);
    }

    #[test]
    fn subtype_steps() {
        assert_eq!(
            parse_step_output("LABEL: compassionate", Step::SubtypeSolidarity),
            Some(Parsed::Subtype(Subtype::Compassionate))
        );
        assert_eq!(
            parse_step_output("Reasoning.\nLABEL: Exchange-based", Step::SubtypeAntisolidarity),
            Some(Parsed::Subtype(Subtype::ExchangeBased))
        );
    }

    #[test]
    fn one_step_needs_subtype_for_stances() {
        assert_eq!(
            parse_step_output("LABEL: solidarity:empathic", Step::OneStep),
            Some(Parsed::Fine(FineLabel::Solidarity(Subtype::Empathic)))
        );
        assert_eq!(parse_step_output("LABEL: mixed", Step::OneStep), Some(Parsed::Fine(FineLabel::Mixed)));
        assert_eq!(parse_step_output("LABEL: solidarity", Step::OneStep), None);
    }
}

//! Rule-based German sentence segmentation.
//!
//! A boundary is placed after a run of `.`, `!`, `?` or `…` (plus any closing
//! quotes or brackets) when it is followed by whitespace and the next word
//! starts with an uppercase letter, a digit, or an opening quote/bracket.
//! A period does not end a sentence after a listed abbreviation, a single
//! letter (initials, `z. B.`), or a number of at most three digits (ordinals
//! such as `1. Mai` or `20. Jahrhundert`).

use std::collections::HashSet;
use std::sync::LazyLock;

static ABBREVIATIONS: LazyLock<HashSet<&'static str>> = LazyLock::new(|| {
    include_str!("../../data/abbreviations_de.txt")
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
});

const TERMINATORS: &[char] = &['.', '!', '?', '…'];
const CLOSERS: &[char] = &['"', '\'', '”', '“', '»', '«', '‹', '›', ')', ']'];
const OPENERS: &[char] = &['"', '„', '“', '»', '«', '(', '[', '‚', '\''];

/// Splits text into sentences with whitespace collapsed to single spaces.
pub fn segment_sentences(text: &str) -> Vec<String> {
    let normalized = text.split_whitespace().collect::<Vec<_>>().join(" ");
    let chars: Vec<char> = normalized.chars().collect();
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut i = 0;

    while i < chars.len() {
        if !TERMINATORS.contains(&chars[i]) {
            i += 1;
            continue;
        }
        let term_start = i;
        while i < chars.len() && TERMINATORS.contains(&chars[i]) {
            i += 1;
        }
        while i < chars.len() && CLOSERS.contains(&chars[i]) {
            i += 1;
        }
        // boundary only at a space
        if i >= chars.len() || chars[i] != ' ' {
            continue;
        }
        let next = chars.get(i + 1).copied();
        let opens_sentence = next
            .map(|c| c.is_uppercase() || c.is_ascii_digit() || OPENERS.contains(&c))
            .unwrap_or(false);
        if !opens_sentence {
            continue;
        }
        let only_period = chars[term_start..i]
            .iter()
            .filter(|c| TERMINATORS.contains(c))
            .all(|&c| c == '.');
        if only_period && chars[term_start..i].iter().filter(|&&c| c == '.').count() == 1 {
            let token = preceding_token(&chars[start..term_start]);
            if is_protected(&token) {
                continue;
            }
        }
        push_sentence(&mut sentences, &chars[start..i]);
        start = i + 1;
    }
    push_sentence(&mut sentences, &chars[start..]);
    sentences
}

fn push_sentence(out: &mut Vec<String>, chars: &[char]) {
    let s: String = chars.iter().collect();
    let s = s.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
}

/// The word directly before a period, without leading punctuation.
fn preceding_token(chars: &[char]) -> String {
    let begin = chars.iter().rposition(|&c| c == ' ').map_or(0, |p| p + 1);
    let token: String = chars[begin..].iter().collect();
    token
        .trim_start_matches(|c: char| !c.is_alphanumeric())
        .to_string()
}

fn is_protected(token: &str) -> bool {
    if token.is_empty() {
        return false;
    }
    let mut letters = token.chars();
    if let (Some(c), None) = (letters.next(), letters.next()) {
        if c.is_alphabetic() {
            return true;
        }
    }
    if token.chars().all(|c| c.is_ascii_digit()) {
        return token.len() <= 3;
    }
    ABBREVIATIONS.contains(token.to_lowercase().as_str())
}

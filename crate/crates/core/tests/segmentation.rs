use proptest::prelude::*;
use solidarity_core::corpus::segment_sentences;

const GOLD: &str = include_str!("fixtures/segmentation_gold.txt");

fn paragraphs() -> Vec<Vec<&'static str>> {
    GOLD.split("\n\n")
        .map(|p| p.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()).collect::<Vec<_>>())
        .filter(|p| !p.is_empty())
        .collect()
}

#[test]
fn hand_labeled_fixture() {
    let paras = paragraphs();
    assert_eq!(paras.iter().map(Vec::len).sum::<usize>(), 50);
    for gold in paras {
        let joined = gold.join(" ");
        assert_eq!(segment_sentences(&joined), gold, "paragraph: {joined}");
    }
}

#[test]
fn whitespace_is_collapsed() {
    assert_eq!(segment_sentences("Ja.\n\n  Nein.\tVielleicht."), vec!["Ja.", "Nein.", "Vielleicht."]);
}

proptest! {
    #[test]
    fn preserves_non_whitespace(text in "[A-Za-zäöüÄÖÜß0-9 .!?,;:„“()\\n-]{0,200}") {
        let out = segment_sentences(&text);
        let strip = |s: &str| s.chars().filter(|c| !c.is_whitespace()).collect::<String>();
        prop_assert_eq!(strip(&out.concat()), strip(&text));
        prop_assert!(out.iter().all(|s| !s.is_empty() && s.trim() == s));
    }
}

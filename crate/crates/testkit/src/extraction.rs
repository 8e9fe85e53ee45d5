/// Expected outcome of scanning one sentence for keywords.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ScanResult {
    /// Keywords found, in keyword-list order, each once.
    pub hits: Vec<String>,
    /// Number of `Frau` occurrences discarded as forms of address.
    pub frau_dropped: usize,
}

/// Walks the sentence character by character, collecting alphabetic words
/// and checking each against the keyword list.
pub fn scan_sentence(sentence: &str, keywords: &[&str], frau_rule: bool) -> ScanResult {
    let chars: Vec<char> = sentence.chars().collect();
    let mut found = vec![false; keywords.len()];
    let mut frau_dropped = 0;
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].is_alphabetic() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && chars[i].is_alphabetic() {
            i += 1;
        }
        let word: String = chars[start..i].iter().collect();
        if frau_rule && word == "Frau" {
            let mut j = i;
            while j < chars.len() && chars[j].is_whitespace() {
                j += 1;
            }
            if j > i && j < chars.len() && chars[j].is_uppercase() {
                frau_dropped += 1;
                continue;
            }
        }
        for (k, kw) in keywords.iter().enumerate() {
            if *kw == word {
                found[k] = true;
            }
        }
    }
    ScanResult {
        hits: keywords.iter().zip(&found).filter(|(_, f)| **f).map(|(k, _)| k.to_string()).collect(),
        frau_dropped,
    }
}

/// Expected context window of sentence `i` within a speech of `len` sentences.
pub fn context_bounds(i: usize, len: usize, window: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
    let left = i.saturating_sub(window);
    let right = if i + 1 + window <= len { i + 1 + window } else { len };
    (left..i, i + 1..right)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frau_address_dropped() {
        let r = scan_sentence("Frau Schmidt sprach über die Frau.", &["Frau"], true);
        assert_eq!(r, ScanResult { hits: vec!["Frau".into()], frau_dropped: 1 });
        let r = scan_sentence("Frau Schmidt sprach.", &["Frau"], true);
        assert_eq!(r, ScanResult { hits: vec![], frau_dropped: 1 });
        let r = scan_sentence("Frau Schmidt sprach.", &["Frau"], false);
        assert_eq!(r.hits, vec!["Frau".to_string()]);
    }

    #[test]
    fn whole_words_only() {
        assert!(scan_sentence("Die Ausländerbehörde", &["Ausländer"], false).hits.is_empty());
    }

    #[test]
    fn windows() {
        assert_eq!(context_bounds(0, 1, 3), (0..0, 1..1));
        assert_eq!(context_bounds(5, 10, 3), (2..5, 6..9));
    }
}

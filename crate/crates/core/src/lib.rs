//! Core pipeline for classifying (anti-)solidarity framing in parliamentary
//! debates: label taxonomy, protocol ingestion, keyword instance extraction,
//! prompt rendering, agreement/performance evaluation and trend analysis.

pub mod corpus;
pub mod evaluation;
pub mod extraction;
pub mod prediction;
pub mod prompt;
pub mod taxonomy;
pub mod trends;

/// Decade bucket of a year: `floor(year / 10) * 10`.
pub fn decade_of(year: i32) -> i32 {
    year.div_euclid(10) * 10
}

#[cfg(test)]
mod tests {
    use super::decade_of;

    #[test]
    fn decade_buckets() {
        assert_eq!(decade_of(1949), 1940);
        assert_eq!(decade_of(1950), 1950);
        assert_eq!(decade_of(2025), 2020);
    }
}

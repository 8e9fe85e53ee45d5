use std::fmt;

use serde::{Deserialize, Serialize};

/// Canonical party code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PartyId {
    AfD,
    DieLinke,
    Gruene,
    CDUCSU,
    SPD,
    FDP,
    DP,
    GBBHE,
    KPD,
    BP,
    WAV,
    DRP,
    DZP,
    Z,
    Unknown,
}

impl PartyId {
    pub fn code(self) -> &'static str {
        match self {
            PartyId::AfD => "AfD",
            PartyId::DieLinke => "DieLinke",
            PartyId::Gruene => "Gruene",
            PartyId::CDUCSU => "CDUCSU",
            PartyId::SPD => "SPD",
            PartyId::FDP => "FDP",
            PartyId::DP => "DP",
            PartyId::GBBHE => "GBBHE",
            PartyId::KPD => "KPD",
            PartyId::BP => "BP",
            PartyId::WAV => "WAV",
            PartyId::DRP => "DRP",
            PartyId::DZP => "DZP",
            PartyId::Z => "Z",
            PartyId::Unknown => "Unknown",
        }
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Raw spellings (after [`party_key`] folding) mapped to codes.
const PARTY_TABLE: &[(&str, PartyId)] = &[
    ("AFD", PartyId::AfD),
    ("ALTERNATIVEFUERDEUTSCHLAND", PartyId::AfD),
    ("DIELINKE", PartyId::DieLinke),
    ("LINKE", PartyId::DieLinke),
    ("PDS", PartyId::DieLinke),
    ("GRUPPEDERPDS", PartyId::DieLinke),
    ("PDS/LINKELISTE", PartyId::DieLinke),
    ("LINKSPARTEIPDS", PartyId::DieLinke),
    ("LINKSPARTEI", PartyId::DieLinke),
    ("GRUPPEDIELINKE", PartyId::DieLinke),
    ("FRAKTIONDIELINKE", PartyId::DieLinke),
    ("GRUENE", PartyId::Gruene),
    ("DIEGRUENEN", PartyId::Gruene),
    ("BUENDNIS90/DIEGRUENEN", PartyId::Gruene),
    ("BUENDNIS90/GRUENE", PartyId::Gruene),
    ("B90/GRUENE", PartyId::Gruene),
    ("B90/DIEGRUENEN", PartyId::Gruene),
    ("BUENDNIS90", PartyId::Gruene),
    ("GRUPPEBUENDNIS90/DIEGRUENEN", PartyId::Gruene),
    ("CDU/CSU", PartyId::CDUCSU),
    ("CDUCSU", PartyId::CDUCSU),
    ("CDU", PartyId::CDUCSU),
    ("CSU", PartyId::CDUCSU),
    ("SPD", PartyId::SPD),
    ("FDP", PartyId::FDP),
    ("FDP/DVP", PartyId::FDP),
    ("DP", PartyId::DP),
    ("DP/DPB", PartyId::DP),
    ("DP/FVP", PartyId::DP),
    ("FVP", PartyId::DP),
    ("DPB", PartyId::DP),
    ("GB/BHE", PartyId::GBBHE),
    ("GBBHE", PartyId::GBBHE),
    ("BHE", PartyId::GBBHE),
    ("KPD", PartyId::KPD),
    ("BP", PartyId::BP),
    ("WAV", PartyId::WAV),
    ("DRP", PartyId::DRP),
    ("DZP", PartyId::DZP),
    ("Z", PartyId::Z),
    ("ZENTRUM", PartyId::Z),
];

/// Uppercases, folds umlauts, and drops whitespace and periods.
fn party_key(raw: &str) -> String {
    let mut key = String::with_capacity(raw.len());
    for c in raw.chars() {
        match c {
            c if c.is_whitespace() || c == '.' || c == '\u{a0}' => {}
            'ä' | 'Ä' => key.push_str("AE"),
            'ö' | 'Ö' => key.push_str("OE"),
            'ü' | 'Ü' => key.push_str("UE"),
            'ß' => key.push_str("SS"),
            c => key.extend(c.to_uppercase()),
        }
    }
    key
}

/// Maps a raw party string to its canonical code; unmatched input is
/// [`PartyId::Unknown`].
pub fn normalize_party(raw: &str) -> PartyId {
    let key = party_key(raw);
    PARTY_TABLE
        .iter()
        .find(|(k, _)| *k == key)
        .map_or(PartyId::Unknown, |(_, p)| *p)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [PartyId; 15] = [
        PartyId::AfD,
        PartyId::DieLinke,
        PartyId::Gruene,
        PartyId::CDUCSU,
        PartyId::SPD,
        PartyId::FDP,
        PartyId::DP,
        PartyId::GBBHE,
        PartyId::KPD,
        PartyId::BP,
        PartyId::WAV,
        PartyId::DRP,
        PartyId::DZP,
        PartyId::Z,
        PartyId::Unknown,
    ];

    #[test]
    fn listed_variants() {
        assert_eq!(normalize_party("Gruppe der PDS"), PartyId::DieLinke);
        assert_eq!(normalize_party("PDS"), PartyId::DieLinke);
        assert_eq!(normalize_party("DP/FVP"), PartyId::DP);
        assert_eq!(normalize_party("DP/DPB"), PartyId::DP);
        assert_eq!(normalize_party("FVP"), PartyId::DP);
        assert_eq!(normalize_party("BÜNDNIS 90/DIE GRÜNEN"), PartyId::Gruene);
        assert_eq!(normalize_party("F.D.P."), PartyId::FDP);
        assert_eq!(normalize_party(" cdu/csu "), PartyId::CDUCSU);
        assert_eq!(normalize_party("GB/BHE"), PartyId::GBBHE);
    }

    #[test]
    fn unmatched_is_unknown() {
        assert_eq!(normalize_party("Unabhängig"), PartyId::Unknown);
        assert_eq!(normalize_party("fraktionslos"), PartyId::Unknown);
        assert_eq!(normalize_party(""), PartyId::Unknown);
    }

    #[test]
    fn idempotent_on_codes() {
        for p in ALL {
            assert_eq!(normalize_party(p.code()), p);
            assert_eq!(normalize_party(&p.to_string()), p);
        }
    }
}

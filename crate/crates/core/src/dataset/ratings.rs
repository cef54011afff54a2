//! S&P long-term issuer ratings and their treatment encodings.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The 22 notch-level ratings observed in the sample, best to worst.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rating {
    Aaa,
    AaPlus,
    Aa,
    AaMinus,
    APlus,
    A,
    AMinus,
    BbbPlus,
    Bbb,
    BbbMinus,
    BbPlus,
    Bb,
    BbMinus,
    BPlus,
    B,
    BMinus,
    CccPlus,
    Ccc,
    CccMinus,
    Cc,
    Sd,
    D,
}

impl Rating {
    pub const ALL: [Rating; 22] = [
        Rating::Aaa,
        Rating::AaPlus,
        Rating::Aa,
        Rating::AaMinus,
        Rating::APlus,
        Rating::A,
        Rating::AMinus,
        Rating::BbbPlus,
        Rating::Bbb,
        Rating::BbbMinus,
        Rating::BbPlus,
        Rating::Bb,
        Rating::BbMinus,
        Rating::BPlus,
        Rating::B,
        Rating::BMinus,
        Rating::CccPlus,
        Rating::Ccc,
        Rating::CccMinus,
        Rating::Cc,
        Rating::Sd,
        Rating::D,
    ];

    pub fn token(self) -> &'static str {
        GRANULAR_LABELS[self as usize]
    }

    pub fn broad(self) -> BroadRating {
        use Rating::*;
        match self {
            Aaa => BroadRating::Aaa,
            AaPlus | Aa | AaMinus => BroadRating::Aa,
            APlus | A | AMinus => BroadRating::A,
            BbbPlus | Bbb | BbbMinus => BroadRating::Bbb,
            BbPlus | Bb | BbMinus => BroadRating::Bb,
            BPlus | B | BMinus => BroadRating::B,
            CccPlus | Ccc | CccMinus => BroadRating::Ccc,
            Cc => BroadRating::Cc,
            Sd => BroadRating::Sd,
            D => BroadRating::D,
        }
    }

    /// AAA through BBB- are investment grade.
    pub fn is_investment_grade(self) -> bool {
        self <= Rating::BbbMinus
    }
}

impl fmt::Display for Rating {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

const GRANULAR_LABELS: [&str; 22] = [
    "AAA", "AA+", "AA", "AA-", "A+", "A", "A-", "BBB+", "BBB", "BBB-", "BB+", "BB", "BB-", "B+",
    "B", "B-", "CCC+", "CCC", "CCC-", "CC", "SD", "D",
];

const BROAD_LABELS: [&str; 10] = ["AAA", "AA", "A", "BBB", "BB", "B", "CCC", "CC", "SD", "D"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BroadRating {
    Aaa,
    Aa,
    A,
    Bbb,
    Bb,
    B,
    Ccc,
    Cc,
    Sd,
    D,
}

impl FromStr for Rating {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .trim()
            .chars()
            .map(|c| match c {
                '\u{2212}' | '\u{2013}' => '-',
                c => c.to_ascii_uppercase(),
            })
            .collect();
        GRANULAR_LABELS
            .iter()
            .position(|l| *l == norm)
            .map(|i| Rating::ALL[i])
            .ok_or_else(|| Error::UnknownRating(s.to_string()))
    }
}

/// Parses a rating cell. `None` (or an empty/"none" cell) means unrated.
pub fn parse_rating_cell(cell: Option<&str>) -> Result<Option<Rating>> {
    match cell.map(str::trim) {
        None | Some("") => Ok(None),
        Some(t) if t.eq_ignore_ascii_case("none") || t.eq_ignore_ascii_case("nr") => Ok(None),
        Some(t) => t.parse().map(Some),
    }
}

/// How finely rating categories are split into treatment dummies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreatmentGranularity {
    Any,
    InvSpec,
    Broad,
    Granular,
}

impl TreatmentGranularity {
    pub fn labels(self) -> Vec<&'static str> {
        match self {
            TreatmentGranularity::Any => vec!["rated"],
            TreatmentGranularity::InvSpec => vec!["investment", "speculative"],
            TreatmentGranularity::Broad => BROAD_LABELS.to_vec(),
            TreatmentGranularity::Granular => GRANULAR_LABELS.to_vec(),
        }
    }

    pub fn width(self) -> usize {
        self.labels().len()
    }

    /// Column index of a rating at this granularity. SD and D count as
    /// speculative grade.
    pub fn column_of(self, rating: Rating) -> usize {
        match self {
            TreatmentGranularity::Any => 0,
            TreatmentGranularity::InvSpec => usize::from(!rating.is_investment_grade()),
            TreatmentGranularity::Broad => rating.broad() as usize,
            TreatmentGranularity::Granular => rating as usize,
        }
    }
}

impl FromStr for TreatmentGranularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "any" => Ok(Self::Any),
            "invspec" => Ok(Self::InvSpec),
            "broad" => Ok(Self::Broad),
            "granular" => Ok(Self::Granular),
            other => Err(Error::InvalidParameter(format!(
                "unknown granularity `{other}`"
            ))),
        }
    }
}

impl fmt::Display for TreatmentGranularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Any => "any",
            Self::InvSpec => "invspec",
            Self::Broad => "broad",
            Self::Granular => "granular",
        };
        f.write_str(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_tokens() {
        assert_eq!("AA-".parse::<Rating>().unwrap(), Rating::AaMinus);
        assert_eq!("AA\u{2212}".parse::<Rating>().unwrap(), Rating::AaMinus);
        assert_eq!(" bbb+ ".parse::<Rating>().unwrap(), Rating::BbbPlus);
        assert!(matches!(
            "C".parse::<Rating>(),
            Err(Error::UnknownRating(_))
        ));
        assert_eq!(parse_rating_cell(Some("none")).unwrap(), None);
        assert_eq!(parse_rating_cell(None).unwrap(), None);
    }

    #[test]
    fn widths() {
        assert_eq!(TreatmentGranularity::Any.width(), 1);
        assert_eq!(TreatmentGranularity::InvSpec.width(), 2);
        assert_eq!(TreatmentGranularity::Broad.width(), 10);
        assert_eq!(TreatmentGranularity::Granular.width(), 22);
    }

    #[test]
    fn investment_boundary() {
        assert!(Rating::BbbMinus.is_investment_grade());
        assert!(!Rating::BbPlus.is_investment_grade());
        assert!(!Rating::Sd.is_investment_grade());
        assert!(!Rating::D.is_investment_grade());
    }

    #[test]
    fn tokens_round_trip() {
        for r in Rating::ALL {
            assert_eq!(r.token().parse::<Rating>().unwrap(), r);
        }
    }
}

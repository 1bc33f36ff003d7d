use std::fmt;
use std::str::FromStr;

use crate::error::ValidationError;

/// A point name: one uppercase letter, optionally followed by a numeric
/// suffix for figures that outgrow the alphabet (`A`, `B`, `A1`, `Q12`).
///
/// Ordering is (letter, suffix) with the bare letter sorting before any
/// suffixed form of the same letter: `A < A1 < A2 < B`. All canonical
/// orderings in this crate ("lexicographic" in the operation contracts)
/// are defined in terms of this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PointLabel {
    letter: u8,
    suffix: Option<u32>,
}

impl PointLabel {
    pub fn new(letter: char, suffix: Option<u32>) -> Result<Self, ValidationError> {
        if !letter.is_ascii_uppercase() {
            return Err(ValidationError::BadLabel(format!(
                "label must start with an uppercase ASCII letter, got {letter:?}"
            )));
        }
        Ok(PointLabel {
            letter: letter as u8,
            suffix,
        })
    }

    /// The bare letter form, for the common A..Z case.
    pub fn from_letter(letter: char) -> Result<Self, ValidationError> {
        Self::new(letter, None)
    }

    pub fn letter(&self) -> char {
        self.letter as char
    }

    pub fn suffix(&self) -> Option<u32> {
        self.suffix
    }
}

impl fmt::Display for PointLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter as char)?;
        if let Some(n) = self.suffix {
            write!(f, "{n}")?;
        }
        Ok(())
    }
}

impl FromStr for PointLabel {
    type Err = ValidationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        let letter = chars
            .next()
            .ok_or_else(|| ValidationError::BadLabel("empty label".into()))?;
        let rest = chars.as_str();
        let suffix = if rest.is_empty() {
            None
        } else if rest.bytes().all(|b| b.is_ascii_digit()) && rest.len() <= 6 {
            Some(rest.parse::<u32>().expect("digits"))
        } else {
            return Err(ValidationError::BadLabel(format!(
                "label suffix must be a short digit string, got {rest:?}"
            )));
        };
        PointLabel::new(letter, suffix)
    }
}

/// Writes a run of labels with no separator, the way point groups appear
/// inside statements (`ADC`, `A1B2`).
pub(crate) fn fmt_label_group(labels: &[PointLabel], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    for l in labels {
        write!(f, "{l}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_is_letter_then_suffix() {
        let a: PointLabel = "A".parse().unwrap();
        let a1: PointLabel = "A1".parse().unwrap();
        let a2: PointLabel = "A2".parse().unwrap();
        let a10: PointLabel = "A10".parse().unwrap();
        let b: PointLabel = "B".parse().unwrap();
        assert!(a < a1 && a1 < a2 && a2 < a10 && a10 < b);
    }

    #[test]
    fn rejects_lowercase_and_junk() {
        assert!("a".parse::<PointLabel>().is_err());
        assert!("".parse::<PointLabel>().is_err());
        assert!("Ax".parse::<PointLabel>().is_err());
        assert!("A1234567".parse::<PointLabel>().is_err());
    }

    #[test]
    fn display_round_trips() {
        for s in ["A", "Z", "Q7", "B12"] {
            let l: PointLabel = s.parse().unwrap();
            assert_eq!(l.to_string(), s);
        }
    }
}

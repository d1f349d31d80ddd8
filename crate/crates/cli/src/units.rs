//! Lengths with mandatory unit suffixes.

use dpcollapse_core::consts::{ANGSTROM, MICROMETER, NANOMETER};
use std::fmt;

/// Accepted suffixes, longest first so that "nm" is not read as "m".
const UNITS: [(&str, f64); 8] = [
    ("nm", NANOMETER),
    ("um", MICROMETER),
    ("μm", MICROMETER),
    ("µm", MICROMETER),
    ("mm", 1e-3),
    ("Å", ANGSTROM),
    ("A", ANGSTROM),
    ("m", 1.0),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitError(pub String);

impl fmt::Display for UnitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UnitError {}

/// Parses "2.46A", "25 um", "1e-4m" into metres.
pub fn parse_length(s: &str) -> Result<f64, UnitError> {
    let s = s.trim();
    let (number, scale) = UNITS
        .iter()
        .find_map(|&(suffix, scale)| s.strip_suffix(suffix).map(|n| (n.trim_end(), scale)))
        .ok_or_else(|| {
            UnitError(format!(
                "`{s}` has no unit suffix; write e.g. \"2.46A\", \"25um\", \"1e-4m\""
            ))
        })?;
    let value: f64 = number
        .parse()
        .map_err(|_| UnitError(format!("`{s}`: `{number}` is not a number")))?;
    if !value.is_finite() {
        return Err(UnitError(format!("`{s}` is not finite")));
    }
    Ok(value * scale)
}

/// Superposition distance, absolute or as a multiple of the longest side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Separation {
    SideMultiple(f64),
    Absolute(f64),
}

impl Separation {
    pub fn parse(s: &str) -> Result<Self, UnitError> {
        let t = s.trim();
        if let Some(k) = t.strip_suffix('L') {
            let k: f64 = k
                .trim()
                .parse()
                .map_err(|_| UnitError(format!("`{s}`: expected a multiple such as \"4L\"")))?;
            return Ok(Separation::SideMultiple(k));
        }
        parse_length(t).map(Separation::Absolute)
    }

    pub fn resolve(self, side: f64) -> f64 {
        match self {
            Separation::SideMultiple(k) => k * side,
            Separation::Absolute(d) => d,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffixes() {
        let cases = [
            ("2.46A", 2.46e-10),
            ("2.46 Å", 2.46e-10),
            ("3nm", 3e-9),
            ("25um", 25e-6),
            ("25μm", 25e-6),
            ("25µm", 25e-6),
            ("1e-4m", 1e-4),
            ("0.5mm", 5e-4),
        ];
        for (s, want) in cases {
            let got = parse_length(s).unwrap();
            assert!((got - want).abs() <= 1e-15 * want, "{s}: {got}");
        }
    }

    #[test]
    fn bare_numbers_rejected() {
        assert!(parse_length("2.46").is_err());
        assert!(parse_length("").is_err());
        assert!(parse_length("m").is_err());
        assert!(parse_length("abcA").is_err());
        assert!(parse_length("infm").is_err());
    }

    #[test]
    fn separations() {
        assert_eq!(Separation::parse("4L").unwrap(), Separation::SideMultiple(4.0));
        match Separation::parse("100um").unwrap() {
            Separation::Absolute(d) => assert!((d - 100e-6).abs() < 1e-18),
            other => panic!("{other:?}"),
        }
        assert_eq!(Separation::parse("2.5L").unwrap().resolve(2.0), 5.0);
        assert!(Separation::parse("4").is_err());
        assert!(Separation::parse("xL").is_err());
    }
}

//! Compact duration strings: `500ms`, `30s`, `5m`, `24h`, `5d`.

use crate::error::{Error, Result};

const UNITS: [(&str, u64); 5] = [
    ("ms", 1),
    ("s", 1_000),
    ("m", 60_000),
    ("h", 3_600_000),
    ("d", 86_400_000),
];

/// Parses a positive duration into milliseconds. A bare number is minutes.
pub fn parse_duration_ms(text: &str) -> Result<u64> {
    let text = text.trim();
    let split = text
        .find(|c: char| !c.is_ascii_digit())
        .unwrap_or(text.len());
    let (number, unit) = text.split_at(split);
    let value: u64 = number
        .parse()
        .map_err(|_| Error::Parse(format!("invalid duration '{text}'")))?;
    let scale = if unit.is_empty() {
        60_000
    } else {
        UNITS
            .iter()
            .find(|(u, _)| *u == unit)
            .map(|&(_, s)| s)
            .ok_or_else(|| Error::Parse(format!("unknown duration unit in '{text}'")))?
    };
    match value.checked_mul(scale) {
        Some(0) | None => Err(Error::Parse(format!("duration '{text}' must be positive"))),
        Some(ms) => Ok(ms),
    }
}

/// Largest unit that divides the value exactly.
pub fn format_duration_ms(ms: u64) -> String {
    UNITS
        .iter()
        .rev()
        .find(|&&(_, s)| ms.is_multiple_of(s) && ms >= s)
        .map(|&(u, s)| format!("{}{u}", ms / s))
        .unwrap_or_else(|| format!("{ms}ms"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_duration_ms("24h").unwrap(), 86_400_000);
        assert_eq!(parse_duration_ms("30m").unwrap(), 1_800_000);
        assert_eq!(parse_duration_ms("5d").unwrap(), 432_000_000);
        assert_eq!(parse_duration_ms("500ms").unwrap(), 500);
        assert_eq!(parse_duration_ms("15").unwrap(), 900_000);
        assert!(parse_duration_ms("0h").is_err());
        assert!(parse_duration_ms("3w").is_err());
        assert!(parse_duration_ms("h").is_err());
        for s in ["5m", "1h", "6h", "12h", "1d", "5d", "500ms", "90s"] {
            assert_eq!(format_duration_ms(parse_duration_ms(s).unwrap()), s);
        }
    }
}

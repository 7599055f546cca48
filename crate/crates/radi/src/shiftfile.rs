//! Shift files: one shift per line as `re im` (or just `re`), `#` starts a comment.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use radi_core::dense::C64;
use radi_core::ShiftList;

use crate::error::{Error, Result};

pub fn read_shift_file(path: &Path) -> Result<ShiftList> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_shifts(&text, path)
}

pub fn parse_shifts(text: &str, path: &Path) -> Result<ShiftList> {
    let mut shifts = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let ln = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() > 2 {
            return Err(Error::parse(path, ln, "expected 're im'"));
        }
        let num = |t: &str| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(path, ln, format!("invalid number '{t}'")))
        };
        let re = num(toks[0])?;
        let im = if toks.len() == 2 { num(toks[1])? } else { 0.0 };
        let s = C64::new(re, im);
        radi_core::problem::check_shift(s).map_err(|e| Error::parse(path, ln, e.to_string()))?;
        shifts.push(s);
    }
    Ok(ShiftList::new(shifts)?)
}

pub fn format_shifts(shifts: &[C64]) -> String {
    let mut out = String::new();
    for s in shifts {
        let _ = writeln!(out, "{:.16e} {:.16e}", s.re, s.im);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<ShiftList> {
        parse_shifts(s, Path::new("s.txt"))
    }

    #[test]
    fn parses_lines_and_comments() {
        assert_eq!(parse("1.0 0.0").unwrap().shifts(), [C64::new(1.0, 0.0)]);
        assert_eq!(
            parse("# pair\n2.0 3.0\n\n2.0 -3.0 # conj\n").unwrap().shifts(),
            [C64::new(2.0, 3.0), C64::new(2.0, -3.0)]
        );
        assert_eq!(parse("4").unwrap().shifts(), [C64::new(4.0, 0.0)]);
    }

    #[test]
    fn rejects_bad_lines() {
        let e = parse("1.0 0.0\n-1.0 0.0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        assert!(e.to_string().contains("shift real part must be positive"));
        assert!(parse("1.0 x").is_err());
        assert!(parse("1 2 3").is_err());
        assert!(parse("NaN 0").is_err());
    }

    #[test]
    fn round_trip() {
        let s = [C64::new(0.1, 1.0 / 3.0), C64::new(2.0, 0.0)];
        assert_eq!(parse(&format_shifts(&s)).unwrap().shifts(), s);
    }
}

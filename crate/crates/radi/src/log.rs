//! CSV convergence logs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use radi_core::ConvergenceRecord;

use crate::error::{Error, Result};

pub const HEADER: &str = "iter,subspace_dim,rel_residual,expansion_s,absorb_s,total_s";

pub fn format_log(records: &[ConvergenceRecord]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.iter, r.subspace_dim, r.rel_residual, r.expansion_s, r.absorb_s, r.total_s
        );
    }
    out
}

pub fn write_convergence_log(records: &[ConvergenceRecord], path: &Path) -> Result<()> {
    fs::write(path, format_log(records)).map_err(|e| Error::io(path, e))
}

pub fn parse_log(text: &str, path: &Path) -> Result<Vec<ConvergenceRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == HEADER => {}
        _ => return Err(Error::parse(path, 1, "missing log header")),
    }
    let mut out = Vec::new();
    for (idx, line) in lines {
        let ln = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(Error::parse(path, ln, "expected 6 fields"));
        }
        let int = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::parse(path, ln, format!("invalid integer '{t}'")))
        };
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::parse(path, ln, format!("invalid number '{t}'")))
        };
        out.push(ConvergenceRecord {
            iter: int(f[0])?,
            subspace_dim: int(f[1])?,
            rel_residual: num(f[2])?,
            expansion_s: num(f[3])?,
            absorb_s: num(f[4])?,
            total_s: num(f[5])?,
        });
    }
    Ok(out)
}

pub fn read_convergence_log(path: &Path) -> Result<Vec<ConvergenceRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_log(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(iter: usize, q: usize, r: f64) -> ConvergenceRecord {
        ConvergenceRecord {
            iter,
            subspace_dim: q,
            rel_residual: r,
            expansion_s: 1.0 / 3.0,
            absorb_s: 2e-7,
            total_s: 0.1,
        }
    }

    #[test]
    fn empty_log_is_header_only() {
        assert_eq!(format_log(&[]), format!("{HEADER}\n"));
    }

    #[test]
    fn one_record_two_lines() {
        let s = format_log(&[rec(1, 2, 0.5)]);
        assert_eq!(s.lines().count(), 2);
        let digits: usize = s.lines().nth(1).unwrap().split(',').nth(2).unwrap().chars().filter(char::is_ascii_digit).count();
        assert!(digits >= 15);
    }

    #[test]
    fn round_trip() {
        let recs = vec![rec(1, 2, 0.5), rec(2, 4, 1.0 / 7.0), rec(3, 6, 1.234567890123456e-11)];
        let back = parse_log(&format_log(&recs), Path::new("log.csv")).unwrap();
        assert_eq!(back, recs);
    }
}

//! Line-oriented text format: `coeff_re coeff_im | j:exp,... | j:exp,...`
//! per monomial (`α` then `β`). An optional `# cutoff M` header fixes the window.

use super::{MonoKey, MultiIndex, Poly};
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::fmt::Write;

pub fn to_text(p: &Poly) -> String {
    let mut out = format!("# cutoff {}\n", p.cutoff());
    for (k, c) in p.terms() {
        writeln!(out, "{:.17e} {:.17e} | {} | {}", c.re, c.im, k.alpha(), k.beta()).unwrap();
    }
    out
}

fn parse_index(s: &str, line: usize) -> Result<MultiIndex> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(MultiIndex::new());
    }
    let mut pairs = Vec::new();
    for item in s.split(',') {
        let (j, e) = item
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("line {line}: expected j:exp, got {item:?}")))?;
        let j: i64 = j.trim().parse().map_err(|_| Error::Parse(format!("line {line}: bad mode {j:?}")))?;
        let e: u32 = e.trim().parse().map_err(|_| Error::Parse(format!("line {line}: bad exponent {e:?}")))?;
        pairs.push((j, e));
    }
    Ok(MultiIndex::from_pairs(pairs))
}

/// Parses the text format. Without a header the window is the largest mode present.
pub fn from_text(text: &str) -> Result<Poly> {
    let mut cutoff: Option<usize> = None;
    let mut entries = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(v) = rest.trim().strip_prefix("cutoff") {
                cutoff = Some(v.trim().parse().map_err(|_| Error::Parse(format!("line {}: bad cutoff", n + 1)))?);
            }
            continue;
        }
        let parts: Vec<&str> = line.split('|').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("line {}: expected three '|'-separated fields", n + 1)));
        }
        let nums: Vec<f64> = parts[0]
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse(format!("line {}: bad coefficient", n + 1)))?;
        if nums.len() != 2 {
            return Err(Error::Parse(format!("line {}: expected re and im", n + 1)));
        }
        let key = MonoKey::new(parse_index(parts[1], n + 1)?, parse_index(parts[2], n + 1)?);
        entries.push((key, Complex64::new(nums[0], nums[1])));
    }
    let cutoff = cutoff.unwrap_or_else(|| entries.iter().map(|(k, _)| k.max_abs_mode() as usize).max().unwrap_or(0));
    let mut p = Poly::zero(cutoff);
    for (k, c) in entries {
        p.add_term(k, c)?;
    }
    Ok(p)
}

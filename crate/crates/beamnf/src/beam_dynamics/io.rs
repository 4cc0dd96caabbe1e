use super::BeamState;
use crate::error::{Error, Result};
use crate::small_divisors::FrequencyVector;
use crate::weighted_spaces::SeqState;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const MAGIC: &[u8; 8] = b"BEAMCKP1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub norm_w: f64,
    pub energy: f64,
    pub momentum: f64,
}

/// CSV with header `t,norm_w,energy,momentum`.
pub fn trajectory_csv(rows: &[TrajectoryRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// Layout (little endian): magic, `M: u64`, `m: f64`, `t: f64`, then
/// `(re, im)` for `j = −M..=M`.
pub fn write_checkpoint(state: &BeamState) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + 16 * state.u.coeffs().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(state.cutoff() as u64).to_le_bytes());
    out.extend_from_slice(&state.mass().to_le_bytes());
    out.extend_from_slice(&state.t.to_le_bytes());
    for c in state.u.coeffs() {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    out
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<BeamState> {
    let bad = |m: &str| Error::Parse(format!("checkpoint: {m}"));
    if bytes.len() < 32 || &bytes[..8] != MAGIC {
        return Err(bad("missing header"));
    }
    let word = |i: usize| -> [u8; 8] { bytes[i..i + 8].try_into().expect("8 bytes") };
    let cutoff = usize::try_from(u64::from_le_bytes(word(8))).map_err(|_| bad("cutoff too large"))?;
    let m = f64::from_le_bytes(word(16));
    let t = f64::from_le_bytes(word(24));
    let n = cutoff.checked_mul(2).and_then(|x| x.checked_add(1)).ok_or_else(|| bad("cutoff too large"))?;
    if bytes.len() != 32 + 16 * n {
        return Err(bad("length does not match cutoff"));
    }
    let coeffs = (0..n)
        .map(|k| {
            let i = 32 + 16 * k;
            Complex64::new(f64::from_le_bytes(word(i)), f64::from_le_bytes(word(i + 8)))
        })
        .collect();
    let u = SeqState::from_vec(cutoff, coeffs)?;
    Ok(BeamState { u, freq: FrequencyVector::new(m, cutoff)?, t })
}

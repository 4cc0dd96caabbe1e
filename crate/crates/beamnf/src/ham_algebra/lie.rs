use super::PolyHamiltonian;
use crate::error::{check_cutoff, Error, Result};

/// `Σ_{k ≥ first} weight(k) L_S^k H` with `L_S H = {H, S}`, keeping total
/// degree `≤ max_total`. Each bracket raises the scaling degree by `d(S) ≥ 1`,
/// so the sum is finite.
pub fn lie_sum(
    h: &PolyHamiltonian,
    s: &PolyHamiltonian,
    max_total: u32,
    first: usize,
    weight: impl Fn(usize) -> f64,
) -> Result<PolyHamiltonian> {
    check_cutoff(h.cutoff(), s.cutoff())?;
    match s.scaling_degree() {
        None => {
            return Ok(if first == 0 { h.truncate_total_degree(max_total).scale(weight(0)) } else { PolyHamiltonian::zero(h.cutoff()) })
        }
        Some(d) if d < 1 => return Err(Error::NonTerminating),
        Some(_) => {}
    }
    let mut power = h.truncate_total_degree(max_total);
    let mut acc = PolyHamiltonian::zero(h.cutoff());
    let mut k = 0;
    while !power.is_zero() {
        if k >= first {
            acc = acc.add(&power.scale(weight(k)))?;
        }
        power = power.bracket_truncated(s, Some(max_total))?;
        k += 1;
    }
    Ok(acc)
}

pub(crate) fn inv_factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc / i as f64)
}

/// `e^{L_S} H = Σ_k L_S^k H / k!` truncated at scaling degree `degree_cutoff`.
pub fn lie_transform(h: &PolyHamiltonian, s: &PolyHamiltonian, degree_cutoff: i64) -> Result<PolyHamiltonian> {
    if let Some(dh) = h.scaling_degree() {
        if degree_cutoff < dh {
            return Err(Error::Parameter(format!(
                "degree cutoff {degree_cutoff} below the scaling degree {dh} of H"
            )));
        }
    }
    if degree_cutoff < 0 {
        return Err(Error::Parameter("degree cutoff must be nonnegative".into()));
    }
    lie_sum(h, s, (degree_cutoff + 2) as u32, 0, inv_factorial)
}

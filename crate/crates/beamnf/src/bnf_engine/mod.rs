//! Homological equation, one Birkhoff normal form step, and the full
//! iteration with its parameter schedule and norm ledger.

mod predict;
mod schedule;
mod step;

pub use predict::{optimal_p, predicted_times, PredictParams, Prediction, PredictedTimes};
pub use schedule::{ln_j0_bound, j0_bound, ParamSchedule, Regularity};
pub use step::{bnf_iterate, bnf_step, BnfOutcome, BnfReport, NormalFormState, StepOptions, StepOutput, StepRecord};

use crate::error::{check_cutoff, Error, Result};
use crate::ham_algebra::{Poly, PolyHamiltonian};
use crate::small_divisors::FrequencyVector;
use num_complex::Complex64;

/// Adjoint action `L_ω H = {H, D_ω} = Σ −i ω·(α−β) H_{αβ} u^α ū^β`.
pub fn adjoint_action(h: &Poly, freq: &FrequencyVector) -> Result<Poly> {
    check_cutoff(freq.cutoff(), h.cutoff())?;
    let mut out = Poly::zero(h.cutoff());
    for (k, c) in h.terms() {
        let psi = freq.divisor_of(k.alpha(), k.beta());
        out.add_term(k.clone(), Complex64::new(0.0, -psi) * c)?;
    }
    Ok(out)
}

/// Solves `L_ω S = R` coefficientwise: `S_{αβ} = R_{αβ} / (−i ω·(α−β))`.
pub fn solve_homological(r: &PolyHamiltonian, freq: &FrequencyVector) -> Result<PolyHamiltonian> {
    check_cutoff(freq.cutoff(), r.cutoff())?;
    let mut out = Poly::zero(r.cutoff());
    for (k, c) in r.terms() {
        if k.is_resonant() {
            return Err(Error::Domain(format!("resonant monomial {k} in homological equation")));
        }
        let psi = freq.divisor_of(k.alpha(), k.beta());
        out.add_term(k.clone(), c / Complex64::new(0.0, -psi))?;
    }
    Ok(PolyHamiltonian::symmetrized(out))
}

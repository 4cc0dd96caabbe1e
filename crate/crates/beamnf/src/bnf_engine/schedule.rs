use crate::error::{Error, Result};
use crate::weighted_spaces::Weight;
use serde::{Deserialize, Serialize};
use std::f64::consts::E;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regularity {
    SubExp,
    Sobolev,
}

/// `ln J₀`: sub-exponential `−4N ln γ + exp((N²𝙲/σ)^{1/(q−1)})`, Sobolev
/// `−4N ln γ + 𝙲ζ` (requires `ζ ≥ (36N)²`). May be `+∞`.
pub fn ln_j0_bound(kind: Regularity, sigma_or_zeta: f64, n: usize, gamma: f64, q: f64, big_c: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Parameter(format!("γ = {gamma} outside (0, 1]")));
    }
    if !(sigma_or_zeta > 0.0) {
        return Err(Error::Parameter(format!("σ/ζ = {sigma_or_zeta} must be positive")));
    }
    let n_f = n as f64;
    let gamma_part = -4.0 * n_f * gamma.ln();
    match kind {
        Regularity::SubExp => {
            if !(q > 1.0 && q <= 2.0) {
                return Err(Error::Parameter(format!("q = {q} outside (1, 2]")));
            }
            Ok(gamma_part + (n_f * n_f * big_c / sigma_or_zeta).powf(1.0 / (q - 1.0)).exp())
        }
        Regularity::Sobolev => {
            let min = (36.0 * n_f).powi(2);
            if sigma_or_zeta < min {
                return Err(Error::Parameter(format!("ζ = {sigma_or_zeta} below (36N)² = {min}")));
            }
            Ok(gamma_part + big_c * sigma_or_zeta)
        }
    }
}

pub fn j0_bound(kind: Regularity, sigma_or_zeta: f64, n: usize, gamma: f64, q: f64, big_c: f64) -> Result<f64> {
    ln_j0_bound(kind, sigma_or_zeta, n, gamma, q, big_c).map(f64::exp)
}

/// Radii, weights and small parameters of the `K`-step iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSchedule {
    pub kind: Regularity,
    /// Initial radius `r₀`.
    pub r0: f64,
    /// Reference radius at which `|R₀|` is measured.
    pub r_bar: f64,
    pub s0: f64,
    pub p: f64,
    pub q: f64,
    pub gamma: f64,
    /// Number of steps `K`.
    pub k_max: usize,
    /// Absolute constant of the divisor-loss bound.
    pub big_c: f64,
}

impl ParamSchedule {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Parameter(m));
        if self.k_max == 0 {
            return bad("K must be at least 1".into());
        }
        if !(self.r0 > 0.0 && self.r_bar > 0.0) {
            return bad("radii must be positive".into());
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("γ = {} outside (0, 1)", self.gamma));
        }
        if !(self.q > 1.0 && self.q <= 2.0) {
            return bad(format!("q = {} outside (1, 2]", self.q));
        }
        if !(self.p > 0.5) {
            return bad(format!("p = {} must exceed 1/2", self.p));
        }
        if self.kind == Regularity::SubExp && !(self.s0 > 0.0) {
            return bad("sub-exponential schedule needs s₀ > 0".into());
        }
        if !(self.big_c > 0.0) {
            return bad("𝙲 must be positive".into());
        }
        Ok(())
    }

    fn frac(&self, k: usize) -> f64 {
        k as f64 / (2 * self.k_max) as f64
    }

    /// `r_k = r₀(1 − k/2K)`.
    pub fn r(&self, k: usize) -> f64 {
        self.r0 * (1.0 - self.frac(k))
    }

    /// `δ_k = (r_k − r_{k+1}) / (16 e r_k)`.
    pub fn delta(&self, k: usize) -> f64 {
        (self.r(k) - self.r(k + 1)) / (16.0 * E * self.r(k))
    }

    /// `s_k = s₀(1 + k/2K)`.
    pub fn s(&self, k: usize) -> f64 {
        self.s0 * (1.0 + self.frac(k))
    }

    /// `σ_k = s₀ k/2K`.
    pub fn sigma(&self, k: usize) -> f64 {
        self.s0 * self.frac(k)
    }

    /// `ζ_k = (36k)²`.
    pub fn zeta(k: usize) -> f64 {
        (36.0 * k as f64).powi(2)
    }

    pub fn zeta_sum(k: usize) -> f64 {
        (1..=k).map(Self::zeta).sum()
    }

    /// Weight `w_k`: `w(s_k, p)` or `w(p + Σ_{i≤k} ζ_i)`.
    pub fn weight(&self, k: usize, cutoff: usize) -> Result<Weight> {
        match self.kind {
            Regularity::SubExp => Weight::subexp(self.s(k), self.p, self.q, cutoff),
            Regularity::Sobolev => Weight::sobolev(self.p + Self::zeta_sum(k), cutoff),
        }
    }

    pub fn final_weight(&self, cutoff: usize) -> Result<Weight> {
        self.weight(self.k_max, cutoff)
    }

    /// `ln J_k` with `J_k = J₀(σ_k, k)` or `J₀(Σ_{i≤k} ζ_i, k)`, for `k ≥ 1`.
    pub fn ln_j(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::Parameter("J_k is defined for k ≥ 1".into()));
        }
        let arg = match self.kind {
            Regularity::SubExp => self.sigma(k),
            Regularity::Sobolev => Self::zeta_sum(k),
        };
        ln_j0_bound(self.kind, arg, k, self.gamma, self.q, self.big_c)
    }

    /// Closed forms used in the final bounds: `γ^{−4K} exp(e^{K²𝙲/s₀})` or
    /// `γ^{−4K} exp(𝙲 2¹² K³)`.
    pub fn ln_j_final(&self) -> f64 {
        let k = self.k_max as f64;
        let g = -4.0 * k * self.gamma.ln();
        match self.kind {
            Regularity::SubExp => g + (k * k * self.big_c / self.s0).exp(),
            Regularity::Sobolev => g + self.big_c * 4096.0 * k.powi(3),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sched(kind: Regularity) -> ParamSchedule {
        ParamSchedule { kind, r0: 0.02, r_bar: 1.0, s0: 0.5, p: 1.5, q: 1.5, gamma: 0.1, k_max: 3, big_c: 1.0 }
    }

    #[test]
    fn schedule_identities() {
        let s = sched(Regularity::SubExp);
        assert_eq!(s.r(s.k_max), s.r0 / 2.0);
        assert_eq!(s.s(s.k_max), 1.5 * s.s0);
        assert_eq!(s.r(0), s.r0);
        assert_eq!(ParamSchedule::zeta(2), 5184.0);
        assert!((s.delta(0) - (s.r0 / 6.0) / (16.0 * E * s.r0)).abs() < 1e-15);
        assert!(s.validate().is_ok());
        let w = s.final_weight(4).unwrap();
        assert!((w.at(3) - 3f64.powf(1.5) * (0.75 * 5f64.ln().powf(1.5)).exp()).abs() < 1e-12);
    }

    #[test]
    fn j0_examples() {
        let a = ln_j0_bound(Regularity::Sobolev, 1296.0, 1, 0.1, 1.5, 1.0).unwrap();
        assert!((a - (1296.0 - 4.0 * 0.1f64.ln())).abs() < 1e-10);
        assert!(ln_j0_bound(Regularity::Sobolev, 1000.0, 1, 0.1, 1.5, 1.0).is_err());
        let g1 = ln_j0_bound(Regularity::SubExp, 2.0, 1, 1.0, 1.5, 1.0).unwrap();
        assert!((g1 - 0.25f64.exp()).abs() < 1e-14);
        let s1 = ln_j0_bound(Regularity::SubExp, 1.0, 2, 0.1, 1.5, 1.0).unwrap();
        let s2 = ln_j0_bound(Regularity::SubExp, 2.0, 2, 0.1, 1.5, 1.0).unwrap();
        let n3 = ln_j0_bound(Regularity::SubExp, 1.0, 3, 0.1, 1.5, 1.0).unwrap();
        assert!(s2 < s1 && n3 > s1);
        assert!(j0_bound(Regularity::SubExp, 0.01, 3, 0.1, 1.1, 1.0).unwrap().is_infinite());
    }

    #[test]
    fn j_sequence() {
        let s = sched(Regularity::Sobolev);
        assert!(s.ln_j(0).is_err());
        assert!(s.ln_j(1).unwrap() < s.ln_j(2).unwrap());
        assert!(s.weight(2, 3).unwrap().p() == 1.5 + 1296.0 + 5184.0);
    }
}

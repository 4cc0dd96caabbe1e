//! The beam equation `ψ_tt + ψ_xxxx + mψ + f(ψ) = 0` on truncated Fourier
//! modes, in the complex variables `u = (ω^{1/2}ψ + iω^{-1/2}v)/√2`, where
//!
//! `u̇_j = −iω_j u_j − (i/√2) ω_j^{-1/2} (f(φ))_j`, `φ_j = ω_j^{-1/2}(u_j + ū_{-j})/√2`,
//!
//! with `f = F'` and the space average normalized to one.

mod integrate;
mod io;

pub use integrate::{
    apply_generator_flow, apply_generator_flow_with, integrate, stability_time, stability_time_with, step, step_with,
    FlowOptions, Interaction, PolyInteraction, Scheme, StabilityOptions, StabilityResult,
};
pub use io::{read_checkpoint, trajectory_csv, write_checkpoint, TrajectoryRow};

use crate::error::{Error, Result};
use crate::ham_algebra::{MonoKey, MultiIndex, Poly, PolyHamiltonian};
use crate::small_divisors::FrequencyVector;
use crate::weighted_spaces::SeqState;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Taylor data `F(y) = Σ_{d≥3} F^{(d)} y^d` together with a radius `R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearitySpec {
    coeffs: BTreeMap<u32, f64>,
    radius: f64,
}

impl NonlinearitySpec {
    pub fn new(coeffs: impl IntoIterator<Item = (u32, f64)>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Parameter(format!("radius R = {radius} must be positive")));
        }
        let mut map = BTreeMap::new();
        for (d, c) in coeffs {
            if d < 3 {
                return Err(Error::Parameter(format!("Taylor degree {d} below 3")));
            }
            if !c.is_finite() {
                return Err(Error::Parameter(format!("F^({d}) is not finite")));
            }
            if c != 0.0 {
                *map.entry(d).or_insert(0.0) += c;
            }
        }
        Ok(Self { coeffs: map, radius })
    }

    /// `F(y) = a y³`, radius 1.
    pub fn cubic(a: f64) -> Self {
        Self::new([(3, a)], 1.0).expect("valid cubic")
    }

    pub fn zero() -> Self {
        Self { coeffs: BTreeMap::new(), radius: 1.0 }
    }

    pub fn coeffs(&self) -> &BTreeMap<u32, f64> {
        &self.coeffs
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn max_degree(&self) -> u32 {
        self.coeffs.keys().next_back().copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `|F|_R = Σ |F^{(d)}| R^d`.
    pub fn f_norm(&self) -> f64 {
        self.coeffs.iter().map(|(&d, c)| c.abs() * self.radius.powi(d as i32)).sum()
    }

    /// Keeps degrees `≤ d`.
    pub fn truncated(&self, d: u32) -> Self {
        Self { coeffs: self.coeffs.range(..=d).map(|(&k, &v)| (k, v)).collect(), radius: self.radius }
    }
}

/// Truncated complex state `(u_j)_{|j|≤M}` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamState {
    pub u: SeqState,
    pub freq: FrequencyVector,
    pub t: f64,
}

impl BeamState {
    pub fn new(u: SeqState, m: f64) -> Result<Self> {
        let freq = FrequencyVector::new(m, u.cutoff())?;
        Ok(Self { u, freq, t: 0.0 })
    }

    pub fn cutoff(&self) -> usize {
        self.u.cutoff()
    }

    pub fn mass(&self) -> f64 {
        self.freq.mass()
    }
}

fn check_real(x: &SeqState, name: &str) -> Result<()> {
    let scale = x.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
    for (j, c) in x.iter() {
        if (c - x.get(-j).conj()).norm() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Domain(format!("{name} is not real: coefficient {j} is not conj of {}", -j)));
        }
    }
    Ok(())
}

/// `u = (ω^{1/2}ψ + iω^{-1/2}v)/√2` for real `(ψ, v)`.
pub fn complexify(psi: &SeqState, v: &SeqState, m: f64) -> Result<BeamState> {
    crate::error::check_cutoff(psi.cutoff(), v.cutoff())?;
    check_real(psi, "ψ")?;
    check_real(v, "v")?;
    let freq = FrequencyVector::new(m, psi.cutoff())?;
    let u = SeqState::from_fn(psi.cutoff(), |j| {
        let w = freq.at(j).sqrt();
        (psi.get(j) * w + Complex64::i() * v.get(j) / w) / SQRT_2
    });
    Ok(BeamState { u, freq, t: 0.0 })
}

/// Inverse of [`complexify`]: `(ψ, v)`.
pub fn realify(state: &BeamState) -> (SeqState, SeqState) {
    let u = &state.u;
    let n = u.cutoff();
    let psi = SeqState::from_fn(n, |j| (u.get(j) + u.get(-j).conj()) / (SQRT_2 * state.freq.at(j).sqrt()));
    let v = SeqState::from_fn(n, |j| {
        (u.get(j) - u.get(-j).conj()) * state.freq.at(j).sqrt() / (SQRT_2 * Complex64::i())
    });
    (psi, v)
}

/// `R₀ = ⟨F(φ)⟩` as a polynomial in `(u, ū)`, keeping Taylor degrees
/// `≤ degree_cutoff`. Coefficient of `u^α ū^β`:
/// `F^{(d)} 2^{-d/2} (d! / α!β!) ∏ ω^{-(α_j+β_j)/2}`.
pub fn build_r0(spec: &NonlinearitySpec, m: f64, cutoff: usize, degree_cutoff: u32) -> Result<PolyHamiltonian> {
    if degree_cutoff < 3 {
        return Err(Error::Domain(format!("degree cutoff {degree_cutoff} below 3")));
    }
    if spec.max_degree() > degree_cutoff {
        return Err(Error::Domain(format!(
            "degree cutoff {degree_cutoff} below the Taylor degree {}",
            spec.max_degree()
        )));
    }
    let freq = FrequencyVector::new(m, cutoff)?;
    let mm = cutoff as i64;
    // variable (j, conjugated): momentum +j for u_j, −j for ū_j
    let vars: Vec<(i64, bool)> = (-mm..=mm).flat_map(|j| [(j, false), (j, true)]).collect();
    let inv_sqrt_omega: Vec<f64> = (-mm..=mm).map(|j| freq.at(j).powf(-0.5)).collect();
    let mut poly = Poly::zero(cutoff);
    for (&d, &fd) in spec.coeffs() {
        let mut chosen = Vec::with_capacity(d as usize);
        enumerate_multisets(&vars, d as usize, 0, 0, mm, &mut chosen, &mut |sel| {
            let mut alpha = BTreeMap::<i64, u32>::new();
            let mut beta = BTreeMap::<i64, u32>::new();
            let mut prod = 1.0;
            for &i in sel {
                let (j, conj) = vars[i];
                *if conj { &mut beta } else { &mut alpha }.entry(j).or_insert(0) += 1;
                prod *= inv_sqrt_omega[(j + mm) as usize];
            }
            let multinomial = factorial(d) / alpha.values().chain(beta.values()).map(|&e| factorial(e)).product::<f64>();
            let coeff = fd * 2f64.powf(-(d as f64) / 2.0) * multinomial * prod;
            let key = MonoKey::new(MultiIndex::from_pairs(alpha), MultiIndex::from_pairs(beta));
            poly.add_term_unchecked(key, Complex64::new(coeff, 0.0));
        });
    }
    PolyHamiltonian::from_poly(poly)
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Nondecreasing index selections of length `left` with total momentum zero.
fn enumerate_multisets(
    vars: &[(i64, bool)],
    left: usize,
    start: usize,
    momentum: i64,
    max_mode: i64,
    chosen: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if left == 0 {
        if momentum == 0 {
            visit(chosen);
        }
        return;
    }
    if momentum.abs() > left as i64 * max_mode {
        return;
    }
    for i in start..vars.len() {
        let (j, conj) = vars[i];
        chosen.push(i);
        enumerate_multisets(vars, left - 1, i, momentum + if conj { -j } else { j }, max_mode, chosen, visit);
        chosen.pop();
    }
}

/// `φ_j = ω_j^{-1/2}(u_j + ū_{-j})/√2`.
pub fn position_modes(u: &SeqState, freq: &FrequencyVector) -> SeqState {
    SeqState::from_fn(u.cutoff(), |j| (u.get(j) + u.get(-j).conj()) / (SQRT_2 * freq.at(j).sqrt()))
}

/// Untruncated convolution of coefficient lists centered at `(len−1)/2`.
fn full_convolve(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![ZERO; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if *x == ZERO {
            continue;
        }
        for (k, y) in b.iter().enumerate() {
            out[i + k] += x * y;
        }
    }
    out
}

/// Coefficients of `φ^k`, `k = 0..=n`, each centered (mode 0 in the middle).
fn powers(phi: &SeqState, n: usize) -> Vec<Vec<Complex64>> {
    let mut out = vec![vec![Complex64::new(1.0, 0.0)]];
    for k in 1..=n {
        let next = full_convolve(&out[k - 1], phi.coeffs());
        out.push(next);
    }
    out
}

fn centered(v: &[Complex64], j: i64) -> Complex64 {
    let c = (v.len() / 2) as i64;
    let i = c + j;
    if i < 0 || i >= v.len() as i64 {
        ZERO
    } else {
        v[i as usize]
    }
}

/// Interaction field `−(i/√2) ω_j^{-1/2} (f(φ))_j` via convolution powers.
pub fn nonlinear_field(u: &SeqState, freq: &FrequencyVector, spec: &NonlinearitySpec) -> SeqState {
    if spec.is_zero() {
        return SeqState::zeros(u.cutoff());
    }
    let phi = position_modes(u, freq);
    let pw = powers(&phi, spec.max_degree() as usize - 1);
    SeqState::from_fn(u.cutoff(), |j| {
        let f_j: Complex64 = spec.coeffs().iter().map(|(&d, &c)| centered(&pw[d as usize - 1], j) * (c * d as f64)).sum();
        -Complex64::i() * f_j / (SQRT_2 * freq.at(j).sqrt())
    })
}

/// `R₀(u) = ⟨F(φ)⟩`.
pub fn r0_value(u: &SeqState, freq: &FrequencyVector, spec: &NonlinearitySpec) -> f64 {
    if spec.is_zero() {
        return 0.0;
    }
    let phi = position_modes(u, freq);
    let pw = powers(&phi, spec.max_degree() as usize);
    spec.coeffs().iter().map(|(&d, &c)| c * centered(&pw[d as usize], 0).re).sum()
}

/// `Σ ω_j |u_j|²`.
pub fn quadratic_energy(u: &SeqState, freq: &FrequencyVector) -> f64 {
    u.iter().map(|(j, c)| freq.at(j) * c.norm_sqr()).sum()
}

/// `H = D_ω + R₀`.
pub fn energy(state: &BeamState, spec: &NonlinearitySpec) -> f64 {
    quadratic_energy(&state.u, &state.freq) + r0_value(&state.u, &state.freq, spec)
}

/// `Σ j |u_j|²`.
pub fn momentum(u: &SeqState) -> f64 {
    u.iter().map(|(j, c)| j as f64 * c.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample(n: usize, scale: f64, seed: u64) -> SeqState {
        let mut x = seed;
        let mut next = move || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        SeqState::from_fn(n, |_| c(scale * next(), scale * next()))
    }

    #[test]
    fn cubic_single_mode_coefficients() {
        let h = build_r0(&NonlinearitySpec::cubic(1.0), 1.0, 1, 3).unwrap();
        let k0 = |a: u32, b: u32| {
            MonoKey::new(MultiIndex::from_pairs([(0, a)]), MultiIndex::from_pairs([(0, b)]))
        };
        // ω₀ = 1 at m = 1
        let s = 2f64.powf(-1.5);
        assert!((h.get(&k0(3, 0)).re - s).abs() < 1e-15);
        assert!((h.get(&k0(2, 1)).re - 3.0 * s).abs() < 1e-15);
        assert!((h.get(&k0(1, 2)).re - 3.0 * s).abs() < 1e-15);
        assert!(h.terms().all(|(_, z)| z.norm() <= 6.0 * s + 1e-15));
        assert!(build_r0(&NonlinearitySpec::zero(), 1.0, 3, 3).unwrap().is_zero());
        assert!(build_r0(&NonlinearitySpec::cubic(1.0), 1.0, 3, 2).is_err());
    }

    #[test]
    fn polynomial_matches_spectral_evaluation() {
        let spec = NonlinearitySpec::new([(3, 1.0), (4, -0.7), (5, 0.3)], 1.0).unwrap();
        let (m, n) = (1.37, 3);
        let h = build_r0(&spec, m, n, 5).unwrap();
        let freq = FrequencyVector::new(m, n).unwrap();
        for seed in 0..4 {
            let u = sample(n, 0.05, seed);
            let x_poly = h.vector_field(&u, false).unwrap();
            let x_spec = nonlinear_field(&u, &freq, &spec);
            assert!(x_poly.max_diff(&x_spec) <= 1e-13 * x_spec.l2().max(1e-300));
            let v = h.value(&u).unwrap();
            assert!((v - r0_value(&u, &freq, &spec)).abs() <= 1e-13 * v.abs());
        }
    }

    #[test]
    fn complexify_round_trip() {
        let n = 4;
        let raw = sample(n, 1.0, 9);
        let psi = SeqState::from_fn(n, |j| (raw.get(j) + raw.get(-j).conj()) * 0.5);
        let v = SeqState::from_fn(n, |j| (raw.get(j) - raw.get(-j).conj()) * 0.5 * Complex64::i());
        let state = complexify(&psi, &v, 1.5).unwrap();
        let (p2, v2) = realify(&state);
        assert!(p2.max_diff(&psi) < 1e-14 && v2.max_diff(&v) < 1e-14);
        assert!(complexify(&raw, &v, 1.5).is_err());
        let e0 = SeqState::unit(n, 0).unwrap();
        let s = complexify(&e0, &SeqState::zeros(n), 1.5).unwrap();
        assert!((s.u.get(0).re - 1.5f64.powf(0.25) / SQRT_2).abs() < 1e-15);
    }
}

//! Majorant norm `|H|_{r,w} = sup_{|y| ≤ 1} |Y_H(y; r, w)|`, returned as a
//! bracket `[lower, upper]`.
//!
//! `Y^{(j)}(y) = Σ |H_{αβ}| ((α_j+β_j)/2) c^{(j)}(α,β) y^{α+β−e_j}` depends on
//! `(α, β)` only through `γ = α + β`, so monomials are grouped by `γ` first.

use super::Poly;
use crate::error::{check_cutoff, Error, Result};
use crate::weighted_spaces::{ln_coeff_c_unchecked, SeqState, Weight};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct NormBracket {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct NormOptions {
    /// Random starts of the projected gradient ascent (at least 8 are used).
    pub starts: usize,
    pub iterations: usize,
    /// Evaluations of `r⁻¹ |X_H̲(u)|_w` at random `|u|_w = r`.
    pub field_samples: usize,
    /// Per-group sups are maximized numerically when there are at most this many groups.
    pub polish_groups: usize,
    pub seed: u64,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self { starts: 8, iterations: 600, field_samples: 8, polish_groups: 32, seed: 0x6d616a6f72616e74 }
    }
}

struct Group {
    /// `(variable index, γ_i)` over the support of `γ`.
    support: Vec<(usize, u32)>,
    /// `a_j = C_γ (γ_j/2) c^{(j)}` aligned with `support`.
    coef: Vec<f64>,
}

struct YMap {
    modes: Vec<i64>,
    groups: Vec<Group>,
}

impl YMap {
    fn build(h: &Poly, r: f64, w: &Weight) -> Self {
        let mut sums: BTreeMap<super::MultiIndex, f64> = BTreeMap::new();
        for (k, c) in h.terms() {
            *sums.entry(k.alpha().plus(k.beta())).or_insert(0.0) += c.norm();
        }
        let mut modes: Vec<i64> = sums.keys().flat_map(|g| g.iter().map(|(j, _)| j)).collect();
        modes.sort_unstable();
        modes.dedup();
        let empty = super::MultiIndex::new();
        let ln_r = r.ln();
        let groups = sums
            .iter()
            .map(|(gamma, &cg)| {
                let support: Vec<(usize, u32)> =
                    gamma.iter().map(|(j, e)| (modes.binary_search(&j).unwrap(), e)).collect();
                let coef = gamma
                    .iter()
                    .map(|(j, e)| cg * 0.5 * e as f64 * ln_coeff_c_unchecked(j, gamma, &empty, ln_r, w).exp())
                    .collect();
                Group { support, coef }
            })
            .collect();
        Self { modes, groups }
    }

    fn dim(&self) -> usize {
        self.modes.len()
    }

    fn single(&self, g: usize) -> YMap {
        let grp = &self.groups[g];
        let modes: Vec<i64> = grp.support.iter().map(|&(v, _)| self.modes[v]).collect();
        let support = grp.support.iter().enumerate().map(|(i, &(_, e))| (i, e)).collect();
        YMap { modes, groups: vec![Group { support, coef: grp.coef.clone() }] }
    }

    /// `y^{γ − e_j − e_k}`-type products with per-variable exponent shifts.
    fn power(y: &[f64], support: &[(usize, u32)], skip_a: usize, skip_b: Option<usize>) -> f64 {
        support
            .iter()
            .enumerate()
            .map(|(i, &(v, e))| {
                let mut e = e as i32;
                if i == skip_a {
                    e -= 1;
                }
                if Some(i) == skip_b {
                    e -= 1;
                }
                y[v].powi(e)
            })
            .product()
    }

    fn eval(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for g in &self.groups {
            for (i, &(v, _)) in g.support.iter().enumerate() {
                out[v] += g.coef[i] * Self::power(y, &g.support, i, None);
            }
        }
        out
    }

    fn objective(&self, y: &[f64]) -> f64 {
        self.eval(y).iter().map(|x| x * x).sum()
    }

    fn gradient(&self, y: &[f64], yv: &[f64]) -> Vec<f64> {
        let mut grad = vec![0.0; self.dim()];
        for g in &self.groups {
            for (i, &(vj, _)) in g.support.iter().enumerate() {
                let weight = 2.0 * yv[vj] * g.coef[i];
                if weight == 0.0 {
                    continue;
                }
                for (k, &(vk, ek)) in g.support.iter().enumerate() {
                    let dk = ek as i32 - i32::from(k == i);
                    if dk <= 0 {
                        continue;
                    }
                    grad[vk] += weight * dk as f64 * Self::power(y, &g.support, i, Some(k));
                }
            }
        }
        grad
    }

    /// `|A|₂` with `A_j = Σ_γ a_{γ,j}`, using `y^δ ≤ 1` on the unit ball.
    fn coefficient_sum_bound(&self) -> f64 {
        let mut a = vec![0.0; self.dim()];
        for g in &self.groups {
            for (i, &(v, _)) in g.support.iter().enumerate() {
                a[v] += g.coef[i];
            }
        }
        a.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `(Σ_j a_j² max_{|y|=1} y^{2δ_j})^{1/2}` with `max y^{2δ} = Π (δ_i/|δ|)^{δ_i}`.
    fn group_closed_bound(g: &Group) -> f64 {
        let mut s = 0.0;
        for (i, a) in g.coef.iter().enumerate() {
            let exps: Vec<f64> =
                g.support.iter().enumerate().map(|(k, &(_, e))| e as f64 - f64::from(u8::from(k == i))).collect();
            let total: f64 = exps.iter().sum();
            let ln_max: f64 =
                exps.iter().filter(|&&d| d > 0.0).map(|&d| d * (d / total).ln()).sum();
            s += a * a * ln_max.exp();
        }
        s.sqrt()
    }

    fn closed_bound(&self) -> f64 {
        self.groups.iter().map(Self::group_closed_bound).sum()
    }

    /// Projected gradient ascent of `|Y|²` on the nonnegative unit sphere.
    fn ascend(&self, start: &[f64], iterations: usize) -> f64 {
        let mut y = project(start);
        let mut f = self.objective(&y);
        let mut eta = 1.0;
        for _ in 0..iterations {
            let yv = self.eval(&y);
            let g = self.gradient(&y, &yv);
            let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            if gn == 0.0 || !gn.is_finite() {
                break;
            }
            let mut improved = false;
            let mut tries = 0;
            while tries < 60 {
                let cand: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a + eta * b / gn).collect();
                let cand = project(&cand);
                let fc = self.objective(&cand);
                if fc > f {
                    let gain = fc - f;
                    y = cand;
                    f = fc;
                    eta = (eta * 2.0).min(1.0);
                    improved = gain > 1e-16 * f;
                    break;
                }
                eta *= 0.5;
                tries += 1;
            }
            if !improved {
                break;
            }
        }
        f.sqrt()
    }
}

fn project(y: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = y.iter().map(|&v| v.max(0.0)).collect();
    let n = clipped.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        vec![1.0 / (y.len() as f64).sqrt(); y.len()]
    } else {
        clipped.iter().map(|v| v / n).collect()
    }
}

fn check_inputs(h: &Poly, r: f64, w: &Weight) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Parameter(format!("radius r = {r} must be positive")));
    }
    check_cutoff(h.cutoff(), w.cutoff())
}

/// Cheap certified upper bound (no optimization).
pub fn majorant_upper(h: &Poly, r: f64, w: &Weight) -> Result<f64> {
    check_inputs(h, r, w)?;
    if h.is_zero() {
        return Ok(0.0);
    }
    let y = YMap::build(h, r, w);
    Ok(y.coefficient_sum_bound().min(y.closed_bound()))
}

pub fn majorant_norm(h: &Poly, r: f64, w: &Weight) -> Result<NormBracket> {
    majorant_norm_with(h, r, w, &NormOptions::default())
}

pub fn majorant_norm_with(h: &Poly, r: f64, w: &Weight, opts: &NormOptions) -> Result<NormBracket> {
    check_inputs(h, r, w)?;
    if h.is_zero() {
        return Ok(NormBracket { lower: 0.0, upper: 0.0 });
    }
    let ymap = YMap::build(h, r, w);
    let n = ymap.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut lower: f64 = 0.0;

    let mut polished = None;
    if ymap.groups.len() <= opts.polish_groups {
        let mut total = 0.0;
        for g in 0..ymap.groups.len() {
            let single = ymap.single(g);
            let d = single.dim();
            let mut best: f64 = 0.0;
            let mut starts: Vec<Vec<f64>> = vec![vec![1.0; d]];
            for i in 0..d {
                let mut e = vec![0.05; d];
                e[i] = 1.0;
                starts.push(e);
            }
            for _ in 0..4 {
                starts.push((0..d).map(|_| rng.gen::<f64>()).collect());
            }
            for s in &starts {
                best = best.max(single.ascend(s, 4 * opts.iterations));
            }
            total += best;
            if ymap.groups.len() == 1 {
                lower = lower.max(best);
            }
        }
        polished = Some(total);
    }

    let mut starts: Vec<Vec<f64>> = vec![vec![1.0; n]];
    for _ in 0..opts.starts.max(8) {
        starts.push((0..n).map(|_| rng.gen::<f64>()).collect());
    }
    for s in &starts {
        lower = lower.max(ymap.ascend(s, opts.iterations));
    }

    for _ in 0..opts.field_samples {
        let y = project(&(0..n).map(|_| rng.gen::<f64>()).collect::<Vec<_>>());
        let mut u = SeqState::zeros(h.cutoff());
        for (i, &j) in ymap.modes.iter().enumerate() {
            u.set(j, Complex64::new(r * y[i] / w.at(j), 0.0))?;
        }
        let x = h.vector_field(&u, true)?;
        lower = lower.max(crate::weighted_spaces::seq_norm(&x, w)? / r);
    }

    let mut upper = ymap.coefficient_sum_bound().min(ymap.closed_bound());
    if let Some(p) = polished {
        upper = upper.min(p);
    }
    Ok(NormBracket { lower, upper: upper.max(lower) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ham_algebra::{Monomial, MultiIndex, PolyHamiltonian};

    fn ham(terms: &[(&[(i64, u32)], &[(i64, u32)], f64)]) -> PolyHamiltonian {
        PolyHamiltonian::from_monomials(
            4,
            terms.iter().map(|(a, b, c)| {
                Monomial::new(
                    MultiIndex::from_pairs(a.iter().copied()),
                    MultiIndex::from_pairs(b.iter().copied()),
                    Complex64::new(*c, 0.0),
                )
            }),
        )
        .unwrap()
    }

    #[test]
    fn diagonal_quadratic_exact() {
        let w = Weight::subexp(0.4, 1.1, 1.5, 4).unwrap();
        let h = ham(&[(&[(1, 1)], &[(1, 1)], -2.5)]);
        let nb = majorant_norm(&h, 0.3, &w).unwrap();
        assert!((nb.lower - 2.5).abs() < 1e-12 && (nb.upper - 2.5).abs() < 1e-12, "{nb:?}");
    }

    #[test]
    fn single_monomial_tight() {
        let w = Weight::sobolev(1.5, 4).unwrap();
        for h in [
            ham(&[(&[(1, 1), (2, 1)], &[(1, 1), (2, 1)], 0.7)]),
            ham(&[(&[(1, 2)], &[(2, 1)], 1.3)]),
            ham(&[(&[(1, 1), (-1, 1)], &[(0, 2)], 0.4)]),
            ham(&[(&[(3, 1), (-1, 2)], &[(1, 1)], 0.9)]),
        ] {
            let nb = majorant_norm(&h, 0.5, &w).unwrap();
            assert!(nb.upper - nb.lower <= 1e-9 * nb.upper, "{nb:?}");
        }
    }

    #[test]
    fn zero_and_bad_radius() {
        let w = Weight::sobolev(1.5, 4).unwrap();
        let z = PolyHamiltonian::zero(4);
        assert_eq!(majorant_norm(&z, 1.0, &w).unwrap(), NormBracket { lower: 0.0, upper: 0.0 });
        assert!(majorant_norm(&z, 0.0, &w).is_err());
        assert!(majorant_norm(&z, 1.0, &Weight::sobolev(1.5, 3).unwrap()).is_err());
    }

    #[test]
    fn homogeneous_scaling() {
        let w = Weight::subexp(0.2, 1.0, 2.0, 4).unwrap();
        let h = ham(&[(&[(1, 2)], &[(2, 1)], 1.0), (&[(3, 1)], &[(1, 1), (2, 1)], 0.5)]);
        let a = majorant_norm(&h, 0.2, &w).unwrap();
        let b = majorant_norm(&h, 0.6, &w).unwrap();
        assert!((b.upper / a.upper - 3.0).abs() < 1e-9);
        assert!(a.lower <= a.upper && b.lower <= b.upper);
        assert!(b.lower >= 3.0 * a.lower * (1.0 - 1e-6));
    }
}

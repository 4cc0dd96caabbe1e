//! Beam frequencies `ω_j = √(j⁴ + m)`, lattice vectors `ℓ = α − β`, the
//! Diophantine condition, derivative (Vandermonde) bounds and Monte-Carlo
//! bad-set estimates over the mass `m ∈ [1, 2]`.

use crate::error::{Error, Result};
use crate::ham_algebra::MultiIndex;
use crate::weighted_spaces::bracket_mode;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::fmt;

/// Largest number of candidate vectors an enumeration may visit.
pub const ENUMERATION_BUDGET: f64 = 1e8;

fn check_mass(m: f64) -> Result<()> {
    if (1.0..=2.0).contains(&m) {
        Ok(())
    } else {
        Err(Error::Parameter(format!("mass m = {m} outside [1, 2]")))
    }
}

pub fn omega(j: i64, m: f64) -> f64 {
    ((j as f64).powi(4) + m).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyVector {
    m: f64,
    cutoff: usize,
}

impl FrequencyVector {
    pub fn new(m: f64, cutoff: usize) -> Result<Self> {
        check_mass(m)?;
        Ok(Self { m, cutoff })
    }

    pub fn mass(&self) -> f64 {
        self.m
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn at(&self, j: i64) -> f64 {
        omega(j, self.m)
    }

    /// `ω·(α − β)`, summed in descending-|j| order.
    pub fn divisor_of(&self, alpha: &MultiIndex, beta: &MultiIndex) -> f64 {
        divisor_unchecked(&LatticeVector::difference(alpha, beta), self.m)
    }
}

/// Sparse integer vector `ℓ = (ℓ_j)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeVector(BTreeMap<i64, i64>);

impl LatticeVector {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (i64, i64)>) -> Self {
        let mut m = BTreeMap::new();
        for (j, v) in pairs {
            *m.entry(j).or_insert(0) += v;
        }
        m.retain(|_, v| *v != 0);
        Self(m)
    }

    pub fn unit(j: i64) -> Self {
        Self::from_pairs([(j, 1)])
    }

    /// `α − β`.
    pub fn difference(alpha: &MultiIndex, beta: &MultiIndex) -> Self {
        Self::from_pairs(alpha.iter().map(|(j, e)| (j, e as i64)).chain(beta.iter().map(|(j, e)| (j, -(e as i64)))))
    }

    pub fn get(&self, j: i64) -> i64 {
        self.0.get(&j).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        self.0.iter().map(|(&j, &v)| (j, v))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Cardinality `d(ℓ) = #{j : ℓ_j ≠ 0}`.
    pub fn cardinality(&self) -> usize {
        self.0.len()
    }

    /// `|ℓ| = Σ |ℓ_j|`.
    pub fn l1(&self) -> i64 {
        self.0.values().map(|v| v.abs()).sum()
    }

    pub fn momentum(&self) -> i64 {
        self.0.iter().map(|(j, v)| j * v).sum()
    }

    pub fn max_abs_mode(&self) -> u64 {
        self.0.keys().map(|j| j.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn neg(&self) -> Self {
        Self(self.0.iter().map(|(&j, &v)| (j, -v)).collect())
    }

    /// Compact encoding `j:v;j:v`.
    pub fn encode(&self) -> String {
        self.0.iter().map(|(j, v)| format!("{j}:{v}")).collect::<Vec<_>>().join(";")
    }
}

impl fmt::Display for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.encode())
    }
}

fn descending_order(l: &LatticeVector) -> Vec<(i64, i64)> {
    let mut v: Vec<(i64, i64)> = l.iter().collect();
    v.sort_by(|a, b| b.0.abs().cmp(&a.0.abs()).then(b.0.cmp(&a.0)));
    v
}

fn divisor_unchecked(l: &LatticeVector, m: f64) -> f64 {
    descending_order(l).iter().map(|&(j, v)| v as f64 * omega(j, m)).sum()
}

/// `ψ(m, ℓ) = ω·ℓ = Σ ℓ_j √(j⁴ + m)`.
pub fn divisor(l: &LatticeVector, m: f64) -> Result<f64> {
    check_mass(m)?;
    Ok(divisor_unchecked(l, m))
}

/// Folds `ℓ_q` and `ℓ_{−q}` into the slot `|q|` whenever both are present.
/// The divisor is unchanged because `ω_q = ω_{−q}`.
pub fn reduce_superactions(l: &LatticeVector) -> LatticeVector {
    let mut out = BTreeMap::new();
    for (j, v) in l.iter() {
        if j != 0 && l.get(-j) != 0 {
            *out.entry(j.abs()).or_insert(0) += v;
        } else {
            *out.entry(j).or_insert(0) += v;
        }
    }
    out.retain(|_, v| *v != 0);
    LatticeVector(out)
}

/// `ℓ ∈ Λ` iff the reduced vector is nonzero, i.e. `ω·ℓ` is not identically zero in `m`.
pub fn is_nonresonant_vector(l: &LatticeVector) -> bool {
    !reduce_superactions(l).is_zero()
}

/// Which vector's cardinality sets `τ = d(d+2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TauMode {
    #[default]
    Original,
    Reduced,
}

pub fn tau(d: usize) -> f64 {
    (d * (d + 2)) as f64
}

/// `ln( γ^d / Π_{n ∈ supp ℓ} (1 + ℓ_n² ⟨n⟩²)^τ )`.
pub fn ln_diophantine_bound(l: &LatticeVector, gamma: f64, mode: TauMode) -> Result<f64> {
    if l.is_zero() {
        return Err(Error::Domain("the zero vector has no Diophantine bound".into()));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Parameter(format!("γ = {gamma} outside (0, 1)")));
    }
    let d = match mode {
        TauMode::Original => l.cardinality(),
        TauMode::Reduced => reduce_superactions(l).cardinality().max(1),
    };
    let t = tau(d);
    let ln_prod: f64 = l.iter().map(|(n, v)| (1.0 + (v as f64).powi(2) * bracket_mode(n).powi(2)).ln()).sum();
    Ok(l.cardinality() as f64 * gamma.ln() - t * ln_prod)
}

pub fn diophantine_bound(l: &LatticeVector, gamma: f64) -> Result<f64> {
    ln_diophantine_bound(l, gamma, TauMode::Original).map(f64::exp)
}

/// `|Σ ℓ_i i²| > 10 Σ |ℓ_i|`, in which case `|ω·ℓ| ≥ 1`.
pub fn dichotomy_applies(l: &LatticeVector) -> bool {
    let s: i64 = l.iter().map(|(j, v)| v * j * j).sum();
    s.abs() > 10 * l.l1()
}

/// Upper estimate of the number of integer vectors on `2M+1` modes with `|ℓ| ≤ L`:
/// `Σ_k 2^k C(2M+1, k) C(L, k)`.
pub fn enumeration_size(max_l1: usize, cutoff: usize) -> f64 {
    let n = 2 * cutoff + 1;
    let binom = |a: usize, b: usize| -> f64 {
        if b > a {
            return 0.0;
        }
        (0..b).fold(1.0, |acc, i| acc * (a - i) as f64 / (i + 1) as f64)
    };
    (0..=max_l1.min(n)).map(|k| 2f64.powi(k as i32) * binom(n, k) * binom(max_l1, k)).sum()
}

/// All momentum-conserving `ℓ ∈ Λ` with `1 ≤ |ℓ| ≤ max_l1` on `[−M, M]`,
/// breadth-first in `|ℓ|`.
pub fn enumerate_lambda(max_l1: usize, cutoff: usize) -> Result<Vec<LatticeVector>> {
    let size = enumeration_size(max_l1, cutoff);
    if size > ENUMERATION_BUDGET {
        return Err(Error::Budget(format!("{size:.3e} candidate vectors exceed the budget {ENUMERATION_BUDGET:e}")));
    }
    let modes: Vec<i64> = (-(cutoff as i64)..=cutoff as i64).collect();
    let mut out = Vec::new();
    for level in 1..=max_l1 as i64 {
        let mut cur = Vec::new();
        compositions(&modes, 0, level, 0, &mut cur, &mut |v| {
            let l = LatticeVector::from_pairs(v.iter().copied());
            if is_nonresonant_vector(&l) {
                out.push(l);
            }
        });
    }
    Ok(out)
}

/// Vectors with `Σ|ℓ_j| = remaining` exactly; momentum is filtered before the callback.
fn compositions(
    modes: &[i64],
    idx: usize,
    remaining: i64,
    momentum: i64,
    cur: &mut Vec<(i64, i64)>,
    f: &mut impl FnMut(&[(i64, i64)]),
) {
    if remaining == 0 {
        if momentum == 0 {
            f(cur);
        }
        return;
    }
    if idx == modes.len() {
        return;
    }
    let j = modes[idx];
    compositions(modes, idx + 1, remaining, momentum, cur, f);
    for a in 1..=remaining {
        for v in [a, -a] {
            cur.push((j, v));
            compositions(modes, idx + 1, remaining - a, momentum + j * v, cur, f);
            cur.pop();
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct AuditRow {
    pub encoding: String,
    pub d: usize,
    pub tau: f64,
    pub min_abs_divisor: f64,
    pub bound: f64,
    /// `ln(|ω·ℓ| / bound)`; stored in log form since the bound underflows easily.
    pub ln_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DiophantineReport {
    pub passed: bool,
    pub checked: usize,
    pub shortcut: usize,
    pub violations: usize,
    pub worst: Option<(String, f64)>,
    pub rows: Vec<AuditRow>,
}

/// Verifies `|ω·ℓ| ≥ γ^d / Π(1 + ℓ_n²⟨n⟩²)^τ` for every enumerated `ℓ ∈ Λ`.
/// The reported worst ratio is in log form.
pub fn check_diophantine(m: f64, gamma: f64, max_l1: usize, cutoff: usize) -> Result<DiophantineReport> {
    check_mass(m)?;
    let family = enumerate_lambda(max_l1, cutoff)?;
    let mut rows = Vec::new();
    let mut shortcut = 0;
    let mut worst: Option<(String, f64)> = None;
    for l in &family {
        if dichotomy_applies(l) {
            shortcut += 1;
            continue;
        }
        let psi = divisor_unchecked(l, m).abs();
        let lb = ln_diophantine_bound(l, gamma, TauMode::Original)?;
        let ln_ratio = psi.ln() - lb;
        if worst.as_ref().map_or(true, |w| ln_ratio < w.1) {
            worst = Some((l.encode(), ln_ratio));
        }
        rows.push(AuditRow {
            encoding: l.encode(),
            d: l.cardinality(),
            tau: tau(l.cardinality()),
            min_abs_divisor: psi,
            bound: lb.exp(),
            ln_ratio,
        });
    }
    let violations = rows.iter().filter(|r| r.ln_ratio < 0.0).count();
    Ok(DiophantineReport { passed: violations == 0, checked: family.len(), shortcut, violations, worst, rows })
}

/// `Γ(k) = ((−1)^{k+1} / 2^k) (2k−3)!!` with `(−1)!! = 1`.
pub fn derivative_prefactor(k: u32) -> f64 {
    let mut dfact = 1.0;
    let mut i = 2 * k as i64 - 3;
    while i > 1 {
        dfact *= i as f64;
        i -= 2;
    }
    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
    sign * dfact / 2f64.powi(k as i32)
}

/// `∂_m^k ψ = Γ(k) Σ ℓ_j ω_j^{1−2k}`.
pub fn derivative_divisor(k: u32, l: &LatticeVector, m: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("derivative order must be at least 1".into()));
    }
    check_mass(m)?;
    let e = 1 - 2 * k as i32;
    let s: f64 = descending_order(l).iter().map(|&(j, v)| v as f64 * omega(j, m).powi(e)).sum();
    Ok(derivative_prefactor(k) * s)
}

/// Uniform grid on `[1, 2]` with both endpoints.
pub fn mass_grid(points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![1.5],
        n => (0..n).map(|i| 1.0 + i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct VanderReport {
    pub k_star: u32,
    pub min_abs: f64,
    pub bound: f64,
    pub passed: bool,
    /// `min_m |∂^k ψ|` for `k = 0, …, d−1`.
    pub minima: Vec<f64>,
}

/// Checks `max_k min_m |∂_m^k ψ| ≥ Π_i (1 + ℓ_{j_i}² ⟨j_i⟩²)^{−d}` on the grid.
pub fn vander_check(l: &LatticeVector, m_grid: &[f64]) -> Result<VanderReport> {
    if l.is_zero() || reduce_superactions(l) != *l {
        return Err(Error::Domain(format!("{l} is not a nonzero reduced vector")));
    }
    let d = l.cardinality();
    if d > 6 {
        return Err(Error::Budget(format!("cardinality {d} exceeds 6")));
    }
    if m_grid.is_empty() {
        return Err(Error::Parameter("empty mass grid".into()));
    }
    for &m in m_grid {
        check_mass(m)?;
    }
    let ln_bound: f64 =
        -(d as f64) * l.iter().map(|(n, v)| (1.0 + (v as f64).powi(2) * bracket_mode(n).powi(2)).ln()).sum::<f64>();
    let bound = ln_bound.exp();
    let minima: Vec<f64> = (0..d as u32)
        .map(|k| {
            m_grid
                .iter()
                .map(|&m| if k == 0 { divisor_unchecked(l, m).abs() } else { derivative_divisor(k, l, m).unwrap().abs() })
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let (k_star, &min_abs) =
        minima.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("d ≥ 1");
    Ok(VanderReport { k_star: k_star as u32, min_abs, bound, passed: min_abs >= bound, minima })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MeasureEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
    pub bad: usize,
}

const MC_CHUNK: usize = 1024;

/// Monte-Carlo fraction of `m ∈ [1, 2]` for which some `ℓ` in the family
/// violates the Diophantine inequality. Sampling is split into fixed chunks,
/// each driven by its own ChaCha stream, so results do not depend on the
/// number of worker threads.
pub fn bad_set_measure(family: &[LatticeVector], gamma: f64, samples: usize, seed: u64) -> Result<MeasureEstimate> {
    if family.is_empty() {
        return Err(Error::Domain("empty family".into()));
    }
    if samples < 1000 {
        return Err(Error::Parameter(format!("{samples} samples; at least 1000 required")));
    }
    let candidates: Vec<(Vec<(i64, i64)>, f64)> = family
        .iter()
        .filter(|l| is_nonresonant_vector(l) && !dichotomy_applies(l))
        .map(|l| Ok((descending_order(l), ln_diophantine_bound(l, gamma, TauMode::Original)?)))
        .collect::<Result<_>>()?;
    let max_mode = family.iter().map(|l| l.max_abs_mode()).max().unwrap_or(0) as i64;
    let chunks = samples.div_ceil(MC_CHUNK);
    let bad: usize = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let n = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut bad = 0;
            for _ in 0..n {
                let m: f64 = 1.0 + rng.gen::<f64>();
                let om: Vec<f64> = (0..=max_mode).map(|j| omega(j, m)).collect();
                let hit = candidates.iter().any(|(l, lb)| {
                    let psi: f64 = l.iter().map(|&(j, v)| v as f64 * om[j.unsigned_abs() as usize]).sum();
                    psi.abs().ln() < *lb
                });
                bad += usize::from(hit);
            }
            bad
        })
        .sum();
    let p = bad as f64 / samples as f64;
    Ok(MeasureEstimate { estimate: p, std_error: (p * (1.0 - p) / samples as f64).sqrt(), samples, bad })
}

/// CSV with columns `l,d,tau,min_abs_divisor,bound,ln_ratio`.
pub fn audit_csv(rows: &[AuditRow]) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(["l", "d", "tau", "min_abs_divisor", "bound", "ln_ratio"]).unwrap();
    for r in rows {
        w.write_record([
            r.encoding.clone(),
            r.d.to_string(),
            r.tau.to_string(),
            format!("{:.17e}", r.min_abs_divisor),
            format!("{:.17e}", r.bound),
            format!("{:.17e}", r.ln_ratio),
        ])
        .unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lv(p: &[(i64, i64)]) -> LatticeVector {
        LatticeVector::from_pairs(p.iter().copied())
    }

    #[test]
    fn divisor_examples() {
        for m in mass_grid(11) {
            assert_eq!(divisor(&lv(&[(1, 1), (-1, -1)]), m).unwrap(), 0.0);
        }
        let v = divisor(&lv(&[(2, 1), (1, -2), (0, 1)]), 1.0).unwrap();
        assert!((v - (17f64.sqrt() - 2.0 * 2f64.sqrt() + 1.0)).abs() < 1e-14);
        assert!((v - 2.29468).abs() < 1e-5);
        let v = divisor(&lv(&[(5, 2), (10, -1)]), 1.0).unwrap();
        assert!((v - (2.0 * 626f64.sqrt() - 10001f64.sqrt())).abs() < 1e-12);
        assert!((v + 49.965).abs() < 1e-3);
        assert!(divisor(&lv(&[(1, 1)]), 2.5).is_err());
    }

    #[test]
    fn reduction_examples() {
        assert!(reduce_superactions(&lv(&[(1, 1), (-1, -1)])).is_zero());
        assert_eq!(reduce_superactions(&lv(&[(1, 1), (-1, 1), (0, -2)])), lv(&[(1, 2), (0, -2)]));
        let r = lv(&[(-2, 1), (1, 3)]);
        assert_eq!(reduce_superactions(&r), r);
        assert!(!is_nonresonant_vector(&lv(&[(1, 1), (-1, -1)])));
        assert!(is_nonresonant_vector(&lv(&[(1, 1), (-1, 1), (0, -2)])));
        assert!(!is_nonresonant_vector(&LatticeVector::zero()));
    }

    #[test]
    fn bound_examples() {
        assert_eq!(tau(1), 3.0);
        let g: f64 = 0.3;
        let l = lv(&[(2, 1), (1, -2), (0, 1)]);
        let expected = 3.0 * g.ln() - 15.0 * (5f64.ln() + 5f64.ln() + 2f64.ln());
        assert!((ln_diophantine_bound(&l, g, TauMode::Original).unwrap() - expected).abs() < 1e-12);
        let ratio = diophantine_bound(&l, 0.2).unwrap() / diophantine_bound(&l, 0.1).unwrap();
        assert!((ratio - 8.0).abs() < 1e-10);
        assert!(diophantine_bound(&LatticeVector::zero(), 0.1).is_err());
        let folded = lv(&[(1, 1), (-1, 1)]);
        let a = ln_diophantine_bound(&folded, g, TauMode::Original).unwrap();
        let b = ln_diophantine_bound(&folded, g, TauMode::Reduced).unwrap();
        assert!(b > a);
    }

    #[test]
    fn derivative_prefactors() {
        assert_eq!(derivative_prefactor(1), 0.5);
        assert_eq!(derivative_prefactor(2), -0.25);
        assert_eq!(derivative_prefactor(3), 0.375);
        assert!(derivative_divisor(0, &lv(&[(1, 1)]), 1.5).is_err());
        assert_eq!(derivative_divisor(2, &LatticeVector::zero(), 1.5).unwrap(), 0.0);
    }

    #[test]
    fn derivative_matches_richardson_differences() {
        let l = lv(&[(3, 1), (1, -2), (0, 2), (-2, 1)]);
        let h = 1e-3;
        let f = |m: f64| divisor_unchecked(&l, m);
        // central differences with step h and 2h, combined by Richardson extrapolation
        let d1 = |h: f64, m: f64| (f(m + h) - f(m - h)) / (2.0 * h);
        let d2 = |h: f64, m: f64| (f(m + h) - 2.0 * f(m) + f(m - h)) / (h * h);
        let d3 = |h: f64, m: f64| (f(m + 2.0 * h) - 2.0 * f(m + h) + 2.0 * f(m - h) - f(m - 2.0 * h)) / (2.0 * h.powi(3));
        let rich = |d: &dyn Fn(f64, f64) -> f64, m: f64| (4.0 * d(h, m) - d(2.0 * h, m)) / 3.0;
        for m in [1.1, 1.5, 1.9] {
            for (k, est) in [(1, rich(&d1, m)), (2, rich(&d2, m)), (3, rich(&d3, m))] {
                let exact = derivative_divisor(k, &l, m).unwrap();
                assert!((est - exact).abs() <= 1e-4 * exact.abs(), "k={k} m={m}: {est} vs {exact}");
            }
        }
    }

    #[test]
    fn vander_examples() {
        let grid = mass_grid(1000);
        let r = vander_check(&lv(&[(3, -2)]), &grid).unwrap();
        assert!(r.passed && r.k_star == 0);
        let folded = reduce_superactions(&lv(&[(1, 1), (-1, 1), (0, -2)]));
        assert!(vander_check(&folded, &grid).unwrap().passed);
        assert!(vander_check(&lv(&[(1, 1), (-1, -1)]), &grid).is_err());
        assert!(vander_check(&lv(&[(1, 1), (-1, 1)]), &grid).is_err());
        let big = lv(&[(0, 1), (1, 1), (2, 1), (3, 1), (4, 1), (5, 1), (6, 1)]);
        assert!(matches!(vander_check(&big, &grid), Err(Error::Budget(_))));
    }

    #[test]
    fn enumeration_and_audit() {
        let fam = enumerate_lambda(3, 2).unwrap();
        assert!(fam.iter().all(|l| l.momentum() == 0 && is_nonresonant_vector(l) && l.l1() <= 3));
        assert!(fam.windows(2).all(|w| w[0].l1() <= w[1].l1()));
        let mut dedup = fam.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), fam.len());
        assert!(matches!(enumerate_lambda(40, 40), Err(Error::Budget(_))));
        let rep = check_diophantine(1.37, 1e-2, 4, 6).unwrap();
        assert!(rep.passed);
        assert!(rep.shortcut > 0);
        let csv = audit_csv(&rep.rows);
        assert_eq!(csv.lines().count(), rep.rows.len() + 1);
        let lower = check_diophantine(1.37, 1e-3, 4, 6).unwrap();
        assert!(lower.passed);
    }

    #[test]
    fn measure_examples() {
        let far = [lv(&[(5, 2), (10, -1)])];
        let e = bad_set_measure(&far, 0.5, 2000, 1).unwrap();
        assert_eq!(e.estimate, 0.0);
        assert!(bad_set_measure(&[], 0.1, 2000, 1).is_err());
        assert!(bad_set_measure(&far, 0.1, 10, 1).is_err());
        let a = bad_set_measure(&far, 0.5, 3000, 9).unwrap();
        let b = bad_set_measure(&far, 0.5, 3000, 9).unwrap();
        assert_eq!(a, b);
    }

    fn small_vector() -> impl Strategy<Value = LatticeVector> {
        proptest::collection::vec((-6i64..=6, -3i64..=3), 1..5).prop_map(LatticeVector::from_pairs)
    }

    proptest! {
        #[test]
        fn reduction_preserves_divisor(l in small_vector()) {
            let r = reduce_superactions(&l);
            prop_assert!(r.cardinality() <= l.cardinality());
            prop_assert_eq!(reduce_superactions(&r), r.clone());
            for m in mass_grid(100) {
                let a = divisor_unchecked(&l, m);
                let b = divisor_unchecked(&r, m);
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
            }
        }

        #[test]
        fn bound_monotone(l in small_vector(), g in 0.01..0.4f64) {
            prop_assume!(!l.is_zero());
            let a = ln_diophantine_bound(&l, g, TauMode::Original).unwrap();
            let b = ln_diophantine_bound(&l, 2.0 * g, TauMode::Original).unwrap();
            prop_assert!((b - a - l.cardinality() as f64 * 2f64.ln()).abs() < 1e-9);
            let (j, v) = l.iter().next().unwrap();
            let bigger = LatticeVector::from_pairs(l.iter().chain([(j, v.signum())]));
            prop_assert!(ln_diophantine_bound(&bigger, g, TauMode::Original).unwrap() < a);
        }
    }
}

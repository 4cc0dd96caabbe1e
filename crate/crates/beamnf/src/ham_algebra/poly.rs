use super::MultiIndex;
use crate::error::{check_cutoff, Error, Result};
use crate::weighted_spaces::SeqState;
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::{BTreeMap, HashMap};

/// Relative threshold below which merged coefficients are discarded.
pub const DROP_TOL: f64 = 1e-15;

const CANCEL_ULPS: f64 = 16.0;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Canonical key of the monomial `u^α ū^β`. Ordered by total degree first,
/// then lexicographically by `α` and `β`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MonoKey {
    degree: u32,
    alpha: MultiIndex,
    beta: MultiIndex,
}

impl MonoKey {
    pub fn new(alpha: MultiIndex, beta: MultiIndex) -> Self {
        Self { degree: alpha.degree() + beta.degree(), alpha, beta }
    }

    pub fn alpha(&self) -> &MultiIndex {
        &self.alpha
    }

    pub fn beta(&self) -> &MultiIndex {
        &self.beta
    }

    /// Total degree `|α| + |β|`.
    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// `|α| + |β| − 2`.
    pub fn scaling_degree(&self) -> i64 {
        self.degree as i64 - 2
    }

    /// Key of the conjugate partner `u^β ū^α`.
    pub fn conjugate(&self) -> Self {
        Self { degree: self.degree, alpha: self.beta.clone(), beta: self.alpha.clone() }
    }

    /// `π(α − β) = Σ j (α_j − β_j)`.
    pub fn momentum(&self) -> i64 {
        self.alpha.momentum() - self.beta.momentum()
    }

    pub fn max_abs_mode(&self) -> u64 {
        self.alpha.max_abs_mode().max(self.beta.max_abs_mode())
    }

    /// Whether the divisor `ω·(α−β)` vanishes identically in the mass, i.e.
    /// `ℓ_0 = 0` and `ℓ_q + ℓ_{−q} = 0` for every `q > 0`, with `ℓ = α − β`.
    pub fn is_resonant(&self) -> bool {
        let mut folded: smallvec::SmallVec<[(u32, i64); 8]> = smallvec::SmallVec::new();
        let mut push = |j: i64, e: i64| {
            let q = j.unsigned_abs() as u32;
            match folded.iter_mut().find(|(m, _)| *m == q) {
                Some(slot) => slot.1 += e,
                None => folded.push((q, e)),
            }
        };
        for (j, e) in self.alpha.iter() {
            push(j, e as i64);
        }
        for (j, e) in self.beta.iter() {
            push(j, -(e as i64));
        }
        folded.iter().all(|&(_, v)| v == 0)
    }
}

impl std::fmt::Display for MonoKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "u^[{}] ū^[{}]", self.alpha, self.beta)
    }
}

/// A single term `coeff · u^α ū^β`.
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub alpha: MultiIndex,
    pub beta: MultiIndex,
    pub coeff: Complex64,
}

impl Monomial {
    pub fn new(alpha: MultiIndex, beta: MultiIndex, coeff: Complex64) -> Self {
        Self { alpha, beta, coeff }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegreePart {
    Equal,
    Greater,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResonantPart {
    Kernel,
    Range,
}

/// Sparse polynomial in `(u, ū)` on the window `|j| ≤ M`, with no structural
/// invariants beyond canonical keys. Carries the algebra shared by
/// Hamiltonians and by intermediate expressions.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    cutoff: usize,
    terms: BTreeMap<MonoKey, Complex64>,
}

impl Poly {
    pub fn zero(cutoff: usize) -> Self {
        Self { cutoff, terms: BTreeMap::new() }
    }

    pub fn from_terms(cutoff: usize, terms: impl IntoIterator<Item = Monomial>) -> Result<Self> {
        let mut p = Self::zero(cutoff);
        for t in terms {
            p.add_term(MonoKey::new(t.alpha, t.beta), t.coeff)?;
        }
        Ok(p)
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MonoKey, &Complex64)> {
        self.terms.iter()
    }

    pub fn get(&self, key: &MonoKey) -> Complex64 {
        self.terms.get(key).copied().unwrap_or(ZERO)
    }

    /// Adds `c` to the coefficient of `key`, removing exact cancellations.
    pub fn add_term(&mut self, key: MonoKey, c: Complex64) -> Result<()> {
        if key.max_abs_mode() as usize > self.cutoff {
            return Err(Error::Domain(format!("monomial {key} leaves window ±{}", self.cutoff)));
        }
        self.add_term_unchecked(key, c);
        Ok(())
    }

    pub(crate) fn add_term_unchecked(&mut self, key: MonoKey, c: Complex64) {
        if c == ZERO {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(key) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == ZERO {
                    o.remove();
                }
            }
        }
    }

    pub(crate) fn insert_unchecked(&mut self, key: MonoKey, c: Complex64) {
        if c == ZERO {
            self.terms.remove(&key);
        } else {
            self.terms.insert(key, c);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Drops coefficients with modulus below `rel · max|coeff|`.
    pub fn prune(&mut self, rel: f64) {
        let thr = rel * self.max_abs();
        self.terms.retain(|_, c| c.norm() > thr);
    }

    pub fn scale(&self, a: Complex64) -> Self {
        let mut out = Self::zero(self.cutoff);
        for (k, c) in &self.terms {
            out.insert_unchecked(k.clone(), c * a);
        }
        out
    }

    /// `self + a·other`.
    pub fn add_scaled(&self, other: &Self, a: Complex64) -> Result<Self> {
        check_cutoff(self.cutoff, other.cutoff)?;
        let mut out = self.clone();
        for (k, c) in &other.terms {
            let v = out.get(k) + c * a;
            out.insert_unchecked(k.clone(), v);
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.add_scaled(other, Complex64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add_scaled(other, Complex64::new(-1.0, 0.0))
    }

    pub fn filter(&self, keep: impl Fn(&MonoKey) -> bool) -> Self {
        Self {
            cutoff: self.cutoff,
            terms: self.terms.iter().filter(|(k, _)| keep(k)).map(|(k, c)| (k.clone(), *c)).collect(),
        }
    }

    /// Minimal scaling degree present; `None` stands for `+∞` (zero polynomial).
    pub fn scaling_degree(&self) -> Option<i64> {
        self.terms.keys().next().map(MonoKey::scaling_degree)
    }

    pub fn max_total_degree(&self) -> u32 {
        self.terms.keys().next_back().map(MonoKey::degree).unwrap_or(0)
    }

    /// `Π^{(d)}` (Equal) or `Π^{(>d)}` (Greater).
    pub fn project_degree(&self, d: i64, part: DegreePart) -> Self {
        match part {
            DegreePart::Equal => self.filter(|k| k.scaling_degree() == d),
            DegreePart::Greater => self.filter(|k| k.scaling_degree() > d),
        }
    }

    /// Keeps monomials of total degree `≤ n`.
    pub fn truncate_total_degree(&self, n: u32) -> Self {
        self.filter(|k| k.degree() <= n)
    }

    pub fn project_resonant(&self, part: ResonantPart) -> Self {
        match part {
            ResonantPart::Kernel => self.filter(MonoKey::is_resonant),
            ResonantPart::Range => self.filter(|k| !k.is_resonant()),
        }
    }

    pub fn is_momentum_conserving(&self) -> bool {
        self.terms.keys().all(|k| k.momentum() == 0)
    }

    /// Largest `|c_{αβ} − conj(c_{βα})|`.
    pub fn reality_defect(&self) -> f64 {
        self.terms
            .iter()
            .map(|(k, c)| (c - self.get(&k.conjugate()).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Poisson bracket `{self, other} = i Σ_j (∂_{u_j}G ∂_{ū_j}H − ∂_{ū_j}G ∂_{u_j}H)`
    /// with `H = self`, `G = other`.
    pub fn bracket(&self, other: &Self) -> Result<Self> {
        self.bracket_truncated(other, None)
    }

    /// Bracket keeping only output monomials of total degree `≤ max_total`.
    pub fn bracket_truncated(&self, other: &Self, max_total: Option<u32>) -> Result<Self> {
        check_cutoff(self.cutoff, other.cutoff)?;
        Ok(bracket_raw(self, other, max_total))
    }

    /// `Σ c u^α ū^β`.
    pub fn evaluate(&self, u: &SeqState) -> Result<Complex64> {
        check_cutoff(self.cutoff, u.cutoff())?;
        let pw = Powers::new(u, self.max_exponent());
        Ok(self.terms.iter().map(|(k, c)| c * pw.monomial(&k.alpha, &k.beta)).sum())
    }

    /// `X^{(j)} = −i ∂_{ū_j} H`; with `majorant` the coefficients are replaced
    /// by their moduli.
    pub fn vector_field(&self, u: &SeqState, majorant: bool) -> Result<SeqState> {
        check_cutoff(self.cutoff, u.cutoff())?;
        let pw = Powers::new(u, self.max_exponent());
        let mut out = SeqState::zeros(self.cutoff);
        let buf = out.coeffs_mut();
        let m = self.cutoff as i64;
        for (k, c) in &self.terms {
            let c = if majorant { Complex64::new(c.norm(), 0.0) } else { *c };
            let ua = pw.alpha_part(&k.alpha);
            for (j, bj) in k.beta.iter() {
                let rest = pw.beta_part_without(&k.beta, j);
                buf[(j + m) as usize] += -I * c * (bj as f64) * ua * rest;
            }
        }
        Ok(out)
    }

    fn max_exponent(&self) -> u32 {
        self.terms.keys().map(|k| k.alpha.max_exponent().max(k.beta.max_exponent())).max().unwrap_or(0)
    }

    pub(crate) fn from_map(cutoff: usize, terms: BTreeMap<MonoKey, Complex64>) -> Self {
        Self { cutoff, terms }
    }
}

/// Cached powers `u_j^e`, `ū_j^e` for fast monomial evaluation.
pub(crate) struct Powers {
    cutoff: i64,
    max_e: usize,
    u: Vec<Complex64>,
    ubar: Vec<Complex64>,
}

impl Powers {
    pub(crate) fn new(u: &SeqState, max_e: u32) -> Self {
        let max_e = max_e as usize;
        let n = u.coeffs().len();
        let mut pu = vec![ZERO; n * (max_e + 1)];
        let mut pb = vec![ZERO; n * (max_e + 1)];
        for (i, &z) in u.coeffs().iter().enumerate() {
            let (mut a, mut b) = (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
            for e in 0..=max_e {
                pu[i * (max_e + 1) + e] = a;
                pb[i * (max_e + 1) + e] = b;
                a *= z;
                b *= z.conj();
            }
        }
        Self { cutoff: u.cutoff() as i64, max_e, u: pu, ubar: pb }
    }

    fn at(&self, table: &[Complex64], j: i64, e: u32) -> Complex64 {
        table[(j + self.cutoff) as usize * (self.max_e + 1) + e as usize]
    }

    pub(crate) fn alpha_part(&self, a: &MultiIndex) -> Complex64 {
        a.iter().map(|(j, e)| self.at(&self.u, j, e)).product()
    }

    fn beta_part_without(&self, b: &MultiIndex, skip: i64) -> Complex64 {
        b.iter().map(|(j, e)| self.at(&self.ubar, j, if j == skip { e - 1 } else { e })).product()
    }

    pub(crate) fn monomial(&self, a: &MultiIndex, b: &MultiIndex) -> Complex64 {
        self.alpha_part(a) * b.iter().map(|(j, e)| self.at(&self.ubar, j, e)).product::<Complex64>()
    }
}

const CHUNK: usize = 64;

fn bracket_raw(h: &Poly, g: &Poly, max_total: Option<u32>) -> Poly {
    let g_terms: Vec<(&MonoKey, Complex64)> = g.terms.iter().map(|(k, c)| (k, *c)).collect();
    let mut by_alpha: HashMap<i64, Vec<(usize, u32)>> = HashMap::new();
    let mut by_beta: HashMap<i64, Vec<(usize, u32)>> = HashMap::new();
    for (i, (k, _)) in g_terms.iter().enumerate() {
        for (j, e) in k.alpha.iter() {
            by_alpha.entry(j).or_default().push((i, e));
        }
        for (j, e) in k.beta.iter() {
            by_beta.entry(j).or_default().push((i, e));
        }
    }
    let g_min = g_terms.iter().map(|(k, _)| k.degree).min().unwrap_or(0);
    let h_terms: Vec<(&MonoKey, Complex64)> = h.terms.iter().map(|(k, c)| (k, *c)).collect();

    let partial: Vec<Vec<(MonoKey, (Complex64, f64))>> = h_terms
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc: HashMap<MonoKey, (Complex64, f64)> = HashMap::new();
            for &(k1, c1) in chunk {
                if max_total.is_some_and(|n| k1.degree + g_min > n + 2) {
                    continue;
                }
                let mut emit = |k2: &MonoKey, j: i64, f: f64, c2: Complex64| {
                    let deg = k1.degree + k2.degree - 2;
                    if max_total.is_some_and(|n| deg > n) {
                        return;
                    }
                    let key = MonoKey {
                        degree: deg,
                        alpha: k1.alpha.plus_minus_unit(&k2.alpha, j),
                        beta: k1.beta.plus_minus_unit(&k2.beta, j),
                    };
                    let c = I * f * c1 * c2;
                    let e = acc.entry(key).or_insert((ZERO, 0.0));
                    e.0 += c;
                    e.1 += c.norm();
                };
                for (j, b1) in k1.beta.iter() {
                    if let Some(list) = by_alpha.get(&j) {
                        for &(gi, a2) in list {
                            let (k2, c2) = g_terms[gi];
                            emit(k2, j, (a2 * b1) as f64, c2);
                        }
                    }
                }
                for (j, a1) in k1.alpha.iter() {
                    if let Some(list) = by_beta.get(&j) {
                        for &(gi, b2) in list {
                            let (k2, c2) = g_terms[gi];
                            emit(k2, j, -((b2 * a1) as f64), c2);
                        }
                    }
                }
            }
            acc.into_iter().collect()
        })
        .collect();

    let mut merged: HashMap<MonoKey, (Complex64, f64)> = HashMap::new();
    for chunk in partial {
        for (k, (c, mass)) in chunk {
            let e = merged.entry(k).or_insert((ZERO, 0.0));
            e.0 += c;
            e.1 += mass;
        }
    }
    // A sum at roundoff level of its own contributions is a cancellation.
    let keep = |(c, mass): &(Complex64, f64)| c.norm() > CANCEL_ULPS * f64::EPSILON * mass;
    let mut out =
        Poly::from_map(h.cutoff, merged.into_iter().filter(|(_, v)| keep(v)).map(|(k, (c, _))| (k, c)).collect());
    out.prune(DROP_TOL);
    out
}

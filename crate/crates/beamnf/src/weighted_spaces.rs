//! Weight sequences on a truncated mode window, weighted ℓ² norms, truncated
//! convolution and the norm coefficients that parameterize Hamiltonian norms.

use crate::error::{check_cutoff, Error, Result};
use crate::ham_algebra::MultiIndex;
use num_complex::Complex64;

/// `⌊j⌋ = max(2, |j|)`, used by the weights.
pub fn floor_mode(j: i64) -> f64 {
    j.unsigned_abs().max(2) as f64
}

/// `⟨j⟩ = max(1, |j|)`, used by λ and the Diophantine products.
pub fn bracket_mode(j: i64) -> f64 {
    j.unsigned_abs().max(1) as f64
}

fn check_q(q: f64) -> Result<()> {
    if q > 1.0 && q <= 2.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("q = {q} outside (1, 2]")))
    }
}

/// `λ(j) = (ln(2 + ⟨j⟩))^q`.
pub fn lambda(j: i64, q: f64) -> Result<f64> {
    check_q(q)?;
    Ok(lambda_real(bracket_mode(j), q))
}

/// `(ln(2 + x))^q` for real `x ≥ 0`, without parameter checks.
pub fn lambda_real(x: f64, q: f64) -> f64 {
    (2.0 + x).ln().powf(q)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightKind {
    SubExp { s: f64, q: f64 },
    Sobolev,
}

/// `w_j = ⌊j⌋^p e^{sλ(j)}` (sub-exponential) or `⌊j⌋^p` (Sobolev) on `|j| ≤ M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weight {
    kind: WeightKind,
    p: f64,
    cutoff: usize,
}

impl Weight {
    pub fn subexp(s: f64, p: f64, q: f64, cutoff: usize) -> Result<Self> {
        check_q(q)?;
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::Parameter(format!("s = {s} must be finite and nonnegative")));
        }
        Self::check_common(p, cutoff)?;
        Ok(Self { kind: WeightKind::SubExp { s, q }, p, cutoff })
    }

    pub fn sobolev(p: f64, cutoff: usize) -> Result<Self> {
        Self::check_common(p, cutoff)?;
        Ok(Self { kind: WeightKind::Sobolev, p, cutoff })
    }

    fn check_common(p: f64, cutoff: usize) -> Result<()> {
        if !(p > 0.5 && p.is_finite()) {
            return Err(Error::Parameter(format!("p = {p} must exceed 1/2")));
        }
        if cutoff == 0 {
            return Err(Error::Parameter("mode cutoff must be positive".into()));
        }
        Ok(())
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Same weight with a different sub-exponential strength `s`.
    pub fn with_s(&self, s: f64) -> Result<Self> {
        match self.kind {
            WeightKind::SubExp { q, .. } => Self::subexp(s, self.p, q, self.cutoff),
            WeightKind::Sobolev => Err(Error::Parameter("Sobolev weight has no s".into())),
        }
    }

    pub fn with_p(&self, p: f64) -> Result<Self> {
        Self::check_common(p, self.cutoff)?;
        Ok(Self { p, ..*self })
    }

    pub fn with_cutoff(&self, cutoff: usize) -> Result<Self> {
        Self::check_common(self.p, cutoff)?;
        Ok(Self { cutoff, ..*self })
    }

    /// `ln w_j`; evaluated from the formula, valid for any integer `j`.
    pub fn ln_at(&self, j: i64) -> f64 {
        let base = self.p * floor_mode(j).ln();
        match self.kind {
            WeightKind::SubExp { s, q } => base + s * lambda_real(bracket_mode(j), q),
            WeightKind::Sobolev => base,
        }
    }

    pub fn at(&self, j: i64) -> f64 {
        self.ln_at(j).exp()
    }
}

/// Complex Fourier coefficients `(u_j)_{|j| ≤ M}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqState {
    cutoff: usize,
    coeffs: Vec<Complex64>,
}

impl SeqState {
    pub fn zeros(cutoff: usize) -> Self {
        Self { cutoff, coeffs: vec![Complex64::new(0.0, 0.0); 2 * cutoff + 1] }
    }

    pub fn from_fn(cutoff: usize, mut f: impl FnMut(i64) -> Complex64) -> Self {
        let m = cutoff as i64;
        Self { cutoff, coeffs: (-m..=m).map(&mut f).collect() }
    }

    /// Coefficients listed from mode `-M` to `M`.
    pub fn from_vec(cutoff: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != 2 * cutoff + 1 {
            return Err(Error::Dimension { expected: 2 * cutoff + 1, got: coeffs.len() });
        }
        Ok(Self { cutoff, coeffs })
    }

    /// Unit coefficient at mode `j`.
    pub fn unit(cutoff: usize, j: i64) -> Result<Self> {
        let mut u = Self::zeros(cutoff);
        u.set(j, Complex64::new(1.0, 0.0))?;
        Ok(u)
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn in_window(&self, j: i64) -> bool {
        j.unsigned_abs() as usize <= self.cutoff
    }

    fn index(&self, j: i64) -> usize {
        (j + self.cutoff as i64) as usize
    }

    /// Coefficient at `j`; zero outside the window.
    pub fn get(&self, j: i64) -> Complex64 {
        if self.in_window(j) {
            self.coeffs[self.index(j)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn set(&mut self, j: i64, v: Complex64) -> Result<()> {
        if !self.in_window(j) {
            return Err(Error::Domain(format!("mode {j} outside window ±{}", self.cutoff)));
        }
        let i = self.index(j);
        self.coeffs[i] = v;
        Ok(())
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// `(j, u_j)` pairs in increasing mode order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let m = self.cutoff as i64;
        self.coeffs.iter().enumerate().map(move |(i, &c)| (i as i64 - m, c))
    }

    pub fn scale(&self, a: f64) -> Self {
        Self { cutoff: self.cutoff, coeffs: self.coeffs.iter().map(|c| c * a).collect() }
    }

    /// `a·self + b·other`.
    pub fn axpby(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        check_cutoff(self.cutoff, other.cutoff)?;
        Ok(Self {
            cutoff: self.cutoff,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| x * a + y * b).collect(),
        })
    }

    /// Plain ℓ² norm.
    pub fn l2(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum modulus difference to `other`.
    pub fn max_diff(&self, other: &Self) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

/// `|u|_w = (Σ w_j² |u_j|²)^{1/2}`.
pub fn seq_norm(u: &SeqState, w: &Weight) -> Result<f64> {
    check_cutoff(w.cutoff, u.cutoff)?;
    Ok(u.iter().map(|(j, c)| (2.0 * w.ln_at(j)).exp() * c.norm_sqr()).sum::<f64>().sqrt())
}

/// `(f⋆g)_j = Σ_{j₁+j₂=j} f_{j₁} g_{j₂}`, truncated to the window.
pub fn convolve(f: &SeqState, g: &SeqState) -> Result<SeqState> {
    check_cutoff(f.cutoff, g.cutoff)?;
    let m = f.cutoff as i64;
    let mut out = SeqState::zeros(f.cutoff);
    for (j1, a) in f.iter() {
        if a == Complex64::new(0.0, 0.0) {
            continue;
        }
        let lo = (-m - j1).max(-m);
        let hi = (m - j1).min(m);
        for j2 in lo..=hi {
            let i = out.index(j1 + j2);
            out.coeffs[i] += a * g.coeffs[g.index(j2)];
        }
    }
    Ok(out)
}

/// Riemann zeta for real `p > 1` (direct sum plus Euler–Maclaurin tail).
fn zeta(p: f64) -> f64 {
    const N: f64 = 64.0;
    let head: f64 = (1..64).map(|n| (n as f64).powf(-p)).sum();
    head + N.powf(1.0 - p) / (p - 1.0) + 0.5 * N.powf(-p) + p * N.powf(-p - 1.0) / 12.0
        - p * (p + 1.0) * (p + 2.0) * N.powf(-p - 3.0) / 720.0
}

/// `C_alg(p) = 8^p (Σ_{i∈ℤ} ⟨i⟩^{-p})^{1/2}`; the series needs `p > 1`.
pub fn algebra_constant(p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::Parameter(format!("Σ⟨i⟩^(-p) diverges for p = {p} ≤ 1")));
    }
    Ok(8f64.powf(p) * (1.0 + 2.0 * zeta(p)).sqrt())
}

/// `C_alg,M(p) = √2 · √(2 + (2p+1)/(2p−1))` for Sobolev weights.
pub fn algebra_constant_sobolev(p: f64) -> Result<f64> {
    if !(p > 0.5) {
        return Err(Error::Parameter(format!("p = {p} must exceed 1/2")));
    }
    Ok(2f64.sqrt() * (2.0 + (2.0 * p + 1.0) / (2.0 * p - 1.0)).sqrt())
}

/// Algebra constant matching the weight's kind.
pub fn algebra_constant_for(w: &Weight) -> Result<f64> {
    match w.kind {
        WeightKind::SubExp { .. } => algebra_constant(w.p),
        WeightKind::Sobolev => algebra_constant_sobolev(w.p),
    }
}

/// `ln c^{(j)}_{r,w}(α,β) = (|α|+|β|−2) ln r + 2 ln w_j − Σ (α_i+β_i) ln w_i`.
pub fn ln_coeff_c(j: i64, alpha: &MultiIndex, beta: &MultiIndex, r: f64, w: &Weight) -> Result<f64> {
    if alpha.get(j) + beta.get(j) == 0 {
        return Err(Error::Domain(format!("mode {j} absent from the monomial")));
    }
    if !(r > 0.0) {
        return Err(Error::Parameter(format!("radius r = {r} must be positive")));
    }
    Ok(ln_coeff_c_unchecked(j, alpha, beta, r.ln(), w))
}

pub(crate) fn ln_coeff_c_unchecked(
    j: i64,
    alpha: &MultiIndex,
    beta: &MultiIndex,
    ln_r: f64,
    w: &Weight,
) -> f64 {
    let n = (alpha.degree() + beta.degree()) as f64;
    let ln_prod: f64 = alpha
        .iter()
        .chain(beta.iter())
        .map(|(i, e)| e as f64 * w.ln_at(i as i64))
        .sum();
    (n - 2.0) * ln_r + 2.0 * w.ln_at(j) - ln_prod
}

/// `c^{(j)}_{r,w}(α,β)`, computed in log space.
pub fn coeff_c(j: i64, alpha: &MultiIndex, beta: &MultiIndex, r: f64, w: &Weight) -> Result<f64> {
    ln_coeff_c(j, alpha, beta, r, w).map(f64::exp)
}

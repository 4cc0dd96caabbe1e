use super::{DegreePart, MonoKey, Monomial, MultiIndex, Poly, ResonantPart};
use crate::error::{Error, Result};
use crate::weighted_spaces::SeqState;
use num_complex::Complex64;
use std::ops::Deref;

/// Real, momentum-conserving polynomial Hamiltonian with `|α|+|β| ≥ 2`.
///
/// Reality `H_{α,β} = conj(H_{β,α})` is enforced by symmetrization at every
/// construction, so it holds exactly rather than up to roundoff.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyHamiltonian(Poly);

impl Deref for PolyHamiltonian {
    type Target = Poly;
    fn deref(&self) -> &Poly {
        &self.0
    }
}

impl PolyHamiltonian {
    pub fn zero(cutoff: usize) -> Self {
        Self(Poly::zero(cutoff))
    }

    /// Builds from monomials, auto-inserting each conjugate partner that is not
    /// listed explicitly. When both partners are given, their coefficients are
    /// averaged into a conjugate-symmetric pair.
    pub fn from_monomials(cutoff: usize, terms: impl IntoIterator<Item = Monomial>) -> Result<Self> {
        let raw = Poly::from_terms(cutoff, terms)?;
        validate_structure(&raw)?;
        let mut out = raw.clone();
        for (k, c) in raw.terms() {
            let partner = k.conjugate();
            if raw.get(&partner) == Complex64::new(0.0, 0.0) {
                out.insert_unchecked(partner, c.conj());
            }
        }
        Ok(Self::symmetrized(out))
    }

    /// Wraps a raw polynomial after checking momentum, degree and reality
    /// (up to `1e-10` relative to the largest coefficient).
    pub fn from_poly(p: Poly) -> Result<Self> {
        validate_structure(&p)?;
        let defect = p.reality_defect();
        if defect > 1e-10 * p.max_abs().max(f64::MIN_POSITIVE) {
            return Err(Error::Domain(format!("polynomial is not real (defect {defect:e})")));
        }
        Ok(Self::symmetrized(p))
    }

    /// Exact conjugate symmetrization of a polynomial known to be real up to
    /// roundoff (outputs of brackets of real Hamiltonians).
    pub(crate) fn symmetrized(mut p: Poly) -> Self {
        let keys: Vec<MonoKey> = p.terms().map(|(k, _)| k.clone()).collect();
        for k in keys {
            let partner = k.conjugate();
            if partner == k {
                let c = p.get(&k);
                p.insert_unchecked(k, Complex64::new(c.re, 0.0));
            } else if k < partner {
                let v = 0.5 * (p.get(&k) + p.get(&partner).conj());
                p.insert_unchecked(k, v);
                p.insert_unchecked(partner, v.conj());
            }
        }
        Self(p)
    }

    /// `Σ_j f(j) |u_j|²`.
    pub fn diagonal(cutoff: usize, f: impl Fn(i64) -> f64) -> Self {
        let m = cutoff as i64;
        let mut p = Poly::zero(cutoff);
        for j in -m..=m {
            p.insert_unchecked(MonoKey::new(MultiIndex::unit(j), MultiIndex::unit(j)), Complex64::new(f(j), 0.0));
        }
        Self(p)
    }

    /// Momentum `Σ j |u_j|²`.
    pub fn momentum_hamiltonian(cutoff: usize) -> Self {
        Self::diagonal(cutoff, |j| j as f64)
    }

    pub fn as_poly(&self) -> &Poly {
        &self.0
    }

    pub fn into_poly(self) -> Poly {
        self.0
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(Self(self.0.add(&other.0)?))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(Self(self.0.sub(&other.0)?))
    }

    pub fn scale(&self, a: f64) -> Self {
        Self(self.0.scale(Complex64::new(a, 0.0)))
    }

    pub fn bracket(&self, other: &Self) -> Result<Self> {
        Ok(Self::symmetrized(self.0.bracket(&other.0)?))
    }

    pub fn bracket_truncated(&self, other: &Self, max_total: Option<u32>) -> Result<Self> {
        Ok(Self::symmetrized(self.0.bracket_truncated(&other.0, max_total)?))
    }

    pub fn project_degree(&self, d: i64, part: DegreePart) -> Self {
        Self(self.0.project_degree(d, part))
    }

    pub fn project_resonant(&self, part: ResonantPart) -> Self {
        Self(self.0.project_resonant(part))
    }

    pub fn truncate_total_degree(&self, n: u32) -> Self {
        Self(self.0.truncate_total_degree(n))
    }

    /// Real value `H(u)` (the imaginary part vanishes up to roundoff).
    pub fn value(&self, u: &SeqState) -> Result<f64> {
        Ok(self.0.evaluate(u)?.re)
    }
}

fn validate_structure(p: &Poly) -> Result<()> {
    for (k, _) in p.terms() {
        if k.momentum() != 0 {
            return Err(Error::Domain(format!("monomial {k} violates momentum conservation")));
        }
        if k.degree() < 2 {
            return Err(Error::Domain(format!("monomial {k} has degree below 2")));
        }
    }
    Ok(())
}

/// `{H, G}`.
pub fn poisson_bracket(h: &PolyHamiltonian, g: &PolyHamiltonian) -> Result<PolyHamiltonian> {
    h.bracket(g)
}

/// Minimal scaling degree; `None` encodes `+∞` for the zero Hamiltonian.
pub fn scaling_degree(h: &PolyHamiltonian) -> Option<i64> {
    h.0.scaling_degree()
}

pub fn project_degree(h: &PolyHamiltonian, d: i64, part: DegreePart) -> Result<PolyHamiltonian> {
    if d < 0 {
        return Err(Error::Parameter(format!("degree {d} must be nonnegative")));
    }
    Ok(h.project_degree(d, part))
}

pub fn project_resonant(h: &PolyHamiltonian, part: ResonantPart) -> PolyHamiltonian {
    h.project_resonant(part)
}

pub fn vector_field(h: &PolyHamiltonian, u: &SeqState, majorant: bool) -> Result<SeqState> {
    h.0.vector_field(u, majorant)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn mono(a: &[(i64, u32)], b: &[(i64, u32)], z: Complex64) -> Monomial {
        Monomial::new(MultiIndex::from_pairs(a.iter().copied()), MultiIndex::from_pairs(b.iter().copied()), z)
    }

    #[test]
    fn partner_auto_inserted() {
        let h = PolyHamiltonian::from_monomials(3, [mono(&[(1, 2)], &[(2, 1)], c(1.0, 2.0))]).unwrap();
        assert_eq!(h.len(), 2);
        let k = MonoKey::new(MultiIndex::from_pairs([(2, 1)]), MultiIndex::from_pairs([(1, 2)]));
        assert_eq!(h.get(&k), c(1.0, -2.0));
        assert_eq!(h.reality_defect(), 0.0);
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(PolyHamiltonian::from_monomials(3, [mono(&[(1, 1)], &[(2, 1)], c(1.0, 0.0))]).is_err());
        assert!(PolyHamiltonian::from_monomials(3, [mono(&[(1, 1)], &[], c(1.0, 0.0))]).is_err());
        assert!(PolyHamiltonian::from_monomials(1, [mono(&[(2, 1)], &[(2, 1)], c(1.0, 0.0))]).is_err());
        let raw = Poly::from_terms(3, [mono(&[(1, 2)], &[(2, 1)], c(1.0, 0.0))]).unwrap();
        assert!(PolyHamiltonian::from_poly(raw).is_err());
    }

    #[test]
    fn scaling_degree_examples() {
        let q = PolyHamiltonian::from_monomials(3, [mono(&[(1, 1)], &[(1, 1)], c(1.0, 0.0))]).unwrap();
        assert_eq!(scaling_degree(&q), Some(0));
        let cub = PolyHamiltonian::from_monomials(3, [mono(&[(1, 2)], &[(2, 1)], c(1.0, 0.0))]).unwrap();
        assert_eq!(scaling_degree(&cub), Some(1));
        assert_eq!(scaling_degree(&PolyHamiltonian::zero(3)), None);
        let mixed = q.add(&cub).unwrap();
        assert_eq!(project_degree(&mixed, 1, DegreePart::Equal).unwrap(), cub);
        assert!(project_degree(&cub, 1, DegreePart::Greater).unwrap().is_zero());
        assert!(project_degree(&cub, -1, DegreePart::Equal).is_err());
    }

    #[test]
    fn diagonal_field() {
        let w = |j: i64| (j.pow(4) as f64 + 1.3).sqrt();
        let d = PolyHamiltonian::diagonal(3, w);
        let u = SeqState::from_fn(3, |j| c(0.1 * j as f64, 0.2 - 0.05 * j as f64));
        let x = vector_field(&d, &u, false).unwrap();
        for (j, z) in u.iter() {
            assert!((x.get(j) - c(0.0, -w(j)) * z).norm() < 1e-15);
        }
        let zero = vector_field(&PolyHamiltonian::zero(3), &u, false).unwrap();
        assert_eq!(zero, SeqState::zeros(3));
    }
}

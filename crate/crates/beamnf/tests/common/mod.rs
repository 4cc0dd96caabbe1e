#![allow(dead_code)]

use beamnf::ham_algebra::{MonoKey, Monomial, MultiIndex, Poly, PolyHamiltonian};
use beamnf::small_divisors::LatticeVector;
use beamnf::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn random_coeff(r: &mut ChaCha8Rng) -> Complex64 {
    c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))
}

fn index_from(map: &BTreeMap<i64, u32>) -> MultiIndex {
    MultiIndex::from_pairs(map.iter().map(|(&j, &e)| (j, e)))
}

/// Momentum-conserving `(α, β)` of total degree `degree` on modes `|j| ≤ m`.
pub fn random_key(r: &mut ChaCha8Rng, m: i64, degree: u32) -> MonoKey {
    loop {
        let n_alpha = r.gen_range(0..=degree);
        let mut alpha = BTreeMap::new();
        let mut beta = BTreeMap::new();
        let mut mom = 0i64;
        for k in 0..degree - 1 {
            let j = r.gen_range(-m..=m);
            if k < n_alpha {
                *alpha.entry(j).or_insert(0) += 1;
                mom += j;
            } else {
                *beta.entry(j).or_insert(0) += 1;
                mom -= j;
            }
        }
        // the last factor restores zero momentum
        if n_alpha == degree {
            if mom.abs() > m {
                continue;
            }
            *alpha.entry(-mom).or_insert(0) += 1;
        } else {
            if mom.abs() > m {
                continue;
            }
            *beta.entry(mom).or_insert(0) += 1;
        }
        return MonoKey::new(index_from(&alpha), index_from(&beta));
    }
}

/// Resonant key: `α_q + α_{−q} = β_q + β_{−q}` for every `q ≥ 0`, zero momentum.
pub fn random_resonant_key(r: &mut ChaCha8Rng, m: i64, half_degree: u32) -> MonoKey {
    loop {
        let mut alpha = BTreeMap::new();
        let mut beta = BTreeMap::new();
        for _ in 0..half_degree {
            let q = r.gen_range(0..=m);
            let sa = if r.gen_bool(0.5) { q } else { -q };
            let sb = if r.gen_bool(0.5) { q } else { -q };
            *alpha.entry(sa).or_insert(0) += 1;
            *beta.entry(sb).or_insert(0) += 1;
        }
        let key = MonoKey::new(index_from(&alpha), index_from(&beta));
        if key.momentum() == 0 {
            return key;
        }
    }
}

/// `ℓ = α − β` folded onto `q ≥ 0`; zero exactly for resonant keys.
pub fn folded(key: &MonoKey) -> BTreeMap<i64, i64> {
    let mut out = BTreeMap::new();
    for (j, e) in key.alpha().iter() {
        *out.entry(j.abs()).or_insert(0) += e as i64;
    }
    for (j, e) in key.beta().iter() {
        *out.entry(j.abs()).or_insert(0) -= e as i64;
    }
    out.retain(|_, v| *v != 0);
    out
}

pub fn homogeneous(r: &mut ChaCha8Rng, m: i64, degree: u32, terms: usize) -> PolyHamiltonian {
    let cutoff = m as usize;
    let monos: Vec<Monomial> = (0..terms)
        .map(|_| {
            let k = random_key(r, m, degree);
            Monomial::new(k.alpha().clone(), k.beta().clone(), random_coeff(r))
        })
        .collect();
    PolyHamiltonian::from_monomials(cutoff, monos).unwrap()
}

pub fn lattice(pairs: &[(i64, i64)]) -> LatticeVector {
    LatticeVector::from_pairs(pairs.iter().copied())
}

/// Largest coefficient difference relative to the larger input scale.
pub fn rel_diff(a: &Poly, b: &Poly) -> f64 {
    let scale = a.max_abs().max(b.max_abs()).max(f64::MIN_POSITIVE);
    a.sub(b).unwrap().max_abs() / scale
}

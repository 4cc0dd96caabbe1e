mod common;

use beamnf::ham_algebra::MultiIndex;
use beamnf::weighted_spaces::*;
use beamnf::{Complex64, Error};
use common::c;
use proptest::prelude::*;

fn state(cutoff: usize, v: &[(f64, f64)]) -> SeqState {
    let m = cutoff as i64;
    SeqState::from_fn(cutoff, |j| {
        let (re, im) = v[(j + m) as usize];
        c(re, im)
    })
}

#[test]
fn lambda_examples() {
    assert!((lambda(0, 2.0).unwrap() - 3f64.ln().powi(2)).abs() < 1e-15);
    assert!((lambda(0, 2.0).unwrap() - 1.20695).abs() < 1e-5);
    assert_eq!(lambda(7, 1.5).unwrap(), lambda(-7, 1.5).unwrap());
    assert!(matches!(lambda(1, 1.0), Err(Error::Parameter(_))));
    assert!(matches!(lambda(1, 2.5), Err(Error::Parameter(_))));
}

#[test]
fn lambda_is_sublinear_on_a_wide_range() {
    let mut r = common::rng(21);
    use rand::Rng;
    for _ in 0..10_000 {
        let a = r.gen_range(1.0..1e6);
        let b = r.gen_range(1.0..1e6);
        let q = r.gen_range(1.0001..=2.0);
        assert!(lambda_real(a + b, q) <= lambda_real(a, q) + lambda_real(b, q));
    }
}

#[test]
fn norm_examples() {
    let w = Weight::sobolev(3.0, 4).unwrap();
    assert_eq!(seq_norm(&SeqState::zeros(4), &w).unwrap(), 0.0);
    let e1 = SeqState::unit(4, 1).unwrap();
    assert!((seq_norm(&e1, &w).unwrap() - 8.0).abs() < 1e-12);
    let e3 = SeqState::unit(4, -3).unwrap();
    assert!((seq_norm(&e3, &w).unwrap() - 27.0).abs() < 1e-12);
    let wrong = Weight::sobolev(3.0, 5).unwrap();
    assert!(matches!(seq_norm(&e1, &wrong), Err(Error::Dimension { .. })));
}

#[test]
fn subexp_weight_matches_formula() {
    let w = Weight::subexp(0.7, 2.0, 1.5, 6).unwrap();
    for j in -6i64..=6 {
        let floor = (j.abs().max(2)) as f64;
        let br = (j.abs().max(1)) as f64;
        let want = floor.powi(2) * (0.7 * (2.0 + br).ln().powf(1.5)).exp();
        assert!((w.at(j) - want).abs() <= 1e-12 * want);
    }
}

#[test]
fn convolution_examples() {
    let g = SeqState::from_fn(3, |j| c(j as f64, 1.0 - j as f64));
    let delta0 = SeqState::unit(3, 0).unwrap();
    assert_eq!(convolve(&delta0, &g).unwrap(), g);
    let e12 = convolve(&SeqState::unit(3, 1).unwrap(), &SeqState::unit(3, 2).unwrap()).unwrap();
    assert_eq!(e12, SeqState::unit(3, 3).unwrap());
    let out = convolve(&SeqState::unit(3, 2).unwrap(), &SeqState::unit(3, 2).unwrap()).unwrap();
    assert_eq!(out, SeqState::zeros(3));
}

#[test]
fn coefficient_examples() {
    let w = Weight::subexp(1.0, 2.0, 1.5, 4).unwrap();
    let e1 = MultiIndex::unit(1);
    assert!((coeff_c(1, &e1, &e1, 0.37, &w).unwrap() - 1.0).abs() < 1e-14);
    let a = MultiIndex::from_pairs([(1, 2), (-2, 1)]);
    let b = MultiIndex::from_pairs([(0, 1)]);
    let c1 = coeff_c(1, &a, &b, 0.5, &w).unwrap();
    let c2 = coeff_c(1, &a, &b, 1.5, &w).unwrap();
    assert!((c2 / c1 - 3f64.powi(2)).abs() < 1e-12);
    let direct = 0.5f64.powi(2) * w.at(1).powi(2) / (w.at(1).powi(2) * w.at(-2) * w.at(0));
    assert!((c1 - direct).abs() <= 1e-13 * direct);
    assert!(matches!(coeff_c(3, &a, &b, 1.0, &w), Err(Error::Domain(_))));
}

#[test]
fn log_space_coefficient_survives_large_weights() {
    let w = Weight::subexp(40.0, 4.0, 2.0, 50).unwrap();
    let a = MultiIndex::from_pairs([(50, 6)]);
    let b = MultiIndex::from_pairs([(-50, 6)]);
    let ln = ln_coeff_c(50, &a, &b, 1.0, &w).unwrap();
    assert!(ln.is_finite() && ln < -1000.0);
}

#[test]
fn algebra_constants() {
    let sob = algebra_constant_sobolev(2.0).unwrap();
    assert!((sob - 2f64.sqrt() * (2.0 + 5.0 / 3.0f64).sqrt()).abs() < 1e-14);
    // Σ⟨i⟩^{-2} = 1 + 2ζ(2)
    let se = algebra_constant(2.0).unwrap();
    let want = 64.0 * (1.0 + std::f64::consts::PI.powi(2) / 3.0).sqrt();
    assert!((se - want).abs() < 1e-9 * want);
    assert!(algebra_constant(1.0).is_err());
    assert!(algebra_constant_sobolev(0.5).is_err());
}

fn coeffs(cutoff: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2 * cutoff + 1)
}

proptest! {
    #[test]
    fn weights_are_even_monotone_and_bounded_below(s in 0.0f64..3.0, p in 0.6f64..4.0, q in 1.01f64..=2.0) {
        let w = Weight::subexp(s, p, q, 12).unwrap();
        for j in 0..=12i64 {
            prop_assert_eq!(w.at(j), w.at(-j));
            prop_assert!(w.at(j) >= 2f64.powf(p) * (1.0 - 1e-15));
            if j > 0 {
                prop_assert!(w.at(j) >= w.at(j - 1));
            }
        }
    }

    #[test]
    fn convolution_is_commutative_and_bilinear(f in coeffs(4), g in coeffs(4), h in coeffs(4), a in -2.0f64..2.0) {
        let (f, g, h) = (state(4, &f), state(4, &g), state(4, &h));
        let fg = convolve(&f, &g).unwrap();
        prop_assert!(fg.max_diff(&convolve(&g, &f).unwrap()) < 1e-14);
        let lhs = convolve(&f.axpby(a, &h, 1.0).unwrap(), &g).unwrap();
        let rhs = fg.axpby(a, &convolve(&h, &g).unwrap(), 1.0).unwrap();
        prop_assert!(lhs.max_diff(&rhs) < 1e-13);
    }

    #[test]
    fn convolution_matches_double_sum(f in coeffs(3), g in coeffs(3)) {
        let (f, g) = (state(3, &f), state(3, &g));
        let out = convolve(&f, &g).unwrap();
        for j in -3i64..=3 {
            let mut want = Complex64::new(0.0, 0.0);
            for j1 in -3i64..=3 {
                let j2 = j - j1;
                if j2.abs() <= 3 {
                    want += f.get(j1) * g.get(j2);
                }
            }
            prop_assert!((out.get(j) - want).norm() < 1e-14);
        }
    }

    #[test]
    fn sobolev_algebra_bound(f in coeffs(6), g in coeffs(6), p in 0.6f64..3.0) {
        let w = Weight::sobolev(p, 6).unwrap();
        let (f, g) = (state(6, &f), state(6, &g));
        let lhs = seq_norm(&convolve(&f, &g).unwrap(), &w).unwrap();
        let rhs = algebra_constant_sobolev(p).unwrap() * seq_norm(&f, &w).unwrap() * seq_norm(&g, &w).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn subexp_algebra_bound(f in coeffs(6), g in coeffs(6), p in 1.1f64..3.0, s in 0.0f64..2.0) {
        let w = Weight::subexp(s, p, 1.5, 6).unwrap();
        let (f, g) = (state(6, &f), state(6, &g));
        let lhs = seq_norm(&convolve(&f, &g).unwrap(), &w).unwrap();
        let rhs = algebra_constant(p).unwrap() * seq_norm(&f, &w).unwrap() * seq_norm(&g, &w).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn norm_is_deterministic_and_homogeneous(f in coeffs(4), a in -3.0f64..3.0) {
        let w = Weight::subexp(1.0, 2.0, 1.5, 4).unwrap();
        let f = state(4, &f);
        let n = seq_norm(&f, &w).unwrap();
        prop_assert_eq!(n, seq_norm(&f, &w).unwrap());
        prop_assert!((seq_norm(&f.scale(a), &w).unwrap() - a.abs() * n).abs() <= 1e-12 * n.max(1e-300));
    }
}

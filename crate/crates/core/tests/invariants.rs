//! Property-based invariants across random polynomials, fields and maps.

use std::sync::OnceLock;

use acimresp::conjugacy::Conjugacy;
use acimresp::map::{chebyshev_markov_map, perturbed_map, ObservablePoly, PerturbationField};
use acimresp::pade::pade;
use acimresp::poly::ChebPoly;
use acimresp::spectral::ChebGrid;
use acimresp::susceptibility::EndpointConstruction;
use acimresp::Pipeline;
use num_complex::Complex64;
use proptest::prelude::*;

fn doubling() -> &'static (Pipeline, EndpointConstruction) {
    static P: OnceLock<(Pipeline, EndpointConstruction)> = OnceLock::new();
    P.get_or_init(|| {
        let p = Pipeline::new(&chebyshev_markov_map(2).unwrap(), Conjugacy::Sine, 32).unwrap();
        let c = p.construction().unwrap();
        (p, c)
    })
}

fn tripling() -> &'static (Pipeline, EndpointConstruction) {
    static P: OnceLock<(Pipeline, EndpointConstruction)> = OnceLock::new();
    P.get_or_init(|| {
        let p = Pipeline::new(&chebyshev_markov_map(3).unwrap(), Conjugacy::Sine, 32).unwrap();
        let c = p.construction().unwrap();
        (p, c)
    })
}

fn coeffs(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 1..=len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn derivative_of_composition_is_chain_rule(a in coeffs(5), b in coeffs(4), x in -1.0f64..1.0) {
        let p = ChebPoly::new(a);
        let q = ChebPoly::new(b);
        let lhs = p.compose(&q).derivative().eval(x);
        let rhs = p.derivative().eval(q.eval(x)) * q.derivative().eval(x);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn product_evaluates_pointwise(a in coeffs(6), b in coeffs(6), x in -1.0f64..1.0) {
        let p = ChebPoly::new(a);
        let q = ChebPoly::new(b);
        let v = p.mul(&q).eval(x);
        prop_assert!((v - p.eval(x) * q.eval(x)).abs() <= 1e-12 * (1.0 + v.abs()));
    }

    #[test]
    fn grid_interpolation_is_exact_on_polynomials(a in coeffs(12), t in -1.0f64..1.0) {
        let g = ChebGrid::new(16).unwrap();
        let p = ChebPoly::new(a);
        let f = g.sample(|x| p.eval(x));
        prop_assert!((f.interpolate(t) - p.eval(t)).abs() < 1e-12);
        prop_assert!((f.differentiate().interpolate(t) - p.derivative().eval(t)).abs() < 1e-10);
        let back = f.differentiate().antiderivative();
        prop_assert!((back.interpolate(t) - (p.eval(t) - p.eval(-1.0))).abs() < 1e-11);
    }

    #[test]
    fn pade_reproduces_rational_series(
        r1 in 0.3f64..0.9, r2 in -0.9f64..-0.3, a in 0.5f64..2.0, b in -2.0f64..-0.5,
        c0 in -1.0f64..1.0,
    ) {
        // c0 + a/(1 - r1 λ) + b/(1 - r2 λ)
        let k: Vec<f64> = (0..8)
            .map(|n| a * r1.powi(n) + b * r2.powi(n) + if n == 0 { c0 } else { 0.0 })
            .collect();
        let p = pade(&k, 3, 2).unwrap();
        for (x, y) in p.taylor().iter().zip(&k) {
            prop_assert!((x - y).abs() < 1e-9 * (1.0 + y.abs()));
        }
        let mut poles: Vec<f64> = p.poles.iter().map(|z| z.re).collect();
        poles.sort_by(f64::total_cmp);
        prop_assert!((poles[0] - 1.0 / r2).abs() < 1e-7);
        prop_assert!((poles[1] - 1.0 / r1).abs() < 1e-7);
    }

    #[test]
    fn susceptibility_is_linear_in_the_field(x1 in coeffs(3), x2 in coeffs(3), lam in -0.4f64..0.4) {
        for (p, cons) in [doubling(), tripling()] {
            let a = ObservablePoly::new(ChebPoly::new(vec![0.1, 0.4, -0.3, 0.6])).unwrap();
            let f1 = PerturbationField::new(ChebPoly::new(x1.clone()));
            let f2 = PerturbationField::new(ChebPoly::new(x2.clone()));
            let sum = PerturbationField::new(f1.poly().add(f2.poly()));
            let z = Complex64::new(lam, 0.0);
            let v1 = p.response_with(cons, &f1, &a).unwrap().psi(z).unwrap();
            let v2 = p.response_with(cons, &f2, &a).unwrap().psi(z).unwrap();
            let v = p.response_with(cons, &sum, &a).unwrap().psi(z).unwrap();
            prop_assert!((v - v1 - v2).norm() < 1e-9 * (1.0 + v.norm()));
        }
    }

    #[test]
    fn susceptibility_is_linear_in_the_observable(a1 in coeffs(4), a2 in coeffs(4)) {
        let (p, cons) = doubling();
        let x = PerturbationField::new(ChebPoly::new(vec![0.7, -0.2, 0.1]));
        let o1 = ObservablePoly::new(ChebPoly::new(a1)).unwrap();
        let o2 = ObservablePoly::new(ChebPoly::new(a2)).unwrap();
        let o = ObservablePoly::new(o1.poly().add(o2.poly())).unwrap();
        let v1 = p.response_with(cons, &x, &o1).unwrap().psi_at_one().unwrap();
        let v2 = p.response_with(cons, &x, &o2).unwrap().psi_at_one().unwrap();
        let v = p.response_with(cons, &x, &o).unwrap().psi_at_one().unwrap();
        prop_assert!((v - v1 - v2).abs() < 1e-9 * (1.0 + v.abs()));
    }

    #[test]
    fn susceptibility_is_analytic_through_one(x in coeffs(3)) {
        // quadratic extrapolation of Ψ(1 ± h) onto Ψ(1)
        let (p, cons) = doubling();
        let a = ObservablePoly::new(ChebPoly::new(vec![0.0, 0.3, 0.2, 1.0])).unwrap();
        let r = p.response_with(cons, &PerturbationField::new(ChebPoly::new(x)), &a).unwrap();
        let at = |l: f64| r.psi(Complex64::new(l, 0.0)).unwrap().re;
        let (h, c) = (1e-3, at(1.0));
        let mid = 0.5 * (at(1.0 + h) + at(1.0 - h));
        prop_assert!((mid - c).abs() < 1e-5 * (1.0 + c.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn perturbed_maps_keep_operator_invariants(t in -0.12f64..0.12, tilt in -0.5f64..0.5) {
        // X = (1 - x²)(1 + tilt·x)
        let x = PerturbationField::new(ChebPoly::from_monomial(&[1.0, tilt, -1.0, -tilt]));
        let f = perturbed_map(&chebyshev_markov_map(2).unwrap(), &x, t).unwrap();
        let p = Pipeline::new(&f, Conjugacy::Sine, 32).unwrap();
        prop_assert!((p.sd.eigenvalues[0].re - 1.0).abs() < 1e-9);
        prop_assert!(p.sd.gap < 1.0);
        prop_assert!(p.sd.sigma0.as_slice().iter().all(|&s| s > 0.0));
        prop_assert!((p.sd.sigma0.integrate() - 1.0).abs() < 1e-12);
        let g = p.grid().clone();
        for k in 0..=16 {
            let phi = g.sample(|y| ChebPoly::chebyshev_t(k).eval(y));
            let lphi = p.tm.apply_l(&phi);
            prop_assert!((lphi.integrate() - phi.integrate()).abs() < 1e-9);
        }
        let bump = g.sample(|y| (1.0 - y * y).powi(2));
        prop_assert!(p.tm.apply_l(&bump).as_slice().iter().all(|&v| v >= -1e-12));
    }
}

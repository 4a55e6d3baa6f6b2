//! Independent checks of the response machinery: finite differences of
//! `t ↦ ρ_t(A)`, direct quadrature of the defining integral of `κ_n`, and
//! closed-form Chebyshev fixtures.

use serde::Serialize;

use crate::conjugacy::Conjugacy;
use crate::error::{Error, Result};
use crate::map::{chebyshev_markov_map, perturbed_map, AnalyticMap, ObservablePoly, PerturbationField};
use crate::pipeline::Pipeline;
use crate::transfer::SpectrumData;

/// Central differences of `t ↦ ρ_t(A)` at `h`, `h/2`, `h/4`.
#[derive(Debug, Clone, Serialize)]
pub struct ResponseEstimate {
    pub h: f64,
    /// Central difference at `h`.
    pub value: f64,
    pub half_value: f64,
    pub quarter_value: f64,
    /// `(4 D(h/2) - D(h)) / 3`.
    pub richardson_value: f64,
    /// `|value - richardson_value|`.
    pub discrepancy: f64,
    /// `|D(h) - D(h/2)| / |D(h/2) - D(h/4)|`, about 4 for a second-order scheme.
    pub step_ratio: f64,
}

/// `ρ_t(A)` for the perturbed map `f + t X∘f`.
pub fn perturbed_expectation(
    f: &AnalyticMap,
    x: &PerturbationField,
    a: &ObservablePoly,
    t: f64,
    conj: Conjugacy,
    n: usize,
) -> Result<f64> {
    let ft = perturbed_map(f, x, t)?;
    Ok(Pipeline::new(&ft, conj, n)?.expectation(a))
}

pub fn finite_difference_response(
    f: &AnalyticMap,
    x: &PerturbationField,
    a: &ObservablePoly,
    h: f64,
    conj: Conjugacy,
    n: usize,
) -> Result<ResponseEstimate> {
    if !x.vanishes_at_endpoints() {
        return Err(Error::EndpointNonvanishing {
            left: x.eval(-1.0),
            right: x.eval(1.0),
        });
    }
    if !(1e-5..=1e-2).contains(&h) {
        return Err(Error::InvalidArgument(format!("step h = {h} outside [1e-5, 1e-2]")));
    }
    let central = |s: f64| -> Result<f64> {
        let up = perturbed_expectation(f, x, a, s, conj, n)?;
        let down = perturbed_expectation(f, x, a, -s, conj, n)?;
        Ok((up - down) / (2.0 * s))
    };
    let value = central(h)?;
    let half_value = central(h / 2.0)?;
    let quarter_value = central(h / 4.0)?;
    let richardson_value = (4.0 * half_value - value) / 3.0;
    Ok(ResponseEstimate {
        h,
        value,
        half_value,
        quarter_value,
        richardson_value,
        discrepancy: (value - richardson_value).abs(),
        step_ratio: (value - half_value).abs() / (half_value - quarter_value).abs(),
    })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[n - 1 - i] = z;
        w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

const GL_POINTS: usize = 20;

/// `(A∘fⁿ)'(x)` by the chain rule along the forward orbit.
fn orbit_derivative(f: &AnalyticMap, df: &crate::poly::ChebPoly, da: &crate::poly::ChebPoly, x: f64, n: usize) -> f64 {
    let mut xk = x;
    let mut d = 1.0;
    for _ in 0..n {
        d *= df.eval(xk);
        xk = f.eval(xk);
    }
    d * da.eval(xk)
}

/// `κ_n = ∫ ρ(dx) X(x) (A∘fⁿ)'(x)`, written in the conjugated coordinate as
/// `∫ σ₀(y) X(ω y) (A∘fⁿ)'(ω y) dy` and integrated by composite
/// Gauss–Legendre with panels fine enough to resolve the `mⁿ` laps.
pub fn direct_kappa(
    f: &AnalyticMap,
    conj: Conjugacy,
    sd: &SpectrumData,
    x: &PerturbationField,
    a: &ObservablePoly,
    n: usize,
) -> f64 {
    let df = f.poly().derivative();
    let da = a.poly().derivative();
    let laps = (f.m() as f64).powi(n as i32) * a.poly().degree().max(1) as f64;
    let panels = (2.0 * laps).max(16.0) as usize;
    let (gx, gw) = gauss_legendre(GL_POINTS);
    let width = 2.0 / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = -1.0 + (p as f64 + 0.5) * width;
        let mut s = 0.0;
        for (t, w) in gx.iter().zip(&gw) {
            let y = mid + 0.5 * width * t;
            let xx = conj.omega(y);
            s += w * sd.sigma0.interpolate(y) * x.eval(xx) * orbit_derivative(f, &df, &da, xx, n);
        }
        total += 0.5 * width * s;
    }
    total
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosedFormReport {
    pub m: usize,
    pub n: usize,
    pub sigma0_defect: f64,
    pub rho_zero_defect: f64,
    pub mu_minus_defect: f64,
    pub mu_plus_defect: f64,
    pub spectrum_defect: f64,
    pub pass: bool,
    pub failures: Vec<String>,
}

/// Expected leading eigenvalues of `L` for `f = ±T_m` under the sine
/// conjugacy: the conjugate is piecewise linear with slopes `±m`.
fn expected_tail(m: usize) -> Vec<f64> {
    match m {
        2 => vec![1.0, 0.25, 1.0 / 16.0],
        3 => vec![1.0, 1.0 / 9.0, 1.0 / 9.0, 1.0 / 81.0, 1.0 / 81.0],
        _ => Vec::new(),
    }
}

pub fn chebyshev_closed_form_checks(m: usize, n: usize) -> Result<ClosedFormReport> {
    if !(2..=3).contains(&m) {
        return Err(Error::UnsupportedFixture(format!(
            "no closed-form table for m = {m}"
        )));
    }
    let f = chebyshev_markov_map(m)?;
    let p = Pipeline::new(&f, Conjugacy::Sine, n)?;
    let sigma0_defect = p
        .sd
        .sigma0
        .as_slice()
        .iter()
        .map(|v| (v - 0.5).abs())
        .fold(0.0, f64::max);
    let rho0 = crate::transfer::acim_density(&p.sd, Conjugacy::Sine, 0.0)?;
    let rho_zero_defect = (rho0 - std::f64::consts::FRAC_1_PI).abs();
    let mu_minus_defect = (f.mu_minus() - m as f64).abs();
    let mu_plus_defect = (f.mu_plus().abs() - m as f64).abs();
    let tail = expected_tail(m);
    let spectrum_defect = tail
        .iter()
        .zip(&p.sd.eigenvalues)
        .map(|(e, mu)| (mu - e).norm())
        .fold(0.0, f64::max);
    let mut failures = Vec::new();
    let mut check = |name: &str, v: f64, tol: f64| {
        if !(v <= tol) {
            failures.push(format!("{name} = {v:e} > {tol:e}"));
        }
    };
    check("sigma0 - 1/2", sigma0_defect, 1e-10);
    check("rho(0) - 1/pi", rho_zero_defect, 1e-9);
    check("mu_minus - m", mu_minus_defect, 1e-8);
    check("|mu_plus| - m", mu_plus_defect, 1e-8);
    check("spectrum tail", spectrum_defect, 1e-7);
    Ok(ClosedFormReport {
        m,
        n,
        sigma0_defect,
        rho_zero_defect,
        mu_minus_defect,
        mu_plus_defect,
        spectrum_defect,
        pass: failures.is_empty(),
        failures,
    })
}

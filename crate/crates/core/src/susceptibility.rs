//! Response coefficients `κ_n` and the susceptibility `Ψ(λ) = Σ λⁿ κ_n`.
//!
//! In the conjugated coordinate `y` the coefficients read
//! `κ_n = ∫ (L₀ⁿ Y)(s) B'(s) ds` with `Y = σ₀ (X∘ω) / ω'` and `B = A∘ω`.
//! `Y` has simple poles at `±1` whenever `X(±1) ≠ 0`. They are split off
//! with eigenfunctions `Φ±` of `L₀` that carry the same poles, leaving a
//! remainder `Y₀` that vanishes at `±1`. On such functions the series
//! converges geometrically at the rate of the spectral gap, which yields
//! `Ψ` as an explicit meromorphic function with poles only at `1/μ±`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::conjugacy::Conjugacy;
use crate::error::{Error, Result};
use crate::map::{ObservablePoly, PerturbationField};
use crate::spectral::{solve, GridFunction};
use crate::transfer::{SpectrumData, TransferMatrices};

/// Tolerance on endpoint values of functions that must vanish at `±1`.
pub const H0_ENDPOINT_TOL: f64 = 1e-6;
/// Tolerance on the eigen-relations of the endpoint construction.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-6;
/// Largest `n` accepted by the raw route.
pub const RAW_ROUTE_MAX_N: usize = 40;
/// Routes must agree within `ROUTE_TOL · (1 + |κ_n|)` for `n <= ROUTE_CHECK_MAX_N`.
pub const ROUTE_TOL: f64 = 1e-7;
pub const ROUTE_CHECK_MAX_N: usize = 12;
/// `|1 - λμ|` below this is reported as a pole hit.
pub const POLE_TOL: f64 = 1e-10;
pub const SERIES_MAX_TERMS: usize = 500;
pub const SERIES_REL_TOL: f64 = 1e-12;

/// `minus/(z+1) + plus/(z-1) + regular(z)`.
#[derive(Debug, Clone)]
pub struct MeromorphicFn {
    pub minus: f64,
    pub plus: f64,
    pub regular: GridFunction,
}

impl MeromorphicFn {
    pub fn regular_only(regular: GridFunction) -> Self {
        MeromorphicFn {
            minus: 0.0,
            plus: 0.0,
            regular,
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        let mut v = self.regular.interpolate(z);
        if self.minus != 0.0 {
            v += self.minus / (z + 1.0);
        }
        if self.plus != 0.0 {
            v += self.plus / (z - 1.0);
        }
        v
    }

    /// Values at the grid nodes, with the poles evaluated from the exact
    /// node offsets.
    pub fn node_values(&self) -> Vec<f64> {
        let g = self.regular.grid();
        (0..g.n())
            .map(|i| {
                self.regular.as_slice()[i] + self.minus / g.node_lo()[i]
                    - self.plus / g.node_hi()[i]
            })
            .collect()
    }

    pub fn scale(&self, s: f64) -> Self {
        MeromorphicFn {
            minus: self.minus * s,
            plus: self.plus * s,
            regular: self.regular.scale(s),
        }
    }

    pub fn add(&self, o: &MeromorphicFn) -> Self {
        MeromorphicFn {
            minus: self.minus + o.minus,
            plus: self.plus + o.plus,
            regular: self.regular.add(&o.regular),
        }
    }

    pub fn sub(&self, o: &MeromorphicFn) -> Self {
        self.add(&o.scale(-1.0))
    }

    /// `∫ self · h ds` by the grid quadrature (`h` must vanish at any pole).
    pub fn pair(&self, h: &GridFunction) -> f64 {
        let w = self.regular.grid().quad_weights();
        self.node_values()
            .iter()
            .zip(h.as_slice())
            .zip(w)
            .map(|((a, b), w)| a * b * w)
            .sum()
    }
}

/// `p₋(z) = 1/(z+1) - (z+1)/4`, vanishing at `+1`.
pub fn p_minus(tm: &TransferMatrices) -> MeromorphicFn {
    let g = tm.grid();
    MeromorphicFn {
        minus: 1.0,
        plus: 0.0,
        regular: GridFunction::new(g.clone(), g.node_lo().iter().map(|l| -0.25 * l).collect()),
    }
}

/// `p₊(z) = 1/(z-1) - (z-1)/4`, vanishing at `-1`.
pub fn p_plus(tm: &TransferMatrices) -> MeromorphicFn {
    let g = tm.grid();
    MeromorphicFn {
        minus: 0.0,
        plus: 1.0,
        regular: GridFunction::new(g.clone(), g.node_hi().iter().map(|h| 0.25 * h).collect()),
    }
}

/// `L₀` applied to a function with endpoint poles.
///
/// The pole at `-1` is carried by `ψ_1` (and, for even `m`, by `ψ_m`,
/// which maps `-1` to `+1`); the pole at `+1` survives only for odd `m`.
/// Each pole term is combined with the transported pole before evaluation,
/// so the regular part is free of the `1/ξ` cancellation.
pub fn apply_l0_meromorphic(tm: &TransferMatrices, f: &MeromorphicFn) -> MeromorphicFn {
    let bs = tm.branch_system();
    let m = bs.m();
    let odd = m % 2 == 1;
    let mu_m = bs.map().mu_minus();
    let mu_p = bs.map().mu_plus();
    let minus_out = f.minus * mu_m + if odd { 0.0 } else { f.plus * mu_p.abs() };
    let plus_out = if odd { f.plus * mu_p } else { 0.0 };
    let g = tm.grid();
    let base = tm.apply_l0(&f.regular);
    let mut reg = base.as_slice().to_vec();
    for (i, r) in reg.iter_mut().enumerate() {
        let ls = g.node_lo()[i];
        let hs = g.node_hi()[i];
        let pts = &tm.points()[i];
        for (jm1, p) in pts.iter().enumerate() {
            let j = jm1 + 1;
            let sign = bs.map().branch_sign(j);
            if f.minus != 0.0 {
                if j == 1 {
                    *r += f.minus * (ls - mu_m * p.lo) / (p.lo * ls);
                } else {
                    *r += sign * f.minus / p.lo;
                }
            }
            if f.plus != 0.0 {
                if j == m && odd {
                    *r -= f.plus * (hs - mu_p * p.hi) / (p.hi * hs);
                } else if j == m {
                    *r += f.plus * (ls - mu_p.abs() * p.hi) / (p.hi * ls);
                } else {
                    *r -= sign * f.plus / p.hi;
                }
            }
        }
    }
    MeromorphicFn {
        minus: minus_out,
        plus: plus_out,
        regular: GridFunction::new(g.clone(), reg),
    }
}

fn endpoint_max(f: &GridFunction) -> f64 {
    f.interpolate(-1.0).abs().max(f.interpolate(1.0).abs())
}

/// Intermediates of the eigenfunction construction at one endpoint.
#[derive(Debug, Clone)]
pub struct EndpointEigenfunction {
    pub mu: f64,
    pub p: MeromorphicFn,
    /// `u = (L₀ - μ) p`, regular and vanishing at `±1`.
    pub u: GridFunction,
    /// `v = (L - μ)⁻¹ u'`.
    pub v: GridFunction,
    /// `w = ∫_{-1} v`.
    pub w: GridFunction,
    /// `Φ = p - w`.
    pub phi: MeromorphicFn,
    pub u_endpoint: f64,
    pub v_mass: f64,
    pub w_right: f64,
    pub eigen_residual: f64,
}

fn shifted_l(tm: &TransferMatrices, mu: f64) -> DMatrix<f64> {
    let n = tm.grid().n();
    tm.l() - DMatrix::<f64>::identity(n, n) * mu
}

fn build_endpoint(tm: &TransferMatrices, p: MeromorphicFn, mu: f64) -> Result<EndpointEigenfunction> {
    let lp = apply_l0_meromorphic(tm, &p);
    let u = lp.regular.sub(&p.regular.scale(mu));
    let u_endpoint = endpoint_max(&u);
    if u_endpoint > H0_ENDPOINT_TOL {
        return Err(Error::H0DefectTooLarge {
            what: "u(±1)",
            value: u_endpoint,
            tol: H0_ENDPOINT_TOL,
        });
    }
    let v = solve(&shifted_l(tm, mu), &u.differentiate())?;
    let v_mass = v.integrate().abs();
    if v_mass > 1e-8 {
        return Err(Error::H0DefectTooLarge {
            what: "∫v",
            value: v_mass,
            tol: 1e-8,
        });
    }
    let w = v.antiderivative();
    let w_right = w.interpolate(1.0).abs();
    if w_right > H0_ENDPOINT_TOL {
        return Err(Error::H0DefectTooLarge {
            what: "w(1)",
            value: w_right,
            tol: H0_ENDPOINT_TOL,
        });
    }
    let phi = MeromorphicFn {
        minus: p.minus,
        plus: p.plus,
        regular: p.regular.sub(&w),
    };
    let res = apply_l0_meromorphic(tm, &phi).sub(&phi.scale(mu));
    let eigen_residual = res.regular.max_abs();
    if eigen_residual > EIGEN_RESIDUAL_TOL {
        return Err(Error::H0DefectTooLarge {
            what: "eigen residual",
            value: eigen_residual,
            tol: EIGEN_RESIDUAL_TOL,
        });
    }
    Ok(EndpointEigenfunction {
        mu,
        p,
        u,
        v,
        w,
        phi,
        u_endpoint,
        v_mass,
        w_right,
        eigen_residual,
    })
}

/// `Φ₋` with `L₀Φ₋ = μ₋Φ₋`, `Φ₋ = 1/(z+1) + O(z+1)`, `Φ₋(1) = 0`.
pub fn build_phi_minus(tm: &TransferMatrices) -> Result<EndpointEigenfunction> {
    let mu = tm.branch_system().map().mu_minus();
    build_endpoint(tm, p_minus(tm), mu)
}

/// The companion at `+1`.
#[derive(Debug, Clone)]
pub enum PhiPlus {
    /// Odd `m`: an eigenfunction `L₀Φ₊ = μ₊Φ₊`.
    Odd(EndpointEigenfunction),
    /// Even `m`: `Φ₊ = p₊` is not an eigenfunction; instead
    /// `L₀(Φ₊/μ₊ + Φ₋/μ₋) = Ỹ` with `Ỹ` vanishing at `±1`.
    Even {
        mu: f64,
        phi: MeromorphicFn,
        u0: GridFunction,
        ytilde: GridFunction,
        ytilde_endpoint: f64,
        identity_residual: f64,
    },
}

impl PhiPlus {
    pub fn phi(&self) -> &MeromorphicFn {
        match self {
            PhiPlus::Odd(e) => &e.phi,
            PhiPlus::Even { phi, .. } => phi,
        }
    }
    pub fn mu(&self) -> f64 {
        match self {
            PhiPlus::Odd(e) => e.mu,
            PhiPlus::Even { mu, .. } => *mu,
        }
    }
}

/// For even `m` the multiplier `μ₊ = -sqrt(|f'(1)|)` carries the
/// orientation of the last branch.
pub fn build_phi_plus(tm: &TransferMatrices, minus: &EndpointEigenfunction) -> Result<PhiPlus> {
    let f = tm.branch_system().map();
    let mu = f.mu_plus();
    if f.m() % 2 == 1 {
        return Ok(PhiPlus::Odd(build_endpoint(tm, p_plus(tm), mu)?));
    }
    let pp = p_plus(tm);
    let u0m = apply_l0_meromorphic(tm, &pp).add(&p_minus(tm).scale(mu));
    let u0 = u0m.regular;
    let ytilde = u0.scale(1.0 / mu).sub(&minus.w);
    let ytilde_endpoint = endpoint_max(&ytilde);
    if ytilde_endpoint > H0_ENDPOINT_TOL {
        return Err(Error::H0DefectTooLarge {
            what: "Ỹ(±1)",
            value: ytilde_endpoint,
            tol: H0_ENDPOINT_TOL,
        });
    }
    let z = pp.scale(1.0 / mu).add(&minus.phi.scale(1.0 / minus.mu));
    let lz = apply_l0_meromorphic(tm, &z);
    let identity_residual = lz.regular.sub(&ytilde).max_abs();
    if identity_residual > EIGEN_RESIDUAL_TOL {
        return Err(Error::H0DefectTooLarge {
            what: "L₀(Φ₊/μ₊ + Φ₋/μ₋) - Ỹ",
            value: identity_residual,
            tol: EIGEN_RESIDUAL_TOL,
        });
    }
    Ok(PhiPlus::Even {
        mu,
        phi: pp,
        u0,
        ytilde,
        ytilde_endpoint,
        identity_residual,
    })
}

/// Both endpoint constructions; depends on the map and grid only.
#[derive(Debug, Clone)]
pub struct EndpointConstruction {
    pub minus: EndpointEigenfunction,
    pub plus: PhiPlus,
}

pub fn build_endpoint_construction(tm: &TransferMatrices) -> Result<EndpointConstruction> {
    let minus = build_phi_minus(tm)?;
    let plus = build_phi_plus(tm, &minus)?;
    Ok(EndpointConstruction { minus, plus })
}

/// `Y = σ₀ (X∘ω) / ω'` with its endpoint poles split off analytically.
pub fn build_y(sd: &SpectrumData, x: &PerturbationField, conj: Conjugacy) -> MeromorphicFn {
    let sigma = &sd.sigma0;
    let g = sigma.grid().clone();
    let two_c = 2.0 * conj.c();
    let minus = sigma.interpolate(-1.0) * x.eval(-1.0) / two_c;
    let plus = -sigma.interpolate(1.0) * x.eval(1.0) / two_c;
    let reg = (0..g.n())
        .map(|i| {
            let (y, lo, hi) = (g.nodes()[i], g.node_lo()[i], g.node_hi()[i]);
            let val = sigma.as_slice()[i] * x.eval(conj.omega(y)) / conj.omega_prime_offsets(lo, hi);
            val - minus / lo + plus / hi
        })
        .collect();
    MeromorphicFn {
        minus,
        plus,
        regular: GridFunction::new(g, reg),
    }
}

/// `B = A∘ω` and `B' = (A'∘ω) ω'` at the nodes.
#[derive(Debug, Clone)]
pub struct ObservableData {
    pub b: GridFunction,
    pub db: GridFunction,
}

pub fn observable_data(tm: &TransferMatrices, a: &ObservablePoly, conj: Conjugacy) -> ObservableData {
    let g = tm.grid().clone();
    let da = a.poly().derivative();
    let b = g.sample(|y| a.eval(conj.omega(y)));
    let db = GridFunction::new(
        g.clone(),
        (0..g.n())
            .map(|i| da.eval(conj.omega(g.nodes()[i])) * conj.omega_prime_offsets(g.node_lo()[i], g.node_hi()[i]))
            .collect(),
    );
    ObservableData { b, db }
}

/// `Y = c₋Φ₋ + c₊Φ₊ + Y₀` (odd `m`) or
/// `Y = c₋'Φ₋ + c̃(Φ₊/μ₊ + Φ₋/μ₋) + Y₀` (even `m`), with pairings against `B'`.
#[derive(Debug, Clone)]
pub struct ResponseDecomposition {
    pub odd: bool,
    pub mu_minus: f64,
    /// Orientation-signed: negative for even `m`.
    pub mu_plus: f64,
    pub y: MeromorphicFn,
    /// `c₋` (odd) or `c₋'` (even).
    pub c_minus: f64,
    /// `c₊` (odd); zero for even `m`.
    pub c_plus: f64,
    /// `c̃` (even); zero for odd `m`.
    pub c_tilde: f64,
    pub phi_minus: MeromorphicFn,
    pub phi_plus: MeromorphicFn,
    pub y0: GridFunction,
    pub ytilde: Option<GridFunction>,
    pub i_minus: f64,
    pub i_plus: f64,
    pub i_tilde: f64,
    pub obs: ObservableData,
    pub reconstruction_defect: f64,
    pub y0_endpoint: f64,
    pub y0_derivative_mass: f64,
    pub ytilde_endpoint: f64,
}

pub fn decompose_y(
    y: &MeromorphicFn,
    cons: &EndpointConstruction,
    obs: &ObservableData,
) -> Result<ResponseDecomposition> {
    let phi_m = cons.minus.phi.clone();
    let phi_p = cons.plus.phi().clone();
    let mu_m = cons.minus.mu;
    let mu_p = cons.plus.mu();
    let (odd, c_minus, c_plus, c_tilde, combo, ytilde) = match &cons.plus {
        PhiPlus::Odd(_) => {
            let combo = phi_m.scale(y.minus).add(&phi_p.scale(y.plus));
            (true, y.minus, y.plus, 0.0, combo, None)
        }
        PhiPlus::Even { ytilde, .. } => {
            let c_tilde = mu_p * y.plus;
            let c_minus = y.minus - c_tilde / mu_m;
            let z = phi_p.scale(1.0 / mu_p).add(&phi_m.scale(1.0 / mu_m));
            let combo = phi_m.scale(c_minus).add(&z.scale(c_tilde));
            (false, c_minus, 0.0, c_tilde, combo, Some(ytilde.clone()))
        }
    };
    // poles cancel by construction; the remainder is a plain grid function
    let y0 = y.regular.sub(&combo.regular);
    let pole_left = (y.minus - combo.minus).abs() + (y.plus - combo.plus).abs();
    let rebuilt: Vec<f64> = combo.node_values().iter().zip(y0.as_slice()).map(|(a, b)| a + b).collect();
    let reconstruction_defect = rebuilt
        .iter()
        .zip(y.node_values())
        .map(|(a, b)| (a - b).abs() / (1.0 + b.abs()))
        .fold(pole_left, f64::max);
    let y0_endpoint = endpoint_max(&y0);
    if y0_endpoint > H0_ENDPOINT_TOL {
        return Err(Error::H0DefectTooLarge {
            what: "Y₀(±1)",
            value: y0_endpoint,
            tol: H0_ENDPOINT_TOL,
        });
    }
    let y0_derivative_mass = y0.differentiate().integrate().abs();
    if y0_derivative_mass > 1e-8 {
        return Err(Error::H0DefectTooLarge {
            what: "∫Y₀'",
            value: y0_derivative_mass,
            tol: 1e-8,
        });
    }
    let ytilde_endpoint = ytilde.as_ref().map_or(0.0, endpoint_max);
    let i_minus = phi_m.pair(&obs.db);
    let i_plus = phi_p.pair(&obs.db);
    let i_tilde = if odd {
        0.0
    } else {
        phi_p.scale(1.0 / mu_p).add(&phi_m.scale(1.0 / mu_m)).pair(&obs.db)
    };
    Ok(ResponseDecomposition {
        odd,
        mu_minus: mu_m,
        mu_plus: mu_p,
        y: y.clone(),
        c_minus,
        c_plus,
        c_tilde,
        phi_minus: phi_m,
        phi_plus: phi_p,
        y0,
        ytilde,
        i_minus,
        i_plus,
        i_tilde,
        obs: obs.clone(),
        reconstruction_defect,
        y0_endpoint,
        y0_derivative_mass,
        ytilde_endpoint,
    })
}

/// `-Σ λⁿ ∫ (Lⁿ w') B` for `w` vanishing at `±1`.
pub fn series_h0(
    tm: &TransferMatrices,
    sd: &SpectrumData,
    w: &GridFunction,
    b: &GridFunction,
    lambda: Complex64,
) -> Result<Complex64> {
    let endpoint = endpoint_max(w);
    if endpoint > H0_ENDPOINT_TOL {
        return Err(Error::H0DefectTooLarge {
            what: "w(±1)",
            value: endpoint,
            tol: H0_ENDPOINT_TOL,
        });
    }
    if lambda.norm() * sd.gap >= 1.0 - 1e-9 {
        return Err(Error::NoDecay {
            lambda: format!("{lambda}"),
            detail: format!("|λ| |μ_1| = {} >= 1", lambda.norm() * sd.gap),
        });
    }
    let sigma = &sd.sigma0;
    let deflate = |v: GridFunction| {
        let mass = v.integrate();
        v.sub(&sigma.scale(mass))
    };
    let mut v = deflate(w.differentiate());
    let b_l1: f64 = b
        .as_slice()
        .iter()
        .zip(b.grid().quad_weights())
        .map(|(x, w)| x.abs() * w)
        .sum();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut lam_n = Complex64::new(1.0, 0.0);
    let first_bound = v.max_abs() * b_l1;
    for n in 0..SERIES_MAX_TERMS {
        if n > 0 && n % 50 == 0 {
            v = deflate(v);
        }
        let term = lam_n * v.dot(b);
        sum -= term;
        let bound = lam_n.norm() * v.max_abs() * b_l1;
        if bound <= SERIES_REL_TOL * (1.0 + sum.norm()) {
            return Ok(sum);
        }
        if !(bound <= 1e8 * (first_bound + 1.0)) {
            return Err(Error::NoDecay {
                lambda: format!("{lambda}"),
                detail: format!("term bound {bound:e} at n = {n}"),
            });
        }
        v = tm.apply_l(&v);
        lam_n *= lambda;
    }
    Err(Error::NoDecay {
        lambda: format!("{lambda}"),
        detail: format!("no convergence after {SERIES_MAX_TERMS} terms"),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KappaRoute {
    Decomposition,
    Raw,
    Quadrature,
}

fn l0_power_pairing(tm: &TransferMatrices, w: &GridFunction, db: &GridFunction, n: usize) -> f64 {
    let mut v = w.clone();
    for _ in 0..n {
        v = tm.apply_l0(&v);
    }
    v.dot(db)
}

/// `κ_n` from the decomposition.
pub fn kappa_decomposition(tm: &TransferMatrices, rd: &ResponseDecomposition, n: usize) -> f64 {
    let db = &rd.obs.db;
    let rem = l0_power_pairing(tm, &rd.y0, db, n);
    if rd.odd {
        rd.c_minus * rd.mu_minus.powi(n as i32) * rd.i_minus
            + rd.c_plus * rd.mu_plus.powi(n as i32) * rd.i_plus
            + rem
    } else {
        let tilde = if n == 0 {
            rd.c_tilde * rd.i_tilde
        } else {
            rd.c_tilde * l0_power_pairing(tm, rd.ytilde.as_ref().unwrap(), db, n - 1)
        };
        rd.c_minus * rd.mu_minus.powi(n as i32) * rd.i_minus + tilde + rem
    }
}

/// `κ_0..κ_n` by iterating `L₀` on `Y` itself, poles tracked explicitly.
pub fn kappa_raw_all(tm: &TransferMatrices, rd: &ResponseDecomposition, n: usize) -> Result<Vec<f64>> {
    if n > RAW_ROUTE_MAX_N {
        return Err(Error::InvalidArgument(format!(
            "raw route limited to n <= {RAW_ROUTE_MAX_N}"
        )));
    }
    let mut out = Vec::with_capacity(n + 1);
    let mut cur = rd.y.clone();
    out.push(cur.pair(&rd.obs.db));
    for _ in 0..n {
        cur = apply_l0_meromorphic(tm, &cur);
        out.push(cur.pair(&rd.obs.db));
    }
    Ok(out)
}

pub fn kappa(tm: &TransferMatrices, rd: &ResponseDecomposition, n: usize, route: KappaRoute) -> Result<f64> {
    match route {
        KappaRoute::Decomposition => Ok(kappa_decomposition(tm, rd, n)),
        KappaRoute::Raw => Ok(kappa_raw_all(tm, rd, n)?[n]),
        KappaRoute::Quadrature => Err(Error::InvalidArgument(
            "the quadrature route lives in the oracles module".into(),
        )),
    }
}

/// `κ_n` by the decomposition, cross-checked against the raw route.
pub fn kappa_checked(tm: &TransferMatrices, rd: &ResponseDecomposition, n: usize) -> Result<f64> {
    let dec = kappa_decomposition(tm, rd, n);
    if n <= ROUTE_CHECK_MAX_N {
        let raw = kappa(tm, rd, n, KappaRoute::Raw)?;
        if (dec - raw).abs() > ROUTE_TOL * (1.0 + dec.abs()) {
            return Err(Error::RouteDisagreement {
                n,
                decomposition: dec,
                raw,
            });
        }
    }
    Ok(dec)
}

#[derive(Debug, Clone, Serialize)]
pub struct SusceptibilitySeries {
    pub coefficients: Vec<f64>,
    pub routes: Vec<KappaRoute>,
}

pub fn susceptibility_series(
    tm: &TransferMatrices,
    rd: &ResponseDecomposition,
    k: usize,
    route: KappaRoute,
) -> Result<SusceptibilitySeries> {
    let coefficients = match route {
        KappaRoute::Raw => kappa_raw_all(tm, rd, k)?,
        _ => (0..=k).map(|n| kappa_decomposition(tm, rd, n)).collect(),
    };
    Ok(SusceptibilitySeries {
        routes: vec![route; coefficients.len()],
        coefficients,
    })
}

/// Partial sum `Σ_{n<=K} λⁿ κ_n`.
pub fn partial_sum(series: &SusceptibilitySeries, lambda: Complex64) -> Complex64 {
    series
        .coefficients
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * lambda + c)
}

/// `Ψ(λ)` from the meromorphic decomposition.
pub fn psi(
    rd: &ResponseDecomposition,
    tm: &TransferMatrices,
    sd: &SpectrumData,
    lambda: Complex64,
) -> Result<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    let mut poles = vec![rd.mu_minus];
    if rd.odd {
        poles.push(rd.mu_plus);
    }
    for &mu in &poles {
        if (one - lambda * mu).norm() < POLE_TOL {
            return Err(Error::PoleHit {
                lambda: format!("{lambda}"),
                multiplier: mu,
            });
        }
    }
    let b = &rd.obs.b;
    let psi0 = series_h0(tm, sd, &rd.y0, b, lambda)?;
    let mut total = rd.c_minus * rd.i_minus / (one - lambda * rd.mu_minus) + psi0;
    if rd.odd {
        total += rd.c_plus * rd.i_plus / (one - lambda * rd.mu_plus);
    } else if rd.c_tilde != 0.0 {
        let tilde = series_h0(tm, sd, rd.ytilde.as_ref().unwrap(), b, lambda)?;
        total += rd.c_tilde * rd.i_tilde + lambda * rd.c_tilde * tilde;
    }
    Ok(total)
}

pub fn psi_at_one(rd: &ResponseDecomposition, tm: &TransferMatrices, sd: &SpectrumData) -> Result<f64> {
    let v = psi(rd, tm, sd, Complex64::new(1.0, 0.0))?;
    if v.im.abs() > 1e-9 {
        return Err(Error::SpectralAnomaly(format!("Ψ(1) has imaginary part {}", v.im)));
    }
    Ok(v.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::chebyshev_markov_map;
    use crate::pipeline::Pipeline;
    use crate::poly::ChebPoly;
    use std::f64::consts::PI;

    fn pipe(m: usize, n: usize) -> Pipeline {
        Pipeline::new(&chebyshev_markov_map(m).unwrap(), Conjugacy::Sine, n).unwrap()
    }

    fn field(c: &[f64]) -> PerturbationField {
        PerturbationField::new(ChebPoly::new(c.to_vec()))
    }

    fn obs(c: &[f64]) -> ObservablePoly {
        ObservablePoly::new(ChebPoly::new(c.to_vec())).unwrap()
    }

    #[test]
    fn meromorphic_eval_matches_node_values() {
        let p = pipe(2, 24);
        let g = p.grid().clone();
        let f = MeromorphicFn {
            minus: 0.7,
            plus: -0.3,
            regular: g.sample(|z| z * z),
        };
        for (i, v) in f.node_values().iter().enumerate() {
            assert!((f.eval(g.nodes()[i]) - v).abs() < 1e-12 * (1.0 + v.abs()));
        }
        let z = 0.123;
        assert!((f.eval(z) - (0.7 / (z + 1.0) - 0.3 / (z - 1.0) + z * z)).abs() < 1e-13);
    }

    #[test]
    fn residues_of_y() {
        let p = pipe(2, 32);
        let y = build_y(&p.sd, &field(&[1.0]), Conjugacy::Sine);
        assert!((y.minus - 2.0 / (PI * PI)).abs() < 1e-10);
        assert!((y.plus + 2.0 / (PI * PI)).abs() < 1e-10);
        // fitted residue: (y+1) Y(y) near -1
        let s = -1.0 + 1e-4;
        let direct = p.sd.sigma0.interpolate(s) / Conjugacy::Sine.omega_prime(s);
        assert!(((s + 1.0) * direct - y.minus).abs() < 1e-5);
        let bump = build_y(&p.sd, &field(&[0.5, 0.0, -0.5]), Conjugacy::Sine);
        assert!(bump.minus.abs() < 1e-15 && bump.plus.abs() < 1e-15);
        let zero = build_y(&p.sd, &field(&[]), Conjugacy::Sine);
        assert_eq!(zero.regular.max_abs(), 0.0);
    }

    #[test]
    fn endpoint_construction_residuals() {
        for (m, mu) in [(2, 2.0), (3, 3.0)] {
            let p = pipe(m, 48);
            let c = p.construction().unwrap();
            assert!((c.minus.mu - mu).abs() < 1e-10);
            assert!(c.minus.eigen_residual < 1e-6);
            assert!(c.minus.w.interpolate(-1.0).abs() < 1e-12);
            assert!(c.minus.w_right < 1e-6);
            match &c.plus {
                PhiPlus::Odd(e) => {
                    assert_eq!(m, 3);
                    assert!((e.mu - mu).abs() < 1e-10);
                    assert!(e.eigen_residual < 1e-6);
                }
                PhiPlus::Even {
                    mu: mp,
                    ytilde_endpoint,
                    identity_residual,
                    ..
                } => {
                    assert_eq!(m, 2);
                    assert!((mp + 2.0).abs() < 1e-10);
                    assert!(*ytilde_endpoint < 1e-6);
                    assert!(*identity_residual < 1e-6);
                }
            }
        }
    }

    #[test]
    fn even_decomposition_coefficients() {
        let p = pipe(2, 32);
        let r = p.response(&field(&[1.0]), &obs(&[0.0, 0.0, 0.0, 1.0])).unwrap();
        // μ₊ = -2 carries the orientation of the last branch
        assert!((r.rd.c_tilde - 4.0 / (PI * PI)).abs() < 1e-10);
        assert!(r.rd.c_minus.abs() < 1e-10);
        assert!(r.rd.reconstruction_defect < 1e-8);
        let r = p.response(&field(&[0.5, 0.0, -0.5]), &obs(&[0.0, 0.0, 1.0])).unwrap();
        assert_eq!((r.rd.c_minus, r.rd.c_tilde), (0.0, 0.0));
        assert!(r.rd.y0.sub(&r.rd.y.regular).max_abs() < 1e-15);
    }

    #[test]
    fn kappa_examples() {
        let p = pipe(2, 32);
        let sq = obs(&[0.5, 0.0, 0.5]);
        let r = p.response(&field(&[1.0]), &sq).unwrap();
        assert!(kappa(&p.tm, &r.rd, 0, KappaRoute::Decomposition).unwrap().abs() < 1e-12);
        assert!(kappa(&p.tm, &r.rd, 0, KappaRoute::Raw).unwrap().abs() < 1e-12);
        let r = p.response(&field(&[]), &sq).unwrap();
        for n in 0..6 {
            assert_eq!(r.kappa(n).unwrap(), 0.0);
        }
        let r = p.response(&field(&[1.0]), &obs(&[2.5])).unwrap();
        for n in 0..6 {
            assert_eq!(r.kappa(n).unwrap(), 0.0);
        }
        assert!(matches!(
            kappa(&p.tm, &r.rd, 41, KappaRoute::Raw),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn series_h0_examples() {
        let p = pipe(2, 32);
        let g = p.grid().clone();
        let b = g.sample(|y| ChebPoly::chebyshev_t(2).eval(Conjugacy::Sine.omega(y)));
        let zero = GridFunction::zeros(g.clone());
        assert_eq!(series_h0(&p.tm, &p.sd, &zero, &b, Complex64::new(1.0, 0.0)).unwrap(), Complex64::new(0.0, 0.0));
        let w = g.sample(|y| 1.0 - y * y);
        let one = series_h0(&p.tm, &p.sd, &w, &b, Complex64::new(1.0, 0.0)).unwrap();
        assert!(one.is_finite() && one.im == 0.0);
        // against the raw pairings Σ λⁿ ∫(L₀ⁿ w) B'
        let db = observable_data(&p.tm, &obs(&[0.0, 0.0, 1.0]), Conjugacy::Sine).db;
        let lam: f64 = 0.3;
        let mut v = w.clone();
        let mut raw = 0.0;
        for n in 0..60 {
            raw += lam.powi(n) * v.dot(&db);
            v = p.tm.apply_l0(&v);
        }
        let dec = series_h0(&p.tm, &p.sd, &w, &b, Complex64::new(lam, 0.0)).unwrap();
        assert!((dec.re - raw).abs() < 1e-8);
        let edge = Complex64::new(1.0 / p.sd.gap, 0.0);
        assert!(matches!(series_h0(&p.tm, &p.sd, &w, &b, edge), Err(Error::NoDecay { .. })));
        let not_h0 = g.sample(|y| y);
        assert!(matches!(
            series_h0(&p.tm, &p.sd, &not_h0, &b, Complex64::new(0.5, 0.0)),
            Err(Error::H0DefectTooLarge { .. })
        ));
    }

    #[test]
    fn psi_examples() {
        let p = pipe(2, 32);
        let r = p.response(&field(&[1.0]), &obs(&[0.0, 0.0, 0.0, 1.0])).unwrap();
        let at0 = r.psi(Complex64::new(0.0, 0.0)).unwrap();
        assert!((at0.re - r.kappa(0).unwrap()).abs() < 1e-10);
        assert!(matches!(r.psi(Complex64::new(0.5, 0.0)), Err(Error::PoleHit { .. })));
        assert!(r.psi_at_one().unwrap().is_finite());
        let z = p.response(&field(&[]), &obs(&[0.0, 0.0, 1.0])).unwrap();
        assert_eq!(z.psi_at_one().unwrap(), 0.0);
    }

    #[test]
    fn series_partial_sum() {
        let s = SusceptibilitySeries {
            coefficients: vec![1.0, 2.0, 4.0],
            routes: vec![KappaRoute::Raw; 3],
        };
        assert_eq!(partial_sum(&s, Complex64::new(0.5, 0.0)), Complex64::new(3.0, 0.0));
    }
}

//! Collocation matrices of the transfer operators `L` and `L₀`, the
//! spectrum of `L`, and the invariant density.
//!
//! `(LΦ)(x) = Σ_j (-1)^{j+1} ψ_j'(x) Φ(ψ_j(x))` and
//! `(L₀Φ)(x) = Σ_j (-1)^{j+1} Φ(ψ_j(x))`, so `(L₀Φ)' = L(Φ')`.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::branch::{BranchPoint, BranchSystem};
use crate::conjugacy::Conjugacy;
use crate::error::{Error, Result};
use crate::spectral::{eig, ChebGrid, GridFunction};

#[derive(Debug, Clone)]
pub struct TransferMatrices {
    grid: Arc<ChebGrid>,
    bs: BranchSystem,
    l: DMatrix<f64>,
    l0: DMatrix<f64>,
    /// `points[i][j-1]` is branch `j` evaluated at node `i`.
    points: Vec<Vec<BranchPoint>>,
}

pub fn assemble(bs: &BranchSystem, grid: &Arc<ChebGrid>) -> Result<TransferMatrices> {
    let n = grid.n();
    let m = bs.m();
    let mut l = DMatrix::<f64>::zeros(n, n);
    let mut l0 = DMatrix::<f64>::zeros(n, n);
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let mut row_pts = Vec::with_capacity(m);
        for j in 1..=m {
            let p = bs.eval_offsets(j, grid.nodes()[i], grid.node_lo()[i], grid.node_hi()[i])?;
            let sign = bs.map().branch_sign(j);
            let row = grid.interp_row(p.psi);
            for (k, r) in row.iter().enumerate() {
                l[(i, k)] += sign * p.dpsi * r;
                l0[(i, k)] += sign * r;
            }
            row_pts.push(p);
        }
        points.push(row_pts);
    }
    if l.iter().chain(l0.iter()).any(|v| !v.is_finite()) {
        return Err(Error::SpectralAnomaly("non-finite transfer matrix entry".into()));
    }
    Ok(TransferMatrices {
        grid: grid.clone(),
        bs: bs.clone(),
        l,
        l0,
        points,
    })
}

impl TransferMatrices {
    pub fn grid(&self) -> &Arc<ChebGrid> {
        &self.grid
    }
    pub fn branch_system(&self) -> &BranchSystem {
        &self.bs
    }
    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }
    pub fn l0(&self) -> &DMatrix<f64> {
        &self.l0
    }
    pub fn points(&self) -> &[Vec<BranchPoint>] {
        &self.points
    }

    pub fn apply_l(&self, f: &GridFunction) -> GridFunction {
        GridFunction::from_vector(self.grid.clone(), &self.l * f.values())
    }

    pub fn apply_l0(&self, f: &GridFunction) -> GridFunction {
        GridFunction::from_vector(self.grid.clone(), &self.l0 * f.values())
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumData {
    pub eigenvalues: Vec<Complex64>,
    pub residuals: Vec<f64>,
    /// `∫σ_k dx` for each eigenvector (max-norm scaled).
    pub masses: Vec<Complex64>,
    pub sigma0: GridFunction,
    /// `|μ_1|`.
    pub gap: f64,
}

/// Eigenpairs with residual below this and modulus above
/// [`TRUSTED_MODULUS`] take part in reported checks.
pub const TRUSTED_RESIDUAL: f64 = 1e-8;
pub const TRUSTED_MODULUS: f64 = 1e-6;

pub fn spectrum_and_density(tm: &TransferMatrices) -> Result<SpectrumData> {
    let pairs = eig(tm.l())?;
    let mu0 = pairs[0].value;
    if (mu0 - 1.0).norm() > 1e-6 {
        return Err(Error::SpectralAnomaly(format!("leading eigenvalue {mu0} is not 1")));
    }
    let gap = pairs.get(1).map_or(0.0, |p| p.value.norm());
    if gap >= 1.0 - 1e-8 {
        return Err(Error::SpectralAnomaly(format!("no spectral gap: |μ_1| = {gap}")));
    }
    let v = &pairs[0].vector;
    // rotate to minimize the imaginary part
    let s: Complex64 = v.iter().map(|c| c * c).sum();
    let rot = Complex64::from_polar(1.0, -0.5 * s.arg());
    let v: Vec<Complex64> = v.iter().map(|c| c * rot).collect();
    let vmax = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let imag = v.iter().map(|c| c.im.abs()).fold(0.0, f64::max) / vmax;
    if imag > 1e-9 {
        return Err(Error::SpectralAnomaly(format!("invariant density not real ({imag:e})")));
    }
    let grid = tm.grid().clone();
    let mut sigma = GridFunction::new(grid.clone(), v.iter().map(|c| c.re).collect());
    let mass = sigma.integrate();
    sigma = sigma.scale(1.0 / mass);
    // power refinement: the gap damps any remaining error
    for _ in 0..40 {
        let next = tm.apply_l(&sigma);
        sigma = next.scale(1.0 / next.integrate());
    }
    if sigma.as_slice().iter().any(|&x| !(x > 0.0)) {
        return Err(Error::SpectralAnomaly("invariant density changes sign".into()));
    }
    let masses = pairs
        .iter()
        .map(|p| {
            grid.quad_weights()
                .iter()
                .zip(p.vector.iter())
                .map(|(w, c)| c * *w)
                .sum()
        })
        .collect();
    Ok(SpectrumData {
        eigenvalues: pairs.iter().map(|p| p.value).collect(),
        residuals: pairs.iter().map(|p| p.residual).collect(),
        masses,
        sigma0: sigma,
        gap,
    })
}

/// `ρ(x) = σ₀(ϖx) ϖ'(x)`.
pub fn acim_density(sd: &SpectrumData, conj: Conjugacy, x: f64) -> Result<f64> {
    let dv = conj.varpi_prime(x)?;
    Ok(sd.sigma0.interpolate(conj.varpi(x)) * dv)
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaReport {
    pub mass_defect: f64,
    pub positivity_min: f64,
    pub mu0_defect: f64,
    pub gap: f64,
    pub sigma0_min: f64,
    pub sigma0_mass_defect: f64,
    pub zero_mass_defect: f64,
    pub h1_defect: f64,
    pub sigma0_endpoint_slope: f64,
    pub h0_defect: f64,
    pub intertwining_defect: f64,
}

/// Tolerances used by [`LemmaReport::failures`].
#[derive(Debug, Clone, Copy)]
pub struct LemmaTolerances {
    pub mass: f64,
    pub positivity: f64,
    pub zero_mass: f64,
    pub h1: f64,
    pub h0: f64,
    pub intertwining: f64,
}

impl Default for LemmaTolerances {
    fn default() -> Self {
        LemmaTolerances {
            mass: 1e-9,
            positivity: 1e-12,
            zero_mass: 1e-7,
            h1: 1e-7,
            h0: 1e-8,
            intertwining: 1e-8,
        }
    }
}

impl LemmaReport {
    /// Names of the checks that exceed their tolerance.
    pub fn failures(&self, tol: &LemmaTolerances) -> Vec<String> {
        let mut out = Vec::new();
        let mut check = |name: &str, ok: bool, value: f64| {
            if !ok {
                out.push(format!("{name} = {value:e}"));
            }
        };
        check("mass_defect", self.mass_defect <= tol.mass, self.mass_defect);
        check("positivity_min", self.positivity_min >= -tol.positivity, self.positivity_min);
        check("mu0_defect", self.mu0_defect <= 1e-9, self.mu0_defect);
        check("gap", self.gap < 1.0, self.gap);
        check("sigma0_min", self.sigma0_min > 0.0, self.sigma0_min);
        check("sigma0_mass_defect", self.sigma0_mass_defect <= 1e-12, self.sigma0_mass_defect);
        check("zero_mass_defect", self.zero_mass_defect <= tol.zero_mass, self.zero_mass_defect);
        check("h1_defect", self.h1_defect <= tol.h1, self.h1_defect);
        check(
            "sigma0_endpoint_slope",
            self.sigma0_endpoint_slope <= tol.h1,
            self.sigma0_endpoint_slope,
        );
        check("h0_defect", self.h0_defect <= tol.h0, self.h0_defect);
        check(
            "intertwining_defect",
            self.intertwining_defect <= tol.intertwining,
            self.intertwining_defect,
        );
        out
    }
}

fn endpoint_abs_max(f: &GridFunction) -> f64 {
    f.interpolate(-1.0).abs().max(f.interpolate(1.0).abs())
}

pub fn lemma_checks(tm: &TransferMatrices, sd: &SpectrumData) -> LemmaReport {
    let grid = tm.grid().clone();
    let n = grid.n();
    let cheb = |k: usize| grid.sample(|x| (k as f64 * x.clamp(-1.0, 1.0).acos()).cos());

    let mut mass_defect: f64 = 0.0;
    let mut intertwining_defect: f64 = 0.0;
    let d = grid.diff_matrix();
    for k in 0..=n / 2 {
        let phi = cheb(k);
        let lphi = tm.apply_l(&phi);
        mass_defect = mass_defect.max((lphi.integrate() - phi.integrate()).abs() / phi.max_abs());
        let dphi = d * phi.values();
        let lhs = d * (tm.l0() * phi.values());
        let rhs = tm.l() * &dphi;
        let scale = dphi.amax().max(1.0);
        intertwining_defect = intertwining_defect.max((lhs - rhs).amax() / scale);
    }

    let positives: [fn(f64) -> f64; 5] = [
        |_| 1.0,
        |x| 1.0 + x,
        |x| 1.0 - x,
        |x| x * x,
        |x| (1.0 - x * x).powi(2),
    ];
    let positivity_min = positives
        .iter()
        .map(|p| {
            let f = grid.sample(p);
            let lf = tm.apply_l(&f);
            lf.as_slice().iter().cloned().fold(f64::INFINITY, f64::min) / f.max_abs()
        })
        .fold(f64::INFINITY, f64::min);

    // H1: Φ'(±1) = 0  ⇒  (LΦ)'(±1) = 0
    let h1_tests: [fn(f64) -> f64; 3] =
        [|x| (1.0 - x * x).powi(2), |x| x * x * x - 3.0 * x, |x| 1.0 + x.powi(4) - 2.0 * x * x + 0.5 * x.powi(3) - 1.5 * x];
    let h1_defect = h1_tests
        .iter()
        .map(|p| {
            let f = grid.sample(p);
            endpoint_abs_max(&tm.apply_l(&f).differentiate())
        })
        .fold(0.0, f64::max);

    // H0: Φ(±1) = 0  ⇒  (L₀Φ)(±1) = 0
    let h0_tests: [fn(f64) -> f64; 3] =
        [|x| 1.0 - x * x, |x| x * (1.0 - x * x), |x| (1.0 - x * x) * (2.0 + x * x - x)];
    let h0_defect = h0_tests
        .iter()
        .map(|p| endpoint_abs_max(&tm.apply_l0(&grid.sample(p))))
        .fold(0.0, f64::max);

    let sigma0_endpoint_slope = endpoint_abs_max(&sd.sigma0.differentiate());

    let zero_mass_defect = sd
        .eigenvalues
        .iter()
        .zip(&sd.residuals)
        .zip(&sd.masses)
        .skip(1)
        .filter(|((mu, r), _)| mu.norm() > TRUSTED_MODULUS && **r < TRUSTED_RESIDUAL)
        .map(|(_, mass)| mass.norm())
        .fold(0.0, f64::max);

    LemmaReport {
        mass_defect,
        positivity_min,
        mu0_defect: (sd.eigenvalues[0] - 1.0).norm(),
        gap: sd.gap,
        sigma0_min: sd.sigma0.as_slice().iter().cloned().fold(f64::INFINITY, f64::min),
        sigma0_mass_defect: (sd.sigma0.integrate() - 1.0).abs(),
        zero_mass_defect,
        h1_defect,
        sigma0_endpoint_slope,
        h0_defect,
        intertwining_defect,
    }
}

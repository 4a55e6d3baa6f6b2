//! Full-branch Markov maps of `[-1, 1]`, perturbation fields and observables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::ChebPoly;

/// Number of uniform samples in the sign scan for critical points.
pub const CRIT_SCAN_SAMPLES: usize = 4096;
/// Tolerance on the critical-value defect `|f(c_j) - (-1)^{j+1}|`.
pub const CRITICAL_VALUE_TOL: f64 = 1e-10;

/// A polynomial interval map with `m` full monotone branches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticMap {
    coeffs: ChebPoly,
    m: usize,
    crit: Vec<f64>,
    endpoint_derivs: (f64, f64),
    crit_second_derivs: Vec<f64>,
    branch_signs: Vec<i8>,
}

impl AnalyticMap {
    /// Wraps a polynomial declared to have `m` branches; critical points are
    /// located numerically.
    pub fn from_poly(coeffs: ChebPoly, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidBranchCount(m));
        }
        let crit = critical_points(&coeffs, m)?;
        Ok(Self::with_critical_points(coeffs, m, crit))
    }

    fn with_critical_points(coeffs: ChebPoly, m: usize, crit: Vec<f64>) -> Self {
        let d1 = coeffs.derivative();
        let d2 = d1.derivative();
        let endpoint_derivs = (d1.eval(-1.0), d1.eval(1.0));
        let crit_second_derivs = crit[1..m].iter().map(|&c| d2.eval(c)).collect();
        let branch_signs = (1..=m).map(|j| if j % 2 == 1 { 1 } else { -1 }).collect();
        AnalyticMap {
            coeffs,
            m,
            crit,
            endpoint_derivs,
            crit_second_derivs,
            branch_signs,
        }
    }

    pub fn poly(&self) -> &ChebPoly {
        &self.coeffs
    }
    pub fn m(&self) -> usize {
        self.m
    }
    /// `c_0 = -1 < c_1 < ... < c_m = 1`.
    pub fn crit(&self) -> &[f64] {
        &self.crit
    }
    /// `(f'(-1), f'(1))`.
    pub fn endpoint_derivs(&self) -> (f64, f64) {
        self.endpoint_derivs
    }
    /// `f''(c_j)` for `j = 1..m-1`.
    pub fn crit_second_derivs(&self) -> &[f64] {
        &self.crit_second_derivs
    }
    /// `(-1)^{j+1}` for `j = 1..m`.
    pub fn branch_signs(&self) -> &[i8] {
        &self.branch_signs
    }
    pub fn branch_sign(&self, j: usize) -> f64 {
        self.branch_signs[j - 1] as f64
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.eval(x)
    }

    /// `f(c_j)` target: `(-1)^{j+1}`.
    pub fn critical_value(j: usize) -> f64 {
        if j % 2 == 1 {
            1.0
        } else {
            -1.0
        }
    }

    /// `sqrt(f'(-1))`.
    pub fn mu_minus(&self) -> f64 {
        self.endpoint_derivs.0.sqrt()
    }

    /// Orientation-signed multiplier at `+1`: `sgn(f'(1)) sqrt(|f'(1)|)`.
    ///
    /// Positive for odd `m`; negative for even `m`, where the last branch is
    /// decreasing.
    pub fn mu_plus(&self) -> f64 {
        let d = self.endpoint_derivs.1;
        d.signum() * d.abs().sqrt()
    }
}

/// Perturbation field `X`, with `delta f = X ∘ f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationField {
    coeffs: ChebPoly,
    vanishes_at_endpoints: bool,
}

impl PerturbationField {
    pub fn new(coeffs: ChebPoly) -> Self {
        let tol = 1e-12 * coeffs.l1_norm().max(1.0);
        let vanishes_at_endpoints = coeffs.eval(-1.0).abs() <= tol && coeffs.eval(1.0).abs() <= tol;
        PerturbationField {
            coeffs,
            vanishes_at_endpoints,
        }
    }
    pub fn poly(&self) -> &ChebPoly {
        &self.coeffs
    }
    pub fn vanishes_at_endpoints(&self) -> bool {
        self.vanishes_at_endpoints
    }
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.eval(x)
    }
}

/// Observable `A` (polynomial).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservablePoly {
    coeffs: ChebPoly,
}

impl ObservablePoly {
    pub fn new(coeffs: ChebPoly) -> Result<Self> {
        if !coeffs.is_finite() {
            return Err(Error::InvalidArgument("observable has non-finite coefficients".into()));
        }
        Ok(ObservablePoly { coeffs })
    }
    pub fn poly(&self) -> &ChebPoly {
        &self.coeffs
    }
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.eval(x)
    }
}

/// `f = (-1)^{m+1} T_m`, the canonical fixture with `m` branches.
pub fn chebyshev_markov_map(m: usize) -> Result<AnalyticMap> {
    if m < 2 {
        return Err(Error::InvalidBranchCount(m));
    }
    let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
    let p = ChebPoly::chebyshev_t(m).scale(sign);
    // extrema of T_m in increasing order
    let crit = (0..=m)
        .map(|k| {
            if k == 0 {
                -1.0
            } else if k == m {
                1.0
            } else {
                (std::f64::consts::PI * (m - k) as f64 / m as f64).cos()
            }
        })
        .collect();
    Ok(AnalyticMap::with_critical_points(p, m, crit))
}

/// `f_t = f + t (X ∘ f)`. Critical points and critical values are preserved.
pub fn perturbed_map(f: &AnalyticMap, x: &PerturbationField, t: f64) -> Result<AnalyticMap> {
    if !x.vanishes_at_endpoints() {
        return Err(Error::EndpointNonvanishing {
            left: x.eval(-1.0),
            right: x.eval(1.0),
        });
    }
    let comp = x.poly().compose(f.poly());
    let p = f.poly().add(&comp.scale(t));
    // 1 + t X'(f(x)) must stay positive, otherwise monotonicity is lost.
    let dx = x.poly().derivative();
    for k in 0..=CRIT_SCAN_SAMPLES {
        let s = -1.0 + 2.0 * k as f64 / CRIT_SCAN_SAMPLES as f64;
        let factor = 1.0 + t * dx.eval(f.eval(s));
        if factor <= 0.0 {
            return Err(Error::MarkovBroken(format!(
                "1 + t X'(f(x)) = {factor:e} <= 0 at x = {s}"
            )));
        }
    }
    let found = scan_interior_roots(&p.derivative()).len();
    if found != f.m() - 1 {
        return Err(Error::MarkovBroken(format!(
            "derivative has {found} interior zeros, expected {}",
            f.m() - 1
        )));
    }
    let g = AnalyticMap::with_critical_points(p, f.m(), f.crit().to_vec());
    let report = validate_markov(&g);
    if !report.pass {
        return Err(Error::MarkovBroken(report.failures.join("; ")));
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub m: usize,
    pub critical_value_defect: f64,
    pub interior_root_count: usize,
    pub min_abs_fprime_off_crit: f64,
    pub min_abs_fsecond_at_crit: f64,
    /// `f'(-1) - 1`.
    pub expansion_margin_left: f64,
    /// `|f'(1)| - 1`.
    pub expansion_margin_right: f64,
    pub pass: bool,
    pub failures: Vec<String>,
}

pub fn validate_markov(f: &AnalyticMap) -> ValidationReport {
    let mut failures = Vec::new();
    let m = f.m();
    if m < 2 {
        failures.push(format!("m = {m} < 2"));
    }
    let critical_value_defect = f
        .crit()
        .iter()
        .enumerate()
        .map(|(j, &c)| (f.eval(c) - AnalyticMap::critical_value(j)).abs())
        .fold(0.0, f64::max);
    if critical_value_defect > CRITICAL_VALUE_TOL {
        failures.push(format!("critical value defect {critical_value_defect:e}"));
    }
    let d1 = f.poly().derivative();
    let interior_root_count = scan_interior_roots(&d1).len();
    if interior_root_count + 1 != m {
        failures.push(format!(
            "f' has {interior_root_count} interior zeros, expected {}",
            m.saturating_sub(1)
        ));
    }
    let mut min_abs_fprime_off_crit = f64::INFINITY;
    for k in 0..=CRIT_SCAN_SAMPLES {
        let s = -1.0 + 2.0 * k as f64 / CRIT_SCAN_SAMPLES as f64;
        if f.crit()[1..m].iter().all(|&c| (s - c).abs() > 1e-2) {
            min_abs_fprime_off_crit = min_abs_fprime_off_crit.min(d1.eval(s).abs());
        }
    }
    let min_abs_fsecond_at_crit = f
        .crit_second_derivs()
        .iter()
        .map(|v| v.abs())
        .fold(f64::INFINITY, f64::min);
    if min_abs_fsecond_at_crit <= 1e-8 {
        failures.push(format!("f'' vanishes at a critical point ({min_abs_fsecond_at_crit:e})"));
    }
    let (dl, dr) = f.endpoint_derivs();
    let expansion_margin_left = dl - 1.0;
    let expansion_margin_right = dr.abs() - 1.0;
    if expansion_margin_left <= 0.0 {
        failures.push(format!("f'(-1) = {dl} is not > 1"));
    }
    let right_ok = if m % 2 == 1 { dr > 1.0 } else { dr < -1.0 };
    if m >= 2 && !right_ok {
        failures.push(format!("f'(1) = {dr} fails the expansion condition"));
    }
    ValidationReport {
        m,
        critical_value_defect,
        interior_root_count,
        min_abs_fprime_off_crit,
        min_abs_fsecond_at_crit,
        expansion_margin_left,
        expansion_margin_right,
        pass: failures.is_empty(),
        failures,
    }
}

/// Sign-change brackets of `p` on a uniform grid of `(-1, 1)`, polished.
fn scan_interior_roots(p: &ChebPoly) -> Vec<f64> {
    let dp = p.derivative();
    let h = 2.0 / CRIT_SCAN_SAMPLES as f64;
    let mut roots = Vec::new();
    let mut prev_x = -1.0 + 0.5 * h;
    let mut prev_v = p.eval(prev_x);
    if prev_v == 0.0 {
        roots.push(prev_x);
    }
    for k in 1..CRIT_SCAN_SAMPLES {
        let x = -1.0 + (k as f64 + 0.5) * h;
        let v = p.eval(x);
        if v == 0.0 {
            roots.push(x);
        } else if prev_v != 0.0 && (v < 0.0) != (prev_v < 0.0) {
            roots.push(polish_root(p, &dp, prev_x, x));
        }
        prev_x = x;
        prev_v = v;
    }
    roots
}

/// Newton on a bracket `[a, b]` with a sign change, bisection as fallback.
fn polish_root(p: &ChebPoly, dp: &ChebPoly, mut a: f64, mut b: f64) -> f64 {
    let fa_neg = p.eval(a) < 0.0;
    let mut x = 0.5 * (a + b);
    for _ in 0..200 {
        let v = p.eval(x);
        if v == 0.0 {
            break;
        }
        if (v < 0.0) == fa_neg {
            a = x;
        } else {
            b = x;
        }
        let d = dp.eval(x);
        let mut next = if d != 0.0 { x - v / d } else { f64::NAN };
        if !(next > a && next < b) {
            next = 0.5 * (a + b);
        }
        if (next - x).abs() <= 1e-17 + 1e-16 * x.abs() {
            x = next;
            break;
        }
        x = next;
    }
    x
}

/// Interior zeros of `f'`, framed by `-1` and `1`.
pub fn critical_points(f: &ChebPoly, m: usize) -> Result<Vec<f64>> {
    let roots = scan_interior_roots(&f.derivative());
    if roots.len() + 1 != m {
        return Err(Error::RootCountMismatch {
            expected: m.saturating_sub(1),
            found: roots.len(),
        });
    }
    let mut out = Vec::with_capacity(m + 1);
    out.push(-1.0);
    out.extend(roots);
    out.push(1.0);
    Ok(out)
}

/// Solves `f(y) = x` on the `j`-th branch interval `[c_{j-1}, c_j]`.
pub fn branch_inverse(f: &AnalyticMap, j: usize, x: f64) -> Result<f64> {
    if j == 0 || j > f.m() {
        return Err(Error::InvalidArgument(format!("branch index {j} out of 1..={}", f.m())));
    }
    let (lo, hi) = (f.crit()[j - 1], f.crit()[j]);
    let sign = f.branch_sign(j);
    let p = f.poly();
    let dp = p.derivative();
    // g(y) = sign * (f(y) - x) is increasing on the branch
    let (mut a, mut b) = (lo, hi);
    let ga = sign * (p.eval(a) - x);
    if ga >= 0.0 {
        return Ok(a);
    }
    if sign * (p.eval(b) - x) <= 0.0 {
        return Ok(b);
    }
    let mut y = lo + (hi - lo) * 0.5 * (1.0 + sign * x);
    for _ in 0..100 {
        let v = sign * (p.eval(y) - x);
        if v.abs() <= 1e-15 || b - a <= 4.0 * f64::EPSILON {
            return Ok(y);
        }
        if v < 0.0 {
            a = y;
        } else {
            b = y;
        }
        let d = sign * dp.eval(y);
        let mut next = if d > 0.0 { y - v / d } else { f64::NAN };
        if !(next > a && next < b) {
            next = 0.5 * (a + b);
        }
        if next == y {
            return Ok(y);
        }
        y = next;
    }
    Err(Error::NoConvergence(format!("branch_inverse j={j} x={x}")))
}

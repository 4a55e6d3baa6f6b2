//! Inverse branches `ψ_j` of `g = ϖ ∘ f ∘ ω`.
//!
//! `ψ_j(s)` is found by solving `f(x) = ω(s)` on the `j`-th branch interval,
//! written as a polynomial in the offset `h = x - c_k` from the branch end
//! `c_k` whose critical value is nearest to `ω(s)`. With exact Taylor
//! coefficients at `c_k` the root `h` is obtained to full relative precision,
//! so `1 ± ψ_j(s)` stay accurate next to the endpoints, where the transfer
//! operators meet the poles of `1/(z ± 1)`.
//!
//! The derivative uses `ψ_j'(s) = ω'(s) / (f'(x) ω'(ψ_j(s)))` with every
//! vanishing factor divided out analytically, so it is finite and accurate
//! at `s = ±1` as well.

use num_complex::Complex64;
use serde::Serialize;

use crate::conjugacy::Conjugacy;
use crate::error::{Error, Result};
use crate::map::AnalyticMap;
use crate::poly::horner;

/// `ψ_j(s)` together with its endpoint offsets and derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchPoint {
    pub psi: f64,
    /// `1 + ψ_j(s)`.
    pub lo: f64,
    /// `1 - ψ_j(s)`.
    pub hi: f64,
    /// `ψ_j'(s)`, signed by the branch orientation.
    pub dpsi: f64,
}

#[derive(Debug, Clone)]
pub struct BranchSystem {
    map: AnalyticMap,
    conj: Conjugacy,
    d: Vec<f64>,
    /// Taylor coefficients of `f` at each `c_k`; `t[1] = 0` at interior
    /// critical points.
    taylor: Vec<Vec<f64>>,
}

pub fn build_branch_system(f: &AnalyticMap, conj: Conjugacy) -> Result<BranchSystem> {
    let m = f.m();
    if m < 2 {
        return Err(Error::InvalidBranchCount(m));
    }
    let d = f.crit().iter().map(|&c| conj.varpi(c)).collect();
    let taylor = f
        .crit()
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let mut t = f.poly().taylor_at(c);
            t[0] = AnalyticMap::critical_value(k);
            if k > 0 && k < m {
                t[1] = 0.0;
            }
            t
        })
        .collect();
    Ok(BranchSystem {
        map: f.clone(),
        conj,
        d,
        taylor,
    })
}

impl BranchSystem {
    pub fn map(&self) -> &AnalyticMap {
        &self.map
    }
    pub fn conj(&self) -> Conjugacy {
        self.conj
    }
    pub fn m(&self) -> usize {
        self.map.m()
    }
    /// `d_j = ϖ(c_j)`.
    pub fn d(&self) -> &[f64] {
        &self.d
    }

    /// `g(y) = ϖ(f(ω(y)))`.
    pub fn g(&self, y: f64) -> f64 {
        self.conj.varpi(self.map.eval(self.conj.omega(y)).clamp(-1.0, 1.0))
    }

    pub fn psi(&self, j: usize, s: f64) -> Result<f64> {
        Ok(self.eval(j, s)?.psi)
    }

    /// `ψ_j'(s)`, valid on the closed interval `[-1, 1]`.
    pub fn psi_prime_safe(&self, j: usize, s: f64) -> Result<f64> {
        Ok(self.eval(j, s)?.dpsi)
    }

    pub fn eval(&self, j: usize, s: f64) -> Result<BranchPoint> {
        if !(-1.0..=1.0).contains(&s) {
            return Err(Error::InvalidArgument(format!("s = {s} outside [-1, 1]")));
        }
        self.eval_offsets(j, s, 1.0 + s, 1.0 - s)
    }

    /// Like [`BranchSystem::eval`] with caller-supplied offsets
    /// `ls = 1 + s`, `hs = 1 - s` (exact for grid nodes).
    pub fn eval_offsets(&self, j: usize, s: f64, ls: f64, hs: f64) -> Result<BranchPoint> {
        let m = self.m();
        if j == 0 || j > m {
            return Err(Error::InvalidArgument(format!("branch index {j} out of 1..={m}")));
        }
        let conj = self.conj;
        let v = if s >= 0.0 { 1.0 } else { -1.0 };
        let e = if v > 0.0 { conj.one_minus(hs) } else { conj.one_minus(ls) };
        let delta = -v * e;
        // branch end whose critical value is v
        let k = if AnalyticMap::critical_value(j) == v { j } else { j - 1 };
        let crit = self.map.crit();
        let ck = crit[k];
        let t = &self.taylor[k];
        let (a0, b0) = if k == j {
            (crit[j - 1] - ck, 0.0)
        } else {
            (0.0, crit[j] - ck)
        };
        let increasing = self.map.branch_sign(j) > 0.0;
        let h = solve_offset(t, delta, a0, b0, increasing)
            .ok_or_else(|| Error::NoConvergence(format!("ψ_{j}({s})")))?;

        let lo_x = (1.0 + ck) + h;
        let hi_x = (1.0 - ck) - h;
        let (lo, hi) = if lo_x < hi_x {
            let lo = conj.varpi_offset(lo_x);
            (lo, 2.0 - lo)
        } else {
            let hi = conj.varpi_offset(hi_x);
            (2.0 - hi, hi)
        };
        let psi = if lo < hi { lo - 1.0 } else { 1.0 - hi };

        let interior = k > 0 && k < m;
        let (root_ratio, denom_x) = if interior {
            // e = h² |P2(h)|, f'(x) = h Q2(h)
            let p2 = horner(&t[2..], h);
            let q2: Vec<f64> = t[2..].iter().enumerate().map(|(i, c)| (i + 2) as f64 * c).collect();
            let q2 = horner(&q2, h);
            (p2.abs().sqrt() / q2.abs(), (lo_x * hi_x).sqrt())
        } else {
            // e = |h| |P(h)|, and one of the x-offsets equals |h|
            let p = horner(&t[1..], h);
            let dp: Vec<f64> = t[1..].iter().enumerate().map(|(i, c)| (i + 1) as f64 * c).collect();
            let fp = horner(&dp, h);
            (p.abs().sqrt() / fp.abs(), (2.0 - h.abs()).sqrt())
        };
        let mag = conj.shape(s) * (2.0 - e).sqrt() * root_ratio / (conj.shape(psi) * denom_x);
        if !mag.is_finite() {
            return Err(Error::NoConvergence(format!("ψ_{j}'({s}) not finite")));
        }
        Ok(BranchPoint {
            psi,
            lo,
            hi,
            dpsi: self.map.branch_sign(j) * mag,
        })
    }

    /// Limiting slopes `|ψ_j'(-1)|`, `|ψ_j'(1)|` from the closed forms at
    /// the branch ends.
    pub fn endpoint_slopes(&self, j: usize) -> (f64, f64) {
        let at = |target: f64| {
            let k = if AnalyticMap::critical_value(j) == target { j } else { j - 1 };
            self.slope_at_end(k)
        };
        (at(-1.0), at(1.0))
    }

    fn slope_at_end(&self, k: usize) -> f64 {
        let m = self.m();
        let (dm, dp) = self.map.endpoint_derivs();
        if k == 0 {
            1.0 / dm.sqrt()
        } else if k == m {
            1.0 / dp.abs().sqrt()
        } else {
            let f2 = self.map.crit_second_derivs()[k - 1];
            (2.0 * self.conj.c() / f2.abs()).sqrt() / self.conj.omega_prime(self.d[k])
        }
    }
}

/// Solves `sum_{i>=1} t_i h^i = delta` for `h` in `[a, b]`, where the left
/// side is monotone (increasing iff `increasing`).
fn solve_offset(t: &[f64], delta: f64, a: f64, b: f64, increasing: bool) -> Option<f64> {
    if delta == 0.0 {
        return Some(0.0);
    }
    let (mut a, mut b) = (a, b);
    let dir = if b > 0.0 { 1.0 } else { -1.0 };
    let mut h = if t[1] != 0.0 {
        delta / t[1]
    } else {
        dir * (delta / t[2]).abs().sqrt()
    };
    let q = |h: f64| h * horner(&t[1..], h) - delta;
    let dq: Vec<f64> = t[1..].iter().enumerate().map(|(i, c)| (i + 1) as f64 * c).collect();
    let orient = if increasing { 1.0 } else { -1.0 };
    for _ in 0..200 {
        if !(h >= a && h <= b) || !h.is_finite() {
            h = 0.5 * (a + b);
        }
        let val = q(h);
        if val == 0.0 {
            return Some(h);
        }
        if orient * val < 0.0 {
            a = h;
        } else {
            b = h;
        }
        let d = horner(&dq, h);
        let mut next = h - val / d;
        if !(next >= a && next <= b) || !next.is_finite() {
            next = 0.5 * (a + b);
        }
        if (next - h).abs() <= 2.0 * f64::EPSILON * h.abs() || b - a <= f64::MIN_POSITIVE {
            return Some(next);
        }
        h = next;
    }
    None
}

/// Outcome of the sampled analyticity-domain check.
#[derive(Debug, Clone, Serialize)]
pub struct DomainReport {
    pub r: f64,
    pub samples: usize,
    /// Largest ellipse parameter of `ψ_j(z)` over all samples and branches.
    pub max_image_parameter: f64,
    pub margin: f64,
    pub newton_failures: usize,
    pub pass: bool,
}

/// Bernstein-ellipse parameter of `w`: `|w + sqrt(w² - 1)|` on the outer sheet.
pub fn ellipse_parameter(w: Complex64) -> f64 {
    let s = (w - 1.0).sqrt() * (w + 1.0).sqrt();
    let a = (w + s).norm();
    let b = (w - s).norm();
    a.max(b)
}

const DOMAIN_INTERP_N: usize = 64;

/// Samples `M` points on the boundary of `E_r` and checks that every
/// inverse branch maps them strictly inside `E_r`.
pub fn check_assumption_a(bs: &BranchSystem, r: f64, samples: usize) -> Result<DomainReport> {
    if !(r > 1.0) || samples < 64 {
        return Err(Error::InvalidArgument(format!(
            "need r > 1 and at least 64 samples (got r = {r}, M = {samples})"
        )));
    }
    let grid = crate::spectral::ChebGrid::new(DOMAIN_INTERP_N)?;
    let conj = bs.conj();
    let poly = bs.map().poly();
    let dpoly = poly.derivative();
    let mut worst: f64 = 1.0;
    let mut failures = 0;
    for j in 1..=bs.m() {
        let mut vals = Vec::with_capacity(grid.n());
        for k in 0..grid.n() {
            vals.push(bs.eval_offsets(j, grid.nodes()[k], grid.node_lo()[k], grid.node_hi()[k])?.psi);
        }
        let interp = crate::spectral::GridFunction::new(grid.clone(), vals);
        for i in 0..samples {
            let theta = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / samples as f64;
            let u = Complex64::from_polar(r, theta);
            let z = (u + u.inv()) * 0.5;
            let target = conj.omega_complex(z);
            let mut w = interp.interpolate_complex(z);
            let seed = w;
            // polish on f(ω(w)) = ω(z)
            let mut ok = false;
            for _ in 0..30 {
                let x = conj.omega_complex(w);
                let val = poly.eval_complex(x) - target;
                let der = dpoly.eval_complex(x) * omega_prime_complex(conj, w);
                if der.norm() == 0.0 {
                    break;
                }
                let step = val / der;
                w -= step;
                if !w.re.is_finite() || !w.im.is_finite() {
                    break;
                }
                if step.norm() <= 1e-14 * (1.0 + w.norm()) {
                    ok = true;
                    break;
                }
            }
            if !ok || (w - seed).norm() > 1e-3 {
                failures += 1;
                w = seed;
            }
            worst = worst.max(ellipse_parameter(w));
        }
    }
    let margin = r - worst;
    Ok(DomainReport {
        r,
        samples,
        max_image_parameter: worst,
        margin,
        newton_failures: failures,
        pass: margin > 0.0,
    })
}

fn omega_prime_complex(conj: Conjugacy, z: Complex64) -> Complex64 {
    match conj {
        Conjugacy::Sine => (z * std::f64::consts::FRAC_PI_2).cos() * std::f64::consts::FRAC_PI_2,
        Conjugacy::Quintic => (z * z - 1.0) * (z * z - 5.0) * (5.0 / 16.0),
    }
}

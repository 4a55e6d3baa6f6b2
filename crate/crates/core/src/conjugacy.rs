//! The coordinate change `ω`, its inverse `ϖ`, and the endpoint constants.
//!
//! Both variants satisfy `ω(-x) = -ω(x)`, `ω(±1) = ±1` and
//! `ω'(±1) = ω'''(±1) = 0`, so that `ω(±(1-ξ)) = ±(1 - Cξ² + Dξ⁴ + ...)`.
//!
//! Besides plain evaluators, this module exposes offset forms
//! (`one_minus`, `omega_diff`, `varpi_offset`) that keep full relative
//! precision next to `±1`, where the naive formulas cancel.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Conjugacy {
    /// `ω(x) = sin(πx/2)`, `ϖ(x) = (2/π) arcsin x`.
    #[default]
    Sine,
    /// `ω(x) = (25x - 10x³ + x⁵)/16`.
    Quintic,
}

/// Which evaluator to run in [`conjugacy_eval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConjugacyFn {
    Omega,
    OmegaPrime,
    Varpi,
    VarpiPrime,
}

/// `h(ζ) = (1 - ω(1-ζ)) / ζ²` for the quintic.
fn quintic_h(z: f64) -> f64 {
    1.25 - 0.3125 * z * z + z * z * z / 16.0
}

impl Conjugacy {
    /// `C` in `ω(1-ξ) = 1 - Cξ² + Dξ⁴ + ...`.
    pub fn c(&self) -> f64 {
        match self {
            Conjugacy::Sine => PI * PI / 8.0,
            Conjugacy::Quintic => 1.25,
        }
    }

    /// `D` in `ω(1-ξ) = 1 - Cξ² + Dξ⁴ + ...`.
    pub fn d(&self) -> f64 {
        match self {
            Conjugacy::Sine => PI.powi(4) / 384.0,
            Conjugacy::Quintic => 0.3125,
        }
    }

    pub fn omega(&self, y: f64) -> f64 {
        match self {
            Conjugacy::Sine => (FRAC_PI_2 * y).sin(),
            Conjugacy::Quintic => (25.0 * y - 10.0 * y.powi(3) + y.powi(5)) / 16.0,
        }
    }

    pub fn omega_complex(&self, z: Complex64) -> Complex64 {
        match self {
            Conjugacy::Sine => (z * FRAC_PI_2).sin(),
            Conjugacy::Quintic => (z * 25.0 - z.powi(3) * 10.0 + z.powi(5)) / 16.0,
        }
    }

    pub fn omega_prime(&self, y: f64) -> f64 {
        self.omega_prime_offsets(1.0 + y, 1.0 - y)
    }

    /// `ω'(y)` from the offsets `lo = 1 + y`, `hi = 1 - y` (relative
    /// accuracy is kept when either is tiny).
    pub fn omega_prime_offsets(&self, lo: f64, hi: f64) -> f64 {
        match self {
            Conjugacy::Sine => {
                // cos(πy/2) = sin(π(1-|y|)/2)
                FRAC_PI_2 * (FRAC_PI_2 * lo.min(hi)).sin()
            }
            Conjugacy::Quintic => {
                let y = if lo < hi { lo - 1.0 } else { 1.0 - hi };
                0.3125 * lo * hi * (5.0 - y * y)
            }
        }
    }

    /// `ω'''(y)`.
    pub fn omega_third(&self, y: f64) -> f64 {
        match self {
            Conjugacy::Sine => -(FRAC_PI_2.powi(3)) * (FRAC_PI_2 * y).cos(),
            Conjugacy::Quintic => (-60.0 + 60.0 * y * y) / 16.0,
        }
    }

    pub fn varpi(&self, x: f64) -> f64 {
        match self {
            Conjugacy::Sine => x.asin() / FRAC_PI_2,
            Conjugacy::Quintic => {
                let z = 1.0 - self.varpi_offset(1.0 - x.abs());
                z.copysign(x)
            }
        }
    }

    pub fn varpi_prime(&self, x: f64) -> Result<f64> {
        if x.abs() >= 1.0 {
            return Err(Error::SingularAtEndpoint(x));
        }
        Ok(match self {
            Conjugacy::Sine => 1.0 / (FRAC_PI_2 * ((1.0 - x) * (1.0 + x)).sqrt()),
            Conjugacy::Quintic => {
                let zeta = self.varpi_offset(1.0 - x.abs());
                1.0 / self.omega_prime_offsets(2.0 - zeta, zeta)
            }
        })
    }

    /// `1 - ω(1 - ζ)` for `ζ ∈ [0, 2]`.
    pub fn one_minus(&self, zeta: f64) -> f64 {
        match self {
            Conjugacy::Sine => {
                let s = (PI * zeta / 4.0).sin();
                2.0 * s * s
            }
            Conjugacy::Quintic => zeta * zeta * quintic_h(zeta),
        }
    }

    /// `ω(a + δ) - ω(a)`.
    pub fn omega_diff(&self, a: f64, delta: f64) -> f64 {
        match self {
            Conjugacy::Sine => {
                2.0 * (PI * (2.0 * a + delta) / 4.0).cos() * (PI * delta / 4.0).sin()
            }
            Conjugacy::Quintic => {
                let b = a + delta;
                let (a2, b2) = (a * a, b * b);
                let s2 = a2 + a * b + b2;
                let s4 = a2 * a2 + a2 * a * b + a2 * b2 + a * b * b2 + b2 * b2;
                delta * (25.0 - 10.0 * s2 + s4) / 16.0
            }
        }
    }

    /// Inverse of [`Conjugacy::one_minus`]: the `ζ ∈ [0, 2]` with
    /// `1 - ω(1 - ζ) = e`, for `e ∈ [0, 2]`.
    pub fn varpi_offset(&self, e: f64) -> f64 {
        let e = e.clamp(0.0, 2.0);
        if e > 1.0 {
            // reflect so the solve stays well conditioned
            return 2.0 - self.varpi_offset(2.0 - e);
        }
        match self {
            Conjugacy::Sine => (4.0 / PI) * (0.5 * e).sqrt().asin(),
            Conjugacy::Quintic => {
                // ζ sqrt(h(ζ)) = sqrt(e) is monotone and well conditioned at 0
                let target = e.sqrt();
                let (mut a, mut b) = (0.0_f64, 2.0_f64);
                let mut z = target / 1.25_f64.sqrt();
                for _ in 0..100 {
                    if !(z > a && z < b) {
                        z = 0.5 * (a + b);
                    }
                    let h = quintic_h(z);
                    let sh = h.sqrt();
                    let v = z * sh - target;
                    if v == 0.0 {
                        break;
                    }
                    if v < 0.0 {
                        a = z;
                    } else {
                        b = z;
                    }
                    let dh = -0.625 * z + 3.0 * z * z / 16.0;
                    let d = sh + z * dh / (2.0 * sh);
                    let next = z - v / d;
                    if (next - z).abs() <= 1e-16 * z.max(1e-300) {
                        z = next;
                        break;
                    }
                    z = next;
                }
                z
            }
        }
    }

    /// `Ω(y) = ω'(y) / sqrt(1 - ω(y)²)`, analytic and positive on `[-1, 1]`.
    pub fn shape(&self, y: f64) -> f64 {
        match self {
            Conjugacy::Sine => FRAC_PI_2,
            Conjugacy::Quintic => {
                0.3125 * (5.0 - y * y) / (quintic_h(1.0 - y) * quintic_h(1.0 + y)).sqrt()
            }
        }
    }
}

/// Evaluates one of `ω, ω', ϖ, ϖ'` at `s`.
pub fn conjugacy_eval(conj: Conjugacy, which: ConjugacyFn, s: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&s) {
        return Err(Error::InvalidArgument(format!("s = {s} outside [-1, 1]")));
    }
    match which {
        ConjugacyFn::Omega => Ok(conj.omega(s)),
        ConjugacyFn::OmegaPrime => Ok(conj.omega_prime(s)),
        ConjugacyFn::Varpi => Ok(conj.varpi(s)),
        ConjugacyFn::VarpiPrime => conj.varpi_prime(s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BOTH: [Conjugacy; 2] = [Conjugacy::Sine, Conjugacy::Quintic];

    #[test]
    fn spot_values() {
        let s = Conjugacy::Sine;
        assert_eq!(conjugacy_eval(s, ConjugacyFn::Omega, 0.0).unwrap(), 0.0);
        assert!((conjugacy_eval(s, ConjugacyFn::Omega, 1.0 / 3.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(conjugacy_eval(s, ConjugacyFn::OmegaPrime, 1.0).unwrap().abs() < 1e-15);
        assert_eq!(
            conjugacy_eval(s, ConjugacyFn::VarpiPrime, 1.0),
            Err(Error::SingularAtEndpoint(1.0))
        );
    }

    #[test]
    fn symmetry_and_endpoint_conditions() {
        for conj in BOTH {
            assert!((conj.omega(1.0) - 1.0).abs() < 1e-15);
            assert!((conj.omega(-1.0) + 1.0).abs() < 1e-15);
            assert_eq!(conj.omega_prime(1.0), 0.0);
            assert!(conj.omega_third(1.0).abs() < 1e-14);
            assert!(conj.omega_third(-1.0).abs() < 1e-14);
            for k in 0..=20 {
                let y = -1.0 + 0.1 * k as f64;
                assert!((conj.omega(-y) + conj.omega(y)).abs() < 1e-15);
                assert!((conj.varpi(conj.omega(y)) - y).abs() < 1e-7, "{conj:?} {y}");
            }
        }
    }

    #[test]
    fn refitted_endpoint_constants() {
        // quartic fit of C(ξ) = (1 - ω(1-ξ))/ξ² through plain ω samples,
        // extrapolated to ξ = 0
        for conj in BOTH {
            let cq = |x: f64| (1.0 - conj.omega(1.0 - x)) / (x * x);
            let h = 0.01;
            let xs: Vec<f64> = (1..=5).map(|k| h * k as f64).collect();
            let a = nalgebra::DMatrix::from_fn(5, 5, |i, j| xs[i].powi(j as i32));
            let b = nalgebra::DVector::from_iterator(5, xs.iter().map(|&x| cq(x)));
            let c = a.lu().solve(&b).unwrap();
            assert!((c[0] - conj.c()).abs() < 1e-10, "{conj:?} C fit {}", c[0]);
            assert!((-c[2] - conj.d()).abs() < 1e-3 * conj.d(), "{conj:?} D fit {}", -c[2]);
        }
        assert!((Conjugacy::Sine.c() - PI * PI / 8.0).abs() < 1e-15);
        assert!((Conjugacy::Sine.d() - PI.powi(4) / 384.0).abs() < 1e-15);
    }

    #[test]
    fn offsets_are_inverse() {
        for conj in BOTH {
            for &z in &[0.0, 1e-12, 1e-6, 0.01, 0.3, 1.0, 1.7, 2.0] {
                let e = conj.one_minus(z);
                let back = conj.varpi_offset(e);
                assert!((back - z).abs() <= 1e-14 * z.max(1e-3), "{conj:?} {z} {back}");
            }
        }
    }

    #[test]
    fn omega_diff_matches_direct() {
        for conj in BOTH {
            for &(a, d) in &[(0.3, 0.2), (-1.0, 0.5), (0.9, -0.4), (0.0, 1e-9)] {
                let direct = conj.omega(a + d) - conj.omega(a);
                assert!((conj.omega_diff(a, d) - direct).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn shape_factor_identity() {
        for conj in BOTH {
            for k in 1..20 {
                let y = -1.0 + 0.1 * k as f64;
                let w = conj.omega(y);
                let direct = conj.omega_prime(y) / (1.0 - w * w).sqrt();
                assert!((conj.shape(y) - direct).abs() < 1e-12, "{conj:?} {y}");
            }
            assert!((conj.shape(1.0) - (2.0 * conj.c()).sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn varpi_prime_is_reciprocal() {
        for conj in BOTH {
            for &x in &[-0.99, -0.5, 0.0, 0.4, 0.999] {
                let y = conj.varpi(x);
                let v = conj.varpi_prime(x).unwrap();
                assert!((v * conj.omega_prime(y) - 1.0).abs() < 1e-9, "{conj:?} {x}");
            }
        }
    }
}

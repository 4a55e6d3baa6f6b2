//! Padé approximants of a power series `Σ κ_n λⁿ`, used to probe where the
//! analytic continuation of a truncated series has its poles.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Condition estimates above this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// `P(λ)/Q(λ)` with `deg P = l`, `deg Q = m`, `Q(0) = 1`.
#[derive(Debug, Clone, Serialize)]
pub struct PadeApproximant {
    pub l: usize,
    pub m: usize,
    pub numerator: Vec<f64>,
    pub denominator: Vec<f64>,
    /// Roots of `Q`, sorted by modulus.
    pub poles: Vec<Complex64>,
    /// `P(λ*)/Q'(λ*)` at each pole.
    pub residues: Vec<Complex64>,
    pub condition: f64,
}

fn horner_c(c: &[f64], z: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

impl PadeApproximant {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        horner_c(&self.numerator, z) / horner_c(&self.denominator, z)
    }

    /// Taylor coefficients `0..=l+m` of `P/Q`.
    pub fn taylor(&self) -> Vec<f64> {
        let k = self.l + self.m + 1;
        let mut out = vec![0.0; k];
        for n in 0..k {
            let mut v = self.numerator.get(n).copied().unwrap_or(0.0);
            for j in 1..=n.min(self.m) {
                v -= self.denominator[j] * out[n - j];
            }
            out[n] = v;
        }
        out
    }

    pub fn nearest_pole(&self) -> Option<Complex64> {
        self.poles.first().copied()
    }
}

/// The `[l/m]` approximant from `coeffs[0..=l+m]`.
pub fn pade(coeffs: &[f64], l: usize, m: usize) -> Result<PadeApproximant> {
    if coeffs.len() < l + m + 1 {
        return Err(Error::InvalidArgument(format!(
            "[{l}/{m}] needs {} coefficients, got {}",
            l + m + 1,
            coeffs.len()
        )));
    }
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument("non-finite series coefficient".into()));
    }
    let c = |k: isize| if k < 0 { 0.0 } else { coeffs[k as usize] };
    let mut q = vec![1.0];
    let mut condition = 1.0;
    if m > 0 {
        let mut h = DMatrix::from_fn(m, m, |i, k| c(l as isize + i as isize + 1 - (k as isize + 1)));
        let rhs = DVector::from_fn(m, |i, _| -c((l + i + 1) as isize));
        let scales: Vec<f64> = (0..m)
            .map(|k| {
                let s = h.column(k).amax();
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        for (k, s) in scales.iter().enumerate() {
            h.column_mut(k).scale_mut(1.0 / s);
        }
        let sv = h.clone().singular_values();
        let smax = sv.max();
        let smin = sv.min();
        condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if !(condition <= MAX_CONDITION) {
            return Err(Error::IllConditioned(condition));
        }
        let sol = h
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::SingularMatrix("Padé Hankel system".into()))?;
        q.extend((0..m).map(|k| sol[k] / scales[k]));
    }
    let p: Vec<f64> = (0..=l)
        .map(|i| (0..=i.min(m)).map(|k| q[k] * c(i as isize - k as isize)).sum())
        .collect();
    let poles = polynomial_roots(&q);
    let dq: Vec<f64> = q.iter().enumerate().skip(1).map(|(k, v)| k as f64 * v).collect();
    let residues = poles
        .iter()
        .map(|&z| horner_c(&p, z) / horner_c(&dq, z))
        .collect();
    Ok(PadeApproximant {
        l,
        m,
        numerator: p,
        denominator: q,
        poles,
        residues,
        condition,
    })
}

/// Roots of `Σ c_k zᵏ` (ascending coefficients) by companion-matrix
/// eigenvalues, sorted by modulus. Negligible leading coefficients are
/// dropped first.
pub fn polynomial_roots(c: &[f64]) -> Vec<Complex64> {
    let scale = c.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let mut deg = c.len().saturating_sub(1);
    while deg > 0 && c[deg].abs() <= 1e-14 * scale {
        deg -= 1;
    }
    if deg == 0 {
        return Vec::new();
    }
    let lead = c[deg];
    let comp = DMatrix::from_fn(deg, deg, |i, j| {
        if i == 0 {
            -c[deg - 1 - j] / lead
        } else if j + 1 == i {
            1.0
        } else {
            0.0
        }
    });
    let mut roots: Vec<Complex64> = comp.complex_eigenvalues().iter().copied().collect();
    roots.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.im.total_cmp(&b.im)));
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_series_has_single_pole() {
        let c: Vec<f64> = (0..3).map(|n| 2f64.powi(n)).collect();
        let p = pade(&c, 1, 1).unwrap();
        assert!((p.poles[0] - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        assert!((p.residues[0] - Complex64::new(-0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn two_pole_rational_is_recovered() {
        // 1/(1-2λ) + 3/(1+3λ)
        let c: Vec<f64> = (0..9).map(|n| 2f64.powi(n) + 3.0 * (-3f64).powi(n)).collect();
        let p = pade(&c, 4, 2).unwrap();
        assert!((p.poles[0] - Complex64::new(-1.0 / 3.0, 0.0)).norm() < 1e-10);
        assert!((p.poles[1] - Complex64::new(0.5, 0.0)).norm() < 1e-10);
        for (a, b) in p.taylor().iter().zip(&c) {
            assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn zero_tail_is_ill_conditioned() {
        let mut c = vec![0.0; 17];
        c[0] = 3.0;
        assert!(matches!(pade(&c, 8, 8), Err(Error::IllConditioned(_))));
    }

    #[test]
    fn short_input_is_rejected() {
        assert!(matches!(pade(&[1.0, 2.0], 1, 1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn quadratic_roots() {
        // (z-1)(z-2) = 2 - 3z + z²
        let r = polynomial_roots(&[2.0, -3.0, 1.0]);
        assert!((r[0].re - 1.0).abs() < 1e-14 && (r[1].re - 2.0).abs() < 1e-14);
    }
}

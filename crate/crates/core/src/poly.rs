//! Polynomials stored by their Chebyshev coefficients.
//!
//! `p(x) = sum_k c[k] T_k(x)`. Maps, perturbation fields and observables all
//! live in this representation, so composition and differentiation stay exact.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebPoly {
    coeffs: Vec<f64>,
}

impl ChebPoly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = ChebPoly { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        ChebPoly { coeffs: vec![0.0] }
    }

    pub fn constant(c: f64) -> Self {
        ChebPoly { coeffs: vec![c] }
    }

    /// The identity polynomial `x`.
    pub fn identity() -> Self {
        ChebPoly::new(vec![0.0, 1.0])
    }

    /// `T_k`.
    pub fn chebyshev_t(k: usize) -> Self {
        let mut c = vec![0.0; k + 1];
        c[k] = 1.0;
        ChebPoly { coeffs: c }
    }

    /// Builds a polynomial from monomial coefficients `sum_k a[k] x^k`.
    pub fn from_monomial(a: &[f64]) -> Self {
        let mut acc = ChebPoly::zero();
        let x = ChebPoly::identity();
        for &ak in a.iter().rev() {
            acc = acc.mul(&x).add(&ChebPoly::constant(ak));
        }
        acc
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// Sum of absolute coefficients; bounds `|p|` on `[-1, 1]`.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    fn trim(&mut self) {
        while self.coeffs.len() > 1 && *self.coeffs.last().unwrap() == 0.0 {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(0.0);
        }
    }

    /// Clenshaw evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * x * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        x * b1 - b2 + self.coeffs[0]
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        let mut b1 = Complex64::new(0.0, 0.0);
        let mut b2 = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = z * b1 * 2.0 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        z * b1 - b2 + self.coeffs[0]
    }

    pub fn derivative(&self) -> ChebPoly {
        let n = self.coeffs.len();
        if n <= 1 {
            return ChebPoly::zero();
        }
        let mut d = vec![0.0; n + 1];
        for k in (1..n).rev() {
            d[k - 1] = d[k + 1] + 2.0 * k as f64 * self.coeffs[k];
        }
        d[0] *= 0.5;
        d.truncate(n - 1);
        ChebPoly::new(d)
    }

    pub fn add(&self, other: &ChebPoly) -> ChebPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let c = (0..n)
            .map(|k| {
                self.coeffs.get(k).copied().unwrap_or(0.0) + other.coeffs.get(k).copied().unwrap_or(0.0)
            })
            .collect();
        ChebPoly::new(c)
    }

    pub fn scale(&self, s: f64) -> ChebPoly {
        ChebPoly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Product via `T_i T_j = (T_{i+j} + T_{|i-j|}) / 2`.
    pub fn mul(&self, other: &ChebPoly) -> ChebPoly {
        let mut c = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                let h = 0.5 * a * b;
                c[i + j] += h;
                c[i.abs_diff(j)] += h;
            }
        }
        ChebPoly::new(c)
    }

    /// `self ∘ inner`, exact in the Chebyshev basis (Clenshaw over polynomials).
    pub fn compose(&self, inner: &ChebPoly) -> ChebPoly {
        let two_inner = inner.scale(2.0);
        let mut b1 = ChebPoly::zero();
        let mut b2 = ChebPoly::zero();
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = two_inner.mul(&b1).add(&b2.scale(-1.0)).add(&ChebPoly::constant(c));
            b2 = b1;
            b1 = b0;
        }
        inner
            .mul(&b1)
            .add(&b2.scale(-1.0))
            .add(&ChebPoly::constant(self.coeffs[0]))
    }

    /// Taylor coefficients at `r`: `p(r + h) = sum_i t[i] h^i` (exact, finite).
    pub fn taylor_at(&self, r: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.coeffs.len());
        let mut d = self.clone();
        let mut fact = 1.0;
        for i in 0..=self.degree() {
            if i > 0 {
                fact *= i as f64;
            }
            out.push(d.eval(r) / fact);
            d = d.derivative();
        }
        out
    }
}

/// Horner evaluation of `sum_i t[i] h^i`.
pub fn horner(t: &[f64], h: f64) -> f64 {
    t.iter().rev().fold(0.0, |acc, &c| acc * h + c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_matches_trig_definition() {
        for k in 0..12 {
            let t = ChebPoly::chebyshev_t(k);
            for &x in &[-1.0, -0.7, 0.0, 0.3, 1.0] {
                let exact = (k as f64 * f64::acos(x)).cos();
                assert!((t.eval(x) - exact).abs() < 1e-13, "T_{k}({x})");
            }
        }
    }

    #[test]
    fn derivative_of_t3() {
        // T3 = 4x^3 - 3x, T3' = 12x^2 - 3
        let d = ChebPoly::chebyshev_t(3).derivative();
        for &x in &[-1.0, -0.5, 0.2, 0.9] {
            assert!((d.eval(x) - (12.0 * x * x - 3.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn compose_chebyshev_semigroup() {
        // T_2 ∘ T_3 = T_6
        let c = ChebPoly::chebyshev_t(2).compose(&ChebPoly::chebyshev_t(3));
        let t6 = ChebPoly::chebyshev_t(6);
        for &x in &[-0.9, -0.1, 0.4, 0.99] {
            assert!((c.eval(x) - t6.eval(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn monomial_round_trip() {
        let p = ChebPoly::from_monomial(&[1.0, 0.0, -2.0]);
        assert!((p.coeffs()[0] - 0.0).abs() < 1e-15);
        assert!((p.coeffs()[2] + 1.0).abs() < 1e-15);
        let t = p.taylor_at(0.5);
        assert!((t[0] - 0.5).abs() < 1e-15);
        assert!((t[1] + 2.0).abs() < 1e-15);
        assert!((t[2] + 2.0).abs() < 1e-15);
        assert!((horner(&t, 0.25) - p.eval(0.75)).abs() < 1e-15);
    }
}

//! Chebyshev collocation on first-kind nodes.
//!
//! Nodes are `x_k = cos((2k+1)π/(2N))`, strictly inside `(-1, 1)`. Values at
//! `±1` are recovered by barycentric extrapolation. Quadrature is Fejér's
//! first rule, exact for polynomials of degree `N - 1`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const DEFAULT_N: usize = 48;
pub const MIN_N: usize = 8;
pub const MAX_N: usize = 256;

#[derive(Debug, Clone)]
pub struct ChebGrid {
    n: usize,
    nodes: Vec<f64>,
    /// `1 + x_k`, computed from the stored node.
    lo: Vec<f64>,
    /// `1 - x_k`.
    hi: Vec<f64>,
    theta: Vec<f64>,
    bary_weights: Vec<f64>,
    quad_weights: Vec<f64>,
    diff_matrix: DMatrix<f64>,
}

impl ChebGrid {
    pub fn new(n: usize) -> Result<Arc<Self>> {
        if !(MIN_N..=MAX_N).contains(&n) {
            return Err(Error::InvalidArgument(format!(
                "grid size {n} outside [{MIN_N}, {MAX_N}]"
            )));
        }
        let theta: Vec<f64> = (0..n)
            .map(|k| (2 * k + 1) as f64 * PI / (2 * n) as f64)
            .collect();
        // sorted ascending so index 0 is next to -1
        let theta: Vec<f64> = theta.into_iter().rev().collect();
        let nodes: Vec<f64> = theta.iter().map(|t| t.cos()).collect();
        let lo = nodes.iter().map(|x| 1.0 + x).collect();
        let hi = nodes.iter().map(|x| 1.0 - x).collect();
        let bary_weights: Vec<f64> = theta
            .iter()
            .enumerate()
            .map(|(k, t)| if k % 2 == 0 { t.sin() } else { -t.sin() })
            .collect();
        let quad_weights = theta
            .iter()
            .map(|&t| {
                let s: f64 = (1..=n / 2)
                    .map(|j| (2.0 * j as f64 * t).cos() / (4.0 * (j * j) as f64 - 1.0))
                    .sum();
                2.0 / n as f64 * (1.0 - 2.0 * s)
            })
            .collect();
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in 0..n {
                if i != j {
                    let v = bary_weights[j] / bary_weights[i] / (nodes[i] - nodes[j]);
                    d[(i, j)] = v;
                    row_sum += v;
                }
            }
            d[(i, i)] = -row_sum;
        }
        Ok(Arc::new(ChebGrid {
            n,
            nodes,
            lo,
            hi,
            theta,
            bary_weights,
            quad_weights,
            diff_matrix: d,
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn node_lo(&self) -> &[f64] {
        &self.lo
    }
    pub fn node_hi(&self) -> &[f64] {
        &self.hi
    }
    pub fn bary_weights(&self) -> &[f64] {
        &self.bary_weights
    }
    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }
    pub fn diff_matrix(&self) -> &DMatrix<f64> {
        &self.diff_matrix
    }

    /// Row `r` with `p(t) = r · values` for every polynomial of degree `< N`.
    pub fn interp_row(&self, t: f64) -> Vec<f64> {
        let mut row = vec![0.0; self.n];
        if let Some(k) = self.nodes.iter().position(|&x| x == t) {
            row[k] = 1.0;
            return row;
        }
        let mut denom = 0.0;
        for k in 0..self.n {
            let v = self.bary_weights[k] / (t - self.nodes[k]);
            row[k] = v;
            denom += v;
        }
        for v in row.iter_mut() {
            *v /= denom;
        }
        row
    }

    pub fn sample<F: Fn(f64) -> f64>(self: &Arc<Self>, f: F) -> GridFunction {
        GridFunction::new(self.clone(), self.nodes.iter().map(|&x| f(x)).collect())
    }

    /// Chebyshev coefficients `c_k` with `p = sum_k c_k T_k`.
    pub fn coefficients(&self, values: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|k| {
                let s: f64 = values
                    .iter()
                    .zip(&self.theta)
                    .map(|(v, t)| v * (k as f64 * t).cos())
                    .sum();
                if k == 0 {
                    s / n as f64
                } else {
                    2.0 * s / n as f64
                }
            })
            .collect()
    }
}

/// Values of a function at the nodes of a grid.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<ChebGrid>,
    values: DVector<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<ChebGrid>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.n(), "value count must match the grid");
        GridFunction {
            grid,
            values: DVector::from_vec(values),
        }
    }

    pub fn from_vector(grid: Arc<ChebGrid>, values: DVector<f64>) -> Self {
        assert_eq!(values.len(), grid.n(), "value count must match the grid");
        GridFunction { grid, values }
    }

    pub fn zeros(grid: Arc<ChebGrid>) -> Self {
        let n = grid.n();
        GridFunction::from_vector(grid, DVector::zeros(n))
    }

    pub fn grid(&self) -> &Arc<ChebGrid> {
        &self.grid
    }
    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }
    pub fn as_slice(&self) -> &[f64] {
        self.values.as_slice()
    }
    pub fn max_abs(&self) -> f64 {
        self.values.amax()
    }
    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map_values<F: Fn(f64) -> f64>(&self, f: F) -> GridFunction {
        GridFunction::from_vector(self.grid.clone(), self.values.map(f))
    }

    pub fn scale(&self, s: f64) -> GridFunction {
        GridFunction::from_vector(self.grid.clone(), &self.values * s)
    }

    pub fn add(&self, other: &GridFunction) -> GridFunction {
        GridFunction::from_vector(self.grid.clone(), &self.values + &other.values)
    }

    pub fn sub(&self, other: &GridFunction) -> GridFunction {
        GridFunction::from_vector(self.grid.clone(), &self.values - &other.values)
    }

    /// Barycentric interpolation (extrapolation at `±1` included).
    pub fn interpolate(&self, t: f64) -> f64 {
        let row = self.grid.interp_row(t);
        row.iter().zip(self.values.iter()).map(|(r, v)| r * v).sum()
    }

    pub fn interpolate_complex(&self, z: Complex64) -> Complex64 {
        let g = &self.grid;
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = Complex64::new(0.0, 0.0);
        for k in 0..g.n() {
            let d = z - g.nodes()[k];
            if d.norm() == 0.0 {
                return Complex64::new(self.values[k], 0.0);
            }
            let w = Complex64::new(g.bary_weights()[k], 0.0) / d;
            num += w * self.values[k];
            den += w;
        }
        num / den
    }

    pub fn differentiate(&self) -> GridFunction {
        GridFunction::from_vector(self.grid.clone(), self.grid.diff_matrix() * &self.values)
    }

    /// Fejér quadrature of `∫_{-1}^{1}`.
    pub fn integrate(&self) -> f64 {
        self.grid
            .quad_weights()
            .iter()
            .zip(self.values.iter())
            .map(|(w, v)| w * v)
            .sum()
    }

    /// Quadrature of the product with another grid function.
    pub fn dot(&self, other: &GridFunction) -> f64 {
        self.grid
            .quad_weights()
            .iter()
            .zip(self.values.iter().zip(other.values.iter()))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    /// `F` with `F' = self` and `F(-1) = 0`, via Chebyshev coefficients.
    pub fn antiderivative(&self) -> GridFunction {
        let c = self.grid.coefficients(self.values.as_slice());
        let n = c.len();
        // ∫T_0 = T_1, ∫T_1 = T_2/4, ∫T_k = T_{k+1}/(2(k+1)) - T_{k-1}/(2(k-1))
        let mut b = vec![0.0; n + 1];
        for (k, &ck) in c.iter().enumerate() {
            match k {
                0 => b[1] += ck,
                1 => b[2] += 0.25 * ck,
                _ => {
                    b[k + 1] += ck / (2.0 * (k + 1) as f64);
                    b[k - 1] -= ck / (2.0 * (k - 1) as f64);
                }
            }
        }
        let at_minus_one: f64 = b
            .iter()
            .enumerate()
            .map(|(k, v)| if k % 2 == 0 { *v } else { -*v })
            .sum();
        b[0] -= at_minus_one;
        let p = crate::poly::ChebPoly::new(b);
        self.grid.sample(|x| p.eval(x))
    }
}

/// One eigenpair; the vector has unit max-norm.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: Complex64,
    pub vector: DVector<Complex64>,
    pub residual: f64,
}

/// Full eigen-decomposition of a dense real matrix, sorted by descending
/// modulus. Eigenvalues come from a real Schur form; eigenvectors from
/// inverse iteration at each eigenvalue.
pub fn eig(matrix: &DMatrix<f64>) -> Result<Vec<EigenPair>> {
    let n = matrix.nrows();
    if n != matrix.ncols() {
        return Err(Error::InvalidArgument("eig needs a square matrix".into()));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("eig input has non-finite entries".into()));
    }
    let schur = nalgebra::linalg::Schur::try_new(matrix.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::NoConvergence("Schur iteration".into()))?;
    let mut values: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    // keep each conjugate pair with the positive imaginary part first
    for v in values.iter_mut() {
        if v.im.abs() <= 1e-14 * v.norm().max(1e-300) {
            v.im = 0.0;
        }
    }
    values.sort_by(|a, b| {
        b.norm()
            .partial_cmp(&a.norm())
            .unwrap()
            .then(b.re.partial_cmp(&a.re).unwrap())
            .then(b.im.partial_cmp(&a.im).unwrap())
    });

    let norm = matrix.amax().max(f64::MIN_POSITIVE) * n as f64;
    let cm: DMatrix<Complex64> = matrix.map(|v| Complex64::new(v, 0.0));
    let mut pairs: Vec<EigenPair> = Vec::with_capacity(n);
    for (idx, &mu) in values.iter().enumerate() {
        if mu.im < 0.0 {
            if let Some(prev) = pairs.last() {
                if (values[idx - 1].conj() - mu).norm() <= 1e-12 * norm {
                    let vector = prev.vector.map(|c| c.conj());
                    let residual = prev.residual;
                    pairs.push(EigenPair {
                        value: prev.value.conj(),
                        vector,
                        residual,
                    });
                    continue;
                }
            }
        }
        let mut pair = inverse_iteration(&cm, mu, norm, idx)?;
        if mu.im == 0.0 {
            pair.value.im = 0.0;
        }
        pairs.push(pair);
    }
    Ok(pairs)
}

fn inverse_iteration(
    cm: &DMatrix<Complex64>,
    mu: Complex64,
    norm: f64,
    seed: usize,
) -> Result<EigenPair> {
    let n = cm.nrows();
    let mut shifted = cm.clone();
    let eps_shift = Complex64::new(norm * 1e-14, norm * 1e-15);
    for i in 0..n {
        shifted[(i, i)] -= mu + eps_shift;
    }
    let lu = shifted.lu();
    // deterministic, generic start vector
    let mut v = DVector::from_fn(n, |i, _| {
        let t = (i as f64 + 1.0) * (0.618_033_988_75 + 0.1 * seed as f64);
        Complex64::new(1.0 + 0.5 * (t * 7.3).sin(), 0.25 * (t * 3.1).cos())
    });
    let mut best: Option<(f64, Complex64, DVector<Complex64>)> = None;
    for _ in 0..6 {
        let w = match lu.solve(&v) {
            Some(w) => w,
            None => break,
        };
        let scale = w.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if !(scale.is_finite() && scale > 0.0) {
            break;
        }
        v = w / Complex64::new(scale, 0.0);
        let av = cm * &v;
        // Rayleigh quotient refines the Schur value for non-normal matrices
        let rq = v.dotc(&av) / v.dotc(&v);
        for (value, cand) in [(mu, false), (rq, true)] {
            let r = &av - &v * value;
            let res = r.iter().map(|c| c.norm()).fold(0.0, f64::max);
            if best.as_ref().map_or(true, |(b, _, _)| res < *b) {
                best = Some((res, if cand { rq } else { mu }, v.clone()));
            }
        }
    }
    let (residual, value, mut vector) =
        best.ok_or_else(|| Error::NoConvergence(format!("inverse iteration at {mu}")))?;
    // normalize: largest entry real positive
    let (imax, _) = vector
        .iter()
        .enumerate()
        .fold((0, 0.0), |acc, (i, c)| if c.norm() > acc.1 { (i, c.norm()) } else { acc });
    let phase = vector[imax] / vector[imax].norm();
    vector /= phase;
    Ok(EigenPair {
        value,
        vector,
        residual,
    })
}

/// Solves `M x = rhs` by LU with partial pivoting.
pub fn solve(matrix: &DMatrix<f64>, rhs: &GridFunction) -> Result<GridFunction> {
    let n = matrix.nrows();
    if n != rhs.grid().n() || n != matrix.ncols() {
        return Err(Error::InvalidArgument("dimension mismatch in solve".into()));
    }
    let lu = matrix.clone().lu();
    let u = lu.u();
    let mnorm = matrix.amax().max(f64::MIN_POSITIVE);
    let min_pivot = u.diagonal().iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    if min_pivot <= 1e-13 * mnorm * n as f64 {
        return Err(Error::SingularMatrix(format!("pivot {min_pivot:e}")));
    }
    let x = lu
        .solve(rhs.values())
        .ok_or_else(|| Error::SingularMatrix("zero pivot".into()))?;
    let r = matrix * &x - rhs.values();
    let bound = 1e-10 * (mnorm * n as f64 * x.amax() + rhs.max_abs());
    if !(r.amax() <= bound) {
        return Err(Error::SingularMatrix(format!(
            "residual {:e} above bound {bound:e}",
            r.amax()
        )));
    }
    Ok(GridFunction::from_vector(rhs.grid().clone(), x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_and_weights() {
        for &n in &[8, 17, 48, 64] {
            let g = ChebGrid::new(n).unwrap();
            assert!(g.nodes().iter().all(|&x| x > -1.0 && x < 1.0));
            assert!(g.nodes().windows(2).all(|w| w[0] < w[1]));
            let s: f64 = g.quad_weights().iter().sum();
            assert!((s - 2.0).abs() < 1e-13);
            for d in 0..n {
                let f = g.sample(|x| x.powi(d as i32));
                let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d + 1) as f64 };
                assert!((f.integrate() - exact).abs() < 1e-12, "n={n} d={d}");
            }
        }
        assert!(ChebGrid::new(4).is_err());
        assert!(ChebGrid::new(300).is_err());
    }

    #[test]
    fn interpolation_examples() {
        let g = ChebGrid::new(16).unwrap();
        let f = g.sample(|x| x * x);
        assert!((f.interpolate(0.3) - 0.09).abs() < 1e-13);
        let x5 = g.nodes()[5];
        assert_eq!(f.interpolate(x5), f.as_slice()[5]);
        let t5 = g.sample(|x| crate::poly::ChebPoly::chebyshev_t(5).eval(x));
        assert!((t5.interpolate(1.0) - 1.0).abs() < 1e-12);
        assert!((t5.interpolate(-1.0) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn calculus_examples() {
        let g = ChebGrid::new(24).unwrap();
        assert!(g.sample(|x| x.powi(3)).integrate().abs() < 1e-15);
        assert!((g.sample(|x| x * x).integrate() - 2.0 / 3.0).abs() < 1e-13);
        let f = g.sample(|x| 2.0 * x).antiderivative();
        assert!(f.interpolate(1.0).abs() < 1e-11);
        assert!((f.interpolate(0.5) - (0.25 - 1.0)).abs() < 1e-12);
        let d = g.sample(|x| x.powi(5)).differentiate();
        for (k, &x) in g.nodes().iter().enumerate() {
            assert!((d.as_slice()[k] - 5.0 * x.powi(4)).abs() < 1e-11);
        }
    }

    #[test]
    fn antiderivative_inverts_derivative() {
        let g = ChebGrid::new(32).unwrap();
        let p = crate::poly::ChebPoly::new(vec![0.3, -1.0, 0.5, 0.25, -0.125, 0.7]);
        let f = g.sample(|x| p.eval(x));
        let back = f.differentiate().antiderivative();
        let p0 = p.eval(-1.0);
        for k in 0..g.n() {
            assert!((back.as_slice()[k] - (f.as_slice()[k] - p0)).abs() < 1e-10);
        }
    }

    #[test]
    fn eig_small_examples() {
        let id = DMatrix::<f64>::identity(5, 5);
        for p in eig(&id).unwrap() {
            assert!((p.value - 1.0).norm() < 1e-14);
        }
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0 / 16.0, 1.0, 0.25]));
        let vals: Vec<f64> = eig(&d).unwrap().iter().map(|p| p.value.re).collect();
        assert_eq!(vals, vec![1.0, 0.25, 1.0 / 16.0]);
    }

    #[test]
    fn eig_complex_pairs_and_trace() {
        // rotation-scaling block plus a real eigenvalue
        let m = DMatrix::from_row_slice(3, 3, &[0.5, -0.8, 0.1, 0.8, 0.5, 0.0, 0.0, 0.2, 0.3]);
        let pairs = eig(&m).unwrap();
        let trace: Complex64 = pairs.iter().map(|p| p.value).sum();
        assert!((trace.re - 1.3).abs() < 1e-12 && trace.im.abs() < 1e-12);
        assert!((pairs[0].value.conj() - pairs[1].value).norm() < 1e-12);
        assert!(pairs[0].value.im > 0.0);
        let cm = m.map(|v| Complex64::new(v, 0.0));
        for p in &pairs {
            let r = &cm * &p.vector - &p.vector * p.value;
            assert!(r.iter().map(|c| c.norm()).fold(0.0, f64::max) < 1e-9 * 3.0);
        }
    }

    #[test]
    fn solve_examples() {
        let g = ChebGrid::new(8).unwrap();
        let rhs = g.sample(|x| x + 2.0);
        let x = solve(&DMatrix::identity(8, 8), &rhs).unwrap();
        assert_eq!(x.as_slice(), rhs.as_slice());
        let sing = DMatrix::<f64>::zeros(8, 8);
        assert!(matches!(solve(&sing, &rhs), Err(Error::SingularMatrix(_))));
    }
}

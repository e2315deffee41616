//! Small dense helpers: inner products, ball projection, and the top singular
//! value by power iteration.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::rng;

pub fn dot(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.dot(&b)
}

pub fn norm2_sq(a: ArrayView1<f64>) -> f64 {
    a.dot(&a)
}

pub fn norm1(a: ArrayView1<f64>) -> f64 {
    a.iter().map(|v| v.abs()).sum()
}

pub fn dist2(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Euclidean projection onto `{w : ‖w‖ ≤ radius}`.
pub fn project_l2_ball(w: &mut Array1<f64>, radius: f64) {
    let norm = norm2_sq(w.view()).sqrt();
    if norm > radius {
        w.mapv_inplace(|v| v * (radius / norm));
    }
}

/// Outcome of a power iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    pub sigma_max: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub const POWER_TOLERANCE: f64 = 1e-10;
pub const POWER_MAX_ITERS: usize = 10_000;

/// Largest singular value of `x` via power iteration on `XᵀX`.
///
/// Stops once the eigen-residual `‖Av − θv‖` falls below `tol·θ`. The start
/// vector is Gaussian, drawn from `seed`.
pub fn sigma_max(x: ArrayView2<f64>, tol: f64, max_iters: usize, seed: u64) -> SpectralEstimate {
    let gram = x.t().dot(&x);
    let lambda = top_eigen_psd(gram.view(), tol, max_iters, seed);
    SpectralEstimate {
        sigma_max: lambda.sigma_max.max(0.0).sqrt(),
        ..lambda
    }
}

// Returns the top eigenvalue in the `sigma_max` slot.
fn top_eigen_psd(a: ArrayView2<f64>, tol: f64, max_iters: usize, seed: u64) -> SpectralEstimate {
    let d = a.nrows();
    let mut rng = rng::seeded(seed);
    let mut v: Array1<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let norm = norm2_sq(v.view()).sqrt();
    if norm == 0.0 || d == 0 {
        return SpectralEstimate {
            sigma_max: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    v /= norm;

    let mut theta = 0.0;
    for it in 1..=max_iters {
        let av = a.dot(&v);
        theta = dot(v.view(), av.view());
        let av_norm = norm2_sq(av.view()).sqrt();
        if av_norm == 0.0 {
            return SpectralEstimate {
                sigma_max: 0.0,
                iterations: it,
                converged: true,
            };
        }
        let residual = av.iter().zip(v.iter()).map(|(p, q)| (p - theta * q).powi(2)).sum::<f64>().sqrt();
        v = av / av_norm;
        if residual <= tol * theta.abs() {
            let av = a.dot(&v);
            return SpectralEstimate {
                sigma_max: dot(v.view(), av.view()),
                iterations: it,
                converged: true,
            };
        }
    }
    SpectralEstimate {
        sigma_max: theta,
        iterations: max_iters,
        converged: false,
    }
}

/// Stacks rows into a matrix.
pub fn stack_rows(rows: &[Array1<f64>], d: usize) -> Array2<f64> {
    let mut out = Array2::zeros((rows.len(), d));
    for (i, r) in rows.iter().enumerate() {
        out.row_mut(i).assign(r);
    }
    out
}

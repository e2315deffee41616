//! Reference computations written independently of the library: plain loops
//! over `Vec<f64>`, a dense SVD from nalgebra, and direct enumeration.
#![allow(dead_code)]

use nalgebra::DMatrix;
use ndarray::{Array2, ArrayView1};

pub fn to_rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `n·∑‖g_i‖² / ∑_i∑_j⟨g_i, g_j⟩` with the denominator as an explicit double sum.
pub fn pairwise_bs(grads: &[Vec<f64>]) -> f64 {
    let n = grads.len() as f64;
    let num: f64 = grads.iter().map(|g| dot(g, g)).sum();
    let mut den = 0.0;
    for a in grads {
        for b in grads {
            den += dot(a, b);
        }
    }
    n * num / den
}

/// `(M², G)` by definition: mean squared norm and squared norm of the mean.
pub fn m2_and_g(grads: &[Vec<f64>]) -> (f64, f64) {
    let n = grads.len() as f64;
    let d = grads[0].len();
    let m2 = grads.iter().map(|g| dot(g, g)).sum::<f64>() / n;
    let mean: Vec<f64> = (0..d).map(|c| grads.iter().map(|g| g[c]).sum::<f64>() / n).collect();
    (m2, dot(&mean, &mean))
}

pub fn logistic_gradient(x: &[f64], y: f64, w: &[f64]) -> Vec<f64> {
    let margin = y * dot(x, w);
    let coef = -y / (1.0 + margin.exp());
    x.iter().map(|v| coef * v).collect()
}

pub fn least_squares_gradient(x: &[f64], y: f64, w: &[f64]) -> Vec<f64> {
    let r = dot(x, w) - y;
    x.iter().map(|v| r * v).collect()
}

/// Central finite differences of `f` at `w`.
pub fn finite_difference(f: impl Fn(&[f64]) -> f64, w: &[f64], h: f64) -> Vec<f64> {
    (0..w.len())
        .map(|c| {
            let mut up = w.to_vec();
            let mut down = w.to_vec();
            up[c] += h;
            down[c] -= h;
            (f(&up) - f(&down)) / (2.0 * h)
        })
        .collect()
}

/// Largest singular value from a dense SVD.
pub fn sigma_max_dense(x: &Array2<f64>) -> f64 {
    let m = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[[i, j]]);
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Eigenvalues of a symmetric matrix from nalgebra.
pub fn symmetric_eigenvalues_dense(a: &Array2<f64>) -> Vec<f64> {
    let m = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]]);
    m.symmetric_eigen().eigenvalues.iter().copied().collect()
}

/// `E‖w − γ∑_{ℓ}g_{s_ℓ} − w*‖²` by recursive enumeration of all index tuples.
pub fn enumerate_one_step(grads: &[Vec<f64>], w: &[f64], w_star: &[f64], gamma: f64, batch: usize) -> f64 {
    fn recurse(grads: &[Vec<f64>], acc: &mut Vec<f64>, depth: usize, w: &[f64], w_star: &[f64], gamma: f64, total: &mut f64) {
        if depth == 0 {
            *total += w
                .iter()
                .zip(acc.iter())
                .zip(w_star)
                .map(|((a, s), o)| (a - gamma * s - o).powi(2))
                .sum::<f64>();
            return;
        }
        for g in grads {
            for (a, v) in acc.iter_mut().zip(g) {
                *a += v;
            }
            recurse(grads, acc, depth - 1, w, w_star, gamma, total);
            for (a, v) in acc.iter_mut().zip(g) {
                *a -= v;
            }
        }
    }
    let mut acc = vec![0.0; w.len()];
    let mut total = 0.0;
    recurse(grads, &mut acc, batch, w, w_star, gamma, &mut total);
    total / (grads.len() as f64).powi(batch as i32)
}

#[derive(Debug, Clone, Copy)]
pub enum Mechanism {
    Dropout(f64),
    Sgld(f64),
    Quantize,
}

/// `B^DIM` from per-example first and second moments of the surrogate:
/// `n∑E‖g̃_i‖² / (∑E‖g̃_i‖² + ‖∑E g̃_i‖² − ∑‖E g̃_i‖²)`.
pub fn dim_bound_from_moments(grads: &[Vec<f64>], mech: Mechanism) -> f64 {
    let n = grads.len() as f64;
    let d = grads[0].len();
    let mut second = 0.0;
    let mut mean_norms = 0.0;
    let mut mean_sum = vec![0.0; d];
    for g in grads {
        let sq = dot(g, g);
        let l1: f64 = g.iter().map(|v| v.abs()).sum();
        let (scale, e2) = match mech {
            Mechanism::Dropout(p) => (1.0 - p, (1.0 - p) * sq),
            Mechanism::Sgld(s2) => (1.0, sq + d as f64 * s2),
            Mechanism::Quantize => (1.0, sq.sqrt() * l1),
        };
        second += e2;
        mean_norms += scale * scale * sq;
        for (m, v) in mean_sum.iter_mut().zip(g) {
            *m += scale * v;
        }
    }
    n * second / (second + dot(&mean_sum, &mean_sum) - mean_norms)
}

/// Pearson χ² statistic of `counts` against the uniform distribution.
pub fn chi2_uniform(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum()
}

/// 0.999 quantile of χ² with 9 degrees of freedom.
pub const CHI2_9_999: f64 = 27.877;

pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Membership in the regular n-gon with vertices at the n-th roots of unity:
/// every edge normal at angle `(2k+1)π/n` has support `cos(π/n)`.
pub fn in_regular_polygon(w: ArrayView1<f64>, n: usize, slack: f64) -> bool {
    let apothem = (std::f64::consts::PI / n as f64).cos();
    (0..n).all(|k| {
        let theta = (2 * k + 1) as f64 * std::f64::consts::PI / n as f64;
        w[0] * theta.cos() + w[1] * theta.sin() <= apothem + slack
    })
}

/// Stationary `E‖w‖²` of unprojected SGD on the roots-of-unity instance:
/// `w⁺ = (1 − γλB)w + γλ∑x_{s_ℓ}` gives `γλ / (2 − γλB)`.
pub fn stationary_floor(gamma: f64, lambda: f64, batch: usize) -> f64 {
    let a = gamma * lambda;
    a / (2.0 - a * batch as f64)
}

//! Gradient diversity and the batch-size bound.
//!
//! For per-example gradients `g_1, …, g_n` at `w`,
//!
//! ```text
//! Δ_S(w) = ∑‖g_i‖² / ‖∑g_i‖²,      B_S(w) = n·Δ_S(w) = M²(w) / G(w)
//! ```
//!
//! with `M²(w) = (1/n)∑‖g_i‖²` and `G(w) = ‖∇F(w)‖²`. By Cauchy–Schwarz
//! `B_S ≥ 1`. When `G(w)` vanishes the bound is reported as `+∞` with the
//! `degenerate` flag set.
//!
//! The production path accumulates `∑g_i` once (O(nd)). The pairwise path
//! expands the denominator as `∑‖g_i‖² + ∑_{j≠k}⟨g_j, g_k⟩` (O(n²d)) and exists
//! to cross-check the first on small problems.

use std::collections::BTreeSet;

use ndarray::{Array2, ArrayView1, Axis};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::Table;
use crate::linalg::{self, norm2_sq};
use crate::problems::{Dataset, LossModel};
use crate::sgd::Trajectory;

/// Denominators at or below this fraction of the numerator count as zero.
pub const DEGENERATE_RATIO: f64 = 1e-30;

/// Largest `n` for which the pairwise path is intended to run.
pub const PAIRWISE_MAX_N: usize = 512;

const POWER_SEED: u64 = 0x5EED_0FD1;

/// Diversity statistics at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradientStats {
    pub n: usize,
    /// `(1/n)∑‖g_i‖²`.
    pub m2: f64,
    /// `‖(1/n)∑g_i‖²`.
    pub g: f64,
    pub delta: f64,
    pub bs: f64,
    pub degenerate: bool,
}

impl GradientStats {
    /// Builds the statistics from `∑‖g_i‖²` and `‖∑g_i‖²`.
    pub fn from_sums(n: usize, sum_sq_norms: f64, norm_sq_sum: f64) -> Self {
        let nf = n as f64;
        let degenerate = norm_sq_sum <= DEGENERATE_RATIO * sum_sq_norms;
        let (delta, bs) = if degenerate {
            (f64::INFINITY, f64::INFINITY)
        } else {
            let delta = sum_sq_norms / norm_sq_sum;
            (delta, nf * delta)
        };
        Self {
            n,
            m2: sum_sq_norms / nf,
            g: norm_sq_sum / (nf * nf),
            delta,
            bs,
            degenerate,
        }
    }

    /// `∑‖g_i‖²`.
    pub fn sum_sq_norms(&self) -> f64 {
        self.m2 * self.n as f64
    }

    /// `‖∑g_i‖²`.
    pub fn norm_sq_sum(&self) -> f64 {
        self.g * (self.n * self.n) as f64
    }
}

/// Same statistics over difference gradients `∇f_i(w) − ∇f_i(w′)`.
pub type DifferentialStats = GradientStats;

/// Statistics of the rows of `grads` via the accumulated sum.
pub fn stats_from_gradients(grads: &Array2<f64>) -> GradientStats {
    let sum_sq: f64 = grads.rows().into_iter().map(norm2_sq).sum();
    let total = grads.sum_axis(Axis(0));
    GradientStats::from_sums(grads.nrows(), sum_sq, norm2_sq(total.view()))
}

/// Statistics of the rows of `grads` with the denominator expanded over pairs.
pub fn pairwise_stats_from_gradients(grads: &Array2<f64>) -> GradientStats {
    let n = grads.nrows();
    let norms: Vec<f64> = grads.rows().into_iter().map(norm2_sq).collect();
    let sum_sq: f64 = norms.iter().sum();
    let mut cross = 0.0;
    for j in 0..n {
        let gj = grads.row(j);
        let mut row_cross = 0.0;
        for k in j + 1..n {
            row_cross += gj.dot(&grads.row(k));
        }
        cross += row_cross;
    }
    GradientStats::from_sums(n, sum_sq, sum_sq + 2.0 * cross)
}

/// `Δ_S(w)` and `B_S(w)` for `model` on `data`.
pub fn gradient_diversity(model: &LossModel, data: &Dataset, w: ArrayView1<f64>) -> Result<GradientStats> {
    Ok(stats_from_gradients(&model.gradients(data, w)?))
}

/// Pairwise-expansion counterpart of [`gradient_diversity`].
pub fn gradient_diversity_pairwise(model: &LossModel, data: &Dataset, w: ArrayView1<f64>) -> Result<GradientStats> {
    Ok(pairwise_stats_from_gradients(&model.gradients(data, w)?))
}

/// Relative disagreement of the two denominator paths, scaled by `∑‖g_i‖²`.
///
/// The pairwise sum cancels against the squared norms, so its rounding error
/// is proportional to the numerator rather than to the denominator itself.
pub fn path_disagreement(a: &GradientStats, b: &GradientStats) -> f64 {
    let scale = a.sum_sq_norms().max(b.sum_sq_norms()).max(f64::MIN_POSITIVE);
    (a.norm_sq_sum() - b.norm_sq_sum()).abs() / scale
}

fn difference_gradients(model: &LossModel, data: &Dataset, w: ArrayView1<f64>, w_prime: ArrayView1<f64>) -> Result<Array2<f64>> {
    Ok(model.gradients(data, w)? - model.gradients(data, w_prime)?)
}

/// Differential diversity `Δ̄_S(w, w′)` and `B̄_S(w, w′)`.
pub fn differential_diversity(
    model: &LossModel,
    data: &Dataset,
    w: ArrayView1<f64>,
    w_prime: ArrayView1<f64>,
) -> Result<DifferentialStats> {
    Ok(stats_from_gradients(&difference_gradients(model, data, w, w_prime)?))
}

pub fn differential_diversity_pairwise(
    model: &LossModel,
    data: &Dataset,
    w: ArrayView1<f64>,
    w_prime: ArrayView1<f64>,
) -> Result<DifferentialStats> {
    Ok(pairwise_stats_from_gradients(&difference_gradients(model, data, w, w_prime)?))
}

/// Lower bound on `B_S(w)` valid for every `w` of a generalized linear model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GlmBound {
    /// `n·min‖x_i‖² / σ_max²(X)`; zero when `X = 0`.
    pub value: f64,
    pub sigma_max: f64,
    pub min_row_norm2: f64,
    pub power_iterations: usize,
    pub converged: bool,
    pub zero_matrix: bool,
}

/// `n·min_i‖x_i‖² / σ_max²(X)`.
///
/// Holds for `B_S(w)` and `B̄_S(w, w′)` of any loss of the form `ℓ_i(x_iᵀw)`.
pub fn glm_bound(data: &Dataset) -> GlmBound {
    let est = linalg::sigma_max(data.features().view(), linalg::POWER_TOLERANCE, linalg::POWER_MAX_ITERS, POWER_SEED);
    let min_row_norm2 = data.min_row_norm2();
    let zero_matrix = est.sigma_max == 0.0;
    let value = if zero_matrix {
        0.0
    } else {
        data.n() as f64 * min_row_norm2 / (est.sigma_max * est.sigma_max)
    };
    GlmBound {
        value,
        sigma_max: est.sigma_max,
        min_row_norm2,
        power_iterations: est.iterations,
        converged: est.converged,
        zero_matrix,
    }
}

/// Maximum vertex degree of the support conflict graph (edge when supports overlap).
pub fn conflict_degree(supports: &[Vec<usize>]) -> usize {
    let width = supports.iter().flatten().max().map_or(0, |&c| c + 1);
    let mut owners: Vec<Vec<usize>> = vec![Vec::new(); width];
    for (i, s) in supports.iter().enumerate() {
        for &c in s {
            owners[c].push(i);
        }
    }
    supports
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.iter()
                .flat_map(|&c| owners[c].iter().copied())
                .filter(|&j| j != i)
                .collect::<BTreeSet<usize>>()
                .len()
        })
        .max()
        .unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConflictBound {
    pub rho: usize,
    /// `n / (ρ + 1)`.
    pub value: f64,
}

/// `n/(ρ+1)` for a sparse-conflict model.
pub fn conflict_bound(model: &LossModel) -> Result<ConflictBound> {
    let LossModel::SparseConflict { supports } = model else {
        return Err(Error::UnsupportedModel(format!(
            "conflict bound needs declared supports, got {}",
            model.name()
        )));
    };
    let rho = conflict_degree(supports);
    Ok(ConflictBound {
        rho,
        value: supports.len() as f64 / (rho + 1) as f64,
    })
}

/// `B_S` along the recorded iterates of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct DiversityProfile {
    pub points: Vec<(usize, usize, GradientStats)>,
    pub min_bs: f64,
}

pub fn diversity_profile(model: &LossModel, data: &Dataset, trajectory: &Trajectory) -> Result<DiversityProfile> {
    if trajectory.points.is_empty() {
        return Err(Error::Degenerate("empty trajectory".into()));
    }
    let points = trajectory
        .points
        .iter()
        .map(|p| Ok((p.k, p.n_k, gradient_diversity(model, data, p.w.view())?)))
        .collect::<Result<Vec<_>>>()?;
    let min_bs = points.iter().map(|(_, _, s)| s.bs).fold(f64::INFINITY, f64::min);
    Ok(DiversityProfile { points, min_bs })
}

impl DiversityProfile {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["k", "N_k", "m2", "g", "delta", "bs", "degenerate"]);
        for (k, n_k, s) in &self.points {
            t.push(crate::cells![*k, *n_k, s.m2, s.g, s.delta, s.bs, s.degenerate]);
        }
        t
    }
}

/// Single-point stats as a one-row profile table.
pub fn stats_table(stats: &GradientStats) -> Table {
    let mut t = Table::new(&["k", "N_k", "m2", "g", "delta", "bs", "degenerate"]);
    t.push(crate::cells![
        0usize,
        0usize,
        stats.m2,
        stats.g,
        stats.delta,
        stats.bs,
        stats.degenerate
    ]);
    t
}

//! Diversity-inducing mechanisms: dropout masks, Langevin noise and stochastic
//! quantization of per-example gradients.
//!
//! Each mechanism consumes a fixed-size draw of `d` numbers that does not
//! depend on the gradient. Coupled runs replay the same draw on both
//! trajectories, so the mechanism randomness is shared exactly.

use ndarray::{Array1, ArrayView1, ArrayViewMut1};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::diversity::{self, DEGENERATE_RATIO};
use crate::error::{invalid, Error, Result};
use crate::linalg::{norm1, norm2_sq};
use crate::problems::{Dataset, LossModel};
use crate::rng::Rng;
use crate::sgd::{self, SgdConfig, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DimKind {
    /// Each coordinate is zeroed with probability `p`.
    Dropout { p: f64 },
    /// Adds i.i.d. `N(0, sigma2)` noise per coordinate.
    Sgld { sigma2: f64 },
    /// `[Q(v)]_ℓ = ‖v‖₂·sign(v_ℓ)·η_ℓ` with `P(η_ℓ = 1) = |v_ℓ|/‖v‖₂`.
    Quantize,
}

impl DimKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DimKind::Dropout { p } if !(p > 0.0 && p < 1.0) => Err(invalid("p", "dropout probability must lie in (0, 1)")),
            DimKind::Sgld { sigma2 } if !(sigma2.is_finite() && sigma2 > 0.0) => {
                Err(invalid("sigma2", "noise variance must be finite and positive"))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DimKind::Dropout { .. } => "dropout",
            DimKind::Sgld { .. } => "sgld",
            DimKind::Quantize => "quantize",
        }
    }

    /// The mechanism's scalar parameter (`p`, `sigma2`, or 0 for quantization).
    pub fn param(&self) -> f64 {
        match *self {
            DimKind::Dropout { p } => p,
            DimKind::Sgld { sigma2 } => sigma2,
            DimKind::Quantize => 0.0,
        }
    }

    /// Draws the randomness for one surrogate of dimension `d` into `draw`.
    pub fn draw_into(&self, rng: &mut Rng, mut draw: ArrayViewMut1<f64>) {
        match self {
            DimKind::Sgld { .. } => draw.iter_mut().for_each(|v| *v = rng.sample(StandardNormal)),
            DimKind::Dropout { .. } | DimKind::Quantize => draw.iter_mut().for_each(|v| *v = rng.random::<f64>()),
        }
    }

    /// Applies a previously drawn realisation to `g` in place.
    pub fn apply(&self, mut g: ArrayViewMut1<f64>, draw: ArrayView1<f64>) {
        match *self {
            DimKind::Dropout { p } => g.zip_mut_with(&draw, |v, &u| {
                if u < p {
                    *v = 0.0;
                }
            }),
            DimKind::Sgld { sigma2 } => {
                let scale = sigma2.sqrt();
                g.zip_mut_with(&draw, |v, &z| *v += scale * z);
            }
            DimKind::Quantize => {
                let norm = norm2_sq(g.view()).sqrt();
                if norm == 0.0 {
                    return;
                }
                g.zip_mut_with(&draw, |v, &u| {
                    *v = if u < v.abs() / norm { norm * v.signum() } else { 0.0 };
                });
            }
        }
    }
}

/// One random surrogate of the gradient `g`.
pub fn surrogate_gradient(kind: &DimKind, g: ArrayView1<f64>, rng: &mut Rng) -> Array1<f64> {
    let mut draw = Array1::zeros(g.len());
    kind.draw_into(rng, draw.view_mut());
    let mut out = g.to_owned();
    kind.apply(out.view_mut(), draw.view());
    out
}

/// Batch-size bound under a mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimBound {
    pub value: f64,
    pub degenerate: bool,
}

impl DimBound {
    fn from_ratio(n: usize, numerator_sum: f64, denominator: f64) -> Self {
        if denominator <= DEGENERATE_RATIO * numerator_sum.abs() || denominator <= 0.0 {
            DimBound {
                value: f64::INFINITY,
                degenerate: true,
            }
        } else {
            DimBound {
                value: n as f64 * numerator_sum / denominator,
                degenerate: false,
            }
        }
    }
}

/// Closed-form `B^DIM_S(w) = n·∑E‖g̃_i‖² / E‖∑g̃_i‖²`.
///
/// With `s = ∑‖g_i‖²` and cross term `c = ‖∑g_i‖² − s`:
///
/// * dropout: `n(1−p)s / ((1−p)s + (1−p)²c)`
/// * SGLD: `(n·s + n²dσ²) / (‖∑g_i‖² + ndσ²)`
/// * quantization: `n·q / (q + c)` with `q = ∑‖g_i‖₂‖g_i‖₁`
pub fn dim_batch_bound_analytic(model: &LossModel, data: &Dataset, w: ArrayView1<f64>, kind: &DimKind) -> Result<DimBound> {
    kind.validate()?;
    let grads = model.gradients(data, w)?;
    let stats = diversity::stats_from_gradients(&grads);
    let n = data.n();
    let nf = n as f64;
    let s = stats.sum_sq_norms();
    let total = stats.norm_sq_sum();
    let cross = total - s;
    Ok(match *kind {
        DimKind::Dropout { p } => {
            let keep = 1.0 - p;
            DimBound::from_ratio(n, keep * s, keep * s + keep * keep * cross)
        }
        DimKind::Sgld { sigma2 } => {
            let d = data.d() as f64;
            DimBound::from_ratio(n, s + nf * d * sigma2, total + nf * d * sigma2)
        }
        DimKind::Quantize => {
            let q: f64 = grads.rows().into_iter().map(|r| norm2_sq(r).sqrt() * norm1(r)).sum();
            DimBound::from_ratio(n, q, q + cross)
        }
    })
}

/// Monte Carlo estimate of `B^DIM_S(w)` with its delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimEstimate {
    pub value: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// Estimates `n·E[∑‖g̃_i‖²] / E[‖∑g̃_i‖²]` from `trials` independent draws.
pub fn dim_batch_bound_mc(
    model: &LossModel,
    data: &Dataset,
    w: ArrayView1<f64>,
    kind: &DimKind,
    trials: usize,
    rng: &mut Rng,
) -> Result<DimEstimate> {
    kind.validate()?;
    if trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    let grads = model.gradients(data, w)?;
    let (n, d) = grads.dim();
    let nf = n as f64;
    let mut draw = Array1::zeros(d);
    let mut noisy = Array1::zeros(d);
    let mut total = Array1::zeros(d);
    let mut num = Vec::with_capacity(trials);
    let mut den = Vec::with_capacity(trials);
    for _ in 0..trials {
        total.fill(0.0);
        let mut sum_sq = 0.0;
        for row in grads.rows() {
            noisy.assign(&row);
            kind.draw_into(rng, draw.view_mut());
            kind.apply(noisy.view_mut(), draw.view());
            sum_sq += norm2_sq(noisy.view());
            total += &noisy;
        }
        num.push(sum_sq);
        den.push(norm2_sq(total.view()));
    }
    let t = trials as f64;
    let mean_num = num.iter().sum::<f64>() / t;
    let mean_den = den.iter().sum::<f64>() / t;
    if mean_den <= 0.0 {
        return Err(Error::Degenerate("Monte Carlo denominator is zero".into()));
    }
    let ratio = nf * mean_num / mean_den;
    let stderr = if trials > 1 {
        let var = num.iter().zip(&den).map(|(a, b)| (nf * a - ratio * b).powi(2)).sum::<f64>() / (t - 1.0);
        var.sqrt() / (t.sqrt() * mean_den)
    } else {
        f64::INFINITY
    };
    Ok(DimEstimate {
        value: ratio,
        stderr,
        trials,
    })
}

/// Mini-batch SGD where every sampled gradient passes through the mechanism.
pub fn run_sgd_with_dim(model: &LossModel, data: &Dataset, config: &SgdConfig, kind: &DimKind, w0: ArrayView1<f64>) -> Result<Trajectory> {
    kind.validate()?;
    sgd::run(model, data, config, Some(kind), w0)
}

//! The planar worst-case instance: `f_i(w) = (λ/2)‖w − x_i‖²` with the `x_i`
//! at the n-th roots of unity, `W` the unit ball, `w* = 0`.

use ndarray::{Array1, Array2, ArrayView1};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::io::Table;
use crate::linalg::{dist2, norm2_sq};
use crate::problems::{gen_lowerbound_instance, Dataset, LossModel, ParamSpace};
use crate::rng::{self, Rng};
use crate::sgd::{self, run_sgd, SgdConfig, StepBuffers};

/// Slack allowed in the polygon membership test.
pub const HULL_SLACK: f64 = 1e-12;

/// Number of serial pilot runs used to estimate `B_S` along trajectories.
pub const PILOT_RUNS: usize = 20;

/// `B_S(w) = (‖w‖² + 1)/‖w‖²` on the instance; `+∞` at `w = 0`.
pub fn closed_form_bs(w: ArrayView1<f64>) -> f64 {
    let r2 = norm2_sq(w);
    if r2 == 0.0 {
        f64::INFINITY
    } else {
        (r2 + 1.0) / r2
    }
}

/// Whether `w` lies in the convex hull of the planar points (rows of `points`).
pub fn hull_membership(w: ArrayView1<f64>, points: &Array2<f64>) -> Result<bool> {
    if points.ncols() != 2 {
        return Err(invalid("points", "hull test is planar; points must have d = 2"));
    }
    if w.len() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: w.len() });
    }
    let m = points.nrows();
    if m == 0 {
        return Ok(false);
    }
    let cx = points.column(0).sum() / m as f64;
    let cy = points.column(1).sum() / m as f64;
    let mut order: Vec<(f64, f64, f64)> = points
        .rows()
        .into_iter()
        .map(|p| ((p[1] - cy).atan2(p[0] - cx), p[0], p[1]))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    for j in 0..m {
        let (_, ax, ay) = order[j];
        let (_, bx, by) = order[(j + 1) % m];
        let cross = (bx - ax) * (w[1] - ay) - (by - ay) * (w[0] - ax);
        if cross < -HULL_SLACK {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Mean and standard error of a Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

impl McEstimate {
    fn from_samples(xs: &[f64]) -> Self {
        let t = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / t;
        let stderr = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (t - 1.0) / t).sqrt()
        } else {
            f64::INFINITY
        };
        Self {
            mean,
            stderr,
            trials: xs.len(),
        }
    }
}

/// `E‖w⁺ − w*‖` after one mini-batch step from `w`, by Monte Carlo.
#[allow(clippy::too_many_arguments)]
pub fn one_step_distance_mc(
    model: &LossModel,
    data: &Dataset,
    space: &ParamSpace,
    w: ArrayView1<f64>,
    w_star: ArrayView1<f64>,
    batch: usize,
    gamma: f64,
    trials: usize,
    rng: &mut Rng,
) -> Result<McEstimate> {
    if trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    if batch == 0 {
        return Err(invalid("batch", "must be at least 1"));
    }
    model.gradient(data, 0, w)?;
    if w_star.len() != data.d() {
        return Err(Error::DimensionMismatch {
            expected: data.d(),
            got: w_star.len(),
        });
    }
    let mut buf = StepBuffers::new(data.d());
    let mut next = w.to_owned();
    let samples: Vec<f64> = (0..trials)
        .map(|_| {
            next.assign(&w);
            let (indices, _) = sgd::draw_batch(data.n(), batch, data.d(), rng, None);
            sgd::apply_batch(model, data, &mut next, &indices, None, gamma, space, &mut buf);
            dist2(next.view(), w_star).sqrt()
        })
        .collect();
    Ok(McEstimate::from_samples(&samples))
}

/// Outcome of the divergence regime check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceReport {
    #[serde(rename = "B")]
    pub batch: usize,
    pub gamma: f64,
    pub lambda: f64,
    /// `‖w − w*‖` at the conditioning point.
    pub current: f64,
    pub one_step: McEstimate,
    /// `(E‖w⁺‖ − ‖w‖) / stderr`.
    pub excess_sigmas: f64,
    /// Mean `‖w_K‖` after `steps` iterations from the same point.
    pub terminal: McEstimate,
    /// Mean terminal distance did not drop below the starting distance.
    pub non_convergent: bool,
}

/// Monte Carlo check that `B > 2/(γλ)` pushes the projected iterate away from
/// `w* = 0` on the instance, starting from `w`.
#[allow(clippy::too_many_arguments)]
pub fn divergence_check(
    n: usize,
    lambda: f64,
    gamma: f64,
    batch: usize,
    w: ArrayView1<f64>,
    trials: usize,
    steps: usize,
    seed: u64,
) -> Result<DivergenceReport> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(invalid("gamma", "must be finite and positive"));
    }
    let (model, data, space) = gen_lowerbound_instance(n, lambda)?;
    if batch as f64 <= 2.0 / (gamma * lambda) {
        return Err(invalid(
            "batch",
            format!("B = {batch} is not above 2/(γλ) = {}", 2.0 / (gamma * lambda)),
        ));
    }
    if !space.contains(w) {
        return Err(invalid("w", "must lie in the unit ball"));
    }
    let w_star = Array1::<f64>::zeros(2);
    let current = norm2_sq(w).sqrt();
    let one_step = one_step_distance_mc(
        &model,
        &data,
        &space,
        w,
        w_star.view(),
        batch,
        gamma,
        trials,
        &mut rng::stream(seed, 0),
    )?;
    let excess_sigmas = (one_step.mean - current) / one_step.stderr;

    let terminal: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let cfg = SgdConfig::new(gamma, batch, steps * batch, rng::derive_seed(seed, t as u64)).with_space(space);
            run_sgd(&model, &data, &cfg, w).map(|tr| norm2_sq(tr.last().w.view()).sqrt())
        })
        .collect::<Result<_>>()?;
    let terminal = McEstimate::from_samples(&terminal);
    Ok(DivergenceReport {
        batch,
        gamma,
        lambda,
        current,
        one_step,
        excess_sigmas,
        non_convergent: terminal.mean >= current,
        terminal,
    })
}

/// One grid point of the error-floor experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FloorRow {
    pub delta: f64,
    #[serde(rename = "B")]
    pub batch: usize,
    /// Mean terminal `‖w_T‖²` over seeds.
    pub measured_floor: f64,
    pub stderr: f64,
    /// `(1+δ)γM²/λ` with `M² = 2λ²`.
    pub reference: f64,
    pub ratio: f64,
    /// Whether `B ≥ δ·(pilot mean of B_S) + 1`.
    pub mean_hypothesis: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FloorReport {
    pub n: usize,
    pub lambda: f64,
    pub gamma: f64,
    #[serde(rename = "T")]
    pub budget: usize,
    pub seeds: usize,
    /// Smallest `B_S` seen on the pilot runs, used to pick `B`.
    pub pilot_min_bs: f64,
    /// Mean `B_S` over all recorded pilot iterates.
    pub pilot_mean_bs: f64,
    pub rows: Vec<FloorRow>,
}

impl FloorReport {
    /// `max ratio / min ratio` across the grid.
    pub fn ratio_band(&self) -> f64 {
        let max = self.rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
        let min = self.rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
        max / min
    }

    /// Measured floor nondecreasing along the grid.
    pub fn monotone(&self) -> bool {
        self.rows.windows(2).all(|p| p[0].measured_floor <= p[1].measured_floor)
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["delta", "B", "measured_floor", "reference", "ratio", "seeds"]);
        for r in &self.rows {
            t.push(crate::cells![r.delta, r.batch, r.measured_floor, r.reference, r.ratio, self.seeds]);
        }
        t
    }
}

/// Error floor of constant-step SGD on the instance as the batch grows past
/// the diversity bound.
///
/// Every run starts at `x_1`. Pilot serial runs give `B̂ = min B_S`; each `δ`
/// uses `B = ⌊δB̂⌋ + 1`, which must not exceed `1/(2λγ)`. The same seeds are
/// reused for every `δ`.
pub fn floor_experiment(
    n: usize,
    lambda: f64,
    gamma: f64,
    deltas: &[f64],
    budget: usize,
    seeds: usize,
    master_seed: u64,
) -> Result<FloorReport> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(invalid("gamma", "must be finite and positive"));
    }
    if seeds == 0 {
        return Err(invalid("seeds", "must be at least 1"));
    }
    if deltas.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(invalid("delta", "grid values must be finite and non-negative"));
    }
    let (model, data, space) = gen_lowerbound_instance(n, lambda)?;
    let min_budget = 10.0 / (lambda * gamma);
    if (budget as f64) < min_budget {
        return Err(invalid("budget", format!("T = {budget} is below 10/(λγ) = {min_budget}")));
    }
    let cap = (1.0 / (2.0 * lambda * gamma)).floor() as usize;
    let w0 = data.row(0).to_owned();

    let pilots: Vec<sgd::Trajectory> = (0..PILOT_RUNS)
        .map(|p| {
            let cfg = SgdConfig::new(gamma, 1, budget, rng::derive_seed(master_seed, u64::MAX - p as u64))
                .with_space(space)
                .with_record_every(1);
            run_sgd(&model, &data, &cfg, w0.view())
        })
        .collect::<Result<_>>()?;
    let pilot_bs: Vec<f64> = pilots
        .iter()
        .flat_map(|t| t.points.iter().map(|p| closed_form_bs(p.w.view())))
        .collect();
    let pilot_min_bs = pilot_bs.iter().copied().fold(f64::INFINITY, f64::min);
    let finite: Vec<f64> = pilot_bs.iter().copied().filter(|b| b.is_finite()).collect();
    let pilot_mean_bs = finite.iter().sum::<f64>() / finite.len() as f64;

    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let batch = (delta * pilot_min_bs).floor() as usize + 1;
        if batch > cap {
            return Err(invalid(
                "delta",
                format!("δ = {delta} gives B = {batch}, above the cap 1/(2λγ) = {cap}"),
            ));
        }
        let finals: Vec<f64> = (0..seeds)
            .into_par_iter()
            .map(|s| {
                let cfg = SgdConfig::new(gamma, batch, budget, rng::derive_seed(master_seed, s as u64)).with_space(space);
                run_sgd(&model, &data, &cfg, w0.view()).map(|t| norm2_sq(t.last().w.view()))
            })
            .collect::<Result<_>>()?;
        let est = McEstimate::from_samples(&finals);
        let reference = (1.0 + delta) * gamma * 2.0 * lambda;
        rows.push(FloorRow {
            delta,
            batch,
            measured_floor: est.mean,
            stderr: est.stderr,
            reference,
            ratio: est.mean / reference,
            mean_hypothesis: batch as f64 >= delta * pilot_mean_bs + 1.0,
        });
    }
    Ok(FloorReport {
        n,
        lambda,
        gamma,
        budget,
        seeds,
        pilot_min_bs,
        pilot_mean_bs,
        rows,
    })
}

//! Seeded mini-batch SGD.
//!
//! One iteration samples `B` indices i.i.d. uniformly from `[n]` with
//! replacement and moves `w ← Π_W(w − γ∑_{ℓ∈batch} ∇f_ℓ(w))`. The batch sum is
//! not divided by `B`; the step size carries any normalization. Projection
//! happens once, after the whole batch.

use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use crate::dims::DimKind;
use crate::diversity::{self, GradientStats};
use crate::error::{invalid, Error, Result};
use crate::io::Table;
use crate::linalg::{dist2, dot, norm2_sq};
use crate::problems::{Dataset, LossModel, ParamSpace};
use crate::rng::{self, Rng};

#[derive(Debug, Clone, PartialEq)]
pub enum BatchSchedule {
    Constant(usize),
    /// Batch sizes in order; the last one repeats once the list runs out.
    Varying(Vec<usize>),
}

impl BatchSchedule {
    fn validate(&self) -> Result<()> {
        match self {
            BatchSchedule::Constant(0) => Err(invalid("batch", "batch size must be at least 1")),
            BatchSchedule::Varying(v) if v.is_empty() || v.contains(&0) => Err(invalid("batch", "varying schedule needs batch sizes >= 1")),
            _ => Ok(()),
        }
    }

    /// Size of the `k`-th batch (0-based) before truncation.
    pub fn size(&self, k: usize) -> usize {
        match self {
            BatchSchedule::Constant(b) => *b,
            BatchSchedule::Varying(v) => v[k.min(v.len() - 1)],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgdConfig {
    pub gamma: f64,
    pub schedule: BatchSchedule,
    /// Total number of gradient updates `T`; the final batch is truncated to fit.
    pub budget: usize,
    pub space: ParamSpace,
    pub seed: u64,
    /// Record every `record_every` iterations; 0 records only the endpoints.
    pub record_every: usize,
    /// Known minimizer, used for `dist2_opt`.
    pub optimum: Option<Array1<f64>>,
}

impl SgdConfig {
    pub fn new(gamma: f64, batch: usize, budget: usize, seed: u64) -> Self {
        Self {
            gamma,
            schedule: BatchSchedule::Constant(batch),
            budget,
            space: ParamSpace::Unconstrained,
            seed,
            record_every: 0,
            optimum: None,
        }
    }

    pub fn with_space(mut self, space: ParamSpace) -> Self {
        self.space = space;
        self
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn with_optimum(mut self, w_star: Array1<f64>) -> Self {
        self.optimum = Some(w_star);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub(crate) fn validate(&self, d: usize) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(invalid("gamma", "step size must be finite and non-negative"));
        }
        self.schedule.validate()?;
        if let Some(w) = &self.optimum {
            if w.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: w.len() });
            }
        }
        Ok(())
    }

    /// Sizes of all batches, the last truncated so they sum to the budget.
    pub fn batch_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::new();
        let mut used = 0;
        let mut k = 0;
        while used < self.budget {
            let b = self.schedule.size(k).min(self.budget - used);
            sizes.push(b);
            used += b;
            k += 1;
        }
        sizes
    }
}

/// State recorded after `k` iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub k: usize,
    /// Gradient updates so far, `N_k = ∑_{i≤k} B_i`.
    pub n_k: usize,
    pub w: Array1<f64>,
    pub dist2_opt: Option<f64>,
    pub loss: f64,
    pub grad_norm2: f64,
    pub stats: GradientStats,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    /// `(1/K)∑_{k<K} w_{N_k}`: average of the iterates each batch was taken at.
    pub average_iterate: Option<Array1<f64>>,
    pub final_w: Option<Array1<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectoryPoint {
        self.points.last().expect("trajectory has at least the initial point")
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["k", "N_k", "dist2_opt", "loss", "grad_norm2", "bs"]);
        for p in &self.points {
            t.push(crate::cells![
                p.k,
                p.n_k,
                p.dist2_opt.unwrap_or(f64::INFINITY),
                p.loss,
                p.grad_norm2,
                p.stats.bs
            ]);
        }
        t
    }
}

pub(crate) fn record(
    model: &LossModel,
    data: &Dataset,
    optimum: Option<&Array1<f64>>,
    k: usize,
    n_k: usize,
    w: &Array1<f64>,
) -> TrajectoryPoint {
    let grads = model.gradients(data, w.view()).expect("dimensions validated before the run");
    let stats = diversity::stats_from_gradients(&grads);
    let loss = (0..data.n()).map(|i| model.loss_unchecked(data, i, w.view())).sum::<f64>() / data.n() as f64;
    TrajectoryPoint {
        k,
        n_k,
        w: w.clone(),
        dist2_opt: optimum.map(|o| dist2(w.view(), o.view())),
        loss,
        grad_norm2: stats.g,
        stats,
    }
}

/// Per-run scratch buffers for a mini-batch update.
pub(crate) struct StepBuffers {
    grad: Array1<f64>,
    sum: Array1<f64>,
    draw: Array1<f64>,
}

impl StepBuffers {
    pub(crate) fn new(d: usize) -> Self {
        Self {
            grad: Array1::zeros(d),
            sum: Array1::zeros(d),
            draw: Array1::zeros(d),
        }
    }
}

/// Draws the randomness of one batch: indices, and mechanism draws when a
/// mechanism is active (row `ℓ` belongs to the `ℓ`-th sampled index).
pub(crate) fn draw_batch(
    n: usize,
    b: usize,
    d: usize,
    index_rng: &mut Rng,
    mechanism: Option<(&DimKind, &mut Rng)>,
) -> (Vec<usize>, Option<Array2<f64>>) {
    let indices: Vec<usize> = (0..b).map(|_| index_rng.random_range(0..n)).collect();
    let draws = mechanism.map(|(kind, rng)| {
        let mut m = Array2::zeros((b, d));
        for row in m.rows_mut() {
            kind.draw_into(rng, row);
        }
        m
    });
    (indices, draws)
}

/// Applies one mini-batch update with pre-drawn randomness.
#[allow(clippy::too_many_arguments)]
pub(crate) fn apply_batch(
    model: &LossModel,
    data: &Dataset,
    w: &mut Array1<f64>,
    indices: &[usize],
    draws: Option<(&DimKind, &Array2<f64>)>,
    gamma: f64,
    space: &ParamSpace,
    buf: &mut StepBuffers,
) {
    buf.sum.fill(0.0);
    for (slot, &i) in indices.iter().enumerate() {
        model.gradient_into(data, i, w.view(), buf.grad.view_mut());
        if let Some((kind, m)) = draws {
            buf.draw.assign(&m.row(slot));
            kind.apply(buf.grad.view_mut(), buf.draw.view());
        }
        buf.sum += &buf.grad;
    }
    w.scaled_add(-gamma, &buf.sum);
    space.project(w);
}

/// One mini-batch step: `w⁺ = Π(w − γ∑_{ℓ=1..B} ∇f_{s_ℓ}(w))`, `s_ℓ` i.i.d. uniform.
pub fn sgd_step(
    model: &LossModel,
    data: &Dataset,
    w: ArrayView1<f64>,
    batch: usize,
    gamma: f64,
    rng: &mut Rng,
    space: &ParamSpace,
) -> Result<Array1<f64>> {
    if batch == 0 {
        return Err(invalid("batch", "batch size must be at least 1"));
    }
    model.gradient(data, 0, w)?;
    let (indices, _) = draw_batch(data.n(), batch, data.d(), rng, None);
    let mut out = w.to_owned();
    let mut buf = StepBuffers::new(data.d());
    apply_batch(model, data, &mut out, &indices, None, gamma, space, &mut buf);
    Ok(out)
}

/// Runs mini-batch SGD from `w0` for `config.budget` gradient updates.
pub fn run_sgd(model: &LossModel, data: &Dataset, config: &SgdConfig, w0: ArrayView1<f64>) -> Result<Trajectory> {
    run(model, data, config, None, w0)
}

pub(crate) fn run(
    model: &LossModel,
    data: &Dataset,
    config: &SgdConfig,
    mechanism: Option<&DimKind>,
    w0: ArrayView1<f64>,
) -> Result<Trajectory> {
    config.validate(data.d())?;
    model.gradient(data, 0, w0)?;
    if !config.space.contains(w0) {
        return Err(invalid("w0", "initial point lies outside the parameter space"));
    }
    let mut index_rng = rng::stream(config.seed, rng::INDEX_STREAM);
    let mut mech_rng = rng::stream(config.seed, rng::MECHANISM_STREAM);
    let optimum = config.optimum.as_ref();

    let mut w = w0.to_owned();
    let mut buf = StepBuffers::new(data.d());
    let mut points = vec![record(model, data, optimum, 0, 0, &w)];
    let mut avg = Array1::<f64>::zeros(data.d());
    let sizes = config.batch_sizes();
    let mut n_k = 0;
    for (k, &b) in sizes.iter().enumerate() {
        avg += &w;
        let (indices, draws) = draw_batch(data.n(), b, data.d(), &mut index_rng, mechanism.map(|m| (m, &mut mech_rng)));
        let draws = mechanism.zip(draws.as_ref());
        apply_batch(model, data, &mut w, &indices, draws, config.gamma, &config.space, &mut buf);
        n_k += b;
        let iteration = k + 1;
        let last = iteration == sizes.len();
        if last || (config.record_every > 0 && iteration % config.record_every == 0) {
            points.push(record(model, data, optimum, iteration, n_k, &w));
        }
    }
    let average_iterate = (!sizes.is_empty()).then(|| avg / sizes.len() as f64);
    Ok(Trajectory {
        points,
        average_iterate,
        final_w: Some(w),
    })
}

/// Number of index tuples enumerated exactly by [`lemma1_exact_expectation`].
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

/// `E‖w⁺ − w*‖²` over all `n^B` equally likely index tuples of one
/// unprojected step.
pub fn lemma1_exact_expectation(
    model: &LossModel,
    data: &Dataset,
    w: ArrayView1<f64>,
    batch: usize,
    gamma: f64,
    w_star: ArrayView1<f64>,
) -> Result<f64> {
    if batch == 0 {
        return Err(invalid("batch", "batch size must be at least 1"));
    }
    if w_star.len() != data.d() {
        return Err(Error::DimensionMismatch {
            expected: data.d(),
            got: w_star.len(),
        });
    }
    let n = data.n();
    let count = (n as u128).checked_pow(batch as u32).unwrap_or(u128::MAX);
    if count > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge {
            count,
            limit: ENUMERATION_LIMIT,
        });
    }
    let grads = model.gradients(data, w)?;
    let mut tuple = vec![0usize; batch];
    let mut total = 0.0;
    let mut step = Array1::<f64>::zeros(data.d());
    loop {
        step.fill(0.0);
        for &i in &tuple {
            step += &grads.row(i);
        }
        let d2: f64 = w
            .iter()
            .zip(step.iter())
            .zip(w_star.iter())
            .map(|((wv, sv), ov)| (wv - gamma * sv - ov).powi(2))
            .sum();
        total += d2;
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == batch {
                return Ok(total / count as f64);
            }
            tuple[pos] += 1;
            if tuple[pos] < n {
                break;
            }
            tuple[pos] = 0;
            pos += 1;
        }
    }
}

/// `‖w−w*‖² − 2γB⟨∇F(w), w−w*⟩ + γ²(B·M²(w) + B(B−1)·G(w))`.
pub fn lemma1_closed_form(
    model: &LossModel,
    data: &Dataset,
    w: ArrayView1<f64>,
    batch: usize,
    gamma: f64,
    w_star: ArrayView1<f64>,
) -> Result<f64> {
    if w_star.len() != data.d() {
        return Err(Error::DimensionMismatch {
            expected: data.d(),
            got: w_star.len(),
        });
    }
    let grads = model.gradients(data, w)?;
    let stats = diversity::stats_from_gradients(&grads);
    let full = grads.sum_axis(ndarray::Axis(0)) / data.n() as f64;
    let diff = &w - &w_star;
    let b = batch as f64;
    Ok(norm2_sq(diff.view()) - 2.0 * gamma * b * dot(full.view(), diff.view()) + gamma * gamma * (b * stats.m2 + b * (b - 1.0) * stats.g))
}

/// Function classes with their own step-size rule and suboptimality metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionClass {
    StronglyConvex,
    Convex,
    Smooth,
    Pl,
}

impl FromStr for FunctionClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strongly-convex" => Ok(FunctionClass::StronglyConvex),
            "convex" => Ok(FunctionClass::Convex),
            "smooth" => Ok(FunctionClass::Smooth),
            "pl" => Ok(FunctionClass::Pl),
            other => Err(invalid("class", format!("unknown function class `{other}`"))),
        }
    }
}

impl FunctionClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            FunctionClass::StronglyConvex => "strongly-convex",
            FunctionClass::Convex => "convex",
            FunctionClass::Smooth => "smooth",
            FunctionClass::Pl => "pl",
        }
    }
}

/// Problem constants consumed by the step-size and budget formulas.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ClassParams {
    /// Strong-convexity modulus.
    pub lambda: Option<f64>,
    /// Smoothness.
    pub beta: Option<f64>,
    /// PL constant.
    pub mu: Option<f64>,
    /// Bound on `M²(w)` over the iterates.
    pub m2: f64,
}

fn positive(v: Option<f64>, name: &'static str) -> Result<f64> {
    match v {
        Some(x) if x.is_finite() && x > 0.0 => Ok(x),
        _ => Err(invalid(name, "required and must be positive")),
    }
}

/// Serial step size for the class:
///
/// | class | γ |
/// |---|---|
/// | strongly convex | `ελ/M²` |
/// | convex | `ε/M²` |
/// | smooth | `ε/(βM²)` |
/// | PL | `2εμ/(βM²)` |
///
/// `deflate = Some(δ)` divides the result by `1 + δ`.
pub fn tuned_step_size(class: FunctionClass, epsilon: f64, params: &ClassParams, deflate: Option<f64>) -> Result<f64> {
    let eps = positive(Some(epsilon), "epsilon")?;
    let m2 = positive(Some(params.m2), "m2")?;
    let gamma = match class {
        FunctionClass::StronglyConvex => eps * positive(params.lambda, "lambda")? / m2,
        FunctionClass::Convex => eps / m2,
        FunctionClass::Smooth => eps / (positive(params.beta, "beta")? * m2),
        FunctionClass::Pl => 2.0 * eps * positive(params.mu, "mu")? / (m2 * positive(params.beta, "beta")?),
    };
    match deflate {
        Some(delta) if delta >= 0.0 => Ok(gamma / (1.0 + delta)),
        Some(_) => Err(invalid("delta", "must be non-negative")),
        None => Ok(gamma),
    }
}

/// Serial gradient budget `T(ε)` for the class. `initial_gap` is `D₀ = ‖w₀−w*‖²`
/// for the convex classes and `F(w₀) − F*` for smooth and PL.
pub fn required_budget(class: FunctionClass, epsilon: f64, params: &ClassParams, initial_gap: f64) -> Result<usize> {
    let eps = positive(Some(epsilon), "epsilon")?;
    let m2 = positive(Some(params.m2), "m2")?;
    let gap = initial_gap.max(0.0);
    let t = match class {
        FunctionClass::StronglyConvex => {
            let l = positive(params.lambda, "lambda")?;
            m2 / (2.0 * l * l * eps) * (2.0 * gap / eps).ln().max(1.0)
        }
        FunctionClass::Convex => m2 * gap / (eps * eps),
        FunctionClass::Smooth => 2.0 * m2 * positive(params.beta, "beta")? * gap / (eps * eps),
        FunctionClass::Pl => {
            let mu = positive(params.mu, "mu")?;
            m2 * positive(params.beta, "beta")? / (4.0 * mu * mu * eps) * (2.0 * gap / eps).ln().max(1.0)
        }
    };
    Ok(t.ceil().max(1.0) as usize)
}

/// Everything the parity experiment needs to know about the problem.
#[derive(Debug, Clone)]
pub struct ParityProblem {
    pub model: LossModel,
    pub data: Dataset,
    pub class: FunctionClass,
    pub params: ClassParams,
    pub w0: Array1<f64>,
    pub w_star: Option<Array1<f64>>,
    pub f_star: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParityReport {
    pub class: FunctionClass,
    #[serde(rename = "B")]
    pub batch: usize,
    pub delta: f64,
    pub gamma: f64,
    #[serde(rename = "T")]
    pub budget: usize,
    pub serial_mean: f64,
    pub minibatch_mean: f64,
    pub ratio: f64,
    pub seeds: usize,
    /// Smallest `B_S` seen on the serial pilot run.
    #[serde(skip)]
    pub pilot_min_bs: f64,
    /// Pilot estimate of `M²`.
    #[serde(skip)]
    pub m2: f64,
    /// Recorded mini-batch iterates where `B > δ·B_S(w) + 1`.
    #[serde(skip)]
    pub bs_violations: usize,
    /// Whether the batch size was lowered to the `1/(2λγ)` cap.
    #[serde(skip)]
    pub capped: bool,
}

/// Serial vs mini-batch SGD at equal step size and equal gradient budget.
///
/// A serial pilot run fixes `M²` (max over the pilot) and `min B_S`; then
/// `B = ⌊δ·min B_S⌋ + 1`, capped at `1/(2λγ)` (or `1/(2μγ)`) for the
/// strongly convex and PL classes. Both algorithms run on the same seeds.
pub fn convergence_parity_experiment(
    problem: &ParityProblem,
    epsilon: f64,
    delta: f64,
    seeds: usize,
    master_seed: u64,
) -> Result<ParityReport> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(invalid("delta", "must be finite and non-negative"));
    }
    if seeds == 0 {
        return Err(invalid("seeds", "must be at least 1"));
    }
    let ParityProblem {
        model, data, class, w0, ..
    } = problem;
    let class = *class;
    let needs_opt = matches!(class, FunctionClass::StronglyConvex);
    if needs_opt && problem.w_star.is_none() {
        return Err(invalid("w_star", "strongly convex parity needs the minimizer"));
    }
    if !needs_opt && class != FunctionClass::Smooth && problem.f_star.is_none() {
        return Err(invalid("f_star", "this class needs the optimal value"));
    }

    let initial = record(model, data, problem.w_star.as_ref(), 0, 0, w0);
    let gap = |p: &ClassParams| -> f64 {
        match class {
            FunctionClass::StronglyConvex | FunctionClass::Convex => match &problem.w_star {
                Some(o) => dist2(w0.view(), o.view()),
                None => 1.0,
            },
            _ => initial.loss - problem.f_star.unwrap_or(0.0).min(initial.loss) + 0.0 * p.m2,
        }
    };
    let mut params = problem.params;
    params.m2 = initial.stats.m2;
    let gamma0 = tuned_step_size(class, epsilon, &params, None)?;
    let budget0 = required_budget(class, epsilon, &params, gap(&params))?;

    let pilot_cfg = SgdConfig {
        gamma: gamma0,
        schedule: BatchSchedule::Constant(1),
        budget: budget0,
        space: ParamSpace::Unconstrained,
        seed: rng::derive_seed(master_seed, u64::MAX),
        record_every: (budget0 / 200).max(1),
        optimum: problem.w_star.clone(),
    };
    let pilot = run_sgd(model, data, &pilot_cfg, w0.view())?;
    let m2 = pilot.points.iter().map(|p| p.stats.m2).fold(initial.stats.m2, f64::max);
    let min_bs = pilot.points.iter().map(|p| p.stats.bs).fold(f64::INFINITY, f64::min);
    if !min_bs.is_finite() {
        return Err(Error::Degenerate("pilot run has no finite batch-size bound".into()));
    }
    params.m2 = m2;
    let gamma = tuned_step_size(class, epsilon, &params, None)?;
    let budget = required_budget(class, epsilon, &params, gap(&params))?;

    let mut batch = (delta * min_bs).floor() as usize + 1;
    let cap = match class {
        FunctionClass::StronglyConvex => Some((1.0 / (2.0 * positive(params.lambda, "lambda")? * gamma)).floor() as usize),
        FunctionClass::Pl => Some((1.0 / (2.0 * positive(params.mu, "mu")? * gamma)).floor() as usize),
        _ => None,
    };
    let mut capped = false;
    if let Some(cap) = cap {
        if batch > cap.max(1) {
            batch = cap.max(1);
            capped = true;
        }
    }

    let record_every = if class == FunctionClass::Smooth { 1 } else { 0 };
    let config_for = |b: usize, seed: u64| SgdConfig {
        gamma,
        schedule: BatchSchedule::Constant(b),
        budget,
        space: ParamSpace::Unconstrained,
        seed,
        record_every,
        optimum: problem.w_star.clone(),
    };

    let run_pair = |s: usize| -> Result<(Trajectory, Trajectory)> {
        let seed = rng::derive_seed(master_seed, s as u64);
        let serial = run_sgd(model, data, &config_for(1, seed), w0.view())?;
        let mini = if batch == 1 {
            serial.clone()
        } else {
            run_sgd(model, data, &config_for(batch, seed), w0.view())?
        };
        Ok((serial, mini))
    };
    let runs: Vec<(Trajectory, Trajectory)> = (0..seeds).into_par_iter().map(run_pair).collect::<Result<_>>()?;

    let serial_mean = suboptimality(problem, class, runs.iter().map(|r| &r.0))?;
    let minibatch_mean = suboptimality(problem, class, runs.iter().map(|r| &r.1))?;
    let bs_violations = runs
        .iter()
        .flat_map(|r| r.1.points.iter())
        .filter(|p| batch as f64 > delta * p.stats.bs + 1.0)
        .count();

    Ok(ParityReport {
        class,
        batch,
        delta,
        gamma,
        budget,
        serial_mean,
        minibatch_mean,
        ratio: minibatch_mean / serial_mean,
        seeds,
        pilot_min_bs: min_bs,
        m2,
        bs_violations,
        capped,
    })
}

/// Multi-seed mean of the class-specific suboptimality.
fn suboptimality<'a>(problem: &ParityProblem, class: FunctionClass, runs: impl Iterator<Item = &'a Trajectory>) -> Result<f64> {
    let runs: Vec<&Trajectory> = runs.collect();
    let count = runs.len() as f64;
    match class {
        FunctionClass::StronglyConvex => Ok(runs.iter().map(|t| t.last().dist2_opt.unwrap_or(f64::NAN)).sum::<f64>() / count),
        FunctionClass::Convex => {
            let f_star = problem.f_star.unwrap_or(0.0);
            let mut total = 0.0;
            for t in &runs {
                let avg = t.average_iterate.as_ref().unwrap_or(&t.last().w);
                total += problem.model.full_loss(&problem.data, avg.view())? - f_star;
            }
            Ok(total / count)
        }
        FunctionClass::Pl => {
            let f_star = problem.f_star.unwrap_or(0.0);
            Ok(runs.iter().map(|t| t.last().loss - f_star).sum::<f64>() / count)
        }
        FunctionClass::Smooth => {
            // min over iterations of the seed-averaged squared gradient norm
            let len = runs.iter().map(|t| t.points.len()).min().unwrap_or(0);
            let best = (0..len.saturating_sub(1))
                .map(|k| runs.iter().map(|t| t.points[k].grad_norm2).sum::<f64>() / count)
                .fold(f64::INFINITY, f64::min);
            Ok(best)
        }
    }
}

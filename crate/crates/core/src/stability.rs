//! Coupled runs: SGD on two samples that differ in one example, driven by the
//! same index sequence and the same mechanism draws.

use ndarray::{Array1, ArrayView1};
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::dims::DimKind;
use crate::diversity::glm_bound;
use crate::error::{invalid, Error, Result};
use crate::io::Table;
use crate::linalg::{dist2, norm2_sq};
use crate::problems::{self, Dataset, LabelRule, LossModel, ParamSpace};
use crate::rng::{self, Rng};
use crate::sgd::{self, FunctionClass, SgdConfig, StepBuffers};

/// Stream used for the replaced index `I`.
const REPLACE_STREAM: u64 = 2;

/// Distribution the coupled samples are drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DataGenerator {
    Gaussian { d: usize, sigma: f64, labels: LabelRule },
    Rademacher { d: usize, labels: LabelRule },
}

impl DataGenerator {
    pub fn generate(&self, n: usize, seed: u64) -> Result<Dataset> {
        match *self {
            DataGenerator::Gaussian { d, sigma, labels } => problems::gen_gaussian_dataset_with(n, d, sigma, labels, seed),
            DataGenerator::Rademacher { d, labels } => problems::gen_rademacher_dataset_with(n, d, labels, seed),
        }
    }
}

/// `S` and `S′`, identical except at index `i_replaced`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledSample {
    pub s: Dataset,
    pub s_prime: Dataset,
    pub i_replaced: usize,
}

impl CoupledSample {
    /// Replaces row `i` of `s` by `(x, y)`.
    pub fn from_parts(s: Dataset, i: usize, x: ArrayView1<f64>, y: f64) -> Result<Self> {
        let s_prime = s.with_replaced(i, x, y)?;
        Ok(Self { s, s_prime, i_replaced: i })
    }

    /// Control pair with `S′ = S`.
    pub fn identical(s: Dataset, i: usize) -> Result<Self> {
        let x = s.row(i).to_owned();
        let y = s.label(i);
        Self::from_parts(s, i, x.view(), y)
    }

    pub fn n(&self) -> usize {
        self.s.n()
    }
}

/// Draws `n + 1` examples: the first `n` form `S`, the last replaces a
/// uniformly chosen index to form `S′`.
pub fn make_coupled_sample(generator: &DataGenerator, n: usize, seed: u64) -> Result<CoupledSample> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let all = generator.generate(n + 1, seed)?;
    let rows: Vec<usize> = (0..n).collect();
    let s = all.select(&rows);
    let i = rng::stream(seed, REPLACE_STREAM).random_range(0..n);
    CoupledSample::from_parts(s, i, all.row(n), all.label(n))
}

/// One coupled pair of trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledRun {
    /// `‖w_k − w̃_k‖` after each iteration, starting with `k = 0`.
    pub distances: Vec<f64>,
    /// Whether iteration `k` (1-based, stored at `k − 1`) sampled the replaced index.
    pub touched: Vec<bool>,
    pub w: Array1<f64>,
    pub w_tilde: Array1<f64>,
    /// `f(w_T; z′) − f(w̃_T; z′)` at the replacement example `z′`.
    pub loss_gap: f64,
}

impl CoupledRun {
    pub fn terminal_distance(&self) -> f64 {
        *self.distances.last().expect("distance at k = 0 is always recorded")
    }

    /// `√(‖w − w̃‖² / (‖w‖² + ‖w̃‖²))`, 0 when both are zero.
    pub fn normalized_distance(&self) -> f64 {
        normalized_distance(self.w.view(), self.w_tilde.view())
    }
}

pub fn normalized_distance(w: ArrayView1<f64>, w_tilde: ArrayView1<f64>) -> f64 {
    let den = norm2_sq(w) + norm2_sq(w_tilde);
    if den == 0.0 {
        0.0
    } else {
        (dist2(w, w_tilde) / den).sqrt().min(1.0)
    }
}

/// Runs SGD on `S` and `S′` in lockstep with shared randomness.
pub fn coupled_sgd(
    model: &LossModel,
    coupled: &CoupledSample,
    config: &SgdConfig,
    mechanism: Option<&DimKind>,
    w0: ArrayView1<f64>,
) -> Result<CoupledRun> {
    let (s, s_prime) = (&coupled.s, &coupled.s_prime);
    if s.n() != s_prime.n() || s.d() != s_prime.d() {
        return Err(Error::DimensionMismatch {
            expected: s.d(),
            got: s_prime.d(),
        });
    }
    config.validate(s.d())?;
    model.gradient(s, 0, w0)?;
    model.check(s_prime, w0)?;
    if let Some(kind) = mechanism {
        kind.validate()?;
    }
    if !config.space.contains(w0) {
        return Err(invalid("w0", "initial point lies outside the parameter space"));
    }
    let mut index_rng = rng::stream(config.seed, rng::INDEX_STREAM);
    let mut mech_rng = rng::stream(config.seed, rng::MECHANISM_STREAM);
    let mut w = w0.to_owned();
    let mut w_tilde = w0.to_owned();
    let mut buf = StepBuffers::new(s.d());
    let mut buf_tilde = StepBuffers::new(s.d());
    let sizes = config.batch_sizes();
    let mut distances = Vec::with_capacity(sizes.len() + 1);
    let mut touched = Vec::with_capacity(sizes.len());
    distances.push(0.0);
    for &b in &sizes {
        let (indices, draws) = sgd::draw_batch(s.n(), b, s.d(), &mut index_rng, mechanism.map(|m| (m, &mut mech_rng)));
        let draws = mechanism.zip(draws.as_ref());
        sgd::apply_batch(model, s, &mut w, &indices, draws, config.gamma, &config.space, &mut buf);
        sgd::apply_batch(
            model,
            s_prime,
            &mut w_tilde,
            &indices,
            draws,
            config.gamma,
            &config.space,
            &mut buf_tilde,
        );
        touched.push(indices.contains(&coupled.i_replaced));
        distances.push(dist2(w.view(), w_tilde.view()).sqrt());
    }
    let i = coupled.i_replaced;
    let loss_gap = model.loss(s_prime, i, w.view())? - model.loss(s_prime, i, w_tilde.view())?;
    Ok(CoupledRun {
        distances,
        touched,
        w,
        w_tilde,
        loss_gap,
    })
}

/// Largest step size allowed by the stability condition:
/// `2 / ((β+λ)(1 + 1{B>1}/(n−1) + (B−1)/B̄))`, with `λ = 0` for convex losses.
pub fn step_size_threshold(beta: f64, lambda: Option<f64>, batch: usize, b_bar: f64, n: usize) -> Result<f64> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(invalid("beta", "must be finite and positive"));
    }
    let lambda = lambda.unwrap_or(0.0);
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(invalid("lambda", "must be finite and non-negative"));
    }
    if batch == 0 {
        return Err(invalid("batch", "must be at least 1"));
    }
    if b_bar.is_nan() || b_bar < 1.0 {
        return Err(invalid("b_bar", "must be at least 1"));
    }
    if n < 2 {
        return Err(invalid("n", "must be at least 2"));
    }
    let indicator = if batch > 1 { 1.0 / (n as f64 - 1.0) } else { 0.0 };
    let spread = (batch as f64 - 1.0) / b_bar;
    Ok(2.0 / ((beta + lambda) * (1.0 + indicator + spread)))
}

fn check_positive(v: f64, name: &'static str) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(name, "must be finite and positive"))
    }
}

/// Uniform stability bound: `2γL²T/n` (convex) or `4L²/(λn)` (strongly convex).
pub fn stability_bounds(class: FunctionClass, gamma: f64, l: f64, budget: usize, n: usize, lambda: Option<f64>) -> Result<f64> {
    let l = check_positive(l, "L")?;
    let n = check_positive(n as f64, "n")?;
    match class {
        FunctionClass::Convex => Ok(2.0 * check_positive(gamma, "gamma")? * l * l * budget as f64 / n),
        FunctionClass::StronglyConvex => {
            let lambda = check_positive(lambda.unwrap_or(f64::NAN), "lambda")?;
            Ok(4.0 * l * l / (lambda * n))
        }
        other => Err(Error::UnsupportedModel(format!(
            "no stability bound for class `{}`",
            other.as_str()
        ))),
    }
}

/// Mixture form `bound·(1−η) + 2γL²Tη` for samples that violate the step-size
/// condition with probability `η`.
pub fn corollary_bound(class: FunctionClass, gamma: f64, l: f64, budget: usize, n: usize, lambda: Option<f64>, eta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(invalid("eta", "must lie in [0, 1]"));
    }
    let base = stability_bounds(class, gamma, l, budget, n, lambda)?;
    Ok(base * (1.0 - eta) + 2.0 * gamma * l * l * budget as f64 * eta)
}

/// `2γLT/n`, the bound on `E‖w_T − w̃_T‖` for convex losses.
pub fn distance_bound(gamma: f64, l: f64, budget: usize, n: usize) -> f64 {
    2.0 * gamma * l * budget as f64 / n as f64
}

/// Largest per-example gradient norm over `samples` random `(i, w)` with `w`
/// uniform in the ball. Never exceeds the true Lipschitz constant.
pub fn lipschitz_estimate(model: &LossModel, data: &Dataset, space: &ParamSpace, samples: usize, rng: &mut Rng) -> Result<f64> {
    let radius = space
        .radius()
        .ok_or_else(|| invalid("space", "sampled Lipschitz estimate needs a bounded space; supply L"))?;
    model.check(data, Array1::<f64>::zeros(data.d()).view())?;
    let d = data.d();
    let mut best: f64 = 0.0;
    let mut w = Array1::<f64>::zeros(d);
    let mut g = Array1::<f64>::zeros(d);
    for _ in 0..samples {
        w.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        let norm = norm2_sq(w.view()).sqrt();
        let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
        if norm > 0.0 {
            w *= r / norm;
        }
        let i = rng.random_range(0..data.n());
        model.gradient_into(data, i, w.view(), g.view_mut());
        best = best.max(norm2_sq(g.view()).sqrt());
    }
    Ok(best)
}

/// Closed-form Lipschitz constant of the logistic loss: `max|y_i|·‖x_i‖`.
pub fn logistic_lipschitz(data: &Dataset) -> f64 {
    (0..data.n())
        .map(|i| data.label(i).abs() * norm2_sq(data.row(i)).sqrt())
        .fold(0.0, f64::max)
}

/// Closed-form smoothness of the logistic loss: `max y_i²‖x_i‖²/4`.
pub fn logistic_smoothness(data: &Dataset) -> f64 {
    (0..data.n())
        .map(|i| data.label(i).powi(2) * norm2_sq(data.row(i)) / 4.0)
        .fold(0.0, f64::max)
}

/// How the step size of a stability run is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaRule {
    Fixed(f64),
    /// This fraction of the smallest step-size threshold over the generated samples.
    ThresholdFraction(f64),
}

/// Shared settings of a stability experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityConfig {
    pub n: usize,
    /// Gradient budget `T`, equal for every batch size.
    pub budget: usize,
    pub gamma: GammaRule,
    pub class: FunctionClass,
    pub lambda: Option<f64>,
    /// Smoothness `β`; the logistic closed form when absent.
    pub beta: Option<f64>,
    /// Lipschitz constant; the logistic closed form, or a sampled estimate
    /// over a bounded space, when absent.
    pub lipschitz: Option<f64>,
    pub space: ParamSpace,
    pub mechanism: Option<DimKind>,
    /// Run the control pair `S′ = S` instead of a real replacement.
    pub identical: bool,
}

/// Multi-seed summary of coupled runs at one batch size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    #[serde(rename = "B")]
    pub batch: usize,
    pub gamma: f64,
    #[serde(rename = "T")]
    pub budget: usize,
    pub n: usize,
    pub seeds: usize,
    pub mean_dist: f64,
    pub stderr_dist: f64,
    pub mean_norm_dist: f64,
    /// Mean of `f(w_T; z′) − f(w̃_T; z′)`.
    pub eps_stab: f64,
    pub lipschitz: f64,
    pub lipschitz_sampled: bool,
    pub distance_bound: f64,
    pub bound_thm9: f64,
    pub bound_thm10: f64,
    /// Fraction of samples whose step-size threshold is below `gamma`.
    pub eta: f64,
    pub cond_ok: bool,
}

struct PreparedSample {
    coupled: CoupledSample,
    beta: f64,
    b_bar: f64,
    lipschitz: f64,
    sampled: bool,
}

fn prepare(model: &LossModel, generator: &DataGenerator, config: &StabilityConfig, seed: u64) -> Result<PreparedSample> {
    let coupled = if config.identical {
        let s = generator.generate(config.n, seed)?;
        let i = rng::stream(seed, REPLACE_STREAM).random_range(0..config.n);
        CoupledSample::identical(s, i)?
    } else {
        make_coupled_sample(generator, config.n, seed)?
    };
    let logistic = matches!(model, LossModel::Logistic);
    let beta = match (config.beta, logistic) {
        (Some(b), _) => b,
        (None, true) => logistic_smoothness(&coupled.s).max(logistic_smoothness(&coupled.s_prime)),
        (None, false) => return Err(invalid("beta", "required for non-logistic models")),
    };
    let b_bar = if model.is_generalized_linear() {
        glm_bound(&coupled.s).value.min(glm_bound(&coupled.s_prime).value).max(1.0)
    } else {
        1.0
    };
    let (lipschitz, sampled) = match (config.lipschitz, logistic) {
        (Some(l), _) => (l, false),
        (None, true) => (logistic_lipschitz(&coupled.s).max(logistic_lipschitz(&coupled.s_prime)), false),
        (None, false) => {
            let mut r = rng::stream(seed, REPLACE_STREAM + 1);
            let a = lipschitz_estimate(model, &coupled.s, &config.space, 4096, &mut r)?;
            let b = lipschitz_estimate(model, &coupled.s_prime, &config.space, 4096, &mut r)?;
            (a.max(b), true)
        }
    };
    Ok(PreparedSample {
        coupled,
        beta,
        b_bar,
        lipschitz,
        sampled,
    })
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Coupled runs at each batch size of `b_grid`, one fresh coupled sample per
/// seed (shared across batch sizes), all at the same gradient budget.
pub fn stability_sweep(
    model: &LossModel,
    generator: &DataGenerator,
    b_grid: &[usize],
    config: &StabilityConfig,
    seeds: usize,
    master_seed: u64,
) -> Result<Vec<StabilityReport>> {
    if seeds == 0 {
        return Err(invalid("seeds", "must be at least 1"));
    }
    if b_grid.is_empty() {
        return Err(invalid("batch", "batch-size grid is empty"));
    }
    if config.n < 2 {
        return Err(invalid("n", "must be at least 2"));
    }
    let samples: Vec<PreparedSample> = (0..seeds)
        .into_par_iter()
        .map(|s| prepare(model, generator, config, rng::derive_seed(master_seed, s as u64)))
        .collect::<Result<_>>()?;
    let w0 = Array1::<f64>::zeros(samples[0].coupled.s.d());

    b_grid
        .iter()
        .map(|&batch| {
            let thresholds: Vec<f64> = samples
                .iter()
                .map(|p| step_size_threshold(p.beta, config.lambda, batch, p.b_bar, config.n))
                .collect::<Result<_>>()?;
            let gamma = match config.gamma {
                GammaRule::Fixed(g) => g,
                GammaRule::ThresholdFraction(f) => f * thresholds.iter().copied().fold(f64::INFINITY, f64::min),
            };
            let eta = thresholds.iter().filter(|&&t| gamma > t).count() as f64 / seeds as f64;
            let runs: Vec<CoupledRun> = samples
                .par_iter()
                .enumerate()
                .map(|(s, p)| {
                    let cfg = SgdConfig {
                        space: config.space,
                        ..SgdConfig::new(gamma, batch, config.budget, rng::derive_seed(master_seed ^ 0x5EED, s as u64))
                    };
                    coupled_sgd(model, &p.coupled, &cfg, config.mechanism.as_ref(), w0.view())
                })
                .collect::<Result<_>>()?;
            let dists: Vec<f64> = runs.iter().map(CoupledRun::terminal_distance).collect();
            let (mean_dist, stderr_dist) = mean_stderr(&dists);
            let mean_norm_dist = runs.iter().map(CoupledRun::normalized_distance).sum::<f64>() / seeds as f64;
            let eps_stab = runs.iter().map(|r| r.loss_gap).sum::<f64>() / seeds as f64;
            let lipschitz = samples.iter().map(|p| p.lipschitz).fold(0.0, f64::max);
            let lipschitz_sampled = samples.iter().any(|p| p.sampled);
            let bound_thm9 = stability_bounds(FunctionClass::Convex, gamma, lipschitz, config.budget, config.n, None)?;
            let bound_thm10 = match config.class {
                FunctionClass::StronglyConvex => stability_bounds(config.class, gamma, lipschitz, config.budget, config.n, config.lambda)?,
                _ => f64::INFINITY,
            };
            Ok(StabilityReport {
                batch,
                gamma,
                budget: config.budget,
                n: config.n,
                seeds,
                mean_dist,
                stderr_dist,
                mean_norm_dist,
                eps_stab,
                lipschitz,
                lipschitz_sampled,
                distance_bound: distance_bound(gamma, lipschitz, config.budget, config.n),
                bound_thm9,
                bound_thm10,
                eta,
                cond_ok: eta == 0.0,
            })
        })
        .collect()
}

pub fn reports_table(reports: &[StabilityReport]) -> Table {
    let mut t = Table::new(&[
        "B",
        "gamma",
        "T",
        "n",
        "mean_dist",
        "stderr_dist",
        "mean_norm_dist",
        "bound_thm9",
        "bound_thm10",
        "cond_ok",
    ]);
    for r in reports {
        t.push(crate::cells![
            r.batch,
            r.gamma,
            r.budget,
            r.n,
            r.mean_dist,
            r.stderr_dist,
            r.mean_norm_dist,
            r.bound_thm9,
            r.bound_thm10,
            r.cond_ok
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn logistic_generator() -> DataGenerator {
        DataGenerator::Gaussian {
            d: 5,
            sigma: 1.0,
            labels: LabelRule::NoisySeparator { flip: 0.1 },
        }
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(step_size_threshold(2.0, None, 1, 5.0, 10).unwrap(), 1.0);
        assert_eq!(step_size_threshold(2.0, Some(0.5), 1, 5.0, 10).unwrap(), 2.0 / 2.5);
        let t = step_size_threshold(2.0, None, 3, 4.0, 101).unwrap();
        assert!((t - 2.0 / (2.0 * 1.51)).abs() < 1e-15);
        assert!(step_size_threshold(2.0, None, 3, 0.5, 101).is_err());
        assert!(step_size_threshold(2.0, None, 3, 4.0, 1).is_err());
    }

    #[test]
    fn bound_arithmetic() {
        let b = stability_bounds(FunctionClass::Convex, 0.01, 1.0, 1000, 100, None).unwrap();
        assert!((b - 0.2).abs() < 1e-15);
        let b = stability_bounds(FunctionClass::StronglyConvex, 0.01, 1.0, 1000, 100, Some(0.5)).unwrap();
        assert!((b - 0.08).abs() < 1e-15);
        for class in [FunctionClass::Convex, FunctionClass::StronglyConvex] {
            assert_eq!(
                corollary_bound(class, 0.01, 1.0, 1000, 100, Some(0.5), 0.0).unwrap(),
                stability_bounds(class, 0.01, 1.0, 1000, 100, Some(0.5)).unwrap()
            );
        }
        assert!(stability_bounds(FunctionClass::Pl, 0.01, 1.0, 10, 10, None).is_err());
    }

    #[test]
    fn coupled_sample_is_deterministic_and_differs_in_one_row() {
        let g = logistic_generator();
        let a = make_coupled_sample(&g, 20, 4).unwrap();
        assert_eq!(a, make_coupled_sample(&g, 20, 4).unwrap());
        let diff = (0..20).filter(|&i| a.s.row(i) != a.s_prime.row(i)).count();
        assert_eq!(diff, 1);
        assert_ne!(a.s.row(a.i_replaced), a.s_prime.row(a.i_replaced));
    }

    #[test]
    fn identical_pair_and_empty_budget_give_zero() {
        let g = logistic_generator();
        let s = g.generate(15, 2).unwrap();
        let pair = CoupledSample::identical(s, 3).unwrap();
        let cfg = SgdConfig::new(0.5, 4, 200, 1);
        let run = coupled_sgd(&LossModel::Logistic, &pair, &cfg, None, Array1::zeros(5).view()).unwrap();
        assert_eq!(run.terminal_distance(), 0.0);
        let real = make_coupled_sample(&g, 15, 2).unwrap();
        let run = coupled_sgd(
            &LossModel::Logistic,
            &real,
            &SgdConfig::new(0.5, 4, 0, 1),
            None,
            Array1::zeros(5).view(),
        )
        .unwrap();
        assert_eq!(run.distances, vec![0.0]);
    }

    #[test]
    fn untouched_prefix_is_identical() {
        let g = logistic_generator();
        let pair = make_coupled_sample(&g, 30, 8).unwrap();
        let run = coupled_sgd(
            &LossModel::Logistic,
            &pair,
            &SgdConfig::new(0.2, 2, 300, 3),
            None,
            Array1::zeros(5).view(),
        )
        .unwrap();
        let first = run.touched.iter().position(|&t| t).unwrap_or(run.touched.len());
        assert!(run.distances[..=first].iter().all(|&d| d == 0.0));
    }

    #[test]
    fn coupled_run_matches_single_runs() {
        let g = logistic_generator();
        let pair = make_coupled_sample(&g, 12, 5).unwrap();
        let kind = DimKind::Dropout { p: 0.3 };
        let cfg = SgdConfig::new(0.1, 3, 60, 11);
        let run = coupled_sgd(&LossModel::Logistic, &pair, &cfg, Some(&kind), Array1::zeros(5).view()).unwrap();
        let a = crate::dims::run_sgd_with_dim(&LossModel::Logistic, &pair.s, &cfg, &kind, Array1::zeros(5).view()).unwrap();
        let b = crate::dims::run_sgd_with_dim(&LossModel::Logistic, &pair.s_prime, &cfg, &kind, Array1::zeros(5).view()).unwrap();
        assert_eq!(a.final_w.unwrap(), run.w);
        assert_eq!(b.final_w.unwrap(), run.w_tilde);
    }

    #[test]
    fn normalized_distance_range() {
        assert_eq!(normalized_distance(array![0.0].view(), array![0.0].view()), 0.0);
        assert_eq!(normalized_distance(array![1.0].view(), array![-1.0].view()), 1.0);
        assert!((normalized_distance(array![1.0, 0.0].view(), array![0.0, 1.0].view()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lipschitz_sampling() {
        let (model, data, space) = problems::gen_lowerbound_instance(6, 1.5).unwrap();
        let l = lipschitz_estimate(&model, &data, &space, 2000, &mut rng::seeded(1)).unwrap();
        assert!(l > 0.0 && l <= 3.0 + 1e-12);
        let short = lipschitz_estimate(&model, &data, &space, 100, &mut rng::seeded(1)).unwrap();
        assert!(short <= l);
        assert!(lipschitz_estimate(&model, &data, &ParamSpace::Unconstrained, 10, &mut rng::seeded(1)).is_err());
    }

    #[test]
    fn sweep_control_column_is_zero() {
        let cfg = StabilityConfig {
            n: 20,
            budget: 100,
            gamma: GammaRule::ThresholdFraction(0.9),
            class: FunctionClass::Convex,
            lambda: None,
            beta: None,
            lipschitz: None,
            space: ParamSpace::Unconstrained,
            mechanism: None,
            identical: true,
        };
        let r = stability_sweep(&LossModel::Logistic, &logistic_generator(), &[1, 4], &cfg, 6, 3).unwrap();
        assert!(r.iter().all(|r| r.mean_dist == 0.0 && r.mean_norm_dist == 0.0 && r.cond_ok));
        assert_eq!(reports_table(&r).rows.len(), 2);
    }
}

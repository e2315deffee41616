//! r-replication sweep: loss ratio of a large batch to a small batch at equal
//! gradient budget, each with its own tuned step size.

use graddiv::error::{invalid, Error, Result};
use graddiv::io::Table;
use graddiv::problems::{replicate_dataset, Dataset, LossModel};
use graddiv::rng;
use graddiv::sgd::{run_sgd, tuned_step_size, ClassParams, FunctionClass, SgdConfig};
use ndarray::Array1;
use rayon::prelude::*;
use serde::Serialize;

/// Exponents `k` of the step-size grid `γ₀·2^k`.
pub const GRID_EXPONENTS: std::ops::RangeInclusive<i32> = -4..=4;

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationConfig {
    pub r_grid: Vec<usize>,
    pub b_small: usize,
    pub b_large: usize,
    /// Gradient budget per run.
    pub budget: usize,
    /// Target accuracy feeding the base step size `γ₀ = ε/M²(0)`.
    pub epsilon: f64,
    pub seeds: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationRow {
    pub r: usize,
    pub gamma_small: f64,
    pub gamma_large: f64,
    pub loss_small: f64,
    pub loss_large: f64,
    pub ratio: f64,
}

/// Mean final training loss over seeds, or `None` when some run blew up.
fn mean_loss(model: &LossModel, data: &Dataset, gamma: f64, batch: usize, cfg: &ReplicationConfig) -> Result<Option<f64>> {
    let w0 = Array1::<f64>::zeros(data.d());
    let losses: Vec<f64> = (0..cfg.seeds)
        .into_par_iter()
        .map(|s| {
            let seed = rng::derive_seed(cfg.seed, s as u64);
            run_sgd(model, data, &SgdConfig::new(gamma, batch, cfg.budget, seed), w0.view()).map(|t| t.last().loss)
        })
        .collect::<Result<_>>()?;
    let mean = losses.iter().sum::<f64>() / losses.len() as f64;
    Ok(mean.is_finite().then_some(mean))
}

/// Best `(γ, mean loss)` over the grid.
fn tune(model: &LossModel, data: &Dataset, gamma0: f64, batch: usize, cfg: &ReplicationConfig) -> Result<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for k in GRID_EXPONENTS {
        let gamma = gamma0 * 2f64.powi(k);
        if let Some(loss) = mean_loss(model, data, gamma, batch, cfg)? {
            if best.is_none_or(|(_, l)| loss < l) {
                best = Some((gamma, loss));
            }
        }
    }
    best.ok_or_else(|| Error::Degenerate(format!("every step size diverged for B = {batch}")))
}

/// Logistic-regression replication sweep over `cfg.r_grid`.
pub fn replication_sweep(data: &Dataset, cfg: &ReplicationConfig) -> Result<Vec<ReplicationRow>> {
    if cfg.seeds == 0 {
        return Err(invalid("seeds", "must be at least 1"));
    }
    if cfg.b_small == 0 || cfg.b_large == 0 {
        return Err(invalid("batch", "batch sizes must be at least 1"));
    }
    if let Some(&r) = cfg.r_grid.iter().find(|&&r| r == 0 || !data.n().is_multiple_of(r)) {
        return Err(invalid("r", format!("r = {r} does not divide n = {}", data.n())));
    }
    let model = LossModel::Logistic;
    let m2 = graddiv::gradient_diversity(&model, data, Array1::zeros(data.d()).view())?.m2;
    let gamma0 = tuned_step_size(FunctionClass::Convex, cfg.epsilon, &ClassParams { m2, ..Default::default() }, None)?;
    cfg.r_grid
        .iter()
        .map(|&r| {
            let replicated = replicate_dataset(data, r, rng::derive_seed(cfg.seed ^ 0xA5A5, r as u64))?;
            let (gamma_small, loss_small) = tune(&model, &replicated, gamma0, cfg.b_small, cfg)?;
            let (gamma_large, loss_large) = tune(&model, &replicated, gamma0, cfg.b_large, cfg)?;
            Ok(ReplicationRow {
                r,
                gamma_small,
                gamma_large,
                loss_small,
                loss_large,
                ratio: loss_large / loss_small,
            })
        })
        .collect()
}

pub fn rows_table(rows: &[ReplicationRow]) -> Table {
    let mut t = Table::new(&["r", "gamma_small", "gamma_large", "loss_small", "loss_large", "ratio"]);
    for row in rows {
        t.push(graddiv::cells![
            row.r,
            row.gamma_small,
            row.gamma_large,
            row.loss_small,
            row.loss_large,
            row.ratio
        ]);
    }
    t
}

//! Subcommand implementations.

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufReader;
use std::time::Instant;

use graddiv::dims::{self, DimKind};
use graddiv::diversity::{self, glm_bound};
use graddiv::io::Table;
use graddiv::lowerbound;
use graddiv::problems::{self, Dataset, LabelRule, LossModel, ParamSpace};
use graddiv::rng;
use graddiv::sgd::{self, ClassParams, FunctionClass, ParityProblem, SgdConfig};
use graddiv::stability::{self, DataGenerator, GammaRule, StabilityConfig};
use ndarray::Array1;
use serde_json::{json, Value};

use crate::config::{Config, ConfigError};
use crate::manifest::OutputDir;
use crate::replication::{self, ReplicationConfig, GRID_EXPONENTS};

pub const SUBCOMMANDS: [&str; 8] = [
    "gen-data",
    "diversity",
    "sgd-run",
    "parity",
    "replication-sweep",
    "dims",
    "stability",
    "lowerbound",
];

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<graddiv::Error> for CliError {
    fn from(e: graddiv::Error) -> Self {
        use graddiv::Error::*;
        match e {
            InvalidParameter { .. }
            | Parse(_)
            | UnsupportedModel(_)
            | Infeasible(_)
            | DimensionMismatch { .. }
            | EnumerationTooLarge { .. } => CliError::Config(e.to_string()),
            IndexOutOfRange { .. } | Degenerate(_) => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type Outcome = Result<(Value, BTreeMap<String, Value>), CliError>;

/// Runs `command` with `args` (everything after the subcommand).
pub fn dispatch(command: &str, args: &[String]) -> Result<(), CliError> {
    let config = Config::from_args(args)?;
    let mut keys: Vec<&str> = vec!["out"];
    keys.extend_from_slice(allowed_keys(command).ok_or_else(|| CliError::Config(usage_for(command)))?);
    config.check_keys(&keys)?;
    let start = Instant::now();
    let mut out = OutputDir::create(&config.out_dir())?;
    let (summary, notes) = match command {
        "gen-data" => gen_data(&config, &mut out),
        "diversity" => diversity_cmd(&config, &mut out),
        "sgd-run" => sgd_run(&config, &mut out),
        "parity" => parity(&config, &mut out),
        "replication-sweep" => replication_sweep(&config, &mut out),
        "dims" => dims_cmd(&config, &mut out),
        "stability" => stability_cmd(&config, &mut out),
        "lowerbound" => lowerbound_cmd(&config, &mut out),
        _ => unreachable!("allowed_keys rejects unknown commands"),
    }?;
    out.finish(command, config.entries(), &summary, notes, start.elapsed().as_secs_f64())?;
    Ok(())
}

fn usage_for(command: &str) -> String {
    format!("unknown subcommand `{command}`\n{}", usage())
}

pub fn usage() -> String {
    format!(
        "usage: graddiv <subcommand> [--config file] [--key value ...]\nsubcommands: {}",
        SUBCOMMANDS.join(", ")
    )
}

fn allowed_keys(command: &str) -> Option<&'static [&'static str]> {
    Some(match command {
        "gen-data" => &["kind", "n", "d", "sigma", "flip", "lambda", "rho", "r", "seed"],
        "diversity" => &["data", "model", "lambda", "w"],
        "sgd-run" => &[
            "data",
            "model",
            "lambda",
            "w",
            "gamma",
            "batch",
            "budget",
            "seed",
            "record-every",
            "radius",
            "dim",
            "dim-param",
        ],
        "parity" => &["n", "d", "data-seed", "class", "epsilon", "delta", "seeds", "seed"],
        "replication-sweep" => &[
            "n",
            "d",
            "flip",
            "data-seed",
            "r-grid",
            "b-small",
            "b-large",
            "budget",
            "epsilon",
            "seeds",
            "seed",
        ],
        "dims" => &["data", "model", "lambda", "w", "trials", "p-grid", "sigma2-grid", "seed"],
        "stability" => &[
            "n",
            "d",
            "sigma",
            "flip",
            "budget",
            "b-grid",
            "gamma-rule",
            "gamma",
            "seeds",
            "seed",
            "identical",
            "dim",
            "dim-param",
        ],
        "lowerbound" => &[
            "n",
            "lambda",
            "gamma",
            "deltas",
            "budget",
            "seeds",
            "seed",
            "divergence-batch",
            "trials",
            "steps",
        ],
        _ => return None,
    })
}

fn write_table(out: &mut OutputDir, name: &str, table: &Table) -> Result<(), CliError> {
    out.write(name, table.to_csv_string().as_bytes())?;
    Ok(())
}

fn load_data(config: &Config) -> Result<Dataset, CliError> {
    let path: String = config.require("data")?;
    let file = std::fs::File::open(&path).map_err(|e| CliError::Config(format!("cannot open data `{path}`: {e}")))?;
    Ok(Dataset::read_csv(BufReader::new(file))?)
}

fn parse_model(config: &Config) -> Result<LossModel, CliError> {
    let name: String = config.get("model", "logistic".to_string())?;
    Ok(match name.as_str() {
        "logistic" => LossModel::Logistic,
        "least-squares" => LossModel::LeastSquares,
        "quadratic" => LossModel::QuadraticDistance {
            lambda: config.get("lambda", 1.0)?,
        },
        other => {
            return Err(CliError::Config(format!(
                "invalid value `{other}` for `model`: expected logistic, least-squares or quadratic"
            )))
        }
    })
}

fn parse_w(config: &Config, key: &str, d: usize) -> Result<Array1<f64>, CliError> {
    match config.raw(key) {
        None | Some("zeros") => Ok(Array1::zeros(d)),
        Some(_) => {
            let w: Vec<f64> = config.list(key, &[])?;
            if w.len() != d {
                return Err(CliError::Config(format!("`{key}` has {} entries, data has d = {d}", w.len())));
            }
            Ok(Array1::from(w))
        }
    }
}

fn parse_dim(config: &Config) -> Result<Option<DimKind>, CliError> {
    let name: String = config.get("dim", "none".to_string())?;
    let kind = match name.as_str() {
        "none" => return Ok(None),
        "dropout" => DimKind::Dropout {
            p: config.require("dim-param")?,
        },
        "sgld" => DimKind::Sgld {
            sigma2: config.require("dim-param")?,
        },
        "quantize" => DimKind::Quantize,
        other => {
            return Err(CliError::Config(format!(
                "invalid value `{other}` for `dim`: expected none, dropout, sgld or quantize"
            )))
        }
    };
    kind.validate()?;
    Ok(Some(kind))
}

fn label_rule(flip: f64) -> LabelRule {
    if flip > 0.0 {
        LabelRule::NoisySeparator { flip }
    } else {
        LabelRule::Separator
    }
}

fn gen_data(config: &Config, out: &mut OutputDir) -> Outcome {
    let kind: String = config.get("kind", "gaussian".to_string())?;
    let n: usize = config.get("n", 100)?;
    let d: usize = config.get("d", 10)?;
    let seed: u64 = config.get("seed", 0)?;
    let flip: f64 = config.get("flip", 0.0)?;
    let data = match kind.as_str() {
        "gaussian" => problems::gen_gaussian_dataset_with(n, d, config.get("sigma", 1.0)?, label_rule(flip), seed)?,
        "rademacher" => problems::gen_rademacher_dataset_with(n, d, label_rule(flip), seed)?,
        "lowerbound" => problems::gen_lowerbound_instance(n, config.get("lambda", 1.0)?)?.1,
        "sparse" => problems::gen_sparse_conflict(n, d, config.get("rho", 0)?, seed)?.1,
        other => {
            return Err(CliError::Config(format!(
                "invalid value `{other}` for `kind`: expected gaussian, rademacher, lowerbound or sparse"
            )))
        }
    };
    let r: usize = config.get("r", 1)?;
    let data = if r > 1 {
        problems::replicate_dataset(&data, r, rng::derive_seed(seed, r as u64))?
    } else {
        data
    };
    let mut buf = Vec::new();
    data.write_csv(&mut buf)?;
    out.write("data.csv", &buf)?;
    println!("wrote {} rows x {} features", data.n(), data.d());
    Ok((json!({ "kind": kind, "n": data.n(), "d": data.d(), "r": r }), BTreeMap::new()))
}

fn diversity_cmd(config: &Config, out: &mut OutputDir) -> Outcome {
    let data = load_data(config)?;
    let model = parse_model(config)?;
    let w = parse_w(config, "w", data.d())?;
    let stats = diversity::gradient_diversity(&model, &data, w.view())?;
    write_table(out, "stats.csv", &diversity::stats_table(&stats))?;
    println!("bs={}", graddiv::io::fmt_f64(stats.bs));
    let glm = model.is_generalized_linear().then(|| glm_bound(&data));
    if let Some(g) = &glm {
        println!("glm_bound={}", graddiv::io::fmt_f64(g.value));
    }
    Ok((json!({ "stats": stats, "glm_bound": glm }), BTreeMap::new()))
}

fn sgd_run(config: &Config, out: &mut OutputDir) -> Outcome {
    let data = load_data(config)?;
    let model = parse_model(config)?;
    let w0 = parse_w(config, "w", data.d())?;
    let space = match config.optional::<f64>("radius")? {
        Some(r) => ParamSpace::l2_ball(r)?,
        None => ParamSpace::Unconstrained,
    };
    let sgd_config = SgdConfig::new(
        config.get("gamma", 0.01)?,
        config.get("batch", 1)?,
        config.get("budget", data.n())?,
        config.get("seed", 0)?,
    )
    .with_space(space)
    .with_record_every(config.get("record-every", 1)?);
    let trajectory = match parse_dim(config)? {
        Some(kind) => dims::run_sgd_with_dim(&model, &data, &sgd_config, &kind, w0.view())?,
        None => sgd::run_sgd(&model, &data, &sgd_config, w0.view())?,
    };
    write_table(out, "trajectory.csv", &trajectory.to_table())?;
    let last = trajectory.last();
    println!(
        "final loss={} bs={}",
        graddiv::io::fmt_f64(last.loss),
        graddiv::io::fmt_f64(last.stats.bs)
    );
    Ok((
        json!({ "iterations": last.k, "gradient_updates": last.n_k, "final_loss": last.loss, "final_bs": last.stats.bs }),
        BTreeMap::new(),
    ))
}

fn parity(config: &Config, out: &mut OutputDir) -> Outcome {
    let n: usize = config.get("n", 200)?;
    let d: usize = config.get("d", 10)?;
    let class: FunctionClass = config.get::<String>("class", "strongly-convex".into())?.parse()?;
    let data = problems::gen_rademacher_dataset(n, d, config.get("data-seed", 1)?)?;
    let w_star = problems::least_squares_optimum(&data)?;
    let lambda = problems::least_squares_strong_convexity(&data);
    let beta = problems::least_squares_smoothness(&data);
    let f_star = LossModel::LeastSquares.full_loss(&data, w_star.view())?;
    let problem = ParityProblem {
        model: LossModel::LeastSquares,
        data,
        class,
        params: ClassParams {
            lambda: Some(lambda),
            beta: Some(beta),
            mu: Some(lambda),
            m2: 0.0,
        },
        w0: Array1::zeros(d),
        w_star: Some(w_star),
        f_star: Some(f_star),
    };
    let epsilon: f64 = config.get("epsilon", 0.05)?;
    let seeds: usize = config.get("seeds", 200)?;
    let seed: u64 = config.get("seed", 0)?;
    let mut table = Table::new(&[
        "class",
        "B",
        "delta",
        "gamma",
        "T",
        "serial_mean",
        "minibatch_mean",
        "ratio",
        "seeds",
    ]);
    let mut reports = Vec::new();
    for delta in config.list::<f64>("delta", &[0.0, 1.0])? {
        let r = sgd::convergence_parity_experiment(&problem, epsilon, delta, seeds, seed)?;
        table.push(graddiv::cells![
            class.as_str(),
            r.batch,
            r.delta,
            r.gamma,
            r.budget,
            r.serial_mean,
            r.minibatch_mean,
            r.ratio,
            r.seeds
        ]);
        println!("delta={} B={} ratio={}", r.delta, r.batch, graddiv::io::fmt_f64(r.ratio));
        reports.push(r);
    }
    write_table(out, "parity.csv", &table)?;
    Ok((json!({ "reports": reports, "lambda": lambda, "beta": beta }), BTreeMap::new()))
}

fn replication_sweep(config: &Config, out: &mut OutputDir) -> Outcome {
    let n: usize = config.get("n", 1024)?;
    let d: usize = config.get("d", 200)?;
    let flip: f64 = config.get("flip", 0.1)?;
    let data = problems::gen_gaussian_dataset_with(n, d, 1.0 / (d as f64).sqrt(), label_rule(flip), config.get("data-seed", 1)?)?;
    let cfg = ReplicationConfig {
        r_grid: config.list("r-grid", &[1, 2, 4, 8])?,
        b_small: config.get("b-small", 8)?,
        b_large: config.get("b-large", 128)?,
        budget: config.get("budget", n / 2)?,
        epsilon: config.get("epsilon", 0.4)?,
        seeds: config.get("seeds", 20)?,
        seed: config.get("seed", 0)?,
    };
    let rows = replication::replication_sweep(&data, &cfg)?;
    write_table(out, "replication.csv", &replication::rows_table(&rows))?;
    for r in &rows {
        println!("r={} ratio={}", r.r, graddiv::io::fmt_f64(r.ratio));
    }
    let mut notes = BTreeMap::new();
    notes.insert(
        "gamma_grid".into(),
        json!({ "rule": "gamma0 * 2^k", "k_min": GRID_EXPONENTS.start(), "k_max": GRID_EXPONENTS.end(), "gamma0": "epsilon / M^2(0)" }),
    );
    Ok((json!({ "rows": rows }), notes))
}

fn dims_cmd(config: &Config, out: &mut OutputDir) -> Outcome {
    let data = load_data(config)?;
    let model = parse_model(config)?;
    let w = parse_w(config, "w", data.d())?;
    let trials: usize = config.get("trials", 2000)?;
    let seed: u64 = config.get("seed", 0)?;
    let mut kinds: Vec<DimKind> = Vec::new();
    kinds.extend(config.list("p-grid", &[0.1, 0.5])?.into_iter().map(|p| DimKind::Dropout { p }));
    kinds.extend(
        config
            .list("sigma2-grid", &[0.1, 1.0])?
            .into_iter()
            .map(|sigma2| DimKind::Sgld { sigma2 }),
    );
    kinds.push(DimKind::Quantize);
    let bs = diversity::gradient_diversity(&model, &data, w.view())?.bs;
    let mut table = Table::new(&["kind", "param", "bs", "bs_dim_analytic", "bs_dim_mc", "mc_stderr"]);
    for (idx, kind) in kinds.iter().enumerate() {
        let analytic = dims::dim_batch_bound_analytic(&model, &data, w.view(), kind)?;
        let mut r = rng::stream(rng::derive_seed(seed, idx as u64), rng::MECHANISM_STREAM);
        let mc = dims::dim_batch_bound_mc(&model, &data, w.view(), kind, trials, &mut r)?;
        table.push(graddiv::cells![kind.name(), kind.param(), bs, analytic.value, mc.value, mc.stderr]);
    }
    write_table(out, "dims.csv", &table)?;
    println!("bs={} mechanisms={}", graddiv::io::fmt_f64(bs), kinds.len());
    Ok((json!({ "bs": bs, "mechanisms": kinds }), BTreeMap::new()))
}

fn stability_cmd(config: &Config, out: &mut OutputDir) -> Outcome {
    let d: usize = config.get("d", 10)?;
    let generator = DataGenerator::Gaussian {
        d,
        sigma: config.get("sigma", 1.0 / (d as f64).sqrt())?,
        labels: label_rule(config.get("flip", 0.1)?),
    };
    let rule: String = config.get("gamma-rule", "threshold".to_string())?;
    let gamma = match rule.as_str() {
        "threshold" => GammaRule::ThresholdFraction(config.get("gamma", 0.9)?),
        "fixed" => GammaRule::Fixed(config.require("gamma")?),
        other => {
            return Err(CliError::Config(format!(
                "invalid value `{other}` for `gamma-rule`: expected threshold or fixed"
            )))
        }
    };
    let n: usize = config.get("n", 100)?;
    let stab = StabilityConfig {
        n,
        budget: config.get("budget", 20 * n)?,
        gamma,
        class: FunctionClass::Convex,
        lambda: None,
        beta: None,
        lipschitz: None,
        space: ParamSpace::Unconstrained,
        mechanism: parse_dim(config)?,
        identical: config.get("identical", false)?,
    };
    let reports = stability::stability_sweep(
        &LossModel::Logistic,
        &generator,
        &config.list("b-grid", &[1, 8])?,
        &stab,
        config.get("seeds", 100)?,
        config.get("seed", 0)?,
    )?;
    write_table(out, "stability.csv", &stability::reports_table(&reports))?;
    for r in &reports {
        println!(
            "B={} mean_dist={} bound={}",
            r.batch,
            graddiv::io::fmt_f64(r.mean_dist),
            graddiv::io::fmt_f64(r.distance_bound)
        );
    }
    Ok((json!({ "reports": reports }), BTreeMap::new()))
}

fn lowerbound_cmd(config: &Config, out: &mut OutputDir) -> Outcome {
    let n: usize = config.get("n", 8)?;
    let lambda: f64 = config.get("lambda", 1.0)?;
    let gamma: f64 = config.get("gamma", 1.0 / 18.0)?;
    let seed: u64 = config.get("seed", 0)?;
    let default_budget = (20.0 / (lambda * gamma)).ceil() as usize;
    let report = lowerbound::floor_experiment(
        n,
        lambda,
        gamma,
        &config.list("deltas", &[0.5, 1.0, 2.0, 4.0])?,
        config.get("budget", default_budget)?,
        config.get("seeds", 500)?,
        seed,
    )?;
    write_table(out, "floor.csv", &report.to_table())?;
    let batch: usize = config.get("divergence-batch", (2.0 / (gamma * lambda)).ceil() as usize + 1)?;
    let w = Array1::from(vec![0.5, 0.0]);
    let divergence = lowerbound::divergence_check(
        n,
        lambda,
        gamma,
        batch,
        w.view(),
        config.get("trials", 10_000)?,
        config.get("steps", 50)?,
        rng::derive_seed(seed, 1 << 40),
    )?;
    println!(
        "band={} monotone={} divergence_sigmas={}",
        graddiv::io::fmt_f64(report.ratio_band()),
        report.monotone(),
        graddiv::io::fmt_f64(divergence.excess_sigmas)
    );
    Ok((
        json!({ "floor": report, "ratio_band": report.ratio_band(), "monotone": report.monotone(), "divergence": divergence }),
        BTreeMap::new(),
    ))
}

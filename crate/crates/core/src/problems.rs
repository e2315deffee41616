//! Datasets, per-example loss models, synthetic generators and r-replication.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use ndarray::{Array1, Array2, ArrayView1, ArrayViewMut1};
use rand::seq::index::sample;
use rand::Rng as _;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::io::fmt_f64;
use crate::linalg::{dist2, norm2_sq};
use crate::rng;

/// A sample `S = {z_1, …, z_n}`: an `n × d` feature matrix plus labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Array1<f64>,
}

impl Dataset {
    pub fn new(features: Array2<f64>, labels: Array1<f64>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.nrows(),
                got: labels.len(),
            });
        }
        if features.nrows() == 0 || features.ncols() == 0 {
            return Err(invalid("dataset", "needs at least one row and one column"));
        }
        if !features.iter().chain(labels.iter()).all(|v| v.is_finite()) {
            return Err(invalid("dataset", "entries must be finite"));
        }
        Ok(Self { features, labels })
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &Array1<f64> {
        &self.labels
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    /// Copy of the dataset with example `i` replaced by `(x, y)`.
    pub fn with_replaced(&self, i: usize, x: ArrayView1<f64>, y: f64) -> Result<Self> {
        self.check_index(i)?;
        self.check_dim(x.len())?;
        let mut out = self.clone();
        out.features.row_mut(i).assign(&x);
        out.labels[i] = y;
        Ok(out)
    }

    /// Sub-dataset built from the given row indices (repeats allowed).
    pub fn select(&self, rows: &[usize]) -> Self {
        let mut features = Array2::zeros((rows.len(), self.d()));
        let mut labels = Array1::zeros(rows.len());
        for (k, &i) in rows.iter().enumerate() {
            features.row_mut(k).assign(&self.features.row(i));
            labels[k] = self.labels[i];
        }
        Self { features, labels }
    }

    pub fn min_row_norm2(&self) -> f64 {
        self.features.rows().into_iter().map(|r| norm2_sq(r)).fold(f64::INFINITY, f64::min)
    }

    pub fn max_row_norm(&self) -> f64 {
        self.features.rows().into_iter().map(|r| norm2_sq(r).sqrt()).fold(0.0, f64::max)
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n() {
            return Err(Error::IndexOutOfRange { index: i, n: self.n() });
        }
        Ok(())
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.d() {
            return Err(Error::DimensionMismatch { expected: self.d(), got });
        }
        Ok(())
    }

    /// Writes `f0,…,f{d-1},label` CSV with round-trip float formatting.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut line = String::new();
        for j in 0..self.d() {
            let _ = write!(line, "f{j},");
        }
        line.push_str("label\n");
        out.write_all(line.as_bytes())?;
        for i in 0..self.n() {
            line.clear();
            for v in self.features.row(i) {
                line.push_str(&fmt_f64(*v));
                line.push(',');
            }
            line.push_str(&fmt_f64(self.labels[i]));
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty file".into()))?
            .map_err(|e| Error::Parse(e.to_string()))?;
        let cols: Vec<&str> = header.trim().split(',').collect();
        let d = cols.len().saturating_sub(1);
        let expected_ok = d >= 1 && cols[d] == "label" && cols[..d].iter().enumerate().all(|(j, c)| *c == format!("f{j}"));
        if !expected_ok {
            return Err(Error::Parse(format!("unexpected header `{}`", header.trim())));
        }
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != d + 1 {
                return Err(Error::Parse(format!(
                    "row {} has {} fields, expected {}",
                    lineno + 2,
                    fields.len(),
                    d + 1
                )));
            }
            for (j, f) in fields.iter().enumerate() {
                let v: f64 = f
                    .parse()
                    .map_err(|_| Error::Parse(format!("row {}: bad number `{f}`", lineno + 2)))?;
                if j < d {
                    values.push(v);
                } else {
                    labels.push(v);
                }
            }
        }
        let n = labels.len();
        let features = Array2::from_shape_vec((n, d), values).map_err(|e| Error::Parse(e.to_string()))?;
        Self::new(features, Array1::from(labels))
    }
}

/// Per-example loss `f_i(w) = f(w; z_i)`.
#[derive(Debug, Clone, PartialEq)]
pub enum LossModel {
    /// `½(xᵢᵀw − yᵢ)²`.
    LeastSquares,
    /// `log(1 + exp(−yᵢ xᵢᵀw))` with labels ±1.
    Logistic,
    /// `(λ/2)‖w − xᵢ‖²`; labels are ignored.
    QuadraticDistance { lambda: f64 },
    /// Least squares restricted to a per-example coordinate support.
    SparseConflict { supports: Vec<Vec<usize>> },
}

impl LossModel {
    pub fn name(&self) -> &'static str {
        match self {
            LossModel::LeastSquares => "least-squares",
            LossModel::Logistic => "logistic",
            LossModel::QuadraticDistance { .. } => "quadratic-distance",
            LossModel::SparseConflict { .. } => "sparse-conflict",
        }
    }

    /// Generalized linear models have gradients `ℓ′ᵢ(xᵢᵀw)·xᵢ`.
    pub fn is_generalized_linear(&self) -> bool {
        matches!(self, LossModel::LeastSquares | LossModel::Logistic)
    }

    pub(crate) fn check(&self, data: &Dataset, w: ArrayView1<f64>) -> Result<()> {
        data.check_dim(w.len())?;
        match self {
            LossModel::QuadraticDistance { lambda } if !(lambda.is_finite() && *lambda > 0.0) => {
                Err(invalid("lambda", "must be finite and positive"))
            }
            LossModel::SparseConflict { supports } => {
                if supports.len() != data.n() {
                    return Err(Error::DimensionMismatch {
                        expected: data.n(),
                        got: supports.len(),
                    });
                }
                if supports.iter().flatten().any(|&c| c >= data.d()) {
                    return Err(invalid("supports", "coordinate outside feature dimension"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `f_i(w)`.
    pub fn loss(&self, data: &Dataset, i: usize, w: ArrayView1<f64>) -> Result<f64> {
        data.check_index(i)?;
        self.check(data, w)?;
        Ok(self.loss_unchecked(data, i, w))
    }

    /// `∇f_i(w)`.
    pub fn gradient(&self, data: &Dataset, i: usize, w: ArrayView1<f64>) -> Result<Array1<f64>> {
        data.check_index(i)?;
        self.check(data, w)?;
        let mut g = Array1::zeros(data.d());
        self.gradient_into(data, i, w, g.view_mut());
        Ok(g)
    }

    /// `F(w) = (1/n)∑ f_i(w)`.
    pub fn full_loss(&self, data: &Dataset, w: ArrayView1<f64>) -> Result<f64> {
        self.check(data, w)?;
        let total: f64 = (0..data.n()).map(|i| self.loss_unchecked(data, i, w)).sum();
        Ok(total / data.n() as f64)
    }

    /// `∇F(w) = (1/n)∑ ∇f_i(w)`.
    pub fn full_gradient(&self, data: &Dataset, w: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check(data, w)?;
        let mut sum = Array1::zeros(data.d());
        let mut g = Array1::zeros(data.d());
        for i in 0..data.n() {
            g.fill(0.0);
            self.gradient_into(data, i, w, g.view_mut());
            sum += &g;
        }
        sum /= data.n() as f64;
        Ok(sum)
    }

    /// All per-example gradients as an `n × d` matrix.
    pub fn gradients(&self, data: &Dataset, w: ArrayView1<f64>) -> Result<Array2<f64>> {
        self.check(data, w)?;
        let mut out = Array2::zeros((data.n(), data.d()));
        for i in 0..data.n() {
            self.gradient_into(data, i, w, out.row_mut(i));
        }
        Ok(out)
    }

    pub(crate) fn loss_unchecked(&self, data: &Dataset, i: usize, w: ArrayView1<f64>) -> f64 {
        let x = data.row(i);
        let y = data.label(i);
        match self {
            LossModel::LeastSquares => 0.5 * (x.dot(&w) - y).powi(2),
            LossModel::Logistic => softplus(-y * x.dot(&w)),
            LossModel::QuadraticDistance { lambda } => 0.5 * lambda * dist2(w, x),
            LossModel::SparseConflict { supports } => {
                let z: f64 = supports[i].iter().map(|&c| x[c] * w[c]).sum();
                0.5 * (z - y).powi(2)
            }
        }
    }

    /// Overwrites `out` with `∇f_i(w)`. Inputs must already be validated.
    pub(crate) fn gradient_into(&self, data: &Dataset, i: usize, w: ArrayView1<f64>, mut out: ArrayViewMut1<f64>) {
        let x = data.row(i);
        let y = data.label(i);
        match self {
            LossModel::LeastSquares => {
                let a = x.dot(&w) - y;
                out.zip_mut_with(&x, |o, &xv| *o = a * xv);
            }
            LossModel::Logistic => {
                let a = -y * sigmoid(-y * x.dot(&w));
                out.zip_mut_with(&x, |o, &xv| *o = a * xv);
            }
            LossModel::QuadraticDistance { lambda } => {
                out.assign(&w);
                out -= &x;
                out *= *lambda;
            }
            LossModel::SparseConflict { supports } => {
                out.fill(0.0);
                let support = &supports[i];
                let a = support.iter().map(|&c| x[c] * w[c]).sum::<f64>() - y;
                for &c in support {
                    out[c] = a * x[c];
                }
            }
        }
    }
}

/// `log(1 + eᵗ)` without overflow.
pub fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Feasible parameter set `W`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamSpace {
    Unconstrained,
    L2Ball { radius: f64 },
}

impl ParamSpace {
    pub fn l2_ball(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(invalid("radius", "must be finite and positive"));
        }
        Ok(ParamSpace::L2Ball { radius })
    }

    pub fn project(&self, w: &mut Array1<f64>) {
        if let ParamSpace::L2Ball { radius } = self {
            crate::linalg::project_l2_ball(w, *radius);
        }
    }

    pub fn contains(&self, w: ArrayView1<f64>) -> bool {
        match self {
            ParamSpace::Unconstrained => true,
            ParamSpace::L2Ball { radius } => norm2_sq(w).sqrt() <= radius * (1.0 + 1e-12),
        }
    }

    pub fn radius(&self) -> Option<f64> {
        match self {
            ParamSpace::Unconstrained => None,
            ParamSpace::L2Ball { radius } => Some(*radius),
        }
    }
}

/// How generated examples are labelled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LabelRule {
    /// `y = sign(xᵀw_true)` with `w_true ~ N(0, I)` drawn from the seed.
    Separator,
    /// As `Separator`, then each label flipped independently with probability `flip`.
    NoisySeparator { flip: f64 },
}

fn label_rows(features: &Array2<f64>, rule: LabelRule, rng: &mut rng::Rng) -> Result<Array1<f64>> {
    let d = features.ncols();
    let w_true: Array1<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let mut labels: Array1<f64> = features
        .rows()
        .into_iter()
        .map(|x| if x.dot(&w_true) >= 0.0 { 1.0 } else { -1.0 })
        .collect();
    if let LabelRule::NoisySeparator { flip } = rule {
        if !(0.0..=1.0).contains(&flip) {
            return Err(invalid("flip", "must lie in [0, 1]"));
        }
        for y in labels.iter_mut() {
            if rng.random::<f64>() < flip {
                *y = -*y;
            }
        }
    }
    Ok(labels)
}

fn check_sizes(n: usize, d: usize) -> Result<()> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    if d == 0 {
        return Err(invalid("d", "must be at least 1"));
    }
    Ok(())
}

/// i.i.d. `N(0, σ²)` features labelled by a random linear separator.
pub fn gen_gaussian_dataset(n: usize, d: usize, sigma: f64, seed: u64) -> Result<Dataset> {
    gen_gaussian_dataset_with(n, d, sigma, LabelRule::Separator, seed)
}

pub fn gen_gaussian_dataset_with(n: usize, d: usize, sigma: f64, labels: LabelRule, seed: u64) -> Result<Dataset> {
    check_sizes(n, d)?;
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(invalid("sigma", "must be finite and positive"));
    }
    let mut rng = rng::seeded(seed);
    let normal = Normal::new(0.0, sigma).map_err(|e| invalid("sigma", e.to_string()))?;
    let features = Array2::from_shape_simple_fn((n, d), || normal.sample(&mut rng));
    let labels = label_rows(&features, labels, &mut rng)?;
    Dataset::new(features, labels)
}

/// i.i.d. uniform ±1 features labelled by a random linear separator.
pub fn gen_rademacher_dataset(n: usize, d: usize, seed: u64) -> Result<Dataset> {
    gen_rademacher_dataset_with(n, d, LabelRule::Separator, seed)
}

pub fn gen_rademacher_dataset_with(n: usize, d: usize, labels: LabelRule, seed: u64) -> Result<Dataset> {
    check_sizes(n, d)?;
    let mut rng = rng::seeded(seed);
    let features = Array2::from_shape_simple_fn((n, d), || if rng.random::<bool>() { 1.0 } else { -1.0 });
    let labels = label_rows(&features, labels, &mut rng)?;
    Dataset::new(features, labels)
}

/// Worst-case strongly convex instance: `f_i(w) = (λ/2)‖w − xᵢ‖²` with the
/// `xᵢ` at the n-th roots of unity in the plane, and `W` the unit ball.
///
/// `∑xᵢ = 0`, so `w* = 0` and `F* = λ/2`.
pub fn gen_lowerbound_instance(n: usize, lambda: f64) -> Result<(LossModel, Dataset, ParamSpace)> {
    if n < 2 {
        return Err(invalid("n", "lower-bound instance needs n >= 2"));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(invalid("lambda", "must be finite and positive"));
    }
    let mut features = Array2::zeros((n, 2));
    for i in 0..n {
        let theta = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
        let (s, c) = theta.sin_cos();
        features[[i, 0]] = c;
        features[[i, 1]] = s;
    }
    let data = Dataset::new(features, Array1::zeros(n))?;
    Ok((LossModel::QuadraticDistance { lambda }, data, ParamSpace::L2Ball { radius: 1.0 }))
}

/// r-replication: a uniformly chosen `n/r` subset, each row repeated `r` times.
pub fn replicate_dataset(data: &Dataset, r: usize, seed: u64) -> Result<Dataset> {
    let n = data.n();
    if r == 0 {
        return Err(invalid("r", "must be at least 1"));
    }
    if !n.is_multiple_of(r) {
        return Err(invalid("r", format!("{r} does not divide n = {n}")));
    }
    let mut rng = rng::seeded(seed);
    let mut chosen = sample(&mut rng, n, n / r).into_vec();
    chosen.sort_unstable();
    let rows: Vec<usize> = chosen.iter().flat_map(|&i| std::iter::repeat_n(i, r)).collect();
    Ok(data.select(&rows))
}

/// Sparse-conflict instance whose support conflict graph has maximum degree `rho`.
///
/// Example `i` owns the coordinate window `{i, …, i + ⌊ρ/2⌋}`, so windows of
/// examples at most `⌊ρ/2⌋` apart overlap. Odd `ρ` additionally pairs `i` with
/// `i + ⌊ρ/2⌋ + 1` through a shared extra coordinate. Feature values on the
/// support are standard normal; labels are uniform ±1.
pub fn gen_sparse_conflict(n: usize, d: usize, rho: usize, seed: u64) -> Result<(LossModel, Dataset)> {
    check_sizes(n, d)?;
    let supports = sparse_conflict_supports(n, rho)?;
    let needed = supports.iter().flatten().max().map_or(0, |&c| c + 1);
    if needed > d {
        return Err(Error::Infeasible(format!("rho = {rho} with n = {n} needs d >= {needed}, got {d}")));
    }
    let degree = crate::diversity::conflict_degree(&supports);
    if degree != rho {
        return Err(Error::Infeasible(format!(
            "n = {n} is too small to reach conflict degree {rho} (got {degree})"
        )));
    }
    let mut rng = rng::seeded(seed);
    let mut features = Array2::zeros((n, d));
    for (i, support) in supports.iter().enumerate() {
        for &c in support {
            features[[i, c]] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    let labels: Array1<f64> = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    let data = Dataset::new(features, labels)?;
    Ok((LossModel::SparseConflict { supports }, data))
}

fn sparse_conflict_supports(n: usize, rho: usize) -> Result<Vec<Vec<usize>>> {
    let half = rho / 2;
    let mut supports: Vec<Vec<usize>> = (0..n).map(|i| (i..=i + half).collect()).collect();
    if rho % 2 == 1 {
        let mut next = n + half;
        let block = 2 * (half + 1);
        for start in (0..n).step_by(block) {
            for j in 0..=half {
                let (a, b) = (start + j, start + j + half + 1);
                if b < n {
                    supports[a].push(next);
                    supports[b].push(next);
                    next += 1;
                }
            }
        }
    }
    Ok(supports)
}

/// `∇f_i(w)` for the given model.
pub fn eval_gradient(model: &LossModel, data: &Dataset, i: usize, w: ArrayView1<f64>) -> Result<Array1<f64>> {
    model.gradient(data, i, w)
}

pub fn eval_full_gradient(model: &LossModel, data: &Dataset, w: ArrayView1<f64>) -> Result<Array1<f64>> {
    model.full_gradient(data, w)
}

/// Minimizer of the least-squares risk `(1/2n)‖Xw − y‖²` by Cholesky on the
/// normal equations. Errors when `XᵀX` is singular.
pub fn least_squares_optimum(data: &Dataset) -> Result<Array1<f64>> {
    let x = data.features();
    let gram = x.t().dot(x);
    let rhs = x.t().dot(data.labels());
    cholesky_solve(gram, rhs).ok_or_else(|| Error::Degenerate("XᵀX is singular".into()))
}

/// Smallest eigenvalue of `(1/n)XᵀX`: the strong-convexity modulus of least squares.
pub fn least_squares_strong_convexity(data: &Dataset) -> f64 {
    let x = data.features();
    let gram = x.t().dot(x) / data.n() as f64;
    symmetric_eigenvalues(gram).into_iter().fold(f64::INFINITY, f64::min)
}

/// Largest eigenvalue of `(1/n)XᵀX`.
pub fn least_squares_smoothness(data: &Dataset) -> f64 {
    let x = data.features();
    let gram = x.t().dot(x) / data.n() as f64;
    symmetric_eigenvalues(gram).into_iter().fold(0.0, f64::max)
}

fn cholesky_solve(mut a: Array2<f64>, mut b: Array1<f64>) -> Option<Array1<f64>> {
    let d = a.nrows();
    for j in 0..d {
        let mut diag = a[[j, j]];
        for k in 0..j {
            diag -= a[[j, k]] * a[[j, k]];
        }
        if diag <= 0.0 {
            return None;
        }
        let diag = diag.sqrt();
        a[[j, j]] = diag;
        for i in j + 1..d {
            let mut v = a[[i, j]];
            for k in 0..j {
                v -= a[[i, k]] * a[[j, k]];
            }
            a[[i, j]] = v / diag;
        }
    }
    for i in 0..d {
        let mut v = b[i];
        for k in 0..i {
            v -= a[[i, k]] * b[k];
        }
        b[i] = v / a[[i, i]];
    }
    for i in (0..d).rev() {
        let mut v = b[i];
        for k in i + 1..d {
            v -= a[[k, i]] * b[k];
        }
        b[i] = v / a[[i, i]];
    }
    Some(b)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(mut a: Array2<f64>) -> Vec<f64> {
    let d = a.nrows();
    for _sweep in 0..100 {
        let off: f64 = (0..d)
            .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[[i, j]].powi(2))
            .sum();
        let scale: f64 = a.iter().map(|v| v * v).sum();
        if off <= 1e-30 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = a[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..d).map(|i| a[[i, i]]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy() -> Dataset {
        Dataset::new(array![[1.0, 2.0, -1.0], [0.5, -0.3, 2.0]], array![1.0, -1.0]).unwrap()
    }

    #[test]
    fn logistic_gradient_at_zero() {
        let data = toy();
        let w = Array1::zeros(3);
        for i in 0..2 {
            let g = LossModel::Logistic.gradient(&data, i, w.view()).unwrap();
            let expected = data.row(i).mapv(|x| -data.label(i) / 2.0 * x);
            assert_eq!(g, expected);
        }
    }

    #[test]
    fn quadratic_distance_vanishes_at_anchor() {
        let data = toy();
        let model = LossModel::QuadraticDistance { lambda: 3.0 };
        let g = model.gradient(&data, 1, data.row(1)).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn index_and_dimension_errors() {
        let data = toy();
        let w = Array1::zeros(3);
        assert_eq!(
            LossModel::Logistic.gradient(&data, 2, w.view()),
            Err(Error::IndexOutOfRange { index: 2, n: 2 })
        );
        let short = Array1::zeros(2);
        assert!(matches!(
            LossModel::LeastSquares.full_gradient(&data, short.view()),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn dataset_rejects_non_finite() {
        assert!(Dataset::new(array![[f64::NAN]], array![1.0]).is_err());
        assert!(Dataset::new(array![[1.0], [2.0]], array![1.0]).is_err());
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(-1000.0), 0.0);
        assert_eq!(softplus(1000.0), 1000.0);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn full_gradient_of_copies_equals_single() {
        let data = toy().select(&[0, 0, 0, 0]);
        let w = array![0.3, -0.2, 0.9];
        let full = LossModel::Logistic.full_gradient(&data, w.view()).unwrap();
        let single = LossModel::Logistic.gradient(&data, 0, w.view()).unwrap();
        for (a, b) in full.iter().zip(single.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn quadratic_distance_full_gradient_is_lambda_w() {
        let (_, data, _) = gen_lowerbound_instance(7, 1.0).unwrap();
        let model = LossModel::QuadraticDistance { lambda: 2.5 };
        let w = array![0.2, -0.4];
        let g = model.full_gradient(&data, w.view()).unwrap();
        assert!((g[0] - 0.5).abs() < 1e-12 && (g[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn lowerbound_instance_geometry() {
        let (_, data, space) = gen_lowerbound_instance(2, 1.0).unwrap();
        assert_eq!(data.row(0), array![1.0, 0.0]);
        assert!((data.row(1)[0] + 1.0).abs() < 1e-15 && data.row(1)[1].abs() < 1e-15);
        assert_eq!(space, ParamSpace::L2Ball { radius: 1.0 });
        for n in [2, 3, 5, 8, 17, 100] {
            let (_, data, _) = gen_lowerbound_instance(n, 0.5).unwrap();
            let sum = data.features().sum_axis(ndarray::Axis(0));
            assert!(norm2_sq(sum.view()).sqrt() <= 1e-12);
            for r in data.features().rows() {
                assert!((norm2_sq(r) - 1.0).abs() < 1e-12);
            }
        }
        assert!(gen_lowerbound_instance(1, 1.0).is_err());
    }

    #[test]
    fn lowerbound_optimum_value() {
        for (n, lambda) in [(2, 1.0), (8, 1.0), (13, 0.3)] {
            let (model, data, _) = gen_lowerbound_instance(n, lambda).unwrap();
            let f = model.full_loss(&data, Array1::zeros(2).view()).unwrap();
            assert!((f - lambda / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_generator_is_deterministic() {
        let a = gen_gaussian_dataset(100, 10, 1.0, 7).unwrap();
        let b = gen_gaussian_dataset(100, 10, 1.0, 7).unwrap();
        assert_eq!(a, b);
        let c = gen_gaussian_dataset(100, 10, 1.0, 8).unwrap();
        assert_ne!(a, c);
        assert!(a.labels().iter().all(|&y| y == 1.0 || y == -1.0));
    }

    #[test]
    fn rademacher_rows_have_norm_d() {
        let data = gen_rademacher_dataset(50, 13, 3).unwrap();
        for r in data.features().rows() {
            assert_eq!(norm2_sq(r), 13.0);
        }
        assert_eq!(data, gen_rademacher_dataset(50, 13, 3).unwrap());
    }

    #[test]
    fn generator_rejects_bad_sizes() {
        assert!(gen_gaussian_dataset(0, 3, 1.0, 0).is_err());
        assert!(gen_gaussian_dataset(3, 0, 1.0, 0).is_err());
        assert!(gen_gaussian_dataset(3, 3, 0.0, 0).is_err());
        assert!(gen_rademacher_dataset(3, 0, 0).is_err());
    }

    #[test]
    fn replication_edges() {
        let data = gen_gaussian_dataset(12, 3, 1.0, 1).unwrap();
        let same = replicate_dataset(&data, 1, 5).unwrap();
        let mut a: Vec<String> = data.features().rows().into_iter().map(|r| format!("{r}")).collect();
        let mut b: Vec<String> = same.features().rows().into_iter().map(|r| format!("{r}")).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);

        let all = replicate_dataset(&data, 12, 5).unwrap();
        assert!(all.features().rows().into_iter().all(|r| r == all.row(0)));
        assert_eq!((all.n(), all.d()), (12, 3));
        assert!(replicate_dataset(&data, 5, 0).is_err());
    }

    #[test]
    fn replication_multiset_counts() {
        let data = gen_gaussian_dataset(4, 2, 1.0, 11).unwrap();
        for seed in 0..20 {
            let rep = replicate_dataset(&data, 2, seed).unwrap();
            let mut counts = std::collections::BTreeMap::new();
            for r in rep.features().rows() {
                *counts.entry(format!("{r}")).or_insert(0) += 1;
            }
            assert_eq!(counts.len(), 2);
            assert!(counts.values().all(|&c| c == 2));
        }
    }

    #[test]
    fn sparse_conflict_constructions() {
        let (model, data) = gen_sparse_conflict(10, 10, 0, 1).unwrap();
        let LossModel::SparseConflict { supports } = &model else { panic!() };
        for i in 0..10 {
            for j in 0..i {
                assert!(supports[i].iter().all(|c| !supports[j].contains(c)));
            }
        }
        assert_eq!(data.n(), 10);

        let (model, _) = gen_sparse_conflict(10, 11, 2, 1).unwrap();
        let LossModel::SparseConflict { supports } = &model else { panic!() };
        let overlaps = |a: usize, b: usize| supports[a].iter().any(|c| supports[b].contains(c));
        for i in 1..9 {
            let neighbours: Vec<usize> = (0..10).filter(|&j| j != i && overlaps(i, j)).collect();
            assert_eq!(neighbours, vec![i - 1, i + 1]);
        }

        let (model, _) = gen_sparse_conflict(12, 40, 3, 4).unwrap();
        let LossModel::SparseConflict { supports } = &model else { panic!() };
        assert_eq!(crate::diversity::conflict_degree(supports), 3);

        assert!(matches!(gen_sparse_conflict(10, 5, 2, 1), Err(Error::Infeasible(_))));
        assert!(matches!(gen_sparse_conflict(3, 50, 4, 1), Err(Error::Infeasible(_))));
        assert_eq!(gen_sparse_conflict(9, 20, 4, 2).unwrap(), gen_sparse_conflict(9, 20, 4, 2).unwrap());
    }

    #[test]
    fn sparse_gradients_respect_support() {
        let (model, data) = gen_sparse_conflict(8, 12, 2, 5).unwrap();
        let LossModel::SparseConflict { supports } = &model else { panic!() };
        let w = Array1::from_shape_fn(12, |j| (j as f64 * 0.37).sin());
        for (i, support) in supports.iter().enumerate() {
            let g = model.gradient(&data, i, w.view()).unwrap();
            for (c, v) in g.iter().enumerate() {
                if !support.contains(&c) {
                    assert_eq!(*v, 0.0);
                }
            }
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let data = gen_gaussian_dataset(7, 4, 0.3, 2).unwrap();
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("f0,f1,f2,f3,label\n"));
        let back = Dataset::read_csv(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back, data);
        assert!(Dataset::read_csv(std::io::Cursor::new("a,b\n1,2\n")).is_err());
    }

    #[test]
    fn least_squares_helpers() {
        let data = gen_gaussian_dataset(60, 4, 1.0, 3).unwrap();
        let w = least_squares_optimum(&data).unwrap();
        let g = LossModel::LeastSquares.full_gradient(&data, w.view()).unwrap();
        assert!(norm2_sq(g.view()).sqrt() < 1e-12);
        let lo = least_squares_strong_convexity(&data);
        let hi = least_squares_smoothness(&data);
        assert!(lo > 0.0 && hi >= lo);
    }
}

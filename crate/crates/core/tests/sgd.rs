#[path = "common/oracles.rs"]
mod oracles;

use graddiv::problems::{
    gen_gaussian_dataset, gen_rademacher_dataset, least_squares_optimum, least_squares_smoothness, least_squares_strong_convexity,
    LossModel, ParamSpace,
};
use graddiv::rng;
use graddiv::sgd::{
    convergence_parity_experiment, lemma1_closed_form, lemma1_exact_expectation, required_budget, run_sgd, sgd_step, tuned_step_size,
    BatchSchedule, ClassParams, FunctionClass, ParityProblem, SgdConfig,
};
use ndarray::Array1;
use rand::Rng;
use rand_distr::StandardNormal;

#[test]
fn lemma1_against_independent_enumeration() {
    let mut r = rng::seeded(21);
    for trial in 0..30u64 {
        let n = 3 + trial as usize % 4;
        let data = gen_gaussian_dataset(n, 3, 1.0, trial).unwrap();
        let model = if trial % 2 == 0 {
            LossModel::Logistic
        } else {
            LossModel::LeastSquares
        };
        let w: Array1<f64> = (0..3).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
        let w_star: Array1<f64> = (0..3).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
        let gamma = r.random_range(0.01..0.5);
        for batch in 1..=3 {
            let exact = lemma1_exact_expectation(&model, &data, w.view(), batch, gamma, w_star.view()).unwrap();
            let closed = lemma1_closed_form(&model, &data, w.view(), batch, gamma, w_star.view()).unwrap();
            let grads = oracles::to_rows(&model.gradients(&data, w.view()).unwrap());
            let oracle = oracles::enumerate_one_step(&grads, &w.to_vec(), &w_star.to_vec(), gamma, batch);
            assert!((exact - oracle).abs() <= 1e-12 * oracle.abs().max(1.0));
            assert!((exact - closed).abs() <= 1e-10 * exact.abs().max(1.0), "{exact} vs {closed}");
        }
    }
}

#[test]
fn gradients_match_finite_differences() {
    let data = gen_gaussian_dataset(6, 4, 1.0, 2).unwrap();
    let w = [0.3, -0.2, 0.5, 0.1];
    for model in [LossModel::Logistic, LossModel::LeastSquares] {
        for i in 0..data.n() {
            let g = model.gradient(&data, i, Array1::from(w.to_vec()).view()).unwrap();
            let fd = oracles::finite_difference(|v| model.loss(&data, i, Array1::from(v.to_vec()).view()).unwrap(), &w, 1e-6);
            let x = data.row(i).to_vec();
            let closed = match model {
                LossModel::Logistic => oracles::logistic_gradient(&x, data.label(i), &w),
                _ => oracles::least_squares_gradient(&x, data.label(i), &w),
            };
            for c in 0..4 {
                assert!((g[c] - fd[c]).abs() < 1e-7);
                assert!((g[c] - closed[c]).abs() < 1e-14);
            }
        }
    }
}

#[test]
fn single_step_matches_hand_update() {
    let data = gen_gaussian_dataset(5, 2, 1.0, 4).unwrap();
    let w = Array1::from(vec![0.2, -0.1]);
    let mut a = rng::seeded(9);
    let out = sgd_step(
        &LossModel::LeastSquares,
        &data,
        w.view(),
        3,
        0.1,
        &mut a,
        &ParamSpace::Unconstrained,
    )
    .unwrap();
    let mut b = rng::seeded(9);
    let mut expected = w.to_vec();
    let mut step = [0.0; 2];
    for _ in 0..3 {
        let i = b.random_range(0..5);
        let g = oracles::least_squares_gradient(&data.row(i).to_vec(), data.label(i), &w.to_vec());
        step[0] += g[0];
        step[1] += g[1];
    }
    expected[0] -= 0.1 * step[0];
    expected[1] -= 0.1 * step[1];
    assert!((out[0] - expected[0]).abs() < 1e-15 && (out[1] - expected[1]).abs() < 1e-15);
}

#[test]
fn trajectory_bookkeeping() {
    let data = gen_gaussian_dataset(40, 3, 1.0, 5).unwrap();
    let cfg = SgdConfig {
        schedule: BatchSchedule::Varying(vec![1, 3, 5]),
        ..SgdConfig::new(0.05, 1, 50, 2).with_record_every(1)
    };
    let t = run_sgd(&LossModel::Logistic, &data, &cfg, Array1::zeros(3).view()).unwrap();
    let n_k: Vec<usize> = t.points.iter().map(|p| p.n_k).collect();
    assert_eq!(&n_k[..5], &[0, 1, 4, 9, 14]);
    assert_eq!(*n_k.last().unwrap(), 50);
    let table = t.to_table();
    assert_eq!(table.header, vec!["k", "N_k", "dist2_opt", "loss", "grad_norm2", "bs"]);
    assert_eq!(table.rows.len(), t.points.len());
    let avg = t.average_iterate.unwrap();
    assert_eq!(avg.len(), 3);
}

#[test]
fn step_sizes_and_budgets() {
    let p = ClassParams {
        lambda: Some(0.5),
        beta: Some(2.0),
        mu: Some(0.25),
        m2: 4.0,
    };
    let eps = 0.1;
    assert!((tuned_step_size(FunctionClass::StronglyConvex, eps, &p, None).unwrap() - 0.0125).abs() < 1e-16);
    assert!((tuned_step_size(FunctionClass::Convex, eps, &p, None).unwrap() - 0.025).abs() < 1e-16);
    assert!((tuned_step_size(FunctionClass::Smooth, eps, &p, None).unwrap() - 0.0125).abs() < 1e-16);
    assert!((tuned_step_size(FunctionClass::Pl, eps, &p, None).unwrap() - 0.00625).abs() < 1e-16);
    let t = required_budget(FunctionClass::Convex, eps, &p, 2.0).unwrap();
    assert_eq!(t, 800);
    let t = required_budget(FunctionClass::Smooth, eps, &p, 1.0).unwrap();
    assert_eq!(t, 1600);
    let t = required_budget(FunctionClass::StronglyConvex, eps, &p, 5.0).unwrap();
    assert_eq!(t, (4.0f64 / (2.0 * 0.25 * 0.1) * (100.0f64).ln()).ceil() as usize);
}

#[test]
fn parity_runs_are_seed_shared() {
    let data = gen_rademacher_dataset(60, 4, 8).unwrap();
    let w_star = least_squares_optimum(&data).unwrap();
    let lambda = least_squares_strong_convexity(&data);
    let beta = least_squares_smoothness(&data);
    let f_star = LossModel::LeastSquares.full_loss(&data, w_star.view()).unwrap();
    let problem = ParityProblem {
        model: LossModel::LeastSquares,
        data,
        class: FunctionClass::Pl,
        params: ClassParams {
            lambda: Some(lambda),
            beta: Some(beta),
            mu: Some(lambda),
            m2: 0.0,
        },
        w0: Array1::zeros(4),
        w_star: Some(w_star),
        f_star: Some(f_star),
    };
    for class in [
        FunctionClass::StronglyConvex,
        FunctionClass::Convex,
        FunctionClass::Smooth,
        FunctionClass::Pl,
    ] {
        let p = ParityProblem { class, ..problem.clone() };
        let zero = convergence_parity_experiment(&p, 0.1, 0.0, 10, 4).unwrap();
        assert_eq!(zero.ratio, 1.0, "{class:?}");
        let again = convergence_parity_experiment(&p, 0.1, 0.0, 10, 4).unwrap();
        assert_eq!(zero, again);
        let one = convergence_parity_experiment(&p, 0.1, 1.0, 10, 4).unwrap();
        assert!(one.batch >= 1 && one.ratio.is_finite());
    }
}

#[test]
fn lemma1_rejects_bad_inputs() {
    let data = gen_gaussian_dataset(4, 2, 1.0, 1).unwrap();
    let w = Array1::zeros(2);
    assert!(lemma1_exact_expectation(&LossModel::Logistic, &data, w.view(), 0, 0.1, w.view()).is_err());
    assert!(lemma1_closed_form(&LossModel::Logistic, &data, w.view(), 1, 0.1, Array1::zeros(3).view()).is_err());
}

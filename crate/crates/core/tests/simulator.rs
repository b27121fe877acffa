use enselect::simulator::*;
use enselect::special_math::soft_threshold;
use enselect::{Estimator, ProblemConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn plan(algorithm: Estimator) -> ExperimentPlan {
    let mut p = ExperimentPlan::new(ProblemConfig::default(), algorithm, vec![0.3, 0.1]);
    p.n = 24;
    p.repeats = 8;
    p.realizations = 8;
    p.master_seed = 5;
    p
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn sweeps_are_deterministic_across_worker_counts() {
    for algorithm in [Estimator::Ss, Estimator::Dko, Estimator::Lasso] {
        let p = plan(algorithm);
        let one = in_pool(1, || run_sweep(&p).unwrap());
        let three = in_pool(3, || run_sweep(&p).unwrap());
        assert_eq!(one, three);
        let mut other = p.clone();
        other.master_seed = 6;
        assert_ne!(run_sweep(&other).unwrap()[0].q, one[0].q);
    }
}

#[test]
fn results_follow_grid_order_and_record_seeds() {
    let p = plan(Estimator::Dko);
    let r = run_sweep(&p).unwrap();
    assert_eq!(r.iter().map(|x| x.config.lambda).collect::<Vec<_>>(), vec![0.3, 0.1]);
    assert_eq!(r[0].seeds.len(), 8);
    assert_eq!(r[0].seeds[3], realization_seeds(5, 3));
    assert_eq!(r[0].samples, sample_rows(24, 2.5));
    assert!(r[0].v_knock.is_some() && r[0].ko_tpr.is_some());
    let single = run_experiment(24, &p.config.with_lambda(0.1), Estimator::Dko, 8, 8, &p.thresholds, 5, &p.lasso)
        .unwrap();
    assert_eq!(single, r[1]);
}

#[test]
fn knockoff_coefficients_average_to_zero() {
    let mut p = plan(Estimator::Dko);
    p.realizations = 40;
    for r in run_sweep(&p).unwrap() {
        let k = r.knockoff_mean.unwrap();
        assert!(k.mean.abs() <= 4.0 * k.se, "{k:?}");
    }
}

#[test]
fn errors_carry_realization_index() {
    let mut p = plan(Estimator::Ss);
    p.lasso.max_sweeps = 1;
    p.config.lambda = 1e-3;
    p.lambdas = vec![1e-3];
    match run_sweep(&p) {
        Err(enselect::Error::Draw { source, .. }) => {
            assert!(matches!(*source, enselect::Error::LassoNotConverged { .. }));
        }
        other => panic!("{other:?}"),
    }
    let mut few = plan(Estimator::Ss);
    few.realizations = 3;
    assert!(run_sweep(&few).is_err());
}

#[test]
fn bootstrap_lasso_equals_replicated_rows() {
    let data = generate_dataset(12, &ProblemConfig::default(), 3).unwrap();
    let (m, _) = data.dims();
    let counts = bootstrap_counts(m, 1.0, 9);
    let mut rows = Vec::new();
    for (i, &c) in counts.iter().enumerate() {
        rows.extend(std::iter::repeat(i).take(c as usize));
    }
    let settings = LassoSettings::default();
    let expanded = LassoProblem::new(
        data.design.select_rows(&rows),
        rows.iter().map(|&i| data.responses[i]).collect(),
        None,
    )
    .unwrap()
    .solve(0.05, None, &settings)
    .unwrap();
    let weights: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let weighted = lasso_coordinate_descent(&data.design, &data.responses, 0.05, &weights, &settings).unwrap();
    for (a, b) in expanded.coef.iter().zip(&weighted) {
        assert!((a - b).abs() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn lasso_satisfies_kkt(seed in any::<u64>(), m in 3usize..30, n in 1usize..20, lambda in 0.01f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = generate_knockoff(m, n, rng.random());
        let y: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let c: Vec<f64> = (0..m).map(|_| rng.random_range(0..3) as f64).collect();
        let problem = LassoProblem::new(x, y, Some(&c)).unwrap();
        let fit = problem.solve(lambda, None, &LassoSettings::default()).unwrap();
        prop_assert!(problem.kkt_residual(lambda, &fit.coef) <= 1e-8);
    }

    #[test]
    fn diagonal_design_gives_soft_threshold(values in prop::collection::vec(-3.0f64..3.0, 1..8), lambda in 0.0f64..2.0) {
        let n = values.len();
        let mut data = vec![0.0; n * n];
        for j in 0..n {
            data[j * n + j] = 1.0;
        }
        let x = DesignMatrix::from_columns(n, n, data).unwrap();
        let lambda = lambda.max(1e-6);
        let w = lasso_coordinate_descent(&x, &values, lambda, &vec![1.0; n], &LassoSettings::default()).unwrap();
        for (wi, yi) in w.iter().zip(&values) {
            prop_assert!((wi - soft_threshold(*yi, lambda)).abs() < 1e-12);
        }
    }

    #[test]
    fn bootstrap_counts_conserve_draws(m in 1usize..200, mu in 0.1f64..3.0, seed in any::<u64>()) {
        let c = bootstrap_counts(m, mu, seed);
        prop_assert_eq!(c.len(), m);
        prop_assert_eq!(c.iter().map(|&k| k as usize).sum::<usize>(), (mu * m as f64).round() as usize);
    }

    #[test]
    fn empirical_rates_are_probabilities(sel in prop::collection::vec(0.0f64..1.0, 1..40), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth: Vec<f64> = sel.iter().map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 }).collect();
        let (tpr, fdr) = empirical_tpr_fdr(&sel, &truth, 0.5);
        prop_assert!((0.0..=1.0).contains(&tpr) && (0.0..=1.0).contains(&fdr));
    }
}

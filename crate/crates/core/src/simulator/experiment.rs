use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{bootstrap_counts, derive_seed, generate_dataset, generate_knockoff, Dataset};
use super::lasso::{LassoProblem, LassoSettings};
use crate::dko_theory::SelectionThresholds;
use crate::error::{Error, Result};
use crate::problem::ProblemConfig;
use crate::tuning::Estimator;

/// Statistics of one dataset at one λ, averaged over the injected randomness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub lambda: f64,
    pub selection_prob: Vec<f64>,
    pub q: f64,
    pub m: f64,
    pub v: f64,
    /// Mean squared knockoff coefficient (knockoffs only).
    pub v_knock: Option<f64>,
    /// Mean knockoff coefficient (knockoffs only).
    pub knockoff_mean: Option<f64>,
    /// TPR and FDR of single knockoff draws, averaged over draws.
    pub single_draw_rates: Option<(f64, f64)>,
}

/// Running sums over draws for every coordinate of one block.
#[derive(Debug, Clone)]
struct Moments {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    selected: Vec<u32>,
}

impl Moments {
    fn new(n: usize) -> Self {
        Moments { sum: vec![0.0; n], sum_sq: vec![0.0; n], selected: vec![0; n] }
    }

    fn add(&mut self, w: &[f64]) {
        for (i, &x) in w.iter().enumerate() {
            self.sum[i] += x;
            self.sum_sq[i] += x * x;
        }
    }

    /// `(q, m, v)` over `draws` draws.
    fn order(&self, truth: &[f64], draws: usize) -> (f64, f64, f64) {
        let r = draws as f64;
        let n = truth.len() as f64;
        let (mut q, mut m, mut v) = (0.0, 0.0, 0.0);
        for ((&s, &s2), &w0) in self.sum.iter().zip(&self.sum_sq).zip(truth) {
            let mean = s / r;
            q += mean * mean;
            m += mean * w0;
            if draws > 1 {
                v += ((s2 - r * mean * mean) / (r - 1.0)).max(0.0);
            }
        }
        (q / n, m / n, v / n)
    }

    fn frequencies(&self, draws: usize) -> Vec<f64> {
        self.selected.iter().map(|&c| c as f64 / draws as f64).collect()
    }
}

fn check_repeats(repeats: usize) -> Result<()> {
    if repeats < 2 {
        return Err(Error::domain(format!("need at least 2 repeats, got {repeats}")));
    }
    Ok(())
}

fn draw_error(draw: usize, source: Error) -> Error {
    Error::Draw { realization: 0, draw, source: Box::new(source) }
}

fn descending(lambdas: &[f64]) -> Result<Vec<usize>> {
    if lambdas.is_empty() {
        return Err(Error::domain("lambda grid is empty"));
    }
    if lambdas.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(Error::domain("lambda values must be positive and finite"));
    }
    let mut order: Vec<usize> = (0..lambdas.len()).collect();
    order.sort_by(|&a, &b| lambdas[b].total_cmp(&lambdas[a]));
    Ok(order)
}

/// Stability selection over a λ grid. Each bootstrap draw is reused across
/// the grid and solved with warm starts from the largest λ down.
pub fn ss_empirical_path(
    data: &Dataset,
    lambdas: &[f64],
    mu_b: f64,
    repeats: usize,
    seed: u64,
    settings: &LassoSettings,
) -> Result<Vec<DatasetRecord>> {
    check_repeats(repeats)?;
    if !(mu_b > 0.0) {
        return Err(Error::domain(format!("mu_b must be positive, got {mu_b}")));
    }
    let order = descending(lambdas)?;
    let (m, n) = data.dims();
    let mut acc = vec![Moments::new(n); lambdas.len()];
    for r in 0..repeats {
        let counts = bootstrap_counts(m, mu_b, derive_seed(seed, r as u64));
        let rows: Vec<usize> = (0..m).filter(|&i| counts[i] > 0).collect();
        let weights: Vec<f64> = rows.iter().map(|&i| counts[i] as f64).collect();
        let y: Vec<f64> = rows.iter().map(|&i| data.responses[i]).collect();
        let problem =
            LassoProblem::new(data.design.select_rows(&rows), y, Some(&weights)).map_err(|e| draw_error(r, e))?;
        let mut warm: Option<Vec<f64>> = None;
        for &k in &order {
            let fit = problem.solve(lambdas[k], warm.as_deref(), settings).map_err(|e| draw_error(r, e))?;
            acc[k].add(&fit.coef);
            for (sel, &w) in acc[k].selected.iter_mut().zip(&fit.coef) {
                *sel += u32::from(w != 0.0);
            }
            warm = Some(fit.coef);
        }
    }
    Ok(lambdas
        .iter()
        .zip(&acc)
        .map(|(&lambda, a)| {
            let (q, m, v) = a.order(&data.truth, repeats);
            DatasetRecord {
                lambda,
                selection_prob: a.frequencies(repeats),
                q,
                m,
                v,
                v_knock: None,
                knockoff_mean: None,
                single_draw_rates: None,
            }
        })
        .collect())
}

pub fn ss_empirical(
    data: &Dataset,
    lambda: f64,
    mu_b: f64,
    repeats: usize,
    seed: u64,
    settings: &LassoSettings,
) -> Result<DatasetRecord> {
    Ok(ss_empirical_path(data, &[lambda], mu_b, repeats, seed, settings)?.remove(0))
}

/// Derandomized knockoffs over a λ grid: one lasso on `[X X_knock]` per
/// knockoff draw and λ, selecting `i` when `|w_i| - |w_knock_i| > z_th`.
pub fn dko_empirical_path(
    data: &Dataset,
    lambdas: &[f64],
    z_th: f64,
    repeats: usize,
    seed: u64,
    settings: &LassoSettings,
) -> Result<Vec<DatasetRecord>> {
    check_repeats(repeats)?;
    if !(z_th >= 0.0) {
        return Err(Error::domain(format!("z_th must be non-negative, got {z_th}")));
    }
    let order = descending(lambdas)?;
    let (m, n) = data.dims();
    let mut signal = vec![Moments::new(n); lambdas.len()];
    let mut knock = vec![Moments::new(n); lambdas.len()];
    let mut single = vec![(0.0, 0.0); lambdas.len()];
    for r in 0..repeats {
        let knockoff = generate_knockoff(m, n, derive_seed(seed, r as u64));
        let design = data.design.hcat(&knockoff).map_err(|e| draw_error(r, e))?;
        let problem = LassoProblem::new(design, data.responses.clone(), None).map_err(|e| draw_error(r, e))?;
        let mut warm: Option<Vec<f64>> = None;
        for &k in &order {
            let fit = problem.solve(lambdas[k], warm.as_deref(), settings).map_err(|e| draw_error(r, e))?;
            let (w, wk) = fit.coef.split_at(n);
            signal[k].add(w);
            knock[k].add(wk);
            let picked: Vec<f64> =
                w.iter().zip(wk).map(|(a, b)| if a.abs() - b.abs() > z_th { 1.0 } else { 0.0 }).collect();
            for (sel, &p) in signal[k].selected.iter_mut().zip(&picked) {
                *sel += p as u32;
            }
            let (tpr, fdr) = empirical_tpr_fdr(&picked, &data.truth, 0.5);
            single[k].0 += tpr;
            single[k].1 += fdr;
            warm = Some(fit.coef);
        }
    }
    let r = repeats as f64;
    Ok((0..lambdas.len())
        .map(|k| {
            let (q, m, v) = signal[k].order(&data.truth, repeats);
            let v_knock = knock[k].sum_sq.iter().sum::<f64>() / (r * n as f64);
            let knockoff_mean = knock[k].sum.iter().sum::<f64>() / (r * n as f64);
            DatasetRecord {
                lambda: lambdas[k],
                selection_prob: signal[k].frequencies(repeats),
                q,
                m,
                v,
                v_knock: Some(v_knock),
                knockoff_mean: Some(knockoff_mean),
                single_draw_rates: Some((single[k].0 / r, single[k].1 / r)),
            }
        })
        .collect())
}

pub fn dko_empirical(
    data: &Dataset,
    lambda: f64,
    z_th: f64,
    repeats: usize,
    seed: u64,
    settings: &LassoSettings,
) -> Result<DatasetRecord> {
    Ok(dko_empirical_path(data, &[lambda], z_th, repeats, seed, settings)?.remove(0))
}

/// The plain lasso over a λ grid; selection "probabilities" are indicators.
pub fn lasso_empirical_path(data: &Dataset, lambdas: &[f64], settings: &LassoSettings) -> Result<Vec<DatasetRecord>> {
    let order = descending(lambdas)?;
    let n = data.truth.len();
    let problem = LassoProblem::new(data.design.clone(), data.responses.clone(), None)?;
    let mut out: Vec<Option<DatasetRecord>> = vec![None; lambdas.len()];
    let mut warm: Option<Vec<f64>> = None;
    for &k in &order {
        let fit = problem.solve(lambdas[k], warm.as_deref(), settings).map_err(|e| draw_error(0, e))?;
        let w = &fit.coef;
        let q = w.iter().map(|x| x * x).sum::<f64>() / n as f64;
        let m = w.iter().zip(&data.truth).map(|(x, t)| x * t).sum::<f64>() / n as f64;
        out[k] = Some(DatasetRecord {
            lambda: lambdas[k],
            selection_prob: w.iter().map(|&x| if x != 0.0 { 1.0 } else { 0.0 }).collect(),
            q,
            m,
            v: 0.0,
            v_knock: None,
            knockoff_mean: None,
            single_draw_rates: None,
        });
        warm = Some(fit.coef);
    }
    Ok(out.into_iter().map(|r| r.expect("every grid point solved")).collect())
}

/// TPR and FDR of selecting `{i : selection_prob_i > pi_th}`.
pub fn empirical_tpr_fdr(selection_prob: &[f64], truth: &[f64], pi_th: f64) -> (f64, f64) {
    let (mut tp, mut fp, mut signals) = (0usize, 0usize, 0usize);
    for (&p, &w0) in selection_prob.iter().zip(truth) {
        let selected = p > pi_th;
        if w0 != 0.0 {
            signals += 1;
            tp += usize::from(selected);
        } else {
            fp += usize::from(selected);
        }
    }
    let tpr = if signals > 0 { tp as f64 / signals as f64 } else { 0.0 };
    let fdr = if tp + fp > 0 { fp as f64 / (tp + fp) as f64 } else { 0.0 };
    (tpr, fdr)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Standard error of the mean over data realizations.
    pub se: f64,
}

impl Stat {
    pub fn from_samples(xs: &[f64]) -> Stat {
        let d = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / d;
        let se = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (d - 1.0) / d).sqrt()
        } else {
            0.0
        };
        Stat { mean, se }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RealizationSeeds {
    pub data: u64,
    pub randomization: u64,
}

pub fn realization_seeds(master_seed: u64, realization: usize) -> RealizationSeeds {
    let k = realization as u64;
    RealizationSeeds { data: derive_seed(master_seed, 2 * k), randomization: derive_seed(master_seed, 2 * k + 1) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalResult {
    pub algorithm: Estimator,
    pub config: ProblemConfig,
    pub thresholds: SelectionThresholds,
    /// Number of variables N.
    pub n: usize,
    /// Number of samples M.
    pub samples: usize,
    pub repeats: usize,
    pub realizations: usize,
    pub master_seed: u64,
    pub seeds: Vec<RealizationSeeds>,
    /// Selection frequencies of the first realization.
    pub selection_prob: Vec<f64>,
    pub q: Stat,
    pub m: Stat,
    pub v: Stat,
    pub v_knock: Option<Stat>,
    pub knockoff_mean: Option<Stat>,
    pub tpr: Stat,
    pub fdr: Stat,
    /// Single-draw knockoff rates (knockoffs only).
    pub ko_tpr: Option<Stat>,
    pub ko_fdr: Option<Stat>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub n: usize,
    pub config: ProblemConfig,
    pub algorithm: Estimator,
    pub lambdas: Vec<f64>,
    pub repeats: usize,
    pub realizations: usize,
    pub thresholds: SelectionThresholds,
    pub master_seed: u64,
    pub lasso: LassoSettings,
}

impl ExperimentPlan {
    /// Desk-scale defaults: N = 64, 128 repeats, 200 data realizations.
    pub fn new(config: ProblemConfig, algorithm: Estimator, lambdas: Vec<f64>) -> Self {
        ExperimentPlan {
            n: 64,
            config,
            algorithm,
            lambdas,
            repeats: 128,
            realizations: 200,
            thresholds: SelectionThresholds::default(),
            master_seed: 0,
            lasso: LassoSettings::default(),
        }
    }
}

fn one_realization(plan: &ExperimentPlan, k: usize) -> Result<(Vec<DatasetRecord>, Vec<f64>)> {
    let seeds = realization_seeds(plan.master_seed, k);
    let data = generate_dataset(plan.n, &plan.config, seeds.data)?;
    let records = match plan.algorithm {
        Estimator::Ss => {
            ss_empirical_path(&data, &plan.lambdas, plan.config.mu_b, plan.repeats, seeds.randomization, &plan.lasso)
        }
        Estimator::Dko => {
            dko_empirical_path(&data, &plan.lambdas, plan.thresholds.z_th, plan.repeats, seeds.randomization, &plan.lasso)
        }
        Estimator::Lasso => lasso_empirical_path(&data, &plan.lambdas, &plan.lasso),
    }?;
    Ok((records, data.truth))
}

fn tag(k: usize, err: Error) -> Error {
    match err {
        Error::Draw { draw, source, .. } => Error::Draw { realization: k, draw, source },
        other => Error::Draw { realization: k, draw: 0, source: Box::new(other) },
    }
}

/// Runs every data realization of the plan (in parallel on the current rayon
/// pool) and aggregates one result per λ, in the order of `plan.lambdas`.
pub fn run_sweep(plan: &ExperimentPlan) -> Result<Vec<EmpiricalResult>> {
    plan.config.validate()?;
    if plan.realizations < 8 {
        return Err(Error::domain(format!("need at least 8 data realizations, got {}", plan.realizations)));
    }
    if plan.algorithm != Estimator::Lasso {
        check_repeats(plan.repeats)?;
    }
    descending(&plan.lambdas)?;
    let per_dataset: Vec<(Vec<DatasetRecord>, Vec<f64>)> = (0..plan.realizations)
        .into_par_iter()
        .map(|k| one_realization(plan, k).map_err(|e| tag(k, e)))
        .collect::<Result<_>>()?;
    let seeds: Vec<RealizationSeeds> = (0..plan.realizations).map(|k| realization_seeds(plan.master_seed, k)).collect();
    let samples = super::data::sample_rows(plan.n, plan.config.alpha);
    let repeats = if plan.algorithm == Estimator::Lasso { 1 } else { plan.repeats };
    Ok((0..plan.lambdas.len())
        .map(|j| {
            let records: Vec<&DatasetRecord> = per_dataset.iter().map(|(r, _)| &r[j]).collect();
            let collect = |f: &dyn Fn(&DatasetRecord) -> f64| {
                Stat::from_samples(&records.iter().map(|r| f(r)).collect::<Vec<_>>())
            };
            let rates: Vec<(f64, f64)> = per_dataset
                .iter()
                .map(|(r, truth)| empirical_tpr_fdr(&r[j].selection_prob, truth, plan.thresholds.pi_th))
                .collect();
            let tpr = Stat::from_samples(&rates.iter().map(|r| r.0).collect::<Vec<_>>());
            let fdr = Stat::from_samples(&rates.iter().map(|r| r.1).collect::<Vec<_>>());
            let knock = records[0].v_knock.is_some();
            let opt = |f: &dyn Fn(&DatasetRecord) -> f64| if knock { Some(collect(f)) } else { None };
            EmpiricalResult {
                algorithm: plan.algorithm,
                config: plan.config.with_lambda(plan.lambdas[j]),
                thresholds: plan.thresholds,
                n: plan.n,
                samples,
                repeats,
                realizations: plan.realizations,
                master_seed: plan.master_seed,
                seeds: seeds.clone(),
                selection_prob: records[0].selection_prob.clone(),
                q: collect(&|r| r.q),
                m: collect(&|r| r.m),
                v: collect(&|r| r.v),
                v_knock: opt(&|r| r.v_knock.unwrap_or(0.0)),
                knockoff_mean: opt(&|r| r.knockoff_mean.unwrap_or(0.0)),
                tpr,
                fdr,
                ko_tpr: opt(&|r| r.single_draw_rates.map_or(0.0, |x| x.0)),
                ko_fdr: opt(&|r| r.single_draw_rates.map_or(0.0, |x| x.1)),
            }
        })
        .collect())
}

/// A single-λ experiment; `config.lambda` is the regularization used.
#[allow(clippy::too_many_arguments)]
pub fn run_experiment(
    n: usize,
    config: &ProblemConfig,
    algorithm: Estimator,
    repeats: usize,
    realizations: usize,
    thresholds: &SelectionThresholds,
    master_seed: u64,
    lasso: &LassoSettings,
) -> Result<EmpiricalResult> {
    let plan = ExperimentPlan {
        n,
        config: *config,
        algorithm,
        lambdas: vec![config.lambda],
        repeats,
        realizations,
        thresholds: *thresholds,
        master_seed,
        lasso: *lasso,
    };
    Ok(run_sweep(&plan)?.remove(0))
}

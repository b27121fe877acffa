//! C ABI over the enselect theory solvers, recovery limits and simulator.
//!
//! Conventions: every function returns an [`EnselectStatus`]; results go
//! through out-pointers. Solutions and simulation results are opaque handles
//! released with the matching `*_free`. On failure the message is available
//! from [`enselect_last_error_message`] on the same thread. Panics never cross
//! the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use enselect::simulator::{run_experiment, EmpiricalResult, LassoSettings};
use enselect::{
    dko_prediction_error, dko_tpr_fdr, optimal_lambda, solve_dko, solve_ss, solve_v, ss_prediction_error,
    ss_tpr_fdr, vanilla_ko_tpr_fdr, vanilla_lasso_solution, Algorithm, DkoSolution, Error, Estimator,
    ProblemConfig, SelectionThresholds, SolverSettings, SsSolution,
};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnselectStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument is outside the domain of the operation.
    InvalidArgument = 2,
    /// Divergence, no finite root, or a lasso that did not converge.
    Numerical = 3,
    /// An internal panic was caught.
    Panic = 4,
    /// A caller-provided buffer is too small.
    BufferTooSmall = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnselectEstimator {
    Ss = 0,
    Dko = 1,
    Lasso = 2,
}

impl From<EnselectEstimator> for Estimator {
    fn from(e: EnselectEstimator) -> Self {
        match e {
            EnselectEstimator::Ss => Estimator::Ss,
            EnselectEstimator::Dko => Estimator::Dko,
            EnselectEstimator::Lasso => Estimator::Lasso,
        }
    }
}

/// Model parameters.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnselectConfig {
    pub alpha: f64,
    pub rho: f64,
    pub delta: f64,
    pub lambda: f64,
    pub mu_b: f64,
}

impl From<EnselectConfig> for ProblemConfig {
    fn from(c: EnselectConfig) -> Self {
        ProblemConfig::new(c.alpha, c.rho, c.delta, c.lambda, c.mu_b)
    }
}

/// Fixed-point solver settings.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnselectSolverSettings {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub min_clip: f64,
}

impl From<EnselectSolverSettings> for SolverSettings {
    fn from(s: EnselectSolverSettings) -> Self {
        SolverSettings { damping: s.damping, tol: s.tol, max_iter: s.max_iter, min_clip: s.min_clip }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnselectReport {
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnselectSsParams {
    pub q: f64,
    pub m: f64,
    pub chi: f64,
    pub v: f64,
    pub q_hat: f64,
    pub m_hat: f64,
    pub chi_hat: f64,
    pub v_hat: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnselectDkoParams {
    pub q: f64,
    pub m: f64,
    pub chi: f64,
    pub v: f64,
    pub v_knock: f64,
    pub chi_knock: f64,
    pub q_hat: f64,
    pub q_hat_knock: f64,
    pub m_hat: f64,
    pub chi_hat: f64,
    pub v_hat: f64,
    pub v_hat_knock: f64,
}

/// Mean and standard error over data realizations.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnselectStat {
    pub mean: f64,
    pub se: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnselectStatistic {
    Q = 0,
    M = 1,
    V = 2,
    VKnock = 3,
    Tpr = 4,
    Fdr = 5,
    KnockoffMean = 6,
}

/// Solution of the stability-selection or plain-lasso system.
pub struct EnselectSsSolution(SsSolution);

/// Solution of the derandomized-knockoff system.
pub struct EnselectDkoSolution(DkoSolution);

/// Simulation statistics at one λ.
pub struct EnselectEmpirical(EmpiricalResult);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> EnselectStatus {
    if err.is_numerical() {
        EnselectStatus::Numerical
    } else {
        EnselectStatus::InvalidArgument
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), EnselectStatus>>(f: F) -> EnselectStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            EnselectStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            EnselectStatus::Panic
        }
    }
}

fn lib<T>(r: enselect::Result<T>) -> Result<T, EnselectStatus> {
    r.map_err(|e| {
        set_error(&e.to_string());
        status_of(&e)
    })
}

fn null_error(name: &str) -> EnselectStatus {
    set_error(&format!("{name} is null"));
    EnselectStatus::NullPointer
}

unsafe fn read<'a, T>(p: *const T, name: &str) -> Result<&'a T, EnselectStatus> {
    p.as_ref().ok_or_else(|| null_error(name))
}

unsafe fn write<T>(p: *mut T, name: &str, value: T) -> Result<(), EnselectStatus> {
    if p.is_null() {
        return Err(null_error(name));
    }
    p.write(value);
    Ok(())
}

unsafe fn settings_or_default(p: *const EnselectSolverSettings) -> SolverSettings {
    p.as_ref().map_or_else(SolverSettings::default, |s| (*s).into())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn enselect_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, empty after a success.
/// Valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn enselect_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Fills `out` with the default model parameters.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn enselect_config_default(out: *mut EnselectConfig) -> EnselectStatus {
    guard(|| {
        let c = ProblemConfig::default();
        write(out, "out", EnselectConfig { alpha: c.alpha, rho: c.rho, delta: c.delta, lambda: c.lambda, mu_b: c.mu_b })
    })
}

/// Fills `out` with the default solver settings.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn enselect_solver_settings_default(out: *mut EnselectSolverSettings) -> EnselectStatus {
    guard(|| {
        let s = SolverSettings::default();
        write(
            out,
            "out",
            EnselectSolverSettings { damping: s.damping, tol: s.tol, max_iter: s.max_iter, min_clip: s.min_clip },
        )
    })
}

/// Solves the stability-selection system. `settings` may be null for defaults.
///
/// # Safety
/// Pointers must be null or valid; `*out` receives a handle to free with
/// [`enselect_ss_free`].
#[no_mangle]
pub unsafe extern "C" fn enselect_ss_solve(
    config: *const EnselectConfig,
    settings: *const EnselectSolverSettings,
    out: *mut *mut EnselectSsSolution,
) -> EnselectStatus {
    guard(|| {
        let c: ProblemConfig = (*read(config, "config")?).into();
        let sol = lib(solve_ss(&c, &settings_or_default(settings)))?;
        write(out, "out", Box::into_raw(Box::new(EnselectSsSolution(sol))))
    })
}

/// Solves the plain-lasso system; `mu_b` is ignored. Free with [`enselect_ss_free`].
///
/// # Safety
/// As [`enselect_ss_solve`].
#[no_mangle]
pub unsafe extern "C" fn enselect_lasso_solve(
    config: *const EnselectConfig,
    settings: *const EnselectSolverSettings,
    out: *mut *mut EnselectSsSolution,
) -> EnselectStatus {
    guard(|| {
        let c: ProblemConfig = (*read(config, "config")?).into();
        let sol = lib(vanilla_lasso_solution(&c, &settings_or_default(settings)))?;
        write(out, "out", Box::into_raw(Box::new(EnselectSsSolution(sol))))
    })
}

/// # Safety
/// `sol` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn enselect_ss_free(sol: *mut EnselectSsSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// # Safety
/// `sol` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn enselect_ss_params(sol: *const EnselectSsSolution, out: *mut EnselectSsParams) -> EnselectStatus {
    guard(|| {
        let s = &read(sol, "sol")?.0;
        let (o, h) = (s.order, s.hats);
        write(
            out,
            "out",
            EnselectSsParams {
                q: o.q,
                m: o.m,
                chi: o.chi,
                v: o.v,
                q_hat: h.q_hat,
                m_hat: h.m_hat,
                chi_hat: h.chi_hat,
                v_hat: h.v_hat,
            },
        )
    })
}

/// # Safety
/// `sol` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn enselect_ss_report(sol: *const EnselectSsSolution, out: *mut EnselectReport) -> EnselectStatus {
    guard(|| {
        let r = &read(sol, "sol")?.0.report;
        write(out, "out", EnselectReport { residual: r.residual, iterations: r.iterations, converged: r.converged })
    })
}

/// TPR and FDR of selecting at selection probability above `pi_th`.
///
/// # Safety
/// `sol` must be a live handle; `tpr`, `fdr` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn enselect_ss_tpr_fdr(
    sol: *const EnselectSsSolution,
    pi_th: f64,
    tpr: *mut f64,
    fdr: *mut f64,
) -> EnselectStatus {
    guard(|| {
        let s = &read(sol, "sol")?.0;
        if !(0.0..=1.0).contains(&pi_th) {
            set_error(&format!("pi_th must lie in [0, 1], got {pi_th}"));
            return Err(EnselectStatus::InvalidArgument);
        }
        let (t, f) = ss_tpr_fdr(s, pi_th);
        write(tpr, "tpr", t)?;
        write(fdr, "fdr", f)
    })
}

/// # Safety
/// `sol` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn enselect_ss_prediction_error(sol: *const EnselectSsSolution, out: *mut f64) -> EnselectStatus {
    guard(|| write(out, "out", ss_prediction_error(&read(sol, "sol")?.0)))
}

/// Solves the derandomized-knockoff system. `settings` may be null.
///
/// # Safety
/// As [`enselect_ss_solve`]; free with [`enselect_dko_free`].
#[no_mangle]
pub unsafe extern "C" fn enselect_dko_solve(
    config: *const EnselectConfig,
    settings: *const EnselectSolverSettings,
    out: *mut *mut EnselectDkoSolution,
) -> EnselectStatus {
    guard(|| {
        let c: ProblemConfig = (*read(config, "config")?).into();
        let sol = lib(solve_dko(&c, &settings_or_default(settings)))?;
        write(out, "out", Box::into_raw(Box::new(EnselectDkoSolution(sol))))
    })
}

/// # Safety
/// `sol` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn enselect_dko_free(sol: *mut EnselectDkoSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// # Safety
/// `sol` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn enselect_dko_params(sol: *const EnselectDkoSolution, out: *mut EnselectDkoParams) -> EnselectStatus {
    guard(|| {
        let s = &read(sol, "sol")?.0;
        let (o, h) = (s.order, s.hats);
        write(
            out,
            "out",
            EnselectDkoParams {
                q: o.q,
                m: o.m,
                chi: o.chi,
                v: o.v,
                v_knock: o.v_knock,
                chi_knock: o.chi_knock,
                q_hat: h.q_hat,
                q_hat_knock: h.q_hat_knock,
                m_hat: h.m_hat,
                chi_hat: h.chi_hat,
                v_hat: h.v_hat,
                v_hat_knock: h.v_hat_knock,
            },
        )
    })
}

/// # Safety
/// `sol` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn enselect_dko_report(sol: *const EnselectDkoSolution, out: *mut EnselectReport) -> EnselectStatus {
    guard(|| {
        let r = &read(sol, "sol")?.0.report;
        write(out, "out", EnselectReport { residual: r.residual, iterations: r.iterations, converged: r.converged })
    })
}

fn check_thresholds(z_th: f64, pi_th: f64) -> Result<(), EnselectStatus> {
    if !(z_th >= 0.0 && z_th.is_finite()) || !(0.0..=1.0).contains(&pi_th) {
        set_error(&format!("need z_th >= 0 and pi_th in [0, 1], got {z_th}, {pi_th}"));
        return Err(EnselectStatus::InvalidArgument);
    }
    Ok(())
}

/// TPR and FDR of the derandomized filter at thresholds `z_th` and `pi_th`.
///
/// # Safety
/// `sol` must be a live handle; `tpr`, `fdr` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn enselect_dko_tpr_fdr(
    sol: *const EnselectDkoSolution,
    z_th: f64,
    pi_th: f64,
    tpr: *mut f64,
    fdr: *mut f64,
) -> EnselectStatus {
    guard(|| {
        let s = &read(sol, "sol")?.0;
        check_thresholds(z_th, pi_th)?;
        let (t, f) = dko_tpr_fdr(s, &SelectionThresholds { z_th, pi_th });
        write(tpr, "tpr", t)?;
        write(fdr, "fdr", f)
    })
}

/// TPR and FDR of a single knockoff draw at threshold `z_th`.
///
/// # Safety
/// `sol` must be a live handle; `tpr`, `fdr` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn enselect_ko_tpr_fdr(
    sol: *const EnselectDkoSolution,
    z_th: f64,
    tpr: *mut f64,
    fdr: *mut f64,
) -> EnselectStatus {
    guard(|| {
        let s = &read(sol, "sol")?.0;
        check_thresholds(z_th, 0.5)?;
        let (t, f) = vanilla_ko_tpr_fdr(s, z_th);
        write(tpr, "tpr", t)?;
        write(fdr, "fdr", f)
    })
}

/// # Safety
/// `sol` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn enselect_dko_prediction_error(sol: *const EnselectDkoSolution, out: *mut f64) -> EnselectStatus {
    guard(|| write(out, "out", dko_prediction_error(&read(sol, "sol")?.0)))
}

/// λ minimizing the asymptotic prediction error of `estimator`;
/// `config->lambda` is ignored. `settings` may be null.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn enselect_optimal_lambda(
    estimator: EnselectEstimator,
    config: *const EnselectConfig,
    settings: *const EnselectSolverSettings,
    lambda: *mut f64,
    prediction_error: *mut f64,
) -> EnselectStatus {
    guard(|| {
        let c: ProblemConfig = (*read(config, "config")?).into();
        let opt = lib(optimal_lambda(estimator.into(), &c, &settings_or_default(settings)))?;
        write(lambda, "lambda", opt.lambda)?;
        write(prediction_error, "prediction_error", opt.prediction_error)
    })
}

/// Critical sample ratio of noiseless recovery. `mu_b > 0` selects stability
/// selection with that resampling rate; `mu_b == 0` selects derandomized knockoffs.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn enselect_critical_alpha(mu_b: f64, rho: f64, rel_tol: f64, out: *mut f64) -> EnselectStatus {
    guard(|| {
        let alg = if mu_b == 0.0 { Algorithm::Dko } else { Algorithm::Ss { mu_b } };
        if !(rel_tol > 0.0) {
            set_error(&format!("rel_tol must be positive, got {rel_tol}"));
            return Err(EnselectStatus::InvalidArgument);
        }
        let a = lib(enselect::recon_limit::critical_alpha(alg, rho, rel_tol))?;
        write(out, "out", a)
    })
}

/// Positive root V of the noiseless V equation; `Numerical` when none exists.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn enselect_solve_v(alpha_eff: f64, rho_eff: f64, out: *mut f64) -> EnselectStatus {
    guard(|| write(out, "out", lib(solve_v(alpha_eff, rho_eff))?))
}

/// Monte Carlo estimate of the statistics at `config->lambda`.
///
/// # Safety
/// Pointers must be null or valid; free `*out` with [`enselect_empirical_free`].
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn enselect_simulate(
    estimator: EnselectEstimator,
    config: *const EnselectConfig,
    n: usize,
    repeats: usize,
    realizations: usize,
    z_th: f64,
    pi_th: f64,
    seed: u64,
    out: *mut *mut EnselectEmpirical,
) -> EnselectStatus {
    guard(|| {
        let c: ProblemConfig = (*read(config, "config")?).into();
        check_thresholds(z_th, pi_th)?;
        let r = lib(run_experiment(
            n,
            &c,
            estimator.into(),
            repeats,
            realizations,
            &SelectionThresholds { z_th, pi_th },
            seed,
            &LassoSettings::default(),
        ))?;
        write(out, "out", Box::into_raw(Box::new(EnselectEmpirical(r))))
    })
}

/// # Safety
/// `result` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn enselect_empirical_free(result: *mut EnselectEmpirical) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// One statistic of a simulation; `InvalidArgument` for knockoff-only
/// statistics of other estimators.
///
/// # Safety
/// `result` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn enselect_empirical_stat(
    result: *const EnselectEmpirical,
    statistic: EnselectStatistic,
    out: *mut EnselectStat,
) -> EnselectStatus {
    guard(|| {
        let r = &read(result, "result")?.0;
        let stat = match statistic {
            EnselectStatistic::Q => Some(r.q),
            EnselectStatistic::M => Some(r.m),
            EnselectStatistic::V => Some(r.v),
            EnselectStatistic::VKnock => r.v_knock,
            EnselectStatistic::Tpr => Some(r.tpr),
            EnselectStatistic::Fdr => Some(r.fdr),
            EnselectStatistic::KnockoffMean => r.knockoff_mean,
        };
        let Some(s) = stat else {
            set_error(&format!("{statistic:?} is not available for {:?}", r.algorithm));
            return Err(EnselectStatus::InvalidArgument);
        };
        write(out, "out", EnselectStat { mean: s.mean, se: s.se })
    })
}

/// Serializes the result as JSON into `buf` (NUL-terminated). `*needed`
/// receives the required size including the terminator; if `len` is smaller
/// the call returns `BufferTooSmall` and writes nothing. `buf` may be null
/// when `len` is 0.
///
/// # Safety
/// `buf` must be valid for `len` bytes; other pointers as usual.
#[no_mangle]
pub unsafe extern "C" fn enselect_empirical_json(
    result: *const EnselectEmpirical,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> EnselectStatus {
    guard(|| {
        let r = &read(result, "result")?.0;
        let json = lib(serde_json::to_string(r).map_err(Error::from))?;
        let size = json.len() + 1;
        write(needed, "needed", size)?;
        if len < size {
            set_error(&format!("buffer of {len} bytes, need {size}"));
            return Err(EnselectStatus::BufferTooSmall);
        }
        if buf.is_null() {
            return Err(null_error("buf"));
        }
        std::ptr::copy_nonoverlapping(json.as_ptr(), buf.cast::<u8>(), json.len());
        *buf.add(json.len()) = 0;
        Ok(())
    })
}

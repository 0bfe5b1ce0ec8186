use super::kalman::{factor_with_jitter, kalman_update, KalmanStep, JITTER_TRIGGER};
use super::{InferenceError, ObservationModel, ObservationSeries};
use crate::lna::{
    lna_predict, lna_predict_global, lna_transition_density, symmetrize, EtaPath, GaussianDist, IntegratorConfig,
    LnaError,
};
use crate::network::ReactionNetwork;
use nalgebra::{DVector, SymmetricEigen};
use std::f64::consts::PI;

/// Output of a Kalman-filter likelihood evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterResult {
    pub loglik: f64,
    /// Filtered state laws at `t_0..t_n`.
    pub filtered: Vec<GaussianDist>,
    /// One-step predictive laws of `y_1..y_n`.
    pub predictive: Vec<GaussianDist>,
    /// One-step predicted state laws at `t_1..t_n`.
    pub predicted: Vec<GaussianDist>,
    /// The `y_0` term was omitted because the prior is a point mass observed
    /// without noise, which makes it a constant.
    pub y0_dropped: bool,
    /// Number of innovation covariances that needed the jitter.
    pub jittered: usize,
    /// Some deterministic path went below zero.
    pub eta_went_negative: bool,
}

impl FilterResult {
    /// Mean over `i = 1..n` of `|y_i - E[y_i | y_{0:i-1}]|^2`.
    pub fn mean_squared_prediction_error(&self, series: &ObservationSeries) -> f64 {
        let n = self.predictive.len();
        let total: f64 =
            self.predictive.iter().zip(&series.values()[1..]).map(|(p, y)| (y - &p.mean).norm_squared()).sum();
        total / n as f64
    }
}

fn interval_error(index: usize) -> impl Fn(LnaError) -> InferenceError {
    move |source| InferenceError::Interval { index, source }
}

fn check_dims(net: &ReactionNetwork, obs: &ObservationModel, d: usize) -> Result<(), InferenceError> {
    if obs.n_states() != net.n_species() {
        return Err(InferenceError::Dimension {
            what: "observation matrix columns",
            expected: net.n_species(),
            got: obs.n_states(),
        });
    }
    if obs.obs_dim() != d {
        return Err(InferenceError::Dimension { what: "observations", expected: obs.obs_dim(), got: d });
    }
    Ok(())
}

fn update(pred: &GaussianDist, obs: &ObservationModel, y: &DVector<f64>, i: usize) -> Result<KalmanStep, InferenceError> {
    kalman_update(pred, obs, y).map_err(|e| e.at_observation(i))
}

/// Conditions the prior on `y_0`. Returns the step and whether its term is
/// dropped.
fn initial_step(obs: &ObservationModel, y0: &DVector<f64>) -> Result<(KalmanStep, bool), InferenceError> {
    let step = update(&obs.prior(), obs, y0, 0)?;
    let dropped = obs.sigma0().iter().all(|&v| v == 0.0) && obs.v().iter().all(|&v| v == 0.0);
    Ok((step, dropped))
}

fn start_result(step: &KalmanStep, dropped: bool, capacity: usize) -> FilterResult {
    let mut filtered = Vec::with_capacity(capacity);
    filtered.push(step.posterior.clone());
    FilterResult {
        loglik: if dropped { 0.0 } else { step.log_predictive },
        filtered,
        predictive: Vec::with_capacity(capacity),
        predicted: Vec::with_capacity(capacity),
        y0_dropped: dropped,
        jittered: (step.jittered && !dropped) as usize,
        eta_went_negative: false,
    }
}

fn record(out: &mut FilterResult, pred: GaussianDist, step: KalmanStep) {
    out.loglik += step.log_predictive;
    out.jittered += step.jittered as usize;
    out.predicted.push(pred);
    out.predictive.push(step.predictive);
    out.filtered.push(step.posterior);
}

/// Restarted-LNA filter from a filtered law `start` at `t_start` over the
/// observations `(times[i], values[i])`, all later than `t_start`. Interval
/// indices in errors count from `first_index`.
#[allow(clippy::too_many_arguments)]
fn run_restart(
    net: &ReactionNetwork,
    theta: &[f64],
    obs: &ObservationModel,
    out: &mut FilterResult,
    t_start: f64,
    times: &[f64],
    values: &[DVector<f64>],
    first_index: usize,
    cfg: &IntegratorConfig,
) -> Result<(), InferenceError> {
    let mut t_prev = t_start;
    for (k, (&t, y)) in times.iter().zip(values).enumerate() {
        let i = first_index + k;
        let current = out.filtered.last().expect("filter has a starting law");
        let p = lna_predict(net, theta, current.mean.as_slice(), &current.cov, t - t_prev, cfg)
            .map_err(interval_error(i))?;
        out.eta_went_negative |= p.eta_went_negative;
        let pred = GaussianDist::new(p.eta, p.psi);
        let step = update(&pred, obs, y, i)?;
        record(out, pred, step);
        t_prev = t;
    }
    Ok(())
}

/// Kalman-filter log-likelihood with the deterministic path restarted at the
/// filtered mean of each interval.
pub fn loglik_lna_filter(
    net: &ReactionNetwork,
    theta: &[f64],
    obs: &ObservationModel,
    series: &ObservationSeries,
    cfg: &IntegratorConfig,
) -> Result<FilterResult, InferenceError> {
    check_dims(net, obs, series.dim())?;
    let (step, dropped) = initial_step(obs, &series.values()[0])?;
    let mut out = start_result(&step, dropped, series.len());
    let t = series.times();
    run_restart(net, theta, obs, &mut out, t[0], &t[1..], &series.values()[1..], 1, cfg)?;
    Ok(out)
}

/// Continues the restarted filter from the filtered law `start` at time
/// `t_start` over later observations. The result's `filtered[0]` is `start`
/// and its log-likelihood covers only the new observations.
#[allow(clippy::too_many_arguments)]
pub fn continue_lna_filter(
    net: &ReactionNetwork,
    theta: &[f64],
    obs: &ObservationModel,
    start: &GaussianDist,
    t_start: f64,
    times: &[f64],
    values: &[DVector<f64>],
    cfg: &IntegratorConfig,
) -> Result<FilterResult, InferenceError> {
    if times.len() != values.len() || times.is_empty() {
        return Err(InferenceError::InvalidSeries("need matching, non-empty times and observations".into()));
    }
    if !(times[0] > t_start) || !times.windows(2).all(|w| w[1] > w[0]) {
        return Err(InferenceError::InvalidSeries("times must be strictly increasing after the start".into()));
    }
    check_dims(net, obs, values[0].len())?;
    let mut out = FilterResult {
        loglik: 0.0,
        filtered: vec![start.clone()],
        predictive: Vec::new(),
        predicted: Vec::new(),
        y0_dropped: false,
        jittered: 0,
        eta_went_negative: false,
    };
    run_restart(net, theta, obs, &mut out, t_start, times, values, 1, cfg)?;
    Ok(out)
}

/// Kalman-filter log-likelihood along a single deterministic path solved
/// from `x0` at `t_0`; the perturbation mean is carried across intervals.
pub fn loglik_lna_global(
    net: &ReactionNetwork,
    theta: &[f64],
    x0: &[f64],
    obs: &ObservationModel,
    series: &ObservationSeries,
    cfg: &IntegratorConfig,
) -> Result<FilterResult, InferenceError> {
    check_dims(net, obs, series.dim())?;
    let times = series.times();
    let path = EtaPath::solve(net, theta, x0, times, cfg).map_err(|e| {
        let t = match &e {
            LnaError::Integration(ie) => ie.time().unwrap_or(times[0]),
            _ => times[0],
        };
        interval_error(times.partition_point(|&s| s < t).max(1))(e)
    })?;
    let (step, dropped) = initial_step(obs, &series.values()[0])?;
    let mut out = start_result(&step, dropped, series.len());
    let mut m = &step.posterior.mean - &path.states()[0];
    for i in 1..series.len() {
        let cov = &out.filtered[i - 1].cov;
        let st = lna_predict_global(net, theta, &path, m.as_slice(), cov, times[i - 1], times[i], cfg)
            .map_err(interval_error(i))?;
        out.eta_went_negative |= st.eta.iter().any(|&v| v < -cfg.atol);
        let pred = GaussianDist::new(&st.eta + &st.m, st.psi);
        let step = update(&pred, obs, &series.values()[i], i)?;
        m = &step.posterior.mean - &st.eta;
        record(&mut out, pred, step);
    }
    Ok(out)
}

/// `sum_i log N(y_i; P eta(t_i), sigma2 I)` with `eta` the rate-equation
/// solution from `x0` at `t_0`.
pub fn loglik_ode_gauss(
    net: &ReactionNetwork,
    theta: &[f64],
    x0: &[f64],
    sigma2: f64,
    obs: &ObservationModel,
    series: &ObservationSeries,
    cfg: &IntegratorConfig,
) -> Result<f64, InferenceError> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(InferenceError::BadSigma2(sigma2));
    }
    check_dims(net, obs, series.dim())?;
    let path = EtaPath::solve(net, theta, x0, series.times(), cfg).map_err(interval_error(0))?;
    let d = series.dim() as f64;
    let norm = -0.5 * d * (2.0 * PI * sigma2).ln();
    Ok(path
        .states()
        .iter()
        .zip(series.values())
        .map(|(eta, y)| norm - (y - obs.p() * eta).norm_squared() / (2.0 * sigma2))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullyObservedLoglik {
    pub loglik: f64,
    /// Some observation fell off the support of a singular transition law.
    pub degenerate: bool,
}

/// `log N(x; mean, cov)` allowing singular `cov`: `-inf` (flagged) when `x`
/// leaves the support, otherwise the jittered density.
fn support_aware_logpdf(x: &DVector<f64>, g: &GaussianDist) -> Result<(f64, bool), InferenceError> {
    let r = x - &g.mean;
    let cov = symmetrize(&g.cov);
    let eig = SymmetricEigen::new(cov.clone());
    let tol = 1e-8 * x.amax().max(1.0);
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l < JITTER_TRIGGER && eig.eigenvectors.column(k).dot(&r).abs() > tol {
            return Ok((f64::NEG_INFINITY, true));
        }
    }
    let f = factor_with_jitter(&cov, cov.trace())
        .map_err(|min_eigenvalue| InferenceError::FilterFailure { index: 0, min_eigenvalue })?;
    Ok((f.log_density(&r), false))
}

/// Sum of LNA transition log-densities between consecutive exactly observed
/// full states.
pub fn loglik_fully_observed(
    net: &ReactionNetwork,
    theta: &[f64],
    series: &ObservationSeries,
    cfg: &IntegratorConfig,
) -> Result<FullyObservedLoglik, InferenceError> {
    let n = net.n_species();
    if series.dim() != n {
        return Err(InferenceError::Dimension { what: "observations", expected: n, got: series.dim() });
    }
    let (t, x) = (series.times(), series.values());
    let mut out = FullyObservedLoglik { loglik: 0.0, degenerate: false };
    for i in 1..series.len() {
        let g = lna_transition_density(net, theta, x[i - 1].as_slice(), t[i] - t[i - 1], cfg)
            .map_err(interval_error(i))?;
        let (l, degenerate) = support_aware_logpdf(&x[i], &g).map_err(|e| e.at_observation(i))?;
        out.loglik += l;
        out.degenerate |= degenerate;
    }
    Ok(out)
}

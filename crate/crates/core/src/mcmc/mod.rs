//! Random-walk Metropolis on `log10` rate constants.

mod chain;
mod prior;

pub use chain::{
    ess, log_accept_ratio, quantile, rwm_chain, summarize, tune_proposal, ChainSummary, Ess, ParamSummary,
    SampleChain, TuneResult, MAX_PROBE_ROUNDS, MIN_ESS_LENGTH, PROBE_ITERS, TARGET_ACCEPTANCE,
};
pub use prior::{log_prior, Prior, PriorSpec};

use crate::inference::{
    loglik_lna_filter, loglik_lna_global, loglik_ode_gauss, InferenceError, ObservationModel, ObservationSeries,
};
use crate::lna::IntegratorConfig;
use crate::network::ReactionNetwork;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum McmcError {
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
    #[error("prior spec line {line}: {message}")]
    PriorSyntax { line: usize, message: String },
    #[error("iteration count must be at least 1")]
    NoIterations,
    #[error("dimension {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("proposal covariance: {0}")]
    ProposalCovariance(String),
    #[error("log-posterior at the initial state is {0}")]
    NonFiniteStart(f64),
    #[error("series of length {got} is shorter than {min}")]
    SeriesTooShort { got: usize, min: usize },
    #[error("burn-in {burnin} leaves no draws out of {iters}")]
    BurninTooLong { burnin: usize, iters: usize },
}

/// Likelihood used inside the posterior.
#[derive(Debug, Clone, PartialEq)]
pub enum Engine {
    /// Kalman filter over restarted LNA steps.
    Lna,
    /// Kalman filter along one deterministic path from the fixed `x0`.
    LnaGlobal { x0: Vec<f64> },
    /// Rate equations from the fixed `x0` with Gaussian errors; `sigma2 =
    /// None` samples the error variance as an extra coordinate.
    Ode { x0: Vec<f64>, sigma2: Option<f64> },
}

impl Engine {
    pub fn samples_sigma2(&self) -> bool {
        matches!(self, Engine::Ode { sigma2: None, .. })
    }
}

/// Log-posterior over `log10` coordinates: the network's parameters, then
/// `sigma2` when the ODE engine samples it.
#[derive(Debug, Clone)]
pub struct LogPosterior<'a> {
    pub net: &'a ReactionNetwork,
    pub obs: &'a ObservationModel,
    pub series: &'a ObservationSeries,
    pub engine: Engine,
    pub priors: PriorSpec,
    pub jacobian: bool,
    pub cfg: IntegratorConfig,
}

impl<'a> LogPosterior<'a> {
    /// `priors` must list one prior per coordinate, in coordinate order.
    pub fn new(
        net: &'a ReactionNetwork,
        obs: &'a ObservationModel,
        series: &'a ObservationSeries,
        engine: Engine,
        priors: PriorSpec,
        cfg: IntegratorConfig,
    ) -> Result<Self, McmcError> {
        let want = net.n_params() + engine.samples_sigma2() as usize;
        if priors.len() != want {
            return Err(McmcError::Dimension { expected: want, got: priors.len() });
        }
        Ok(Self { net, obs, series, engine, priors, jacobian: true, cfg })
    }

    pub fn dim(&self) -> usize {
        self.priors.len()
    }

    pub fn coordinate_names(&self) -> &[String] {
        self.priors.names()
    }

    /// Log-likelihood at natural-scale `theta` (and `sigma2` if sampled).
    pub fn loglik(&self, values: &[f64]) -> Result<f64, InferenceError> {
        let theta = &values[..self.net.n_params()];
        match &self.engine {
            Engine::Lna => loglik_lna_filter(self.net, theta, self.obs, self.series, &self.cfg).map(|r| r.loglik),
            Engine::LnaGlobal { x0 } => {
                loglik_lna_global(self.net, theta, x0, self.obs, self.series, &self.cfg).map(|r| r.loglik)
            }
            Engine::Ode { x0, sigma2 } => {
                let s2 = sigma2.unwrap_or_else(|| values[self.net.n_params()]);
                loglik_ode_gauss(self.net, theta, x0, s2, self.obs, self.series, &self.cfg)
            }
        }
    }

    /// `-inf` outside the prior support, NaN when the likelihood fails.
    pub fn eval(&self, log10_values: &[f64]) -> f64 {
        let values: Vec<f64> = log10_values.iter().map(|v| 10f64.powf(*v)).collect();
        let lp = log_prior(self.priors.priors(), &values, self.jacobian);
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        match self.loglik(&values) {
            Ok(ll) if !ll.is_nan() => lp + ll,
            Ok(_) => f64::NAN,
            Err(e) => {
                log::trace!("likelihood failed at {values:?}: {e}");
                f64::NAN
            }
        }
    }
}

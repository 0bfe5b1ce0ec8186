//! Linear noise approximation.
//!
//! The state is split as `X = eta + M`, where `eta` follows the deterministic
//! rate equations `d eta/dt = A'h(eta)` and the perturbation `M` solves the
//! linear SDE `dM = F M dt + S dW` with `F = d(A'h)/dx` and
//! `S S' = A' diag(h) A`, both evaluated along `eta`. `M` stays Gaussian with
//! mean `dm/dt = F m` and covariance `dPsi/dt = Psi F' + F Psi + S S'`.
//!
//! Two ways of chaining intervals are supported: [`lna_predict`] restarts the
//! deterministic path at a new point each interval (with `m = 0`), while
//! [`lna_predict_global`] keeps one path solved from the initial state and
//! carries a nonzero `m` forward.

mod ode;
mod psd;

pub use ode::{integrate_observed, integrate_ode, IntegrationError, IntegratorConfig, OdeStats};
pub use psd::{clip_psd, clip_psd_scaled, min_eigenvalue, psd_sqrt, psd_sqrt_clipped, symmetrize, PsdError, NEGATIVITY_FLOOR};

use crate::network::{EvalError, ReactionNetwork};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LnaError {
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error("covariance is not positive semi-definite: {0}")]
    Covariance(#[from] PsdError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{what} has dimension {got}, expected {expected}")]
    Dimension { what: &'static str, expected: usize, got: usize },
    #[error("time {t} is outside the deterministic path [{start}, {end}] or not one of its knots")]
    PathDomain { t: f64, start: f64, end: f64 },
    #[error("interval length must be nonnegative and finite, got {0}")]
    BadInterval(f64),
}

/// Multivariate normal law given by mean and covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDist {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianDist {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        debug_assert_eq!(cov.nrows(), mean.len());
        debug_assert_eq!(cov.ncols(), mean.len());
        Self { mean, cov }
    }

    /// Point mass at `mean`.
    pub fn point(mean: DVector<f64>) -> Self {
        let n = mean.len();
        Self { mean, cov: DMatrix::zeros(n, n) }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn sd(&self) -> DVector<f64> {
        self.cov.diagonal().map(|v| v.max(0.0).sqrt())
    }
}

/// Deterministic path, perturbation mean and covariance at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct LnaState {
    pub eta: DVector<f64>,
    pub m: DVector<f64>,
    pub psi: DMatrix<f64>,
}

/// Output of a restarted LNA step.
#[derive(Debug, Clone, PartialEq)]
pub struct LnaPrediction {
    pub eta: DVector<f64>,
    pub psi: DMatrix<f64>,
    /// Set when some component of `eta` dropped below `-atol` during the step.
    pub eta_went_negative: bool,
}

/// Right-hand side of the joint `(eta, [m], Psi)` system with scratch buffers.
struct LnaField<'a> {
    net: &'a ReactionNetwork,
    theta: &'a [f64],
    with_mean: bool,
    h: Vec<f64>,
    dh: Vec<f64>,
    f: Vec<f64>,
    d: Vec<f64>,
}

impl<'a> LnaField<'a> {
    fn new(net: &'a ReactionNetwork, theta: &'a [f64], with_mean: bool) -> Self {
        let (n, r) = (net.n_species(), net.n_reactions());
        Self { net, theta, with_mean, h: vec![0.0; r], dh: vec![0.0; r * n], f: vec![0.0; n * n], d: vec![0.0; n * n] }
    }

    fn eval(&mut self, y: &[f64], dy: &mut [f64]) -> Result<(), EvalError> {
        let n = self.net.n_species();
        let eta = &y[..n];
        self.net.propensities_into(eta, self.theta, &mut self.h)?;
        self.net.rate_jacobian_into(eta, self.theta, &mut self.dh)?;
        self.net.drift_from_rates(&self.h, &mut dy[..n]);
        self.net.drift_jacobian_from_rate_jacobian(&self.dh, &mut self.f);
        self.net.diffusion_from_rates(&self.h, &mut self.d);
        let f = &self.f;
        let mut off = n;
        if self.with_mean {
            let m = &y[n..2 * n];
            for a in 0..n {
                dy[n + a] = (0..n).map(|c| f[a * n + c] * m[c]).sum();
            }
            off = 2 * n;
        }
        let psi = &y[off..off + n * n];
        let dpsi = &mut dy[off..off + n * n];
        for a in 0..n {
            for b in 0..n {
                let mut s = self.d[a * n + b];
                for c in 0..n {
                    s += psi[a * n + c] * f[b * n + c] + f[a * n + c] * psi[c * n + b];
                }
                dpsi[a * n + b] = s;
            }
        }
        Ok(())
    }
}

fn check_len(what: &'static str, got: usize, expected: usize) -> Result<(), LnaError> {
    if got != expected {
        return Err(LnaError::Dimension { what, expected, got });
    }
    Ok(())
}

fn check_cov(what: &'static str, m: &DMatrix<f64>, n: usize) -> Result<(), LnaError> {
    check_len(what, m.nrows(), n)?;
    check_len(what, m.ncols(), n)
}

fn push_matrix(y: &mut Vec<f64>, m: &DMatrix<f64>) {
    let n = m.nrows();
    for a in 0..n {
        for b in 0..n {
            y.push(m[(a, b)]);
        }
    }
}

fn read_psi(y: &[f64], n: usize) -> Result<DMatrix<f64>, LnaError> {
    Ok(clip_psd(&DMatrix::from_row_slice(n, n, y))?)
}

/// Integrates `eta` and `Psi` over `dt` starting from `(eta0, psi0)` with
/// `m = 0`; the returned covariance is symmetrized and eigenvalue-clipped.
pub fn lna_predict(
    net: &ReactionNetwork,
    theta: &[f64],
    eta0: &[f64],
    psi0: &DMatrix<f64>,
    dt: f64,
    cfg: &IntegratorConfig,
) -> Result<LnaPrediction, LnaError> {
    let n = net.n_species();
    check_len("eta0", eta0.len(), n)?;
    check_cov("psi0", psi0, n)?;
    if !(dt >= 0.0 && dt.is_finite()) {
        return Err(LnaError::BadInterval(dt));
    }
    let psi0 = clip_psd(psi0)?;
    let mut y0 = Vec::with_capacity(n + n * n);
    y0.extend_from_slice(eta0);
    push_matrix(&mut y0, &psi0);

    let mut field = LnaField::new(net, theta, false);
    let mut negative = false;
    let atol = cfg.atol;
    let (y, _) = integrate_observed(
        |_, y: &[f64], dy: &mut [f64]| field.eval(y, dy),
        &y0,
        0.0,
        dt,
        cfg,
        |_, y: &[f64]| negative |= y[..n].iter().any(|&v| v < -atol),
    )?;
    if negative {
        log::debug!("deterministic path dropped below zero during LNA step");
    }
    Ok(LnaPrediction { eta: DVector::from_column_slice(&y[..n]), psi: read_psi(&y[n..], n)?, eta_went_negative: negative })
}

/// Gaussian LNA transition law from a known state over `dt`.
pub fn lna_transition_density(
    net: &ReactionNetwork,
    theta: &[f64],
    x_prev: &[f64],
    dt: f64,
    cfg: &IntegratorConfig,
) -> Result<GaussianDist, LnaError> {
    let n = net.n_species();
    let pred = lna_predict(net, theta, x_prev, &DMatrix::zeros(n, n), dt, cfg)?;
    Ok(GaussianDist::new(pred.eta, pred.psi))
}

/// Deterministic solution of the rate equations, stored at a set of knots.
///
/// Values between knots are recovered by integrating the same flow from the
/// nearest preceding knot.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaPath {
    times: Vec<f64>,
    states: Vec<DVector<f64>>,
}

impl EtaPath {
    /// Solves `d eta/dt = A'h(eta)` once from `x0` at `times[0]`, recording the
    /// state at every entry of the increasing `times`.
    pub fn solve(
        net: &ReactionNetwork,
        theta: &[f64],
        x0: &[f64],
        times: &[f64],
        cfg: &IntegratorConfig,
    ) -> Result<Self, LnaError> {
        let n = net.n_species();
        check_len("x0", x0.len(), n)?;
        let Some(&t_start) = times.first() else {
            return Err(LnaError::Dimension { what: "time grid", expected: 1, got: 0 });
        };
        let mut h = vec![0.0; net.n_reactions()];
        let mut y = x0.to_vec();
        let mut states = vec![DVector::from_column_slice(x0)];
        let mut t = t_start;
        for &t_next in &times[1..] {
            if !(t_next >= t) {
                return Err(LnaError::BadInterval(t_next - t));
            }
            y = integrate_ode(
                |_, y: &[f64], dy: &mut [f64]| -> Result<(), EvalError> {
                    net.propensities_into(y, theta, &mut h)?;
                    net.drift_from_rates(&h, dy);
                    Ok(())
                },
                &y,
                t,
                t_next,
                cfg,
            )?;
            states.push(DVector::from_column_slice(&y));
            t = t_next;
        }
        Ok(Self { times: times.to_vec(), states })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[DVector<f64>] {
        &self.states
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().expect("path has at least one knot")
    }

    fn knot(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&k| k == t)
    }

    /// State at a knot time.
    pub fn at_knot(&self, t: f64) -> Option<&DVector<f64>> {
        self.knot(t).map(|i| &self.states[i])
    }
}

/// Propagates `(m, Psi)` from `t0` to `t1` along the fixed path, without
/// restarting it. `t0` must be a knot of `path` and `t1` inside its span.
/// The predicted mean of `X(t1)` is `eta + m` of the result. Each call starts
/// from the stored knot at `t0`.
#[allow(clippy::too_many_arguments)]
pub fn lna_predict_global(
    net: &ReactionNetwork,
    theta: &[f64],
    path: &EtaPath,
    m0: &[f64],
    psi0: &DMatrix<f64>,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<LnaState, LnaError> {
    let n = net.n_species();
    check_len("m0", m0.len(), n)?;
    check_cov("psi0", psi0, n)?;
    let domain = |t| LnaError::PathDomain { t, start: path.start(), end: path.end() };
    let i0 = path.knot(t0).ok_or_else(|| domain(t0))?;
    if !(t1 >= t0 && t1 <= path.end()) {
        return Err(domain(t1));
    }
    let psi0 = clip_psd(psi0)?;
    let eta0 = &path.states[i0];
    check_len("path state", eta0.len(), n)?;

    let mut y0 = Vec::with_capacity(2 * n + n * n);
    y0.extend_from_slice(eta0.as_slice());
    y0.extend_from_slice(m0);
    push_matrix(&mut y0, &psi0);
    let mut field = LnaField::new(net, theta, true);
    let y = integrate_ode(|_, y: &[f64], dy: &mut [f64]| field.eval(y, dy), &y0, t0, t1, cfg)?;

    // eta at t1 comes from the joint solve so that, with m0 = 0, the step
    // matches a restarted prediction from the same knot exactly.
    Ok(LnaState { eta: DVector::from_column_slice(&y[..n]), m: DVector::from_column_slice(&y[n..2 * n]), psi: read_psi(&y[2 * n..], n)? })
}

use super::McmcError;
use crate::lna::psd_sqrt;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

/// Stored output of a random-walk Metropolis run.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleChain {
    /// `iters x n_p`; row `k` is the state after iteration `k + 1`.
    pub draws: DMatrix<f64>,
    pub logpost: Vec<f64>,
    pub accepted: Vec<bool>,
    pub accept_count: usize,
    pub proposal_cov: DMatrix<f64>,
    /// Proposals whose log-posterior came back NaN (numerical failure).
    pub failures: usize,
}

impl SampleChain {
    pub fn iters(&self) -> usize {
        self.logpost.len()
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.accept_count as f64 / self.iters() as f64
    }

    /// Acceptance rate over iterations `burnin..`.
    pub fn acceptance_after(&self, burnin: usize) -> f64 {
        let tail = &self.accepted[burnin.min(self.accepted.len())..];
        tail.iter().filter(|&&a| a).count() as f64 / tail.len().max(1) as f64
    }

    pub fn last_state(&self) -> DVector<f64> {
        self.draws.row(self.iters() - 1).transpose()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.draws.column(j).iter().copied().collect()
    }
}

/// Log of the Metropolis acceptance ratio for a symmetric proposal.
/// Swapping the arguments negates it exactly.
pub fn log_accept_ratio(current: f64, proposed: f64) -> f64 {
    if current == proposed {
        return 0.0;
    }
    proposed - current
}

/// Random-walk Metropolis with Gaussian proposals `N(theta, proposal_cov)`.
///
/// `logpost` returns `-inf` outside the support and NaN on numerical failure;
/// both reject the move, and NaNs are counted in `failures`.
pub fn rwm_chain<F: FnMut(&[f64]) -> f64>(
    mut logpost: F,
    theta0: &[f64],
    proposal_cov: &DMatrix<f64>,
    iters: usize,
    seed: u64,
) -> Result<SampleChain, McmcError> {
    let n = theta0.len();
    if iters == 0 {
        return Err(McmcError::NoIterations);
    }
    if proposal_cov.shape() != (n, n) {
        return Err(McmcError::Dimension { expected: n, got: proposal_cov.nrows() });
    }
    let root = psd_sqrt(proposal_cov).map_err(|e| McmcError::ProposalCovariance(e.to_string()))?;
    let mut current = DVector::from_column_slice(theta0);
    let mut lp = logpost(theta0);
    if !lp.is_finite() {
        return Err(McmcError::NonFiniteStart(lp));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut draws = DMatrix::zeros(iters, n);
    let mut lps = Vec::with_capacity(iters);
    let mut accepted = Vec::with_capacity(iters);
    let (mut accept_count, mut failures) = (0, 0);
    let mut z = DVector::zeros(n);
    let mut proposal = DVector::zeros(n);
    for k in 0..iters {
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        proposal.copy_from(&current);
        proposal.gemv(1.0, &root, &z, 1.0);
        let lp_new = logpost(proposal.as_slice());
        let u: f64 = rng.random();
        let accept = if lp_new.is_nan() {
            failures += 1;
            false
        } else {
            lp_new > f64::NEG_INFINITY && u.ln() < log_accept_ratio(lp, lp_new)
        };
        if accept {
            current.copy_from(&proposal);
            lp = lp_new;
            accept_count += 1;
        }
        draws.row_mut(k).copy_from(&current.transpose());
        lps.push(lp);
        accepted.push(accept);
    }
    Ok(SampleChain { draws, logpost: lps, accepted, accept_count, proposal_cov: proposal_cov.clone(), failures })
}

/// Target acceptance band for tuning.
pub const TARGET_ACCEPTANCE: (f64, f64) = (0.25, 0.30);
pub const PROBE_ITERS: usize = 5000;
pub const MAX_PROBE_ROUNDS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub proposal_cov: DMatrix<f64>,
    /// Acceptance rate of the probe that produced `proposal_cov`.
    pub acceptance: f64,
    pub rounds: usize,
    pub converged: bool,
    /// Final state of the last probe; a sensible chain start.
    pub end_state: DVector<f64>,
    pub failures: usize,
    pub evaluations: usize,
}

/// Scale search on `scale^2 * base`: geometric steps of `step` until the
/// band is bracketed, then bisection on `ln scale`.
struct ScaleSearch {
    lo: Option<f64>,
    hi: Option<f64>,
    scale: f64,
    step: f64,
}

impl ScaleSearch {
    fn new(scale: f64, step: f64) -> Self {
        Self { lo: None, hi: None, scale, step }
    }

    fn next(&mut self, acceptance: f64) {
        if acceptance > TARGET_ACCEPTANCE.1 {
            self.lo = Some(self.scale);
        } else {
            self.hi = Some(self.scale);
        }
        self.scale = match (self.lo, self.hi) {
            (Some(lo), Some(hi)) => (lo * hi).sqrt(),
            (Some(lo), None) => lo * self.step,
            (None, Some(hi)) => hi / self.step,
            (None, None) => unreachable!(),
        };
    }
}

fn in_band(a: f64) -> bool {
    (TARGET_ACCEPTANCE.0..=TARGET_ACCEPTANCE.1).contains(&a)
}

fn band_distance(a: f64) -> f64 {
    if in_band(a) {
        0.0
    } else {
        (a - TARGET_ACCEPTANCE.0).abs().min((a - TARGET_ACCEPTANCE.1).abs())
    }
}

/// Pilot tuning. Probes of [`PROBE_ITERS`] iterations search a global scale
/// on an isotropic proposal (doubling or halving) until the acceptance rate
/// lands in [`TARGET_ACCEPTANCE`]; the empirical covariance of that probe then
/// becomes the base shape and the scale is searched again in steps of 1.25. Stops after
/// [`MAX_PROBE_ROUNDS`] probes with the best proposal seen and a warning.
pub fn tune_proposal<F: FnMut(&[f64]) -> f64>(
    mut logpost: F,
    theta0: &[f64],
    initial_sd: f64,
    seed: u64,
) -> Result<TuneResult, McmcError> {
    let n = theta0.len();
    let mut base = DMatrix::<f64>::identity(n, n);
    let mut search = ScaleSearch::new(initial_sd, 2.0);
    let mut empirical = false;
    let mut state = DVector::from_column_slice(theta0);
    let mut best: Option<TuneResult> = None;
    let (mut failures, mut evaluations) = (0, 0);

    for round in 1..=MAX_PROBE_ROUNDS {
        let cov = &base * (search.scale * search.scale);
        let probe_seed = seed.wrapping_add(round as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let chain = rwm_chain(&mut logpost, state.as_slice(), &cov, PROBE_ITERS, probe_seed)?;
        failures += chain.failures;
        evaluations += PROBE_ITERS;
        let a = chain.acceptance_rate();
        state = chain.last_state();
        log::debug!("tuning round {round}: scale {:.4e}, acceptance {a:.3}, end {:?}", search.scale, state.as_slice());
        let candidate = TuneResult {
            proposal_cov: cov,
            acceptance: a,
            rounds: round,
            converged: in_band(a),
            end_state: state.clone(),
            failures,
            evaluations,
        };
        if best.as_ref().is_none_or(|b| band_distance(a) <= band_distance(b.acceptance)) {
            best = Some(candidate.clone());
        }
        if in_band(a) {
            if empirical {
                return Ok(candidate);
            }
            match empirical_shape(&chain.draws) {
                Some(shape) => {
                    base = shape;
                    empirical = true;
                    // Already near the optimum; large steps can jump between modes.
                    search = ScaleSearch::new(2.38 / (n as f64).sqrt(), 1.25);
                }
                None => return Ok(candidate),
            }
        } else {
            search.next(a);
        }
    }
    let mut best = best.expect("at least one round");
    log::warn!(
        "proposal tuning stopped after {MAX_PROBE_ROUNDS} rounds with acceptance {:.3} outside [{}, {}]",
        best.acceptance,
        TARGET_ACCEPTANCE.0,
        TARGET_ACCEPTANCE.1
    );
    best.rounds = MAX_PROBE_ROUNDS;
    best.converged = false;
    best.failures = failures;
    best.evaluations = evaluations;
    Ok(best)
}

/// Sample covariance of the rows, or `None` if it is not positive definite.
fn empirical_shape(draws: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let (_, cov) = crate::sim::sample_moments(draws);
    cov.clone().cholesky().map(|_| cov)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ess {
    pub value: f64,
    /// The series had zero variance; `value` is then 1.
    pub degenerate: bool,
}

pub const MIN_ESS_LENGTH: usize = 100;

/// Effective sample size `N / (1 + 2 sum_k rho_k)`, truncating the sum by the
/// initial positive sequence rule on pairs `rho_{2m} + rho_{2m+1}`. Clipped to
/// `[1, N]`.
pub fn ess(series: &[f64]) -> Result<Ess, McmcError> {
    let n = series.len();
    if n < MIN_ESS_LENGTH {
        return Err(McmcError::SeriesTooShort { got: n, min: MIN_ESS_LENGTH });
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let autocov = |k: usize| centered[..n - k].iter().zip(&centered[k..]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
    let c0 = autocov(0);
    if !(c0 > 0.0) {
        return Ok(Ess { value: 1.0, degenerate: true });
    }
    // tau = -1 + 2 sum_m Gamma_m, Gamma_m = rho_{2m} + rho_{2m+1}
    let mut tau = -1.0;
    let mut m = 0;
    while 2 * m + 1 < n {
        let pair = (autocov(2 * m) + autocov(2 * m + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        m += 1;
    }
    let value = (n as f64 / tau).clamp(1.0, n as f64);
    Ok(Ess { value, degenerate: false })
}

/// Empirical quantile with linear interpolation between order statistics
/// (`sorted` ascending, `0 <= p <= 1`).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSummary {
    pub name: String,
    pub median: f64,
    pub lower: f64,
    pub upper: f64,
    /// NaN when fewer than [`MIN_ESS_LENGTH`] draws remain after burn-in.
    pub ess: f64,
    pub ess_degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainSummary {
    pub params: Vec<ParamSummary>,
    pub acceptance: f64,
    pub kept: usize,
}

/// Median, 95% interval and ESS of each coordinate after dropping `burnin`
/// iterations, plus the acceptance rate over the kept iterations.
pub fn summarize(chain: &SampleChain, names: &[String], burnin: usize) -> Result<ChainSummary, McmcError> {
    if burnin >= chain.iters() {
        return Err(McmcError::BurninTooLong { burnin, iters: chain.iters() });
    }
    if names.len() != chain.draws.ncols() {
        return Err(McmcError::Dimension { expected: chain.draws.ncols(), got: names.len() });
    }
    let params = names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let kept: Vec<f64> = chain.draws.column(j).iter().skip(burnin).copied().collect();
            let mut sorted = kept.clone();
            sorted.sort_by(f64::total_cmp);
            let (ess_value, ess_degenerate) = match ess(&kept) {
                Ok(e) => (e.value, e.degenerate),
                Err(_) => (f64::NAN, false),
            };
            ParamSummary {
                name: name.clone(),
                median: quantile(&sorted, 0.5),
                lower: quantile(&sorted, 0.025),
                upper: quantile(&sorted, 0.975),
                ess: ess_value,
                ess_degenerate,
            }
        })
        .collect();
    Ok(ChainSummary { params, acceptance: chain.acceptance_after(burnin), kept: chain.iters() - burnin })
}

//! Stochastic simulation of reaction networks.
//!
//! * [`ssa_trajectory`]: exact sampling of the jump process (Gillespie's
//!   direct method).
//! * [`em_trajectory`]: Euler-Maruyama integration of the diffusion
//!   approximation `dX = A'h dt + sqrt(A' diag(h) A) dW`.
//! * [`empirical_transition`]: Monte Carlo transition distributions from
//!   either simulator.
//!
//! # Random streams
//!
//! Every simulation draws from a ChaCha20 generator seeded with
//! `ChaCha20Rng::seed_from_u64(seed)`. Replicate `r` of a Monte Carlo batch
//! uses the same key with the stream id set to `r` (`set_stream(r)`), so
//! replicates are independent and each one is reproducible on its own.

mod em;
mod ssa;

pub use em::{em_linear_noise_samples, em_trajectory};
pub use ssa::{ssa_final_state, ssa_trajectory};

use crate::network::{EvalError, ReactionNetwork};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("negative propensity {value} for reaction {reaction} at t = {t}")]
    NegativePropensity { reaction: usize, value: f64, t: f64 },
    #[error("total propensity is not finite at t = {t}")]
    PropensityOverflow { t: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("initial state component {index} = {value} is not a nonnegative integer")]
    InvalidInitialState { index: usize, value: f64 },
    #[error("time horizon must be positive and finite, got {0}")]
    InvalidHorizon(f64),
    #[error("step size must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("grid times must be nonnegative, finite and strictly increasing")]
    InvalidGrid,
    #[error("Euler-Maruyama integration produced a non-finite state at t = {t}")]
    IntegrationFailure { t: f64 },
    #[error("query time {t} outside trajectory span [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error("query time {t} is not a grid time of the Euler-Maruyama trajectory")]
    NotOnGrid { t: f64 },
    #[error("at least 2 replicates are required, got {0}")]
    TooFewReplicates(usize),
    #[error("replicate {index}: {source}")]
    Replicate { index: usize, source: Box<SimError> },
    #[error("state has length {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
}

/// Generator for a single simulation.
pub fn rng_for(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Independent substream `replicate` of `seed`.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryKind {
    Exact,
    EulerMaruyama,
}

/// Sequence of `(time, state)` pairs; states are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub kind: TrajectoryKind,
    n_species: usize,
    times: Vec<f64>,
    states: Vec<f64>,
}

impl Trajectory {
    fn new(kind: TrajectoryKind, n_species: usize) -> Self {
        Self { kind, n_species, times: Vec::new(), states: Vec::new() }
    }

    fn push(&mut self, t: f64, x: &[f64]) {
        self.times.push(t);
        self.states.extend_from_slice(x);
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_species(&self) -> usize {
        self.n_species
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.n_species..(i + 1) * self.n_species]
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.states.chunks_exact(self.n_species)
    }

    pub fn final_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    /// States at the given times. Exact trajectories are read
    /// right-continuously (the state in force just after any jump at `t`);
    /// Euler-Maruyama trajectories only answer at their grid times.
    pub fn sample_at_times(&self, times: &[f64]) -> Result<Vec<DVector<f64>>, SimError> {
        let (start, end) = (self.times[0], *self.times.last().expect("non-empty trajectory"));
        times
            .iter()
            .map(|&t| {
                if !(t >= start && t <= end) {
                    return Err(SimError::OutOfRange { t, start, end });
                }
                let i = match self.kind {
                    TrajectoryKind::Exact => self.times.partition_point(|&s| s <= t) - 1,
                    TrajectoryKind::EulerMaruyama => {
                        let tol = 1e-9 * t.abs().max(1.0);
                        let i = self.times.partition_point(|&s| s < t - tol);
                        if i >= self.times.len() || (self.times[i] - t).abs() > tol {
                            return Err(SimError::NotOnGrid { t });
                        }
                        i
                    }
                };
                Ok(DVector::from_column_slice(self.state(i)))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimMethod {
    Exact,
    EulerMaruyama { dt: f64 },
}

/// Monte Carlo sample of `X(t)` with its moments.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalTransition {
    /// `reps x n_s`; column `j` is the sample of species `j`.
    pub samples: DMatrix<f64>,
    pub mean: DVector<f64>,
    /// Unbiased sample covariance.
    pub cov: DMatrix<f64>,
}

impl EmpiricalTransition {
    pub fn from_samples(samples: DMatrix<f64>) -> Self {
        let (mean, cov) = sample_moments(&samples);
        Self { samples, mean, cov }
    }
}

/// Column means and unbiased covariance of the rows of `samples`.
pub fn sample_moments(samples: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = samples.nrows() as f64;
    let mean = samples.row_mean().transpose();
    let mut centered = samples.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = centered.transpose() * &centered / (n - 1.0);
    (mean, cov)
}

/// Simulates `reps` independent copies of `X(t)` started from `x0`.
pub fn empirical_transition(
    net: &ReactionNetwork,
    theta: &[f64],
    x0: &[f64],
    t: f64,
    reps: usize,
    method: SimMethod,
    seed: u64,
) -> Result<EmpiricalTransition, SimError> {
    if reps < 2 {
        return Err(SimError::TooFewReplicates(reps));
    }
    let n = net.n_species();
    let run = |r: usize| -> Result<Vec<f64>, SimError> {
        let mut rng = replicate_rng(seed, r as u64);
        let out = match method {
            SimMethod::Exact => ssa_final_state(net, theta, x0, t, &mut rng),
            SimMethod::EulerMaruyama { dt } => {
                em::em_final_state(net, theta, x0, t, dt, &mut rng)
            }
        };
        out.map_err(|e| SimError::Replicate { index: r, source: Box::new(e) })
    };

    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(reps);
    let rows: Vec<Vec<f64>> = if threads <= 1 {
        (0..reps).map(run).collect::<Result<_, _>>()?
    } else {
        let chunk = reps.div_ceil(threads);
        let parts: Vec<Result<Vec<Vec<f64>>, SimError>> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..threads)
                .map(|k| {
                    let run = &run;
                    s.spawn(move || (k * chunk..((k + 1) * chunk).min(reps)).map(run).collect())
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("replicate worker panicked")).collect()
        });
        let mut rows = Vec::with_capacity(reps);
        for p in parts {
            rows.extend(p?);
        }
        rows
    };
    let samples = DMatrix::from_fn(reps, n, |r, j| rows[r][j]);
    Ok(EmpiricalTransition::from_samples(samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::parse_network;

    #[test]
    fn frozen_network_has_zero_spread() {
        let net = parse_network("species A B\nparam k\nreaction: A -> B @ 0 * k\n").unwrap();
        for method in [SimMethod::Exact, SimMethod::EulerMaruyama { dt: 0.01 }] {
            let e = empirical_transition(&net, &[1.0], &[3.0, 4.0], 1.0, 2, method, 9).unwrap();
            assert_eq!(e.samples.row(0), e.samples.row(1));
            assert_eq!(e.mean.as_slice(), &[3.0, 4.0]);
            assert_eq!(e.cov.abs().max(), 0.0);
        }
    }

    #[test]
    fn too_few_replicates() {
        let net = parse_network("species A\nparam k\nreaction: A -> 0 @ k * A\n").unwrap();
        assert_eq!(
            empirical_transition(&net, &[1.0], &[3.0], 1.0, 1, SimMethod::Exact, 0).unwrap_err(),
            SimError::TooFewReplicates(1)
        );
    }

    #[test]
    fn replicate_errors_carry_index() {
        let net = parse_network("species A\nparam k\nreaction: A -> 0 @ k * (A - 5)\n").unwrap();
        let err = empirical_transition(&net, &[1.0], &[3.0], 1.0, 4, SimMethod::Exact, 0).unwrap_err();
        assert!(matches!(err, SimError::Replicate { index: 0, .. }));
    }

    #[test]
    fn substreams_differ_and_repeat() {
        use rand::Rng;
        let a: u64 = replicate_rng(5, 0).random();
        let b: u64 = replicate_rng(5, 1).random();
        let a2: u64 = replicate_rng(5, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, a2);
    }
}

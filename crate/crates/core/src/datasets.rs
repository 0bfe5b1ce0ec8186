//! Embedded data and synthetic data generation.

use crate::inference::{InferenceError, ObservationModel, ObservationSeries};
use crate::lna::psd_sqrt;
use crate::network::ReactionNetwork;
use crate::sim::{ssa_trajectory, SimError};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Days between successive removals in the smallpox outbreak (30 removals).
pub const SMALLPOX_INTER_REMOVAL: [u32; 29] =
    [13, 7, 2, 3, 0, 0, 1, 4, 5, 3, 2, 0, 2, 0, 5, 3, 1, 4, 0, 1, 1, 1, 2, 0, 1, 5, 0, 5, 5];
pub const SMALLPOX_POPULATION: u32 = 120;
/// `(infectives, susceptibles)` just after the first removal.
pub const SMALLPOX_X0: [f64; 2] = [1.0, 118.0];
pub const SMALLPOX_DEFAULT_TAIL_DAYS: u32 = 10;

/// Day of each removal counted from the first removal.
pub fn smallpox_removal_days() -> Vec<u32> {
    SMALLPOX_INTER_REMOVAL
        .iter()
        .scan(0, |day, gap| {
            *day += gap;
            Some(*day)
        })
        .fold(vec![0], |mut v, d| {
            v.push(d);
            v
        })
}

/// Daily counts of `I + S = 120 - removed`, from day 0 (the first removal)
/// through the last removal and then `tail_days` more days.
pub fn smallpox_series(tail_days: u32) -> ObservationSeries {
    let days = smallpox_removal_days();
    let last = *days.last().expect("non-empty");
    let (times, values) = (0..=last + tail_days)
        .map(|d| {
            let removed = days.iter().filter(|&&r| r <= d).count() as u32;
            (d as f64, DVector::from_element(1, (SMALLPOX_POPULATION - removed) as f64))
        })
        .unzip();
    ObservationSeries::new(times, values).expect("embedded series is valid")
}

/// `y = I + S` observed exactly, point prior at [`SMALLPOX_X0`].
pub fn smallpox_obs_model() -> ObservationModel {
    ObservationModel::new(
        DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
        DMatrix::zeros(1, 1),
        DVector::from_column_slice(&SMALLPOX_X0),
        DMatrix::zeros(2, 2),
    )
    .expect("valid model")
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Series(#[from] InferenceError),
    #[error("unknown dataset `{0}`")]
    Unknown(String),
}

/// Synthetic data from one exact path.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    /// Exact states at the kept observation times.
    pub states: Vec<DVector<f64>>,
    pub series: ObservationSeries,
}

/// Simulates an exact path from `x0` at time 0, reads the state at `times`,
/// and observes `y = P x + N(0, V)`. With `stop_at_extinction`, observation
/// times from the first one at which some species is 0 are dropped.
pub fn simulate_observations<R: Rng + ?Sized>(
    net: &ReactionNetwork,
    theta: &[f64],
    x0: &[f64],
    times: &[f64],
    obs: &ObservationModel,
    stop_at_extinction: bool,
    rng: &mut R,
) -> Result<SyntheticData, DatasetError> {
    let t_end = *times.last().ok_or(InferenceError::InvalidSeries("no observation times".into()))?;
    let traj = ssa_trajectory(net, theta, x0, t_end, rng)?;
    let mut states = traj.sample_at_times(times)?;
    if stop_at_extinction {
        if let Some(k) = states.iter().position(|x| x.iter().any(|&v| v == 0.0)) {
            states.truncate(k);
        }
    }
    let noise = psd_sqrt(obs.v()).map_err(|e| InferenceError::InvalidModel(e.to_string()))?;
    let values = states
        .iter()
        .map(|x| {
            let z = DVector::from_fn(obs.obs_dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
            obs.p() * x + &noise * z
        })
        .collect();
    let series = ObservationSeries::new(times[..states.len()].to_vec(), values)?;
    Ok(SyntheticData { states, series })
}

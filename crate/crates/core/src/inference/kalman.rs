use super::{InferenceError, ObservationModel};
use crate::lna::{clip_psd_scaled, min_eigenvalue, symmetrize, GaussianDist};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use std::f64::consts::PI;

/// Innovation covariances whose smallest eigenvalue falls below this get a
/// diagonal jitter.
pub const JITTER_TRIGGER: f64 = 1e-12;
/// Jitter size relative to `max(1, trace(P Sigma P'))`.
pub const JITTER_SCALE: f64 = 1e-10;

/// Cholesky factor of a covariance used in a Gaussian density, after the
/// jitter rule has been applied.
pub(crate) struct Factored {
    pub chol: Cholesky<f64, Dyn>,
    pub jittered: bool,
}

/// Symmetrizes `s`, adds `JITTER_SCALE * max(1, base_trace)` to the diagonal
/// when it is numerically singular, and factors it.
pub(crate) fn factor_with_jitter(s: &DMatrix<f64>, base_trace: f64) -> Result<Factored, f64> {
    let mut s = symmetrize(s);
    let mut jittered = false;
    let lo = min_eigenvalue(&s);
    if !lo.is_finite() {
        return Err(lo);
    }
    if lo < JITTER_TRIGGER {
        let eps = JITTER_SCALE * base_trace.max(1.0);
        for i in 0..s.nrows() {
            s[(i, i)] += eps;
        }
        jittered = true;
    }
    match s.clone().cholesky() {
        Some(chol) => Ok(Factored { chol, jittered }),
        None => Err(min_eigenvalue(&s)),
    }
}

impl Factored {
    /// `log N(r; 0, S)`.
    pub fn log_density(&self, r: &DVector<f64>) -> f64 {
        let d = r.len() as f64;
        let l = self.chol.l_dirty();
        let log_det: f64 = 2.0 * (0..r.len()).map(|i| l[(i, i)].ln()).sum::<f64>();
        let w = l.solve_lower_triangular(r).expect("nonsingular Cholesky factor");
        -0.5 * (d * (2.0 * PI).ln() + log_det + w.norm_squared())
    }
}

/// `log N(y; mean, cov)` with the jitter rule applied to `cov`.
pub fn gaussian_logpdf(y: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<f64, InferenceError> {
    let f = factor_with_jitter(cov, cov.trace())
        .map_err(|min_eigenvalue| InferenceError::FilterFailure { index: 0, min_eigenvalue })?;
    Ok(f.log_density(&(y - mean)))
}

/// Result of conditioning a Gaussian state on one observation.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanStep {
    pub posterior: GaussianDist,
    /// `log N(y; P mu, P Sigma P' + V)`.
    pub log_predictive: f64,
    /// Predictive law of the observation, `N(P mu, P Sigma P' + V)`.
    pub predictive: GaussianDist,
    pub jittered: bool,
}

/// Conditions `pred` on `y ~ N(P x, V)` using Cholesky solves with the
/// innovation covariance.
pub fn kalman_update(
    pred: &GaussianDist,
    obs: &ObservationModel,
    y: &DVector<f64>,
) -> Result<KalmanStep, InferenceError> {
    let n = obs.n_states();
    if pred.dim() != n {
        return Err(InferenceError::Dimension { what: "predicted state", expected: n, got: pred.dim() });
    }
    if y.len() != obs.obs_dim() {
        return Err(InferenceError::Dimension { what: "observation", expected: obs.obs_dim(), got: y.len() });
    }
    let p = obs.p();
    let p_sigma = p * &pred.cov;
    let p_sigma_pt = &p_sigma * p.transpose();
    let s = &p_sigma_pt + obs.v();
    let f = factor_with_jitter(&s, p_sigma_pt.trace())
        .map_err(|min_eigenvalue| InferenceError::FilterFailure { index: 0, min_eigenvalue })?;

    let y_mean = p * &pred.mean;
    let r = y - &y_mean;
    // gain' = S^{-1} P Sigma
    let gain_t = f.chol.solve(&p_sigma);
    let mean = &pred.mean + gain_t.transpose() * &r;
    let cov = symmetrize(&(&pred.cov - p_sigma.transpose() * &gain_t));
    // Round-off in the difference scales with the prior covariance.
    let cov = clip_psd_scaled(&cov, pred.cov.trace().abs())
        .map_err(|_| InferenceError::FilterFailure { index: 0, min_eigenvalue: min_eigenvalue(&cov) })?;
    Ok(KalmanStep {
        posterior: GaussianDist::new(mean, cov),
        log_predictive: f.log_density(&r),
        predictive: GaussianDist::new(y_mean, symmetrize(&s)),
        jittered: f.jittered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_model(v: f64) -> ObservationModel {
        ObservationModel::new(
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, v),
            DVector::zeros(1),
            DMatrix::zeros(1, 1),
        )
        .unwrap()
    }

    #[test]
    fn scalar_hand_algebra() {
        let pred = GaussianDist::new(DVector::from_element(1, 0.0), DMatrix::from_element(1, 1, 1.0));
        let k = kalman_update(&pred, &scalar_model(1.0), &DVector::from_element(1, 2.0)).unwrap();
        assert!((k.posterior.mean[0] - 1.0).abs() < 1e-15);
        assert!((k.posterior.cov[(0, 0)] - 0.5).abs() < 1e-15);
        let want = -0.5 * (4.0 * PI).ln() - 1.0;
        assert!((k.log_predictive - want).abs() < 1e-14);
        assert!(!k.jittered);
    }

    #[test]
    fn exact_observation_pins_state() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let pred = GaussianDist::new(DVector::from_vec(vec![1.0, 2.0]), cov);
        let obs = ObservationModel::new(
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
            DVector::zeros(2),
            DMatrix::zeros(2, 2),
        )
        .unwrap();
        let y = DVector::from_vec(vec![1.5, 1.0]);
        let k = kalman_update(&pred, &obs, &y).unwrap();
        assert!((&k.posterior.mean - &y).abs().max() < 1e-9);
        assert!(k.posterior.cov.abs().max() < 1e-9);
    }

    #[test]
    fn point_mass_exact_observation_jitters() {
        let pred = GaussianDist::point(DVector::from_element(1, 3.0));
        let k = kalman_update(&pred, &scalar_model(0.0), &DVector::from_element(1, 3.0)).unwrap();
        assert!(k.jittered);
        assert_eq!(k.posterior.mean[0], 3.0);
        let want = -0.5 * (2.0 * PI * 1e-10).ln();
        assert!((k.log_predictive - want).abs() < 1e-9);
    }

    #[test]
    fn unobserved_component_shrinks() {
        let cov = DMatrix::from_row_slice(2, 2, &[4.0, 1.5, 1.5, 9.0]);
        let pred = GaussianDist::new(DVector::from_vec(vec![40.0, 140.0]), cov.clone());
        let obs = ObservationModel::new(
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DMatrix::zeros(1, 1),
            DVector::zeros(2),
            DMatrix::zeros(2, 2),
        )
        .unwrap();
        let k = kalman_update(&pred, &obs, &DVector::from_element(1, 41.0)).unwrap();
        // Prey variance drops by cov12^2 / cov11.
        assert!((k.posterior.cov[(1, 1)] - (9.0 - 1.5 * 1.5 / 4.0)).abs() < 1e-8);
        assert!((k.posterior.mean[1] - (140.0 + 1.5 / 4.0)).abs() < 1e-8);
    }
}

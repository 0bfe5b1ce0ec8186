//! LNA likelihoods for discretely observed networks.
//!
//! Observations follow `y_i = P x(t_i) + e_i`, `e_i ~ N(0, V)`, with a
//! Gaussian prior `N(mu0, Sigma0)` on the initial state. The engines are:
//!
//! * [`loglik_lna_filter`]: Kalman filter over LNA transitions, restarting
//!   the deterministic path at each filtered mean;
//! * [`loglik_lna_global`]: the same filter with one deterministic path solved
//!   from a given initial state over the whole window;
//! * [`loglik_fully_observed`]: product of LNA transition densities for
//!   exactly observed full states;
//! * [`loglik_ode_gauss`]: the rate-equation solution with i.i.d. Gaussian
//!   errors of variance `sigma2`.

mod filter;
mod kalman;

pub use filter::{
    continue_lna_filter, loglik_fully_observed, loglik_lna_filter, loglik_lna_global, loglik_ode_gauss,
    FilterResult, FullyObservedLoglik,
};
pub use kalman::{gaussian_logpdf, kalman_update, KalmanStep, JITTER_SCALE, JITTER_TRIGGER};

use crate::lna::{clip_psd, GaussianDist, LnaError};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InferenceError {
    #[error("{what} has dimension {got}, expected {expected}")]
    Dimension { what: &'static str, expected: usize, got: usize },
    #[error("invalid observation model: {0}")]
    InvalidModel(String),
    #[error("invalid observation series: {0}")]
    InvalidSeries(String),
    #[error("innovation covariance at observation {index} is not positive definite (min eigenvalue {min_eigenvalue:e})")]
    FilterFailure { index: usize, min_eigenvalue: f64 },
    #[error("interval {index}: {source}")]
    Interval { index: usize, source: LnaError },
    #[error("sigma2 must be positive and finite, got {0}")]
    BadSigma2(f64),
    #[error("line {line}: {message}")]
    Spec { line: usize, message: String },
}

impl InferenceError {
    fn at_observation(self, i: usize) -> Self {
        match self {
            InferenceError::FilterFailure { min_eigenvalue, .. } => {
                InferenceError::FilterFailure { index: i, min_eigenvalue }
            }
            e => e,
        }
    }
}

/// Linear Gaussian observation map plus the initial-state prior.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationModel {
    p: DMatrix<f64>,
    v: DMatrix<f64>,
    mu0: DVector<f64>,
    sigma0: DMatrix<f64>,
}

fn check_psd(name: &str, m: &DMatrix<f64>) -> Result<DMatrix<f64>, InferenceError> {
    clip_psd(m).map_err(|e| InferenceError::InvalidModel(format!("{name}: {e}")))
}

impl ObservationModel {
    pub fn new(p: DMatrix<f64>, v: DMatrix<f64>, mu0: DVector<f64>, sigma0: DMatrix<f64>) -> Result<Self, InferenceError> {
        let (d, n) = p.shape();
        if d == 0 || n == 0 {
            return Err(InferenceError::InvalidModel("P must have at least one row and column".into()));
        }
        if v.shape() != (d, d) {
            return Err(InferenceError::Dimension { what: "V", expected: d, got: v.nrows() });
        }
        if mu0.len() != n {
            return Err(InferenceError::Dimension { what: "mu0", expected: n, got: mu0.len() });
        }
        if sigma0.shape() != (n, n) {
            return Err(InferenceError::Dimension { what: "Sigma0", expected: n, got: sigma0.nrows() });
        }
        if p.iter().chain(mu0.iter()).any(|x| !x.is_finite()) {
            return Err(InferenceError::InvalidModel("P and mu0 must be finite".into()));
        }
        let v = check_psd("V", &v)?;
        let sigma0 = check_psd("Sigma0", &sigma0)?;
        let model = Self { p, v, mu0, sigma0 };
        for i in model.zero_rows() {
            log::warn!("row {i} of the observation matrix is all zero");
        }
        Ok(model)
    }

    /// Exact observation of the full state with a point-mass prior at `x0`.
    pub fn fully_observed(x0: DVector<f64>) -> Self {
        let n = x0.len();
        Self { p: DMatrix::identity(n, n), v: DMatrix::zeros(n, n), mu0: x0, sigma0: DMatrix::zeros(n, n) }
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn mu0(&self) -> &DVector<f64> {
        &self.mu0
    }

    pub fn sigma0(&self) -> &DMatrix<f64> {
        &self.sigma0
    }

    pub fn obs_dim(&self) -> usize {
        self.p.nrows()
    }

    pub fn n_states(&self) -> usize {
        self.p.ncols()
    }

    pub fn prior(&self) -> GaussianDist {
        GaussianDist::new(self.mu0.clone(), self.sigma0.clone())
    }

    /// Indices of all-zero rows of `P` (allowed, but uninformative).
    pub fn zero_rows(&self) -> Vec<usize> {
        (0..self.p.nrows()).filter(|&i| self.p.row(i).iter().all(|&x| x == 0.0)).collect()
    }

    pub fn with_mu0(&self, mu0: DVector<f64>) -> Result<Self, InferenceError> {
        Self::new(self.p.clone(), self.v.clone(), mu0, self.sigma0.clone())
    }

    /// Parses the key-value format
    ///
    /// ```text
    /// obs_dim 1
    /// P 1 0
    /// Vdiag 0
    /// mu0 40 140
    /// Sigma0diag 0 100
    /// ```
    ///
    /// with one `P` line per observed component. `Vdiag` and `Sigma0diag`
    /// default to zeros; `#` starts a comment.
    pub fn parse_spec(text: &str, n_species: usize) -> Result<Self, InferenceError> {
        let err = |line: usize, message: String| InferenceError::Spec { line, message };
        let mut obs_dim: Option<usize> = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut vdiag: Option<Vec<f64>> = None;
        let mut mu0: Option<Vec<f64>> = None;
        let mut sdiag: Option<Vec<f64>> = None;
        let mut last_line = 0;
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            last_line = line;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut words = content.split_whitespace();
            let key = words.next().expect("non-empty line");
            let values: Vec<f64> = words
                .map(|w| w.parse::<f64>().map_err(|_| err(line, format!("`{w}` is not a number"))))
                .collect::<Result<_, _>>()?;
            let want = |len: usize, what: &str| -> Result<(), InferenceError> {
                if values.len() != len {
                    return Err(err(line, format!("{what} needs {len} values, got {}", values.len())));
                }
                Ok(())
            };
            let once = |set: bool| -> Result<(), InferenceError> {
                if set {
                    return Err(err(line, format!("`{key}` given more than once")));
                }
                Ok(())
            };
            match key {
                "obs_dim" => {
                    once(obs_dim.is_some())?;
                    want(1, "obs_dim")?;
                    let d = values[0];
                    if !(d >= 1.0 && d.fract() == 0.0) {
                        return Err(err(line, "obs_dim must be a positive integer".into()));
                    }
                    obs_dim = Some(d as usize);
                }
                "P" => {
                    want(n_species, "a row of P")?;
                    rows.push(values);
                }
                "Vdiag" => {
                    once(vdiag.is_some())?;
                    let d = obs_dim.ok_or_else(|| err(line, "Vdiag before obs_dim".into()))?;
                    want(d, "Vdiag")?;
                    vdiag = Some(values);
                }
                "mu0" => {
                    once(mu0.is_some())?;
                    want(n_species, "mu0")?;
                    mu0 = Some(values);
                }
                "Sigma0diag" => {
                    once(sdiag.is_some())?;
                    want(n_species, "Sigma0diag")?;
                    sdiag = Some(values);
                }
                other => return Err(err(line, format!("unknown key `{other}`"))),
            }
        }
        let d = obs_dim.ok_or_else(|| err(last_line, "missing obs_dim".into()))?;
        if rows.len() != d {
            return Err(err(last_line, format!("expected {d} P rows, got {}", rows.len())));
        }
        let mu0 = mu0.ok_or_else(|| err(last_line, "missing mu0".into()))?;
        let p = DMatrix::from_fn(d, n_species, |i, j| rows[i][j]);
        let v = DMatrix::from_diagonal(&DVector::from_vec(vdiag.unwrap_or_else(|| vec![0.0; d])));
        let sigma0 = DMatrix::from_diagonal(&DVector::from_vec(sdiag.unwrap_or_else(|| vec![0.0; n_species])));
        Self::new(p, v, DVector::from_vec(mu0), sigma0).map_err(|e| err(last_line, e.to_string()))
    }

    /// Inverse of [`ObservationModel::parse_spec`] for diagonal `V` and `Sigma0`.
    pub fn to_spec(&self) -> String {
        let join = |xs: &mut dyn Iterator<Item = f64>| xs.map(|x| format!("{x}")).collect::<Vec<_>>().join(" ");
        let mut s = format!("obs_dim {}\n", self.obs_dim());
        for row in self.p.row_iter() {
            s += &format!("P {}\n", join(&mut row.iter().copied()));
        }
        s += &format!("Vdiag {}\n", join(&mut self.v.diagonal().iter().copied()));
        s += &format!("mu0 {}\n", join(&mut self.mu0.iter().copied()));
        s += &format!("Sigma0diag {}\n", join(&mut self.sigma0.diagonal().iter().copied()));
        s
    }
}

/// Observations `y_0..y_n` at strictly increasing times `t_0..t_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSeries {
    times: Vec<f64>,
    values: Vec<DVector<f64>>,
}

impl ObservationSeries {
    /// Requires at least two observations of a common dimension.
    pub fn new(times: Vec<f64>, values: Vec<DVector<f64>>) -> Result<Self, InferenceError> {
        let bad = |m: &str| Err(InferenceError::InvalidSeries(m.to_string()));
        if times.len() != values.len() {
            return bad("times and observations differ in length");
        }
        if times.len() < 2 {
            return bad("at least two observations are required");
        }
        if !times.iter().all(|t| t.is_finite()) || !times.windows(2).all(|w| w[1] > w[0]) {
            return bad("times must be finite and strictly increasing");
        }
        let d = values[0].len();
        if d == 0 || values.iter().any(|y| y.len() != d) {
            return bad("observations must share a nonzero dimension");
        }
        if values.iter().any(|y| y.iter().any(|v| !v.is_finite())) {
            return bad("observations must be finite");
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    /// Observations `0..=k`, if that leaves at least two.
    pub fn head(&self, k: usize) -> Option<Self> {
        (k >= 1 && k < self.len())
            .then(|| Self { times: self.times[..=k].to_vec(), values: self.values[..=k].to_vec() })
    }
}

use super::{replicate_rng, sample_moments, EmpiricalTransition, SimError, Trajectory, TrajectoryKind};
use crate::lna::psd_sqrt_clipped;
use crate::network::ReactionNetwork;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// In-place lower Cholesky factor of the row-major `n x n` matrix `a`.
/// Returns false if a pivot is not strictly positive.
fn cholesky_in_place(a: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
        for k in j + 1..n {
            a[j * n + k] = 0.0;
        }
    }
    true
}

/// Work buffers for one Euler-Maruyama path.
struct Stepper<'a> {
    net: &'a ReactionNetwork,
    theta: &'a [f64],
    h: Vec<f64>,
    drift: Vec<f64>,
    root: Vec<f64>,
    z: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(net: &'a ReactionNetwork, theta: &'a [f64]) -> Self {
        let n = net.n_species();
        Self {
            net,
            theta,
            h: vec![0.0; net.n_reactions()],
            drift: vec![0.0; n],
            root: vec![0.0; n * n],
            z: vec![0.0; n],
        }
    }

    fn step<R: Rng + ?Sized>(&mut self, x: &mut [f64], t: f64, dt: f64, rng: &mut R) -> Result<(), SimError> {
        let n = x.len();
        self.net.propensities_into(x, self.theta, &mut self.h)?;
        self.net.drift_from_rates(&self.h, &mut self.drift);
        self.net.diffusion_from_rates(&self.h, &mut self.root);
        if !cholesky_in_place(&mut self.root, n) {
            // Semi-definite or, at negative states, indefinite: clip eigenvalues.
            self.net.diffusion_from_rates(&self.h, &mut self.root);
            let m = DMatrix::from_row_slice(n, n, &self.root);
            let s = psd_sqrt_clipped(&m).map_err(|_| SimError::IntegrationFailure { t })?;
            for i in 0..n {
                for j in 0..n {
                    self.root[i * n + j] = s[(i, j)];
                }
            }
        }
        for zi in self.z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        let sq = dt.sqrt();
        for (i, (xi, di)) in x.iter_mut().zip(&self.drift).enumerate() {
            let noise: f64 = self.root[i * n..(i + 1) * n].iter().zip(&self.z).map(|(r, z)| r * z).sum();
            *xi += di * dt + noise * sq;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SimError::IntegrationFailure { t: t + dt });
        }
        Ok(())
    }

    /// Advances `x` from `t0` to `t1` in steps of `dt`, shortening the last.
    fn run<R: Rng + ?Sized>(&mut self, x: &mut [f64], t0: f64, t1: f64, dt: f64, rng: &mut R) -> Result<(), SimError> {
        let mut t = t0;
        while t < t1 {
            // Avoid a sliver step from accumulated round-off.
            let h = if t1 - t <= dt * (1.0 + 1e-9) { t1 - t } else { dt };
            self.step(x, t, h, rng)?;
            t = if h == t1 - t { t1 } else { t + h };
        }
        Ok(())
    }
}

fn check_common(net: &ReactionNetwork, x0: &[f64], dt: f64) -> Result<(), SimError> {
    if x0.len() != net.n_species() {
        return Err(SimError::Dimension { expected: net.n_species(), got: x0.len() });
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(SimError::InvalidStep(dt));
    }
    Ok(())
}

/// Euler-Maruyama path of the diffusion approximation recorded at
/// `grid_times`, starting from `x0` at `grid_times[0]`. States are not
/// clamped, so they may go negative.
pub fn em_trajectory<R: Rng + ?Sized>(
    net: &ReactionNetwork,
    theta: &[f64],
    x0: &[f64],
    grid_times: &[f64],
    dt: f64,
    rng: &mut R,
) -> Result<Trajectory, SimError> {
    check_common(net, x0, dt)?;
    let valid = !grid_times.is_empty()
        && grid_times[0] >= 0.0
        && grid_times.iter().all(|t| t.is_finite())
        && grid_times.windows(2).all(|w| w[1] > w[0]);
    if !valid {
        return Err(SimError::InvalidGrid);
    }
    let mut traj = Trajectory::new(TrajectoryKind::EulerMaruyama, x0.len());
    traj.push(grid_times[0], x0);
    let mut x = x0.to_vec();
    let mut stepper = Stepper::new(net, theta);
    for w in grid_times.windows(2) {
        stepper.run(&mut x, w[0], w[1], dt, rng)?;
        traj.push(w[1], &x);
    }
    Ok(traj)
}

/// `X(t)` of one Euler-Maruyama path started from `x0` at time 0.
pub(super) fn em_final_state<R: Rng + ?Sized>(
    net: &ReactionNetwork,
    theta: &[f64],
    x0: &[f64],
    t: f64,
    dt: f64,
    rng: &mut R,
) -> Result<Vec<f64>, SimError> {
    check_common(net, x0, dt)?;
    if !(t.is_finite() && t > 0.0) {
        return Err(SimError::InvalidHorizon(t));
    }
    let mut x = x0.to_vec();
    Stepper::new(net, theta).run(&mut x, 0.0, t, dt, rng)?;
    Ok(x)
}

/// Monte Carlo sample at time `t` of the linear SDE `dM = F M dt + S dW`,
/// `M(0) = m0`, by Euler-Maruyama with step `dt`. Replicate `r` uses
/// substream `r` of `seed`.
pub fn em_linear_noise_samples(
    f: &DMatrix<f64>,
    s: &DMatrix<f64>,
    m0: &DVector<f64>,
    t: f64,
    dt: f64,
    reps: usize,
    seed: u64,
) -> Result<EmpiricalTransition, SimError> {
    let n = m0.len();
    if f.shape() != (n, n) || s.nrows() != n {
        return Err(SimError::Dimension { expected: n, got: f.nrows() });
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(SimError::InvalidStep(dt));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(SimError::InvalidHorizon(t));
    }
    if reps < 2 {
        return Err(SimError::TooFewReplicates(reps));
    }
    let k = s.ncols();
    let mut samples = DMatrix::zeros(reps, n);
    let mut m = DVector::zeros(n);
    let mut z = DVector::zeros(k);
    let mut fm = DVector::zeros(n);
    for r in 0..reps {
        let mut rng = replicate_rng(seed, r as u64);
        m.copy_from(m0);
        let mut tc = 0.0;
        while tc < t {
            let h = if t - tc <= dt * (1.0 + 1e-9) { t - tc } else { dt };
            for zi in z.iter_mut() {
                *zi = rng.sample(StandardNormal);
            }
            f.mul_to(&m, &mut fm);
            m.axpy(h, &fm, 1.0);
            m.gemv(h.sqrt(), s, &z, 1.0);
            tc = if h == t - tc { t } else { tc + h };
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(SimError::Replicate { index: r, source: Box::new(SimError::IntegrationFailure { t }) });
        }
        samples.row_mut(r).copy_from(&m.transpose());
    }
    let (mean, cov) = sample_moments(&samples);
    Ok(EmpiricalTransition { samples, mean, cov })
}

//! Adaptive Dormand-Prince 5(4) integrator with embedded error control.

use std::fmt::Display;

/// Tolerances and step budget for [`integrate_ode`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { rtol: 1e-6, atol: 1e-8, max_steps: 1_000_000 }
    }
}

impl IntegratorConfig {
    pub fn new(rtol: f64, atol: f64, max_steps: usize) -> Result<Self, IntegrationError> {
        let cfg = Self { rtol, atol, max_steps };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_rtol(self, rtol: f64) -> Self {
        Self { rtol, ..self }
    }

    pub fn with_atol(self, atol: f64) -> Self {
        Self { atol, ..self }
    }

    pub fn validate(&self) -> Result<(), IntegrationError> {
        if !(self.rtol >= 1e-12 && self.rtol.is_finite() && self.atol > 0.0 && self.atol.is_finite())
            || self.max_steps == 0
        {
            return Err(IntegrationError::InvalidConfig { rtol: self.rtol, atol: self.atol });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IntegrationError {
    #[error("step limit of {max_steps} exceeded at t = {t}")]
    TooManySteps { t: f64, max_steps: usize },
    #[error("non-finite derivative at t = {t}")]
    NonFinite { t: f64 },
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("right-hand side failed at t = {t}: {message}")]
    Field { t: f64, message: String },
    #[error("invalid integrator tolerances rtol = {rtol}, atol = {atol}")]
    InvalidConfig { rtol: f64, atol: f64 },
    #[error("integration interval runs backwards ({t0} -> {t1})")]
    Backwards { t0: f64, t1: f64 },
}

impl IntegrationError {
    /// Time reached before the failure, if any.
    pub fn time(&self) -> Option<f64> {
        match self {
            IntegrationError::TooManySteps { t, .. }
            | IntegrationError::NonFinite { t }
            | IntegrationError::StepUnderflow { t }
            | IntegrationError::Field { t, .. } => Some(*t),
            _ => None,
        }
    }
}

/// Step bookkeeping returned alongside the solution.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    /// Sum over accepted steps of the largest absolute local error estimate.
    pub error_estimate: f64,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Rhs<F> {
    f: F,
    evaluations: usize,
}

impl<F, E> Rhs<F>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
    E: Display,
{
    fn call(&mut self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), IntegrationError> {
        self.evaluations += 1;
        (self.f)(t, y, dy).map_err(|e| IntegrationError::Field { t, message: e.to_string() })?;
        if dy.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(IntegrationError::NonFinite { t })
        }
    }
}

/// Integrates `dy/dt = field(t, y)` from `t0` to `t1`, landing exactly on `t1`.
pub fn integrate_ode<F, E>(field: F, y0: &[f64], t0: f64, t1: f64, cfg: &IntegratorConfig) -> Result<Vec<f64>, IntegrationError>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
    E: Display,
{
    integrate_observed(field, y0, t0, t1, cfg, |_, _| {}).map(|(y, _)| y)
}

/// Like [`integrate_ode`], calling `observer(t, y)` after every accepted step
/// and returning step statistics.
pub fn integrate_observed<F, E, O>(
    field: F,
    y0: &[f64],
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
    mut observer: O,
) -> Result<(Vec<f64>, OdeStats), IntegrationError>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
    E: Display,
    O: FnMut(f64, &[f64]),
{
    cfg.validate()?;
    if !(t1 >= t0) {
        return Err(IntegrationError::Backwards { t0, t1 });
    }
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut stats = OdeStats::default();
    if t1 == t0 || n == 0 {
        return Ok((y, stats));
    }
    let mut rhs = Rhs { f: field, evaluations: 0 };

    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];

    rhs.call(t0, &y, &mut k1)?;
    let mut h = initial_step(&mut rhs, t0, &y, &k1, t1 - t0, cfg, &mut ytmp, &mut k2)?;
    let mut t = t0;
    let mut last_rejected = false;

    loop {
        if stats.accepted + stats.rejected >= cfg.max_steps {
            return Err(IntegrationError::TooManySteps { t, max_steps: cfg.max_steps });
        }
        let remaining = t1 - t;
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(IntegrationError::StepUnderflow { t });
        }

        for i in 0..n {
            ytmp[i] = y[i] + h * A21 * k1[i];
        }
        rhs.call(t + C2 * h, &ytmp, &mut k2)?;
        for i in 0..n {
            ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        rhs.call(t + C3 * h, &ytmp, &mut k3)?;
        for i in 0..n {
            ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rhs.call(t + C4 * h, &ytmp, &mut k4)?;
        for i in 0..n {
            ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rhs.call(t + C5 * h, &ytmp, &mut k5)?;
        for i in 0..n {
            ytmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let t_new = if last { t1 } else { t + h };
        rhs.call(t_new, &ytmp, &mut k6)?;
        for i in 0..n {
            ynew[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        rhs.call(t_new, &ynew, &mut k7)?;

        let mut err = 0.0_f64;
        let mut err_abs = 0.0_f64;
        for i in 0..n {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = cfg.atol + cfg.rtol * y[i].abs().max(ynew[i].abs());
            err = err.max(e.abs() / sc);
            err_abs = err_abs.max(e.abs());
        }
        if !err.is_finite() {
            return Err(IntegrationError::NonFinite { t });
        }

        if err <= 1.0 {
            stats.accepted += 1;
            stats.error_estimate += err_abs;
            t = t_new;
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
            observer(t, &y);
            if last {
                break;
            }
            let mut factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if last_rejected {
                factor = factor.min(1.0);
            }
            last_rejected = false;
            h *= factor;
        } else {
            stats.rejected += 1;
            last_rejected = true;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
        }
    }
    stats.evaluations = rhs.evaluations;
    Ok((y, stats))
}

/// Starting step size after Hairer, Norsett & Wanner (II.4).
#[allow(clippy::too_many_arguments)]
fn initial_step<F, E>(
    rhs: &mut Rhs<F>,
    t0: f64,
    y0: &[f64],
    f0: &[f64],
    span: f64,
    cfg: &IntegratorConfig,
    y1: &mut [f64],
    f1: &mut [f64],
) -> Result<f64, IntegrationError>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
    E: Display,
{
    let n = y0.len() as f64;
    let sc = |i: usize| cfg.atol + cfg.rtol * y0[i].abs();
    let d0 = (y0.iter().enumerate().map(|(i, v)| (v / sc(i)).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (f0.iter().enumerate().map(|(i, v)| (v / sc(i)).powi(2)).sum::<f64>() / n).sqrt();
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span);
    for i in 0..y0.len() {
        y1[i] = y0[i] + h0 * f0[i];
    }
    rhs.call(t0 + h0, y1, f1)?;
    let d2 = (f1.iter().zip(f0).enumerate().map(|(i, (a, b))| ((a - b) / sc(i)).powi(2)).sum::<f64>() / n).sqrt() / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    Ok((100.0 * h0).min(h1).min(span))
}

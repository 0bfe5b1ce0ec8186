use super::McmcError;
use std::f64::consts::{LN_10, PI};

/// Prior on one positive rate constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Prior {
    /// Density `rate^shape theta^(shape-1) e^(-rate theta) / Gamma(shape)`.
    Gamma { shape: f64, rate: f64 },
    /// Density `2c / (pi (1 + (c theta)^2))` on `theta > 0`.
    HalfCauchy { c: f64 },
}

impl Prior {
    pub fn gamma(shape: f64, rate: f64) -> Result<Self, McmcError> {
        if !(shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite()) {
            return Err(McmcError::InvalidPrior(format!("gamma({shape}, {rate}) needs positive finite arguments")));
        }
        Ok(Prior::Gamma { shape, rate })
    }

    pub fn half_cauchy(c: f64) -> Result<Self, McmcError> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(McmcError::InvalidPrior(format!("halfcauchy({c}) needs a positive finite scale")));
        }
        Ok(Prior::HalfCauchy { c })
    }

    /// Normalized log density at `theta`; `-inf` outside `(0, inf)`.
    pub fn log_density(&self, theta: f64) -> f64 {
        if !(theta > 0.0 && theta.is_finite()) {
            return f64::NEG_INFINITY;
        }
        match *self {
            Prior::Gamma { shape, rate } => {
                shape * rate.ln() - libm::lgamma(shape) + (shape - 1.0) * theta.ln() - rate * theta
            }
            Prior::HalfCauchy { c } => (2.0 * c / PI).ln() - (c * theta).powi(2).ln_1p(),
        }
    }
}

/// One prior per sampled parameter, in parameter order.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    names: Vec<String>,
    priors: Vec<Prior>,
}

impl PriorSpec {
    pub fn new(names: Vec<String>, priors: Vec<Prior>) -> Result<Self, McmcError> {
        if names.len() != priors.len() {
            return Err(McmcError::InvalidPrior("one prior per parameter is required".into()));
        }
        Ok(Self { names, priors })
    }

    /// Reads lines `<param> gamma <shape> <rate>` or `<param> halfcauchy <c>`
    /// (`#` comments allowed) and orders them as `param_names`. Every listed
    /// parameter needs exactly one line; `optional` names may be absent.
    pub fn parse(text: &str, param_names: &[&str], optional: &[&str]) -> Result<Self, McmcError> {
        let err = |line: usize, message: String| McmcError::PriorSyntax { line, message };
        let mut found: Vec<Option<Prior>> = vec![None; param_names.len() + optional.len()];
        let all: Vec<&str> = param_names.iter().chain(optional).copied().collect();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let words: Vec<&str> = content.split_whitespace().collect();
            let name = words[0];
            let idx = all.iter().position(|&p| p == name).ok_or_else(|| err(line, format!("unknown parameter `{name}`")))?;
            if found[idx].is_some() {
                return Err(err(line, format!("parameter `{name}` given more than once")));
            }
            let nums: Vec<f64> = words[2.min(words.len())..]
                .iter()
                .map(|w| w.parse::<f64>().map_err(|_| err(line, format!("`{w}` is not a number"))))
                .collect::<Result<_, _>>()?;
            let prior = match (words.get(1).copied(), nums.as_slice()) {
                (Some("gamma"), [shape, rate]) => Prior::gamma(*shape, *rate),
                (Some("halfcauchy"), [c]) => Prior::half_cauchy(*c),
                (Some("gamma"), _) => return Err(err(line, "gamma needs <shape> <rate>".into())),
                (Some("halfcauchy"), _) => return Err(err(line, "halfcauchy needs <c>".into())),
                (Some(other), _) => return Err(err(line, format!("unknown prior family `{other}`"))),
                (None, _) => return Err(err(line, "missing prior family".into())),
            }
            .map_err(|e| err(line, e.to_string()))?;
            found[idx] = Some(prior);
        }
        let mut names = Vec::new();
        let mut priors = Vec::new();
        for (i, (name, p)) in all.iter().zip(found).enumerate() {
            match p {
                Some(p) => {
                    names.push(name.to_string());
                    priors.push(p);
                }
                None if i < param_names.len() => {
                    return Err(McmcError::PriorSyntax { line: 0, message: format!("no prior for `{name}`") })
                }
                None => {}
            }
        }
        Self::new(names, priors)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn priors(&self) -> &[Prior] {
        &self.priors
    }

    pub fn get(&self, name: &str) -> Option<Prior> {
        self.names.iter().position(|n| n == name).map(|i| self.priors[i])
    }

    pub fn len(&self) -> usize {
        self.priors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.priors.is_empty()
    }
}

/// `sum_j log pi_j(theta_j)`, plus the change-of-variables term
/// `sum_j (ln theta_j + ln ln 10)` when `jacobian` is set (chain coordinates
/// are `log10 theta`). `-inf` if any `theta_j` is outside the support.
pub fn log_prior(priors: &[Prior], theta: &[f64], jacobian: bool) -> f64 {
    debug_assert_eq!(priors.len(), theta.len());
    let mut total = 0.0;
    for (p, &t) in priors.iter().zip(theta) {
        total += p.log_density(t);
        if jacobian {
            total += t.ln() + LN_10.ln();
        }
    }
    if total.is_nan() {
        f64::NEG_INFINITY
    } else {
        total
    }
}

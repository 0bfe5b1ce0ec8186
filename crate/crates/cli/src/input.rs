//! Loading and validating command inputs. Nothing here writes files.

use crate::args::{EngineKind, IntegratorArgs, ModelArgs, NetworkArgs};
use crate::{CliError, CliResult};
use kinetic_lna::inference::{ObservationModel, ObservationSeries};
use kinetic_lna::io::read_observation_csv;
use kinetic_lna::lna::IntegratorConfig;
use kinetic_lna::mcmc::Engine;
use kinetic_lna::network::{builtin, parse_network, ParameterSet, ReactionNetwork};
use std::path::Path;

pub struct LoadedNetwork {
    pub net: ReactionNetwork,
    /// `--theta`, else the builtin's rates.
    pub theta: Option<Vec<f64>>,
    /// The builtin's initial state, if the network is a builtin.
    pub default_x0: Option<Vec<f64>>,
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Resolves `--network` and `--theta`.
pub fn load_network(args: &NetworkArgs) -> CliResult<LoadedNetwork> {
    let (net, theta, x0) = if let Some(rest) = args.network.strip_prefix("builtin:") {
        let (name, scale) = match rest.split_once(':') {
            Some((name, s)) => {
                let scale = s.parse::<f64>().map_err(|_| CliError::Usage(format!("bad system size `{s}`")))?;
                (name, scale)
            }
            None => (rest, 1.0),
        };
        let b = builtin(name, scale).map_err(|e| CliError::Usage(e.to_string()))?;
        (b.network, Some(b.theta.into_inner()), Some(b.x0))
    } else {
        let text = read_text(Path::new(&args.network))?;
        let net = parse_network(&text).map_err(|e| CliError::Data(format!("{}: {e}", args.network)))?;
        (net, None, None)
    };
    let theta = args.theta.clone().or(theta);
    if let Some(t) = &theta {
        check_theta(&net, t)?;
    }
    Ok(LoadedNetwork { net, theta, default_x0: x0 })
}

impl LoadedNetwork {
    pub fn theta(&self) -> CliResult<&[f64]> {
        self.theta.as_deref().ok_or_else(|| CliError::Usage("--theta is required for a network file".into()))
    }
}

pub fn check_theta(net: &ReactionNetwork, theta: &[f64]) -> CliResult<()> {
    if theta.len() != net.n_params() {
        return Err(CliError::Usage(format!(
            "network has {} parameters ({}), got {} values",
            net.n_params(),
            net.params().join(", "),
            theta.len()
        )));
    }
    ParameterSet::new(theta.to_vec()).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(())
}

/// `--x0` if given, else the builtin default.
pub fn resolve_x0(loaded: &LoadedNetwork, x0: &Option<Vec<f64>>) -> CliResult<Vec<f64>> {
    let x0 = x0
        .clone()
        .or_else(|| loaded.default_x0.clone())
        .ok_or_else(|| CliError::Usage("--x0 is required for a network file".into()))?;
    check_state(&loaded.net, &x0)?;
    Ok(x0)
}

pub fn check_state(net: &ReactionNetwork, x0: &[f64]) -> CliResult<()> {
    if x0.len() != net.n_species() {
        return Err(CliError::Usage(format!(
            "network has {} species ({}), got an initial state of length {}",
            net.n_species(),
            net.species().join(", "),
            x0.len()
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Usage("initial state must be finite".into()));
    }
    Ok(())
}

pub fn integrator_config(args: &IntegratorArgs) -> CliResult<IntegratorConfig> {
    let mut cfg = IntegratorConfig::default();
    if let Some(r) = args.rtol {
        cfg.rtol = r;
    }
    if let Some(a) = args.atol {
        cfg.atol = a;
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

pub struct LoadedModel {
    pub series: ObservationSeries,
    pub obs: ObservationModel,
    pub engine: Engine,
}

/// Reads data and observation model and checks engine flags. With
/// `sample_sigma2`, a missing `--sigma2` for `ode` means it is sampled.
pub fn load_model(net: &ReactionNetwork, args: &ModelArgs, sample_sigma2: bool) -> CliResult<LoadedModel> {
    if args.engine == EngineKind::Lna && args.x0.is_some() {
        return Err(CliError::Usage("--x0 applies to the lna-global and ode engines".into()));
    }
    if args.engine != EngineKind::Ode && args.sigma2.is_some() {
        return Err(CliError::Usage("--sigma2 applies to the ode engine".into()));
    }
    if let Some(s) = args.sigma2 {
        if !(s > 0.0 && s.is_finite()) {
            return Err(CliError::Usage(format!("--sigma2 must be positive, got {s}")));
        }
    }
    if args.engine == EngineKind::Ode && args.sigma2.is_none() && !sample_sigma2 {
        return Err(CliError::Usage("the ode engine needs --sigma2".into()));
    }
    if let Some(x0) = &args.x0 {
        check_state(net, x0)?;
    }
    let spec = read_text(&args.obs_model)?;
    let obs = ObservationModel::parse_spec(&spec, net.n_species())
        .map_err(|e| CliError::Data(format!("{}: {e}", args.obs_model.display())))?;
    let file = std::fs::File::open(&args.data).map_err(|e| CliError::Data(format!("{}: {e}", args.data.display())))?;
    let (_, series) =
        read_observation_csv(file).map_err(|e| CliError::Data(format!("{}: {e}", args.data.display())))?;
    if series.dim() != obs.obs_dim() {
        return Err(CliError::Data(format!(
            "data has {} observed columns but the observation model has obs_dim {}",
            series.dim(),
            obs.obs_dim()
        )));
    }
    let x0 = || args.x0.clone().unwrap_or_else(|| obs.mu0().iter().copied().collect());
    let engine = match args.engine {
        EngineKind::Lna => Engine::Lna,
        EngineKind::LnaGlobal => Engine::LnaGlobal { x0: x0() },
        EngineKind::Ode => Engine::Ode { x0: x0(), sigma2: args.sigma2 },
    };
    Ok(LoadedModel { series, obs, engine })
}

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "kinetic-lna", version, about = "Simulation and LNA-based inference for reaction networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one path with the exact algorithm or Euler-Maruyama.
    Simulate(SimulateArgs),
    /// Compare transition laws from SSA, Euler-Maruyama and the LNA.
    Transdens(TransdensArgs),
    /// Evaluate a log-likelihood for observed data.
    Loglik(LoglikArgs),
    /// Random-walk Metropolis inference on log10 rate constants.
    Infer(InferArgs),
    /// Write an embedded dataset.
    Dataset(DatasetArgs),
}

#[derive(Debug, Args)]
pub struct NetworkArgs {
    /// Network file, or `builtin:<name>[:<scale>]` with name lotka-volterra, sir or autoreg.
    #[arg(long)]
    pub network: String,
    /// Rate constants, comma separated (defaults to the builtin's).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub theta: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct IntegratorArgs {
    /// Relative tolerance of the ODE solver.
    #[arg(long, env = "KINETIC_LNA_RTOL")]
    pub rtol: Option<f64>,
    /// Absolute tolerance of the ODE solver.
    #[arg(long)]
    pub atol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Ssa,
    Em,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub net: NetworkArgs,
    /// Initial state (defaults to the builtin's).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub x0: Option<Vec<f64>>,
    /// End time; defaults to the last observation time.
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long, value_enum, default_value_t = Method::Ssa)]
    pub method: Method,
    /// Euler-Maruyama step.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Record the state only at these times: a comma list or `start:stop:step`.
    #[arg(long, value_parser = parse_times)]
    pub obs_times: Option<Times>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DensityMethod {
    Ssa,
    Em,
    Lna,
}

impl DensityMethod {
    pub fn name(self) -> &'static str {
        match self {
            DensityMethod::Ssa => "ssa",
            DensityMethod::Em => "em",
            DensityMethod::Lna => "lna",
        }
    }
}

#[derive(Debug, Args)]
pub struct TransdensArgs {
    #[command(flatten)]
    pub net: NetworkArgs,
    /// Initial state (defaults to the builtin's).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub x0: Option<Vec<f64>>,
    /// Times at which to compare, a comma list or `start:stop:step`.
    #[arg(long, value_parser = parse_times)]
    pub times: Times,
    /// Monte Carlo replicates per time and method.
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [DensityMethod::Ssa, DensityMethod::Em, DensityMethod::Lna])]
    pub methods: Vec<DensityMethod>,
    /// Euler-Maruyama step, required with `em`.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub integrator: IntegratorArgs,
    /// Output files are `<prefix>_t<k>_<method>.csv` and `<prefix>_moments.csv`.
    #[arg(long)]
    pub out_prefix: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineKind {
    Lna,
    LnaGlobal,
    Ode,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Observation CSV: `time` then one column per observed component.
    #[arg(long)]
    pub data: PathBuf,
    /// Observation model spec (`obs_dim`, `P`, `Vdiag`, `mu0`, `Sigma0diag`).
    #[arg(long)]
    pub obs_model: PathBuf,
    #[arg(long, value_enum, default_value_t = EngineKind::Lna)]
    pub engine: EngineKind,
    /// Fixed initial state for `lna-global` and `ode` (defaults to the model's mu0).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub x0: Option<Vec<f64>>,
    /// Error variance for `ode`.
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[command(flatten)]
    pub integrator: IntegratorArgs,
}

#[derive(Debug, Args)]
pub struct LoglikArgs {
    #[command(flatten)]
    pub net: NetworkArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Write filtered state means (filter engines only).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[command(flatten)]
    pub net: NetworkArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Prior spec: lines `<param> gamma <shape> <rate>` or `<param> halfcauchy <c>`.
    #[arg(long)]
    pub prior: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    pub iters: usize,
    /// Iterations dropped from the summary; defaults to a fifth of `--iters`.
    #[arg(long)]
    pub burnin: Option<usize>,
    /// Starting rate constants; defaults to `--theta`, then to the prior locations.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub init: Option<Vec<f64>>,
    /// Proposal sd in log10 units for the first tuning probe.
    #[arg(long, default_value_t = 0.1)]
    pub init_sd: f64,
    /// Independent chains, run concurrently.
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    /// Sample log10 theta under a flat change of variables (drop the Jacobian).
    #[arg(long)]
    pub no_jacobian: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Chain CSV; with several chains `.<k>` is inserted before the extension.
    #[arg(long)]
    pub out: PathBuf,
    /// Summary CSV, suffixed like `--out`.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    #[arg(long)]
    pub name: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Days observed after the final removal.
    #[arg(long, default_value_t = 10)]
    pub tail_days: u32,
    /// Also write the matching observation model spec.
    #[arg(long)]
    pub obs_model_out: Option<PathBuf>,
}

/// Parsed time list; wrapping keeps clap from splitting it per value.
#[derive(Debug, Clone, PartialEq)]
pub struct Times(pub Vec<f64>);

/// `a,b,c` or `start:stop:step` (inclusive of `stop` up to rounding).
pub fn parse_times(s: &str) -> Result<Times, String> {
    let num = |w: &str| w.trim().parse::<f64>().map_err(|_| format!("`{w}` is not a number"));
    let parts: Vec<&str> = s.split(':').collect();
    let times = match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if !(step > 0.0 && step.is_finite() && start.is_finite() && stop >= start) {
                return Err(format!("bad range `{s}`"));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            (0..=n).map(|k| start + k as f64 * step).collect()
        }
        [_] => s.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
        _ => return Err(format!("expected a comma list or start:stop:step, got `{s}`")),
    };
    if times.is_empty() || times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err("times must be finite and nonnegative".into());
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err("times must be strictly increasing".into());
    }
    Ok(Times(times))
}

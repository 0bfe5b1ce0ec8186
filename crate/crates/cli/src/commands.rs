//! Each command validates and computes everything in memory, then writes.

use crate::args::{
    Command, DatasetArgs, DensityMethod, EngineKind, InferArgs, LoglikArgs, Method, SimulateArgs, TransdensArgs,
};
use crate::input::{integrator_config, load_model, load_network, read_text, resolve_x0, LoadedModel};
use crate::{CliError, CliResult};
use kinetic_lna::datasets::{smallpox_obs_model, smallpox_series};
use kinetic_lna::inference::{loglik_lna_filter, loglik_lna_global, loglik_ode_gauss, FilterResult};
use kinetic_lna::io::{
    fmt_num, format_summary, write_chain_csv, write_gaussian_csv, write_observation_csv, write_samples_csv,
    write_summary_csv, write_table_csv, write_time_series_csv, write_trajectory_csv, IoError,
};
use kinetic_lna::lna::{lna_transition_density, GaussianDist};
use kinetic_lna::mcmc::{
    rwm_chain, summarize, tune_proposal, ChainSummary, Engine, LogPosterior, Prior, PriorSpec, SampleChain,
    MIN_ESS_LENGTH,
};
use kinetic_lna::sim::{em_trajectory, empirical_transition, rng_for, ssa_trajectory, SimError, SimMethod};
use nalgebra::DVector;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Largest tolerated share of failed likelihood evaluations in `infer`.
const MAX_FAILURE_RATE: f64 = 0.01;

/// Scale of the default half-Cauchy prior on a sampled error variance.
const DEFAULT_SIGMA2_PRIOR_C: f64 = 0.01;

pub fn run(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Simulate(a) => simulate(a),
        Command::Transdens(a) => transdens(a),
        Command::Loglik(a) => loglik(a),
        Command::Infer(a) => infer(a),
        Command::Dataset(a) => dataset(a),
    }
}

fn sim_error(e: SimError) -> CliError {
    fn is_usage(e: &SimError) -> bool {
        match e {
            SimError::InvalidInitialState { .. }
            | SimError::InvalidHorizon(_)
            | SimError::InvalidStep(_)
            | SimError::InvalidGrid
            | SimError::TooFewReplicates(_)
            | SimError::Dimension { .. } => true,
            SimError::Replicate { source, .. } => is_usage(source),
            _ => false,
        }
    }
    if is_usage(&e) {
        CliError::Usage(e.to_string())
    } else {
        CliError::Numerical(e.to_string())
    }
}

/// Renders a CSV into memory.
fn render(f: impl FnOnce(&mut Vec<u8>) -> Result<(), IoError>) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| CliError::Data(e.to_string()))?;
    Ok(buf)
}

/// Writes every rendered file, in order.
fn write_all(files: Vec<(PathBuf, Vec<u8>)>) -> CliResult<()> {
    for (path, bytes) in files {
        std::fs::write(&path, bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn simulate(a: SimulateArgs) -> CliResult<()> {
    let loaded = load_network(&a.net)?;
    let theta = loaded.theta()?.to_vec();
    let x0 = resolve_x0(&loaded, &a.x0)?;
    let obs_times = a.obs_times.map(|t| t.0);
    let t_end = match (a.t_end, &obs_times) {
        (Some(t), _) if !(t > 0.0 && t.is_finite()) => {
            return Err(CliError::Usage(format!("--t-end must be positive, got {t}")))
        }
        (Some(t), Some(obs)) if obs.last().is_some_and(|&l| l > t) => {
            return Err(CliError::Usage(format!("observation times run past --t-end {t}")))
        }
        (Some(t), _) => t,
        (None, Some(obs)) => *obs.last().expect("parsed lists are non-empty"),
        (None, None) => return Err(CliError::Usage("give --t-end or --obs-times".into())),
    };
    if t_end <= 0.0 {
        return Err(CliError::Usage("the simulation horizon must be positive".into()));
    }
    let species = loaded.net.species().to_vec();
    let mut rng = rng_for(a.seed);
    let bytes = match a.method {
        Method::Ssa => {
            if a.dt.is_some() {
                return Err(CliError::Usage("--dt applies to --method em".into()));
            }
            let traj = ssa_trajectory(&loaded.net, &theta, &x0, t_end, &mut rng).map_err(sim_error)?;
            match &obs_times {
                Some(times) => {
                    let states = traj.sample_at_times(times).map_err(sim_error)?;
                    render(|w| write_time_series_csv(w, &species, times, &states))?
                }
                None => render(|w| write_trajectory_csv(w, &species, &traj))?,
            }
        }
        Method::Em => {
            let dt = a.dt.ok_or_else(|| CliError::Usage("--method em needs --dt".into()))?;
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(CliError::Usage(format!("--dt must be positive, got {dt}")));
            }
            match &obs_times {
                Some(times) => {
                    let lead = times[0] > 0.0;
                    let grid: Vec<f64> = lead.then_some(0.0).into_iter().chain(times.iter().copied()).collect();
                    let traj = em_trajectory(&loaded.net, &theta, &x0, &grid, dt, &mut rng).map_err(sim_error)?;
                    let states: Vec<DVector<f64>> =
                        traj.states().skip(lead as usize).map(DVector::from_column_slice).collect();
                    render(|w| write_time_series_csv(w, &species, times, &states))?
                }
                None => {
                    let n = (t_end / dt - 1e-9).ceil() as usize;
                    let grid: Vec<f64> = (0..n).map(|k| k as f64 * dt).chain(std::iter::once(t_end)).collect();
                    let traj = em_trajectory(&loaded.net, &theta, &x0, &grid, dt, &mut rng).map_err(sim_error)?;
                    render(|w| write_trajectory_csv(w, &species, &traj))?
                }
            }
        }
    };
    write_all(vec![(a.out, bytes)])
}

fn transdens(a: TransdensArgs) -> CliResult<()> {
    let loaded = load_network(&a.net)?;
    let theta = loaded.theta()?.to_vec();
    let x0 = resolve_x0(&loaded, &a.x0)?;
    let cfg = integrator_config(&a.integrator)?;
    let times = a.times.0;
    if times[0] <= 0.0 {
        return Err(CliError::Usage("comparison times must be positive".into()));
    }
    if a.reps < 2 {
        return Err(CliError::Usage(format!("--reps must be at least 2, got {}", a.reps)));
    }
    let mut methods = a.methods.clone();
    methods.dedup();
    let em_dt = match (methods.contains(&DensityMethod::Em), a.dt) {
        (true, Some(dt)) if dt > 0.0 && dt.is_finite() => Some(dt),
        (true, Some(dt)) => return Err(CliError::Usage(format!("--dt must be positive, got {dt}"))),
        (true, None) => return Err(CliError::Usage("method em needs --dt".into())),
        (false, Some(_)) => return Err(CliError::Usage("--dt applies to method em".into())),
        (false, None) => None,
    };
    let species = loaded.net.species().to_vec();
    let mut files = Vec::new();
    let mut moments = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        for &m in &methods {
            let path = PathBuf::from(format!("{}_t{k}_{}.csv", a.out_prefix, m.name()));
            let law = match m {
                DensityMethod::Lna => {
                    let g = lna_transition_density(&loaded.net, &theta, &x0, t, &cfg)
                        .map_err(|e| CliError::Numerical(e.to_string()))?;
                    files.push((path, render(|w| write_gaussian_csv(w, &species, &g))?));
                    g
                }
                DensityMethod::Ssa | DensityMethod::Em => {
                    let method = match em_dt {
                        Some(dt) if m == DensityMethod::Em => SimMethod::EulerMaruyama { dt },
                        _ => SimMethod::Exact,
                    };
                    let e = empirical_transition(&loaded.net, &theta, &x0, t, a.reps, method, a.seed)
                        .map_err(sim_error)?;
                    files.push((path, render(|w| write_samples_csv(w, &species, &e.samples))?));
                    GaussianDist::new(e.mean, e.cov)
                }
            };
            let sd = law.sd();
            for (j, s) in species.iter().enumerate() {
                moments.push(vec![m.name().to_string(), s.clone(), fmt_num(t), fmt_num(law.mean[j]), fmt_num(sd[j])]);
            }
        }
    }
    let header: Vec<String> = ["method", "species", "time", "mean", "sd"].iter().map(|s| s.to_string()).collect();
    files.push((
        PathBuf::from(format!("{}_moments.csv", a.out_prefix)),
        render(|w| write_table_csv(w, &header, moments.into_iter()))?,
    ));
    write_all(files)
}

fn filter_result(
    net: &kinetic_lna::network::ReactionNetwork,
    theta: &[f64],
    model: &LoadedModel,
    cfg: &kinetic_lna::lna::IntegratorConfig,
) -> CliResult<FilterResult> {
    let r = match &model.engine {
        Engine::Lna => loglik_lna_filter(net, theta, &model.obs, &model.series, cfg),
        Engine::LnaGlobal { x0 } => loglik_lna_global(net, theta, x0, &model.obs, &model.series, cfg),
        Engine::Ode { .. } => unreachable!("ode has no filter"),
    };
    r.map_err(|e| CliError::Numerical(e.to_string()))
}

fn loglik(a: LoglikArgs) -> CliResult<()> {
    let loaded = load_network(&a.net)?;
    let theta = loaded.theta()?.to_vec();
    let cfg = integrator_config(&a.model.integrator)?;
    if a.model.engine == EngineKind::Ode && a.out.is_some() {
        return Err(CliError::Usage("--out writes filtered means, which the ode engine does not produce".into()));
    }
    let model = load_model(&loaded.net, &a.model, false)?;
    let (value, files) = match &model.engine {
        Engine::Ode { x0, sigma2 } => {
            let s2 = sigma2.expect("checked when loading");
            let v = loglik_ode_gauss(&loaded.net, &theta, x0, s2, &model.obs, &model.series, &cfg)
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            (v, Vec::new())
        }
        _ => {
            let r = filter_result(&loaded.net, &theta, &model, &cfg)?;
            if r.jittered > 0 {
                log::warn!("{} innovation covariances needed jitter", r.jittered);
            }
            if r.eta_went_negative {
                log::warn!("the deterministic path went below zero");
            }
            let mut files = Vec::new();
            if let Some(out) = a.out {
                let means: Vec<DVector<f64>> = r.filtered.iter().map(|g| g.mean.clone()).collect();
                let species = loaded.net.species();
                files.push((out, render(|w| write_time_series_csv(w, species, model.series.times(), &means))?));
            }
            (r.loglik, files)
        }
    };
    write_all(files)?;
    println!("{}", fmt_num(value));
    Ok(())
}

/// Inserts `.<k>` before the extension when there are several chains.
fn chain_path(path: &Path, k: usize, chains: usize) -> PathBuf {
    if chains == 1 {
        return path.to_path_buf();
    }
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{}.{}", k + 1, ext.to_string_lossy()),
        None => format!("{stem}.{}", k + 1),
    };
    path.with_file_name(name)
}

fn prior_location(p: &Prior) -> f64 {
    match *p {
        Prior::Gamma { shape, rate } => shape / rate,
        Prior::HalfCauchy { c } => 1.0 / c,
    }
}

struct ChainRun {
    chain: SampleChain,
    summary: ChainSummary,
    tuned_acceptance: f64,
    tuning_rounds: usize,
    tuning_converged: bool,
    failures: usize,
    evaluations: usize,
}

fn infer(a: InferArgs) -> CliResult<()> {
    let started = Instant::now();
    let loaded = load_network(&a.net)?;
    let cfg = integrator_config(&a.model.integrator)?;
    if a.iters == 0 {
        return Err(CliError::Usage("--iters must be positive".into()));
    }
    if a.chains == 0 {
        return Err(CliError::Usage("--chains must be positive".into()));
    }
    if !(a.init_sd > 0.0 && a.init_sd.is_finite()) {
        return Err(CliError::Usage(format!("--init-sd must be positive, got {}", a.init_sd)));
    }
    let burnin = a.burnin.unwrap_or(a.iters / 5);
    if burnin >= a.iters {
        return Err(CliError::Usage(format!("--burnin {burnin} must be below --iters {}", a.iters)));
    }
    if a.iters - burnin < MIN_ESS_LENGTH {
        return Err(CliError::Usage(format!("keep at least {MIN_ESS_LENGTH} iterations after burn-in")));
    }
    let model = load_model(&loaded.net, &a.model, true)?;
    let net = &loaded.net;
    let params: Vec<&str> = net.params().iter().map(String::as_str).collect();
    let sampled = model.engine.samples_sigma2();
    let optional: &[&str] = if sampled { &["sigma2"] } else { &[] };
    let text = read_text(&a.prior)?;
    let mut priors = PriorSpec::parse(&text, &params, optional)
        .map_err(|e| CliError::Data(format!("{}: {e}", a.prior.display())))?;
    if sampled && priors.get("sigma2").is_none() {
        log::info!("no prior for sigma2 given, using halfcauchy {DEFAULT_SIGMA2_PRIOR_C}");
        let mut names = priors.names().to_vec();
        let mut list = priors.priors().to_vec();
        names.push("sigma2".into());
        list.push(Prior::half_cauchy(DEFAULT_SIGMA2_PRIOR_C).expect("valid scale"));
        priors = PriorSpec::new(names, list).expect("same lengths");
    }

    let mut init = match (&a.init, &loaded.theta) {
        (Some(v), _) | (None, Some(v)) => v.clone(),
        (None, None) => priors.priors()[..net.n_params()].iter().map(prior_location).collect(),
    };
    if init.len() == net.n_params() && sampled {
        init.push(prior_location(priors.priors().last().expect("sigma2 prior")));
    }
    if init.len() != priors.len() {
        return Err(CliError::Usage(format!("--init needs {} values, got {}", priors.len(), init.len())));
    }
    if init.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(CliError::Usage("starting values must be positive".into()));
    }
    let start: Vec<f64> = init.iter().map(|v| v.log10()).collect();

    let names = priors.names().to_vec();
    let mut post = LogPosterior::new(net, &model.obs, &model.series, model.engine.clone(), priors, cfg)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    post.jacobian = !a.no_jacobian;
    let lp0 = post.eval(&start);
    if !lp0.is_finite() {
        return Err(CliError::Numerical(format!("log-posterior at the starting point is {lp0}")));
    }

    let run_chain = |k: usize| -> CliResult<ChainRun> {
        let seed = a.seed.wrapping_add(k as u64);
        let tune = tune_proposal(|v| post.eval(v), &start, a.init_sd, seed)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        let chain = rwm_chain(|v| post.eval(v), tune.end_state.as_slice(), &tune.proposal_cov, a.iters, seed)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        let summary = summarize(&chain, &names, burnin).map_err(|e| CliError::Numerical(e.to_string()))?;
        Ok(ChainRun {
            failures: tune.failures + chain.failures,
            evaluations: tune.evaluations + a.iters,
            tuned_acceptance: tune.acceptance,
            tuning_rounds: tune.rounds,
            tuning_converged: tune.converged,
            chain,
            summary,
        })
    };
    let runs: Vec<ChainRun> = if a.chains == 1 {
        vec![run_chain(0)?]
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..a.chains).map(|k| s.spawn(move || run_chain(k))).collect();
            handles.into_iter().map(|h| h.join().expect("chain thread panicked")).collect::<CliResult<Vec<_>>>()
        })?
    };

    let failures: usize = runs.iter().map(|r| r.failures).sum();
    let evaluations: usize = runs.iter().map(|r| r.evaluations).sum();
    let rate = failures as f64 / evaluations as f64;
    if rate > MAX_FAILURE_RATE {
        return Err(CliError::Numerical(format!(
            "{failures} of {evaluations} likelihood evaluations failed ({:.2}%), above the 1% limit",
            100.0 * rate
        )));
    }

    let mut files = Vec::new();
    for (k, r) in runs.iter().enumerate() {
        files.push((chain_path(&a.out, k, a.chains), render(|w| write_chain_csv(w, &names, &r.chain))?));
        if let Some(p) = &a.summary {
            files.push((chain_path(p, k, a.chains), render(|w| write_summary_csv(w, &r.summary))?));
        }
    }
    write_all(files)?;

    for (k, r) in runs.iter().enumerate() {
        if a.chains > 1 {
            println!("chain {}", k + 1);
        }
        if !r.tuning_converged {
            log::warn!("tuning did not reach the target acceptance band");
        }
        println!(
            "tuning: {} probes, acceptance {:.3}; {} failed evaluations",
            r.tuning_rounds, r.tuned_acceptance, r.failures
        );
        print!("{}", format_summary(&r.summary));
    }
    println!("wall-clock {:.2} s", started.elapsed().as_secs_f64());
    Ok(())
}

fn dataset(a: DatasetArgs) -> CliResult<()> {
    if a.name != "smallpox" {
        return Err(CliError::Usage(format!("unknown dataset `{}` (available: smallpox)", a.name)));
    }
    let series = smallpox_series(a.tail_days);
    let mut files = vec![(a.out, render(|w| write_observation_csv(w, &["I_plus_S".to_string()], &series))?)];
    if let Some(p) = a.obs_model_out {
        files.push((p, smallpox_obs_model().to_spec().into_bytes()));
    }
    write_all(files)
}

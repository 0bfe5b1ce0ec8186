//! Randomized invariants shared by the `properties` test target and the
//! acceptance runner. Each check returns `Err` with the failing case.

use kinetic_lna::inference::{continue_lna_filter, kalman_update, loglik_lna_filter, ObservationModel, ObservationSeries};
use kinetic_lna::lna::{lna_predict, min_eigenvalue, GaussianDist, IntegratorConfig};
use kinetic_lna::mcmc::rwm_chain;
use kinetic_lna::network::{builtin, parse_network, Builtin};
use kinetic_lna::sim::{em_trajectory, empirical_transition, replicate_rng, ssa_trajectory, SimMethod};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

pub type Check = fn() -> Result<(), String>;

pub const ALL: &[(&str, Check)] = &[
    ("parser round trip", parser_round_trip),
    ("jacobian matches finite differences", jacobian_matches_finite_differences),
    ("diffusion symmetric psd", diffusion_symmetric_psd),
    ("kalman psd order", kalman_psd_order),
    ("likelihood additivity", likelihood_additivity),
    ("determinism per seed", determinism_per_seed),
    ("lna semigroup", lna_semigroup),
];

const BUILTINS: [&str; 3] = ["lotka-volterra", "sir", "autoreg"];

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(Config { cases, failure_persistence: None, ..Config::default() }, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

fn load(name: &str) -> Builtin {
    builtin(name, 1.0).unwrap()
}

/// Fully parenthesized rate expression over `x0..x{ns}`, `k0..k{np}` and `c`.
fn expr(ns: usize, np: usize) -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (0..ns).prop_map(|i| format!("x{i}")),
        (0..np).prop_map(|i| format!("k{i}")),
        Just("c".to_string()),
        prop::sample::select(vec!["0.5", "2", "1e-3", "3.25", "10"]).prop_map(str::to_string),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), prop::sample::select(vec!["+", "-", "*", "/"]), inner.clone())
                .prop_map(|(l, op, r)| format!("({l} {op} {r})")),
            inner.prop_map(|e| format!("-{e}")),
        ]
    })
}

fn side(ns: usize) -> impl Strategy<Value = String> {
    prop::collection::vec((0..ns, 1u32..3), 0..3).prop_map(|terms| {
        if terms.is_empty() {
            return "0".to_string();
        }
        let parts: Vec<String> =
            terms.iter().map(|&(s, m)| if m == 1 { format!("x{s}") } else { format!("{m} x{s}") }).collect();
        parts.join(" + ")
    })
}

fn network_text() -> impl Strategy<Value = String> {
    (1usize..4, 1usize..4).prop_flat_map(|(ns, np)| {
        prop::collection::vec((side(ns), side(ns), expr(ns, np)), 1..5).prop_map(move |reactions| {
            let species: Vec<String> = (0..ns).map(|i| format!("x{i}")).collect();
            let params: Vec<String> = (0..np).map(|i| format!("k{i}")).collect();
            let mut text = format!("species {}\nparam {}\nconst c = 2.5\n", species.join(" "), params.join(" "));
            for (lhs, rhs, rate) in reactions {
                text += &format!("reaction: {lhs} -> {rhs} @ {rate}\n");
            }
            text
        })
    })
}

pub fn parser_round_trip() -> Result<(), String> {
    for name in BUILTINS {
        let net = load(name).network;
        let back = parse_network(&net.to_dsl()).map_err(|e| format!("{name}: {e}"))?;
        if back != net {
            return Err(format!("{name} changed under round trip"));
        }
    }
    run(256, network_text(), |text| {
        let net = parse_network(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        let dsl = net.to_dsl();
        let back = parse_network(&dsl).map_err(|e| TestCaseError::fail(format!("{e}\n{dsl}")))?;
        prop_assert_eq!(back.to_dsl(), dsl);
        prop_assert_eq!(back, net);
        Ok(())
    })
}

fn state_and_rates(name: &'static str) -> impl Strategy<Value = (&'static str, Vec<f64>, Vec<f64>)> {
    let b = load(name);
    (prop::collection::vec(0.5f64..300.0, b.network.n_species()), prop::collection::vec(1e-3f64..2.0, b.network.n_params()))
        .prop_map(move |(x, th)| (name, x, th))
}

pub fn jacobian_matches_finite_differences() -> Result<(), String> {
    let strategy = prop_oneof![state_and_rates(BUILTINS[0]), state_and_rates(BUILTINS[1]), state_and_rates(BUILTINS[2])];
    run(300, strategy, |(name, x, theta)| {
        let net = load(name).network;
        let jac = net.drift_jacobian(&x, &theta).unwrap();
        for j in 0..x.len() {
            let h = 1e-6 * x[j].max(1.0);
            let (mut up, mut down) = (x.clone(), x.clone());
            up[j] += h;
            down[j] -= h;
            let fd = (net.drift(&up, &theta).unwrap() - net.drift(&down, &theta).unwrap()) / (2.0 * h);
            for i in 0..x.len() {
                let (a, b) = (jac[(i, j)], fd[i]);
                prop_assert!((a - b).abs() <= 1e-5 * a.abs().max(b.abs()) + 1e-8, "{name} d{i}/dx{j}: {a} vs {b} at {x:?}");
            }
        }
        Ok(())
    })
}

pub fn diffusion_symmetric_psd() -> Result<(), String> {
    let ints = |name: &'static str| {
        let b = load(name);
        (prop::collection::vec(0u32..40, b.network.n_species()), prop::collection::vec(1e-3f64..2.0, b.network.n_params()))
            .prop_map(move |(x, th)| (name, x.into_iter().map(f64::from).collect::<Vec<_>>(), th))
    };
    run(300, prop_oneof![ints(BUILTINS[0]), ints(BUILTINS[1]), ints(BUILTINS[2])], |(name, x, theta)| {
        let net = load(name).network;
        // Autoreg rates go negative once DNA exceeds its conserved total.
        prop_assume!(net.propensities(&x, &theta).unwrap().iter().all(|&h| h >= 0.0));
        let d = net.diffusion_matrix(&x, &theta).unwrap();
        prop_assert!(d == d.transpose(), "{name}: asymmetric at {x:?}");
        let norm = d.norm();
        prop_assert!(min_eigenvalue(&d) >= -1e-10 * norm, "{name}: indefinite at {x:?}");
        Ok(())
    })
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-3.0f64..3.0, rows * cols).prop_map(move |v| DMatrix::from_row_slice(rows, cols, &v))
}

pub fn kalman_psd_order() -> Result<(), String> {
    let case = (1usize..4, 1usize..4).prop_flat_map(|(n, d)| {
        (matrix(n, n), matrix(d, n), prop::collection::vec(0.0f64..2.0, d), matrix(n, 1), matrix(d, 1))
    });
    run(500, case, |(l, p, v, mu, y)| {
        let n = l.nrows();
        let sigma = &l * l.transpose();
        let obs = ObservationModel::new(
            p,
            DMatrix::from_diagonal(&DVector::from_vec(v)),
            DVector::zeros(n),
            DMatrix::zeros(n, n),
        )
        .unwrap();
        let pred = GaussianDist::new(mu.column(0).into_owned(), sigma.clone());
        let step = kalman_update(&pred, &obs, &y.column(0).into_owned());
        // Only a singular innovation covariance may fail.
        prop_assume!(step.is_ok());
        let step = step.unwrap();
        let post = &step.posterior.cov;
        let scale = sigma.trace().max(1.0);
        prop_assert!(post == &post.transpose());
        prop_assert!(min_eigenvalue(post) >= -1e-9 * scale, "posterior not psd: {post}");
        prop_assert!(min_eigenvalue(&(&sigma - post)) >= -1e-9 * scale, "update increased covariance: {sigma} -> {post}");
        Ok(())
    })
}

fn lv_predator_model(v: f64) -> ObservationModel {
    ObservationModel::new(
        DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
        DMatrix::from_element(1, 1, v),
        DVector::from_vec(vec![40.0, 140.0]),
        DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 100.0])),
    )
    .unwrap()
}

fn lv_series() -> ObservationSeries {
    let pred = [40.0, 52.0, 71.0, 96.0, 120.0, 128.0, 110.0, 84.0, 60.0, 45.0, 36.0];
    let times = (0..pred.len()).map(|t| t as f64).collect();
    ObservationSeries::new(times, pred.iter().map(|&p| DVector::from_element(1, p)).collect()).unwrap()
}

pub fn likelihood_additivity() -> Result<(), String> {
    let lv = load("lotka-volterra");
    let series = lv_series();
    let cfg = IntegratorConfig::default();
    let n = series.len() - 1;
    run(40, (1..n, 0.7f64..1.4, prop::sample::select(vec![0.0, 1.0, 25.0])), |(k, f, v)| {
        let theta: Vec<f64> = lv.theta.iter().map(|t| t * f).collect();
        let obs = lv_predator_model(v);
        let whole = loglik_lna_filter(&lv.network, &theta, &obs, &series, &cfg).unwrap();
        let head = loglik_lna_filter(&lv.network, &theta, &obs, &series.head(k).unwrap(), &cfg).unwrap();
        let tail = continue_lna_filter(
            &lv.network,
            &theta,
            &obs,
            head.filtered.last().unwrap(),
            series.times()[k],
            &series.times()[k + 1..],
            &series.values()[k + 1..],
            &cfg,
        )
        .unwrap();
        let split = head.loglik + tail.loglik;
        prop_assert!((whole.loglik - split).abs() <= 1e-8 * whole.loglik.abs().max(1.0), "k={k}: {} vs {split}", whole.loglik);
        Ok(())
    })
}

pub fn determinism_per_seed() -> Result<(), String> {
    let strategy = (prop::sample::select(BUILTINS.to_vec()), any::<u64>(), 0u64..8);
    run(24, strategy, |(name, seed, stream)| {
        let b = load(name);
        let (net, theta) = (&b.network, &b.theta[..]);
        let ssa = || ssa_trajectory(net, theta, &b.x0, 2.0, &mut replicate_rng(seed, stream)).unwrap();
        prop_assert_eq!(ssa(), ssa());
        let grid: Vec<f64> = (0..=20).map(|i| 0.05 * i as f64).collect();
        let em = || em_trajectory(net, theta, &b.x0, &grid, 1e-2, &mut replicate_rng(seed, stream)).unwrap();
        prop_assert_eq!(em(), em());
        let mc = || empirical_transition(net, theta, &b.x0, 0.5, 16, SimMethod::Exact, seed).unwrap();
        prop_assert_eq!(mc(), mc());
        let target = |x: &[f64]| -0.5 * x.iter().map(|v| v * v).sum::<f64>();
        let chain = || rwm_chain(target, &[0.3, -0.2], &DMatrix::identity(2, 2), 500, seed).unwrap();
        prop_assert_eq!(chain(), chain());
        Ok(())
    })
}

pub fn lna_semigroup() -> Result<(), String> {
    let cfg = IntegratorConfig::default();
    let strategy = (prop::sample::select(BUILTINS.to_vec()), 0.05f64..0.6, 0.05f64..0.6);
    run(30, strategy, |(name, a, b)| {
        let bi = load(name);
        let (net, theta) = (&bi.network, &bi.theta[..]);
        let n = net.n_species();
        let zero = DMatrix::zeros(n, n);
        let first = lna_predict(net, theta, &bi.x0, &zero, a, &cfg).unwrap();
        let two = lna_predict(net, theta, first.eta.as_slice(), &first.psi, b, &cfg).unwrap();
        let one = lna_predict(net, theta, &bi.x0, &zero, a + b, &cfg).unwrap();
        let close = |x: f64, y: f64, scale: f64| (x - y).abs() <= 1e-4 * scale + 1e-6;
        let eta_scale = one.eta.amax();
        let psi_scale = one.psi.amax();
        prop_assert!(one.eta.iter().zip(two.eta.iter()).all(|(&x, &y)| close(x, y, eta_scale)), "{name}: eta {} vs {}", one.eta, two.eta);
        prop_assert!(one.psi.iter().zip(two.psi.iter()).all(|(&x, &y)| close(x, y, psi_scale)), "{name}: psi {} vs {}", one.psi, two.psi);
        Ok(())
    })
}

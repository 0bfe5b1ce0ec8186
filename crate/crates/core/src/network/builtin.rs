//! Built-in example networks with their default parameters and initial states.

use super::{parse_network, ParameterSet, ReactionNetwork};

pub const LOTKA_VOLTERRA: &str = "\
# Lotka-Volterra predator-prey
species Pred Prey
param theta1 theta2 theta3
reaction: Pred + Prey -> 2 Pred @ theta1 * Pred * Prey
reaction: Pred -> 0 @ theta2 * Pred
reaction: Prey -> 2 Prey @ theta3 * Prey
";

pub const SIR: &str = "\
# SIR epidemic: I infected, S susceptible
species I S
param theta1 theta2
reaction: I + S -> 2 I @ theta1 * I * S
reaction: I -> 0 @ theta2 * I
";

/// `DNA.P2` is not tracked; `k` is the conserved total `DNA + DNA.P2`.
pub const AUTOREG: &str = "\
# prokaryotic autoregulatory gene network
species DNA RNA P P2
param theta1 theta2 theta3 theta4 theta5 theta6 theta7 theta8
const k = 10
reaction: DNA + P2 -> 0 @ theta1 * DNA * P2
reaction: 0 -> DNA + P2 @ theta2 * (k - DNA)
reaction: DNA -> DNA + RNA @ theta3 * DNA
reaction: RNA -> RNA + P @ theta4 * RNA
reaction: 2 P -> P2 @ 0.5 * theta5 * P * (P - 1)
reaction: P2 -> 2 P @ theta6 * P2
reaction: RNA -> 0 @ theta7 * RNA
reaction: P -> 0 @ theta8 * P
";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BuiltinError {
    #[error("unknown builtin network `{0}` (expected lotka-volterra, sir or autoreg)")]
    UnknownName(String),
    #[error("system size must be a positive finite real, got {0}")]
    BadScale(f64),
}

/// A built-in network together with its default rates and initial state.
#[derive(Debug, Clone)]
pub struct Builtin {
    pub network: ReactionNetwork,
    pub theta: ParameterSet,
    pub x0: Vec<f64>,
}

/// Looks up `lotka-volterra`, `sir` or `autoreg`; `scale` is the system
/// size and only affects `autoreg`.
pub fn builtin(name: &str, scale: f64) -> Result<Builtin, BuiltinError> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(BuiltinError::BadScale(scale));
    }
    let parse = |text: &str| parse_network(text).expect("builtin networks are valid");
    let params = |v: Vec<f64>| ParameterSet::new(v).expect("builtin parameters are valid");
    match name {
        "lotka-volterra" | "lv" => Ok(Builtin {
            network: parse(LOTKA_VOLTERRA),
            theta: params(vec![0.01, 0.6, 0.3]),
            x0: vec![40.0, 140.0],
        }),
        "sir" => Ok(Builtin {
            network: parse(SIR),
            theta: params(vec![10f64.powf(-3.06), 10f64.powf(-1.13)]),
            x0: vec![1.0, 118.0],
        }),
        "autoreg" => {
            let omega = scale;
            let network = parse(AUTOREG).with_constant("k", 10.0 * omega).expect("autoreg declares k");
            Ok(Builtin {
                network,
                theta: params(vec![0.1 / omega, 0.7, 0.35, 0.2, 0.1 / omega, 0.9, 0.3, 0.1]),
                x0: vec![5.0 * omega, 8.0 * omega, 8.0 * omega, 8.0 * omega],
            })
        }
        other => Err(BuiltinError::UnknownName(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lotka_volterra_defaults() {
        let b = builtin("lotka-volterra", 1.0).unwrap();
        assert_eq!(&*b.theta, &[0.01, 0.6, 0.3]);
        assert_eq!(b.x0, vec![40.0, 140.0]);
        assert_eq!((b.network.n_species(), b.network.n_reactions()), (2, 3));
    }

    #[test]
    fn autoreg_scaled() {
        let b = builtin("autoreg", 10.0).unwrap();
        assert!((b.theta[0] - 0.01).abs() < 1e-15 && (b.theta[4] - 0.01).abs() < 1e-15);
        assert_eq!(b.network.constant("k"), Some(100.0));
        assert_eq!(b.x0, vec![50.0, 80.0, 80.0, 80.0]);
    }

    #[test]
    fn autoreg_net_effect_matches_reference() {
        let a_t = builtin("autoreg", 1.0).unwrap().network.net_effect_matrix().transpose();
        #[rustfmt::skip]
        let want = [
            -1.0, 1.0, 0.0, 0.0,  0.0,  0.0,  0.0,  0.0,
             0.0, 0.0, 1.0, 0.0,  0.0,  0.0, -1.0,  0.0,
             0.0, 0.0, 0.0, 1.0, -2.0,  2.0,  0.0, -1.0,
            -1.0, 1.0, 0.0, 0.0,  1.0, -1.0,  0.0,  0.0,
        ];
        assert_eq!(a_t, nalgebra::DMatrix::from_row_slice(4, 8, &want));
    }

    #[test]
    fn autoreg_propensities_by_hand() {
        let b = builtin("autoreg", 1.0).unwrap();
        let h = b.network.propensities(&[5.0, 8.0, 8.0, 8.0], &b.theta).unwrap();
        // independent evaluation of the eight rate laws at k = 10
        let (x1, x2, x3, x4, k) = (5.0, 8.0, 8.0, 8.0, 10.0);
        let t = [0.1, 0.7, 0.35, 0.2, 0.1, 0.9, 0.3, 0.1];
        let want = [
            t[0] * x1 * x4,
            t[1] * (k - x1),
            t[2] * x1,
            t[3] * x2,
            0.5 * t[4] * x3 * (x3 - 1.0),
            t[5] * x4,
            t[6] * x2,
            t[7] * x3,
        ];
        for (got, w) in h.iter().zip(want) {
            assert!((got - w).abs() < 1e-12);
        }
        let frozen = [4.0, 3.5, 1.75, 1.6, 2.8, 7.2, 2.4, 0.8];
        for (got, w) in h.iter().zip(frozen) {
            assert!((got - w).abs() < 1e-12);
        }
    }

    #[test]
    fn sir_is_lv_without_third_reaction() {
        let lv = builtin("lotka-volterra", 1.0).unwrap().network;
        let sir = builtin("sir", 1.0).unwrap().network;
        assert_eq!(sir.n_reactions(), 2);
        for (a, b) in sir.reactions().iter().zip(lv.reactions()) {
            assert_eq!(a.net_effect, b.net_effect);
            assert_eq!(a.rate, b.rate);
        }
    }

    #[test]
    fn sir_extinct_infectives_have_zero_rates() {
        let b = builtin("sir", 1.0).unwrap();
        let h = b.network.propensities(&[0.0, 118.0], &b.theta).unwrap();
        assert_eq!(h.as_slice(), &[0.0, 0.0]);
        let d = b.network.drift(&[1.0, 118.0], &[0.001, 0.1]).unwrap();
        assert!((d[0] - 0.018).abs() < 1e-12 && (d[1] + 0.118).abs() < 1e-12);
    }

    #[test]
    fn unknown_name_and_bad_scale() {
        assert!(matches!(builtin("brusselator", 1.0), Err(BuiltinError::UnknownName(_))));
        assert!(matches!(builtin("autoreg", 0.0), Err(BuiltinError::BadScale(_))));
    }
}

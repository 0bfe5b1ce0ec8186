use super::{SimError, Trajectory, TrajectoryKind};
use crate::network::ReactionNetwork;
use rand::Rng;
use rand_distr::{Distribution, Exp1};

fn check_inputs(net: &ReactionNetwork, x0: &[f64], t_end: f64) -> Result<(), SimError> {
    if x0.len() != net.n_species() {
        return Err(SimError::Dimension { expected: net.n_species(), got: x0.len() });
    }
    if let Some((index, &value)) =
        x0.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0 && v.fract() == 0.0))
    {
        return Err(SimError::InvalidInitialState { index, value });
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(SimError::InvalidHorizon(t_end));
    }
    Ok(())
}

/// Runs the direct method from `(t, x)` until `t_end` or absorption,
/// calling `on_jump` after every event. Leaves `x` at the state in force at
/// `t_end`.
fn advance<R: Rng + ?Sized>(
    net: &ReactionNetwork,
    theta: &[f64],
    x: &mut [f64],
    t_end: f64,
    rng: &mut R,
    mut on_jump: impl FnMut(f64, &[f64]),
) -> Result<(), SimError> {
    let mut h = vec![0.0; net.n_reactions()];
    let mut t = 0.0;
    loop {
        net.propensities_into(x, theta, &mut h)?;
        let mut total = 0.0;
        for (reaction, &v) in h.iter().enumerate() {
            if v < 0.0 {
                return Err(SimError::NegativePropensity { reaction, value: v, t });
            }
            total += v;
        }
        if !total.is_finite() {
            return Err(SimError::PropensityOverflow { t });
        }
        if total == 0.0 {
            return Ok(());
        }
        let tau: f64 = Exp1.sample(rng);
        t += tau / total;
        if t > t_end {
            return Ok(());
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        // Fall back to the last active reaction if round-off overshoots.
        let mut chosen = h.iter().rposition(|&v| v > 0.0).expect("positive total");
        for (i, &v) in h.iter().enumerate() {
            acc += v;
            if target < acc {
                chosen = i;
                break;
            }
        }
        for (xi, &a) in x.iter_mut().zip(&net.reactions()[chosen].net_effect) {
            *xi += a as f64;
        }
        on_jump(t, x);
    }
}

/// Exact path on `[0, t_end]` by Gillespie's direct method. The trajectory
/// starts at `(0, x0)`, has one point per event, and ends with the state in
/// force at `t_end`.
pub fn ssa_trajectory<R: Rng + ?Sized>(
    net: &ReactionNetwork,
    theta: &[f64],
    x0: &[f64],
    t_end: f64,
    rng: &mut R,
) -> Result<Trajectory, SimError> {
    check_inputs(net, x0, t_end)?;
    let mut traj = Trajectory::new(TrajectoryKind::Exact, x0.len());
    traj.push(0.0, x0);
    let mut x = x0.to_vec();
    advance(net, theta, &mut x, t_end, rng, |t, s| traj.push(t, s))?;
    if *traj.times.last().expect("start point") < t_end {
        traj.push(t_end, &x);
    }
    Ok(traj)
}

/// `X(t_end)` of an exact path, without storing the path.
pub fn ssa_final_state<R: Rng + ?Sized>(
    net: &ReactionNetwork,
    theta: &[f64],
    x0: &[f64],
    t_end: f64,
    rng: &mut R,
) -> Result<Vec<f64>, SimError> {
    check_inputs(net, x0, t_end)?;
    let mut x = x0.to_vec();
    advance(net, theta, &mut x, t_end, rng, |_, _| {})?;
    Ok(x)
}

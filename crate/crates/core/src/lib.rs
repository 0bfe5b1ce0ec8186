//! Stochastic reaction networks: exact and diffusion simulation, linear noise
//! approximation (LNA) transition densities, Kalman-filter likelihoods for
//! partially and noisily observed networks, and random-walk Metropolis
//! inference on log-parameters.

// `!(a > b)` is used on purpose to reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod network;
pub mod lna;
pub mod sim;
pub mod inference;
pub mod mcmc;
pub mod io;
pub mod datasets;

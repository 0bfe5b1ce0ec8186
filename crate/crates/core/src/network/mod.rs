//! Reaction networks: species, rate parameters, named constants and
//! mass-action style reactions with arbitrary rational rate laws.
//!
//! A network with `n_s` species and `n_r` reactions is described by its
//! net-effect matrix `A` (`n_r x n_s`, row `i` is the state change caused by
//! one firing of reaction `i`) and the propensity vector `h(x, theta)`.
//! From these the module derives the drift `A'h`, the diffusion `A' diag(h) A`
//! and the drift Jacobian `A' dh/dx`.

mod builtin;
mod expr;
mod parse;

pub use builtin::{builtin, Builtin, BuiltinError};
pub use expr::{Bindings, DivisionByZero, Expr, Symbol, SymbolNames};
pub use parse::{parse_network, ParseError, ParseErrorKind};

use nalgebra::{DMatrix, DVector};
use std::fmt;
use std::ops::Deref;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero in rate of reaction {reaction}")]
    DivisionByZero { reaction: usize },
    #[error("division by zero in derivative of reaction {reaction} w.r.t. species {species}")]
    DerivativeDivisionByZero { reaction: usize, species: usize },
    #[error("non-finite rate {value} for reaction {reaction}")]
    NonFinite { reaction: usize, value: f64 },
    #[error("negative propensity {value} for reaction {reaction}: state inconsistent with model")]
    NegativePropensity { reaction: usize, value: f64 },
    #[error("{what} has length {got}, expected {expected}")]
    Dimension { what: &'static str, expected: usize, got: usize },
}

/// Rate parameters: finite, nonnegative reals in declaration order.
///
/// Zero is admitted so that individual reactions can be switched off in
/// simulation studies; inference always works with strictly positive values.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet(Vec<f64>);

impl ParameterSet {
    pub fn new(values: Vec<f64>) -> Result<Self, InvalidParameters> {
        if let Some((i, &v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(InvalidParameters { index: i, value: v });
        }
        Ok(Self(values))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ParameterSet {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("parameter {index} = {value} is not a finite nonnegative real")]
pub struct InvalidParameters {
    pub index: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    /// `(species index, multiplicity)` in declaration order.
    pub reactants: Vec<(usize, u32)>,
    pub products: Vec<(usize, u32)>,
    /// Row of the net-effect matrix: products minus reactants.
    pub net_effect: Vec<i64>,
    pub rate: Expr,
}

impl Reaction {
    pub fn is_degenerate(&self) -> bool {
        self.net_effect.iter().all(|&a| a == 0)
    }
}

/// Nonzero entry of the propensity Jacobian `dh_i/dx_j`.
#[derive(Debug, Clone, PartialEq)]
struct JacobianTerm {
    reaction: usize,
    species: usize,
    expr: Expr,
}

#[derive(Debug, Clone)]
pub struct ReactionNetwork {
    species: Vec<String>,
    params: Vec<String>,
    const_names: Vec<String>,
    const_values: Vec<f64>,
    reactions: Vec<Reaction>,
    jacobian: Vec<JacobianTerm>,
}

impl PartialEq for ReactionNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.species == other.species
            && self.params == other.params
            && self.const_names == other.const_names
            && self.const_values == other.const_values
            && self.reactions == other.reactions
    }
}

impl ReactionNetwork {
    /// Assembles a network from already-validated parts.
    fn from_parts(
        species: Vec<String>,
        params: Vec<String>,
        consts: Vec<(String, f64)>,
        reactions: Vec<Reaction>,
    ) -> Self {
        let (const_names, const_values) = consts.into_iter().unzip();
        let n_s = species.len();
        let jacobian = reactions
            .iter()
            .enumerate()
            .flat_map(|(i, r)| {
                (0..n_s).filter_map(move |j| {
                    let d = r.rate.derivative(j);
                    (d != Expr::Num(0.0)).then_some(JacobianTerm { reaction: i, species: j, expr: d })
                })
            })
            .collect();
        for (i, r) in reactions.iter().enumerate() {
            if r.is_degenerate() {
                log::warn!("reaction {} has zero net effect", i + 1);
            }
        }
        Self { species, params, const_names, const_values, reactions, jacobian }
    }

    pub fn n_species(&self) -> usize {
        self.species.len()
    }

    pub fn n_reactions(&self) -> usize {
        self.reactions.len()
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn species(&self) -> &[String] {
        &self.species
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn constants(&self) -> impl Iterator<Item = (&str, f64)> {
        self.const_names.iter().map(String::as_str).zip(self.const_values.iter().copied())
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.const_names.iter().position(|n| n == name).map(|i| self.const_values[i])
    }

    /// Returns a copy with constant `name` set to `value`.
    pub fn with_constant(&self, name: &str, value: f64) -> Option<Self> {
        let i = self.const_names.iter().position(|n| n == name)?;
        let mut out = self.clone();
        out.const_values[i] = value;
        Some(out)
    }

    /// Indices of reactions whose net effect is identically zero.
    pub fn degenerate_reactions(&self) -> Vec<usize> {
        self.reactions.iter().enumerate().filter(|(_, r)| r.is_degenerate()).map(|(i, _)| i).collect()
    }

    /// The `n_r x n_s` net-effect matrix `A`.
    pub fn net_effect_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_reactions(), self.n_species(), |i, j| self.reactions[i].net_effect[j] as f64)
    }

    pub fn symbol_names(&self) -> SymbolNames<'_> {
        SymbolNames { species: &self.species, params: &self.params, consts: &self.const_names }
    }

    fn check_dims(&self, x: &[f64], theta: &[f64]) -> Result<(), EvalError> {
        if x.len() != self.n_species() {
            return Err(EvalError::Dimension { what: "state", expected: self.n_species(), got: x.len() });
        }
        if theta.len() != self.n_params() {
            return Err(EvalError::Dimension { what: "parameter vector", expected: self.n_params(), got: theta.len() });
        }
        Ok(())
    }

    fn bindings<'a>(&'a self, x: &'a [f64], theta: &'a [f64]) -> Bindings<'a> {
        Bindings { species: x, params: theta, consts: &self.const_values }
    }

    /// Writes `h(x, theta)` into `out` (length `n_r`). No sign check.
    pub fn propensities_into(&self, x: &[f64], theta: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        self.check_dims(x, theta)?;
        let b = self.bindings(x, theta);
        for (i, (r, o)) in self.reactions.iter().zip(out.iter_mut()).enumerate() {
            let v = r.rate.eval(&b).map_err(|_| EvalError::DivisionByZero { reaction: i })?;
            if !v.is_finite() {
                return Err(EvalError::NonFinite { reaction: i, value: v });
            }
            *o = v;
        }
        Ok(())
    }

    pub fn propensities(&self, x: &[f64], theta: &[f64]) -> Result<DVector<f64>, EvalError> {
        let mut h = DVector::zeros(self.n_reactions());
        self.propensities_into(x, theta, h.as_mut_slice())?;
        Ok(h)
    }

    /// `out = A' h` for precomputed propensities `h`.
    pub fn drift_from_rates(&self, h: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (r, &hi) in self.reactions.iter().zip(h) {
            for (o, &a) in out.iter_mut().zip(&r.net_effect) {
                if a != 0 {
                    *o += a as f64 * hi;
                }
            }
        }
    }

    /// `out = A' diag(h) A` (row-major `n_s x n_s`) for precomputed `h`.
    pub fn diffusion_from_rates(&self, h: &[f64], out: &mut [f64]) {
        let n = self.n_species();
        out.fill(0.0);
        for (r, &hi) in self.reactions.iter().zip(h) {
            for (a, &ra) in r.net_effect.iter().enumerate() {
                if ra == 0 {
                    continue;
                }
                for (b, &rb) in r.net_effect.iter().enumerate() {
                    if rb != 0 {
                        out[a * n + b] += hi * (ra * rb) as f64;
                    }
                }
            }
        }
    }

    /// Writes `dh_i/dx_j` (row-major `n_r x n_s`) into `out`.
    pub fn rate_jacobian_into(&self, x: &[f64], theta: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        self.check_dims(x, theta)?;
        let b = self.bindings(x, theta);
        let n = self.n_species();
        out.fill(0.0);
        for t in &self.jacobian {
            out[t.reaction * n + t.species] = t
                .expr
                .eval(&b)
                .map_err(|_| EvalError::DerivativeDivisionByZero { reaction: t.reaction, species: t.species })?;
        }
        Ok(())
    }

    /// `out = A' (dh/dx)` (row-major `n_s x n_s`) given the rate Jacobian.
    pub fn drift_jacobian_from_rate_jacobian(&self, dh: &[f64], out: &mut [f64]) {
        let n = self.n_species();
        out.fill(0.0);
        for (i, r) in self.reactions.iter().enumerate() {
            let row = &dh[i * n..(i + 1) * n];
            for (a, &ra) in r.net_effect.iter().enumerate() {
                if ra == 0 {
                    continue;
                }
                for (b, &d) in row.iter().enumerate() {
                    out[a * n + b] += ra as f64 * d;
                }
            }
        }
    }

    /// Infinitesimal mean rate of change `A' h(x, theta)`.
    pub fn drift(&self, x: &[f64], theta: &[f64]) -> Result<DVector<f64>, EvalError> {
        let h = self.propensities(x, theta)?;
        let mut out = DVector::zeros(self.n_species());
        self.drift_from_rates(h.as_slice(), out.as_mut_slice());
        Ok(out)
    }

    /// Infinitesimal covariance `A' diag(h) A`; fails on a negative propensity.
    pub fn diffusion_matrix(&self, x: &[f64], theta: &[f64]) -> Result<DMatrix<f64>, EvalError> {
        let h = self.propensities(x, theta)?;
        if let Some((i, &v)) = h.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(EvalError::NegativePropensity { reaction: i, value: v });
        }
        let n = self.n_species();
        let mut buf = vec![0.0; n * n];
        self.diffusion_from_rates(h.as_slice(), &mut buf);
        Ok(DMatrix::from_row_slice(n, n, &buf))
    }

    /// Drift Jacobian `F_ab = d(A'h)_a / dx_b`, from symbolic derivatives.
    pub fn drift_jacobian(&self, x: &[f64], theta: &[f64]) -> Result<DMatrix<f64>, EvalError> {
        let n = self.n_species();
        let mut dh = vec![0.0; self.n_reactions() * n];
        self.rate_jacobian_into(x, theta, &mut dh)?;
        let mut out = vec![0.0; n * n];
        self.drift_jacobian_from_rate_jacobian(&dh, &mut out);
        Ok(DMatrix::from_row_slice(n, n, &out))
    }

    /// Serializes to the network DSL; `parse_network` reads it back unchanged.
    pub fn to_dsl(&self) -> String {
        self.to_string()
    }
}

fn write_side(f: &mut fmt::Formatter<'_>, side: &[(usize, u32)], names: &[String]) -> fmt::Result {
    if side.is_empty() {
        return f.write_str("0");
    }
    for (k, &(s, m)) in side.iter().enumerate() {
        if k > 0 {
            f.write_str(" + ")?;
        }
        if m != 1 {
            write!(f, "{m} ")?;
        }
        f.write_str(&names[s])?;
    }
    Ok(())
}

impl fmt::Display for ReactionNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "species {}", self.species.join(" "))?;
        if self.params.is_empty() {
            writeln!(f, "param")?;
        } else {
            writeln!(f, "param {}", self.params.join(" "))?;
        }
        for (name, value) in self.constants() {
            writeln!(f, "const {name} = {value}")?;
        }
        let names = self.symbol_names();
        for r in &self.reactions {
            f.write_str("reaction: ")?;
            write_side(f, &r.reactants, &self.species)?;
            f.write_str(" -> ")?;
            write_side(f, &r.products, &self.species)?;
            writeln!(f, " @ {}", r.rate.display(&names))?;
        }
        Ok(())
    }
}

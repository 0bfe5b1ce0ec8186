//! Rate expressions: a small rational-expression tree over species counts,
//! rate parameters, named constants and numeric literals.

use std::fmt;

/// A resolved identifier inside a rate expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    Species(usize),
    Param(usize),
    Const(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Sym(Symbol),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
}

/// Values bound to the symbols of an expression during evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Bindings<'a> {
    pub species: &'a [f64],
    pub params: &'a [f64],
    pub consts: &'a [f64],
}

/// Raised when a denominator evaluates to exactly zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DivisionByZero;

impl Expr {
    pub fn eval(&self, b: &Bindings<'_>) -> Result<f64, DivisionByZero> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Sym(Symbol::Species(i)) => b.species[*i],
            Expr::Sym(Symbol::Param(i)) => b.params[*i],
            Expr::Sym(Symbol::Const(i)) => b.consts[*i],
            Expr::Neg(e) => -e.eval(b)?,
            Expr::Add(l, r) => l.eval(b)? + r.eval(b)?,
            Expr::Sub(l, r) => l.eval(b)? - r.eval(b)?,
            Expr::Mul(l, r) => l.eval(b)? * r.eval(b)?,
            Expr::Div(l, r) => {
                let den = r.eval(b)?;
                if den == 0.0 {
                    return Err(DivisionByZero);
                }
                l.eval(b)? / den
            }
        })
    }

    /// True if the expression mentions species `j`.
    pub fn depends_on_species(&self, j: usize) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Sym(s) => *s == Symbol::Species(j),
            Expr::Neg(e) => e.depends_on_species(j),
            Expr::Add(l, r) | Expr::Sub(l, r) | Expr::Mul(l, r) | Expr::Div(l, r) => {
                l.depends_on_species(j) || r.depends_on_species(j)
            }
        }
    }

    /// Symbolic partial derivative with respect to species `j`, lightly simplified.
    pub fn derivative(&self, j: usize) -> Expr {
        if !self.depends_on_species(j) {
            return Expr::Num(0.0);
        }
        match self {
            Expr::Num(_) => Expr::Num(0.0),
            Expr::Sym(s) => Expr::Num(if *s == Symbol::Species(j) { 1.0 } else { 0.0 }),
            Expr::Neg(e) => neg(e.derivative(j)),
            Expr::Add(l, r) => add(l.derivative(j), r.derivative(j)),
            Expr::Sub(l, r) => sub(l.derivative(j), r.derivative(j)),
            Expr::Mul(l, r) => add(
                mul(l.derivative(j), (**r).clone()),
                mul((**l).clone(), r.derivative(j)),
            ),
            // (u/v)' = u'/v - u v' / v^2
            Expr::Div(u, v) => {
                let du = u.derivative(j);
                let dv = v.derivative(j);
                sub(
                    div(du, (**v).clone()),
                    div(mul((**u).clone(), dv), mul((**v).clone(), (**v).clone())),
                )
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Num(v) if *v < 0.0 || v.is_sign_negative() => 3,
            Expr::Num(_) | Expr::Sym(_) => 4,
        }
    }

    /// Renders the expression with the given symbol names. The output parses
    /// back to a structurally identical tree.
    pub fn display<'a>(&'a self, names: &'a SymbolNames<'a>) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, names }
    }
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Num(v) if *v == 0.0)
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Num(v) if *v == 1.0)
}

fn neg(e: Expr) -> Expr {
    match e {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn add(l: Expr, r: Expr) -> Expr {
    match (&l, &r) {
        (Expr::Num(a), Expr::Num(b)) => Expr::Num(a + b),
        _ if is_zero(&l) => r,
        _ if is_zero(&r) => l,
        _ => Expr::Add(Box::new(l), Box::new(r)),
    }
}

fn sub(l: Expr, r: Expr) -> Expr {
    match (&l, &r) {
        (Expr::Num(a), Expr::Num(b)) => Expr::Num(a - b),
        _ if is_zero(&r) => l,
        _ if is_zero(&l) => neg(r),
        _ => Expr::Sub(Box::new(l), Box::new(r)),
    }
}

fn mul(l: Expr, r: Expr) -> Expr {
    match (&l, &r) {
        (Expr::Num(a), Expr::Num(b)) => Expr::Num(a * b),
        _ if is_zero(&l) || is_zero(&r) => Expr::Num(0.0),
        _ if is_one(&l) => r,
        _ if is_one(&r) => l,
        _ => Expr::Mul(Box::new(l), Box::new(r)),
    }
}

fn div(l: Expr, r: Expr) -> Expr {
    // Quotient-rule terms always keep a copy of the denominator elsewhere.
    if is_zero(&l) {
        return Expr::Num(0.0);
    }
    if is_one(&r) {
        return l;
    }
    Expr::Div(Box::new(l), Box::new(r))
}

/// Names used when rendering symbols.
#[derive(Debug, Clone, Copy)]
pub struct SymbolNames<'a> {
    pub species: &'a [String],
    pub params: &'a [String],
    pub consts: &'a [String],
}

pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    names: &'a SymbolNames<'a>,
}

impl ExprDisplay<'_> {
    fn write(&self, e: &Expr, min_prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let paren = e.precedence() < min_prec;
        if paren {
            f.write_str("(")?;
        }
        match e {
            Expr::Num(v) => write!(f, "{v}")?,
            Expr::Sym(Symbol::Species(i)) => f.write_str(&self.names.species[*i])?,
            Expr::Sym(Symbol::Param(i)) => f.write_str(&self.names.params[*i])?,
            Expr::Sym(Symbol::Const(i)) => f.write_str(&self.names.consts[*i])?,
            Expr::Neg(inner) => {
                f.write_str("-")?;
                self.write(inner, 3, f)?;
            }
            Expr::Add(l, r) | Expr::Sub(l, r) | Expr::Mul(l, r) | Expr::Div(l, r) => {
                let (op, prec) = match e {
                    Expr::Add(..) => (" + ", 1),
                    Expr::Sub(..) => (" - ", 1),
                    Expr::Mul(..) => (" * ", 2),
                    _ => (" / ", 2),
                };
                self.write(l, prec, f)?;
                f.write_str(op)?;
                // Right operands bind one level tighter: the grammar is left-associative.
                self.write(r, prec + 1, f)?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(self.expr, 0, f)
    }
}

//! Symbolic expressions over real scalars.
//!
//! Every formula the engine manipulates (Lagrangians, momenta, constraint
//! Hamiltonians, brackets) is an [`Expr`]. Expressions built through the
//! public constructors, arithmetic operators, [`parse`] or
//! [`Expr::simplify`] are kept in a canonical form:
//!
//! * sums and products are flattened and sorted,
//! * like terms and like factors are collected,
//! * products are distributed over sums and small integer powers of sums are
//!   expanded,
//! * numeric sub-expressions are folded.
//!
//! Named functions (`V(q)`, `A0(q0, q1, q2, q3)`) are opaque; differentiating
//! them yields formal derivative nodes. Concrete definitions live in a
//! [`FunctionTable`] and are substituted only when a number is needed.

mod diff;
mod eval;
mod functions;
mod order;
mod parse;
mod print;
mod simplify;
mod zero;

#[cfg(test)]
mod tests;

use std::collections::BTreeSet;

use thiserror::Error;

pub use eval::{evaluate, evaluate_with, Bindings, Compiled};
pub use functions::{FunctionDef, FunctionTable};
pub use parse::{parse, parse_with};
pub use zero::{is_zero, ProbeConfig, Sampler, SurfaceRule, ZeroVerdict};

/// Built-in natural logarithm; only produced by differentiating `a^b` in `b`.
pub const LN: &str = "ln";

/// Built-in function names that can never be user-declared.
pub const RESERVED: [&str; 2] = ["sqrt", LN];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("unbound symbol `{0}`")]
    UnboundSymbol(String),
    #[error("function `{0}` has no definition")]
    UndefinedFunction(String),
    #[error("function `{name}` expects {expected} argument(s), got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("square root of negative value {0}")]
    NegativeSqrt(f64),
    #[error("domain error: {0}")]
    Domain(String),
}

/// Expression tree node.
///
/// `Neg` only appears in raw parser output; canonical expressions encode
/// negation as a `-1` coefficient.
#[derive(Clone, Debug)]
pub enum Expr {
    Const(f64),
    Sym(String),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Sqrt(Box<Expr>),
    /// Named function applied to its arguments.
    Apply {
        name: String,
        args: Vec<Expr>,
    },
    /// Partial derivative of a named function; `wrt` holds the (sorted)
    /// argument positions differentiated, with multiplicity.
    Deriv {
        name: String,
        wrt: Vec<usize>,
        args: Vec<Expr>,
    },
}

impl Expr {
    pub fn num(value: f64) -> Expr {
        Expr::Const(simplify::normalize(value))
    }

    pub fn zero() -> Expr {
        Expr::Const(0.0)
    }

    pub fn one() -> Expr {
        Expr::Const(1.0)
    }

    pub fn sym(name: impl Into<String>) -> Expr {
        Expr::Sym(name.into())
    }

    pub fn sum(terms: Vec<Expr>) -> Expr {
        simplify::Canon::plain().sum(terms)
    }

    pub fn product(factors: Vec<Expr>) -> Expr {
        simplify::Canon::plain().product(factors)
    }

    pub fn pow(base: Expr, exponent: Expr) -> Expr {
        simplify::Canon::plain().pow(base, exponent)
    }

    pub fn powi(self, k: i32) -> Expr {
        Expr::pow(self, Expr::num(f64::from(k)))
    }

    pub fn sqrt(self) -> Expr {
        simplify::Canon::plain().sqrt(self)
    }

    pub fn apply(name: impl Into<String>, args: Vec<Expr>) -> Expr {
        Expr::Apply {
            name: name.into(),
            args,
        }
    }

    pub fn recip(self) -> Expr {
        self.powi(-1)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// True when the expression is the literal constant `0`.
    pub fn is_zero_literal(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    /// Canonical form with no positivity assumptions.
    pub fn simplify(&self) -> Expr {
        simplify::Canon::plain().simplify(self)
    }

    /// Canonical form where `sqrt(x^2)` collapses to `x` for symbols in
    /// `positive`.
    pub fn simplify_with(&self, positive: &BTreeSet<String>) -> Expr {
        simplify::Canon::new(positive).simplify(self)
    }

    /// Free symbols, excluding function names.
    pub fn symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Sym(s) = e {
                out.insert(s.clone());
            }
        });
        out
    }

    /// Names of applied (or differentiated) named functions, with arity.
    pub fn functions(&self) -> std::collections::BTreeMap<String, usize> {
        let mut out = std::collections::BTreeMap::new();
        self.visit(&mut |e| match e {
            Expr::Apply { name, args } | Expr::Deriv { name, args, .. } if name != LN => {
                out.insert(name.clone(), args.len());
            }
            _ => {}
        });
        out
    }

    /// Symbols that occur somewhere inside a square-root argument.
    pub fn symbols_under_sqrt(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Sqrt(inner) = e {
                out.extend(inner.symbols());
            }
        });
        out
    }

    pub fn contains_symbol(&self, name: &str) -> bool {
        let mut found = false;
        self.visit(&mut |e| {
            if matches!(e, Expr::Sym(s) if s == name) {
                found = true;
            }
        });
        found
    }

    /// Pre-order traversal.
    pub fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Const(_) | Expr::Sym(_) => {}
            Expr::Sum(xs) | Expr::Product(xs) => xs.iter().for_each(|x| x.visit(f)),
            Expr::Pow(b, e) => {
                b.visit(f);
                e.visit(f);
            }
            Expr::Neg(x) | Expr::Sqrt(x) => x.visit(f),
            Expr::Apply { args, .. } | Expr::Deriv { args, .. } => {
                args.iter().for_each(|x| x.visit(f))
            }
        }
    }

    /// Bottom-up rebuild through the canonical constructors. `replace` is
    /// consulted first at every node; returning `Some` short-circuits the
    /// descent into that node.
    pub fn rebuild(&self, replace: &mut impl FnMut(&Expr) -> Option<Expr>) -> Expr {
        if let Some(r) = replace(self) {
            return r;
        }
        let canon = simplify::Canon::plain();
        match self {
            Expr::Const(c) => Expr::num(*c),
            Expr::Sym(_) => self.clone(),
            Expr::Sum(xs) => canon.sum(xs.iter().map(|x| x.rebuild(replace)).collect()),
            Expr::Product(xs) => canon.product(xs.iter().map(|x| x.rebuild(replace)).collect()),
            Expr::Pow(b, e) => canon.pow(b.rebuild(replace), e.rebuild(replace)),
            Expr::Neg(x) => canon.product(vec![Expr::num(-1.0), x.rebuild(replace)]),
            Expr::Sqrt(x) => canon.sqrt(x.rebuild(replace)),
            Expr::Apply { name, args } => Expr::Apply {
                name: name.clone(),
                args: args.iter().map(|x| x.rebuild(replace)).collect(),
            },
            Expr::Deriv { name, wrt, args } => Expr::Deriv {
                name: name.clone(),
                wrt: wrt.clone(),
                args: args.iter().map(|x| x.rebuild(replace)).collect(),
            },
        }
    }

    /// Simultaneous replacement of symbols by expressions.
    pub fn substitute(&self, map: &std::collections::BTreeMap<String, Expr>) -> Expr {
        if map.is_empty() {
            return self.simplify();
        }
        self.rebuild(&mut |e| match e {
            Expr::Sym(s) => map.get(s).cloned(),
            _ => None,
        })
    }

    pub fn substitute_one(&self, name: &str, value: &Expr) -> Expr {
        let mut map = std::collections::BTreeMap::new();
        map.insert(name.to_string(), value.clone());
        self.substitute(&map)
    }

    /// Number of nodes; used to keep probe work bounded and in tests.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }
}

impl From<f64> for Expr {
    fn from(value: f64) -> Self {
        Expr::num(value)
    }
}

impl From<&str> for Expr {
    fn from(value: &str) -> Self {
        Expr::sym(value)
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::sum(vec![self, rhs])
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::sum(vec![self, -rhs])
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::product(vec![self, rhs])
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::product(vec![self, rhs.recip()])
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::product(vec![Expr::num(-1.0), self])
    }
}

impl std::ops::Mul<Expr> for f64 {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::product(vec![Expr::num(self), rhs])
    }
}

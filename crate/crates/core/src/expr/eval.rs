use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Expr, ExprError, FunctionTable, LN};

/// Symbol values for evaluation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Bindings(BTreeMap<String, f64>);

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) -> &mut Self {
        self.0.insert(name.into(), value);
        self
    }

    pub fn with(mut self, name: impl Into<String>, value: f64) -> Self {
        self.set(name, value);
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &f64)> {
        self.0.iter()
    }

    pub fn extend(&mut self, other: &Bindings) {
        self.0.extend(other.0.iter().map(|(k, v)| (k.clone(), *v)));
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<(S, f64)> for Bindings {
    fn from_iter<I: IntoIterator<Item = (S, f64)>>(iter: I) -> Self {
        Bindings(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

fn checked_pow(b: f64, k: f64) -> Result<f64, ExprError> {
    let v = if k.fract() == 0.0 && k.abs() < 1e9 {
        b.powi(k as i32)
    } else if b >= 0.0 {
        b.powf(k)
    } else {
        return Err(ExprError::Domain(format!(
            "negative base {b} raised to non-integer power {k}"
        )));
    };
    if v.is_nan() {
        return Err(ExprError::Domain(format!("{b}^{k} is undefined")));
    }
    Ok(v)
}

fn checked_sqrt(x: f64) -> Result<f64, ExprError> {
    if x < 0.0 {
        Err(ExprError::NegativeSqrt(x))
    } else {
        Ok(x.sqrt())
    }
}

fn checked_ln(x: f64) -> Result<f64, ExprError> {
    if x <= 0.0 {
        Err(ExprError::Domain(format!("ln of non-positive value {x}")))
    } else {
        Ok(x.ln())
    }
}

/// Evaluates `e` in double precision.
///
/// Every free symbol must be bound, and named functions must already have
/// been replaced by their definitions (see [`super::FunctionTable::inline`]).
pub fn evaluate(e: &Expr, b: &Bindings) -> Result<f64, ExprError> {
    match e {
        Expr::Const(c) => Ok(*c),
        Expr::Sym(s) => b.get(s).ok_or_else(|| ExprError::UnboundSymbol(s.clone())),
        Expr::Sum(ts) => ts.iter().try_fold(0.0, |acc, t| Ok(acc + evaluate(t, b)?)),
        Expr::Product(fs) => fs.iter().try_fold(1.0, |acc, f| Ok(acc * evaluate(f, b)?)),
        Expr::Pow(base, k) => checked_pow(evaluate(base, b)?, evaluate(k, b)?),
        Expr::Neg(x) => Ok(-evaluate(x, b)?),
        Expr::Sqrt(x) => checked_sqrt(evaluate(x, b)?),
        Expr::Apply { name, args } if name == LN && args.len() == 1 => {
            checked_ln(evaluate(&args[0], b)?)
        }
        Expr::Apply { name, .. } | Expr::Deriv { name, .. } => {
            Err(ExprError::UndefinedFunction(name.clone()))
        }
    }
}

/// Like [`evaluate`], but applications of functions defined in `table` are
/// evaluated through their definitions without expanding `e`.
pub fn evaluate_with(e: &Expr, b: &Bindings, table: &FunctionTable) -> Result<f64, ExprError> {
    let go = |x: &Expr| evaluate_with(x, b, table);
    match e {
        Expr::Const(c) => Ok(*c),
        Expr::Sym(s) => b.get(s).ok_or_else(|| ExprError::UnboundSymbol(s.clone())),
        Expr::Sum(ts) => ts.iter().try_fold(0.0, |acc, t| Ok(acc + go(t)?)),
        Expr::Product(fs) => fs.iter().try_fold(1.0, |acc, f| Ok(acc * go(f)?)),
        Expr::Pow(base, k) => checked_pow(go(base)?, go(k)?),
        Expr::Neg(x) => Ok(-go(x)?),
        Expr::Sqrt(x) => checked_sqrt(go(x)?),
        Expr::Apply { name, args } if name == LN && args.len() == 1 => checked_ln(go(&args[0])?),
        Expr::Apply { name, args } => call(name, &[], args, b, table),
        Expr::Deriv { name, wrt, args } => call(name, wrt, args, b, table),
    }
}

fn call(
    name: &str,
    wrt: &[usize],
    args: &[Expr],
    b: &Bindings,
    table: &FunctionTable,
) -> Result<f64, ExprError> {
    let def = table
        .get(name)
        .ok_or_else(|| ExprError::UndefinedFunction(name.to_string()))?;
    if def.params.len() != args.len() {
        return Err(ExprError::Arity {
            name: name.to_string(),
            expected: def.params.len(),
            got: args.len(),
        });
    }
    let mut inner = Bindings::new();
    for (p, a) in def.params.iter().zip(args) {
        inner.set(p.clone(), evaluate_with(a, b, table)?);
    }
    if wrt.is_empty() {
        evaluate_with(&def.body, &inner, table)
    } else {
        let body = wrt.iter().fold(def.body.clone(), |acc, &i| {
            acc.differentiate(&def.params[i])
        });
        evaluate_with(&body, &inner, table)
    }
}

#[derive(Clone, Debug)]
enum Node {
    Const(f64),
    Slot(usize),
    Sum(Vec<Node>),
    Product(Vec<Node>),
    PowI(Box<Node>, i32),
    Pow(Box<Node>, Box<Node>),
    Sqrt(Box<Node>),
    Ln(Box<Node>),
}

/// An expression with symbols resolved to positions of a value slice, for
/// the inner loops of integrators.
#[derive(Clone, Debug)]
pub struct Compiled {
    root: Node,
}

impl Compiled {
    pub fn new(e: &Expr, slots: &[String]) -> Result<Compiled, ExprError> {
        let index: BTreeMap<&str, usize> = slots
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        Ok(Compiled {
            root: lower(e, &index)?,
        })
    }

    pub fn eval(&self, values: &[f64]) -> Result<f64, ExprError> {
        run(&self.root, values)
    }
}

fn lower(e: &Expr, index: &BTreeMap<&str, usize>) -> Result<Node, ExprError> {
    Ok(match e {
        Expr::Const(c) => Node::Const(*c),
        Expr::Sym(s) => Node::Slot(
            *index
                .get(s.as_str())
                .ok_or_else(|| ExprError::UnboundSymbol(s.clone()))?,
        ),
        Expr::Sum(ts) => Node::Sum(
            ts.iter()
                .map(|t| lower(t, index))
                .collect::<Result<_, _>>()?,
        ),
        Expr::Product(fs) => Node::Product(
            fs.iter()
                .map(|f| lower(f, index))
                .collect::<Result<_, _>>()?,
        ),
        Expr::Pow(b, k) => match **k {
            Expr::Const(k) if k.fract() == 0.0 && k.abs() < 1e9 => {
                Node::PowI(Box::new(lower(b, index)?), k as i32)
            }
            _ => Node::Pow(Box::new(lower(b, index)?), Box::new(lower(k, index)?)),
        },
        Expr::Neg(x) => Node::Product(vec![Node::Const(-1.0), lower(x, index)?]),
        Expr::Sqrt(x) => Node::Sqrt(Box::new(lower(x, index)?)),
        Expr::Apply { name, args } if name == LN && args.len() == 1 => {
            Node::Ln(Box::new(lower(&args[0], index)?))
        }
        Expr::Apply { name, .. } | Expr::Deriv { name, .. } => {
            return Err(ExprError::UndefinedFunction(name.clone()))
        }
    })
}

fn run(n: &Node, v: &[f64]) -> Result<f64, ExprError> {
    match n {
        Node::Const(c) => Ok(*c),
        Node::Slot(i) => Ok(v[*i]),
        Node::Sum(ts) => ts.iter().try_fold(0.0, |acc, t| Ok(acc + run(t, v)?)),
        Node::Product(fs) => fs.iter().try_fold(1.0, |acc, f| Ok(acc * run(f, v)?)),
        Node::PowI(b, k) => Ok(run(b, v)?.powi(*k)),
        Node::Pow(b, k) => checked_pow(run(b, v)?, run(k, v)?),
        Node::Sqrt(x) => checked_sqrt(run(x, v)?),
        Node::Ln(x) => checked_ln(run(x, v)?),
    }
}

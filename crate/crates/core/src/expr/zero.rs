//! Deciding whether an expression vanishes identically.
//!
//! The simplifier settles most identities outright. When it cannot, the
//! expression is probed at random points: symbols are drawn uniformly
//! (`[-1, 1]`, `[0.1, 2]` under a square root, `[0.5, 2]` when declared
//! positive), opaque functions are replaced by random cubic polynomials, and
//! points where the expression is undefined are redrawn.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{evaluate_with, Bindings, Expr, FunctionDef, FunctionTable};

pub const DEFAULT_SEED: u64 = 0x5EED_CAFE;

const DEFAULT_RANGE: (f64, f64) = (-1.0, 1.0);
const SQRT_RANGE: (f64, f64) = (0.1, 2.0);
const POSITIVE_RANGE: (f64, f64) = (0.5, 2.0);
const ROUNDS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ZeroVerdict {
    SymbolicallyZero,
    NumericallyZero { probes: usize, max_residual: f64 },
    Nonzero { witness: Bindings, residual: f64 },
}

impl ZeroVerdict {
    pub fn is_zero(&self) -> bool {
        !matches!(self, ZeroVerdict::Nonzero { .. })
    }

    pub fn is_symbolic(&self) -> bool {
        matches!(self, ZeroVerdict::SymbolicallyZero)
    }

    pub fn label(&self) -> &'static str {
        match self {
            ZeroVerdict::SymbolicallyZero => "symbolically-zero",
            ZeroVerdict::NumericallyZero { .. } => "numerically-zero",
            ZeroVerdict::Nonzero { .. } => "nonzero",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeConfig {
    pub probes: usize,
    /// Absolute residual below which a probe counts as zero.
    pub tol: f64,
    pub seed: u64,
    /// Draws allowed per probe before giving up on finding a point where
    /// the expression is defined.
    pub max_attempts: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            probes: 20,
            tol: 1e-9,
            seed: DEFAULT_SEED,
            max_attempts: 4000,
        }
    }
}

/// Projection of a sampled point onto a constraint surface, applied in order
/// after the free symbols are drawn.
#[derive(Clone, Debug)]
pub enum SurfaceRule {
    /// `symbol := value`, e.g. `p_t := -H_t`.
    Assign { symbol: String, value: Expr },
    /// `constraint = 0` solved for `symbol`, on which it depends linearly
    /// with constant `slope`.
    Linear {
        symbol: String,
        constraint: Expr,
        slope: f64,
    },
}

impl SurfaceRule {
    fn exprs(&self) -> &Expr {
        match self {
            SurfaceRule::Assign { value, .. } => value,
            SurfaceRule::Linear { constraint, .. } => constraint,
        }
    }

    fn apply(&self, b: &mut Bindings, table: &FunctionTable) -> Option<()> {
        match self {
            SurfaceRule::Assign { symbol, value } => {
                let v = evaluate_with(value, b, table).ok()?;
                b.set(symbol.clone(), v);
            }
            SurfaceRule::Linear {
                symbol,
                constraint,
                slope,
            } => {
                let r = evaluate_with(constraint, b, table).ok()?;
                let current = b.get(symbol)?;
                b.set(symbol.clone(), current - r / slope);
            }
        }
        Some(())
    }
}

/// Seeded source of probe points.
#[derive(Clone, Debug)]
pub struct Sampler {
    rng: ChaCha8Rng,
    config: ProbeConfig,
    positive: BTreeSet<String>,
    fixed: Bindings,
    ranges: BTreeMap<String, (f64, f64)>,
    surface: Vec<SurfaceRule>,
}

impl Sampler {
    pub fn new(config: ProbeConfig) -> Self {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            positive: BTreeSet::new(),
            fixed: Bindings::new(),
            ranges: BTreeMap::new(),
            surface: Vec::new(),
        }
    }

    pub fn with_positive<I, S>(mut self, symbols: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.positive.extend(symbols.into_iter().map(Into::into));
        self
    }

    /// Symbols held at fixed values (physical constants).
    pub fn with_fixed(mut self, fixed: &Bindings) -> Self {
        self.fixed.extend(fixed);
        self
    }

    pub fn with_range(mut self, symbol: impl Into<String>, lo: f64, hi: f64) -> Self {
        self.ranges.insert(symbol.into(), (lo, hi));
        self
    }

    pub fn with_surface(mut self, rules: Vec<SurfaceRule>) -> Self {
        self.surface = rules;
        self
    }

    pub fn positive(&self) -> &BTreeSet<String> {
        &self.positive
    }

    pub fn config(&self) -> &ProbeConfig {
        &self.config
    }

    fn range_for(&self, symbol: &str, under_sqrt: &BTreeSet<String>) -> (f64, f64) {
        if let Some(r) = self.ranges.get(symbol) {
            *r
        } else if self.positive.contains(symbol) {
            POSITIVE_RANGE
        } else if under_sqrt.contains(symbol) {
            SQRT_RANGE
        } else {
            DEFAULT_RANGE
        }
    }

    fn coefficient(&mut self) -> f64 {
        self.rng.gen_range(-1.0..1.0)
    }

    /// Random cubic polynomial for every opaque function in `signature`.
    fn random_functions(&mut self, signature: &BTreeMap<String, usize>) -> FunctionTable {
        let mut table = FunctionTable::new();
        for (name, &arity) in signature {
            let params: Vec<String> = (0..arity).map(|i| format!("__arg{i}")).collect();
            let xs: Vec<Expr> = params.iter().map(Expr::sym).collect();
            let mut terms = vec![Expr::num(self.coefficient())];
            for i in 0..arity {
                terms.push(self.coefficient() * xs[i].clone());
                terms.push(self.coefficient() * xs[i].clone().powi(3));
                for j in i..arity {
                    terms.push(self.coefficient() * (xs[i].clone() * xs[j].clone()));
                }
            }
            table.define(
                name.clone(),
                FunctionDef {
                    params,
                    body: Expr::sum(terms),
                },
            );
        }
        table
    }

    /// Evaluates all of `exprs` at one random admissible point. Returns
    /// `None` when no admissible point turns up within the attempt budget.
    pub fn probe_many(&mut self, exprs: &[Expr]) -> Option<(Bindings, Vec<f64>)> {
        let mut signature = BTreeMap::new();
        let mut symbols = BTreeSet::new();
        let mut under_sqrt = BTreeSet::new();
        let surface = self.surface.clone();
        for e in exprs.iter().chain(surface.iter().map(SurfaceRule::exprs)) {
            signature.extend(e.functions());
            symbols.extend(e.symbols());
            under_sqrt.extend(e.symbols_under_sqrt());
        }
        for rule in &surface {
            let (SurfaceRule::Assign { symbol, .. } | SurfaceRule::Linear { symbol, .. }) = rule;
            symbols.insert(symbol.clone());
        }
        let per_round = (self.config.max_attempts / ROUNDS).max(1);
        for _ in 0..ROUNDS {
            let table = self.random_functions(&signature);
            for _ in 0..per_round {
                let mut b = self.fixed.clone();
                for s in &symbols {
                    if !b.contains(s) {
                        let (lo, hi) = self.range_for(s, &under_sqrt);
                        let v = self.rng.gen_range(lo..hi);
                        b.set(s.clone(), v);
                    }
                }
                if surface
                    .iter()
                    .try_for_each(|r| r.apply(&mut b, &table))
                    .is_none()
                {
                    continue;
                }
                let values: Option<Vec<f64>> = exprs
                    .iter()
                    .map(|e| evaluate_with(e, &b, &table).ok().filter(|v| v.is_finite()))
                    .collect();
                if let Some(values) = values {
                    return Some((b, values));
                }
            }
        }
        None
    }

    pub fn probe(&mut self, e: &Expr) -> Option<(Bindings, f64)> {
        self.probe_many(std::slice::from_ref(e))
            .map(|(b, mut v)| (b, v.pop().unwrap()))
    }
}

/// Zero test: symbolic first, then `probes` random evaluations with
/// absolute tolerance `tol`.
pub fn is_zero(e: &Expr, sampler: &mut Sampler) -> ZeroVerdict {
    let s = e.simplify_with(sampler.positive());
    if s.is_zero_literal() {
        return ZeroVerdict::SymbolicallyZero;
    }
    let ProbeConfig { probes, tol, .. } = *sampler.config();
    let mut max_residual: f64 = 0.0;
    for _ in 0..probes {
        match sampler.probe(&s) {
            Some((witness, residual)) => {
                if !(residual.abs() < tol) {
                    return ZeroVerdict::Nonzero { witness, residual };
                }
                max_residual = max_residual.max(residual.abs());
            }
            None => {
                return ZeroVerdict::Nonzero {
                    witness: Bindings::new(),
                    residual: f64::NAN,
                }
            }
        }
    }
    ZeroVerdict::NumericallyZero {
        probes,
        max_residual,
    }
}

//! Lagrangian analysis: conjugate momenta, Hessian rank, velocity inversion
//! and time parametrization.

use std::collections::{BTreeMap, BTreeSet};

use log::debug;
use nalgebra::DMatrix;
use serde::Serialize;

use crate::expr::{is_zero, Bindings, Expr, FunctionTable, ProbeConfig, Sampler};
use crate::{Error, Result};

/// Points at which the Hessian rank is measured.
pub const RANK_SAMPLES: usize = 5;
/// Singular values below this fraction of the largest count as zero.
pub const RANK_THRESHOLD: f64 = 1e-9;

/// Momentum conjugate to `coordinate`: `q3 -> p3`, `t -> p_t`.
pub fn momentum_name(coordinate: &str) -> String {
    match coordinate.strip_prefix('q') {
        Some(rest) if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) => {
            format!("p{rest}")
        }
        _ => format!("p_{coordinate}"),
    }
}

/// Constraint label for the momentum of `coordinate`: `t` for `p_t`, `0`
/// for `p0`.
pub fn constraint_label(coordinate: &str) -> String {
    let p = momentum_name(coordinate);
    p.strip_prefix("p_")
        .or_else(|| p.strip_prefix('p'))
        .unwrap_or(&p)
        .to_string()
}

/// Closed-form inversions supplied by a template for momenta that are not
/// affine in the velocities.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedForms {
    /// Solved velocity -> expression in coordinates, momenta and unsolved
    /// velocities.
    pub velocities: BTreeMap<String, Expr>,
    /// Constraint label -> `H_a`.
    pub constraint_hamiltonians: BTreeMap<String, Expr>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LagrangianSystem {
    pub name: String,
    pub coordinates: Vec<String>,
    pub velocities: Vec<String>,
    pub lagrangian: Expr,
    /// Symbols known to be positive (e.g. `tdot`, `m`, `c`).
    pub positive: BTreeSet<String>,
    /// Physical constants kept symbolic, with the values used numerically.
    pub parameters: BTreeMap<String, f64>,
    pub functions: FunctionTable,
    pub closed_forms: Option<ClosedForms>,
    pub rank: Option<usize>,
    pub solved_velocities: Option<BTreeMap<String, Expr>>,
}

impl LagrangianSystem {
    /// Builds a system with velocity names derived from the coordinates:
    /// `<q>prime` when that symbol occurs in the Lagrangian, `<q>dot`
    /// otherwise.
    pub fn new(name: impl Into<String>, coordinates: &[&str], lagrangian: Expr) -> Result<Self> {
        let symbols = lagrangian.symbols();
        let velocities: Vec<String> = coordinates
            .iter()
            .map(|c| {
                let prime = format!("{c}prime");
                if symbols.contains(&prime) {
                    prime
                } else {
                    format!("{c}dot")
                }
            })
            .collect();
        let velocities: Vec<&str> = velocities.iter().map(String::as_str).collect();
        Self::with_velocities(name, coordinates, &velocities, lagrangian)
    }

    pub fn with_velocities(
        name: impl Into<String>,
        coordinates: &[&str],
        velocities: &[&str],
        lagrangian: Expr,
    ) -> Result<Self> {
        if coordinates.len() != velocities.len() {
            return Err(Error::InvalidSystem(format!(
                "{} coordinates but {} velocities",
                coordinates.len(),
                velocities.len()
            )));
        }
        if coordinates.is_empty() {
            return Err(Error::InvalidSystem("no coordinates".into()));
        }
        let mut seen = BTreeSet::new();
        for s in coordinates.iter().chain(velocities) {
            if !seen.insert(*s) {
                return Err(Error::InvalidSystem(format!("symbol `{s}` declared twice")));
            }
        }
        let mut functions = FunctionTable::new();
        for name in lagrangian.functions().keys() {
            functions.declare(name.clone());
        }
        Ok(LagrangianSystem {
            name: name.into(),
            coordinates: coordinates.iter().map(|s| s.to_string()).collect(),
            velocities: velocities.iter().map(|s| s.to_string()).collect(),
            lagrangian,
            positive: BTreeSet::new(),
            parameters: BTreeMap::new(),
            functions,
            closed_forms: None,
            rank: None,
            solved_velocities: None,
        })
    }

    pub fn with_positive<I, S>(mut self, symbols: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.positive.extend(symbols.into_iter().map(Into::into));
        self
    }

    pub fn with_parameter(mut self, name: impl Into<String>, value: f64) -> Self {
        self.parameters.insert(name.into(), value);
        self
    }

    pub fn dimension(&self) -> usize {
        self.coordinates.len()
    }

    pub fn momenta_names(&self) -> Vec<String> {
        self.coordinates.iter().map(|c| momentum_name(c)).collect()
    }

    pub fn velocity_of(&self, coordinate: &str) -> Option<&str> {
        let i = self.coordinates.iter().position(|c| c == coordinate)?;
        Some(&self.velocities[i])
    }

    /// Zero-test sampler honouring the declared-positive symbols.
    pub fn sampler(&self, config: &ProbeConfig) -> Sampler {
        Sampler::new(config.clone()).with_positive(self.positive.iter().cloned())
    }

    /// Velocities left unsolved by [`solve_velocities`], in declaration
    /// order.
    pub fn unsolved_velocities(&self) -> Vec<String> {
        match &self.solved_velocities {
            Some(w) => self
                .velocities
                .iter()
                .filter(|v| !w.contains_key(*v))
                .cloned()
                .collect(),
            None => Vec::new(),
        }
    }

    /// Replaces every defined function by its body.
    pub fn inline_functions(&self) -> LagrangianSystem {
        let t = &self.functions;
        let mut out = self.clone();
        out.lagrangian = t.inline_defined(&self.lagrangian);
        if let Some(cf) = &mut out.closed_forms {
            for e in cf.velocities.values_mut() {
                *e = t.inline_defined(e);
            }
            for e in cf.constraint_hamiltonians.values_mut() {
                *e = t.inline_defined(e);
            }
        }
        if let Some(w) = &mut out.solved_velocities {
            for e in w.values_mut() {
                *e = t.inline_defined(e);
            }
        }
        let mut functions = FunctionTable::new();
        for name in out.lagrangian.functions().keys() {
            functions.declare(name.clone());
        }
        out.functions = functions;
        out
    }
}

/// `p_i = dL/dq_i dot`, simplified, one per coordinate.
pub fn conjugate_momenta(sys: &LagrangianSystem) -> Vec<(String, Expr)> {
    sys.coordinates
        .iter()
        .zip(&sys.velocities)
        .map(|(q, v)| {
            (
                momentum_name(q),
                sys.lagrangian.differentiate(v).simplify_with(&sys.positive),
            )
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct HessianReport {
    #[serde(serialize_with = "serialize_matrix")]
    pub matrix: Vec<Vec<Expr>>,
    pub rank: usize,
    pub sample_points: Vec<Bindings>,
    pub singular_values: Vec<Vec<f64>>,
    /// Orthonormal basis of the numeric null space at the first sample
    /// point, in velocity order.
    pub singular_directions: Vec<Vec<f64>>,
}

fn serialize_matrix<S: serde::Serializer>(m: &[Vec<Expr>], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.len()))?;
    for row in m {
        let row: Vec<String> = row.iter().map(Expr::to_string).collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

fn numeric_rank(m: &DMatrix<f64>) -> (usize, Vec<f64>) {
    let svd = m.clone().svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let max = sv.first().copied().unwrap_or(0.0);
    let rank = sv.iter().filter(|&&s| s > RANK_THRESHOLD * max).count();
    (if max == 0.0 { 0 } else { rank }, sv)
}

/// Null-space basis from the right singular vectors.
fn null_space(m: &DMatrix<f64>, rank: usize) -> Vec<Vec<f64>> {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    order[rank..]
        .iter()
        .map(|&i| (0..n).map(|j| v_t[(i, j)]).collect())
        .collect()
}

/// Second velocity derivatives of `L` with their numeric rank at
/// [`RANK_SAMPLES`] random admissible points.
pub fn hessian(sys: &LagrangianSystem, config: &ProbeConfig) -> Result<HessianReport> {
    let n = sys.dimension();
    let first: Vec<Expr> = sys
        .velocities
        .iter()
        .map(|v| sys.lagrangian.differentiate(v))
        .collect();
    let matrix: Vec<Vec<Expr>> = first
        .iter()
        .map(|d| {
            sys.velocities
                .iter()
                .map(|v| d.differentiate(v).simplify_with(&sys.positive))
                .collect()
        })
        .collect();
    let flat: Vec<Expr> = matrix.iter().flatten().cloned().collect();
    let mut sampler = sys.sampler(config);
    let mut ranks = Vec::new();
    let mut points = Vec::new();
    let mut singular_values = Vec::new();
    let mut first_numeric = None;
    for _ in 0..RANK_SAMPLES {
        let (b, values) = sampler
            .probe_many(&flat)
            .ok_or_else(|| Error::Sampling(format!("Hessian of {}", sys.name)))?;
        let m = DMatrix::from_row_slice(n, n, &values);
        let (rank, sv) = numeric_rank(&m);
        ranks.push(rank);
        points.push(b);
        singular_values.push(sv);
        first_numeric.get_or_insert(m);
    }
    if ranks.iter().any(|&r| r != ranks[0]) {
        return Err(Error::RankInstability { ranks });
    }
    let rank = ranks[0];
    let singular_directions = null_space(first_numeric.as_ref().unwrap(), rank);
    debug!("{}: Hessian rank {rank} of {n}", sys.name);
    Ok(HessianReport {
        matrix,
        rank,
        sample_points: points,
        singular_values,
        singular_directions,
    })
}

/// Velocities to solve for: non-positive velocities first, each kept when it
/// raises the rank of the Hessian restricted to the chosen set.
fn choose_solvable(
    sys: &LagrangianSystem,
    report: &HessianReport,
    config: &ProbeConfig,
) -> Result<Vec<usize>> {
    let n = sys.dimension();
    let flat: Vec<Expr> = report.matrix.iter().flatten().cloned().collect();
    let mut sampler = sys.sampler(config);
    let (_, values) = sampler
        .probe_many(&flat)
        .ok_or_else(|| Error::Sampling(format!("Hessian of {}", sys.name)))?;
    let full = DMatrix::from_row_slice(n, n, &values);
    let mut order: Vec<usize> = (0..n)
        .filter(|&i| !sys.positive.contains(&sys.velocities[i]))
        .collect();
    order.extend((0..n).filter(|&i| sys.positive.contains(&sys.velocities[i])));
    let mut chosen: Vec<usize> = Vec::new();
    for i in order {
        if chosen.len() == report.rank {
            break;
        }
        let mut trial = chosen.clone();
        trial.push(i);
        let sub = DMatrix::from_fn(trial.len(), trial.len(), |r, c| full[(trial[r], trial[c])]);
        if numeric_rank(&sub).0 == trial.len() {
            chosen = trial;
        }
    }
    if chosen.len() != report.rank {
        return Err(Error::InversionUnsupported {
            velocities: sys.velocities.clone(),
            reason: "no velocity subset of full Hessian rank".into(),
        });
    }
    chosen.sort_unstable();
    Ok(chosen)
}

/// Solves `J v = rhs` by Gaussian elimination over expressions.
fn solve_linear(mut j: Vec<Vec<Expr>>, mut rhs: Vec<Expr>) -> Option<Vec<Expr>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !j[r][col].is_zero_literal())?;
        j.swap(col, pivot);
        rhs.swap(col, pivot);
        let inv = j[col][col].clone().recip();
        for r in 0..n {
            if r == col || j[r][col].is_zero_literal() {
                continue;
            }
            let f = j[r][col].clone() * inv.clone();
            let pivot_row = j[col].clone();
            for (c, p) in pivot_row.iter().enumerate().skip(col) {
                j[r][c] = j[r][c].clone() - f.clone() * p.clone();
            }
            rhs[r] = rhs[r].clone() - f * rhs[col].clone();
        }
    }
    Some((0..n).map(|i| rhs[i].clone() / j[i][i].clone()).collect())
}

/// Hessian analysis plus velocity inversion; fills `rank` and
/// `solved_velocities`.
pub fn analyze(sys: &LagrangianSystem, config: &ProbeConfig) -> Result<LagrangianSystem> {
    let report = hessian(sys, config)?;
    let mut out = sys.clone();
    out.rank = Some(report.rank);
    let w = solve_velocities_with(&out, &report, config)?;
    out.solved_velocities = Some(w);
    Ok(out)
}

/// Velocity inversion. Uses a symbolic linear solve when the momenta are
/// affine in the solvable velocities, and the template closed forms
/// otherwise.
pub fn solve_velocities(
    sys: &LagrangianSystem,
    config: &ProbeConfig,
) -> Result<BTreeMap<String, Expr>> {
    let report = hessian(sys, config)?;
    solve_velocities_with(sys, &report, config)
}

fn solve_velocities_with(
    sys: &LagrangianSystem,
    report: &HessianReport,
    config: &ProbeConfig,
) -> Result<BTreeMap<String, Expr>> {
    let chosen = choose_solvable(sys, report, config)?;
    let solved: Vec<&String> = chosen.iter().map(|&i| &sys.velocities[i]).collect();
    let momenta = conjugate_momenta(sys);

    let jacobian: Vec<Vec<Expr>> = chosen
        .iter()
        .map(|&a| {
            chosen
                .iter()
                .map(|&b| report.matrix[a][b].clone())
                .collect()
        })
        .collect();
    let affine = jacobian
        .iter()
        .flatten()
        .all(|e| solved.iter().all(|v| !e.contains_symbol(v)));

    let w: BTreeMap<String, Expr> = if affine && !chosen.is_empty() {
        let at_rest: BTreeMap<String, Expr> = solved
            .iter()
            .map(|v| ((*v).clone(), Expr::zero()))
            .collect();
        let rhs: Vec<Expr> = chosen
            .iter()
            .map(|&a| {
                let (name, p) = &momenta[a];
                Expr::sym(name.clone()) - p.substitute(&at_rest)
            })
            .collect();
        let sol = solve_linear(jacobian, rhs).ok_or_else(|| Error::InversionUnsupported {
            velocities: solved.iter().map(|s| s.to_string()).collect(),
            reason: "momentum-velocity Jacobian has no usable pivot".into(),
        })?;
        solved
            .iter()
            .zip(sol)
            .map(|(v, e)| ((*v).clone(), e.simplify_with(&sys.positive)))
            .collect()
    } else if chosen.is_empty() {
        BTreeMap::new()
    } else {
        let Some(cf) = &sys.closed_forms else {
            return Err(Error::InversionUnsupported {
                velocities: solved.iter().map(|s| s.to_string()).collect(),
                reason: "momenta are not affine in the velocities and no closed form is registered"
                    .into(),
            });
        };
        let mut w = BTreeMap::new();
        for v in &solved {
            let e = cf
                .velocities
                .get(*v)
                .ok_or_else(|| Error::InversionUnsupported {
                    velocities: vec![(*v).clone()],
                    reason: "closed form missing for this velocity".into(),
                })?;
            w.insert((*v).clone(), e.clone());
        }
        w
    };

    // Substituting the inversion back into each momentum definition must
    // return the momentum symbol itself.
    let mut sampler = sys.sampler(config);
    for &a in &chosen {
        let (name, p) = &momenta[a];
        let residual = p.substitute(&w) - Expr::sym(name.clone());
        let verdict = is_zero(&residual, &mut sampler);
        if !verdict.is_zero() {
            return Err(Error::InversionUnsupported {
                velocities: vec![sys.velocities[a].clone()],
                reason: format!("substitution check failed ({verdict:?})"),
            });
        }
    }
    Ok(w)
}

/// Time parametrization of a regular system: coordinates `(t, q_i)`,
/// velocities `(tdot, q_iprime)` and `L = tdot * l(q, q'/tdot)`.
pub fn parametrize(regular: &LagrangianSystem, config: &ProbeConfig) -> Result<LagrangianSystem> {
    let symbols = regular.lagrangian.symbols();
    let taken = |s: &str| {
        symbols.contains(s)
            || regular.coordinates.iter().any(|c| c == s)
            || regular.velocities.iter().any(|v| v == s)
    };
    if taken("tdot") || regular.coordinates.iter().any(|c| c == "t") {
        return Err(Error::InvalidSystem(
            "input already uses `t` as a coordinate or `tdot` as a symbol".into(),
        ));
    }
    let primes: Vec<String> = regular
        .coordinates
        .iter()
        .map(|c| format!("{c}prime"))
        .collect();
    if let Some(p) = primes.iter().find(|p| taken(p)) {
        return Err(Error::InvalidSystem(format!("input already uses `{p}`")));
    }
    let report = hessian(regular, config)?;
    let n = regular.dimension();
    if report.rank != n {
        return Err(Error::InputSingular {
            rank: report.rank,
            dimension: n,
        });
    }
    let tdot = Expr::sym("tdot");
    let map: BTreeMap<String, Expr> = regular
        .velocities
        .iter()
        .zip(&primes)
        .map(|(v, p)| (v.clone(), Expr::sym(p.clone()) / tdot.clone()))
        .collect();
    let lagrangian = (tdot * regular.lagrangian.substitute(&map)).simplify();

    let mut coordinates = vec!["t"];
    coordinates.extend(regular.coordinates.iter().map(String::as_str));
    let mut velocities = vec!["tdot"];
    velocities.extend(primes.iter().map(String::as_str));
    let mut out = LagrangianSystem::with_velocities(
        format!("parametrized {}", regular.name),
        &coordinates,
        &velocities,
        lagrangian,
    )?;
    out.positive = regular.positive.clone();
    out.positive.insert("tdot".into());
    out.parameters = regular.parameters.clone();
    out.functions = regular.functions.clone();
    Ok(out)
}

/// `L(q, lambda v) - lambda L(q, v)`.
pub fn homogeneity_residual(sys: &LagrangianSystem, lambda: f64) -> Expr {
    let map: BTreeMap<String, Expr> = sys
        .velocities
        .iter()
        .map(|v| (v.clone(), lambda * Expr::sym(v.clone())))
        .collect();
    sys.lagrangian.substitute(&map) - lambda * sys.lagrangian.clone()
}

/// `sum_i v_i dL/dv_i - L`; vanishes for Lagrangians homogeneous of degree
/// one in the velocities.
pub fn euler_residual(sys: &LagrangianSystem) -> Expr {
    let mut terms: Vec<Expr> = sys
        .velocities
        .iter()
        .map(|v| Expr::sym(v.clone()) * sys.lagrangian.differentiate(v))
        .collect();
    terms.push(-sys.lagrangian.clone());
    Expr::sum(terms).simplify_with(&sys.positive)
}

//! Poisson brackets, total variations along the multi-parameter flow, the
//! consistency iteration and first/second-class classification.

use std::collections::BTreeSet;

use log::{debug, warn};
use serde::Serialize;

use crate::expr::{is_zero, Expr, ProbeConfig, Sampler, SurfaceRule, ZeroVerdict};
use crate::hjpde::{as_string, HjpdeSet, PhasePair};
use crate::{Error, Result};

/// `{a, b} = sum (da/dq db/dp - da/dp db/dq)` over `pairs`.
pub fn poisson_bracket(a: &Expr, b: &Expr, pairs: &[PhasePair]) -> Expr {
    let terms: Vec<Expr> = pairs
        .iter()
        .flat_map(|p| {
            let (q, m) = (&p.coordinate, &p.momentum);
            [
                a.differentiate(q) * b.differentiate(m),
                -(a.differentiate(m) * b.differentiate(q)),
            ]
        })
        .collect();
    Expr::sum(terms)
}

/// Rate of change of every extended phase-space symbol along direction
/// `beta`: `dq_a = dH'/dp_a`, `dp_a = -dH'/dq_a`, `dp_g = -dH'/dt_g`,
/// `dt_g = delta`.
pub fn flow(set: &HjpdeSet, beta: usize) -> Vec<(String, Expr)> {
    let h = &set.directions[beta].expression;
    let mut out = Vec::new();
    for p in &set.pairs {
        out.push((p.coordinate.clone(), h.differentiate(&p.momentum)));
        out.push((p.momentum.clone(), -h.differentiate(&p.coordinate)));
    }
    for (g, d) in set.directions.iter().enumerate() {
        let rate = if g == beta { Expr::one() } else { Expr::zero() };
        out.push((d.parameter.clone(), rate));
        out.push((d.momentum.clone(), -h.differentiate(&d.parameter)));
    }
    out
}

/// Coefficient of `dt_beta` in the variation of one expression.
#[derive(Clone, Debug, Serialize)]
pub struct Coefficient {
    pub parameter: String,
    #[serde(serialize_with = "as_string")]
    pub value: Expr,
    pub verdict: ZeroVerdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct TotalVariation {
    pub label: String,
    /// `sum_x dC/dx dx` before the equations of motion are used.
    #[serde(serialize_with = "as_string")]
    pub differential: Expr,
    /// `sum_beta c_beta dt_beta` after substitution.
    #[serde(serialize_with = "as_string")]
    pub expression: Expr,
    pub coefficients: Vec<Coefficient>,
    pub verdict: ZeroVerdict,
}

fn differential_symbol(s: &str) -> Expr {
    Expr::sym(format!("d{s}"))
}

fn combine(verdicts: &[&ZeroVerdict]) -> ZeroVerdict {
    if let Some(bad) = verdicts.iter().find(|v| !v.is_zero()) {
        return (*bad).clone();
    }
    let mut probes = 0;
    let mut max_residual: f64 = 0.0;
    for v in verdicts {
        if let ZeroVerdict::NumericallyZero {
            probes: n,
            max_residual: r,
        } = v
        {
            probes = probes.max(*n);
            max_residual = max_residual.max(*r);
        }
    }
    if probes == 0 {
        ZeroVerdict::SymbolicallyZero
    } else {
        ZeroVerdict::NumericallyZero {
            probes,
            max_residual,
        }
    }
}

fn variation_with(set: &HjpdeSet, label: &str, c: &Expr, sampler: &mut Sampler) -> TotalVariation {
    let pairs = set.extended_pairs();
    let differential = Expr::sum(
        pairs
            .iter()
            .flat_map(|p| [&p.coordinate, &p.momentum])
            .map(|x| c.differentiate(x) * differential_symbol(x))
            .collect(),
    );
    let coefficients: Vec<Coefficient> = (0..set.directions.len())
        .map(|beta| {
            let value = Expr::sum(
                flow(set, beta)
                    .into_iter()
                    .map(|(x, rate)| c.differentiate(&x) * rate)
                    .collect(),
            )
            .simplify_with(&set.system.positive);
            let verdict = is_zero(&value, sampler);
            Coefficient {
                parameter: set.directions[beta].parameter.clone(),
                value,
                verdict,
            }
        })
        .collect();
    let expression = Expr::sum(
        coefficients
            .iter()
            .map(|k| k.value.clone() * differential_symbol(&k.parameter))
            .collect(),
    );
    let verdict = combine(&coefficients.iter().map(|k| &k.verdict).collect::<Vec<_>>());
    TotalVariation {
        label: label.to_string(),
        differential,
        expression,
        coefficients,
        verdict,
    }
}

/// `dH'_label` with the equations of motion substituted, each `dt_beta`
/// coefficient zero-tested on the constraint surface.
pub fn total_variation(
    set: &HjpdeSet,
    label: &str,
    config: &ProbeConfig,
) -> Result<TotalVariation> {
    let d = set
        .direction(label)
        .ok_or_else(|| Error::InvalidSystem(format!("no constraint labelled `{label}`")))?;
    let mut sampler = set.surface_sampler(config);
    Ok(variation_with(set, label, &d.expression, &mut sampler))
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstraintRecord {
    pub label: String,
    #[serde(serialize_with = "as_string")]
    pub expression: Expr,
    pub generation: usize,
    /// Constraint whose variation produced this one.
    pub origin: Option<String>,
}

/// Consistency condition fixed by a non-evolution parameter instead of a
/// new constraint: `coefficient * dt_parameter + ... = 0`.
#[derive(Clone, Debug, Serialize)]
pub struct ParameterRelation {
    pub constraint: String,
    pub parameter: String,
    #[serde(serialize_with = "as_string")]
    pub coefficient: Expr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairClass {
    FirstClass,
    SecondClass,
    Undetermined,
}

#[derive(Clone, Debug, Serialize)]
pub struct PairTag {
    pub first: String,
    pub second: String,
    #[serde(serialize_with = "as_string")]
    pub bracket: Expr,
    pub class: PairClass,
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub pairs: Vec<PairTag>,
    /// Per constraint: second-class when any bracket with another
    /// constraint is a nonzero constant, first-class when all brackets
    /// vanish on the surface.
    pub constraints: Vec<(String, PairClass)>,
}

impl Classification {
    pub fn of(&self, label: &str) -> Option<PairClass> {
        self.constraints
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, c)| *c)
    }

    pub fn pair(&self, a: &str, b: &str) -> Option<&PairTag> {
        self.pairs
            .iter()
            .find(|t| (t.first == a && t.second == b) || (t.first == b && t.second == a))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IntegrabilityReport {
    /// Variations of every constraint in the final pass.
    pub verdicts: Vec<TotalVariation>,
    /// Constraints added per pass; generation 0 holds the Hamilton-Jacobi
    /// equations themselves.
    pub generations: Vec<Vec<ConstraintRecord>>,
    pub relations: Vec<ParameterRelation>,
    pub classification: Classification,
    pub integrable: bool,
}

impl IntegrabilityReport {
    pub fn constraints(&self) -> impl Iterator<Item = &ConstraintRecord> {
        self.generations.iter().flatten()
    }

    /// True when no constraint was appended.
    pub fn closed_at_generation_zero(&self) -> bool {
        self.generations.len() == 1
    }
}

/// Surface rule for a secondary constraint: solve it for a symbol that
/// enters linearly with a constant coefficient, avoiding symbols used by
/// earlier rules.
fn secondary_rule(
    c: &Expr,
    phase: &BTreeSet<String>,
    used: &BTreeSet<String>,
) -> Option<SurfaceRule> {
    let symbols = c.symbols();
    let candidates = symbols
        .iter()
        .filter(|s| phase.contains(*s) && !used.contains(*s))
        .chain(symbols.iter().filter(|s| phase.contains(*s)));
    for s in candidates {
        if let Some(slope) = c.differentiate(s).as_const() {
            if slope != 0.0 {
                return Some(SurfaceRule::Linear {
                    symbol: s.clone(),
                    constraint: c.clone(),
                    slope,
                });
            }
        }
    }
    None
}

fn surface_for(set: &HjpdeSet, secondary: &[ConstraintRecord]) -> Vec<SurfaceRule> {
    let phase = set.phase_symbols();
    let mut used = BTreeSet::new();
    let mut rules = Vec::new();
    for c in secondary {
        match secondary_rule(&c.expression, &phase, &used) {
            Some(rule) => {
                used.extend(c.expression.symbols());
                rules.push(rule);
            }
            None => warn!(
                "constraint {} = {} cannot be projected; testing off the surface",
                c.label, c.expression
            ),
        }
    }
    // Hamilton-Jacobi equations last: H_a never involves another p_b, so
    // the assignments stay valid after the linear projections.
    rules.extend(set.surface_rules());
    rules
}

/// Appends nonvanishing variations as new constraints until every
/// variation vanishes on the constraint surface, a contradiction appears
/// or the iteration bound `2 x (phase-space pairs)` is exceeded.
pub fn consistency_iterate(set: &HjpdeSet, config: &ProbeConfig) -> Result<IntegrabilityReport> {
    let bound = 2 * set.extended_pairs().len();
    let evolution = set.evolution;
    let mut generations: Vec<Vec<ConstraintRecord>> = vec![set
        .directions
        .iter()
        .map(|d| ConstraintRecord {
            label: d.label.clone(),
            expression: d.expression.clone(),
            generation: 0,
            origin: None,
        })
        .collect()];
    let mut counter = 0;
    loop {
        let secondary: Vec<ConstraintRecord> = generations[1..].iter().flatten().cloned().collect();
        let mut sampler = set
            .system
            .sampler(config)
            .with_surface(surface_for(set, &secondary));
        let mut verdicts = Vec::new();
        let mut relations = Vec::new();
        let mut fresh: Vec<ConstraintRecord> = Vec::new();
        for c in generations.iter().flatten() {
            let tv = variation_with(set, &c.label, &c.expression, &mut sampler);
            let blocked: Vec<&Coefficient> = tv
                .coefficients
                .iter()
                .enumerate()
                .filter(|(beta, k)| *beta != evolution && !k.verdict.is_zero())
                .map(|(_, k)| k)
                .collect();
            let along = &tv.coefficients[evolution];
            if !blocked.is_empty() {
                relations.extend(blocked.into_iter().map(|k| ParameterRelation {
                    constraint: c.label.clone(),
                    parameter: k.parameter.clone(),
                    coefficient: k.value.clone(),
                }));
            } else if !along.verdict.is_zero() {
                let expr = along.value.clone();
                if let Some(v) = expr.as_const() {
                    if v != 0.0 {
                        return Err(Error::Contradiction {
                            constraint: format!("{expr} (from the variation of {})", c.label),
                        });
                    }
                }
                let known = generations
                    .iter()
                    .flatten()
                    .chain(&fresh)
                    .any(|k| k.expression == expr || k.expression == -expr.clone());
                if !known {
                    counter += 1;
                    fresh.push(ConstraintRecord {
                        label: format!("s{counter}"),
                        expression: expr,
                        generation: generations.len(),
                        origin: Some(c.label.clone()),
                    });
                }
            }
            verdicts.push(tv);
        }
        if fresh.is_empty() {
            let integrable = relations.is_empty() && verdicts.iter().all(|v| v.verdict.is_zero());
            let classification = classify_with(set, &generations, &mut sampler);
            debug!(
                "consistency closed after {} generation(s), integrable = {integrable}",
                generations.len()
            );
            return Ok(IntegrabilityReport {
                verdicts,
                generations,
                relations,
                classification,
                integrable,
            });
        }
        if generations.len() >= bound {
            return Err(Error::IterationBound { bound });
        }
        debug!(
            "generation {}: {}",
            generations.len(),
            fresh
                .iter()
                .map(|c| format!("{} = {}", c.label, c.expression))
                .collect::<Vec<_>>()
                .join(", ")
        );
        generations.push(fresh);
    }
}

/// Pairwise brackets of the constraints (canonical direction excluded).
fn classify_with(
    set: &HjpdeSet,
    generations: &[Vec<ConstraintRecord>],
    sampler: &mut Sampler,
) -> Classification {
    let pairs_space = set.extended_pairs();
    let phase = set.phase_symbols();
    let canonical: BTreeSet<&str> = set
        .directions
        .iter()
        .filter(|d| d.is_canonical())
        .map(|d| d.label.as_str())
        .collect();
    let list: Vec<&ConstraintRecord> = generations
        .iter()
        .flatten()
        .filter(|c| !canonical.contains(c.label.as_str()))
        .collect();
    let mut tags = Vec::new();
    for (i, a) in list.iter().enumerate() {
        for b in &list[i..] {
            let bracket = poisson_bracket(&a.expression, &b.expression, &pairs_space)
                .simplify_with(&set.system.positive);
            let constant = bracket.symbols().is_disjoint(&phase);
            let class = if bracket.is_zero_literal() {
                PairClass::FirstClass
            } else if constant && !is_zero(&bracket, sampler).is_zero() {
                PairClass::SecondClass
            } else if is_zero(&bracket, sampler).is_zero() {
                PairClass::FirstClass
            } else {
                PairClass::Undetermined
            };
            tags.push(PairTag {
                first: a.label.clone(),
                second: b.label.clone(),
                bracket,
                class,
            });
        }
    }
    let constraints = list
        .iter()
        .map(|c| {
            let mine = tags
                .iter()
                .filter(|t| t.first == c.label || t.second == c.label);
            let classes: Vec<PairClass> = mine.map(|t| t.class).collect();
            let class = if classes.contains(&PairClass::SecondClass) {
                PairClass::SecondClass
            } else if classes.iter().all(|k| *k == PairClass::FirstClass) {
                PairClass::FirstClass
            } else {
                PairClass::Undetermined
            };
            (c.label.clone(), class)
        })
        .collect();
    Classification {
        pairs: tags,
        constraints,
    }
}

/// Classification of the Hamilton-Jacobi constraints of `set` as they
/// stand, without consistency iteration.
pub fn classify(set: &HjpdeSet, config: &ProbeConfig) -> Classification {
    let generations = vec![set
        .directions
        .iter()
        .map(|d| ConstraintRecord {
            label: d.label.clone(),
            expression: d.expression.clone(),
            generation: 0,
            origin: None,
        })
        .collect()];
    classify_with(set, &generations, &mut set.surface_sampler(config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::hjpde::build_constraints;
    use crate::legendre::{parametrize, LagrangianSystem};

    fn cfg() -> ProbeConfig {
        ProbeConfig::default()
    }

    fn pair(q: &str, p: &str) -> PhasePair {
        PhasePair {
            coordinate: q.into(),
            momentum: p.into(),
        }
    }

    fn parametrized_oscillator() -> HjpdeSet {
        let l =
            LagrangianSystem::new("oscillator", &["q"], parse("qdot^2/2 - V(q)").unwrap()).unwrap();
        build_constraints(&parametrize(&l, &cfg()).unwrap(), &cfg()).unwrap()
    }

    #[test]
    fn bracket_examples() {
        let ps = [pair("q", "p")];
        assert_eq!(
            poisson_bracket(&Expr::sym("q"), &Expr::sym("p"), &ps),
            Expr::one()
        );
        let h = parse("p_t + p^2/2 + V(q)").unwrap();
        let ext = [pair("q", "p"), pair("t", "p_t")];
        assert!(poisson_bracket(&h, &h, &ext).is_zero_literal());
        assert_eq!(
            poisson_bracket(&parse("p^2/2 + V(q)").unwrap(), &Expr::sym("q"), &ps),
            -Expr::sym("p")
        );
    }

    #[test]
    fn oscillator_constraint_is_integrable() {
        let set = parametrized_oscillator();
        let tv = total_variation(&set, "t", &cfg()).unwrap();
        assert_eq!(tv.verdict, ZeroVerdict::SymbolicallyZero);
        assert_eq!(
            tv.differential,
            parse("dp_t + p_q*dp_q + V'(q)*dq").unwrap()
        );
        let report = consistency_iterate(&set, &cfg()).unwrap();
        assert!(report.integrable);
        assert!(report.closed_at_generation_zero());
        assert_eq!(report.classification.of("t"), Some(PairClass::FirstClass));
    }

    #[test]
    fn variation_equals_bracket_with_the_evolution_generator() {
        let set = parametrized_oscillator();
        let h = &set.directions[0].expression;
        let probe = parse("q^2*p_q + t*p_t").unwrap();
        let mut sampler = set.surface_sampler(&cfg());
        let tv = variation_with(&set, "probe", &probe, &mut sampler);
        let bracket = poisson_bracket(&probe, h, &set.extended_pairs());
        let diff = tv.coefficients[0].value.clone() - bracket;
        assert!(is_zero(&diff, &mut sampler).is_zero());
    }

    #[test]
    fn synthetic_system_grows_secondary_constraints() {
        let s = LagrangianSystem::new(
            "synthetic",
            &["q1", "q2"],
            parse("q1dot^2/2 + q1*q2").unwrap(),
        )
        .unwrap();
        let set = build_constraints(&s, &cfg()).unwrap();
        let report = consistency_iterate(&set, &cfg()).unwrap();
        let gens: Vec<Vec<String>> = report
            .generations
            .iter()
            .map(|g| g.iter().map(|c| c.expression.to_string()).collect())
            .collect();
        assert_eq!(gens[0][1], "p2");
        assert_eq!(gens[1], vec!["q1"]);
        assert_eq!(gens[2], vec!["p1"]);
        assert_eq!(gens[3], vec!["q2"]);
        assert_eq!(report.relations.len(), 1);
        assert_eq!(report.relations[0].parameter, "q2");
        assert!(!report.integrable);
        for (label, class) in &report.classification.constraints {
            assert_eq!(*class, PairClass::SecondClass, "{label}");
        }
        assert_eq!(
            report.classification.pair("2", "s3").unwrap().class,
            PairClass::SecondClass
        );
    }

    #[test]
    fn contradiction_is_an_error() {
        // p_y = 1 is a primary constraint whose variation along the
        // canonical flow is -dH/dy = 1: inconsistent.
        let s = LagrangianSystem::new("bad", &["x", "y"], parse("xdot^2/2 + ydot + y").unwrap())
            .unwrap();
        let set = build_constraints(&s, &cfg()).unwrap();
        assert!(matches!(
            consistency_iterate(&set, &cfg()),
            Err(Error::Contradiction { .. })
        ));
    }
}

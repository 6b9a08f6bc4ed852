//! The Hamilton-Jacobi constraint set `H'_a = p_a + H_a` and the canonical
//! Hamiltonian.

use std::collections::{BTreeMap, BTreeSet};

use log::debug;
use serde::Serialize;

use crate::expr::{is_zero, Expr, ProbeConfig, Sampler, SurfaceRule, ZeroVerdict};
use crate::legendre::{self, constraint_label, momentum_name, LagrangianSystem};
use crate::{Error, Result};

/// Canonically conjugate coordinate and momentum symbols.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PhasePair {
    pub coordinate: String,
    pub momentum: String,
}

/// One Hamilton-Jacobi equation `H'_a = p_a + H_a = 0` with its parameter
/// `t_a`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Direction {
    pub label: String,
    pub parameter: String,
    pub momentum: String,
    /// `H_a`, free of every `p_b`.
    #[serde(serialize_with = "crate::hjpde::as_string")]
    pub hamiltonian: Expr,
    /// `H'_a = p_a + H_a`.
    #[serde(serialize_with = "crate::hjpde::as_string")]
    pub expression: Expr,
    /// Unsolved velocity the equation came from; `None` for the canonical
    /// direction of a system whose Hamiltonian does not vanish.
    pub velocity: Option<String>,
}

impl Direction {
    pub fn is_canonical(&self) -> bool {
        self.velocity.is_none()
    }
}

pub(crate) fn as_string<S: serde::Serializer>(e: &Expr, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(e)
}

#[derive(Clone, Debug)]
pub struct HjpdeSet {
    /// The analyzed system.
    pub system: LagrangianSystem,
    /// `(q_a, p_a)` for the solved velocities.
    pub pairs: Vec<PhasePair>,
    /// Canonical direction (when `H_0` does not vanish) followed by one
    /// direction per unsolved velocity.
    pub directions: Vec<Direction>,
    pub canonical_hamiltonian: Expr,
    pub vanishing: ZeroVerdict,
    /// Index into `directions` of the physical evolution parameter.
    pub evolution: usize,
}

impl HjpdeSet {
    /// Directions that come from primary constraints.
    pub fn constraints(&self) -> impl Iterator<Item = &Direction> {
        self.directions.iter().filter(|d| !d.is_canonical())
    }

    pub fn direction(&self, label: &str) -> Option<&Direction> {
        self.directions.iter().find(|d| d.label == label)
    }

    pub fn evolution_direction(&self) -> &Direction {
        &self.directions[self.evolution]
    }

    /// `(q_a, p_a)` followed by `(t_a, p_a)` for every direction.
    pub fn extended_pairs(&self) -> Vec<PhasePair> {
        let mut out = self.pairs.clone();
        out.extend(self.directions.iter().map(|d| PhasePair {
            coordinate: d.parameter.clone(),
            momentum: d.momentum.clone(),
        }));
        out
    }

    /// Every phase-space symbol of the extended space.
    pub fn phase_symbols(&self) -> BTreeSet<String> {
        self.extended_pairs()
            .into_iter()
            .flat_map(|p| [p.coordinate, p.momentum])
            .collect()
    }

    /// `p_a := -H_a` for every direction.
    pub fn surface_rules(&self) -> Vec<SurfaceRule> {
        self.directions
            .iter()
            .map(|d| SurfaceRule::Assign {
                symbol: d.momentum.clone(),
                value: -d.hamiltonian.clone(),
            })
            .collect()
    }

    /// Sampler whose points lie on the constraint surface.
    pub fn surface_sampler(&self, config: &ProbeConfig) -> Sampler {
        self.system
            .sampler(config)
            .with_surface(self.surface_rules())
    }
}

fn substitute_unsolved(
    label: &str,
    h: Expr,
    unsolved: &[String],
    sampler: &mut Sampler,
) -> Result<Expr> {
    let mut h = h;
    for v in unsolved {
        if !h.contains_symbol(v) {
            continue;
        }
        if !is_zero(&h.differentiate(v), sampler).is_zero() {
            return Err(Error::VelocityDependentConstraint {
                label: label.to_string(),
                velocity: v.clone(),
            });
        }
        // Value-independent: any admissible value will do.
        h = h.substitute_one(v, &Expr::one());
    }
    Ok(h)
}

/// `H_0 = p_a w_a - sum H_a v_a - L(q, w)` for an analyzed system, with its
/// zero verdict.
pub fn canonical_hamiltonian(
    sys: &LagrangianSystem,
    hamiltonians: &BTreeMap<String, Expr>,
    config: &ProbeConfig,
) -> Result<(Expr, ZeroVerdict)> {
    let w = sys
        .solved_velocities
        .as_ref()
        .ok_or_else(|| Error::InvalidSystem("velocities not solved".into()))?;
    let mut terms = Vec::new();
    for (q, v) in sys.coordinates.iter().zip(&sys.velocities) {
        match w.get(v) {
            Some(wv) => terms.push(Expr::sym(momentum_name(q)) * wv.clone()),
            None => {
                let h = &hamiltonians[&constraint_label(q)];
                terms.push(-(h.clone() * Expr::sym(v.clone())));
            }
        }
    }
    terms.push(-sys.lagrangian.substitute(w));
    let h0 = Expr::sum(terms).simplify_with(&sys.positive);
    let verdict = is_zero(&h0, &mut sys.sampler(config));
    Ok((h0, verdict))
}

/// Builds the Hamilton-Jacobi equations of `sys`, analyzing it first when
/// needed.
pub fn build_constraints(sys: &LagrangianSystem, config: &ProbeConfig) -> Result<HjpdeSet> {
    let sys = if sys.solved_velocities.is_some() {
        sys.clone()
    } else {
        legendre::analyze(sys, config)?
    };
    let w = sys.solved_velocities.clone().unwrap_or_default();
    let unsolved = sys.unsolved_velocities();
    let momenta: BTreeMap<String, Expr> = legendre::conjugate_momenta(&sys).into_iter().collect();
    let mut sampler = sys.sampler(config);
    let constrained: Vec<String> = sys
        .coordinates
        .iter()
        .zip(&sys.velocities)
        .filter(|(_, v)| !w.contains_key(*v))
        .map(|(q, _)| momentum_name(q))
        .collect();

    let mut pairs = Vec::new();
    let mut constraints = Vec::new();
    let mut hamiltonians = BTreeMap::new();
    for (q, v) in sys.coordinates.iter().zip(&sys.velocities) {
        let p = momentum_name(q);
        if w.contains_key(v) {
            pairs.push(PhasePair {
                coordinate: q.clone(),
                momentum: p,
            });
            continue;
        }
        let label = constraint_label(q);
        let derived = (-momenta[&p].substitute(&w)).simplify_with(&sys.positive);
        let template = sys
            .closed_forms
            .as_ref()
            .and_then(|cf| cf.constraint_hamiltonians.get(&label));
        let h = match template {
            Some(t) => {
                let verdict = is_zero(&(derived.clone() - t.clone()), &mut sampler);
                if !verdict.is_zero() {
                    return Err(Error::InvalidSystem(format!(
                        "registered H_{label} disagrees with the Lagrangian ({})",
                        verdict.label()
                    )));
                }
                t.simplify_with(&sys.positive)
            }
            None => substitute_unsolved(&label, derived, &unsolved, &mut sampler)?,
        };
        if let Some(bad) = constrained.iter().find(|m| h.contains_symbol(m)) {
            return Err(Error::InvalidSystem(format!(
                "H_{label} depends on the constrained momentum `{bad}`"
            )));
        }
        hamiltonians.insert(label.clone(), h.clone());
        constraints.push(Direction {
            label,
            parameter: q.clone(),
            momentum: p.clone(),
            expression: (Expr::sym(p) + h.clone()).simplify_with(&sys.positive),
            hamiltonian: h,
            velocity: Some(v.clone()),
        });
    }

    let (h0, vanishing) = canonical_hamiltonian(&sys, &hamiltonians, config)?;
    debug!("{}: H_0 = {h0} ({})", sys.name, vanishing.label());

    let mut directions = Vec::new();
    if !vanishing.is_zero() {
        let h0 = substitute_unsolved("0", h0.clone(), &unsolved, &mut sampler)?;
        let in_use = |s: &str| {
            sys.coordinates.iter().any(|c| c == s)
                || sys.lagrangian.contains_symbol(s)
                || sys.parameters.contains_key(s)
        };
        let clash = constraints.iter().any(|c| c.label == "0") || in_use("t");
        let (label, parameter) = if clash { ("tau", "tau") } else { ("0", "t") };
        let momentum = momentum_name(parameter);
        directions.push(Direction {
            label: label.into(),
            parameter: parameter.into(),
            momentum: momentum.clone(),
            expression: (Expr::sym(momentum) + h0.clone()).simplify_with(&sys.positive),
            hamiltonian: h0,
            velocity: None,
        });
    }
    directions.extend(constraints);
    if directions.is_empty() {
        return Err(Error::InvalidSystem(
            "no Hamilton-Jacobi equation: the Hamiltonian vanishes and there are no constraints"
                .into(),
        ));
    }
    let evolution = directions
        .iter()
        .position(Direction::is_canonical)
        .or_else(|| {
            directions.iter().position(|d| {
                d.velocity
                    .as_ref()
                    .is_some_and(|v| sys.positive.contains(v))
            })
        })
        .unwrap_or(0);

    Ok(HjpdeSet {
        system: sys,
        pairs,
        directions,
        canonical_hamiltonian: h0,
        vanishing,
        evolution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn cfg() -> ProbeConfig {
        ProbeConfig::default()
    }

    fn oscillator() -> LagrangianSystem {
        LagrangianSystem::new("oscillator", &["q"], parse("qdot^2/2 - V(q)").unwrap()).unwrap()
    }

    #[test]
    fn parametrized_oscillator_constraint() {
        let p = legendre::parametrize(&oscillator(), &cfg()).unwrap();
        let set = build_constraints(&p, &cfg()).unwrap();
        assert_eq!(set.directions.len(), 1);
        let d = &set.directions[0];
        assert_eq!(d.label, "t");
        assert_eq!(d.expression, parse("p_t + p_q^2/2 + V(q)").unwrap());
        assert_eq!(set.vanishing, ZeroVerdict::SymbolicallyZero);
        assert!(set.canonical_hamiltonian.is_zero_literal());
        assert_eq!(set.evolution_direction().parameter, "t");
        assert_eq!(
            set.pairs,
            vec![PhasePair {
                coordinate: "q".into(),
                momentum: "p_q".into()
            }]
        );
    }

    #[test]
    fn regular_oscillator_has_nonvanishing_hamiltonian() {
        let set = build_constraints(&oscillator(), &cfg()).unwrap();
        assert_eq!(set.canonical_hamiltonian, parse("p_q^2/2 + V(q)").unwrap());
        assert!(!set.vanishing.is_zero());
        let d = set.evolution_direction();
        assert!(d.is_canonical());
        assert_eq!((d.label.as_str(), d.parameter.as_str()), ("0", "t"));
        assert_eq!(d.expression, parse("p_t + p_q^2/2 + V(q)").unwrap());
    }

    #[test]
    fn unit_coefficient_and_no_constrained_momenta() {
        let p = legendre::parametrize(
            &LagrangianSystem::new(
                "2d",
                &["x", "y"],
                parse("xdot^2/2 + ydot^2/2 + x*ydot - V(x, y)").unwrap(),
            )
            .unwrap(),
            &cfg(),
        )
        .unwrap();
        let set = build_constraints(&p, &cfg()).unwrap();
        assert!(set.vanishing.is_zero());
        for d in &set.directions {
            assert_eq!(d.expression.differentiate(&d.momentum), Expr::one());
            for other in &set.directions {
                assert!(!d.hamiltonian.contains_symbol(&other.momentum));
            }
        }
    }

    #[test]
    fn synthetic_system_keeps_both_directions() {
        let s = LagrangianSystem::new(
            "synthetic",
            &["q1", "q2"],
            parse("q1dot^2/2 + q1*q2").unwrap(),
        )
        .unwrap();
        let set = build_constraints(&s, &cfg()).unwrap();
        let labels: Vec<&str> = set.directions.iter().map(|d| d.label.as_str()).collect();
        assert_eq!(labels, vec!["0", "2"]);
        assert_eq!(set.directions[1].expression, Expr::sym("p2"));
        assert_eq!(set.canonical_hamiltonian, parse("p1^2/2 - q1*q2").unwrap());
    }

    #[test]
    fn constraint_from_a_linear_velocity_term() {
        let s = LagrangianSystem::new(
            "s",
            &["x", "y"],
            parse("xdot^2/2 + y*xdot + ydot*x").unwrap(),
        )
        .unwrap();
        let set = build_constraints(&s, &cfg()).unwrap();
        assert_eq!(
            set.direction("y").unwrap().expression,
            parse("p_y - x").unwrap()
        );
    }
}

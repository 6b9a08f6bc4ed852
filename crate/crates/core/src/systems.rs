//! Registered systems: parametrized regular Lagrangians, the parametrized
//! oscillator and the relativistic particle with and without an external
//! field. Also the plain-text system file format.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::eom::PhaseState;
use crate::expr::{parse, parse_with, Expr, FunctionDef, ProbeConfig};
use crate::legendre::{parametrize, ClosedForms, LagrangianSystem};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    ParametrizedRegular,
    ParametrizedOscillator,
    RelativisticCharged,
    RelativisticFree,
}

impl TemplateId {
    pub const ALL: [TemplateId; 4] = [
        TemplateId::ParametrizedRegular,
        TemplateId::ParametrizedOscillator,
        TemplateId::RelativisticCharged,
        TemplateId::RelativisticFree,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::ParametrizedRegular => "parametrized_regular",
            TemplateId::ParametrizedOscillator => "parametrized_oscillator",
            TemplateId::RelativisticCharged => "relativistic_charged",
            TemplateId::RelativisticFree => "relativistic_free",
        }
    }

    /// Parameter names the template accepts.
    pub fn slots(self) -> &'static [&'static str] {
        match self {
            TemplateId::ParametrizedRegular => &["n", "m", "V"],
            TemplateId::ParametrizedOscillator => &["V"],
            TemplateId::RelativisticCharged => &["m", "c", "e", "A0", "A1", "A2", "A3"],
            TemplateId::RelativisticFree => &["m", "c"],
        }
    }

    /// Hessian rank of the instantiated Lagrangian.
    pub fn expected_rank(self, params: &BTreeMap<String, String>) -> Result<usize> {
        Ok(match self {
            TemplateId::ParametrizedRegular => dimension(params)?,
            TemplateId::ParametrizedOscillator => 1,
            TemplateId::RelativisticCharged | TemplateId::RelativisticFree => 3,
        })
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TemplateId::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::UnknownTemplate(s.to_string()))
    }
}

/// A template id with its raw parameter strings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Template {
    pub id: TemplateId,
    pub params: BTreeMap<String, String>,
}

impl Template {
    pub fn new(id: TemplateId) -> Self {
        Template {
            id,
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: &str) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    /// Parses `template:<id>?k=v&k=v`. The `template:` prefix is optional.
    pub fn parse_uri(uri: &str) -> Result<Template> {
        let body = uri.strip_prefix("template:").unwrap_or(uri);
        let (id, query) = match body.split_once('?') {
            Some((id, q)) => (id, q),
            None => (body, ""),
        };
        let mut t = Template::new(id.trim().parse()?);
        for pair in query.split('&').filter(|s| !s.trim().is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| Error::InvalidParameter {
                    name: pair.to_string(),
                    reason: "expected key=value".into(),
                })?;
            t.params.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(t)
    }

    pub fn instantiate(&self) -> Result<LagrangianSystem> {
        instantiate(self.id, &self.params)
    }

    pub fn reference_solution(
        &self,
        names: &[String],
        initial: &PhaseState,
        t: f64,
    ) -> Result<PhaseState> {
        reference_solution(self.id, &self.params, names, initial, t)
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "template:{}", self.id)?;
        for (i, (k, v)) in self.params.iter().enumerate() {
            write!(f, "{}{k}={v}", if i == 0 { '?' } else { '&' })?;
        }
        Ok(())
    }
}

fn check_slots(id: TemplateId, params: &BTreeMap<String, String>) -> Result<()> {
    match params.keys().find(|k| !id.slots().contains(&k.as_str())) {
        Some(k) => Err(Error::InvalidParameter {
            name: k.clone(),
            reason: format!("{id} accepts {}", id.slots().join(", ")),
        }),
        None => Ok(()),
    }
}

fn number(
    params: &BTreeMap<String, String>,
    name: &str,
    default: f64,
    positive: bool,
) -> Result<f64> {
    let Some(raw) = params.get(name) else {
        return Ok(default);
    };
    let v: f64 = raw.parse().map_err(|_| Error::InvalidParameter {
        name: name.into(),
        reason: format!("`{raw}` is not a number"),
    })?;
    if !v.is_finite() || (positive && v <= 0.0) {
        return Err(Error::InvalidParameter {
            name: name.into(),
            reason: format!(
                "must be {}, got {v}",
                if positive { "positive" } else { "finite" }
            ),
        });
    }
    Ok(v)
}

fn dimension(params: &BTreeMap<String, String>) -> Result<usize> {
    match params.get("n") {
        None => Ok(1),
        Some(raw) => match raw.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Error::InvalidParameter {
                name: "n".into(),
                reason: format!("`{raw}` is not a positive integer"),
            }),
        },
    }
}

/// Parses a function body given as a parameter; it may only use `args`.
fn body(params: &BTreeMap<String, String>, name: &str, args: &[String]) -> Result<Option<Expr>> {
    let Some(raw) = params.get(name) else {
        return Ok(None);
    };
    let e = parse(raw)?;
    if let Some(s) = e.symbols().into_iter().find(|s| !args.contains(s)) {
        return Err(Error::InvalidParameter {
            name: name.into(),
            reason: format!("`{raw}` uses `{s}`; allowed: {}", args.join(", ")),
        });
    }
    if let Some(f) = e.functions().into_keys().next() {
        return Err(Error::InvalidParameter {
            name: name.into(),
            reason: format!("`{raw}` applies the undefined function `{f}`"),
        });
    }
    Ok(Some(e))
}

fn apply(name: &str, args: &[String]) -> Expr {
    Expr::apply(name, args.iter().map(|a| Expr::sym(a.clone())).collect())
}

/// Builds the Lagrangian of a registered system.
pub fn instantiate(id: TemplateId, params: &BTreeMap<String, String>) -> Result<LagrangianSystem> {
    check_slots(id, params)?;
    let config = ProbeConfig::default();
    match id {
        TemplateId::ParametrizedOscillator => {
            let args = vec!["q".to_string()];
            let v = body(params, "V", &args)?;
            let mut regular =
                LagrangianSystem::new("oscillator", &["q"], parse("qdot^2/2 - V(q)")?)?;
            if let Some(v) = v {
                regular.functions.define("V", FunctionDef::new(&["q"], v));
            }
            let mut sys = parametrize(&regular, &config)?;
            sys.name = id.to_string();
            Ok(sys)
        }
        TemplateId::ParametrizedRegular => {
            let n = dimension(params)?;
            let m = number(params, "m", 1.0, true)?;
            let coords: Vec<String> = (1..=n).map(|i| format!("q{i}")).collect();
            let kinetic: Vec<Expr> = coords
                .iter()
                .map(|q| Expr::sym("m") * Expr::sym(format!("{q}dot")).powi(2) / Expr::num(2.0))
                .collect();
            let l = Expr::sum(kinetic) - apply("V", &coords);
            let refs: Vec<&str> = coords.iter().map(String::as_str).collect();
            let mut regular = LagrangianSystem::new("regular", &refs, l.simplify())?
                .with_positive(["m"])
                .with_parameter("m", m);
            if let Some(v) = body(params, "V", &coords)? {
                regular.functions.define("V", FunctionDef::new(&refs, v));
            }
            let mut sys = parametrize(&regular, &config)?;
            sys.name = id.to_string();
            Ok(sys)
        }
        TemplateId::RelativisticCharged | TemplateId::RelativisticFree => relativistic(id, params),
    }
}

fn relativistic(id: TemplateId, params: &BTreeMap<String, String>) -> Result<LagrangianSystem> {
    let charged = id == TemplateId::RelativisticCharged;
    let m = number(params, "m", 1.0, true)?;
    let c = number(params, "c", 1.0, true)?;
    let coords: Vec<String> = (0..4).map(|i| format!("q{i}")).collect();
    let refs: Vec<&str> = coords.iter().map(String::as_str).collect();
    let dot = |i: usize| Expr::sym(format!("q{i}dot"));
    let (mm, cc) = (Expr::sym("m"), Expr::sym("c"));

    let interval = dot(0).powi(2) - Expr::sum((1..4).map(|i| dot(i).powi(2)).collect());
    let mut l = mm.clone() * cc.clone() * interval.sqrt();
    // Field coupling e/c * A_mu, zero for the free particle.
    let coupling = |i: usize| -> Expr {
        if charged {
            Expr::sym("e") / cc.clone() * apply(&format!("A{i}"), &coords)
        } else {
            Expr::zero()
        }
    };
    if charged {
        l = l + Expr::sum((0..4).map(|i| dot(i) * coupling(i)).collect());
    }
    let l = (-l).simplify();

    let k: Vec<Expr> = (1..4)
        .map(|i| Expr::sym(format!("p{i}")) + coupling(i))
        .collect();
    let energy = Expr::sum(
        k.iter()
            .map(|ki| ki.clone().powi(2))
            .chain([(mm * cc.clone()).powi(2)])
            .collect(),
    )
    .sqrt();
    let velocities = (1..4)
        .map(|i| {
            (
                format!("q{i}dot"),
                (k[i - 1].clone() * dot(0) / energy.clone()).simplify(),
            )
        })
        .collect();
    let h0 = (energy + coupling(0)).simplify();

    let mut sys = LagrangianSystem::new(id.to_string(), &refs, l)?
        .with_positive(["q0dot", "m", "c"])
        .with_parameter("m", m)
        .with_parameter("c", c);
    if charged {
        sys = sys.with_parameter("e", number(params, "e", 1.0, false)?);
        for i in 0..4 {
            let name = format!("A{i}");
            if let Some(b) = body(params, &name, &coords)? {
                sys.functions.define(name, FunctionDef::new(&refs, b));
            }
        }
    }
    sys.closed_forms = Some(ClosedForms {
        velocities,
        constraint_hamiltonians: BTreeMap::from([("0".to_string(), h0)]),
    });
    Ok(sys)
}

/// Exact state at `t` for systems with a known solution: the free
/// relativistic particle and the oscillator with `V = q^2/2`. `names`
/// gives the layout of `values`, as in [`crate::eom::Dynamics::names`].
pub fn reference_solution(
    id: TemplateId,
    params: &BTreeMap<String, String>,
    names: &[String],
    initial: &PhaseState,
    t: f64,
) -> Result<PhaseState> {
    check_slots(id, params)?;
    if t == initial.time {
        return Ok(initial.clone());
    }
    let get = |name: &str| -> Result<usize> {
        names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Config(format!("state layout has no `{name}`")))
    };
    let mut out = initial.clone();
    out.time = t;
    let s = t - initial.time;
    match id {
        TemplateId::RelativisticFree => {
            let m = number(params, "m", 1.0, true)?;
            let c = number(params, "c", 1.0, true)?;
            let p: Vec<f64> = (1..4)
                .map(|i| Ok(initial.values[get(&format!("p{i}"))?]))
                .collect::<Result<_>>()?;
            let energy = (p.iter().map(|x| x * x).sum::<f64>() + (m * c).powi(2)).sqrt();
            for (i, pi) in p.iter().enumerate() {
                out.values[get(&format!("q{}", i + 1))?] += pi / energy * s;
            }
            out.values[get("p0")?] = -energy;
            out.action = initial.action - (m * c).powi(2) / energy * s;
        }
        TemplateId::ParametrizedOscillator if harmonic(params)? => {
            let (iq, ip) = (get("q")?, get("p_q")?);
            let (q0, p0) = (initial.values[iq], initial.values[ip]);
            let (sin, cos) = s.sin_cos();
            out.values[iq] = q0 * cos + p0 * sin;
            out.values[ip] = -q0 * sin + p0 * cos;
            out.values[get("p_t")?] = -(p0 * p0 + q0 * q0) / 2.0;
            let (sin2, cos2) = (2.0 * s).sin_cos();
            out.action =
                initial.action + 0.5 * ((p0 * p0 - q0 * q0) * sin2 / 2.0 + q0 * p0 * (cos2 - 1.0));
        }
        _ => {
            return Err(Error::NoClosedForm(
                Template {
                    id,
                    params: params.clone(),
                }
                .to_string(),
            ))
        }
    }
    Ok(out)
}

fn harmonic(params: &BTreeMap<String, String>) -> Result<bool> {
    match body(params, "V", &["q".to_string()])? {
        Some(v) => Ok(v.simplify() == parse("q^2/2")?),
        None => Ok(false),
    }
}

/// Parses a system file. Keys take `key = value` or `key: value`:
///
/// ```text
/// # comments start with '#'
/// coordinates = t, q
/// lagrangian = tdot*((qprime/tdot)^2/2 - V(q))
/// positive = tdot
/// functions = V
/// ```
///
/// Other keys: `name`, `velocities` (overrides the derived velocity names),
/// `parameters = m = 1, c = 2` and `parametrize = true|false`. A line
/// `f(x, y) = body` defines a function. Once `functions` is given, calls to
/// anything neither listed there nor defined are rejected.
///
/// `template = none|<id>[?k=v&...]` selects a registered system instead;
/// `parameters` then fill its slots.
pub fn parse_system_file(text: &str) -> Result<LagrangianSystem> {
    const KEYS: [&str; 9] = [
        "name",
        "coordinates",
        "velocities",
        "lagrangian",
        "positive",
        "functions",
        "parameters",
        "parametrize",
        "template",
    ];
    let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
    let mut definitions = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |why: &str| Error::Config(format!("line {}: {why}: `{line}`", n + 1));
        let split = line
            .find([':', '='])
            .ok_or_else(|| bad("expected `key = value`"))?;
        let (lhs, rhs) = (line[..split].trim(), line[split + 1..].trim());
        let identifier = lhs.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if identifier && !lhs.is_empty() {
            if !KEYS.contains(&lhs) {
                return Err(bad("unknown key"));
            }
            if fields.insert(lhs, rhs).is_some() {
                return Err(bad("repeated key"));
            }
            continue;
        }
        let (name, args) = lhs
            .strip_suffix(')')
            .and_then(|s| s.split_once('('))
            .filter(|_| line.as_bytes()[split] == b'=')
            .ok_or_else(|| bad("expected `key = value` or `name(args) = body`"))?;
        let args: Vec<String> = args
            .split(',')
            .map(|a| a.trim().to_string())
            .filter(|a| !a.is_empty())
            .collect();
        definitions.push((name.trim().to_string(), args, parse(rhs)?));
    }
    let list = |key: &str| -> Vec<&str> {
        fields
            .get(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .collect()
            })
            .unwrap_or_default()
    };
    let mut parameters = Vec::new();
    for item in list("parameters") {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("parameter `{item}` needs a value")))?;
        parameters.push((k.trim(), v.trim()));
    }

    match fields.get("template").copied() {
        None | Some("none") => {}
        Some(uri) => {
            if let Some(k) = ["coordinates", "velocities", "lagrangian"]
                .into_iter()
                .find(|k| fields.contains_key(k))
            {
                return Err(Error::Config(format!(
                    "`{k}` cannot be combined with a template"
                )));
            }
            let mut t = Template::parse_uri(uri)?;
            for (k, v) in parameters {
                t.params.insert(k.to_string(), v.to_string());
            }
            let mut sys = t.instantiate()?;
            if let Some(name) = fields.get("name") {
                sys.name = name.to_string();
            }
            return Ok(sys);
        }
    }

    let coordinates = list("coordinates");
    let source = fields
        .get("lagrangian")
        .ok_or_else(|| Error::Config("missing `lagrangian`".into()))?;
    let lagrangian = if fields.contains_key("functions") {
        let mut known: BTreeSet<String> = list("functions").into_iter().map(String::from).collect();
        known.extend(definitions.iter().map(|(name, _, _)| name.clone()));
        parse_with(source, &known)?
    } else {
        parse(source)?
    };
    let name = fields.get("name").copied().unwrap_or("system");
    let mut sys = match fields.get("velocities") {
        Some(_) => {
            LagrangianSystem::with_velocities(name, &coordinates, &list("velocities"), lagrangian)?
        }
        None => LagrangianSystem::new(name, &coordinates, lagrangian)?,
    };
    sys = sys.with_positive(list("positive"));
    for (k, v) in parameters {
        let value: f64 = v.parse().map_err(|_| Error::InvalidParameter {
            name: k.into(),
            reason: format!("`{v}` is not a number"),
        })?;
        sys = sys.with_parameter(k, value);
    }
    for (name, args, body) in definitions {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        sys.functions.define(name, FunctionDef::new(&refs, body));
    }
    match fields.get("parametrize").copied() {
        None | Some("false") => Ok(sys),
        Some("true") => parametrize(&sys, &ProbeConfig::default()),
        Some(other) => Err(Error::Config(format!(
            "parametrize: expected true or false, got `{other}`"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hjpde::build_constraints;

    fn params(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn uri_round_trip() {
        let uri = "template:relativistic_charged?m=1&c=1&e=1&A0=-q1&A1=0&A2=0&A3=0";
        let t = Template::parse_uri(uri).unwrap();
        assert_eq!(t.id, TemplateId::RelativisticCharged);
        assert_eq!(t.params["A0"], "-q1");
        assert_eq!(t.params.len(), 7);
        assert_eq!(Template::parse_uri(&t.to_string()).unwrap(), t);
        assert!(matches!(
            Template::parse_uri("template:pendulum"),
            Err(Error::UnknownTemplate(_))
        ));
        assert!(matches!(
            Template::parse_uri("template:relativistic_free?m"),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn invalid_parameters() {
        for (id, p) in [
            (TemplateId::RelativisticFree, params(&[("m", "0")])),
            (TemplateId::RelativisticFree, params(&[("c", "-1")])),
            (TemplateId::RelativisticFree, params(&[("m", "heavy")])),
            (TemplateId::RelativisticFree, params(&[("e", "1")])),
            (TemplateId::ParametrizedRegular, params(&[("n", "0")])),
            (TemplateId::ParametrizedOscillator, params(&[("V", "x^2")])),
        ] {
            assert!(
                matches!(instantiate(id, &p), Err(Error::InvalidParameter { .. })),
                "{id} {p:?}"
            );
        }
    }

    #[test]
    fn oscillator_template() {
        let sys = instantiate(
            TemplateId::ParametrizedOscillator,
            &params(&[("V", "q^2/2")]),
        )
        .unwrap();
        assert_eq!(sys.coordinates, ["t", "q"]);
        assert_eq!(sys.velocities, ["tdot", "qprime"]);
        let set = build_constraints(&sys, &ProbeConfig::default()).unwrap();
        assert_eq!(
            set.directions[0].expression,
            parse("p_t + p_q^2/2 + V(q)").unwrap()
        );
        assert!(sys.functions.get("V").is_some());
    }

    #[test]
    fn regular_template_dimension() {
        let sys = instantiate(TemplateId::ParametrizedRegular, &params(&[("n", "2")])).unwrap();
        assert_eq!(sys.coordinates, ["t", "q1", "q2"]);
        let set = build_constraints(&sys, &ProbeConfig::default()).unwrap();
        assert_eq!(
            set.directions[0].expression,
            parse("p_t + p1^2/(2*m) + p2^2/(2*m) + V(q1, q2)")
                .unwrap()
                .simplify()
        );
    }

    #[test]
    fn free_particle_constraint() {
        let sys = instantiate(TemplateId::RelativisticFree, &BTreeMap::new()).unwrap();
        let set = build_constraints(&sys, &ProbeConfig::default()).unwrap();
        assert_eq!(set.directions.len(), 1);
        let d = &set.directions[0];
        assert_eq!(d.label, "0");
        let bound = d.expression.substitute(&BTreeMap::from([
            ("m".to_string(), Expr::one()),
            ("c".to_string(), Expr::one()),
        ]));
        assert_eq!(
            bound.simplify(),
            parse("p0 + sqrt(p1^2 + p2^2 + p3^2 + 1)").unwrap()
        );
    }

    #[test]
    fn system_file() {
        let text = "# oscillator\ncoordinates: q\nlagrangian: qdot^2/2 - V(q)\nV(q) = q^2/2\nparametrize: true\n";
        let sys = parse_system_file(text).unwrap();
        assert_eq!(sys.coordinates, ["t", "q"]);
        assert_eq!(
            sys.functions.get("V").unwrap().body,
            parse("q^2/2").unwrap()
        );

        let t = parse_system_file("template: relativistic_free?m=2\n").unwrap();
        assert_eq!(t.parameters["m"], 2.0);

        let p = parse_system_file(
            "coordinates: x\nlagrangian: m*xdot^2/2\nparameters: m = 3\npositive: m",
        )
        .unwrap();
        assert_eq!(p.parameters["m"], 3.0);
        assert!(p.positive.contains("m"));

        assert!(parse_system_file("coordinates: x").is_err());
        assert!(parse_system_file("lagrangian: xdot^2\nmass: 1").is_err());
        assert!(parse_system_file("lagrangian: xdot^2\nnonsense").is_err());

        let eq = "coordinates = t, q\nlagrangian = tdot*( (qprime/tdot)^2/2 - V(q) )\n\
                  positive = tdot\nfunctions = V\ntemplate = none\n";
        let sys = parse_system_file(eq).unwrap();
        assert_eq!(sys.velocities, ["tdot", "qprime"]);
        assert!(sys.positive.contains("tdot"));
        assert!(sys.functions.get("V").is_none());
        let undeclared = eq.replace("V(q)", "W(q)");
        assert!(parse_system_file(&undeclared).is_err());

        let t =
            parse_system_file("template = relativistic_free\nparameters = m = 2, c = 3\n").unwrap();
        assert_eq!((t.parameters["m"], t.parameters["c"]), (2.0, 3.0));
        assert!(parse_system_file("template = relativistic_free\nlagrangian = x").is_err());
    }

    #[test]
    fn free_reference_solution() {
        let names: Vec<String> = ["q1", "q2", "q3", "p1", "p2", "p3", "p0"]
            .map(String::from)
            .to_vec();
        let start = PhaseState {
            time: 0.0,
            values: vec![0.0, 0.0, 0.0, 3.0, 0.0, 0.0, -10f64.sqrt()],
            action: 0.0,
        };
        let p = BTreeMap::new();
        let s = reference_solution(TemplateId::RelativisticFree, &p, &names, &start, 10.0).unwrap();
        assert!((s.values[0] - 9.486832980505138).abs() < 1e-14);
        assert_eq!(
            reference_solution(TemplateId::RelativisticFree, &p, &names, &start, 0.0).unwrap(),
            start
        );
    }

    #[test]
    fn oscillator_reference_solution() {
        let names: Vec<String> = ["q", "p_q", "p_t"].map(String::from).to_vec();
        let start = PhaseState {
            time: 0.0,
            values: vec![1.0, 0.0, -0.5],
            action: 0.0,
        };
        let harmonic = params(&[("V", "q^2/2")]);
        let id = TemplateId::ParametrizedOscillator;
        let s =
            reference_solution(id, &harmonic, &names, &start, std::f64::consts::FRAC_PI_2).unwrap();
        assert!(s.values[0].abs() < 1e-15 && (s.values[1] + 1.0).abs() < 1e-15);
        let full =
            reference_solution(id, &harmonic, &names, &start, std::f64::consts::TAU).unwrap();
        assert!(full.action.abs() < 1e-15);
        assert!(matches!(
            reference_solution(id, &BTreeMap::new(), &names, &start, 1.0),
            Err(Error::NoClosedForm(_))
        ));
        assert!(matches!(
            reference_solution(
                TemplateId::RelativisticCharged,
                &BTreeMap::new(),
                &names,
                &start,
                1.0
            ),
            Err(Error::NoClosedForm(_))
        ));
    }
}

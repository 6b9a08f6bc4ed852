use std::collections::BTreeMap;

use super::{Expr, ExprError, LN};

/// Concrete definition of a named function: `name(params) = body`.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionDef {
    pub params: Vec<String>,
    pub body: Expr,
}

impl FunctionDef {
    pub fn new(params: &[&str], body: Expr) -> Self {
        FunctionDef {
            params: params.iter().map(|p| p.to_string()).collect(),
            body,
        }
    }

    /// Body differentiated at the given parameter positions, with the
    /// parameters replaced by `args` in one simultaneous pass.
    fn expand(&self, wrt: &[usize], args: &[Expr]) -> Expr {
        let body = wrt.iter().fold(self.body.clone(), |acc, &i| {
            acc.differentiate(&self.params[i])
        });
        let map = self
            .params
            .iter()
            .cloned()
            .zip(args.iter().cloned())
            .collect();
        body.substitute(&map)
    }
}

/// Declared named functions, each optionally carrying a definition.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FunctionTable {
    entries: BTreeMap<String, Option<FunctionDef>>,
}

impl FunctionTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, name: impl Into<String>) {
        self.entries.entry(name.into()).or_insert(None);
    }

    pub fn define(&mut self, name: impl Into<String>, def: FunctionDef) {
        self.entries.insert(name.into(), Some(def));
    }

    pub fn is_declared(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn get(&self, name: &str) -> Option<&FunctionDef> {
        self.entries.get(name).and_then(|d| d.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Replaces every defined function application by its body. Functions
    /// without a definition are left opaque.
    pub fn inline_defined(&self, e: &Expr) -> Expr {
        e.rebuild(&mut |node| match self.expand_node(node, false) {
            Ok(Some(x)) => Some(x),
            _ => None,
        })
    }

    /// Like [`inline_defined`](Self::inline_defined) but fails on any
    /// application that has no definition.
    pub fn inline(&self, e: &Expr) -> Result<Expr, ExprError> {
        let mut failure = None;
        let out = e.rebuild(&mut |node| match self.expand_node(node, true) {
            Ok(Some(x)) => Some(x),
            Ok(None) => None,
            Err(err) => {
                failure.get_or_insert(err);
                Some(Expr::zero())
            }
        });
        match failure {
            Some(err) => Err(err),
            None => Ok(out),
        }
    }

    fn expand_node(&self, node: &Expr, strict: bool) -> Result<Option<Expr>, ExprError> {
        let (name, wrt, args) = match node {
            Expr::Apply { name, args } if name != LN => (name, &[][..], args),
            Expr::Deriv { name, wrt, args } => (name, &wrt[..], args),
            _ => return Ok(None),
        };
        let Some(def) = self.get(name) else {
            return if strict {
                Err(ExprError::UndefinedFunction(name.clone()))
            } else {
                Ok(None)
            };
        };
        if def.params.len() != args.len() {
            return Err(ExprError::Arity {
                name: name.clone(),
                expected: def.params.len(),
                got: args.len(),
            });
        }
        if strict {
            let args: Vec<Expr> = args
                .iter()
                .map(|a| self.inline(a))
                .collect::<Result<_, _>>()?;
            Ok(Some(self.inline(&def.expand(wrt, &args))?))
        } else {
            let args: Vec<Expr> = args.iter().map(|a| self.inline_defined(a)).collect();
            Ok(Some(self.inline_defined(&def.expand(wrt, &args))))
        }
    }
}

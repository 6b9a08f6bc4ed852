use std::collections::{BTreeMap, BTreeSet};

use super::Expr;

/// Integer powers of sums up to this exponent are expanded.
const MAX_EXPAND: f64 = 4.0;

pub(super) fn normalize(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

fn is_int(k: f64) -> bool {
    k.fract() == 0.0 && k.abs() < 1e9
}

/// Coefficients that cancel to rounding noise are dropped.
fn negligible(c: f64, scale: f64) -> bool {
    c == 0.0 || c.abs() <= 8.0 * f64::EPSILON * scale
}

fn split_coeff(term: Expr) -> (f64, Expr) {
    match term {
        Expr::Product(mut fs) => match fs.first() {
            Some(Expr::Const(c)) => {
                let c = *c;
                fs.remove(0);
                let mono = if fs.len() == 1 {
                    fs.pop().unwrap()
                } else {
                    Expr::Product(fs)
                };
                (c, mono)
            }
            _ => (1.0, Expr::Product(fs)),
        },
        other => (1.0, other),
    }
}

fn scale_mono(c: f64, mono: Expr) -> Expr {
    if c == 1.0 {
        return mono;
    }
    match mono {
        Expr::Product(mut fs) => {
            fs.insert(0, Expr::Const(c));
            Expr::Product(fs)
        }
        other => Expr::Product(vec![Expr::Const(c), other]),
    }
}

fn base_of(e: &Expr) -> &Expr {
    match e {
        Expr::Pow(b, _) => b,
        other => other,
    }
}

/// Canonicalizing constructors. Inputs are assumed canonical; outputs are.
pub(super) struct Canon<'a> {
    positive: Option<&'a BTreeSet<String>>,
}

impl<'a> Canon<'a> {
    pub(super) fn plain() -> Canon<'static> {
        Canon { positive: None }
    }

    pub(super) fn new(positive: &'a BTreeSet<String>) -> Canon<'a> {
        Canon {
            positive: Some(positive),
        }
    }

    fn is_positive(&self, e: &Expr) -> bool {
        match (e, self.positive) {
            (Expr::Sym(s), Some(set)) => set.contains(s),
            _ => false,
        }
    }

    pub(super) fn simplify(&self, e: &Expr) -> Expr {
        match e {
            Expr::Const(c) => Expr::Const(normalize(*c)),
            Expr::Sym(_) => e.clone(),
            Expr::Sum(xs) => self.sum(xs.iter().map(|x| self.simplify(x)).collect()),
            Expr::Product(xs) => self.product(xs.iter().map(|x| self.simplify(x)).collect()),
            Expr::Pow(b, x) => self.pow(self.simplify(b), self.simplify(x)),
            Expr::Neg(x) => self.product(vec![Expr::Const(-1.0), self.simplify(x)]),
            Expr::Sqrt(x) => self.sqrt(self.simplify(x)),
            Expr::Apply { name, args } => Expr::Apply {
                name: name.clone(),
                args: args.iter().map(|x| self.simplify(x)).collect(),
            },
            Expr::Deriv { name, wrt, args } => {
                let mut wrt = wrt.clone();
                wrt.sort_unstable();
                Expr::Deriv {
                    name: name.clone(),
                    wrt,
                    args: args.iter().map(|x| self.simplify(x)).collect(),
                }
            }
        }
    }

    pub(super) fn sum(&self, terms: Vec<Expr>) -> Expr {
        let mut constant = 0.0;
        let mut constant_scale = 0.0;
        let mut groups: BTreeMap<Expr, (f64, f64)> = BTreeMap::new();
        let mut stack = terms;
        while let Some(t) = stack.pop() {
            match t {
                Expr::Sum(ts) => stack.extend(ts),
                Expr::Const(c) => {
                    constant += c;
                    constant_scale += c.abs();
                }
                other => {
                    let (c, mono) = split_coeff(other);
                    let entry = groups.entry(mono).or_insert((0.0, 0.0));
                    entry.0 += c;
                    entry.1 += c.abs();
                }
            }
        }
        let mut out = Vec::with_capacity(groups.len() + 1);
        if !negligible(constant, constant_scale) {
            out.push(Expr::Const(normalize(constant)));
        }
        for (mono, (c, scale)) in groups {
            if !negligible(c, scale) {
                out.push(scale_mono(c, mono));
            }
        }
        match out.len() {
            0 => Expr::Const(0.0),
            1 => out.pop().unwrap(),
            _ => Expr::Sum(out),
        }
    }

    pub(super) fn product(&self, factors: Vec<Expr>) -> Expr {
        let mut coeff = 1.0;
        let mut rest = Vec::with_capacity(factors.len());
        let mut stack = factors;
        while let Some(f) = stack.pop() {
            match f {
                Expr::Product(fs) => stack.extend(fs),
                Expr::Const(c) => coeff *= c,
                other => rest.push(other),
            }
        }
        if coeff == 0.0 {
            return Expr::Const(0.0);
        }
        if let Some(i) = rest.iter().position(|f| matches!(f, Expr::Sum(_))) {
            let Expr::Sum(terms) = rest.swap_remove(i) else {
                unreachable!()
            };
            let distributed = terms
                .into_iter()
                .map(|t| {
                    let mut fs = rest.clone();
                    fs.push(Expr::Const(coeff));
                    fs.push(t);
                    self.product(fs)
                })
                .collect();
            return self.sum(distributed);
        }

        let mut groups: BTreeMap<Expr, Vec<Expr>> = BTreeMap::new();
        for f in rest {
            let (b, x) = match f {
                Expr::Pow(b, x) => (*b, *x),
                other => (other, Expr::Const(1.0)),
            };
            groups.entry(b).or_default().push(x);
        }
        let mut out: Vec<Expr> = Vec::with_capacity(groups.len());
        let mut again = false;
        for (b, mut xs) in groups {
            let x = if xs.len() == 1 {
                xs.pop().unwrap()
            } else {
                self.sum(xs)
            };
            match self.pow(b, x) {
                Expr::Const(c) => coeff *= c,
                f @ (Expr::Product(_) | Expr::Sum(_)) => {
                    again = true;
                    out.push(f);
                }
                f => out.push(f),
            }
        }
        if !again {
            out.sort();
            again = out.windows(2).any(|w| base_of(&w[0]) == base_of(&w[1]));
        }
        if again {
            out.push(Expr::Const(coeff));
            return self.product(out);
        }
        if coeff == 0.0 {
            return Expr::Const(0.0);
        }
        if out.is_empty() {
            return Expr::Const(normalize(coeff));
        }
        if coeff != 1.0 {
            out.insert(0, Expr::Const(coeff));
        }
        if out.len() == 1 {
            out.pop().unwrap()
        } else {
            Expr::Product(out)
        }
    }

    pub(super) fn pow(&self, base: Expr, exponent: Expr) -> Expr {
        if let Expr::Const(k) = exponent {
            if k == 0.0 {
                return Expr::Const(1.0);
            }
            if k == 1.0 {
                return base;
            }
            if let Expr::Const(b) = base {
                let v = if is_int(k) {
                    b.powi(k as i32)
                } else if b >= 0.0 {
                    b.powf(k)
                } else {
                    f64::NAN
                };
                if v.is_finite() {
                    return Expr::Const(normalize(v));
                }
            }
            if is_int(k) {
                match base {
                    Expr::Pow(b, x) => {
                        let x = self.product(vec![*x, Expr::Const(k)]);
                        return self.pow(*b, x);
                    }
                    Expr::Sqrt(inner) if k % 2.0 == 0.0 => {
                        return self.pow(*inner, Expr::Const(k / 2.0));
                    }
                    Expr::Product(fs) => {
                        let fs = fs
                            .into_iter()
                            .map(|f| self.pow(f, Expr::Const(k)))
                            .collect();
                        return self.product(fs);
                    }
                    Expr::Sum(ts) if (2.0..=MAX_EXPAND).contains(&k) => {
                        let copies = vec![Expr::Sum(ts); k as usize];
                        return self.product(copies);
                    }
                    other => return Expr::Pow(Box::new(other), Box::new(Expr::Const(k))),
                }
            }
        }
        if matches!(base, Expr::Const(b) if b == 1.0) {
            return Expr::Const(1.0);
        }
        Expr::Pow(Box::new(base), Box::new(exponent))
    }

    pub(super) fn sqrt(&self, x: Expr) -> Expr {
        match x {
            Expr::Const(c) if c >= 0.0 => Expr::Const(c.sqrt()),
            Expr::Pow(b, k) => match *k {
                Expr::Const(k) if is_int(k) && k % 2.0 == 0.0 && self.is_positive(&b) => {
                    self.pow(*b, Expr::Const(k / 2.0))
                }
                k => Expr::Sqrt(Box::new(Expr::Pow(b, Box::new(k)))),
            },
            other => Expr::Sqrt(Box::new(other)),
        }
    }
}

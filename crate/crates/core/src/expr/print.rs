//! Display in the parser's own syntax: `parse(&e.to_string())` reproduces a
//! canonical `e` exactly.

use std::fmt::{self, Display, Formatter, Write};

use super::Expr;

pub(super) fn fmt_num(c: f64) -> String {
    if c.fract() == 0.0 && c.abs() < 1e15 {
        format!("{}", c as i64)
    } else {
        // Debug gives the shortest round-tripping form and switches to
        // exponent notation for very large or small magnitudes.
        format!("{c:?}")
    }
}

/// Splits a term into sign, and the term with a non-negative coefficient.
fn negated(term: &Expr) -> Option<Expr> {
    match term {
        Expr::Const(c) if *c < 0.0 => Some(Expr::Const(-c)),
        Expr::Product(fs) => match fs.first() {
            Some(Expr::Const(c)) if *c < 0.0 => {
                let mut fs = fs.clone();
                if *c == -1.0 {
                    fs.remove(0);
                } else {
                    fs[0] = Expr::Const(-c);
                }
                Some(if fs.len() == 1 {
                    fs.pop().unwrap()
                } else {
                    Expr::Product(fs)
                })
            }
            _ => None,
        },
        Expr::Neg(x) => Some((**x).clone()),
        _ => None,
    }
}

fn is_atom(e: &Expr) -> bool {
    match e {
        Expr::Const(c) => *c >= 0.0,
        Expr::Sym(_) | Expr::Sqrt(_) | Expr::Apply { .. } | Expr::Deriv { .. } => true,
        _ => false,
    }
}

fn negative_const_exponent(e: &Expr) -> Option<(&Expr, f64)> {
    match e {
        Expr::Pow(b, x) => match **x {
            Expr::Const(k) if k < 0.0 => Some((b, -k)),
            _ => None,
        },
        _ => None,
    }
}

fn write_base(f: &mut Formatter<'_>, e: &Expr) -> fmt::Result {
    if is_atom(e) {
        write!(f, "{e}")
    } else {
        write!(f, "({e})")
    }
}

fn write_power(f: &mut Formatter<'_>, base: &Expr, k: &Expr) -> fmt::Result {
    write_base(f, base)?;
    match k {
        Expr::Const(c) if *c >= 0.0 => write!(f, "^{}", fmt_num(*c)),
        Expr::Sym(s) => write!(f, "^{s}"),
        other => write!(f, "^({other})"),
    }
}

/// A product factor in a numerator or denominator list.
fn write_factor(f: &mut Formatter<'_>, e: &Expr) -> fmt::Result {
    match e {
        Expr::Sum(_) | Expr::Neg(_) | Expr::Product(_) => write!(f, "({e})"),
        Expr::Const(c) if *c < 0.0 => write!(f, "({e})"),
        _ => write!(f, "{e}"),
    }
}

fn write_product(f: &mut Formatter<'_>, factors: &[Expr]) -> fmt::Result {
    let mut coeff = 1.0;
    let mut numer: Vec<&Expr> = Vec::new();
    let mut denom: Vec<(&Expr, f64)> = Vec::new();
    for x in factors {
        match x {
            Expr::Const(c) => coeff *= c,
            other => match negative_const_exponent(other) {
                Some(d) => denom.push(d),
                None => numer.push(other),
            },
        }
    }
    if coeff < 0.0 {
        f.write_char('-')?;
        coeff = -coeff;
    }
    let mut first = true;
    if coeff != 1.0 || numer.is_empty() {
        f.write_str(&fmt_num(coeff))?;
        first = false;
    }
    for x in numer {
        if !first {
            f.write_char('*')?;
        }
        write_factor(f, x)?;
        first = false;
    }
    if denom.is_empty() {
        return Ok(());
    }
    f.write_char('/')?;
    if denom.len() > 1 {
        f.write_char('(')?;
    }
    for (i, (b, k)) in denom.iter().enumerate() {
        if i > 0 {
            f.write_char('*')?;
        }
        if *k == 1.0 {
            write_factor(f, b)?;
        } else {
            write_power(f, b, &Expr::Const(*k))?;
        }
    }
    if denom.len() > 1 {
        f.write_char(')')?;
    }
    Ok(())
}

fn write_args(f: &mut Formatter<'_>, args: &[Expr]) -> fmt::Result {
    f.write_char('(')?;
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{a}")?;
    }
    f.write_char(')')
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => f.write_str(&fmt_num(*c)),
            Expr::Sym(s) => f.write_str(s),
            Expr::Sum(ts) => {
                for (i, t) in ts.iter().enumerate() {
                    match (i, negated(t)) {
                        (0, _) => write!(f, "{t}")?,
                        (_, Some(pos)) => write!(f, " - {}", Paren(&pos))?,
                        (_, None) => write!(f, " + {}", Paren(t))?,
                    }
                }
                Ok(())
            }
            Expr::Product(fs) => write_product(f, fs),
            Expr::Pow(b, k) => match negative_const_exponent(self) {
                Some((b, 1.0)) => {
                    f.write_str("1/")?;
                    write_factor(f, b)
                }
                Some((b, k)) => {
                    f.write_str("1/")?;
                    write_power(f, b, &Expr::Const(k))
                }
                None => write_power(f, b, k),
            },
            Expr::Neg(x) => {
                f.write_char('-')?;
                write_factor(f, x)
            }
            Expr::Sqrt(x) => write!(f, "sqrt({x})"),
            Expr::Apply { name, args } => {
                f.write_str(name)?;
                write_args(f, args)
            }
            Expr::Deriv { name, wrt, args } => {
                f.write_str(name)?;
                if args.len() == 1 {
                    for _ in wrt {
                        f.write_char('\'')?;
                    }
                } else {
                    f.write_str("'[")?;
                    for (i, p) in wrt.iter().enumerate() {
                        if i > 0 {
                            f.write_char(',')?;
                        }
                        write!(f, "{p}")?;
                    }
                    f.write_char(']')?;
                }
                write_args(f, args)
            }
        }
    }
}

/// Wraps sum terms that would otherwise re-associate (nested sums only
/// occur in non-canonical trees).
struct Paren<'a>(&'a Expr);

impl Display for Paren<'_> {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self.0 {
            Expr::Sum(_) => write!(f, "({})", self.0),
            other => write!(f, "{other}"),
        }
    }
}

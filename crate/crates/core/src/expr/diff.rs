use super::{Expr, LN};

impl Expr {
    /// Exact partial derivative with respect to the symbol `s`.
    ///
    /// Named functions differentiate to formal derivative nodes through the
    /// chain rule, e.g. `d/dq V(q^2) = 2*q*V'(q^2)`.
    pub fn differentiate(&self, s: &str) -> Expr {
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Sym(name) => {
                if name == s {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Expr::Sum(ts) => Expr::sum(ts.iter().map(|t| t.differentiate(s)).collect()),
            Expr::Product(fs) => {
                let mut terms = Vec::new();
                for (i, f) in fs.iter().enumerate() {
                    let df = f.differentiate(s);
                    if df.is_zero_literal() {
                        continue;
                    }
                    let mut factors = fs.clone();
                    factors[i] = df;
                    terms.push(Expr::product(factors));
                }
                Expr::sum(terms)
            }
            Expr::Pow(b, x) => {
                let db = b.differentiate(s);
                let dx = x.differentiate(s);
                let mut terms = Vec::new();
                if !db.is_zero_literal() {
                    let lowered = Expr::sum(vec![(**x).clone(), Expr::num(-1.0)]);
                    terms.push(Expr::product(vec![
                        (**x).clone(),
                        Expr::pow((**b).clone(), lowered),
                        db,
                    ]));
                }
                if !dx.is_zero_literal() {
                    terms.push(Expr::product(vec![
                        self.clone(),
                        Expr::apply(LN, vec![(**b).clone()]),
                        dx,
                    ]));
                }
                Expr::sum(terms)
            }
            Expr::Neg(x) => -x.differentiate(s),
            Expr::Sqrt(x) => {
                let dx = x.differentiate(s);
                if dx.is_zero_literal() {
                    return Expr::zero();
                }
                Expr::product(vec![Expr::num(0.5), dx, self.clone().recip()])
            }
            Expr::Apply { name, args } if name == LN => {
                let arg = &args[0];
                arg.differentiate(s) / arg.clone()
            }
            Expr::Apply { name, args } => chain(name, &[], args, s),
            Expr::Deriv { name, wrt, args } => chain(name, wrt, args, s),
        }
    }

    /// Mixed partial derivative, applied left to right.
    pub fn differentiate_all(&self, symbols: &[&str]) -> Expr {
        symbols
            .iter()
            .fold(self.clone(), |acc, s| acc.differentiate(s))
    }
}

fn chain(name: &str, wrt: &[usize], args: &[Expr], s: &str) -> Expr {
    let mut terms = Vec::new();
    for (i, arg) in args.iter().enumerate() {
        let inner = arg.differentiate(s);
        if inner.is_zero_literal() {
            continue;
        }
        let mut positions = wrt.to_vec();
        positions.push(i);
        positions.sort_unstable();
        let outer = Expr::Deriv {
            name: name.to_string(),
            wrt: positions,
            args: args.to_vec(),
        };
        terms.push(Expr::product(vec![outer, inner]));
    }
    Expr::sum(terms)
}

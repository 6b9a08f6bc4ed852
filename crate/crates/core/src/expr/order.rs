//! Total order on expressions. Canonical sums and products sort their
//! children with it, so structural equality of canonical forms is
//! order-independent.
//!
//! A power `b^e` sorts next to its base `b` (it compares as the pair
//! `(b, e)`, a bare `x` as `(x, 1)`), which keeps `p`, `p^2`, `p^3` adjacent.

use std::cmp::Ordering;
use std::hash::{Hash, Hasher};

use super::Expr;

fn rank(e: &Expr) -> u8 {
    match e {
        Expr::Const(_) => 0,
        Expr::Sym(_) => 1,
        Expr::Apply { .. } => 2,
        Expr::Deriv { .. } => 3,
        Expr::Sqrt(_) => 4,
        Expr::Sum(_) => 5,
        Expr::Product(_) => 6,
        Expr::Neg(_) => 7,
        Expr::Pow(..) => 8,
    }
}

const ONE: Expr = Expr::Const(1.0);

fn split_pow(e: &Expr) -> (&Expr, &Expr) {
    match e {
        Expr::Pow(b, x) => (b, x),
        other => (other, &ONE),
    }
}

fn cmp_slices(a: &[Expr], b: &[Expr]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match compare(x, y) {
            Ordering::Equal => {}
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

pub(super) fn compare(a: &Expr, b: &Expr) -> Ordering {
    if matches!(a, Expr::Pow(..)) || matches!(b, Expr::Pow(..)) {
        let (ab, ae) = split_pow(a);
        let (bb, be) = split_pow(b);
        return compare(ab, bb).then_with(|| compare(ae, be));
    }
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => x.total_cmp(y),
        (Expr::Sym(x), Expr::Sym(y)) => x.cmp(y),
        (Expr::Apply { name: n1, args: a1 }, Expr::Apply { name: n2, args: a2 }) => {
            n1.cmp(n2).then_with(|| cmp_slices(a1, a2))
        }
        (
            Expr::Deriv {
                name: n1,
                wrt: w1,
                args: a1,
            },
            Expr::Deriv {
                name: n2,
                wrt: w2,
                args: a2,
            },
        ) => n1
            .cmp(n2)
            .then_with(|| cmp_slices(a1, a2))
            .then_with(|| w1.cmp(w2)),
        (Expr::Sqrt(x), Expr::Sqrt(y)) | (Expr::Neg(x), Expr::Neg(y)) => compare(x, y),
        (Expr::Sum(x), Expr::Sum(y)) | (Expr::Product(x), Expr::Product(y)) => cmp_slices(x, y),
        _ => rank(a).cmp(&rank(b)),
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        compare(self, other) == Ordering::Equal
    }
}

impl Eq for Expr {}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        compare(self, other)
    }
}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        // `x` and `x^1` compare equal, so both hash as (base, exponent).
        let (base, exp) = split_pow(self);
        match base {
            Expr::Pow(..) => base.hash(state),
            _ => hash_node(base, state),
        }
        match exp {
            Expr::Const(c) => c.to_bits().hash(state),
            other => other.hash(state),
        }
    }
}

fn hash_node<H: Hasher>(e: &Expr, state: &mut H) {
    rank(e).hash(state);
    match e {
        Expr::Const(c) => c.to_bits().hash(state),
        Expr::Sym(s) => s.hash(state),
        Expr::Apply { name, args } => {
            name.hash(state);
            args.hash(state);
        }
        Expr::Deriv { name, wrt, args } => {
            name.hash(state);
            wrt.hash(state);
            args.hash(state);
        }
        Expr::Sqrt(x) | Expr::Neg(x) => x.hash(state),
        Expr::Sum(xs) | Expr::Product(xs) => xs.hash(state),
        Expr::Pow(..) => unreachable!("split_pow strips the outer power"),
    }
}

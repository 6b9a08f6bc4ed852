//! Complex tridiagonal systems, optionally with periodic corners.

use num_complex::Complex64;

#[derive(Clone, Debug)]
pub(crate) struct Tridiagonal {
    /// `sub[i]` multiplies `x[i-1]` in row `i`; `sub[0]` is the periodic
    /// corner (row 0, column n-1).
    pub sub: Vec<Complex64>,
    pub diag: Vec<Complex64>,
    /// `sup[i]` multiplies `x[i+1]` in row `i`; `sup[n-1]` is the periodic
    /// corner (row n-1, column 0).
    pub sup: Vec<Complex64>,
    pub periodic: bool,
}

impl Tridiagonal {
    pub fn mul(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.sub[i] * x[i - 1];
                } else if self.periodic {
                    v += self.sub[0] * x[n - 1];
                }
                if i + 1 < n {
                    v += self.sup[i] * x[i + 1];
                } else if self.periodic {
                    v += self.sup[n - 1] * x[0];
                }
                v
            })
            .collect()
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        if !self.periodic || rhs.len() < 3 {
            return thomas(&self.sub, &self.diag, &self.sup, rhs);
        }
        // Sherman-Morrison on the corner elements.
        let n = rhs.len();
        let (alpha, beta) = (self.sup[n - 1], self.sub[0]);
        let gamma = -self.diag[0];
        let mut diag = self.diag.clone();
        diag[0] -= gamma;
        diag[n - 1] -= alpha * beta / gamma;
        let x = thomas(&self.sub, &diag, &self.sup, rhs);
        let mut u = vec![Complex64::new(0.0, 0.0); n];
        u[0] = gamma;
        u[n - 1] = alpha;
        let z = thomas(&self.sub, &diag, &self.sup, &u);
        let fact = (x[0] + beta * x[n - 1] / gamma)
            / (Complex64::new(1.0, 0.0) + z[0] + beta * z[n - 1] / gamma);
        x.iter().zip(&z).map(|(x, z)| x - fact * z).collect()
    }
}

fn thomas(
    sub: &[Complex64],
    diag: &[Complex64],
    sup: &[Complex64],
    rhs: &[Complex64],
) -> Vec<Complex64> {
    let n = rhs.len();
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    let mut d = vec![Complex64::new(0.0, 0.0); n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * c[i - 1];
        c[i] = sup[i] / m;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        let next = d[i + 1];
        d[i] -= c[i] * next;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn system(n: usize, periodic: bool) -> Tridiagonal {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        Tridiagonal {
            sub: (0..n).map(|i| c(0.3 + 0.01 * i as f64, -0.2)).collect(),
            diag: (0..n).map(|i| c(2.0, 0.5 + 0.02 * i as f64)).collect(),
            sup: (0..n).map(|i| c(-0.4, 0.1 * (i % 3) as f64)).collect(),
            periodic,
        }
    }

    #[test]
    fn solve_inverts_mul() {
        for periodic in [false, true] {
            let t = system(17, periodic);
            let x: Vec<Complex64> = (0..17)
                .map(|i| Complex64::new(i as f64, 1.0 / (i + 1) as f64))
                .collect();
            let back = t.solve(&t.mul(&x));
            for (a, b) in back.iter().zip(&x) {
                assert!((a - b).norm() < 1e-12, "{periodic}: {a} vs {b}");
            }
        }
    }
}

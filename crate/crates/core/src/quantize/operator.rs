//! Discretized Hamiltonians and their time-step propagators.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use super::tridiag::Tridiagonal;
use super::{Boundary, Grid};
use crate::expr::{evaluate, Bindings, Expr};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OperatorKind {
    /// `kinetic * p^2 / 2 + V(q)`.
    Potential { kinetic: f64, potential: String },
    /// `sqrt(kinetic * p^2 + rest^2)`.
    RelativisticFree { kinetic: f64, rest: f64 },
}

/// Hamiltonian on a grid. The potential kind uses the compact fourth-order
/// second difference `B^-1 A / dx^2`; the relativistic kind is diagonal in
/// the discrete Fourier basis.
#[derive(Clone, Debug, Serialize)]
pub struct HamiltonianOperator {
    pub kind: OperatorKind,
    pub grid: Grid,
    /// Potential sampled at the grid points (zero for the relativistic kind).
    #[serde(skip)]
    pub potential: Vec<f64>,
}

fn constant(e: &Expr) -> Option<f64> {
    e.simplify().as_const()
}

fn unsupported(h: &Expr, why: &str) -> Error {
    Error::UnsupportedShape(format!("`{h}`: {why}"))
}

/// Recognizes `a p^2/2 + V(q)` and `sqrt(a p^2 + M)` in the symbols `q`
/// and `p`, and discretizes it on `grid`.
pub fn build_operator(h: &Expr, q: &str, p: &str, grid: &Grid) -> Result<HamiltonianOperator> {
    if let Some(s) = h.symbols().into_iter().find(|s| s != q && s != p) {
        return Err(unsupported(h, &format!("unbound symbol `{s}`")));
    }
    if let Some(f) = h.functions().into_keys().next() {
        return Err(unsupported(h, &format!("opaque function `{f}`")));
    }
    let at_rest = BTreeMap::from([(p.to_string(), Expr::zero())]);
    let quadratic = |e: &Expr| -> Option<(f64, Expr)> {
        let d1 = e.differentiate(p);
        let a = constant(&d1.differentiate(p))?;
        let linear = constant(&d1.substitute(&at_rest))?;
        (a > 0.0 && linear == 0.0).then(|| (a, e.substitute(&at_rest).simplify()))
    };

    if let Expr::Sqrt(inner) = h.simplify() {
        let (a, rest) =
            quadratic(&inner).ok_or_else(|| unsupported(h, "radicand is not a p^2 + M"))?;
        let rest = constant(&rest)
            .filter(|m| *m >= 0.0)
            .ok_or_else(|| unsupported(h, "radicand depends on the coordinate"))?;
        if grid.boundary != Boundary::Periodic {
            return Err(Error::InvalidParameter {
                name: "boundary".into(),
                reason: "the square-root kinetic term needs a periodic grid".into(),
            });
        }
        return Ok(HamiltonianOperator {
            kind: OperatorKind::RelativisticFree {
                kinetic: a / 2.0,
                rest: rest.sqrt(),
            },
            grid: grid.clone(),
            potential: vec![0.0; grid.n],
        });
    }
    let (a, v) =
        quadratic(h).ok_or_else(|| unsupported(h, "expected a p^2/2 + V(q) or sqrt(a p^2 + M)"))?;
    if v.contains_symbol(p) {
        return Err(unsupported(h, "mixed coordinate-momentum terms"));
    }
    let potential = grid
        .points()
        .iter()
        .map(|&x| Ok(evaluate(&v, &Bindings::new().with(q, x))?))
        .collect::<Result<Vec<_>>>()?;
    Ok(HamiltonianOperator {
        kind: OperatorKind::Potential {
            kinetic: a,
            potential: v.to_string(),
        },
        grid: grid.clone(),
        potential,
    })
}

impl HamiltonianOperator {
    /// `p^2/2 + V(q)`.
    pub fn potential(v: &Expr, grid: &Grid) -> Result<HamiltonianOperator> {
        let h = Expr::sym("p").powi(2) / Expr::num(2.0) + v.clone();
        build_operator(&h, "q", "p", grid)
    }

    /// `sqrt(p^2 + m^2 c^2)` on a periodic grid.
    pub fn relativistic(m: f64, c: f64, grid: &Grid) -> Result<HamiltonianOperator> {
        if !(m >= 0.0 && c > 0.0) {
            return Err(Error::InvalidParameter {
                name: "m, c".into(),
                reason: format!("need m >= 0 and c > 0, got m = {m}, c = {c}"),
            });
        }
        let h = (Expr::sym("p").powi(2) + Expr::num((m * c).powi(2))).sqrt();
        build_operator(&h, "q", "p", grid)
    }

    /// Angular wavenumbers of the discrete Fourier modes.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.grid.n;
        let span = self.grid.dx() * n as f64;
        (0..n)
            .map(|j| {
                let m = if j <= n / 2 {
                    j as f64
                } else {
                    j as f64 - n as f64
                };
                2.0 * PI * m / span
            })
            .collect()
    }

    /// `omega(k)` for the relativistic kind.
    pub fn dispersion(&self, k: f64) -> f64 {
        match self.kind {
            OperatorKind::RelativisticFree { kinetic, rest } => {
                (kinetic * k * k + rest * rest).sqrt()
            }
            OperatorKind::Potential { kinetic, .. } => kinetic * k * k / 2.0,
        }
    }

    /// `B` and `G = -a/2 A/dx^2 + B V`, with `H = B^-1 G`.
    fn compact(&self) -> (Tridiagonal, Tridiagonal) {
        let OperatorKind::Potential { kinetic, .. } = self.kind else {
            unreachable!("compact stencil of a spectral operator")
        };
        let n = self.grid.n;
        let periodic = self.grid.boundary == Boundary::Periodic;
        let dx2 = self.grid.dx().powi(2);
        let v = &self.potential;
        let c = |x: f64| Complex64::new(x, 0.0);
        let b = Tridiagonal {
            sub: vec![c(1.0 / 12.0); n],
            diag: vec![c(10.0 / 12.0); n],
            sup: vec![c(1.0 / 12.0); n],
            periodic,
        };
        let g = Tridiagonal {
            sub: (0..n)
                .map(|j| c(-kinetic / (2.0 * dx2) + v[(j + n - 1) % n] / 12.0))
                .collect(),
            diag: (0..n)
                .map(|j| c(kinetic / dx2 + 10.0 * v[j] / 12.0))
                .collect(),
            sup: (0..n)
                .map(|j| c(-kinetic / (2.0 * dx2) + v[(j + 1) % n] / 12.0))
                .collect(),
            periodic,
        };
        (b, g)
    }

    /// `H psi`.
    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        match self.kind {
            OperatorKind::Potential { .. } => {
                let (b, g) = self.compact();
                b.solve(&g.mul(psi))
            }
            OperatorKind::RelativisticFree { .. } => {
                let omega: Vec<Complex64> = self
                    .wavenumbers()
                    .iter()
                    .map(|&k| Complex64::new(self.dispersion(k), 0.0))
                    .collect();
                Spectral::new(self.grid.n).multiply(psi, &omega)
            }
        }
    }

    /// Propagator over one step `dt`: Crank-Nicolson for the potential kind,
    /// the exact phase `exp(-i omega dt)` for the relativistic kind.
    pub fn propagator(&self, dt: f64) -> Result<Propagator> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidStep(dt));
        }
        Ok(match self.kind {
            OperatorKind::Potential { .. } => {
                let (b, g) = self.compact();
                let half = Complex64::new(0.0, dt / 2.0);
                let combine =
                    |sign: f64, pick: fn(&Tridiagonal) -> &Vec<Complex64>| -> Vec<Complex64> {
                        pick(&b)
                            .iter()
                            .zip(pick(&g))
                            .map(|(b, g)| b + sign * half * g)
                            .collect()
                    };
                let side = |sign: f64| Tridiagonal {
                    sub: combine(sign, |t| &t.sub),
                    diag: combine(sign, |t| &t.diag),
                    sup: combine(sign, |t| &t.sup),
                    periodic: b.periodic,
                };
                Propagator(Scheme::CrankNicolson {
                    implicit: side(1.0),
                    explicit: side(-1.0),
                })
            }
            OperatorKind::RelativisticFree { .. } => Propagator(Scheme::Spectral {
                phases: self
                    .wavenumbers()
                    .iter()
                    .map(|&k| Complex64::from_polar(1.0, -self.dispersion(k) * dt))
                    .collect(),
                fft: Spectral::new(self.grid.n),
            }),
        })
    }
}

#[derive(Clone)]
struct Spectral {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Spectral {
    fn new(n: usize) -> Spectral {
        let mut planner = FftPlanner::new();
        Spectral {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    fn multiply(&self, psi: &[Complex64], factors: &[Complex64]) -> Vec<Complex64> {
        let mut buf = psi.to_vec();
        self.forward.process(&mut buf);
        for (b, f) in buf.iter_mut().zip(factors) {
            *b *= f;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / psi.len() as f64;
        buf.iter_mut().for_each(|b| *b *= scale);
        buf
    }
}

/// One-step time propagator.
pub struct Propagator(Scheme);

enum Scheme {
    CrankNicolson {
        implicit: Tridiagonal,
        explicit: Tridiagonal,
    },
    Spectral {
        phases: Vec<Complex64>,
        fft: Spectral,
    },
}

impl Propagator {
    pub fn step(&self, psi: &[Complex64]) -> Vec<Complex64> {
        match &self.0 {
            Scheme::CrankNicolson { implicit, explicit } => implicit.solve(&explicit.mul(psi)),
            Scheme::Spectral { phases, fft } => fft.multiply(psi, phases),
        }
    }
}

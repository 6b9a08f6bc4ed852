//! Operator quantization of one-dimensional constraints `p_t + H(q, p)`:
//! the wave function obeys `i dpsi/dt = H psi` with `hbar = 1`.

mod operator;
mod tridiag;

use std::io::Write;

use log::warn;
use num_complex::Complex64;
use serde::Serialize;

use crate::{Error, Result};

pub use operator::{build_operator, HamiltonianOperator, OperatorKind, Propagator};

pub const DEFAULT_POINTS: usize = 1024;
pub const DEFAULT_DOMAIN: (f64, f64) = (-10.0, 10.0);
pub const DEFAULT_DT: f64 = 1e-3;
/// Largest amplitude tolerated in the outer tenth of a Dirichlet grid.
pub const BOUNDARY_AMPLITUDE: f64 = 1e-12;
/// Allowed deviation of the norm from one in [`expectations`].
pub const NORM_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// `psi = 0` just outside the domain; the grid holds interior points.
    Dirichlet,
    /// `psi(x_min) = psi(x_max)`; the grid omits `x_max`.
    Periodic,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    pub boundary: Boundary,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n: usize, boundary: Boundary) -> Result<Grid> {
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidParameter {
                name: "domain".into(),
                reason: format!("[{x_min}, {x_max}] is empty"),
            });
        }
        if n < 4 {
            return Err(Error::InvalidParameter {
                name: "grid".into(),
                reason: format!("need at least 4 points, got {n}"),
            });
        }
        Ok(Grid {
            x_min,
            x_max,
            n,
            boundary,
        })
    }

    pub fn dx(&self) -> f64 {
        let span = self.x_max - self.x_min;
        match self.boundary {
            Boundary::Dirichlet => span / (self.n + 1) as f64,
            Boundary::Periodic => span / self.n as f64,
        }
    }

    pub fn points(&self) -> Vec<f64> {
        let dx = self.dx();
        let first = match self.boundary {
            Boundary::Dirichlet => self.x_min + dx,
            Boundary::Periodic => self.x_min,
        };
        (0..self.n).map(|j| first + j as f64 * dx).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Wavefunction {
    pub grid: Grid,
    pub psi: Vec<Complex64>,
    pub time: f64,
}

impl Wavefunction {
    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> Complex64) -> Wavefunction {
        Wavefunction {
            grid: grid.clone(),
            psi: grid.points().into_iter().map(f).collect(),
            time: 0.0,
        }
    }

    /// Normalized `exp(-(x - center)^2 / (2 width^2) + i k x)`.
    pub fn gaussian(grid: &Grid, center: f64, width: f64, k: f64) -> Result<Wavefunction> {
        if !(width > 0.0) {
            return Err(Error::InvalidParameter {
                name: "width".into(),
                reason: format!("must be positive, got {width}"),
            });
        }
        Wavefunction::from_fn(grid, |x| {
            let u = (x - center) / width;
            Complex64::from_polar((-u * u / 2.0).exp(), k * x)
        })
        .normalized()
    }

    /// Normalized plane mode with `mode` periods across a periodic grid.
    pub fn plane_wave(grid: &Grid, mode: i64) -> Result<Wavefunction> {
        if grid.boundary != Boundary::Periodic {
            return Err(Error::InvalidParameter {
                name: "boundary".into(),
                reason: "plane modes need a periodic grid".into(),
            });
        }
        let k = 2.0 * std::f64::consts::PI * mode as f64 / (grid.dx() * grid.n as f64);
        Wavefunction::from_fn(grid, |x| Complex64::from_polar(1.0, k * (x - grid.x_min)))
            .normalized()
    }

    pub fn norm(&self) -> f64 {
        (self.psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dx()).sqrt()
    }

    pub fn normalized(mut self) -> Result<Wavefunction> {
        let n = self.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Unnormalized(n));
        }
        self.psi.iter_mut().for_each(|z| *z /= n);
        Ok(self)
    }

    pub fn density(&self) -> Vec<f64> {
        self.psi.iter().map(|z| z.norm_sqr()).collect()
    }

    /// `<self, other>` with the grid quadrature.
    pub fn inner(&self, other: &[Complex64]) -> Complex64 {
        self.psi
            .iter()
            .zip(other)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.dx()
    }

    /// Largest `|psi|` in the outer tenth of the grid on either side.
    pub fn edge_amplitude(&self) -> f64 {
        let w = (self.grid.n / 10).max(1);
        self.psi[..w]
            .iter()
            .chain(&self.psi[self.grid.n - w..])
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryWarning {
    pub time: f64,
    pub amplitude: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EvolutionStats {
    pub steps: usize,
    /// Largest `| |psi_{n+1}| - |psi_n| |` over all steps.
    pub max_norm_drift: f64,
    /// First time the packet reached the outer tenth of a Dirichlet grid.
    pub boundary: Option<BoundaryWarning>,
}

/// Advances `psi` by `steps` steps of `dt`.
pub fn evolve(
    psi: &Wavefunction,
    op: &HamiltonianOperator,
    dt: f64,
    steps: usize,
) -> Result<Wavefunction> {
    Ok(evolve_observed(psi, op, dt, steps, 0, |_| {})?.0)
}

/// Like [`evolve`], calling `observe` on the initial state and then after
/// every `every` steps (never when `every` is 0).
pub fn evolve_observed(
    psi: &Wavefunction,
    op: &HamiltonianOperator,
    dt: f64,
    steps: usize,
    every: usize,
    mut observe: impl FnMut(&Wavefunction),
) -> Result<(Wavefunction, EvolutionStats)> {
    if psi.grid != op.grid {
        return Err(Error::Config(
            "wave function and operator live on different grids".into(),
        ));
    }
    let norm = psi.norm();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::Unnormalized(norm));
    }
    let propagator = op.propagator(dt)?;
    let watch = psi.grid.boundary == Boundary::Dirichlet;
    let mut stats = EvolutionStats {
        steps,
        max_norm_drift: 0.0,
        boundary: None,
    };
    let check = |w: &Wavefunction, stats: &mut EvolutionStats| {
        if watch && stats.boundary.is_none() {
            let amplitude = w.edge_amplitude();
            if amplitude > BOUNDARY_AMPLITUDE {
                warn!(
                    "wave function reaches the outer tenth of the grid at t = {} (|psi| = {amplitude:.3e}); \
                     the walls will reflect it",
                    w.time
                );
                stats.boundary = Some(BoundaryWarning {
                    time: w.time,
                    amplitude,
                });
            }
        }
    };
    let mut current = psi.clone();
    check(&current, &mut stats);
    if every > 0 {
        observe(&current);
    }
    let mut norm = norm;
    for i in 1..=steps {
        current.psi = propagator.step(&current.psi);
        current.time = psi.time + i as f64 * dt;
        let next = current.norm();
        stats.max_norm_drift = stats.max_norm_drift.max((next - norm).abs());
        norm = next;
        check(&current, &mut stats);
        if every > 0 && i % every == 0 {
            observe(&current);
        }
    }
    Ok((current, stats))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Expectations {
    pub position: f64,
    pub momentum: f64,
    pub energy: f64,
}

/// `<q>` by quadrature, `<p>` with the central difference of `-i d/dx`
/// and `<H>` through the operator.
pub fn expectations(psi: &Wavefunction, op: &HamiltonianOperator) -> Result<Expectations> {
    let norm = psi.norm();
    if !((norm - 1.0).abs() <= NORM_TOL) {
        return Err(Error::Unnormalized(norm));
    }
    let g = &psi.grid;
    let dx = g.dx();
    let n = g.n;
    let periodic = g.boundary == Boundary::Periodic;
    let at = |j: isize| -> Complex64 {
        if (0..n as isize).contains(&j) {
            psi.psi[j as usize]
        } else if periodic {
            psi.psi[j.rem_euclid(n as isize) as usize]
        } else {
            Complex64::new(0.0, 0.0)
        }
    };
    let position = g
        .points()
        .iter()
        .zip(&psi.psi)
        .map(|(x, z)| x * z.norm_sqr())
        .sum::<f64>()
        * dx;
    let derivative: Vec<Complex64> = (0..n as isize)
        .map(|j| Complex64::new(0.0, -1.0) * (at(j + 1) - at(j - 1)) / (2.0 * dx))
        .collect();
    let momentum = psi.inner(&derivative).re;
    let energy = psi.inner(&op.apply(&psi.psi)).re;
    Ok(Expectations {
        position,
        momentum,
        energy,
    })
}

/// Writes snapshots as `t,x,re,im` rows.
pub fn write_csv<W: Write>(snapshots: &[Wavefunction], mut out: W) -> std::io::Result<()> {
    writeln!(out, "t,x,re,im")?;
    for s in snapshots {
        for (x, z) in s.grid.points().iter().zip(&s.psi) {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                s.time, x, z.re, z.im
            )?;
        }
    }
    Ok(())
}

//! Split-step solver for `u_t + i u_xx + 2i|u|²u = 0` on a periodic grid.
//!
//! A step is `N(dt/2) L(dt) N(dt/2)` where `N` is the exact pointwise phase
//! rotation `u ↦ e^{−2i|u|²τ} u` and `L` solves `u_t = −i u_xx` either
//! exactly in Fourier space or by Crank–Nicolson with the three-point
//! Laplacian.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use super::{Boundary, Method, SolverConfig};
use crate::domain::{make_domain, Field};
use crate::error::{Error, Result};
use crate::value::{Shape, C64};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Periodic grid `a, a + h, …, b − h`; the recorded field also carries the
/// repeated end point `b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeriodicGrid {
    pub a: f64,
    pub b: f64,
    pub h: f64,
}

impl PeriodicGrid {
    pub fn new(a: f64, b: f64, h: f64) -> Result<Self> {
        if h.is_nan() || h <= 0.0 || a.is_nan() || b.is_nan() || b <= a {
            return Err(Error::Config(format!(
                "bad periodic grid [{a}, {b}) step {h}"
            )));
        }
        let cells = (b - a) / h;
        if (cells - cells.round()).abs() > 1e-6 || cells.round() < 3.0 {
            return Err(Error::Config(format!(
                "periodic length {} is not a multiple of {h} with at least 3 cells",
                b - a
            )));
        }
        Ok(PeriodicGrid { a, b, h })
    }

    pub fn len(&self) -> usize {
        ((self.b - self.a) / self.h).round() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, j: usize) -> f64 {
        self.a + j as f64 * self.h
    }

    /// Samples `f` at the periodic points.
    pub fn sample(&self, f: impl Fn(f64) -> C64) -> Vec<C64> {
        (0..self.len()).map(|j| f(self.x(j))).collect()
    }
}

/// `sech(x) e^{−it}`.
pub fn nls_soliton(x: f64, t: f64) -> C64 {
    C64::from_polar(1.0 / x.cosh(), -t)
}

/// The soliton as an analytic field on a `(x, t)` domain.
pub fn nls_soliton_field(domain: &Arc<crate::domain::Domain>) -> Result<Field> {
    if domain.p() != 0 || domain.q() != 2 {
        return Err(Error::InvalidParameter(
            "the soliton lives on (x, t)".into(),
        ));
    }
    let x = Field::continuous_coordinate(domain, 0)?;
    let t = Field::continuous_coordinate(domain, 1)?;
    x.map(crate::domain::ElemFn::Cosh)
        .recip()
        .pointwise_mul(&t.scale(-I).exp())
}

/// Mass `∫|u|² dx` over one period.
pub fn nls_mass(u: &[C64], h: f64) -> f64 {
    u.iter().map(|z| z.norm_sqr()).sum::<f64>() * h
}

/// One Strang step of the splitting; exposed so substeps can be tested alone.
pub struct NlsStepper {
    n: usize,
    h: f64,
    dt: f64,
    method: Method,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    propagator: Vec<C64>,
}

impl NlsStepper {
    pub fn new(grid: &PeriodicGrid, dt: f64, method: Method) -> Result<Self> {
        if !matches!(method, Method::Spectral | Method::CrankNicolson) {
            return Err(Error::Config(format!("NLS does not support {method:?}")));
        }
        let n = grid.len();
        let mut planner = FftPlanner::new();
        let length = n as f64 * grid.h;
        let propagator = (0..n)
            .map(|j| {
                let m = if j <= n / 2 {
                    j as f64
                } else {
                    j as f64 - n as f64
                };
                let k = 2.0 * std::f64::consts::PI * m / length;
                C64::from_polar(1.0, k * k * dt)
            })
            .collect();
        Ok(NlsStepper {
            n,
            h: grid.h,
            dt,
            method,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            propagator,
        })
    }

    /// `u ↦ e^{−2i|u|²τ} u`, the exact flow of `u_t = −2i|u|²u`.
    pub fn nonlinear(&self, u: &mut [C64], tau: f64) {
        for z in u.iter_mut() {
            *z *= C64::from_polar(1.0, -2.0 * z.norm_sqr() * tau);
        }
    }

    /// One step of `u_t = −i u_xx` over `dt`.
    pub fn linear(&self, u: &mut [C64]) {
        match self.method {
            Method::Spectral => {
                self.forward.process(u);
                let scale = 1.0 / self.n as f64;
                for (z, p) in u.iter_mut().zip(&self.propagator) {
                    *z *= p * scale;
                }
                self.inverse.process(u);
            }
            _ => self.crank_nicolson(u),
        }
    }

    /// Solves `(1 + i dt/2 D) v = (1 − i dt/2 D) u` with `D` the periodic
    /// three-point Laplacian.
    fn crank_nicolson(&self, u: &mut [C64]) {
        let n = self.n;
        let r = I * (self.dt / (2.0 * self.h * self.h));
        let rhs: Vec<C64> = (0..n)
            .map(|j| {
                let (l, c, rr) = (u[(j + n - 1) % n], u[j], u[(j + 1) % n]);
                c - r * (l - 2.0 * c + rr)
            })
            .collect();
        let diag = C64::new(1.0, 0.0) - 2.0 * r;
        let v = solve_cyclic(diag, r, &rhs);
        u.copy_from_slice(&v);
    }

    pub fn step(&self, u: &mut [C64]) {
        self.nonlinear(u, 0.5 * self.dt);
        self.linear(u);
        self.nonlinear(u, 0.5 * self.dt);
    }
}

/// Solves the circulant tridiagonal system with diagonal `b` and both
/// off-diagonals `c`, by Thomas elimination with a Sherman–Morrison
/// correction for the corner entries.
fn solve_cyclic(b: C64, c: C64, rhs: &[C64]) -> Vec<C64> {
    let n = rhs.len();
    let gamma = -b;
    let mut diag = vec![b; n];
    diag[0] = b - gamma;
    diag[n - 1] = b - c * c / gamma;
    let x = solve_tridiagonal(&diag, c, rhs);
    let mut e = vec![C64::new(0.0, 0.0); n];
    e[0] = gamma;
    e[n - 1] = c;
    let z = solve_tridiagonal(&diag, c, &e);
    let fact = (x[0] + c * x[n - 1] / gamma) / (C64::new(1.0, 0.0) + z[0] + c * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

fn solve_tridiagonal(diag: &[C64], off: C64, rhs: &[C64]) -> Vec<C64> {
    let n = rhs.len();
    let mut cp = vec![C64::new(0.0, 0.0); n];
    let mut dp = vec![C64::new(0.0, 0.0); n];
    cp[0] = off / diag[0];
    dp[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - off * cp[i - 1];
        cp[i] = off / m;
        dp[i] = (rhs[i] - off * dp[i - 1]) / m;
    }
    let mut x = vec![C64::new(0.0, 0.0); n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

/// Integrates from `u0` (sampled at the periodic points) and returns the
/// `(x, t)` grid field with `x ∈ [a, b]` and `t ∈ [0, steps · dt]`.
///
/// Fails with the step index when the discrete mass grows by more than 10%
/// or a sample stops being finite.
pub fn nls_solve(grid: &PeriodicGrid, u0: &[C64], cfg: &SolverConfig) -> Result<Field> {
    cfg.expect(
        &[Method::Spectral, Method::CrankNicolson],
        Boundary::Periodic,
        "nls_solve",
    )?;
    let n = grid.len();
    if u0.len() != n {
        return Err(Error::Config(format!(
            "initial profile has {} samples for {n} grid points",
            u0.len()
        )));
    }
    let stepper = NlsStepper::new(grid, cfg.dt, cfg.method)?;
    let mut u = u0.to_vec();
    let m0 = nls_mass(&u, grid.h);
    let mut snapshots = vec![u.clone()];
    for step in 1..=cfg.steps {
        stepper.step(&mut u);
        let m = nls_mass(&u, grid.h);
        if !m.is_finite() || m > 1.1 * m0 + f64::MIN_POSITIVE {
            return Err(Error::Numerical(format!(
                "NLS instability at step {step}: mass {m} from {m0}"
            )));
        }
        if step % cfg.record_every == 0 {
            snapshots.push(u.clone());
        }
    }
    let nt = snapshots.len();
    let domain = Arc::new(make_domain(
        0,
        2,
        &[],
        &[(grid.a, grid.b), (0.0, cfg.horizon())],
        &[grid.h, cfg.dt * cfg.record_every as f64],
    )?);
    let mut samples = Vec::with_capacity((n + 1) * nt);
    for j in 0..=n {
        for snap in &snapshots {
            samples.push(snap[j % n]);
        }
    }
    Field::grid(&domain, Shape::SCALAR, domain.full_box(), samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soliton_values() {
        assert_eq!(nls_soliton(0.0, 0.0), C64::new(1.0, 0.0));
        let z = nls_soliton(0.0, std::f64::consts::PI);
        assert!((z - C64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = PeriodicGrid::new(-5.0, 5.0, 0.5).unwrap();
        for method in [Method::Spectral, Method::CrankNicolson] {
            let cfg = SolverConfig::new(0.01, 10, method, Boundary::Periodic);
            let f = nls_solve(&g, &vec![C64::new(0.0, 0.0); g.len()], &cfg).unwrap();
            assert_eq!(f.max_norm().unwrap(), 0.0);
        }
    }

    #[test]
    fn cyclic_solver_matches_the_matrix() {
        let n = 7;
        let (b, c) = (C64::new(1.0, -0.4), C64::new(0.0, 0.2));
        let rhs: Vec<C64> = (0..n).map(|j| C64::new(j as f64, 1.0 - j as f64)).collect();
        let x = solve_cyclic(b, c, &rhs);
        for j in 0..n {
            let lhs = b * x[j] + c * x[(j + 1) % n] + c * x[(j + n - 1) % n];
            assert!((lhs - rhs[j]).norm() < 1e-13);
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let g = PeriodicGrid::new(-5.0, 5.0, 0.5).unwrap();
        let u0 = vec![C64::new(0.0, 0.0); g.len()];
        let rk = SolverConfig::new(0.01, 10, Method::Rk4, Boundary::Periodic);
        assert!(matches!(nls_solve(&g, &u0, &rk), Err(Error::Config(_))));
        let edge = SolverConfig::new(0.01, 10, Method::Spectral, Boundary::PrescribedEdge);
        assert!(matches!(nls_solve(&g, &u0, &edge), Err(Error::Config(_))));
        assert!(PeriodicGrid::new(0.0, 1.0, 0.3).is_err());
    }
}

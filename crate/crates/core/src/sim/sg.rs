//! The sine-Gordon chain `∂_t θ_{n+1} = ∂_t θ_n + c γ sin((θ_{n+1} + θ_n)/2)`.
//!
//! Once the edge velocity `∂_t θ_0(t)` is prescribed the chain relation
//! gives every `∂_t θ_n` from the current state, an ODE system integrated
//! with classical RK4. The returned grid field carries the velocities as its
//! time-derivative channel.

use std::sync::Arc;

use super::{Boundary, Method, SolverConfig};
use crate::domain::{make_domain, Field};
use crate::error::{Error, Result};
use crate::value::{Shape, C64};

const BLOW_UP: f64 = 1e6;

/// Velocities `∂_t θ_n` for state `theta` and edge velocity `drive`.
pub fn sg_rhs(theta: &[f64], drive: f64, gamma: f64, coefficient: f64, out: &mut [f64]) {
    out[0] = drive;
    for n in 1..theta.len() {
        out[n] = out[n - 1] + coefficient * gamma * (0.5 * (theta[n] + theta[n - 1])).sin();
    }
}

/// Integrates the chain from `theta_init`; the result lives on
/// `n ∈ [0, N − 1]`, `t ∈ [0, steps · dt]`.
pub fn sg_integrate(
    theta_init: &[f64],
    drive: &dyn Fn(f64) -> f64,
    gamma: f64,
    coefficient: f64,
    cfg: &SolverConfig,
) -> Result<Field> {
    cfg.expect(&[Method::Rk4], Boundary::PrescribedEdge, "sg_integrate")?;
    let n = theta_init.len();
    if n < 2 {
        return Err(Error::Config(format!(
            "chain needs at least 2 sites, got {n}"
        )));
    }
    if !gamma.is_finite() || !coefficient.is_finite() {
        return Err(Error::Config("γ and the coefficient must be finite".into()));
    }
    let dt = cfg.dt;
    let rhs = |th: &[f64], t: f64, out: &mut [f64]| sg_rhs(th, drive(t), gamma, coefficient, out);
    let mut theta = theta_init.to_vec();
    let mut vel = vec![0.0; n];
    rhs(&theta, 0.0, &mut vel);
    let mut states = vec![theta.clone()];
    let mut rates = vec![vel.clone()];
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    for step in 1..=cfg.steps {
        let t = (step - 1) as f64 * dt;
        rhs(&theta, t, &mut k1);
        for j in 0..n {
            tmp[j] = theta[j] + 0.5 * dt * k1[j];
        }
        rhs(&tmp, t + 0.5 * dt, &mut k2);
        for j in 0..n {
            tmp[j] = theta[j] + 0.5 * dt * k2[j];
        }
        rhs(&tmp, t + 0.5 * dt, &mut k3);
        for j in 0..n {
            tmp[j] = theta[j] + dt * k3[j];
        }
        rhs(&tmp, t + dt, &mut k4);
        for j in 0..n {
            theta[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if let Some(j) = theta
            .iter()
            .position(|v| !v.is_finite() || v.abs() > BLOW_UP)
        {
            return Err(Error::Numerical(format!(
                "sine-Gordon blow-up at step {step}, site {j}: θ = {}",
                theta[j]
            )));
        }
        if step % cfg.record_every == 0 {
            rhs(&theta, step as f64 * dt, &mut vel);
            states.push(theta.clone());
            rates.push(vel.clone());
        }
    }
    let domain = Arc::new(make_domain(
        1,
        1,
        &[(0, n as i64 - 1)],
        &[(0.0, cfg.horizon())],
        &[dt * cfg.record_every as f64],
    )?);
    let layout = |series: &[Vec<f64>]| -> Vec<C64> {
        let mut out = Vec::with_capacity(n * series.len());
        for j in 0..n {
            for s in series {
                out.push(C64::new(s[j], 0.0));
            }
        }
        out
    };
    let region = domain.full_box();
    let velocity = Field::grid(&domain, Shape::SCALAR, region.clone(), layout(&rates))?;
    Field::grid(&domain, Shape::SCALAR, region, layout(&states))?.with_derivative(0, velocity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Point;

    fn cfg(steps: usize) -> SolverConfig {
        SolverConfig::new(1e-3, steps, Method::Rk4, Boundary::PrescribedEdge)
    }

    #[test]
    fn fixed_points() {
        for v in [0.0, std::f64::consts::PI] {
            let f = sg_integrate(&[v; 6], &|_| 0.0, 1.0, 4.0, &cfg(20)).unwrap();
            for p in f.sample_points() {
                let z = f.eval(&p).unwrap().as_scalar().unwrap();
                assert!((z.re - v).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn channel_is_the_chain_velocity() {
        let init = [0.1, -0.2, 0.05, 0.3];
        let f = sg_integrate(&init, &|t| t.sin(), 0.7, 4.0, &cfg(10)).unwrap();
        let v = f.partial(0).unwrap();
        let p = Point::new(&[0], &[0.01]);
        assert!((v.eval(&p).unwrap().as_scalar().unwrap().re - 0.01f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn rejects_short_chains_and_zero_steps() {
        assert!(matches!(
            sg_integrate(&[0.0], &|_| 0.0, 1.0, 4.0, &cfg(5)),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            sg_integrate(&[0.0; 4], &|_| 0.0, 1.0, 4.0, &cfg(0)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn blow_up_is_reported() {
        let r = sg_integrate(&[0.0; 3], &|_| 1e9, 1.0, 4.0, &cfg(5));
        assert!(matches!(r, Err(Error::Numerical(_))));
    }
}

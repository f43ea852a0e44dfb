//! Numerical solutions of the three model equations.
//!
//! Every solver returns the full space-time field so that curvature can be
//! evaluated with neighbours in every direction.

mod nls;
mod sg;
mod toda;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use nls::{nls_mass, nls_soliton, nls_soliton_field, nls_solve, NlsStepper, PeriodicGrid};
pub use sg::{sg_integrate, sg_rhs};
pub use toda::{toda_evolve, toda_step, TODA_EXPONENT_LIMIT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Exact Fourier propagator for the linear NLS substep.
    Spectral,
    /// Crank–Nicolson with the three-point periodic Laplacian.
    CrankNicolson,
    /// Classical fourth-order Runge–Kutta.
    Rk4,
    /// Explicit lattice recursion.
    Recursion,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Periodic,
    PrescribedEdge,
}

/// Time stepping parameters.
///
/// Stability: both NLS linear substeps are unitary and hence unconditionally
/// stable; RK4 on the sine-Gordon chain needs `dt · max|∂_t θ| ≲ 2.8`, which
/// holds for `dt ≤ 1e−3` on chains of up to a few hundred sites; the Toda
/// recursion has no time step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub steps: usize,
    /// Keep every `record_every`-th step; must divide `steps`.
    pub record_every: usize,
    pub method: Method,
    pub boundary: Boundary,
}

impl SolverConfig {
    pub fn new(dt: f64, steps: usize, method: Method, boundary: Boundary) -> Self {
        SolverConfig {
            dt,
            steps,
            record_every: 1,
            method,
            boundary,
        }
    }

    pub fn recording_every(mut self, k: usize) -> Self {
        self.record_every = k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dt.is_nan() || self.dt <= 0.0 || !self.dt.is_finite() {
            return Err(Error::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.steps == 0 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        if self.record_every == 0 || !self.steps.is_multiple_of(self.record_every) {
            return Err(Error::Config(format!(
                "record_every = {} must divide steps = {}",
                self.record_every, self.steps
            )));
        }
        Ok(())
    }

    /// Final time `steps · dt`.
    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    fn expect(&self, methods: &[Method], boundary: Boundary, what: &str) -> Result<()> {
        self.validate()?;
        if !methods.contains(&self.method) {
            return Err(Error::Config(format!(
                "{what} does not support method {:?}",
                self.method
            )));
        }
        if self.boundary != boundary {
            return Err(Error::Config(format!(
                "{what} needs {boundary:?} boundaries"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let ok = SolverConfig::new(1e-3, 10, Method::Rk4, Boundary::PrescribedEdge);
        assert!(ok.validate().is_ok());
        assert!(SolverConfig { steps: 0, ..ok }.validate().is_err());
        assert!(SolverConfig { dt: 0.0, ..ok }.validate().is_err());
        assert!(ok.recording_every(3).validate().is_err());
        assert!(ok.recording_every(5).validate().is_ok());
        let json = serde_json::to_string(&ok).unwrap();
        assert!(json.contains("\"method\":\"rk4\""));
        let back: SolverConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, ok);
    }
}

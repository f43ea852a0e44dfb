//! Zero-curvature representations of three integrable models.
//!
//! * Nonlinear Schrödinger on `(x, t)`: continuous directions 0 = x, 1 = t.
//! * Semi-discrete sine-Gordon on `(n, t)`: lattice direction 0 = n,
//!   continuous direction 0 = t.
//! * Discrete Toda on `(m, n)`: lattice directions 0 = m, 1 = n.
//!
//! Each example builds its 2×2 connection, the curvature component in the
//! operand order of its compatibility condition, and the residual of the
//! scalar equation it encodes.
//!
//! The printed NLS time matrix has its off-diagonal derivative entries in
//! the wrong slots; [`NlsVariant::Corrected`] swaps them and
//! [`NlsVariant::AsPrinted`] keeps them. The sine-Gordon flatness condition
//! expands to `∂_t(θ_{n+1} − θ_n) = 4γ sin((θ_{n+1} + θ_n)/2)`, so the chain
//! equation carries the coefficient [`SG_COEFFICIENT`].

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::connection::{
    curvature_cc, curvature_dc, curvature_dd, Connection, CurvatureComponents,
};
use crate::domain::{Domain, Field};
use crate::error::{Error, Result};
use crate::value::{Shape, C64};

/// Coefficient of the sine term in the sine-Gordon chain equation.
pub const SG_COEFFICIENT: f64 = 4.0;

const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NlsVariant {
    Corrected,
    AsPrinted,
}

#[derive(Clone, Debug)]
pub enum LaxExample {
    Nls {
        u: Field,
        variant: NlsVariant,
    },
    SineGordon {
        theta: Field,
        gamma: f64,
        k: f64,
    },
    /// Stored through `q` with `u = e^q`.
    Toda {
        q: Field,
        lambda: f64,
    },
}

fn check_layout(f: &Field, p: usize, q: usize, what: &str) -> Result<()> {
    let d = f.domain();
    if d.p() != p || d.q() != q {
        return Err(Error::InvalidParameter(format!(
            "{what} lives on p = {p}, q = {q}, got p = {}, q = {}",
            d.p(),
            d.q()
        )));
    }
    if !f.shape().is_scalar() {
        return Err(Error::ShapeMismatch(format!("{what} must be scalar")));
    }
    Ok(())
}

fn check_spectral(v: f64, name: &str) -> Result<()> {
    if !v.is_finite() || v == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "{name} must be finite and nonzero, got {v}"
        )));
    }
    Ok(())
}

impl LaxExample {
    pub fn nls(u: Field, variant: NlsVariant) -> Result<Self> {
        check_layout(&u, 0, 2, "NLS field u(x, t)")?;
        Ok(LaxExample::Nls { u, variant })
    }

    pub fn sine_gordon(theta: Field, gamma: f64, k: f64) -> Result<Self> {
        check_layout(&theta, 1, 1, "sine-Gordon field θ_n(t)")?;
        check_spectral(k, "k")?;
        if !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "γ must be finite, got {gamma}"
            )));
        }
        Ok(LaxExample::SineGordon { theta, gamma, k })
    }

    /// Toda example from the real field `q`; `u = e^q` is then positive.
    pub fn toda(q: Field, lambda: f64) -> Result<Self> {
        check_layout(&q, 2, 0, "Toda field q_{m,n}")?;
        check_spectral(lambda, "λ")?;
        for v in q.sample_values()? {
            let z = v.as_scalar().expect("scalar field");
            if z.im != 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "q must be real, found {z}"
                )));
            }
        }
        Ok(LaxExample::Toda { q, lambda })
    }

    /// Toda example from a strictly positive field `u`.
    pub fn toda_from_u(u: Field, lambda: f64) -> Result<Self> {
        check_layout(&u, 2, 0, "Toda field u_{m,n}")?;
        for v in u.sample_values()? {
            let z = v.as_scalar().expect("scalar field");
            if z.im != 0.0 || z.re.is_nan() || z.re <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "u must be strictly positive, found {z}"
                )));
            }
        }
        let q = u.ln().materialize()?;
        let q = Field::grid(
            q.domain(),
            Shape::SCALAR,
            q.region().clone(),
            q.grid_samples()
                .expect("materialized")
                .iter()
                .map(|z| C64::new(z.re, 0.0))
                .collect(),
        )?;
        LaxExample::toda(q, lambda)
    }

    pub fn name(&self) -> &'static str {
        match self {
            LaxExample::Nls { .. } => "nls",
            LaxExample::SineGordon { .. } => "sg",
            LaxExample::Toda { .. } => "toda",
        }
    }

    pub fn field(&self) -> &Field {
        match self {
            LaxExample::Nls { u, .. } => u,
            LaxExample::SineGordon { theta, .. } => theta,
            LaxExample::Toda { q, .. } => q,
        }
    }

    pub fn domain(&self) -> &Arc<Domain> {
        self.field().domain()
    }

    /// The spectral parameter (`k` or `λ`); NLS has none.
    pub fn spectral(&self) -> Option<f64> {
        match self {
            LaxExample::Nls { .. } => None,
            LaxExample::SineGordon { k, .. } => Some(*k),
            LaxExample::Toda { lambda, .. } => Some(*lambda),
        }
    }

    /// The same example with another spectral parameter.
    pub fn with_spectral(&self, v: f64) -> Result<Self> {
        match self {
            LaxExample::Nls { .. } => Err(Error::Unsupported(
                "the NLS example has no spectral parameter".into(),
            )),
            LaxExample::SineGordon { theta, gamma, .. } => {
                LaxExample::sine_gordon(theta.clone(), *gamma, v)
            }
            LaxExample::Toda { q, .. } => {
                check_spectral(v, "λ")?;
                Ok(LaxExample::Toda {
                    q: q.clone(),
                    lambda: v,
                })
            }
        }
    }

    /// The 2×2 connection of the example.
    pub fn build_connection(&self) -> Result<Connection> {
        let domain = self.domain().clone();
        let c = |z: C64| Field::scalar(&domain, z);
        let r = |x: f64| c(C64::new(x, 0.0));
        let mat = |e: [Field; 4]| Field::assemble(&domain, Shape::square(2), e.to_vec());
        match self {
            LaxExample::Nls { u, variant } => {
                let ustar = u.conj();
                let b1 = mat([r(0.0), ustar.clone(), u.neg(), r(0.0)])?;
                let m2 = u.abs2();
                let (ux, usx) = (u.partial(0)?, ustar.partial(0)?);
                let (e12, e21) = match variant {
                    NlsVariant::Corrected => (usx, ux),
                    NlsVariant::AsPrinted => (ux, usx),
                };
                let b2 = mat([m2.scale(-I), e12.scale(I), e21.scale(I), m2.scale(I)])?;
                Connection::new(&domain, vec![], vec![b1, b2])
            }
            LaxExample::SineGordon { theta, gamma, k } => {
                let g = C64::new(*gamma, 0.0) / (I * *k);
                let phase = theta.scale(I).exp();
                let bc = mat([r(-1.0), phase.scale(g), phase.recip().scale(g), r(-1.0)])?;
                let half = theta.delta(0)?.scale_real(0.5);
                let bd = mat([
                    half.scale(-I).exp().sub(&r(1.0))?,
                    c(I * *k),
                    c(I * *k),
                    half.scale(I).exp().sub(&r(1.0))?,
                ])?;
                Connection::new(&domain, vec![bd], vec![bc])
            }
            LaxExample::Toda { q, lambda } => {
                let lam = *lambda;
                let u = q.exp();
                let u_prev_n = u.shift_by(1, -1)?;
                let u_prev_m = u.shift_by(0, -1)?;
                let b1 = mat([
                    r(lam - 1.0),
                    u_prev_n.recip().scale_real(lam),
                    u.clone(),
                    r(-2.0),
                ])?;
                let b2 = mat([
                    u.pointwise_mul(&u_prev_m.recip())?.add(&r(lam - 1.0))?,
                    u_prev_m.recip().scale_real(lam),
                    u.clone(),
                    r(-1.0),
                ])?;
                Connection::new(&domain, vec![b1, b2], vec![])
            }
        }
    }

    /// The single relevant curvature component, keyed by the ordered pair
    /// that reproduces the operand order of the compatibility condition:
    /// `F_cc(1,0) = ∂_t B_x − ∂_x B_t + B_t B_x − B_x B_t` for NLS,
    /// `F_dc(0,0)` for sine-Gordon and
    /// `F_dd(1,0) = Δ_n B_m − Δ_m B_n + B_n (E_n B_m) − B_m (E_m B_n)` for Toda.
    pub fn zero_curvature_residual(&self) -> Result<CurvatureComponents> {
        let b = self.build_connection()?;
        let mut out = CurvatureComponents {
            dd: BTreeMap::new(),
            cc: BTreeMap::new(),
            dc: BTreeMap::new(),
        };
        match self {
            LaxExample::Nls { .. } => {
                out.cc.insert((1, 0), curvature_cc(&b, 1, 0)?);
            }
            LaxExample::SineGordon { .. } => {
                out.dc.insert((0, 0), curvature_dc(&b, 0, 0)?);
            }
            LaxExample::Toda { .. } => {
                out.dd.insert((1, 0), curvature_dd(&b, 1, 0)?);
            }
        }
        Ok(out)
    }

    /// The relevant curvature component as a single field.
    pub fn curvature_field(&self) -> Result<Field> {
        let c = self.zero_curvature_residual()?;
        Ok(c.named()
            .into_iter()
            .next()
            .expect("one component")
            .1
            .clone())
    }

    /// Residual of the scalar equation; sine-Gordon uses [`SG_COEFFICIENT`].
    pub fn reduced_equation_residual(&self) -> Result<Field> {
        self.reduced_equation_residual_with(SG_COEFFICIENT)
    }

    /// As [`Self::reduced_equation_residual`] with an explicit sine-Gordon
    /// coefficient `c` in `∂_t(θ_{n+1} − θ_n) − c γ sin((θ_{n+1} + θ_n)/2)`.
    pub fn reduced_equation_residual_with(&self, coefficient: f64) -> Result<Field> {
        let domain = self.domain().clone();
        match self {
            LaxExample::Nls { u, .. } => {
                let ut = u.partial(1)?;
                let uxx = u.partial(0)?.partial(0)?;
                let cubic = u.abs2().pointwise_mul(u)?;
                ut.add(&uxx.scale(I))?.add(&cubic.scale(2.0 * I))
            }
            LaxExample::SineGordon { theta, gamma, .. } => {
                let d = theta.delta(0)?.partial(0)?;
                let s = theta.shift(0)?.add(theta)?.scale_real(0.5).sin();
                d.sub(&s.scale_real(coefficient * gamma))
            }
            LaxExample::Toda { q, .. } => {
                let one = Field::scalar(&domain, C64::new(1.0, 0.0));
                let second = q
                    .shift_by(0, 1)?
                    .sub(&q.scale_real(2.0))?
                    .add(&q.shift_by(0, -1)?)?;
                let up = q.shift_by(1, 1)?.sub(q)?.exp().add(&one)?;
                let down = q.sub(&q.shift_by(1, -1)?)?.exp().add(&one)?;
                second.sub(&up.pointwise_mul(&down.recip())?.ln())
            }
        }
    }

    /// Max-norm of the curvature residual for each spectral parameter.
    pub fn spectral_scan(&self, values: &[f64]) -> Result<Vec<ScanRow>> {
        values
            .par_iter()
            .map(|&v| {
                let ex = self.with_spectral(v)?;
                Ok(ScanRow {
                    param: v,
                    residual: ex.zero_curvature_residual()?.max_norm()?,
                })
            })
            .collect()
    }
}

/// One entry of a parameter scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub param: f64,
    pub residual: f64,
}

/// Curvature residual of the example produced for each coefficient.
///
/// `make` returns the example whose field solves the chain equation with
/// the given coefficient; only the coefficient that matches the connection
/// leaves it flat.
pub fn coefficient_scan(
    coefficients: &[f64],
    make: impl Fn(f64) -> Result<LaxExample> + Sync,
) -> Result<Vec<ScanRow>> {
    coefficients
        .par_iter()
        .map(|&c| {
            Ok(ScanRow {
                param: c,
                residual: make(c)?.zero_curvature_residual()?.max_norm()?,
            })
        })
        .collect()
}

/// Curvature and equation residuals of one candidate field.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessRow {
    pub label: String,
    /// Curvature max-norm per spectral parameter (a single entry with the
    /// example's own parameter, or `None` for NLS).
    pub curvature: Vec<(Option<f64>, f64)>,
    pub equation: f64,
}

impl WitnessRow {
    pub fn worst_curvature(&self) -> f64 {
        self.curvature.iter().map(|c| c.1).fold(0.0, f64::max)
    }

    /// True when both residuals are below `tol` or both are above it.
    pub fn consistent(&self, tol: f64) -> bool {
        (self.worst_curvature() <= tol) == (self.equation <= tol)
    }
}

/// Evaluates both residuals on every candidate; for sine-Gordon and Toda the
/// curvature is checked at every value in `spectral`.
pub fn equivalence_witness(
    candidates: &[(String, LaxExample)],
    spectral: &[f64],
) -> Result<Vec<WitnessRow>> {
    if candidates.is_empty() {
        return Err(Error::InvalidParameter("no candidate fields".into()));
    }
    candidates
        .iter()
        .map(|(label, ex)| {
            let curvature = match ex.spectral() {
                Some(own) => {
                    let values = if spectral.is_empty() {
                        vec![own]
                    } else {
                        spectral.to_vec()
                    };
                    ex.spectral_scan(&values)?
                        .into_iter()
                        .map(|r| (Some(r.param), r.residual))
                        .collect()
                }
                None => vec![(None, ex.zero_curvature_residual()?.max_norm()?)],
            };
            Ok(WitnessRow {
                label: label.clone(),
                curvature,
                equation: ex.reduced_equation_residual()?.max_norm()?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_domain, Point};
    use crate::value::CMatrix;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn nls_zero_field_gives_zero_connection() {
        let d = Arc::new(make_domain(0, 2, &[], &[(-1.0, 1.0), (0.0, 1.0)], &[0.5, 0.5]).unwrap());
        let ex = LaxExample::nls(Field::zeros(&d, Shape::SCALAR), NlsVariant::Corrected).unwrap();
        let b = ex.build_connection().unwrap();
        let p = Point::new(&[], &[0.5, 0.5]);
        assert!(b.continuous(0).eval(&p).unwrap().is_zero());
        assert!(b.continuous(1).eval(&p).unwrap().is_zero());
        assert_eq!(
            ex.reduced_equation_residual().unwrap().max_norm().unwrap(),
            0.0
        );
    }

    #[test]
    fn toda_matrices_at_unit_field() {
        let d = Arc::new(make_domain(2, 0, &[(0, 4), (0, 4)], &[], &[]).unwrap());
        let ex = LaxExample::toda(Field::zeros(&d, Shape::SCALAR), 1.0).unwrap();
        let b = ex.build_connection().unwrap();
        let r = |x: f64| c(x, 0.0);
        assert_eq!(
            b.discrete(0).eval_lattice(&[2, 2]).unwrap(),
            CMatrix::from_rows(&[[r(0.0), r(1.0)], [r(1.0), r(-2.0)]])
        );
        assert_eq!(
            b.discrete(1).eval_lattice(&[2, 2]).unwrap(),
            CMatrix::from_rows(&[[r(1.0), r(1.0)], [r(1.0), r(-1.0)]])
        );
        assert_eq!(
            ex.reduced_equation_residual().unwrap().max_norm().unwrap(),
            0.0
        );
    }

    #[test]
    fn sine_gordon_matrices_at_zero_field() {
        let d = Arc::new(make_domain(1, 1, &[(0, 4)], &[(0.0, 1.0)], &[0.25]).unwrap());
        let ex = LaxExample::sine_gordon(Field::zeros(&d, Shape::SCALAR), 1.0, 1.0).unwrap();
        let b = ex.build_connection().unwrap();
        let p = Point::new(&[1], &[0.5]);
        let inv_i = c(1.0, 0.0) / c(0.0, 1.0);
        assert_eq!(
            b.continuous(0).eval(&p).unwrap(),
            CMatrix::from_rows(&[[c(-1.0, 0.0), inv_i], [inv_i, c(-1.0, 0.0)]])
        );
        assert_eq!(
            b.discrete(0).eval(&p).unwrap(),
            CMatrix::from_rows(&[[c(0.0, 0.0), c(0.0, 1.0)], [c(0.0, 1.0), c(0.0, 0.0)]])
        );
        assert_eq!(
            ex.reduced_equation_residual().unwrap().max_norm().unwrap(),
            0.0
        );
    }

    #[test]
    fn parameter_validation() {
        let d = Arc::new(make_domain(1, 1, &[(0, 4)], &[(0.0, 1.0)], &[0.25]).unwrap());
        let z = Field::zeros(&d, Shape::SCALAR);
        assert!(LaxExample::sine_gordon(z.clone(), 1.0, 0.0).is_err());
        assert!(LaxExample::toda(z.clone(), 1.0).is_err());
        assert!(LaxExample::nls(z, NlsVariant::Corrected).is_err());
        let t = Arc::new(make_domain(2, 0, &[(0, 2), (0, 2)], &[], &[]).unwrap());
        let neg = Field::scalar(&t, c(-1.0, 0.0));
        assert!(LaxExample::toda_from_u(neg, 1.0).is_err());
        let imag = Field::scalar(&t, c(0.0, 1.0));
        assert!(LaxExample::toda(imag, 1.0).is_err());
    }
}

//! Connections on the trivial bundle `N × ℂ^m` and their curvature.
//!
//! Sections are row vectors and connection matrices act from the right, so
//! the covariant derivative of `s = f^α s_α` is
//! `Σ_μ (Δ_μ f − f B_{D,μ}) dn^μ + Σ_i (∂_i f − f B_{C,i}) dx^i`.
//! The lattice coefficient `B_{D,μ}` lives on the link from `n` to `n + μ̂`
//! and is stored at the base point `n`.

mod curvature;

use std::sync::Arc;

use crate::domain::{Domain, Field};
use crate::error::{Error, Result};
use crate::forms::{BasisWedge, Form};
use crate::value::{CMatrix, Shape, C64};

pub use curvature::{
    curvature_cc, curvature_components, curvature_dc, curvature_dd, curvature_via_d2,
    ComponentNorm, CurvatureComponents,
};

#[derive(Clone, Debug)]
pub struct Connection {
    domain: Arc<Domain>,
    m: usize,
    discrete: Vec<Field>,
    continuous: Vec<Field>,
}

impl Connection {
    /// Builds `B = Σ B_{D,μ} dn^μ + Σ B_{C,i} dx^i`.
    ///
    /// Every lattice coefficient is restricted to its link region, which ends
    /// one step before the upper edge of its direction.
    pub fn new(domain: &Arc<Domain>, discrete: Vec<Field>, continuous: Vec<Field>) -> Result<Self> {
        if discrete.len() != domain.p() || continuous.len() != domain.q() {
            return Err(Error::CountMismatch(format!(
                "{} lattice and {} continuous coefficients for p = {}, q = {}",
                discrete.len(),
                continuous.len(),
                domain.p(),
                domain.q()
            )));
        }
        let shape = discrete
            .iter()
            .chain(&continuous)
            .next()
            .map(|f| f.shape())
            .ok_or(Error::NoDirections)?;
        if shape.rows != shape.cols || shape.rows == 0 {
            return Err(Error::ShapeMismatch(format!(
                "connection coefficients must be square, got {shape}"
            )));
        }
        for f in discrete.iter().chain(&continuous) {
            if f.shape() != shape {
                return Err(Error::ShapeMismatch(format!(
                    "mixed coefficient shapes {shape} and {}",
                    f.shape()
                )));
            }
            if **f.domain() != **domain {
                return Err(Error::DomainMismatch);
            }
        }
        let discrete = discrete
            .into_iter()
            .enumerate()
            .map(|(mu, f)| {
                let mut link = f.region().clone();
                link.bounds[mu].1 = link.bounds[mu].1.min(domain.lattice_extents()[mu].1 - 1);
                if link.is_empty() {
                    return Err(Error::EmptyRegion(format!("direction {mu} has no links")));
                }
                Ok(f.restrict(link))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Connection {
            domain: domain.clone(),
            m: shape.rows,
            discrete,
            continuous,
        })
    }

    pub fn zero(domain: &Arc<Domain>, m: usize) -> Result<Self> {
        let z = Field::zeros(domain, Shape::square(m));
        Connection::new(domain, vec![z.clone(); domain.p()], vec![z; domain.q()])
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn discrete(&self, mu: usize) -> &Field {
        &self.discrete[mu]
    }

    pub fn continuous(&self, i: usize) -> &Field {
        &self.continuous[i]
    }

    /// The connection as a matrix-valued 1-form.
    pub fn as_form(&self) -> Result<Form> {
        let terms = self
            .discrete
            .iter()
            .enumerate()
            .map(|(mu, f)| (BasisWedge::dn(mu), f.clone()))
            .chain(
                self.continuous
                    .iter()
                    .enumerate()
                    .map(|(i, f)| (BasisWedge::dx(i), f.clone())),
            );
        Form::from_terms(&self.domain, 1, Shape::square(self.m), terms)
    }
}

/// A section `s = f^α s_α` given by its row of components.
#[derive(Clone, Debug)]
pub struct Section {
    row: Field,
}

impl Section {
    pub fn new(row: Field) -> Result<Self> {
        if row.shape().rows != 1 {
            return Err(Error::ShapeMismatch(format!(
                "a section is a row vector, got {}",
                row.shape()
            )));
        }
        Ok(Section { row })
    }

    /// The constant section with components `row`.
    pub fn constant(domain: &Arc<Domain>, row: &[C64]) -> Result<Self> {
        Section::new(Field::constant(
            domain,
            CMatrix::from_vec(Shape::new(1, row.len()), row.to_vec())?,
        ))
    }

    /// The basis section `s_α` scaled by the scalar field `f`.
    pub fn basis_times(alpha: usize, m: usize, f: &Field) -> Result<Self> {
        Section::new(f.matmul(&unit_row(f.domain(), alpha, m)?)?)
    }

    pub fn row(&self) -> &Field {
        &self.row
    }

    pub fn width(&self) -> usize {
        self.row.shape().cols
    }
}

fn unit_row(domain: &Arc<Domain>, alpha: usize, m: usize) -> Result<Field> {
    if alpha >= m {
        return Err(Error::InvalidParameter(format!(
            "basis index {alpha} out of range for m = {m}"
        )));
    }
    let mut e = CMatrix::zeros(Shape::new(1, m));
    e.set(0, alpha, C64::new(1.0, 0.0));
    Ok(Field::constant(domain, e))
}

/// `𝒟s = Σ_μ (Δ_μ f − f B_{D,μ}) dn^μ + Σ_i (∂_i f − f B_{C,i}) dx^i`.
pub fn covariant_derivative(s: &Section, b: &Connection) -> Result<Form> {
    if s.width() != b.m {
        return Err(Error::ShapeMismatch(format!(
            "section of width {} with a connection of rank {}",
            s.width(),
            b.m
        )));
    }
    let f = &s.row;
    let mut terms = Vec::new();
    for (mu, bd) in b.discrete.iter().enumerate() {
        terms.push((BasisWedge::dn(mu), f.delta(mu)?.sub(&f.matmul(bd)?)?));
    }
    for (i, bc) in b.continuous.iter().enumerate() {
        terms.push((BasisWedge::dx(i), f.partial(i)?.sub(&f.matmul(bc)?)?));
    }
    Form::from_terms(&b.domain, 1, f.shape(), terms)
}

/// Max-norm of `𝒟(s_α f) − [𝒟(s_α) f + σ(s_α ⊗ df)]` for a scalar field `f`.
///
/// The right action of `f` on a `dn^μ` term multiplies by `E_μ f`, and
/// `σ(s_α ⊗ df) = df ⊗ s_α + Σ_μ Δ_μ f (e_α B_{D,μ}) dn^μ`.
pub fn sigma_check(alpha: usize, f: &Field, b: &Connection) -> Result<f64> {
    if !f.shape().is_scalar() {
        return Err(Error::ShapeMismatch(
            "sigma check needs a scalar field".into(),
        ));
    }
    let e = unit_row(&b.domain, alpha, b.m)?;
    let lhs = covariant_derivative(&Section::basis_times(alpha, b.m, f)?, b)?;
    let ds = covariant_derivative(&Section::new(e.clone())?, b)?;
    let right_action = ds.wedge(&Form::function(f))?;
    let df_s = Form::function(f)
        .d()?
        .try_map(e.shape(), |c| c.matmul(&e))?;
    let mut twist = Vec::new();
    for (mu, bd) in b.discrete.iter().enumerate() {
        twist.push((BasisWedge::dn(mu), f.delta(mu)?.matmul(&e.matmul(bd)?)?));
    }
    let twist = Form::from_terms(&b.domain, 1, e.shape(), twist)?;
    let rhs = right_action.add(&df_s)?.add(&twist)?;
    lhs.sub(&rhs)?.max_norm()
}

//! Semi-discrete differential forms with left coefficients.
//!
//! A [`Form`] of degree `r` is a finite sum `Σ f_IJ dn^I ∧ dx^J` with every
//! coefficient written to the left of its basis wedge. Moving `dn^μ` to the
//! right of a coefficient `g` turns it into `E_μ g`, while `dx^i` commutes
//! with everything. Mixed-degree sums are [`GradedForm`]s.

mod io;
mod primitive;

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::domain::{Domain, Field, LatticeBox};
use crate::error::{Error, Result};
use crate::value::{Shape, C64};

pub use io::{load_form, save_form};
pub use primitive::{discrete_primitive, CLOSEDNESS_TOLERANCE};

/// Canonically ordered wedge `dn^I ∧ dx^J`, stored as direction bitmasks.
///
/// Ordering compares the lattice mask first, then the continuous mask, which
/// fixes the term order of every form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BasisWedge {
    dn: u32,
    dx: u32,
}

impl BasisWedge {
    pub const ONE: BasisWedge = BasisWedge { dn: 0, dx: 0 };

    /// Builds `dn^I ∧ dx^J` from strictly increasing index lists.
    pub fn new(discrete: &[usize], continuous: &[usize]) -> Result<Self> {
        Ok(BasisWedge {
            dn: mask_of(discrete, "discrete")?,
            dx: mask_of(continuous, "continuous")?,
        })
    }

    pub fn dn(mu: usize) -> Self {
        BasisWedge { dn: 1 << mu, dx: 0 }
    }

    pub fn dx(i: usize) -> Self {
        BasisWedge { dn: 0, dx: 1 << i }
    }

    pub fn degree(&self) -> usize {
        (self.dn.count_ones() + self.dx.count_ones()) as usize
    }

    pub fn discrete_indices(&self) -> Vec<usize> {
        bits(self.dn)
    }

    pub fn continuous_indices(&self) -> Vec<usize> {
        bits(self.dx)
    }

    pub fn has_dn(&self, mu: usize) -> bool {
        self.dn & (1 << mu) != 0
    }

    pub fn has_dx(&self, i: usize) -> bool {
        self.dx & (1 << i) != 0
    }

    pub fn is_pure_lattice(&self) -> bool {
        self.dx == 0
    }

    fn without_dn(&self, mu: usize) -> Self {
        BasisWedge {
            dn: self.dn & !(1 << mu),
            dx: self.dx,
        }
    }

    /// `self ∧ rhs` as a sign and canonical wedge, or `None` when a covector
    /// repeats.
    pub fn wedge(&self, rhs: &BasisWedge) -> Option<(f64, BasisWedge)> {
        let s1 = merge_sign(self.dn, rhs.dn)?;
        let s2 = merge_sign(self.dx, rhs.dx)?;
        let cross = if (self.dx.count_ones() * rhs.dn.count_ones()).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        Some((
            s1 * s2 * cross,
            BasisWedge {
                dn: self.dn | rhs.dn,
                dx: self.dx | rhs.dx,
            },
        ))
    }
}

impl std::fmt::Display for BasisWedge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.degree() == 0 {
            return write!(f, "1");
        }
        let parts: Vec<String> = bits(self.dn)
            .into_iter()
            .map(|mu| format!("dn{mu}"))
            .chain(bits(self.dx).into_iter().map(|i| format!("dx{i}")))
            .collect();
        write!(f, "{}", parts.join("^"))
    }
}

fn mask_of(idx: &[usize], kind: &str) -> Result<u32> {
    let mut mask = 0u32;
    for w in idx.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::InvalidParameter(format!(
                "{kind} indices {idx:?} are not strictly increasing"
            )));
        }
    }
    for &k in idx {
        if k >= 32 {
            return Err(Error::InvalidParameter(format!(
                "{kind} index {k} too large"
            )));
        }
        mask |= 1 << k;
    }
    Ok(mask)
}

fn bits(mask: u32) -> Vec<usize> {
    (0..32).filter(|k| mask & (1 << k) != 0).collect()
}

/// Sign of sorting the concatenation of two increasing index sets.
fn merge_sign(a: u32, b: u32) -> Option<f64> {
    if a & b != 0 {
        return None;
    }
    let mut inversions = 0u32;
    for k in bits(b) {
        inversions += (a >> (k + 1)).count_ones();
    }
    Some(if inversions.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    })
}

/// The coefficient obtained when `dn^μ` is moved to the right past `f`:
/// `dn^μ f = (E_μ f) dn^μ`.
pub fn normalize_commute(mu: usize, f: &Field) -> Result<Field> {
    f.shift(mu)
}

/// Homogeneous form of fixed degree and coefficient shape.
#[derive(Clone, Debug)]
pub struct Form {
    domain: Arc<Domain>,
    degree: usize,
    shape: Shape,
    terms: BTreeMap<BasisWedge, Field>,
}

impl Form {
    pub fn zero(domain: &Arc<Domain>, degree: usize, shape: Shape) -> Self {
        Form {
            domain: domain.clone(),
            degree,
            shape,
            terms: BTreeMap::new(),
        }
    }

    /// The 0-form `f`.
    pub fn function(f: &Field) -> Self {
        Form::term(f.clone(), BasisWedge::ONE).expect("degree-0 term is always valid")
    }

    /// The single term `f · basis`.
    pub fn term(f: Field, basis: BasisWedge) -> Result<Self> {
        let mut out = Form::zero(f.domain(), basis.degree(), f.shape());
        out.check_basis(&basis)?;
        if !f.is_zero() {
            out.terms.insert(basis, f);
        }
        Ok(out)
    }

    /// Sum of terms of a common degree and shape.
    pub fn from_terms(
        domain: &Arc<Domain>,
        degree: usize,
        shape: Shape,
        terms: impl IntoIterator<Item = (BasisWedge, Field)>,
    ) -> Result<Self> {
        let mut out = Form::zero(domain, degree, shape);
        for (b, f) in terms {
            out.accumulate(b, f)?;
        }
        Ok(out)
    }

    fn check_basis(&self, b: &BasisWedge) -> Result<()> {
        if b.degree() != self.degree {
            return Err(Error::InvalidParameter(format!(
                "basis {b} in a degree-{} form",
                self.degree
            )));
        }
        if let Some(&mu) = b.discrete_indices().last() {
            self.domain.check_lattice_dir(mu)?;
        }
        if let Some(&i) = b.continuous_indices().last() {
            self.domain.check_continuous_dir(i)?;
        }
        Ok(())
    }

    /// Adds `f · basis`, merging with an existing term and dropping zeros.
    fn accumulate(&mut self, b: BasisWedge, f: Field) -> Result<()> {
        self.check_basis(&b)?;
        if f.shape() != self.shape {
            return Err(Error::ShapeMismatch(format!(
                "coefficient {} in a form of shape {}",
                f.shape(),
                self.shape
            )));
        }
        if f.domain() != &self.domain && **f.domain() != *self.domain {
            return Err(Error::DomainMismatch);
        }
        let merged = match self.terms.remove(&b) {
            Some(g) => g.add(&f)?,
            None => f,
        };
        if !merged.is_zero() {
            self.terms.insert(b, merged);
        }
        Ok(())
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn terms(&self) -> impl Iterator<Item = (&BasisWedge, &Field)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, b: &BasisWedge) -> Option<&Field> {
        self.terms.get(b)
    }

    /// Common valid region of all coefficients (the full box for the zero form).
    pub fn region(&self) -> LatticeBox {
        self.terms
            .values()
            .fold(self.domain.full_box(), |r, f| r.intersect(f.region()))
    }

    pub fn is_pure_lattice(&self) -> bool {
        self.terms.keys().all(|b| b.is_pure_lattice())
    }

    fn check_compatible(&self, rhs: &Form) -> Result<()> {
        if self.domain != rhs.domain && *self.domain != *rhs.domain {
            return Err(Error::DomainMismatch);
        }
        Ok(())
    }

    pub fn add(&self, rhs: &Form) -> Result<Form> {
        self.check_compatible(rhs)?;
        if self.degree != rhs.degree || self.shape != rhs.shape {
            return Err(Error::ShapeMismatch(format!(
                "adding degree {} / {} to degree {} / {}",
                self.degree, self.shape, rhs.degree, rhs.shape
            )));
        }
        let mut out = self.clone();
        for (b, f) in &rhs.terms {
            out.accumulate(*b, f.clone())?;
        }
        Ok(out)
    }

    pub fn sub(&self, rhs: &Form) -> Result<Form> {
        self.add(&rhs.neg())
    }

    pub fn neg(&self) -> Form {
        self.map_coefficients(|f| f.neg())
    }

    pub fn scale(&self, c: C64) -> Form {
        let mut out = self.map_coefficients(|f| f.scale(c));
        out.terms.retain(|_, f| !f.is_zero());
        out
    }

    fn map_coefficients(&self, g: impl Fn(&Field) -> Field) -> Form {
        Form {
            domain: self.domain.clone(),
            degree: self.degree,
            shape: self.shape,
            terms: self.terms.iter().map(|(b, f)| (*b, g(f))).collect(),
        }
    }

    /// Applies a fallible map to every coefficient, keeping the basis.
    pub fn try_map(&self, shape: Shape, g: impl Fn(&Field) -> Result<Field>) -> Result<Form> {
        let mut out = Form::zero(&self.domain, self.degree, shape);
        for (b, f) in &self.terms {
            out.accumulate(*b, g(f)?)?;
        }
        Ok(out)
    }

    /// Restricts every coefficient to `region`.
    pub fn restrict(&self, region: &LatticeBox) -> Form {
        self.map_coefficients(|f| f.restrict(region.clone()))
    }

    /// `self ∧ rhs`: each `dn^μ` of a left basis is moved past the right
    /// coefficient by applying `E_μ`, then the bases are sorted with sign.
    pub fn wedge(&self, rhs: &Form) -> Result<Form> {
        self.check_compatible(rhs)?;
        let shape = self.shape.product(rhs.shape)?;
        let degree = self.degree + rhs.degree;
        if degree > self.domain.p() + self.domain.q() {
            return Ok(Form::zero(&self.domain, degree, shape));
        }
        let mut out = Form::zero(&self.domain, degree, shape);
        for (b1, f) in &self.terms {
            for (b2, g) in &rhs.terms {
                let Some((sign, b)) = b1.wedge(b2) else {
                    continue;
                };
                let mut moved = g.clone();
                for mu in b1.discrete_indices() {
                    moved = normalize_commute(mu, &moved)?;
                }
                let coeff = f.matmul(&moved)?.scale_real(sign);
                out.accumulate(b, coeff)?;
            }
        }
        Ok(out)
    }

    /// Lattice part of the exterior derivative, `Σ_μ Δ_μ f_IJ dn^μ ∧ dn^I ∧ dx^J`.
    pub fn d_discrete(&self) -> Result<Form> {
        let mut out = Form::zero(&self.domain, self.degree + 1, self.shape);
        for (b, f) in &self.terms {
            for mu in 0..self.domain.p() {
                let Some((sign, nb)) = BasisWedge::dn(mu).wedge(b) else {
                    continue;
                };
                out.accumulate(nb, f.delta(mu)?.scale_real(sign))?;
            }
        }
        Ok(out)
    }

    /// Continuous part of the exterior derivative, `Σ_i ∂_i f_IJ dx^i ∧ dn^I ∧ dx^J`.
    pub fn d_continuous(&self) -> Result<Form> {
        let mut out = Form::zero(&self.domain, self.degree + 1, self.shape);
        for (b, f) in &self.terms {
            for i in 0..self.domain.q() {
                let Some((sign, nb)) = BasisWedge::dx(i).wedge(b) else {
                    continue;
                };
                out.accumulate(nb, f.partial(i)?.scale_real(sign))?;
            }
        }
        Ok(out)
    }

    /// `d = d_D + d_C`.
    pub fn d(&self) -> Result<Form> {
        self.d_discrete()?.add(&self.d_continuous()?)
    }

    /// Max-norm and L2 norm over the common region, taken over all
    /// coefficient entries. The L2 norm sums the per-term squares.
    pub fn norms(&self) -> Result<(f64, f64)> {
        let region = self.region();
        let mut max = 0.0f64;
        let mut sq = 0.0f64;
        for f in self.terms.values() {
            let (m, l2) = f.restrict(region.clone()).norms()?;
            max = max.max(m);
            sq += l2 * l2;
        }
        Ok((max, sq.sqrt()))
    }

    pub fn max_norm(&self) -> Result<f64> {
        Ok(self.norms()?.0)
    }

    /// Stores every coefficient as grid samples.
    pub fn materialize(&self) -> Result<Form> {
        let mut out = Form::zero(&self.domain, self.degree, self.shape);
        for (b, f) in &self.terms {
            out.terms.insert(*b, f.materialize()?);
        }
        Ok(out)
    }
}

/// Mixed-degree sum, one homogeneous [`Form`] per degree.
#[derive(Clone, Debug)]
pub struct GradedForm {
    parts: BTreeMap<usize, Form>,
}

impl GradedForm {
    pub fn new() -> Self {
        GradedForm {
            parts: BTreeMap::new(),
        }
    }

    pub fn part(&self, degree: usize) -> Option<&Form> {
        self.parts.get(&degree)
    }

    pub fn parts(&self) -> impl Iterator<Item = &Form> {
        self.parts.values()
    }

    pub fn add_form(&mut self, f: &Form) -> Result<()> {
        let merged = match self.parts.remove(&f.degree()) {
            Some(g) => g.add(f)?,
            None => f.clone(),
        };
        self.parts.insert(f.degree(), merged);
        Ok(())
    }

    pub fn add(&self, rhs: &GradedForm) -> Result<GradedForm> {
        let mut out = self.clone();
        for f in rhs.parts() {
            out.add_form(f)?;
        }
        Ok(out)
    }

    pub fn wedge(&self, rhs: &GradedForm) -> Result<GradedForm> {
        let mut out = GradedForm::new();
        for a in self.parts() {
            for b in rhs.parts() {
                out.add_form(&a.wedge(b)?)?;
            }
        }
        Ok(out)
    }

    pub fn d(&self) -> Result<GradedForm> {
        let mut out = GradedForm::new();
        for a in self.parts() {
            out.add_form(&a.d()?)?;
        }
        Ok(out)
    }

    pub fn max_norm(&self) -> Result<f64> {
        self.parts()
            .map(|f| f.max_norm())
            .try_fold(0.0f64, |m, r| Ok(m.max(r?)))
    }
}

impl Default for GradedForm {
    fn default() -> Self {
        GradedForm::new()
    }
}

impl From<Form> for GradedForm {
    fn from(f: Form) -> Self {
        let mut g = GradedForm::new();
        g.parts.insert(f.degree(), f);
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_domain, Point};
    use crate::value::CMatrix;

    fn lattice2() -> Arc<Domain> {
        Arc::new(make_domain(2, 0, &[(0, 7), (0, 7)], &[], &[]).unwrap())
    }

    fn coord(d: &Arc<Domain>, mu: usize) -> Field {
        Field::lattice_coordinate(d, mu).unwrap()
    }

    fn scalar_at(f: &Field, p: &Point) -> C64 {
        f.eval(p).unwrap().as_scalar().unwrap()
    }

    #[test]
    fn basis_signs() {
        let a = BasisWedge::dn(1);
        let b = BasisWedge::dn(0);
        assert_eq!(
            a.wedge(&b).unwrap(),
            (-1.0, BasisWedge::new(&[0, 1], &[]).unwrap())
        );
        assert!(a.wedge(&a).is_none());
        let dx = BasisWedge::dx(0);
        assert_eq!(dx.wedge(&b).unwrap().0, -1.0);
        assert_eq!(b.wedge(&dx).unwrap().0, 1.0);
        assert!(BasisWedge::new(&[1, 0], &[]).is_err());
        assert_eq!(
            BasisWedge::new(&[0, 2], &[1]).unwrap().to_string(),
            "dn0^dn2^dx1"
        );
    }

    #[test]
    fn commuting_past_a_coefficient_shifts_it() {
        let d = lattice2();
        let e = normalize_commute(0, &coord(&d, 0)).unwrap();
        assert_eq!(e.eval_lattice(&[3, 1]).unwrap(), CMatrix::real(4.0));
        let e2 = normalize_commute(0, &coord(&d, 1)).unwrap();
        assert_eq!(e2.eval_lattice(&[3, 1]).unwrap(), CMatrix::real(1.0));
    }

    #[test]
    fn wedge_of_repeated_covector_vanishes() {
        let d = lattice2();
        let a = Form::term(coord(&d, 0), BasisWedge::dn(0)).unwrap();
        assert!(a.wedge(&a).unwrap().is_empty());
    }

    #[test]
    fn d_of_square_and_mixed_product() {
        let d = Arc::new(make_domain(1, 1, &[(0, 9)], &[(0.0, 1.0)], &[0.25]).unwrap());
        let n = coord(&d, 0);
        let x = Field::continuous_coordinate(&d, 0).unwrap();
        let sq = Form::function(&n.pointwise_mul(&n).unwrap()).d().unwrap();
        let c = sq.coefficient(&BasisWedge::dn(0)).unwrap();
        assert_eq!(scalar_at(c, &Point::new(&[3], &[0.5])), C64::new(7.0, 0.0));
        let nx = Form::function(&n.pointwise_mul(&x).unwrap()).d().unwrap();
        let p = Point::new(&[4], &[0.75]);
        assert_eq!(
            scalar_at(nx.coefficient(&BasisWedge::dn(0)).unwrap(), &p).re,
            0.75
        );
        assert_eq!(
            scalar_at(nx.coefficient(&BasisWedge::dx(0)).unwrap(), &p).re,
            4.0
        );
        let dd = Form::function(&n.pointwise_mul(&x).unwrap())
            .d()
            .unwrap()
            .d()
            .unwrap();
        assert!(dd.max_norm().unwrap() <= 1e-12);
    }

    #[test]
    fn d_of_basis_covectors_is_zero() {
        let d = Arc::new(make_domain(1, 1, &[(0, 5)], &[(0.0, 1.0)], &[0.5]).unwrap());
        let one = Field::scalar(&d, C64::new(1.0, 0.0));
        for b in [BasisWedge::dn(0), BasisWedge::dx(0)] {
            assert!(Form::term(one.clone(), b).unwrap().d().unwrap().is_empty());
        }
    }

    #[test]
    fn graded_forms_collect_degrees() {
        let d = lattice2();
        let f = Form::function(&coord(&d, 0));
        let df = f.d().unwrap();
        let g = GradedForm::from(f.clone());
        let mut h = g.add(&GradedForm::from(df.clone())).unwrap();
        assert!(h.part(0).is_some() && h.part(1).is_some());
        h.add_form(&df.neg()).unwrap();
        assert_eq!(h.part(1).unwrap().max_norm().unwrap(), 0.0);
        let dg = g.d().unwrap();
        let dg = dg.part(1).unwrap();
        let c1 = dg.coefficient(&BasisWedge::dn(1)).unwrap();
        assert_eq!(c1.max_norm().unwrap(), 0.0);
        assert_eq!(
            dg.coefficient(&BasisWedge::dn(0))
                .unwrap()
                .max_norm()
                .unwrap(),
            1.0
        );
    }
}

//! Immutable scalar- or matrix-valued complex fields.
//!
//! A [`Field`] is a shared expression tree. Leaves are constants, analytic
//! rules (a closure returning any requested mixed partial) or sampled grids.
//! Interior nodes are the pointwise arithmetic of [`CombineOp`], entrywise
//! elementary functions, and the lattice operators in `ops`. Continuous
//! partials are pushed through the tree symbolically, so analytic leaves give
//! exact derivatives while grid leaves fall back to finite differences.

use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use super::{Domain, LatticeBox, Point};
use crate::error::{Error, Result};
use crate::value::{CMatrix, Shape, C64};

pub type RuleFn = dyn Fn(&Point, &[u32]) -> CMatrix + Send + Sync;

/// Evaluation rule for an analytic leaf.
///
/// The closure receives the point and the derivative order per continuous
/// direction and must return the corresponding mixed partial. `max_order`
/// caps the orders the closure supports; asking for more is reported as a
/// missing partial rule.
pub struct AnalyticRule {
    pub(super) eval: Arc<RuleFn>,
    pub(super) max_order: Vec<u32>,
}

/// Entrywise elementary functions with known derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElemFn {
    Exp,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Ln,
    Recip,
}

impl ElemFn {
    pub fn apply(self, z: C64) -> C64 {
        match self {
            ElemFn::Exp => z.exp(),
            ElemFn::Sin => z.sin(),
            ElemFn::Cos => z.cos(),
            ElemFn::Sinh => z.sinh(),
            ElemFn::Cosh => z.cosh(),
            ElemFn::Ln => z.ln(),
            ElemFn::Recip => z.inv(),
        }
    }
}

/// Pointwise field arithmetic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CombineOp {
    Add,
    Sub,
    ScalarMul(C64),
    PointwiseMul,
    MatrixMul,
    Conjugate,
    /// Entrywise squared modulus `|f|²`.
    NormEntrywise,
}

#[derive(Clone)]
pub struct Field(pub(super) Arc<Node>);

pub(super) struct Node {
    pub(super) domain: Arc<Domain>,
    pub(super) shape: Shape,
    pub(super) region: LatticeBox,
    pub(super) kind: Kind,
}

pub(super) enum Kind {
    Const(CMatrix),
    Analytic {
        rule: Arc<AnalyticRule>,
        orders: Vec<u32>,
    },
    Grid(Arc<GridData>),
    Add(Field, Field),
    Sub(Field, Field),
    Neg(Field),
    Scale(C64, Field),
    MatMul(Field, Field),
    Pointwise(Field, Field),
    Conj(Field),
    Map(ElemFn, Field),
    Shift {
        f: Field,
        dir: usize,
        by: i64,
    },
    Pin {
        f: Field,
        dir: usize,
        at: i64,
    },
    AntiDiff {
        f: Field,
        dir: usize,
        base: i64,
    },
    Assemble(Vec<Field>),
    Entry {
        f: Field,
        r: usize,
        c: usize,
    },
    Inverse(Field),
    /// Same values as the operand on a smaller region.
    Restrict(Field),
}

pub(super) struct GridData {
    pub(super) dims: Vec<usize>,
    pub(super) samples: Vec<C64>,
    pub(super) derivs: Vec<Option<Field>>,
    pub(super) fd_cache: Vec<OnceLock<Field>>,
}

impl std::fmt::Debug for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Field({} on {}, {})",
            self.shape(),
            self.region(),
            self.backend_name()
        )
    }
}

pub(super) fn same_domain(a: &Arc<Domain>, b: &Arc<Domain>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl Field {
    pub(super) fn node(domain: Arc<Domain>, shape: Shape, region: LatticeBox, kind: Kind) -> Field {
        Field(Arc::new(Node {
            domain,
            shape,
            region,
            kind,
        }))
    }

    pub(super) fn kind(&self) -> &Kind {
        &self.0.kind
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.0.domain
    }

    pub fn shape(&self) -> Shape {
        self.0.shape
    }

    pub fn region(&self) -> &LatticeBox {
        &self.0.region
    }

    pub fn backend_name(&self) -> &'static str {
        match &self.0.kind {
            Kind::Const(_) => "constant",
            Kind::Analytic { .. } => "analytic",
            Kind::Grid(_) => "grid",
            _ => "expression",
        }
    }

    pub fn is_grid(&self) -> bool {
        matches!(self.0.kind, Kind::Grid(_))
    }

    /// True when the field is a constant zero node.
    pub fn is_zero(&self) -> bool {
        matches!(&self.0.kind, Kind::Const(v) if v.is_zero())
    }

    pub fn as_constant(&self) -> Option<&CMatrix> {
        match &self.0.kind {
            Kind::Const(v) => Some(v),
            _ => None,
        }
    }

    // ---- constructors ----------------------------------------------------

    pub fn constant(domain: &Arc<Domain>, value: CMatrix) -> Field {
        Field::node(
            domain.clone(),
            value.shape(),
            domain.full_box(),
            Kind::Const(value),
        )
    }

    pub fn scalar(domain: &Arc<Domain>, z: C64) -> Field {
        Field::constant(domain, CMatrix::scalar(z))
    }

    pub fn zeros(domain: &Arc<Domain>, shape: Shape) -> Field {
        Field::constant(domain, CMatrix::zeros(shape))
    }

    pub(super) fn zeros_on(domain: &Arc<Domain>, shape: Shape, region: LatticeBox) -> Field {
        Field::node(
            domain.clone(),
            shape,
            region,
            Kind::Const(CMatrix::zeros(shape)),
        )
    }

    pub(super) fn const_on(domain: &Arc<Domain>, value: CMatrix, region: LatticeBox) -> Field {
        Field::node(domain.clone(), value.shape(), region, Kind::Const(value))
    }

    /// Analytic field defined on the whole domain.
    pub fn analytic(
        domain: &Arc<Domain>,
        shape: Shape,
        max_order: Vec<u32>,
        rule: impl Fn(&Point, &[u32]) -> CMatrix + Send + Sync + 'static,
    ) -> Result<Field> {
        if max_order.len() != domain.q() {
            return Err(Error::CountMismatch(format!(
                "max_order has {} entries for q = {}",
                max_order.len(),
                domain.q()
            )));
        }
        let orders = vec![0; domain.q()];
        Ok(Field::node(
            domain.clone(),
            shape,
            domain.full_box(),
            Kind::Analytic {
                rule: Arc::new(AnalyticRule {
                    eval: Arc::new(rule),
                    max_order,
                }),
                orders,
            },
        ))
    }

    /// Field depending on lattice coordinates only; all continuous partials vanish.
    pub fn lattice_fn(
        domain: &Arc<Domain>,
        shape: Shape,
        f: impl Fn(&[i64]) -> CMatrix + Send + Sync + 'static,
    ) -> Field {
        let q = domain.q();
        Field::analytic(domain, shape, vec![u32::MAX; q], move |p, ord| {
            if ord.iter().all(|&o| o == 0) {
                f(&p.lattice)
            } else {
                CMatrix::zeros(shape)
            }
        })
        .expect("max_order length matches q")
    }

    /// The coordinate function `n^μ`.
    pub fn lattice_coordinate(domain: &Arc<Domain>, mu: usize) -> Result<Field> {
        domain.check_lattice_dir(mu)?;
        Ok(Field::lattice_fn(domain, Shape::SCALAR, move |n| {
            CMatrix::real(n[mu] as f64)
        }))
    }

    /// The coordinate function `x^i`.
    pub fn continuous_coordinate(domain: &Arc<Domain>, i: usize) -> Result<Field> {
        domain.check_continuous_dir(i)?;
        let q = domain.q();
        Field::analytic(domain, Shape::SCALAR, vec![u32::MAX; q], move |p, ord| {
            let total: u32 = ord.iter().sum();
            if total == 0 {
                CMatrix::real(p.continuous[i])
            } else if total == 1 && ord[i] == 1 {
                CMatrix::real(1.0)
            } else {
                CMatrix::real(0.0)
            }
        })
    }

    /// Grid field from row-major samples over `region` × continuous grid.
    ///
    /// Samples are ordered with lattice directions first, then continuous
    /// directions, last index fastest; each sample is `shape.len()` complex
    /// entries in row-major order.
    pub fn grid(
        domain: &Arc<Domain>,
        shape: Shape,
        region: LatticeBox,
        samples: Vec<C64>,
    ) -> Result<Field> {
        if region.bounds.len() != domain.p() {
            return Err(Error::CountMismatch("grid region dimension".into()));
        }
        if region.is_empty() {
            return Err(Error::EmptyRegion("grid region".into()));
        }
        if !domain.full_box().contains_box(&region) {
            return Err(Error::OutsideRegion(format!("grid region {region}")));
        }
        let mut dims: Vec<usize> = region
            .bounds
            .iter()
            .map(|&(lo, hi)| (hi - lo + 1) as usize)
            .collect();
        dims.extend(domain.continuous_axes().iter().map(|a| a.samples()));
        let expected = dims.iter().product::<usize>() * shape.len();
        if samples.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "{} sample values, expected {expected}",
                samples.len()
            )));
        }
        if let Some(k) = samples
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::NonFinite(format!("grid sample {}", k / shape.len())));
        }
        let q = domain.q();
        Ok(Field::node(
            domain.clone(),
            shape,
            region,
            Kind::Grid(Arc::new(GridData {
                dims,
                samples,
                derivs: vec![None; q],
                fd_cache: (0..q).map(|_| OnceLock::new()).collect(),
            })),
        ))
    }

    /// Samples `f` on the grid of `region`.
    pub fn grid_from_fn(
        domain: &Arc<Domain>,
        shape: Shape,
        region: LatticeBox,
        f: impl Fn(&Point) -> CMatrix + Sync,
    ) -> Result<Field> {
        let pts = sample_points(domain, &region);
        let vals: Vec<CMatrix> = pts.par_iter().map(&f).collect();
        let mut samples = Vec::with_capacity(vals.len() * shape.len());
        for v in &vals {
            if v.shape() != shape {
                return Err(Error::ShapeMismatch(format!(
                    "sample of shape {} for field of shape {shape}",
                    v.shape()
                )));
            }
            samples.extend_from_slice(v.as_slice());
        }
        Field::grid(domain, shape, region, samples)
    }

    /// Attaches known derivative samples in continuous direction `i` to a grid
    /// field; `partial(i)` then returns them instead of a finite difference.
    pub fn with_derivative(&self, i: usize, derivative: Field) -> Result<Field> {
        self.0.domain.check_continuous_dir(i)?;
        let Kind::Grid(g) = &self.0.kind else {
            return Err(Error::Unsupported(
                "derivative channels attach to grid fields only".into(),
            ));
        };
        if !same_domain(&self.0.domain, &derivative.0.domain) {
            return Err(Error::DomainMismatch);
        }
        if derivative.shape() != self.shape() || derivative.region() != self.region() {
            return Err(Error::ShapeMismatch(
                "derivative channel must match shape and region".into(),
            ));
        }
        let mut derivs = g.derivs.clone();
        derivs[i] = Some(derivative);
        Ok(Field::node(
            self.0.domain.clone(),
            self.shape(),
            self.region().clone(),
            Kind::Grid(Arc::new(GridData {
                dims: g.dims.clone(),
                samples: g.samples.clone(),
                derivs,
                fd_cache: (0..self.0.domain.q()).map(|_| OnceLock::new()).collect(),
            })),
        ))
    }

    /// Raw samples of a grid field.
    pub fn grid_samples(&self) -> Option<&[C64]> {
        match &self.0.kind {
            Kind::Grid(g) => Some(&g.samples),
            _ => None,
        }
    }

    /// Builds a matrix field from scalar entry fields in row-major order.
    pub fn assemble(domain: &Arc<Domain>, shape: Shape, entries: Vec<Field>) -> Result<Field> {
        if entries.len() != shape.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for shape {shape}",
                entries.len()
            )));
        }
        let mut region = domain.full_box();
        for e in &entries {
            if !same_domain(domain, e.domain()) {
                return Err(Error::DomainMismatch);
            }
            if !e.shape().is_scalar() {
                return Err(Error::ShapeMismatch("assemble needs scalar entries".into()));
            }
            region = region.intersect(e.region());
        }
        if region.is_empty() {
            return Err(Error::EmptyRegion("assemble".into()));
        }
        if entries.iter().all(|e| e.as_constant().is_some()) {
            let data = entries
                .iter()
                .map(|e| e.as_constant().unwrap().as_slice()[0])
                .collect();
            return Ok(Field::const_on(
                domain,
                CMatrix::from_vec(shape, data)?,
                region,
            ));
        }
        Ok(Field::node(
            domain.clone(),
            shape,
            region,
            Kind::Assemble(entries),
        ))
    }

    /// The same field on `region ∩ self.region()`.
    pub fn restrict(&self, region: LatticeBox) -> Field {
        let region = self.region().intersect(&region);
        if &region == self.region() {
            return self.clone();
        }
        match &self.0.kind {
            Kind::Const(v) => Field::const_on(&self.0.domain, v.clone(), region),
            Kind::Restrict(inner) => inner.restrict(region),
            _ => Field::node(
                self.0.domain.clone(),
                self.shape(),
                region,
                Kind::Restrict(self.clone()),
            ),
        }
    }

    // ---- arithmetic --------------------------------------------------------

    fn joint_region(&self, rhs: &Field, what: &str) -> Result<LatticeBox> {
        if !same_domain(&self.0.domain, &rhs.0.domain) {
            return Err(Error::DomainMismatch);
        }
        let r = self.region().intersect(rhs.region());
        if r.is_empty() {
            return Err(Error::EmptyRegion(format!(
                "{what}: {} and {} do not overlap",
                self.region(),
                rhs.region()
            )));
        }
        Ok(r)
    }

    pub fn add(&self, rhs: &Field) -> Result<Field> {
        if self.shape() != rhs.shape() {
            return Err(Error::ShapeMismatch(format!(
                "add {} and {}",
                self.shape(),
                rhs.shape()
            )));
        }
        let region = self.joint_region(rhs, "add")?;
        if let (Some(a), Some(b)) = (self.as_constant(), rhs.as_constant()) {
            return Ok(Field::const_on(&self.0.domain, a.add(b)?, region));
        }
        if self.is_zero() {
            return Ok(rhs.restrict(region));
        }
        if rhs.is_zero() {
            return Ok(self.restrict(region));
        }
        Ok(Field::node(
            self.0.domain.clone(),
            self.shape(),
            region,
            Kind::Add(self.clone(), rhs.clone()),
        ))
    }

    pub fn sub(&self, rhs: &Field) -> Result<Field> {
        if self.shape() != rhs.shape() {
            return Err(Error::ShapeMismatch(format!(
                "sub {} and {}",
                self.shape(),
                rhs.shape()
            )));
        }
        let region = self.joint_region(rhs, "sub")?;
        if let (Some(a), Some(b)) = (self.as_constant(), rhs.as_constant()) {
            return Ok(Field::const_on(&self.0.domain, a.sub(b)?, region));
        }
        if rhs.is_zero() {
            return Ok(self.restrict(region));
        }
        if self.is_zero() {
            return Ok(rhs.neg().restrict(region));
        }
        Ok(Field::node(
            self.0.domain.clone(),
            self.shape(),
            region,
            Kind::Sub(self.clone(), rhs.clone()),
        ))
    }

    pub fn neg(&self) -> Field {
        if let Some(a) = self.as_constant() {
            return Field::const_on(&self.0.domain, a.neg(), self.region().clone());
        }
        if let Kind::Neg(inner) = &self.0.kind {
            return inner.clone();
        }
        Field::node(
            self.0.domain.clone(),
            self.shape(),
            self.region().clone(),
            Kind::Neg(self.clone()),
        )
    }

    pub fn scale(&self, c: C64) -> Field {
        if let Some(a) = self.as_constant() {
            return Field::const_on(&self.0.domain, a.scale(c), self.region().clone());
        }
        if c == C64::new(0.0, 0.0) {
            return Field::zeros_on(&self.0.domain, self.shape(), self.region().clone());
        }
        if c == C64::new(1.0, 0.0) {
            return self.clone();
        }
        Field::node(
            self.0.domain.clone(),
            self.shape(),
            self.region().clone(),
            Kind::Scale(c, self.clone()),
        )
    }

    pub fn scale_real(&self, c: f64) -> Field {
        self.scale(C64::new(c, 0.0))
    }

    /// Matrix product `self · rhs`; order is preserved, 1×1 operands broadcast.
    pub fn matmul(&self, rhs: &Field) -> Result<Field> {
        let shape = self.shape().product(rhs.shape())?;
        let region = self.joint_region(rhs, "matmul")?;
        if let (Some(a), Some(b)) = (self.as_constant(), rhs.as_constant()) {
            return Ok(Field::const_on(&self.0.domain, a.matmul(b)?, region));
        }
        if self.is_zero() || rhs.is_zero() {
            return Ok(Field::zeros_on(&self.0.domain, shape, region));
        }
        Ok(Field::node(
            self.0.domain.clone(),
            shape,
            region,
            Kind::MatMul(self.clone(), rhs.clone()),
        ))
    }

    /// Entrywise product, 1×1 operands broadcast.
    pub fn pointwise_mul(&self, rhs: &Field) -> Result<Field> {
        let shape = self.shape().pointwise(rhs.shape())?;
        let region = self.joint_region(rhs, "pointwise_mul")?;
        if let (Some(a), Some(b)) = (self.as_constant(), rhs.as_constant()) {
            return Ok(Field::const_on(&self.0.domain, a.hadamard(b)?, region));
        }
        if self.is_zero() || rhs.is_zero() {
            return Ok(Field::zeros_on(&self.0.domain, shape, region));
        }
        Ok(Field::node(
            self.0.domain.clone(),
            shape,
            region,
            Kind::Pointwise(self.clone(), rhs.clone()),
        ))
    }

    pub fn conj(&self) -> Field {
        if let Some(a) = self.as_constant() {
            return Field::const_on(&self.0.domain, a.conj(), self.region().clone());
        }
        Field::node(
            self.0.domain.clone(),
            self.shape(),
            self.region().clone(),
            Kind::Conj(self.clone()),
        )
    }

    /// Entrywise `|f|²`.
    pub fn abs2(&self) -> Field {
        self.pointwise_mul(&self.conj())
            .expect("a field and its conjugate share shape and region")
    }

    pub fn map(&self, g: ElemFn) -> Field {
        if let Some(a) = self.as_constant() {
            return Field::const_on(&self.0.domain, a.map(|z| g.apply(z)), self.region().clone());
        }
        Field::node(
            self.0.domain.clone(),
            self.shape(),
            self.region().clone(),
            Kind::Map(g, self.clone()),
        )
    }

    pub fn exp(&self) -> Field {
        self.map(ElemFn::Exp)
    }

    pub fn sin(&self) -> Field {
        self.map(ElemFn::Sin)
    }

    pub fn cos(&self) -> Field {
        self.map(ElemFn::Cos)
    }

    pub fn ln(&self) -> Field {
        self.map(ElemFn::Ln)
    }

    pub fn recip(&self) -> Field {
        self.map(ElemFn::Recip)
    }

    pub fn entry(&self, r: usize, c: usize) -> Result<Field> {
        let s = self.shape();
        if r >= s.rows || c >= s.cols {
            return Err(Error::ShapeMismatch(format!("entry ({r},{c}) of {s}")));
        }
        if s.is_scalar() {
            return Ok(self.clone());
        }
        if let Some(a) = self.as_constant() {
            return Ok(Field::const_on(
                &self.0.domain,
                CMatrix::scalar(a.get(r, c)),
                self.region().clone(),
            ));
        }
        Ok(Field::node(
            self.0.domain.clone(),
            Shape::SCALAR,
            self.region().clone(),
            Kind::Entry {
                f: self.clone(),
                r,
                c,
            },
        ))
    }

    /// Pointwise matrix inverse.
    pub fn inverse(&self) -> Result<Field> {
        let s = self.shape();
        if s.rows != s.cols {
            return Err(Error::ShapeMismatch(format!("inverse of {s}")));
        }
        if let Some(a) = self.as_constant() {
            return Ok(Field::const_on(
                &self.0.domain,
                a.inverse()?,
                self.region().clone(),
            ));
        }
        Ok(Field::node(
            self.0.domain.clone(),
            s,
            self.region().clone(),
            Kind::Inverse(self.clone()),
        ))
    }

    /// Dispatches one of the pointwise operations. Binary operations take
    /// exactly two fields; unary ones exactly one.
    pub fn combine(op: CombineOp, fields: &[Field]) -> Result<Field> {
        let arity = match op {
            CombineOp::Add | CombineOp::Sub | CombineOp::PointwiseMul | CombineOp::MatrixMul => 2,
            _ => 1,
        };
        if fields.len() != arity {
            return Err(Error::CountMismatch(format!(
                "{op:?} takes {arity} fields, got {}",
                fields.len()
            )));
        }
        let f = &fields[0];
        match op {
            CombineOp::Add => f.add(&fields[1]),
            CombineOp::Sub => f.sub(&fields[1]),
            CombineOp::PointwiseMul => f.pointwise_mul(&fields[1]),
            CombineOp::MatrixMul => f.matmul(&fields[1]),
            CombineOp::ScalarMul(c) => Ok(f.scale(c)),
            CombineOp::Conjugate => Ok(f.conj()),
            CombineOp::NormEntrywise => Ok(f.abs2()),
        }
    }

    // ---- evaluation ------------------------------------------------------

    /// Evaluates at `p`, which must lie in the valid region.
    pub fn eval(&self, p: &Point) -> Result<CMatrix> {
        p.validate(&self.0.domain)?;
        if !self.region().contains(&p.lattice)
            || !p
                .continuous
                .iter()
                .zip(self.0.domain.continuous_axes())
                .all(|(&x, ax)| ax.contains(x))
        {
            return Err(Error::OutsideRegion(format!(
                "{p} not in {}",
                self.region()
            )));
        }
        let v = self.eval_raw(p)?;
        if !v.is_finite() {
            return Err(Error::NonFinite(p.to_string()));
        }
        Ok(v)
    }

    pub fn eval_lattice(&self, n: &[i64]) -> Result<CMatrix> {
        self.eval(&Point::lattice(n))
    }

    pub(super) fn eval_raw(&self, p: &Point) -> Result<CMatrix> {
        match &self.0.kind {
            Kind::Const(v) => Ok(v.clone()),
            Kind::Analytic { rule, orders } => {
                let v = (rule.eval)(p, orders);
                if v.shape() != self.shape() {
                    return Err(Error::ShapeMismatch(format!(
                        "analytic rule returned {} for a {} field",
                        v.shape(),
                        self.shape()
                    )));
                }
                Ok(v)
            }
            Kind::Grid(g) => {
                let idx = self.grid_index(g, p)?;
                let len = self.shape().len();
                CMatrix::from_vec(self.shape(), g.samples[idx * len..(idx + 1) * len].to_vec())
            }
            Kind::Add(a, b) => a.eval_raw(p)?.add(&b.eval_raw(p)?),
            Kind::Sub(a, b) => a.eval_raw(p)?.sub(&b.eval_raw(p)?),
            Kind::Neg(a) => Ok(a.eval_raw(p)?.neg()),
            Kind::Scale(c, a) => Ok(a.eval_raw(p)?.scale(*c)),
            Kind::MatMul(a, b) => a.eval_raw(p)?.matmul(&b.eval_raw(p)?),
            Kind::Pointwise(a, b) => a.eval_raw(p)?.hadamard(&b.eval_raw(p)?),
            Kind::Conj(a) => Ok(a.eval_raw(p)?.conj()),
            Kind::Map(g, a) => Ok(a.eval_raw(p)?.map(|z| g.apply(z))),
            Kind::Shift { f, dir, by } => {
                let mut q = p.clone();
                q.lattice[*dir] += by;
                f.eval_raw(&q)
            }
            Kind::Pin { f, dir, at } => {
                let mut q = p.clone();
                q.lattice[*dir] = *at;
                f.eval_raw(&q)
            }
            Kind::AntiDiff { f, dir, base } => {
                let mut acc = CMatrix::zeros(self.shape());
                let mut q = p.clone();
                for k in *base..p.lattice[*dir] {
                    q.lattice[*dir] = k;
                    acc = acc.add(&f.eval_raw(&q)?)?;
                }
                Ok(acc)
            }
            Kind::Assemble(entries) => {
                let data = entries
                    .iter()
                    .map(|e| Ok(e.eval_raw(p)?.as_slice()[0]))
                    .collect::<Result<Vec<_>>>()?;
                CMatrix::from_vec(self.shape(), data)
            }
            Kind::Entry { f, r, c } => Ok(CMatrix::scalar(f.eval_raw(p)?.get(*r, *c))),
            Kind::Inverse(a) => a.eval_raw(p)?.inverse(),
            Kind::Restrict(a) => a.eval_raw(p),
        }
    }

    fn grid_index(&self, g: &GridData, p: &Point) -> Result<usize> {
        let mut idx = 0usize;
        for (mu, &(lo, _)) in self.region().bounds.iter().enumerate() {
            let off = p.lattice[mu] - lo;
            if off < 0 || off as usize >= g.dims[mu] {
                return Err(Error::OutsideRegion(p.to_string()));
            }
            idx = idx * g.dims[mu] + off as usize;
        }
        let p_dims = self.region().bounds.len();
        for (i, ax) in self.0.domain.continuous_axes().iter().enumerate() {
            let x = p.continuous[i];
            let k = ax.index_of(x).ok_or(Error::OffGrid { dir: i, x })?;
            idx = idx * g.dims[p_dims + i] + k;
        }
        Ok(idx)
    }

    /// Sample points of the valid region (lattice box × continuous grid).
    pub fn sample_points(&self) -> Vec<Point> {
        sample_points(&self.0.domain, self.region())
    }

    /// Evaluates on every sample point, in sample order.
    pub fn sample_values(&self) -> Result<Vec<CMatrix>> {
        if self.region().is_empty() {
            return Err(Error::EmptyRegion("sampling".into()));
        }
        self.sample_points()
            .par_iter()
            .map(|p| self.eval(p))
            .collect()
    }

    /// Max-norm and discrete L2 norm over the valid region, entrywise over
    /// matrix entries. The L2 norm weights each sample by the product of the
    /// continuous spacings (lattice spacing is 1).
    pub fn norms(&self) -> Result<(f64, f64)> {
        let vals = self.sample_values()?;
        let w: f64 = self
            .0
            .domain
            .continuous_axes()
            .iter()
            .map(|a| a.h)
            .product();
        let max = vals.iter().map(|v| v.max_abs()).fold(0.0, f64::max);
        let l2 = (vals.iter().map(|v| v.sum_sq()).sum::<f64>() * w).sqrt();
        Ok((max, l2))
    }

    pub fn max_norm(&self) -> Result<f64> {
        Ok(self.norms()?.0)
    }

    /// Evaluates the field on its region and stores the samples as a grid.
    pub fn materialize(&self) -> Result<Field> {
        if self.is_grid() {
            return Ok(self.clone());
        }
        let vals = self.sample_values()?;
        let mut samples = Vec::with_capacity(vals.len() * self.shape().len());
        for v in &vals {
            samples.extend_from_slice(v.as_slice());
        }
        Field::grid(&self.0.domain, self.shape(), self.region().clone(), samples)
    }
}

pub(super) fn sample_points(domain: &Domain, region: &LatticeBox) -> Vec<Point> {
    let lattice_pts = region.points();
    let axes = domain.continuous_axes();
    let counts: Vec<usize> = axes.iter().map(|a| a.samples()).collect();
    let total: usize = counts.iter().product();
    let mut out = Vec::with_capacity(lattice_pts.len() * total);
    for n in &lattice_pts {
        for flat in 0..total {
            let mut rem = flat;
            let mut xs = smallvec::SmallVec::<[f64; 4]>::from_elem(0.0, axes.len());
            for i in (0..axes.len()).rev() {
                xs[i] = axes[i].coord(rem % counts[i]);
                rem /= counts[i];
            }
            out.push(Point {
                lattice: n.clone(),
                continuous: xs,
            });
        }
    }
    out
}

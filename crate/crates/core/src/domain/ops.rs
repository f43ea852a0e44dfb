//! First-order operators on fields: lattice shifts `E_μ`, forward
//! differences `Δ_μ = E_μ − id`, and continuous partials `∂_i`.

use super::field::{GridData, Kind};
use super::Field;
use crate::domain::ElemFn;
use crate::error::{Error, Result};
use crate::value::C64;

impl Field {
    /// Forward shift `E_μ f(n) = f(n + μ̂)`.
    pub fn shift(&self, mu: usize) -> Result<Field> {
        self.shift_by(mu, 1)
    }

    /// Translation `f(n + k μ̂)` for any integer `k`. The valid region moves
    /// by `−k` and is clipped to the domain extent.
    pub fn shift_by(&self, mu: usize, k: i64) -> Result<Field> {
        let domain = self.domain().clone();
        domain.check_lattice_dir(mu)?;
        if k == 0 {
            return Ok(self.clone());
        }
        let (dlo, dhi) = domain.lattice_extents()[mu];
        let (lo, hi) = self.region().bounds[mu];
        let mut region = self.region().clone();
        region.bounds[mu] = ((lo - k).max(dlo), (hi - k).min(dhi));
        if region.is_empty() {
            return Err(Error::EmptyRegion(format!(
                "shift by {k} in direction {mu} leaves nothing of {}",
                self.region()
            )));
        }
        if let Some(v) = self.as_constant() {
            return Ok(Field::const_on(&domain, v.clone(), region));
        }
        if let Kind::Shift { f, dir, by } = self.kind() {
            if *dir == mu {
                let total = by + k;
                if total == 0 {
                    return Ok(f.restrict(region));
                }
                return Ok(Field::node(
                    domain,
                    self.shape(),
                    region,
                    Kind::Shift {
                        f: f.clone(),
                        dir: mu,
                        by: total,
                    },
                ));
            }
        }
        Ok(Field::node(
            domain,
            self.shape(),
            region,
            Kind::Shift {
                f: self.clone(),
                dir: mu,
                by: k,
            },
        ))
    }

    /// Forward difference `Δ_μ f = E_μ f − f`.
    pub fn delta(&self, mu: usize) -> Result<Field> {
        self.shift(mu)?.sub(self)
    }

    /// Evaluates with the `μ` coordinate pinned to `at`; the result is
    /// constant along `μ` across the whole domain extent.
    pub fn pin(&self, mu: usize, at: i64) -> Result<Field> {
        let domain = self.domain().clone();
        domain.check_lattice_dir(mu)?;
        let (lo, hi) = self.region().bounds[mu];
        if at < lo || at > hi {
            return Err(Error::OutsideRegion(format!(
                "pin n^{mu} = {at} outside [{lo},{hi}]"
            )));
        }
        let mut region = self.region().clone();
        region.bounds[mu] = domain.lattice_extents()[mu];
        if let Some(v) = self.as_constant() {
            return Ok(Field::const_on(&domain, v.clone(), region));
        }
        Ok(Field::node(
            domain,
            self.shape(),
            region,
            Kind::Pin {
                f: self.clone(),
                dir: mu,
                at,
            },
        ))
    }

    /// Anti-difference from `base`: `S f(n) = Σ_{k=base}^{n^μ−1} f(.., k, ..)`,
    /// so that `Δ_μ S f = f` and `S f = 0` at `n^μ = base`.
    pub fn anti_difference(&self, mu: usize, base: i64) -> Result<Field> {
        let domain = self.domain().clone();
        domain.check_lattice_dir(mu)?;
        let (lo, hi) = self.region().bounds[mu];
        if base < lo || base > hi {
            return Err(Error::OutsideRegion(format!(
                "anti-difference base {base} outside [{lo},{hi}]"
            )));
        }
        let mut region = self.region().clone();
        region.bounds[mu] = (base, (hi + 1).min(domain.lattice_extents()[mu].1));
        if self.is_zero() {
            return Ok(Field::zeros_on(&domain, self.shape(), region));
        }
        Ok(Field::node(
            domain,
            self.shape(),
            region,
            Kind::AntiDiff {
                f: self.clone(),
                dir: mu,
                base,
            },
        ))
    }

    /// Partial derivative in continuous direction `i`.
    ///
    /// Analytic leaves return their exact partial, grid leaves their attached
    /// derivative channel or else a second-order finite difference (central
    /// in the interior, one-sided at the two ends). Interior nodes follow the
    /// sum, product and chain rules, so the ordinary Leibniz rule holds.
    pub fn partial(&self, i: usize) -> Result<Field> {
        let domain = self.domain().clone();
        domain.check_continuous_dir(i)?;
        let zero = || Field::zeros_on(&domain, self.shape(), self.region().clone());
        Ok(match self.kind() {
            Kind::Const(_) => zero(),
            Kind::Analytic { rule, orders } => {
                if orders[i] >= rule.max_order[i] {
                    return Err(Error::MissingPartialRule(i));
                }
                let mut orders = orders.clone();
                orders[i] += 1;
                Field::node(
                    domain,
                    self.shape(),
                    self.region().clone(),
                    Kind::Analytic {
                        rule: rule.clone(),
                        orders,
                    },
                )
            }
            Kind::Grid(g) => {
                if let Some(d) = &g.derivs[i] {
                    d.clone()
                } else {
                    let count = g.dims[self.region().bounds.len() + i];
                    if count < 3 {
                        return Err(Error::TooFewSamples { dir: i, count });
                    }
                    g.fd_cache[i]
                        .get_or_init(|| self.finite_difference(g, i))
                        .clone()
                }
            }
            Kind::Add(a, b) => a.partial(i)?.add(&b.partial(i)?)?,
            Kind::Sub(a, b) => a.partial(i)?.sub(&b.partial(i)?)?,
            Kind::Neg(a) => a.partial(i)?.neg(),
            Kind::Scale(c, a) => a.partial(i)?.scale(*c),
            Kind::MatMul(a, b) => a.partial(i)?.matmul(b)?.add(&a.matmul(&b.partial(i)?)?)?,
            Kind::Pointwise(a, b) => a
                .partial(i)?
                .pointwise_mul(b)?
                .add(&a.pointwise_mul(&b.partial(i)?)?)?,
            Kind::Conj(a) => a.partial(i)?.conj(),
            Kind::Map(g, a) => {
                let outer = match g {
                    ElemFn::Exp => a.exp(),
                    ElemFn::Sin => a.cos(),
                    ElemFn::Cos => a.sin().neg(),
                    ElemFn::Sinh => a.map(ElemFn::Cosh),
                    ElemFn::Cosh => a.map(ElemFn::Sinh),
                    ElemFn::Ln => a.recip(),
                    ElemFn::Recip => {
                        let r = a.recip();
                        r.pointwise_mul(&r)?.neg()
                    }
                };
                outer.pointwise_mul(&a.partial(i)?)?
            }
            Kind::Shift { f, dir, by } => f.partial(i)?.shift_by(*dir, *by)?,
            Kind::Restrict(f) => f.partial(i)?.restrict(self.region().clone()),
            Kind::Pin { f, dir, at } => f.partial(i)?.pin(*dir, *at)?,
            Kind::AntiDiff { f, dir, base } => f.partial(i)?.anti_difference(*dir, *base)?,
            Kind::Assemble(entries) => {
                let parts = entries
                    .iter()
                    .map(|e| e.partial(i))
                    .collect::<Result<Vec<_>>>()?;
                Field::assemble(&domain, self.shape(), parts)?
            }
            Kind::Entry { f, r, c } => f.partial(i)?.entry(*r, *c)?,
            Kind::Inverse(a) => {
                let inv = self.clone();
                inv.matmul(&a.partial(i)?)?.matmul(&inv)?.neg()
            }
        })
    }

    fn finite_difference(&self, g: &GridData, i: usize) -> Field {
        let domain = self.domain();
        let h = domain.axis(i).h;
        let len = self.shape().len();
        let axis = self.region().bounds.len() + i;
        let count = g.dims[axis];
        let stride: usize = g.dims[axis + 1..].iter().product::<usize>() * len;
        let outer: usize = g.dims[..axis].iter().product();
        let mut out = vec![C64::new(0.0, 0.0); g.samples.len()];
        let at = |o: usize, k: usize, e: usize, inner: usize| {
            g.samples[o * count * stride + k * stride + inner * len + e]
        };
        let inner_count = stride / len;
        for o in 0..outer {
            for inner in 0..inner_count {
                for e in 0..len {
                    for k in 0..count {
                        let d = if k == 0 {
                            -3.0 * at(o, 0, e, inner) + 4.0 * at(o, 1, e, inner)
                                - at(o, 2, e, inner)
                        } else if k == count - 1 {
                            3.0 * at(o, k, e, inner) - 4.0 * at(o, k - 1, e, inner)
                                + at(o, k - 2, e, inner)
                        } else {
                            at(o, k + 1, e, inner) - at(o, k - 1, e, inner)
                        };
                        out[o * count * stride + k * stride + inner * len + e] = d / (2.0 * h);
                    }
                }
            }
        }
        Field::grid(domain, self.shape(), self.region().clone(), out)
            .expect("finite difference of finite samples is finite")
    }
}

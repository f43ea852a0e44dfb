//! Curvature components and their norms.
//!
//! For `μ, ν` lattice and `i, j` continuous directions:
//!
//! ```text
//! F_μν = Δ_μ B_ν − Δ_ν B_μ + B_μ (E_μ B_ν) − B_ν (E_ν B_μ)
//! F_ij = ∂_i B_j − ∂_j B_i + B_i B_j − B_j B_i
//! F_μi = Δ_μ B_i − ∂_i B_μ + B_μ (E_μ B_i) − B_i B_μ
//! ```
//!
//! The same components come out of `𝒟²s = −f (dB + B ∧ B)` by stacking the
//! two-form coefficients of a spanning set of probe sections.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{covariant_derivative, Connection, Section};
use crate::domain::{Field, LatticeBox};
use crate::error::{Error, Result};
use crate::forms::BasisWedge;
use crate::value::{CMatrix, Shape, C64};

/// Curvature components, one per unordered pair of directions.
#[derive(Clone, Debug)]
pub struct CurvatureComponents {
    pub dd: BTreeMap<(usize, usize), Field>,
    pub cc: BTreeMap<(usize, usize), Field>,
    pub dc: BTreeMap<(usize, usize), Field>,
}

/// Norms of one component over the common region.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentNorm {
    pub component: String,
    pub max: f64,
    pub l2: f64,
}

impl CurvatureComponents {
    /// Named components in a fixed order: lattice pairs, continuous pairs,
    /// then mixed pairs.
    pub fn named(&self) -> Vec<(String, &Field)> {
        let mut out = Vec::new();
        for ((a, b), f) in &self.dd {
            out.push((format!("F_dd({a},{b})"), f));
        }
        for ((a, b), f) in &self.cc {
            out.push((format!("F_cc({a},{b})"), f));
        }
        for ((a, b), f) in &self.dc {
            out.push((format!("F_dc({a},{b})"), f));
        }
        out
    }

    /// Intersection of all component regions.
    pub fn region(&self) -> Option<LatticeBox> {
        self.named()
            .into_iter()
            .map(|(_, f)| f.region().clone())
            .reduce(|a, b| a.intersect(&b))
    }

    /// Max-norm and L2 norm of every component over the common region.
    pub fn residual_norms(&self) -> Result<Vec<ComponentNorm>> {
        let region = self
            .region()
            .ok_or_else(|| Error::EmptyRegion("no curvature components".into()))?;
        if region.is_empty() {
            return Err(Error::EmptyRegion(
                "curvature components do not overlap".into(),
            ));
        }
        self.named()
            .into_iter()
            .map(|(name, f)| {
                let (max, l2) = f.restrict(region.clone()).norms()?;
                Ok(ComponentNorm {
                    component: name,
                    max,
                    l2,
                })
            })
            .collect()
    }

    /// Largest max-norm over all components.
    pub fn max_norm(&self) -> Result<f64> {
        Ok(self
            .residual_norms()?
            .iter()
            .map(|n| n.max)
            .fold(0.0, f64::max))
    }

    /// Componentwise difference; both sides must have the same pairs.
    pub fn sub(&self, rhs: &CurvatureComponents) -> Result<CurvatureComponents> {
        let diff = |a: &BTreeMap<(usize, usize), Field>, b: &BTreeMap<(usize, usize), Field>| {
            if a.len() != b.len() {
                return Err(Error::ShapeMismatch("different component sets".into()));
            }
            a.iter()
                .map(|(k, f)| {
                    let g = b
                        .get(k)
                        .ok_or_else(|| Error::ShapeMismatch(format!("missing component {k:?}")))?;
                    Ok((*k, f.sub(g)?))
                })
                .collect::<Result<BTreeMap<_, _>>>()
        };
        Ok(CurvatureComponents {
            dd: diff(&self.dd, &rhs.dd)?,
            cc: diff(&self.cc, &rhs.cc)?,
            dc: diff(&self.dc, &rhs.dc)?,
        })
    }
}

/// `F_μν` for any ordered pair of lattice directions.
pub fn curvature_dd(b: &Connection, mu: usize, nu: usize) -> Result<Field> {
    b.domain.check_lattice_dir(mu)?;
    b.domain.check_lattice_dir(nu)?;
    let (bm, bn) = (&b.discrete[mu], &b.discrete[nu]);
    bn.delta(mu)?
        .sub(&bm.delta(nu)?)?
        .add(&bm.matmul(&bn.shift(mu)?)?)?
        .sub(&bn.matmul(&bm.shift(nu)?)?)
}

/// `F_ij` for any ordered pair of continuous directions.
pub fn curvature_cc(b: &Connection, i: usize, j: usize) -> Result<Field> {
    b.domain.check_continuous_dir(i)?;
    b.domain.check_continuous_dir(j)?;
    let (bi, bj) = (&b.continuous[i], &b.continuous[j]);
    bj.partial(i)?
        .sub(&bi.partial(j)?)?
        .add(&bi.matmul(bj)?)?
        .sub(&bj.matmul(bi)?)
}

/// `F_μi` for lattice direction `μ` and continuous direction `i`.
pub fn curvature_dc(b: &Connection, mu: usize, i: usize) -> Result<Field> {
    b.domain.check_lattice_dir(mu)?;
    b.domain.check_continuous_dir(i)?;
    let (bm, bi) = (&b.discrete[mu], &b.continuous[i]);
    bi.delta(mu)?
        .sub(&bm.partial(i)?)?
        .add(&bm.matmul(&bi.shift(mu)?)?)?
        .sub(&bi.matmul(bm)?)
}

/// All components from the closed-form expressions.
pub fn curvature_components(b: &Connection) -> Result<CurvatureComponents> {
    let (p, q) = (b.domain.p(), b.domain.q());
    let pairs = |n: usize| -> Vec<(usize, usize)> {
        (0..n)
            .flat_map(|a| (a + 1..n).map(move |c| (a, c)))
            .collect()
    };
    let dd = pairs(p)
        .into_par_iter()
        .map(|(a, c)| Ok(((a, c), curvature_dd(b, a, c)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let cc = pairs(q)
        .into_par_iter()
        .map(|(a, c)| Ok(((a, c), curvature_cc(b, a, c)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let mixed: Vec<(usize, usize)> = (0..p).flat_map(|a| (0..q).map(move |c| (a, c))).collect();
    let dc = mixed
        .into_par_iter()
        .map(|(a, c)| Ok(((a, c), curvature_dc(b, a, c)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(CurvatureComponents { dd, cc, dc })
}

/// Curvature extracted from `𝒟²` applied to probe sections.
///
/// Each probe row `P_a` gives `𝒟²(P_a) = 𝒟(W_a)` with `W_a = 𝒟 P_a`, and the
/// extension rule on 1-forms reads `𝒟(W) = dW + W ∧ B`. Stacking the rows of
/// a two-form coefficient gives `R = −P F`, so `F = −P⁻¹ R`. With `None` the
/// probes are the canonical basis rows.
pub fn curvature_via_d2(b: &Connection, probes: Option<&[Field]>) -> Result<CurvatureComponents> {
    let m = b.m;
    let domain = &b.domain;
    let canonical: Vec<Field>;
    let probes = match probes {
        Some(p) => p,
        None => {
            canonical = (0..m)
                .map(|a| {
                    let mut e = CMatrix::zeros(Shape::new(1, m));
                    e.set(0, a, C64::new(1.0, 0.0));
                    Field::constant(domain, e)
                })
                .collect();
            &canonical
        }
    };
    if probes.len() != m {
        return Err(Error::CountMismatch(format!(
            "{} probe sections for rank {m}",
            probes.len()
        )));
    }
    let bform = b.as_form()?;
    let second = probes
        .iter()
        .map(|row| {
            let w = covariant_derivative(&Section::new(row.clone())?, b)?;
            w.d()?.add(&w.wedge(&bform)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let stack = |rows: Vec<Field>| -> Result<Field> {
        let mut entries = Vec::with_capacity(m * m);
        for r in &rows {
            for c in 0..m {
                entries.push(r.entry(0, c)?);
            }
        }
        Field::assemble(domain, Shape::square(m), entries)
    };
    let probe_inverse = stack(probes.to_vec())?.inverse()?;
    let extract = |basis: BasisWedge| -> Result<Field> {
        let rows = second
            .iter()
            .map(|form| {
                Ok(form
                    .coefficient(&basis)
                    .cloned()
                    .unwrap_or_else(|| Field::zeros(domain, Shape::new(1, m))))
            })
            .collect::<Result<Vec<_>>>()?;
        let r = stack(rows)?;
        Ok(probe_inverse.matmul(&r)?.neg())
    };
    let (p, q) = (domain.p(), domain.q());
    let mut out = CurvatureComponents {
        dd: BTreeMap::new(),
        cc: BTreeMap::new(),
        dc: BTreeMap::new(),
    };
    for a in 0..p {
        for c in a + 1..p {
            out.dd
                .insert((a, c), extract(BasisWedge::new(&[a, c], &[])?)?);
        }
        for c in 0..q {
            out.dc
                .insert((a, c), extract(BasisWedge::new(&[a], &[c])?)?);
        }
    }
    for a in 0..q {
        for c in a + 1..q {
            out.cc
                .insert((a, c), extract(BasisWedge::new(&[], &[a, c])?)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::domain::make_domain;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn zero_connection_is_flat_both_ways() {
        let d = Arc::new(make_domain(2, 1, &[(0, 4), (0, 4)], &[(0.0, 1.0)], &[0.5]).unwrap());
        let b = Connection::zero(&d, 2).unwrap();
        assert_eq!(curvature_components(&b).unwrap().max_norm().unwrap(), 0.0);
        assert_eq!(curvature_via_d2(&b, None).unwrap().max_norm().unwrap(), 0.0);
    }

    #[test]
    fn scalar_multiples_of_identity_are_flat() {
        let d = Arc::new(make_domain(2, 0, &[(0, 4), (0, 4)], &[], &[]).unwrap());
        let b0 = Field::constant(&d, CMatrix::identity(2).scale(c(0.7)));
        let b1 = Field::constant(&d, CMatrix::identity(2).scale(C64::new(-0.2, 1.0)));
        let b = Connection::new(&d, vec![b0, b1], vec![]).unwrap();
        assert!(curvature_components(&b).unwrap().max_norm().unwrap() < 1e-15);
    }

    #[test]
    fn single_entry_norms() {
        let d = Arc::new(make_domain(1, 0, &[(0, 3)], &[], &[]).unwrap());
        let f = Field::lattice_fn(&d, Shape::SCALAR, |n| {
            CMatrix::real(if n[0] == 2 { 3.0 } else { 0.0 })
        });
        let comps = CurvatureComponents {
            dd: BTreeMap::from([((0, 1), f)]),
            cc: BTreeMap::new(),
            dc: BTreeMap::new(),
        };
        let n = comps.residual_norms().unwrap();
        assert_eq!(n[0].max, 3.0);
        assert_eq!(n[0].l2, 3.0);
        assert_eq!(n[0].component, "F_dd(0,1)");
    }

    #[test]
    fn nilpotent_constant_pair_has_commutator_curvature() {
        let d = Arc::new(make_domain(0, 2, &[], &[(0.0, 1.0), (0.0, 1.0)], &[0.5, 0.5]).unwrap());
        let a = Field::constant(
            &d,
            CMatrix::from_rows(&[[c(0.0), c(1.0)], [c(0.0), c(0.0)]]),
        );
        let bb = Field::constant(
            &d,
            CMatrix::from_rows(&[[c(0.0), c(0.0)], [c(1.0), c(0.0)]]),
        );
        let b = Connection::new(&d, vec![], vec![a, bb]).unwrap();
        let f = curvature_components(&b).unwrap();
        let v = f.cc[&(0, 1)]
            .eval(&crate::domain::Point::new(&[], &[0.5, 0.5]))
            .unwrap();
        assert_eq!(
            v,
            CMatrix::from_rows(&[[c(1.0), c(0.0)], [c(0.0), c(-1.0)]])
        );
        let g = curvature_via_d2(&b, None).unwrap();
        assert!(f.sub(&g).unwrap().max_norm().unwrap() < 1e-15);
    }
}

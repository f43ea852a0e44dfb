//! Primitives of closed pure-lattice forms on a finite box.
//!
//! The homotopy sweeps the lattice directions in order. For direction `μ`
//! it anti-differences every coefficient carrying `dn^μ` from the base corner,
//! removes `d` of the result, and pins what is left at the base slice, where
//! closedness makes it independent of `n^μ`. After the last direction nothing
//! is left and the collected anti-differences form the primitive.

use super::{BasisWedge, Form};
use crate::error::{Error, Result};

/// Largest `d_D ω` max-norm accepted as closed.
pub const CLOSEDNESS_TOLERANCE: f64 = 1e-10;

/// Returns `P` with `d_D P = ω` on the interior of the box of `ω`.
pub fn discrete_primitive(omega: &Form) -> Result<Form> {
    if omega.degree() == 0 {
        return Err(Error::InvalidParameter(
            "a primitive needs a form of degree at least 1".into(),
        ));
    }
    if !omega.is_pure_lattice() {
        return Err(Error::Unsupported(
            "primitives are built for pure-lattice forms only".into(),
        ));
    }
    let region = omega.region();
    if region.is_empty() {
        return Err(Error::EmptyRegion("primitive input".into()));
    }
    let defect = if omega.degree() < omega.domain().p() {
        omega.d_discrete()?.max_norm()?
    } else {
        0.0
    };
    if defect > CLOSEDNESS_TOLERANCE {
        return Err(Error::NotClosed {
            defect,
            tolerance: CLOSEDNESS_TOLERANCE,
        });
    }

    let domain = omega.domain().clone();
    let mut primitive = Form::zero(&domain, omega.degree() - 1, omega.shape());
    let mut rest = omega.restrict(&region).materialize()?;
    for mu in 0..domain.p() {
        if rest.is_empty() {
            break;
        }
        let base = rest.region().bounds[mu].0;
        let mut k = Form::zero(&domain, omega.degree() - 1, omega.shape());
        for (b, f) in rest.terms() {
            if !b.has_dn(mu) {
                continue;
            }
            let tail = b.without_dn(mu);
            let (sign, _) = BasisWedge::dn(mu)
                .wedge(&tail)
                .expect("tail no longer contains dn^mu");
            let s = f.anti_difference(mu, base)?.scale_real(sign);
            k.accumulate(tail, s)?;
        }
        let k = k.materialize()?;
        let remainder = rest.sub(&k.d_discrete()?)?;
        let mut next = Form::zero(&domain, omega.degree(), omega.shape());
        for (b, f) in remainder.terms() {
            if b.has_dn(mu) {
                continue;
            }
            next.accumulate(*b, f.pin(mu, base)?.materialize()?)?;
        }
        primitive = primitive.add(&k)?;
        rest = next;
    }
    Ok(primitive)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::domain::{make_domain, Field};
    use crate::value::{CMatrix, Shape, C64};

    #[test]
    fn primitive_of_dn_is_the_coordinate() {
        let d = Arc::new(make_domain(1, 0, &[(0, 9)], &[], &[]).unwrap());
        let one = Field::scalar(&d, C64::new(1.0, 0.0));
        let omega = Form::term(one, BasisWedge::dn(0)).unwrap();
        let p = discrete_primitive(&omega).unwrap();
        let c = p.coefficient(&BasisWedge::ONE).unwrap();
        for n in 0..9 {
            assert_eq!(c.eval_lattice(&[n]).unwrap(), CMatrix::real(n as f64));
        }
    }

    #[test]
    fn primitive_of_odd_numbers_is_the_square() {
        let d = Arc::new(make_domain(1, 0, &[(0, 9)], &[], &[]).unwrap());
        let odd = Field::lattice_fn(&d, Shape::SCALAR, |n| CMatrix::real((2 * n[0] + 1) as f64));
        let omega = Form::term(odd, BasisWedge::dn(0)).unwrap();
        let p = discrete_primitive(&omega).unwrap();
        let c = p.coefficient(&BasisWedge::ONE).unwrap();
        assert_eq!(c.eval_lattice(&[6]).unwrap(), CMatrix::real(36.0));
    }

    #[test]
    fn rejects_degree_zero_mixed_and_open_forms() {
        let d = Arc::new(make_domain(2, 1, &[(0, 4), (0, 4)], &[(0.0, 1.0)], &[0.5]).unwrap());
        let n0 = Field::lattice_coordinate(&d, 0).unwrap();
        assert!(matches!(
            discrete_primitive(&Form::function(&n0)),
            Err(Error::InvalidParameter(_))
        ));
        let mixed = Form::term(n0.clone(), BasisWedge::dx(0)).unwrap();
        assert!(matches!(
            discrete_primitive(&mixed),
            Err(Error::Unsupported(_))
        ));
        let open = Form::term(n0, BasisWedge::dn(1)).unwrap();
        match discrete_primitive(&open) {
            Err(Error::NotClosed { defect, .. }) => assert_eq!(defect, 1.0),
            other => panic!("expected NotClosed, got {other:?}"),
        }
    }
}

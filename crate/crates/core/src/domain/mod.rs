//! The semi-discrete space `N = L^p × R^q` and fields living on it.
//!
//! Lattice directions have unit spacing and integer extents. Continuous
//! directions carry a real range and a sample step used by grid-backed
//! fields and by norm sweeps. A field is only ever evaluated on its valid
//! region, a lattice sub-box that shrinks as shifts and differences are
//! applied.

mod field;
pub mod io;
mod ops;

use smallvec::SmallVec;

use crate::error::{Error, Result};

pub use field::{AnalyticRule, CombineOp, ElemFn, Field};

/// A continuous axis `[a, b]` sampled with step `h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContinuousAxis {
    pub a: f64,
    pub b: f64,
    pub h: f64,
}

impl ContinuousAxis {
    pub fn samples(&self) -> usize {
        ((self.b - self.a) / self.h).round() as usize + 1
    }

    pub fn coord(&self, k: usize) -> f64 {
        self.a + k as f64 * self.h
    }

    /// Sample index of `x`, if `x` sits on a grid node.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let t = (x - self.a) / self.h;
        let k = t.round();
        if (t - k).abs() > 1e-6 || k < 0.0 || k as usize >= self.samples() {
            None
        } else {
            Some(k as usize)
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let slack = 1e-9 * self.h.max(self.b - self.a).max(1.0);
        x >= self.a - slack && x <= self.b + slack
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    lattice: Vec<(i64, i64)>,
    continuous: Vec<ContinuousAxis>,
}

/// Builds a domain, validating extents, ranges and spacings.
///
/// Each range length must be an integer multiple of its spacing so that grid
/// samples land exactly on both ends.
pub fn make_domain(
    p: usize,
    q: usize,
    lattice_extents: &[(i64, i64)],
    continuous_ranges: &[(f64, f64)],
    spacings: &[f64],
) -> Result<Domain> {
    if p + q == 0 {
        return Err(Error::NoDirections);
    }
    if lattice_extents.len() != p {
        return Err(Error::CountMismatch(format!(
            "p = {p} but {} lattice extents",
            lattice_extents.len()
        )));
    }
    if continuous_ranges.len() != q || spacings.len() != q {
        return Err(Error::CountMismatch(format!(
            "q = {q} but {} ranges and {} spacings",
            continuous_ranges.len(),
            spacings.len()
        )));
    }
    for (mu, &(lo, hi)) in lattice_extents.iter().enumerate() {
        if lo > hi {
            return Err(Error::EmptyExtent(mu));
        }
    }
    let mut continuous = Vec::with_capacity(q);
    for (i, (&(a, b), &h)) in continuous_ranges.iter().zip(spacings).enumerate() {
        if h.is_nan() || h <= 0.0 || !h.is_finite() {
            return Err(Error::NonPositiveSpacing { dir: i, h });
        }
        if !(a.is_finite() && b.is_finite()) || a > b {
            return Err(Error::BadRange {
                dir: i,
                reason: format!("[{a}, {b}] is empty or non-finite"),
            });
        }
        let cells = (b - a) / h;
        if (cells - cells.round()).abs() > 1e-6 {
            return Err(Error::BadRange {
                dir: i,
                reason: format!("length {} is not a multiple of spacing {h}", b - a),
            });
        }
        continuous.push(ContinuousAxis { a, b, h });
    }
    Ok(Domain {
        lattice: lattice_extents.to_vec(),
        continuous,
    })
}

impl Domain {
    pub fn p(&self) -> usize {
        self.lattice.len()
    }

    pub fn q(&self) -> usize {
        self.continuous.len()
    }

    pub fn lattice_extents(&self) -> &[(i64, i64)] {
        &self.lattice
    }

    pub fn continuous_axes(&self) -> &[ContinuousAxis] {
        &self.continuous
    }

    pub fn axis(&self, i: usize) -> &ContinuousAxis {
        &self.continuous[i]
    }

    pub fn full_box(&self) -> LatticeBox {
        LatticeBox {
            bounds: self.lattice.clone(),
        }
    }

    pub fn check_lattice_dir(&self, mu: usize) -> Result<()> {
        if mu < self.p() {
            Ok(())
        } else {
            Err(Error::DirectionOutOfRange {
                kind: "lattice",
                dir: mu,
                count: self.p(),
            })
        }
    }

    pub fn check_continuous_dir(&self, i: usize) -> Result<()> {
        if i < self.q() {
            Ok(())
        } else {
            Err(Error::DirectionOutOfRange {
                kind: "continuous",
                dir: i,
                count: self.q(),
            })
        }
    }

    /// Number of continuous samples per point of the lattice box.
    pub fn continuous_sample_count(&self) -> usize {
        self.continuous.iter().map(|a| a.samples()).product()
    }
}

/// A point `(n⃗, x⃗)` of the semi-discrete space.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub lattice: SmallVec<[i64; 4]>,
    pub continuous: SmallVec<[f64; 4]>,
}

impl Point {
    pub fn new(lattice: &[i64], continuous: &[f64]) -> Self {
        Point {
            lattice: SmallVec::from_slice(lattice),
            continuous: SmallVec::from_slice(continuous),
        }
    }

    pub fn lattice(n: &[i64]) -> Self {
        Point::new(n, &[])
    }

    pub fn validate(&self, domain: &Domain) -> Result<()> {
        if self.lattice.len() != domain.p() || self.continuous.len() != domain.q() {
            return Err(Error::CountMismatch(format!(
                "point has {}+{} coordinates, domain is {}+{}",
                self.lattice.len(),
                self.continuous.len(),
                domain.p(),
                domain.q()
            )));
        }
        Ok(())
    }
}

impl std::fmt::Display for Point {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "(n={:?}, x={:?})",
            self.lattice.as_slice(),
            self.continuous.as_slice()
        )
    }
}

/// Inclusive integer box over the lattice directions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LatticeBox {
    pub bounds: Vec<(i64, i64)>,
}

impl LatticeBox {
    pub fn is_empty(&self) -> bool {
        self.bounds.iter().any(|&(lo, hi)| lo > hi)
    }

    pub fn contains(&self, n: &[i64]) -> bool {
        self.bounds
            .iter()
            .zip(n)
            .all(|(&(lo, hi), &v)| v >= lo && v <= hi)
    }

    pub fn intersect(&self, other: &LatticeBox) -> LatticeBox {
        LatticeBox {
            bounds: self
                .bounds
                .iter()
                .zip(&other.bounds)
                .map(|(&(a, b), &(c, d))| (a.max(c), b.min(d)))
                .collect(),
        }
    }

    pub fn contains_box(&self, other: &LatticeBox) -> bool {
        other.is_empty()
            || self
                .bounds
                .iter()
                .zip(&other.bounds)
                .all(|(&(a, b), &(c, d))| a <= c && d <= b)
    }

    pub fn len(&self) -> usize {
        if self.is_empty() {
            0
        } else {
            self.bounds
                .iter()
                .map(|&(lo, hi)| (hi - lo + 1) as usize)
                .product()
        }
    }

    /// All lattice points in row-major order (last direction fastest).
    pub fn points(&self) -> Vec<SmallVec<[i64; 4]>> {
        let mut out = Vec::with_capacity(self.len());
        if self.is_empty() {
            return out;
        }
        let mut cur: SmallVec<[i64; 4]> = self.bounds.iter().map(|b| b.0).collect();
        loop {
            out.push(cur.clone());
            let mut d = self.bounds.len();
            loop {
                if d == 0 {
                    return out;
                }
                d -= 1;
                if cur[d] < self.bounds[d].1 {
                    cur[d] += 1;
                    break;
                }
                cur[d] = self.bounds[d].0;
            }
        }
    }
}

impl std::fmt::Display for LatticeBox {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .bounds
            .iter()
            .map(|(lo, hi)| format!("[{lo},{hi}]"))
            .collect();
        write!(f, "{}", parts.join("x"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_gordon_chain_domain() {
        let d = make_domain(1, 1, &[(0, 63)], &[(0.0, 10.0)], &[0.05]).unwrap();
        assert_eq!(d.p(), 1);
        assert_eq!(d.q(), 1);
        assert_eq!(d.lattice_extents(), &[(0, 63)]);
        assert_eq!(d.axis(0).samples(), 201);
    }

    #[test]
    fn toda_domain() {
        let d = make_domain(2, 0, &[(0, 63), (0, 63)], &[], &[]).unwrap();
        assert_eq!(d.full_box().len(), 64 * 64);
    }

    #[test]
    fn rejects_bad_domains() {
        assert_eq!(make_domain(0, 0, &[], &[], &[]), Err(Error::NoDirections));
        assert!(matches!(
            make_domain(1, 0, &[(3, 2)], &[], &[]),
            Err(Error::EmptyExtent(0))
        ));
        assert!(matches!(
            make_domain(0, 1, &[], &[(0.0, 1.0)], &[0.0]),
            Err(Error::NonPositiveSpacing { .. })
        ));
        assert!(matches!(
            make_domain(2, 0, &[(0, 1)], &[], &[]),
            Err(Error::CountMismatch(_))
        ));
        assert!(matches!(
            make_domain(0, 1, &[], &[(0.0, 1.0)], &[0.3]),
            Err(Error::BadRange { .. })
        ));
    }

    #[test]
    fn box_points_are_row_major() {
        let b = LatticeBox {
            bounds: vec![(0, 1), (5, 6)],
        };
        let pts: Vec<Vec<i64>> = b.points().into_iter().map(|p| p.to_vec()).collect();
        assert_eq!(pts, vec![vec![0, 5], vec![0, 6], vec![1, 5], vec![1, 6]]);
        let empty = LatticeBox { bounds: vec![] };
        assert_eq!(empty.points().len(), 1);
    }
}

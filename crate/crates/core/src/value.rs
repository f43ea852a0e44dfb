//! Small dense complex matrices, the pointwise value type of every field.
//!
//! Scalars are 1×1 matrices. Products and pointwise operations broadcast a
//! 1×1 operand against any shape.

use num_complex::Complex64;
use smallvec::SmallVec;

use crate::error::{Error, Result};

pub type C64 = Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Shape {
    pub rows: usize,
    pub cols: usize,
}

impl Shape {
    pub const SCALAR: Shape = Shape { rows: 1, cols: 1 };

    pub fn new(rows: usize, cols: usize) -> Self {
        Shape { rows, cols }
    }

    pub fn square(m: usize) -> Self {
        Shape { rows: m, cols: m }
    }

    pub fn is_scalar(&self) -> bool {
        self.rows == 1 && self.cols == 1
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Result shape of a matrix product, with 1×1 broadcasting.
    pub fn product(self, rhs: Shape) -> Result<Shape> {
        if self.is_scalar() {
            Ok(rhs)
        } else if rhs.is_scalar() {
            Ok(self)
        } else if self.cols == rhs.rows {
            Ok(Shape::new(self.rows, rhs.cols))
        } else {
            Err(Error::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )))
        }
    }

    /// Result shape of an entrywise operation, with 1×1 broadcasting.
    pub fn pointwise(self, rhs: Shape) -> Result<Shape> {
        if self == rhs || rhs.is_scalar() {
            Ok(self)
        } else if self.is_scalar() {
            Ok(rhs)
        } else {
            Err(Error::ShapeMismatch(format!(
                "entrywise op on {}x{} and {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )))
        }
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

/// Row-major complex matrix with inline storage for up to 2×2.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    shape: Shape,
    data: SmallVec<[C64; 4]>,
}

impl CMatrix {
    pub fn zeros(shape: Shape) -> Self {
        CMatrix {
            shape,
            data: SmallVec::from_elem(C64::new(0.0, 0.0), shape.len()),
        }
    }

    pub fn identity(m: usize) -> Self {
        let mut out = CMatrix::zeros(Shape::square(m));
        for i in 0..m {
            out.set(i, i, C64::new(1.0, 0.0));
        }
        out
    }

    pub fn scalar(z: C64) -> Self {
        CMatrix {
            shape: Shape::SCALAR,
            data: SmallVec::from_slice(&[z]),
        }
    }

    pub fn real(x: f64) -> Self {
        CMatrix::scalar(C64::new(x, 0.0))
    }

    /// Builds from row-major entries.
    pub fn from_vec(shape: Shape, data: Vec<C64>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for shape {}",
                data.len(),
                shape
            )));
        }
        Ok(CMatrix {
            shape,
            data: SmallVec::from_vec(data),
        })
    }

    pub fn from_rows<const C: usize>(rows: &[[C64; C]]) -> Self {
        let shape = Shape::new(rows.len(), C);
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        CMatrix { shape, data }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn rows(&self) -> usize {
        self.shape.rows
    }

    pub fn cols(&self) -> usize {
        self.shape.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.shape.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, z: C64) {
        self.data[r * self.shape.cols + c] = z;
    }

    /// The single entry of a 1×1 matrix.
    pub fn as_scalar(&self) -> Option<C64> {
        self.shape.is_scalar().then(|| self.data[0])
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn sum_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        CMatrix {
            shape: self.shape,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map(|z| z * c)
    }

    pub fn neg(&self) -> Self {
        self.map(|z| -z)
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    fn zip_broadcast(&self, rhs: &CMatrix, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        let shape = self.shape.pointwise(rhs.shape)?;
        let data = if self.shape == rhs.shape {
            self.data
                .iter()
                .zip(rhs.data.iter())
                .map(|(&a, &b)| f(a, b))
                .collect()
        } else if rhs.shape.is_scalar() {
            let b = rhs.data[0];
            self.data.iter().map(|&a| f(a, b)).collect()
        } else {
            let a = self.data[0];
            rhs.data.iter().map(|&b| f(a, b)).collect()
        };
        Ok(CMatrix { shape, data })
    }

    pub fn add(&self, rhs: &CMatrix) -> Result<Self> {
        self.zip_broadcast(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &CMatrix) -> Result<Self> {
        self.zip_broadcast(rhs, |a, b| a - b)
    }

    pub fn hadamard(&self, rhs: &CMatrix) -> Result<Self> {
        self.zip_broadcast(rhs, |a, b| a * b)
    }

    /// Matrix product; a 1×1 operand acts as a scalar.
    pub fn matmul(&self, rhs: &CMatrix) -> Result<Self> {
        if self.shape.is_scalar() || rhs.shape.is_scalar() {
            return self.hadamard(rhs);
        }
        let shape = self.shape.product(rhs.shape)?;
        let (n, k, m) = (self.rows(), self.cols(), rhs.cols());
        let mut out = CMatrix::zeros(shape);
        for i in 0..n {
            for j in 0..m {
                let mut acc = C64::new(0.0, 0.0);
                for l in 0..k {
                    acc += self.data[i * k + l] * rhs.data[l * m + j];
                }
                out.data[i * m + j] = acc;
            }
        }
        Ok(out)
    }

    /// Gauss–Jordan inverse with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        if self.rows() != self.cols() {
            return Err(Error::ShapeMismatch(format!(
                "inverse of non-square {}",
                self.shape
            )));
        }
        let n = self.rows();
        let mut a = self.clone();
        let mut inv = CMatrix::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a.get(i, col).norm().total_cmp(&a.get(j, col).norm()))
                .unwrap_or(col);
            let pv = a.get(pivot, col);
            if pv.norm() < 1e-300 {
                return Err(Error::Numerical("singular matrix".into()));
            }
            if pivot != col {
                for c in 0..n {
                    let (x, y) = (a.get(col, c), a.get(pivot, c));
                    a.set(col, c, y);
                    a.set(pivot, c, x);
                    let (x, y) = (inv.get(col, c), inv.get(pivot, c));
                    inv.set(col, c, y);
                    inv.set(pivot, c, x);
                }
            }
            let scale = pv.inv();
            for c in 0..n {
                a.set(col, c, a.get(col, c) * scale);
                inv.set(col, c, inv.get(col, c) * scale);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a.get(r, col);
                if factor.norm() == 0.0 {
                    continue;
                }
                for c in 0..n {
                    a.set(r, c, a.get(r, c) - factor * a.get(col, c));
                    inv.set(r, c, inv.get(r, c) - factor * inv.get(col, c));
                }
            }
        }
        Ok(inv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn nilpotent_pair_does_not_commute() {
        let a = CMatrix::from_rows(&[[c(0.0), c(1.0)], [c(0.0), c(0.0)]]);
        let b = CMatrix::from_rows(&[[c(0.0), c(0.0)], [c(1.0), c(0.0)]]);
        let ab = a.matmul(&b).unwrap();
        let ba = b.matmul(&a).unwrap();
        assert_eq!(
            ab,
            CMatrix::from_rows(&[[c(1.0), c(0.0)], [c(0.0), c(0.0)]])
        );
        assert_ne!(ab, ba);
    }

    #[test]
    fn inverse_roundtrip() {
        let a = CMatrix::from_rows(&[
            [c(0.0), C64::new(2.0, 1.0), c(1.0)],
            [c(1.0), c(0.5), c(-1.0)],
            [C64::new(0.0, 3.0), c(1.0), c(2.0)],
        ]);
        let prod = a.matmul(&a.inverse().unwrap()).unwrap();
        let err = prod.sub(&CMatrix::identity(3)).unwrap().max_abs();
        assert!(err < 1e-14, "{err}");
    }

    #[test]
    fn singular_inverse_fails() {
        let a = CMatrix::from_rows(&[[c(1.0), c(2.0)], [c(2.0), c(4.0)]]);
        assert!(a.inverse().is_err());
    }

    #[test]
    fn scalar_broadcasts() {
        let a = CMatrix::identity(2);
        let s = CMatrix::real(3.0);
        assert_eq!(s.matmul(&a).unwrap().get(1, 1), c(3.0));
        assert_eq!(a.add(&s).unwrap().get(0, 1), c(3.0));
        assert!(a.matmul(&CMatrix::zeros(Shape::new(3, 3))).is_err());
    }
}

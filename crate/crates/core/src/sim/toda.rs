//! The discrete Toda recursion, periodic in `n`:
//! `q_{m+1,n} = 2q_{m,n} − q_{m−1,n} + ln[(e^{q_{m,n+1}−q_{m,n}} + 1)/(e^{q_{m,n}−q_{m,n−1}} + 1)]`.

use std::sync::Arc;

use crate::domain::{make_domain, Field};
use crate::error::{Error, Result};
use crate::value::{Shape, C64};

/// Largest neighbour difference `|q_{m,n±1} − q_{m,n}|` accepted.
pub const TODA_EXPONENT_LIMIT: f64 = 500.0;

/// `ln(1 + e^a)` without overflow.
fn softplus(a: f64) -> f64 {
    a.max(0.0) + (-a.abs()).exp().ln_1p()
}

/// Next row from the two previous ones.
pub fn toda_step(prev: &[f64], cur: &[f64]) -> Result<Vec<f64>> {
    let n = cur.len();
    (0..n)
        .map(|j| {
            let up = cur[(j + 1) % n] - cur[j];
            let down = cur[j] - cur[(j + n - 1) % n];
            if up.abs() > TODA_EXPONENT_LIMIT || down.abs() > TODA_EXPONENT_LIMIT {
                return Err(Error::Numerical(format!(
                    "Toda neighbour difference beyond {TODA_EXPONENT_LIMIT} at n = {j}"
                )));
            }
            Ok(2.0 * cur[j] - prev[j] + softplus(up) - softplus(down))
        })
        .collect()
}

/// Fills rows `m = 2 … steps + 1` from the seed rows `m = 0, 1`; the field
/// lives on `m ∈ [0, steps + 1]`, `n ∈ [0, N − 1]`.
pub fn toda_evolve(row0: &[f64], row1: &[f64], steps: usize) -> Result<Field> {
    if steps == 0 {
        return Err(Error::Config("steps must be at least 1".into()));
    }
    let n = row0.len();
    if n < 3 || row1.len() != n {
        return Err(Error::Config(format!(
            "seed rows must have equal length ≥ 3, got {} and {}",
            n,
            row1.len()
        )));
    }
    if row0.iter().chain(row1).any(|v| !v.is_finite()) {
        return Err(Error::Config("seed rows must be finite".into()));
    }
    let mut rows = vec![row0.to_vec(), row1.to_vec()];
    for _ in 0..steps {
        let next = toda_step(&rows[rows.len() - 2], &rows[rows.len() - 1])?;
        rows.push(next);
    }
    let domain = Arc::new(make_domain(
        2,
        0,
        &[(0, rows.len() as i64 - 1), (0, n as i64 - 1)],
        &[],
        &[],
    )?);
    let samples = rows
        .iter()
        .flat_map(|r| r.iter().map(|&v| C64::new(v, 0.0)))
        .collect();
    Field::grid(&domain, Shape::SCALAR, domain.full_box(), samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_rows_stay_constant() {
        for c in [0.0, 1.7] {
            let f = toda_evolve(&[c; 5], &[c; 5], 6).unwrap();
            for v in f.sample_values().unwrap() {
                assert!((v.as_scalar().unwrap().re - c).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(0.0), 2f64.ln());
        assert_eq!(softplus(800.0), 800.0);
        assert_eq!(softplus(-800.0), 0.0);
    }

    #[test]
    fn overflow_guard() {
        let mut row = vec![0.0; 4];
        row[1] = 600.0;
        assert!(matches!(
            toda_evolve(&row, &row, 2),
            Err(Error::Numerical(_))
        ));
        assert!(matches!(
            toda_evolve(&[0.0; 4], &[0.0; 4], 0),
            Err(Error::Config(_))
        ));
    }
}

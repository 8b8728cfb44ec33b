//! Uniform rectangular grids with exactly representable nodes.
//!
//! Node `i` along an axis is `(lo*(k-1-i) + hi*i)/(k-1)`, which keeps
//! endpoints and simple fractions (such as the midpoint of `[0, 1]` on an
//! odd grid) exactly representable. Iteration order is row-major: the first
//! axis varies slowest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub steps: Vec<usize>,
}

/// One axis value by index.
pub fn axis_value(lo: f64, hi: f64, k: usize, i: usize) -> f64 {
    if k <= 1 {
        return lo;
    }
    let km1 = (k - 1) as f64;
    (lo * ((k - 1 - i) as f64) + hi * (i as f64)) / km1
}

/// Expand a 1-D uniform range.
pub fn linspace(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    (0..k).map(|i| axis_value(lo, hi, k, i)).collect()
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, steps: Vec<usize>) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != steps.len() {
            return Err(Error::Validation("grid axis lists must have equal length".into()));
        }
        for (l, h) in lo.iter().zip(&hi) {
            if !(l.is_finite() && h.is_finite() && l <= h) {
                return Err(Error::Validation("grid bounds must be finite with lo <= hi".into()));
            }
        }
        Ok(GridSpec { lo, hi, steps })
    }

    /// The same bounds on every axis.
    pub fn cube(n: usize, lo: f64, hi: f64, steps: usize) -> Result<Self> {
        GridSpec::new(vec![lo; n], vec![hi; n], vec![steps; n])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn len(&self) -> usize {
        self.steps.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Point at flat row-major index.
    pub fn point(&self, mut index: usize) -> Vec<f64> {
        let n = self.dim();
        let mut x = vec![0.0; n];
        for axis in (0..n).rev() {
            let k = self.steps[axis];
            let i = index % k;
            index /= k;
            x[axis] = axis_value(self.lo[axis], self.hi[axis], k, i);
        }
        x
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_exact() {
        let ts = linspace(0.0, 1.0, 101);
        assert_eq!(ts.len(), 101);
        assert_eq!(ts[0], 0.0);
        assert_eq!(ts[50], 0.5);
        assert_eq!(ts[100], 1.0);
    }

    #[test]
    fn row_major_order() {
        let g = GridSpec::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![2, 3]).unwrap();
        let pts: Vec<Vec<f64>> = g.points().collect();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0], vec![0.0, 0.0]);
        assert_eq!(pts[1], vec![0.0, 0.5]);
        assert_eq!(pts[2], vec![0.0, 1.0]);
        assert_eq!(pts[3], vec![1.0, 0.0]);
        assert_eq!(pts[5], vec![1.0, 1.0]);
    }

    #[test]
    fn empty_grid() {
        let g = GridSpec::new(vec![0.0], vec![1.0], vec![0]).unwrap();
        assert!(g.is_empty());
        assert_eq!(g.points().count(), 0);
    }
}

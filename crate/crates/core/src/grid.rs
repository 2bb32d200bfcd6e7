//! Uniform cell grids on the torus `[0, 1)` and on the velocity interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `n` periodic cells of width `1/n` on the unit torus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XGrid {
    pub n: usize,
}

impl XGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("spatial grid needs at least one cell".into()));
        }
        Ok(Self { n })
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Cell centre `x_i = (i + ½) Δx`.
    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.n as f64
    }

    /// Interface `x_{i+½} = (i + 1) Δx`, wrapped to `[0, 1)`.
    #[inline]
    pub fn interface(&self, i: usize) -> f64 {
        ((i + 1) % self.n) as f64 / self.n as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.center(i)).collect()
    }

    #[inline]
    pub fn wrap(&self, i: isize) -> usize {
        i.rem_euclid(self.n as isize) as usize
    }
}

/// `n` cells of equal width on `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiGrid {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl XiGrid {
    pub fn new(min: f64, max: f64, n: usize) -> Result<Self> {
        if n == 0 || !(min < max) || !min.is_finite() || !max.is_finite() {
            return Err(Error::Config(format!(
                "velocity grid needs n > 0 and a finite interval (got n = {n}, [{min}, {max}])"
            )));
        }
        Ok(Self { min, max, n })
    }

    #[inline]
    pub fn dxi(&self) -> f64 {
        (self.max - self.min) / self.n as f64
    }

    #[inline]
    pub fn center(&self, j: usize) -> f64 {
        self.min + (j as f64 + 0.5) * self.dxi()
    }

    #[inline]
    pub fn cell(&self, j: usize) -> (f64, f64) {
        let h = self.dxi();
        (self.min + j as f64 * h, self.min + (j + 1) as f64 * h)
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.center(j)).collect()
    }
}

/// `n + 1` equispaced nodes from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    let h = (hi - lo) / n as f64;
    (0..=n)
        .map(|i| if i == n { hi } else { lo + i as f64 * h })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_geometry() {
        let g = XiGrid::new(-1.0, 1.0, 4).unwrap();
        assert_eq!(g.dxi(), 0.5);
        assert_eq!(g.cell(1), (-0.5, 0.0));
        assert_eq!(g.center(3), 0.75);
        let x = XGrid::new(8).unwrap();
        assert_eq!(x.wrap(-1), 7);
        assert_eq!(x.wrap(8), 0);
        assert_eq!(x.interface(7), 0.0);
        assert!(XiGrid::new(1.0, 1.0, 3).is_err());
        assert!(XGrid::new(0).is_err());
    }

    #[test]
    fn linspace_hits_endpoints() {
        let v = linspace(-3.0, 0.7, 37);
        assert_eq!(v.len(), 38);
        assert_eq!(v[0], -3.0);
        assert_eq!(v[37], 0.7);
    }
}

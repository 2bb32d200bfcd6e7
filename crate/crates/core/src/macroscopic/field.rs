use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::XGrid;

/// Cell averages of the macroscopic state on the periodic grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MacroField {
    pub grid: XGrid,
    pub t: f64,
    pub u: Vec<f64>,
}

impl MacroField {
    pub fn new(grid: XGrid, t: f64, u: Vec<f64>) -> Result<Self> {
        if u.len() != grid.n {
            return Err(Error::Config(format!(
                "field has {} values for a grid of {} cells",
                u.len(),
                grid.n
            )));
        }
        Ok(Self { grid, t, u })
    }

    /// Samples `f` at cell centres.
    pub fn from_fn(grid: XGrid, t: f64, f: impl Fn(f64) -> f64) -> Self {
        let u = (0..grid.n).map(|i| f(grid.center(i))).collect();
        Self { grid, t, u }
    }

    pub fn constant(grid: XGrid, t: f64, value: f64) -> Self {
        Self {
            grid,
            t,
            u: vec![value; grid.n],
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// `Σ u_i Δx`.
    pub fn mass(&self) -> f64 {
        self.u.iter().sum::<f64>() * self.grid.dx()
    }

    pub fn max(&self) -> f64 {
        self.u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.u.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().all(|v| v.is_finite())
    }

    /// `Σ |u_i - v_i| Δx`.
    pub fn l1_distance(&self, other: &MacroField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::Config("fields live on different grids".into()));
        }
        Ok(self
            .u
            .iter()
            .zip(&other.u)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.grid.dx())
    }

    pub fn l2_distance(&self, other: &MacroField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::Config("fields live on different grids".into()));
        }
        Ok((self
            .u
            .iter()
            .zip(&other.u)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            * self.grid.dx())
        .sqrt())
    }

    /// Cell averages on a grid `factor` times coarser.
    pub fn coarsen(&self, factor: usize) -> Result<MacroField> {
        if factor == 0 || self.grid.n % factor != 0 {
            return Err(Error::Config(format!(
                "cannot coarsen {} cells by {factor}",
                self.grid.n
            )));
        }
        let grid = XGrid::new(self.grid.n / factor)?;
        let u = self
            .u
            .chunks(factor)
            .map(|c| c.iter().sum::<f64>() / factor as f64)
            .collect();
        Ok(MacroField { grid, t: self.t, u })
    }
}

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{XGrid, XiGrid};
use crate::macroscopic::MacroField;
use crate::maxwell::indicator_cell_average;

const SNAPSHOT_MAGIC: &[u8; 5] = b"HFBK1";

/// Values taken outside the velocity interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarField {
    pub below: f64,
    pub above: f64,
}

impl FarField {
    /// Equilibrium-like data: 1 below, 0 above.
    pub const SATURATED: FarField = FarField {
        below: 1.0,
        above: 0.0,
    };
    /// Compactly supported data.
    pub const ZERO: FarField = FarField {
        below: 0.0,
        above: 0.0,
    };
}

/// Cell averages of the kinetic unknown `F(t, x, ξ)` on torus × velocity
/// interval, row-major in x. Outside the velocity interval `F` equals `far`,
/// by default 1 below and 0 above.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticField {
    pub eps: f64,
    pub t: f64,
    pub far: FarField,
    x: XGrid,
    xi: XiGrid,
    values: Vec<f64>,
}

impl KineticField {
    pub fn new(x: XGrid, xi: XiGrid, eps: f64, t: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != x.n * xi.n {
            return Err(Error::Config(format!(
                "kinetic field needs {} values, got {}",
                x.n * xi.n,
                values.len()
            )));
        }
        Ok(Self {
            eps,
            t,
            far: FarField::SATURATED,
            x,
            xi,
            values,
        })
    }

    /// Fills cell `(i, j)` with `profile(i, ξ_lo, ξ_hi)`.
    pub fn from_profile(
        x: XGrid,
        xi: XiGrid,
        eps: f64,
        t: f64,
        profile: impl Fn(usize, f64, f64) -> f64,
    ) -> Self {
        let mut values = Vec::with_capacity(x.n * xi.n);
        for i in 0..x.n {
            for j in 0..xi.n {
                let (lo, hi) = xi.cell(j);
                values.push(profile(i, lo, hi));
            }
        }
        Self {
            eps,
            t,
            far: FarField::SATURATED,
            x,
            xi,
            values,
        }
    }

    pub fn with_far_field(mut self, far: FarField) -> Self {
        self.far = far;
        self
    }

    /// Cell-averaged equilibrium indicator `1_{u(x)>ξ}`.
    pub fn from_density(u: &MacroField, xi: XiGrid, eps: f64) -> Self {
        Self::from_profile(u.grid, xi, eps, u.t, |i, lo, hi| {
            indicator_cell_average(u.u[i], lo, hi)
        })
    }

    pub fn x_grid(&self) -> XGrid {
        self.x
    }

    pub fn xi_grid(&self) -> XiGrid {
        self.xi
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.xi.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.xi.n;
        &self.values[i * n..(i + 1) * n]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let n = self.xi.n;
        &mut self.values[i * n..(i + 1) * n]
    }

    /// `Δξ Σ_j (F_ij - ⟨1_{0>ξ}⟩_j)` for one x-cell.
    pub fn density_of_row(&self, i: usize) -> f64 {
        let dxi = self.xi.dxi();
        self.row(i)
            .iter()
            .enumerate()
            .map(|(j, &f)| {
                let (lo, hi) = self.xi.cell(j);
                f - indicator_cell_average(0.0, lo, hi)
            })
            .sum::<f64>()
            * dxi
    }

    /// `u[i] = Δξ Σ_j (F_ij - ⟨1_{0>ξ}⟩_j)`.
    pub fn local_density(&self) -> MacroField {
        let u = (0..self.x.n).map(|i| self.density_of_row(i)).collect();
        MacroField {
            grid: self.x,
            t: self.t,
            u,
        }
    }

    /// `Σ |F_ij| Δx Δξ`.
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.x.dx() * self.xi.dxi()
    }

    /// `Σ |F_ij - G_ij| Δx Δξ`.
    pub fn l1_distance(&self, other: &KineticField) -> Result<f64> {
        if self.x != other.x || self.xi != other.xi {
            return Err(Error::Config(
                "kinetic fields live on different grids".into(),
            ));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.x.dx()
            * self.xi.dxi())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn write_snapshot(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_all(&(self.x.n as u32).to_le_bytes())?;
        w.write_all(&(self.xi.n as u32).to_le_bytes())?;
        for v in [self.t, self.eps, self.xi.min, self.xi.max] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_snapshot(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(Error::Snapshot("bad magic".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let nx = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b4)?;
        let nxi = u32::from_le_bytes(b4) as usize;
        let mut b8 = [0u8; 8];
        let mut next = |r: &mut BufReader<File>| -> Result<f64> {
            r.read_exact(&mut b8)
                .map_err(|e| Error::Snapshot(format!("truncated snapshot: {e}")))?;
            Ok(f64::from_le_bytes(b8))
        };
        let t = next(&mut r)?;
        let eps = next(&mut r)?;
        let xi_min = next(&mut r)?;
        let xi_max = next(&mut r)?;
        let mut values = Vec::with_capacity(nx * nxi);
        for _ in 0..nx * nxi {
            values.push(next(&mut r)?);
        }
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::Snapshot(format!("{} trailing bytes", rest.len())));
        }
        let x = XGrid::new(nx).map_err(|e| Error::Snapshot(e.to_string()))?;
        let xi = XiGrid::new(xi_min, xi_max, nxi).map_err(|e| Error::Snapshot(e.to_string()))?;
        Self::new(x, xi, eps, t, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_of_cell_averaged_indicator() {
        let xg = XGrid::new(3).unwrap();
        let xi = XiGrid::new(-5.0, 5.0, 77).unwrap();
        let u = MacroField::new(xg, 0.0, vec![0.7, -1.3, 0.0]).unwrap();
        let f = KineticField::from_density(&u, xi, 0.1);
        let d = f.local_density();
        for (a, b) in d.u.iter().zip(&u.u) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn snapshot_round_trip() {
        let xg = XGrid::new(4).unwrap();
        let xi = XiGrid::new(-2.0, 3.0, 5).unwrap();
        let f =
            KineticField::from_profile(xg, xi, 0.25, 1.5, |i, lo, hi| (i as f64) * 0.1 + lo * hi);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("F.snap");
        f.write_snapshot(&p).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        assert_eq!(&bytes[..5], b"HFBK1");
        assert_eq!(bytes.len(), 5 + 8 + 32 + 8 * 20);
        let g = KineticField::read_snapshot(&p).unwrap();
        assert_eq!(f, g);
        std::fs::write(&p, &bytes[..bytes.len() - 3]).unwrap();
        assert!(KineticField::read_snapshot(&p).is_err());
    }
}

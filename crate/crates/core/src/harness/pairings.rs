use serde::Serialize;

use crate::error::{Error, Result};
use crate::kinetic::KineticField;
use crate::macroscopic::MacroField;
use crate::maxwell::maxwellian_cell_average;
use crate::problem::Problem;

fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

/// Separable smooth test function `φ(x, ξ) = amplitude · χ(x) ρ(ξ)` with
/// bumps of the given half-widths; χ is periodic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairingFunction {
    pub amplitude: f64,
    pub x_center: f64,
    pub x_half: f64,
    pub xi_center: f64,
    pub xi_half: f64,
}

impl PairingFunction {
    pub fn new(
        amplitude: f64,
        x_center: f64,
        x_half: f64,
        xi_center: f64,
        xi_half: f64,
    ) -> Result<Self> {
        if amplitude == 0.0 || !amplitude.is_finite() {
            return Err(Error::Config("test function is identically zero".into()));
        }
        if !(x_half > 0.0 && x_half <= 0.5) || !(xi_half > 0.0) {
            return Err(Error::Config(format!(
                "test function support is degenerate (half-widths {x_half}, {xi_half})"
            )));
        }
        Ok(Self {
            amplitude,
            x_center,
            x_half,
            xi_center,
            xi_half,
        })
    }

    pub fn eval(&self, x: f64, xi: f64) -> f64 {
        let d = (x - self.x_center + 0.5).rem_euclid(1.0) - 0.5;
        self.amplitude * bump(d / self.x_half) * bump((xi - self.xi_center) / self.xi_half)
    }
}

/// A fixed dictionary of at least six test functions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairingSet {
    functions: Vec<PairingFunction>,
}

impl PairingSet {
    pub const MIN_SIZE: usize = 6;

    pub fn new(functions: Vec<PairingFunction>) -> Result<Self> {
        if functions.len() < Self::MIN_SIZE {
            return Err(Error::Config(format!(
                "need at least {} test functions, got {}",
                Self::MIN_SIZE,
                functions.len()
            )));
        }
        Ok(Self { functions })
    }

    /// Three x-windows times two velocity windows around `xi_center`.
    pub fn standard(xi_center: f64, xi_half: f64) -> Result<Self> {
        let mut f = Vec::new();
        for (xc, xh) in [(0.5, 0.5), (0.25, 0.25), (0.75, 0.25)] {
            for (vc, vh) in [
                (xi_center, xi_half),
                (xi_center - 0.5 * xi_half, 0.5 * xi_half),
            ] {
                f.push(PairingFunction::new(1.0, xc, xh, vc, vh)?);
            }
        }
        Self::new(f)
    }

    pub fn functions(&self) -> &[PairingFunction] {
        &self.functions
    }
}

/// `|Σ_{i,j} (F_ij - ⟨M_{u_i}⟩_j) φ(x_i, ξ_j) Δx Δξ|` for every `φ` in `set`,
/// with `M` cell-averaged exactly.
pub fn weakstar_pairings(
    f: &KineticField,
    u: &MacroField,
    problem: &Problem,
    set: &PairingSet,
) -> Result<Vec<f64>> {
    let xg = f.x_grid();
    let vg = f.xi_grid();
    if u.grid != xg {
        return Err(Error::Config(
            "density and kinetic field use different x-grids".into(),
        ));
    }
    if (u.t - f.t).abs() > 1e-9 * (1.0 + f.t.abs()) {
        return Err(Error::Config(format!(
            "time stamps differ: F at {}, u at {}",
            f.t, u.t
        )));
    }
    let cell = xg.dx() * vg.dxi();
    let mut diff = Vec::with_capacity(xg.n * vg.n);
    for i in 0..xg.n {
        let lambda = problem.lambda.eval(xg.center(i));
        for j in 0..vg.n {
            let (lo, hi) = vg.cell(j);
            diff.push(f.get(i, j) - maxwellian_cell_average(u.u[i], lambda, lo, hi));
        }
    }
    Ok(set
        .functions
        .iter()
        .map(|phi| {
            let mut acc = 0.0;
            for i in 0..xg.n {
                let x = xg.center(i);
                for j in 0..vg.n {
                    acc += diff[i * vg.n + j] * phi.eval(x, vg.center(j));
                }
            }
            (acc * cell).abs()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{XGrid, XiGrid};
    use crate::maxwell::indicator_cell_average;
    use crate::problem::{Preset, PresetParams};

    #[test]
    fn zero_function_rejected() {
        assert!(PairingFunction::new(0.0, 0.5, 0.2, 0.0, 1.0).is_err());
        assert!(PairingFunction::new(1.0, 0.5, 0.0, 0.0, 1.0).is_err());
        let one = PairingFunction::new(1.0, 0.5, 0.2, 0.0, 1.0).unwrap();
        assert!(PairingSet::new(vec![one; 5]).is_err());
        assert_eq!(PairingSet::standard(0.0, 2.0).unwrap().functions().len(), 6);
    }

    #[test]
    fn maxwellian_field_pairs_to_zero() {
        let p = Problem::preset(Preset::P1, &PresetParams::default()).unwrap();
        let xg = XGrid::new(16).unwrap();
        let vg = XiGrid::new(-6.0, 4.0, 100).unwrap();
        let u = MacroField::from_fn(xg, 0.0, |x| 0.3 * x);
        let f = KineticField::from_profile(xg, vg, 0.1, 0.0, |i, lo, hi| {
            maxwellian_cell_average(u.u[i], -1.0, lo, hi)
        });
        let set = PairingSet::standard(0.0, 3.0).unwrap();
        for g in weakstar_pairings(&f, &u, &p, &set).unwrap() {
            assert!(g <= 1e-8);
        }
    }

    #[test]
    fn indicator_against_maxwellian_matches_direct_quadrature() {
        // constant u: the pairing factorises into ∫χ dx · ∫(1_{u>ξ} - M_u) ρ dξ
        let p = Problem::preset(Preset::P1, &PresetParams::default()).unwrap();
        let xg = XGrid::new(32).unwrap();
        let vg = XiGrid::new(-8.0, 4.0, 2400).unwrap();
        let u = MacroField::constant(xg, 0.0, 0.4);
        let f = KineticField::from_density(&u, vg, 0.1);
        let phi = PairingFunction::new(1.0, 0.5, 0.5, -0.5, 2.0).unwrap();
        let set = PairingSet::new(vec![phi; 6]).unwrap();
        let got = weakstar_pairings(&f, &u, &p, &set).unwrap()[0];

        let n = 200_000;
        let (a, b) = (-2.5, 1.5);
        let h = (b - a) / n as f64;
        let mut v = 0.0;
        for k in 0..n {
            let xi = a + (k as f64 + 0.5) * h;
            let ind = indicator_cell_average(0.4, xi - 0.5 * h, xi + 0.5 * h);
            let m = crate::maxwell::maxwellian(0.4, -1.0, xi).unwrap();
            v += (ind - m) * bump((xi + 0.5) / 2.0) * h;
        }
        let chi: f64 = (0..xg.n)
            .map(|i| bump((xg.center(i) - 0.5) / 0.5))
            .sum::<f64>()
            * xg.dx();
        let want = (chi * v).abs();
        assert!((got - want).abs() < 1e-4 * want, "{got} vs {want}");
    }
}

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetic::KineticField;
use crate::maxwell::{indicator_cell_average, maxwellian_cell_average};
use crate::problem::Problem;

/// Which density the BGK operator relaxes toward and which density is reported.
///
/// `Raw` uses `∫ (F - 1_{0>ξ}) dξ`. `Shifted` uses that integral minus `Λ(x)`,
/// the density whose Maxwellian `M_u` carries the raw mass of `F`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityConvention {
    Raw,
    Shifted,
}

impl DensityConvention {
    pub const ALL: [DensityConvention; 2] = [DensityConvention::Raw, DensityConvention::Shifted];

    pub fn label(self) -> &'static str {
        match self {
            DensityConvention::Raw => "raw",
            DensityConvention::Shifted => "shifted",
        }
    }

    /// Convention density from the raw row integrals.
    pub fn apply(self, problem: &Problem, f: &KineticField, raw: &[f64]) -> Vec<f64> {
        match self {
            DensityConvention::Raw => raw.to_vec(),
            DensityConvention::Shifted => {
                let xg = f.x_grid();
                raw.iter()
                    .enumerate()
                    .map(|(i, r)| r - problem.lambda.eval(xg.center(i)))
                    .collect()
            }
        }
    }
}

impl FromStr for DensityConvention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "raw" => Ok(DensityConvention::Raw),
            "shifted" => Ok(DensityConvention::Shifted),
            other => Err(Error::Config(format!(
                "unknown density convention `{other}`"
            ))),
        }
    }
}

/// Time-splitting of the kinetic step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Transport with the field drift, then exact BGK relaxation toward the
    /// indicator.
    TransportRelax,
    /// Transport without the field drift, then the exact solution of the
    /// field-plus-relaxation subproblem, which relaxes toward `M_u`.
    ExactHighField,
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::TransportRelax => "transport-relax",
            Scheme::ExactHighField => "exact-high-field",
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "transport-relax" => Ok(Scheme::TransportRelax),
            "exact-high-field" => Ok(Scheme::ExactHighField),
            other => Err(Error::Config(format!("unknown scheme `{other}`"))),
        }
    }
}

/// `F ← e^{-Δt/ε} F + (1 - e^{-Δt/ε}) 1_{u>ξ}` with `u` the raw local density
/// of `F`, cell-averaged exactly. Row densities are preserved.
pub fn relax_step(f: &KineticField, dt: f64) -> KineticField {
    let u = f.local_density();
    relax_toward(f, &u.u, dt)
}

/// BGK relaxation toward `1_{target_i > ξ}`.
pub fn relax_toward(f: &KineticField, target: &[f64], dt: f64) -> KineticField {
    let decay = (-dt / f.eps).exp();
    let gain = -(-dt / f.eps).exp_m1();
    let vg = f.xi_grid();
    let mut g = f.clone();
    g.t = f.t;
    g.values_mut()
        .par_chunks_mut(vg.n)
        .zip(target.par_iter())
        .for_each(|(row, &u)| {
            for (j, v) in row.iter_mut().enumerate() {
                let (lo, hi) = vg.cell(j);
                *v = decay * *v + gain * indicator_cell_average(u, lo, hi);
            }
        });
    g
}

/// Exact solution over `Δt` of `∂_t F + (Λ/ε) ∂_ξ F = (1_{u>ξ} - F)/ε` with
/// `u = target` frozen:
///
/// `F(ξ) ← M_u(ξ) + e^{-r} (F - M_u)(ξ + λ r)`, `r = Δt/ε`, `λ = -Λ`.
///
/// The deviation is shifted by clipped cubic interpolation of cell values and
/// vanishes outside the velocity interval; `M_u` is cell-averaged exactly.
pub fn exact_field_relax(
    f: &KineticField,
    problem: &Problem,
    target: &[f64],
    dt: f64,
) -> KineticField {
    let r = dt / f.eps;
    let decay = (-r).exp();
    let vg = f.xi_grid();
    let xg = f.x_grid();
    let n = vg.n;
    let mut g = f.clone();
    g.values_mut()
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(i, row)| {
            let lambda = problem.lambda.eval(xg.center(i));
            let u = target[i];
            let eq: Vec<f64> = (0..n)
                .map(|j| {
                    let (lo, hi) = vg.cell(j);
                    maxwellian_cell_average(u, lambda, lo, hi)
                })
                .collect();
            let dev: Vec<f64> = row.iter().zip(&eq).map(|(a, b)| a - b).collect();
            let shift = -lambda * r / vg.dxi();
            for j in 0..n {
                row[j] = eq[j] + decay * shift_1d(&dev, j as f64 + shift);
            }
        });
    g
}

/// Clipped cubic interpolation of `values` at fractional index `p`, zero
/// outside the index range.
fn shift_1d(values: &[f64], p: f64) -> f64 {
    let n = values.len() as isize;
    if p < -2.0 || p > n as f64 + 1.0 {
        return 0.0;
    }
    let j = p.floor();
    let s = p - j;
    let j = j as isize;
    let at = |k: isize| {
        if k < 0 || k >= n {
            0.0
        } else {
            values[k as usize]
        }
    };
    if s == 0.0 {
        return at(j);
    }
    let (sm1, sm2, sp1) = (s - 1.0, s - 2.0, s + 1.0);
    let w = [
        -s * sm1 * sm2 / 6.0,
        sp1 * sm1 * sm2 / 2.0,
        -sp1 * s * sm2 / 2.0,
        sp1 * s * sm1 / 6.0,
    ];
    let v: f64 = (0..4).map(|a| w[a] * at(j - 1 + a as isize)).sum();
    let (a, b) = (at(j), at(j + 1));
    v.clamp(a.min(b), a.max(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{XGrid, XiGrid};
    use crate::macroscopic::MacroField;
    use crate::problem::{Coefficient, HighField};

    fn field(u: &[f64], lo: f64, hi: f64, n: usize, eps: f64) -> KineticField {
        let xg = XGrid::new(u.len()).unwrap();
        let m = MacroField::new(xg, 0.0, u.to_vec()).unwrap();
        KineticField::from_density(&m, XiGrid::new(lo, hi, n).unwrap(), eps)
    }

    #[test]
    fn relax_halfway_at_log_two() {
        // F = 0, target density from a shifted profile: F ← ½ F + ½ 1_{u>ξ}
        let xg = XGrid::new(1).unwrap();
        let vg = XiGrid::new(-1.0, 1.0, 4).unwrap();
        let f = KineticField::from_profile(
            xg,
            vg,
            0.2,
            0.0,
            |_, lo, _| if lo < -0.5 { 1.0 } else { 0.3 },
        );
        let u = f.density_of_row(0);
        let g = relax_step(&f, 0.2 * std::f64::consts::LN_2);
        for j in 0..4 {
            let (lo, hi) = vg.cell(j);
            let want = 0.5 * f.get(0, j) + 0.5 * indicator_cell_average(u, lo, hi);
            assert!((g.get(0, j) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn relax_conserves_row_density() {
        let xg = XGrid::new(3).unwrap();
        let vg = XiGrid::new(-3.0, 3.0, 61).unwrap();
        let f = KineticField::from_profile(xg, vg, 0.05, 0.0, |i, lo, hi| {
            let c = 0.5 * (lo + hi);
            (1.0 / (1.0 + (3.0 * (c - 0.2 * i as f64)).exp())).min(1.0)
        });
        let before = f.local_density();
        let g = relax_step(&f, 0.013);
        let after = g.local_density();
        for (a, b) in after.u.iter().zip(&before.u) {
            assert!((a - b).abs() < 1e-12);
        }
        // the equilibrium is a fixed point
        let eq = field(&[0.4, -0.2], -2.0, 2.0, 40, 0.1);
        let h = relax_step(&eq, 1.0);
        for (a, b) in h.values().iter().zip(eq.values()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn exact_field_relax_keeps_maxwellian() {
        let p = Problem::new(
            "p",
            Coefficient::zero("a"),
            HighField::constant(-0.5),
            vec![],
            (-8.0, 4.0),
        )
        .unwrap();
        let xg = XGrid::new(1).unwrap();
        let vg = XiGrid::new(-8.0, 4.0, 240).unwrap();
        let m = KineticField::from_profile(xg, vg, 0.1, 0.0, |_, lo, hi| {
            maxwellian_cell_average(0.3, -0.5, lo, hi)
        });
        let g = exact_field_relax(&m, &p, &[0.3], 0.37);
        for (a, b) in g.values().iter().zip(m.values()) {
            assert!((a - b).abs() < 1e-14);
        }
        // raw mass of M_u is u + Λ, less the tail λ e^{-(u - ξ_min)/λ} cut off below
        let tail = 0.5 * (-(0.3 + 8.0) / 0.5_f64).exp();
        assert!(
            (m.density_of_row(0) - (0.3 - 0.5 + tail)).abs() < 1e-12,
            "{}",
            m.density_of_row(0)
        );
    }

    #[test]
    fn exact_field_relax_whole_cell_shift() {
        // λ r = Δξ: the deviation moves down one cell and decays by e^{-r}
        let lambda = -0.5;
        let p = Problem::new(
            "p",
            Coefficient::zero("a"),
            HighField::constant(lambda),
            vec![],
            (-6.0, 4.0),
        )
        .unwrap();
        let f = field(&[0.2], -6.0, 4.0, 100, 0.05);
        let dxi = 0.1;
        let dt = dxi / 0.5 * 0.05;
        let target = [0.7];
        let g = exact_field_relax(&f, &p, &target, dt);
        let vg = f.xi_grid();
        let decay = (-dt / 0.05_f64).exp();
        for j in 0..99 {
            let (lo, hi) = vg.cell(j);
            let (lo1, hi1) = vg.cell(j + 1);
            let eq = maxwellian_cell_average(0.7, lambda, lo, hi);
            let dev = f.get(0, j + 1) - maxwellian_cell_average(0.7, lambda, lo1, hi1);
            assert!((g.get(0, j) - (eq + decay * dev)).abs() < 1e-12, "j={j}");
        }
    }

    #[test]
    fn shifted_target_conserves_raw_mass() {
        let p = Problem::new(
            "p",
            Coefficient::zero("a"),
            HighField::constant(-1.0),
            vec![],
            (-12.0, 6.0),
        )
        .unwrap();
        let f = field(&[0.5, 0.1], -12.0, 6.0, 360, 0.1);
        let raw = f.local_density().u;
        let target = DensityConvention::Shifted.apply(&p, &f, &raw);
        assert!((target[0] - 1.5).abs() < 1e-12);
        let g = exact_field_relax(&f, &p, &target, 0.013);
        let after = g.local_density().u;
        for (a, b) in after.iter().zip(&raw) {
            assert!((a - b).abs() < 1e-3, "{a} vs {b}");
        }
        // long times reach M_target, whose raw mass is the raw mass of F up to
        // the tail cut off below the interval
        let g = exact_field_relax(&f, &p, &target, 10.0);
        for ((a, b), u) in g.local_density().u.iter().zip(&raw).zip(&target) {
            let tail = (-(u + 12.0_f64)).exp();
            assert!((a - b - tail).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn parses_labels() {
        assert_eq!(
            "raw".parse::<DensityConvention>().unwrap(),
            DensityConvention::Raw
        );
        assert_eq!(
            "Shifted".parse::<DensityConvention>().unwrap(),
            DensityConvention::Shifted
        );
        assert!("x".parse::<DensityConvention>().is_err());
        for s in [Scheme::TransportRelax, Scheme::ExactHighField] {
            assert_eq!(s.label().parse::<Scheme>().unwrap(), s);
        }
    }
}

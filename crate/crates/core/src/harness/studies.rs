use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::coeffs::{check_flux_identity, residual_b};
use crate::error::Result;
use crate::grid::linspace;
use crate::harness::config::RunConfig;
use crate::harness::converge::macro_table;
use crate::kinetic::{initial_density, DensityConvention};
use crate::macroscopic::{kruzhkov_statistic, run_macro, EntropyStatistic, TestFunction};
use crate::maxwell::{l1_distance, maxwellian, maxwellian_oracle, maxwellian_residual};
use crate::problem::{Preset, PresetParams, Problem};

/// Closed form against the quadrature oracle at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleSample {
    pub k: f64,
    pub lambda: f64,
    pub xi: f64,
    pub closed: f64,
    pub oracle: f64,
    pub abs_err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceSample {
    pub k: f64,
    pub k2: f64,
    pub lambda: f64,
    pub computed: f64,
    pub abs_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluxIdentitySample {
    pub preset: String,
    pub k: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualSample {
    pub k: f64,
    pub lambda: f64,
    pub residual: f64,
}

/// Identity checks of the modified Maxwellian.
#[derive(Debug, Clone, Serialize)]
pub struct MaxwellianSuite {
    pub oracle: Vec<OracleSample>,
    pub distances: Vec<DistanceSample>,
    pub flux_identity: Vec<FluxIdentitySample>,
    pub residuals: Vec<ResidualSample>,
}

impl MaxwellianSuite {
    pub fn max_oracle_err(&self) -> f64 {
        self.oracle.iter().map(|s| s.abs_err).fold(0.0, f64::max)
    }

    pub fn max_distance_err(&self) -> f64 {
        self.distances.iter().map(|s| s.abs_err).fold(0.0, f64::max)
    }

    pub fn max_flux_gap(&self) -> f64 {
        self.flux_identity.iter().map(|s| s.gap).fold(0.0, f64::max)
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals
            .iter()
            .map(|s| s.residual)
            .fold(0.0, f64::max)
    }
}

pub const ORACLE_QUADRATURE: usize = 100_000;

/// Runs the Maxwellian identity checks: `n_random` oracle comparisons with
/// `k ∈ [-2, 2]`, `λ ∈ [0, 2]`, `ξ ∈ [-6, 3]` drawn from `seed`; the L¹
/// distance on a 5 × 5 grid of `(k - k', λ)`; the flux identity on every
/// preset; the residual of the defining equation.
pub fn maxwellian_suite(seed: u64, n_random: usize) -> Result<MaxwellianSuite> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<(f64, f64, f64)> = (0..n_random)
        .map(|_| {
            (
                rng.gen_range(-2.0..2.0),
                rng.gen_range(0.0..2.0),
                rng.gen_range(-6.0..3.0),
            )
        })
        .collect();
    let oracle = inputs
        .par_iter()
        .map(|&(k, lam, xi)| {
            let closed = maxwellian(k, -lam, xi)?;
            let oracle = maxwellian_oracle(k, -lam, xi, ORACLE_QUADRATURE);
            Ok(OracleSample {
                k,
                lambda: -lam,
                xi,
                closed,
                oracle,
                abs_err: (closed - oracle).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let pairs = [(0.0, 0.0), (0.5, 0.0), (-1.0, 0.7), (2.0, -0.5), (0.3, 1.8)];
    let lambdas = [0.0, 0.1, 0.5, 1.0, 2.0];
    let combos: Vec<(f64, f64, f64)> = pairs
        .iter()
        .flat_map(|&(k, k2)| lambdas.iter().map(move |&l| (k, k2, l)))
        .collect();
    let distances = combos
        .par_iter()
        .map(|&(k, k2, lam)| {
            let lo = k.min(k2) - 40.0 * lam - 1.0;
            let hi = k.max(k2) + 1.0;
            let grid = linspace(lo, hi, ((hi - lo) / 5e-4).ceil() as usize);
            let computed = l1_distance(k, k2, -lam, &grid)?;
            Ok(DistanceSample {
                k,
                k2,
                lambda: -lam,
                computed,
                abs_err: (computed - (k - k2).abs()).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut flux_identity = Vec::new();
    let grid = linspace(-6.0, 3.0, 9000);
    for preset in [Preset::P0, Preset::P1, Preset::P2, Preset::P3] {
        let p = Problem::preset(preset, &PresetParams::default())?;
        for k in [-1.0, 0.0, 0.5, 2.0] {
            let r = check_flux_identity(&p, 0.3, k, &grid)?;
            flux_identity.push(FluxIdentitySample {
                preset: p.name.clone(),
                k,
                lhs: r.lhs,
                rhs: r.rhs,
                gap: r.gap,
            });
        }
    }

    let mut residuals = Vec::new();
    let grid = linspace(-5.0, 3.0, 8000);
    for (k, lam) in [(0.0, 1.0), (0.5, 0.5), (-1.0, 2.0), (1.5, 1.0)] {
        residuals.push(ResidualSample {
            k,
            lambda: -lam,
            residual: maxwellian_residual(k, -lam, &grid)?,
        });
    }
    Ok(MaxwellianSuite {
        oracle,
        distances,
        flux_identity,
        residuals,
    })
}

/// Entropy statistics over realizations, with the Monte-Carlo mean and
/// standard error of the noise term per `k`.
#[derive(Debug, Clone, Serialize)]
pub struct EntropyStudy {
    pub phi: TestFunction,
    pub stats: Vec<EntropyStatistic>,
    pub noise_means: Vec<(f64, f64, f64)>,
}

/// Runs the macroscopic solver for every configured seed and evaluates the
/// statistic for each `k`.
pub fn entropy_study(cfg: &RunConfig, ks: &[f64], phi: &TestFunction) -> Result<EntropyStudy> {
    cfg.validate()?;
    let problem = cfg.build_problem()?;
    let u0 = cfg.initial_density()?;
    let table = macro_table(cfg, &problem, &u0)?;
    let seeds = cfg.seeds();
    let per_seed: Vec<Vec<EntropyStatistic>> = seeds
        .par_iter()
        .map(|&seed| {
            let path = cfg.base_path(&problem, seed)?;
            let traj = run_macro(&table, &u0, cfg.time.t_end, cfg.time.dt, &path)?;
            ks.iter()
                .map(|&k| {
                    let mut s = kruzhkov_statistic(&traj, &table, k, phi, &path)?;
                    s.seed = seed;
                    Ok(s)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let stats: Vec<EntropyStatistic> = per_seed.into_iter().flatten().collect();
    let noise_means = ks
        .iter()
        .map(|&k| {
            let v: Vec<f64> = stats
                .iter()
                .filter(|s| s.k == k)
                .map(|s| s.noise_term)
                .collect();
            let (mean, se) = mean_std_err(&v);
            (k, mean, se)
        })
        .collect();
    Ok(EntropyStudy {
        phi: *phi,
        stats,
        noise_means,
    })
}

/// One line of a configuration check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationRow {
    pub check: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl ValidationRow {
    fn at_most(check: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            check: check.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }
}

/// Checks a configuration before running it: the coefficient residual and
/// flux identity at a few sample points, velocity-grid coverage of the
/// initial data and the macroscopic CFL number.
pub fn validate_config(cfg: &RunConfig) -> Result<Vec<ValidationRow>> {
    cfg.validate()?;
    let problem = cfg.build_problem()?;
    let u0 = cfg.initial_density()?;
    let mut rows = Vec::new();

    let (lo, hi) = cfg.xi_bounds();
    let xs = [0.1, 0.35, 0.6, 0.85];
    let mut res: f64 = 0.0;
    for &x in &xs {
        for xi in [
            lo + 0.25 * (hi - lo),
            0.5 * (lo + hi),
            lo + 0.75 * (hi - lo),
        ] {
            res = res.max(residual_b(&problem, x, xi, 1e-4)?);
        }
    }
    rows.push(ValidationRow::at_most(
        "flux_coefficient_residual",
        res,
        1e-6,
    ));

    let grid = linspace(lo.min(u0.min() - 1.0), hi.max(u0.max() + 0.5), 9000);
    let mut gap: f64 = 0.0;
    for &x in &xs {
        for k in [u0.min(), u0.max()] {
            gap = gap.max(check_flux_identity(&problem, x, k, &grid)?.gap);
        }
    }
    rows.push(ValidationRow::at_most("flux_identity_gap", gap, 1e-6));

    let mut need_lo = f64::INFINITY;
    let mut need_hi = f64::NEG_INFINITY;
    for c in DensityConvention::ALL {
        let d = initial_density(&problem, &u0, c);
        need_lo = need_lo.min(d.min());
        need_hi = need_hi.max(d.max());
    }
    rows.push(ValidationRow::at_most(
        "initial_density_below_xi_max",
        need_hi - hi,
        0.0,
    ));
    rows.push(ValidationRow::at_most(
        "xi_min_below_initial_density",
        lo - need_lo,
        0.0,
    ));

    let table = macro_table(cfg, &problem, &u0)?;
    let courant = table.max_speed() * cfg.time.dt / u0.grid.dx();
    rows.push(ValidationRow::at_most("macro_courant_number", courant, 1.0));
    let a_max = (0..u0.grid.n)
        .flat_map(|i| {
            let x = u0.grid.center(i);
            let p = &problem;
            (0..16).map(move |j| p.flux.eval(x, lo + (hi - lo) * j as f64 / 15.0).abs())
        })
        .fold(0.0, f64::max);
    rows.push(ValidationRow::at_most(
        "kinetic_courant_number",
        a_max * cfg.time.dt / u0.grid.dx(),
        1.0,
    ));
    Ok(rows)
}

/// Sample mean and its standard error (NaN below two samples).
pub fn mean_std_err(v: &[f64]) -> (f64, f64) {
    let n = v.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let s = maxwellian_suite(5, 20).unwrap();
        assert_eq!(s.oracle.len(), 20);
        assert_eq!(s.distances.len(), 25);
        assert!(s.max_oracle_err() < 1e-8);
        assert!(s.max_distance_err() < 1e-6, "{:?}", s.distances);
        assert!(s.max_flux_gap() < 1e-6, "{:?}", s.flux_identity);
        assert!(s.max_residual() < 1e-5);
    }

    #[test]
    fn standard_error() {
        let (m, se) = mean_std_err(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0_f64 / 12.0).sqrt()).abs() < 1e-15);
        assert!(mean_std_err(&[1.0]).1.is_nan());
    }

    #[test]
    fn default_config_validates() {
        let rows = validate_config(&RunConfig::default()).unwrap();
        for r in &rows {
            assert!(r.pass, "{r:?}");
        }
        let mut cfg = RunConfig::default();
        cfg.time.dt = 0.1;
        cfg.time.t_end = 0.3;
        let rows = validate_config(&cfg).unwrap();
        assert!(rows.iter().any(|r| !r.pass));
    }
}

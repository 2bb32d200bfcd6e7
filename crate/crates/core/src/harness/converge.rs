use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::coeffs::{CoefficientTable, TableOptions};
use crate::error::{Error, Result};
use crate::harness::config::RunConfig;
use crate::harness::pairings::{weakstar_pairings, PairingSet};
use crate::kinetic::{
    initial_density, run_kinetic, DensityConvention, KineticOptions, KineticTrajectory,
};
use crate::macroscopic::{run_macro, MacroField, MacroTrajectory};
use crate::problem::Problem;
use crate::wiener::WienerPath;

/// One `(ε, seed)` entry of a convergence study. Failed runs carry NaN values
/// and the error message.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub seed: u64,
    /// `‖u_ε - u‖_{L¹([0,T]×T¹)}` with the raw density.
    pub l1_gap_raw: f64,
    /// The same with the Λ-shifted density.
    pub l1_gap_shifted: f64,
    /// `‖u_ε - u‖_{L²([0,T]×T¹)}`, raw and shifted.
    pub l2_gap_raw: f64,
    pub l2_gap_shifted: f64,
    /// Largest weak-* pairing gap of the shifted run at `T`.
    pub weakstar_max_gap: f64,
    /// Smallest defect density value seen in the shifted run.
    pub defect_min: f64,
    pub wallclock_s: f64,
    pub kinetic_dt: f64,
    pub error: Option<String>,
}

/// Mean and standard error over seeds of one gap sequence entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapAggregate {
    pub eps: f64,
    pub mean: f64,
    /// NaN for a single realization.
    pub std_err: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConventionSummary {
    pub convention: DensityConvention,
    pub gaps: Vec<GapAggregate>,
    /// Aggregated L² gaps; informational only.
    pub l2_gaps: Vec<GapAggregate>,
    /// Mean gaps strictly decrease along the ε list.
    pub strictly_decreasing: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub problem: String,
    pub scheme: String,
    pub rows: Vec<ConvergenceRow>,
    pub summaries: Vec<ConventionSummary>,
    /// The convention whose gap sequence decreases; the smaller final gap wins a tie.
    pub converging: Option<DensityConvention>,
}

impl ConvergenceReport {
    pub fn failures(&self) -> impl Iterator<Item = &ConvergenceRow> {
        self.rows.iter().filter(|r| r.error.is_some())
    }

    pub fn summary(&self, c: DensityConvention) -> &ConventionSummary {
        self.summaries
            .iter()
            .find(|s| s.convention == c)
            .expect("both conventions are summarised")
    }
}

fn trapezoid_in_time(
    a: &[MacroField],
    b: &[MacroField],
    dt: f64,
    dist: impl Fn(&MacroField, &MacroField) -> Result<f64>,
) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::Config(format!(
            "histories have {} and {} time levels",
            a.len(),
            b.len()
        )));
    }
    let n = a.len() - 1;
    let mut acc = 0.0;
    for (k, (x, y)) in a.iter().zip(b).enumerate() {
        if (x.t - y.t).abs() > 1e-9 * (1.0 + x.t.abs()) {
            return Err(Error::Config(format!(
                "time levels {} and {} do not match",
                x.t, y.t
            )));
        }
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        acc += w * dist(x, y)?;
    }
    Ok(acc * dt)
}

/// Trapezoid-in-time L¹ distance of two equally spaced density histories.
pub fn space_time_l1(a: &[MacroField], b: &[MacroField], dt: f64) -> Result<f64> {
    trapezoid_in_time(a, b, dt, |x, y| x.l1_distance(y))
}

/// Space-time L² distance, same quadrature as [`space_time_l1`].
pub fn space_time_l2(a: &[MacroField], b: &[MacroField], dt: f64) -> Result<f64> {
    Ok(trapezoid_in_time(a, b, dt, |x, y| Ok(x.l2_distance(y)?.powi(2)))?.sqrt())
}

/// Panics unless every node of `coarse` equals the corresponding node of `fine`
/// bit for bit.
pub fn assert_shared_nodes(coarse: &WienerPath, fine: &WienerPath) {
    let ratio = fine.n_steps() / coarse.n_steps();
    assert_eq!(
        ratio * coarse.n_steps(),
        fine.n_steps(),
        "paths are not nested"
    );
    for c in 0..coarse.components() {
        let (a, b) = (coarse.nodes(c), fine.nodes(c));
        for (n, v) in a.iter().enumerate() {
            assert_eq!(
                v.to_bits(),
                b[n * ratio].to_bits(),
                "component {c}, node {n} differs"
            );
        }
    }
}

/// Smallest power-of-two refinement making the kinetic step at most
/// `ε c / (4 max|Λ|)`.
pub fn refinement_factor(dt: f64, eps: f64, margin: f64, max_lambda: f64) -> usize {
    if max_lambda == 0.0 {
        return 1;
    }
    let cap = eps * margin / (4.0 * max_lambda);
    let mut f = 1usize;
    while dt / f as f64 > cap * (1.0 + 1e-12) {
        f *= 2;
    }
    f
}

/// Macroscopic coefficient table covering both conventions' initial data.
pub fn macro_table(
    cfg: &RunConfig,
    problem: &Problem,
    u0: &MacroField,
) -> Result<CoefficientTable> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in DensityConvention::ALL {
        let d = initial_density(problem, u0, c);
        lo = lo.min(d.min());
        hi = hi.max(d.max());
    }
    let lo = (lo - cfg.grid.u_margin).max(problem.xi_min);
    let hi = (hi + cfg.grid.u_margin).min(problem.xi_max);
    let opts = TableOptions {
        n_laguerre: cfg.grid.n_laguerre,
        n_u: cfg.grid.n_u,
        ..TableOptions::default()
    };
    CoefficientTable::build(problem, u0.grid, lo, hi, opts)
}

struct SeedContext {
    seed: u64,
    base: WienerPath,
    macros: Vec<(DensityConvention, MacroTrajectory)>,
}

fn kinetic_for(
    cfg: &RunConfig,
    problem: &Problem,
    u0: &MacroField,
    ctx: &SeedContext,
    eps: f64,
    convention: DensityConvention,
) -> Result<(KineticTrajectory, f64)> {
    let factor = refinement_factor(
        cfg.time.dt,
        eps,
        cfg.eps.margin,
        problem.max_abs_lambda(256),
    );
    let path = ctx.base.refine(factor)?;
    assert_shared_nodes(&ctx.base, &path);
    let opts = KineticOptions {
        scheme: cfg.eps.scheme,
        convention,
        density_stride: factor,
        defect_stride: factor,
        snapshot_stride: 0,
        xi_margin: cfg.eps.margin,
    };
    let dt = cfg.time.dt / factor as f64;
    let traj = run_kinetic(
        problem,
        eps,
        u0,
        cfg.xi_grid()?,
        cfg.time.t_end,
        dt,
        &path,
        opts,
    )?;
    Ok((traj, dt))
}

fn run_cell(
    cfg: &RunConfig,
    problem: &Problem,
    u0: &MacroField,
    set: &PairingSet,
    ctx: &SeedContext,
    eps: f64,
) -> Result<ConvergenceRow> {
    let start = Instant::now();
    let mut gaps = [f64::NAN; 2];
    let mut l2 = [f64::NAN; 2];
    let mut weak = f64::NAN;
    let mut defect = f64::NAN;
    let mut kdt = f64::NAN;
    for (slot, (conv, mac)) in ctx.macros.iter().enumerate() {
        let (traj, dt) = kinetic_for(cfg, problem, u0, ctx, eps, *conv)?;
        kdt = dt;
        gaps[slot] = space_time_l1(&traj.densities, &mac.states, cfg.time.dt)?;
        l2[slot] = space_time_l2(&traj.densities, &mac.states, cfg.time.dt)?;
        if *conv == DensityConvention::Shifted {
            let pairs = weakstar_pairings(
                &traj.final_field,
                &mac.states[mac.states.len() - 1],
                problem,
                set,
            )?;
            weak = pairs.into_iter().fold(0.0, f64::max);
            defect = traj
                .defects
                .iter()
                .map(|d| d.min_total)
                .fold(f64::INFINITY, f64::min);
        }
    }
    Ok(ConvergenceRow {
        eps,
        seed: ctx.seed,
        l1_gap_raw: gaps[0],
        l1_gap_shifted: gaps[1],
        l2_gap_raw: l2[0],
        l2_gap_shifted: l2[1],
        weakstar_max_gap: weak,
        defect_min: defect,
        wallclock_s: start.elapsed().as_secs_f64(),
        kinetic_dt: kdt,
        error: None,
    })
}

fn aggregate(
    rows: &[ConvergenceRow],
    eps_list: &[f64],
    pick: impl Fn(&ConvergenceRow) -> f64,
) -> Vec<GapAggregate> {
    eps_list
        .iter()
        .map(|&eps| {
            let v: Vec<f64> = rows
                .iter()
                .filter(|r| r.eps == eps && r.error.is_none())
                .map(&pick)
                .collect();
            let n = v.len();
            let mean = if n == 0 {
                f64::NAN
            } else {
                v.iter().sum::<f64>() / n as f64
            };
            let std_err = if n < 2 {
                f64::NAN
            } else {
                let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                (var / n as f64).sqrt()
            };
            GapAggregate {
                eps,
                mean,
                std_err,
                samples: n,
            }
        })
        .collect()
}

/// ε → 0 study: per seed one path and one macroscopic run per convention,
/// then a kinetic run per `(ε, convention)` on the bridge refinement of the
/// same path, with space-time L¹ gaps, weak-* pairings and defect minima.
pub fn converge_in_eps(cfg: &RunConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let problem = cfg.build_problem()?;
    let u0 = cfg.initial_density()?;
    let table = macro_table(cfg, &problem, &u0)?;
    let (xi_lo, xi_hi) = cfg.xi_bounds();
    let set = PairingSet::standard(0.5 * (xi_lo + xi_hi), 0.25 * (xi_hi - xi_lo))?;
    let seeds = cfg.seeds();

    let contexts: Vec<Result<SeedContext>> = seeds
        .par_iter()
        .map(|&seed| {
            let base = cfg.base_path(&problem, seed)?;
            let mut macros = Vec::new();
            for c in DensityConvention::ALL {
                let start = initial_density(&problem, &u0, c);
                macros.push((
                    c,
                    run_macro(&table, &start, cfg.time.t_end, cfg.time.dt, &base)?,
                ));
            }
            Ok(SeedContext { seed, base, macros })
        })
        .collect();

    let jobs: Vec<(usize, f64)> = (0..seeds.len())
        .flat_map(|s| cfg.eps.values.iter().map(move |&e| (s, e)))
        .collect();
    let mut rows: Vec<ConvergenceRow> = jobs
        .par_iter()
        .map(|&(s, eps)| {
            let result = match &contexts[s] {
                Ok(ctx) => run_cell(cfg, &problem, &u0, &set, ctx, eps),
                Err(e) => Err(Error::Config(e.to_string())),
            };
            result.unwrap_or_else(|e| ConvergenceRow {
                eps,
                seed: seeds[s],
                l1_gap_raw: f64::NAN,
                l1_gap_shifted: f64::NAN,
                l2_gap_raw: f64::NAN,
                l2_gap_shifted: f64::NAN,
                weakstar_max_gap: f64::NAN,
                defect_min: f64::NAN,
                wallclock_s: f64::NAN,
                kinetic_dt: f64::NAN,
                error: Some(e.to_string()),
            })
        })
        .collect();
    // ε in list order (decreasing), then seed
    rows.sort_by(|a, b| b.eps.total_cmp(&a.eps).then(a.seed.cmp(&b.seed)));

    let summaries: Vec<ConventionSummary> = DensityConvention::ALL
        .iter()
        .map(|&c| {
            let gaps = aggregate(&rows, &cfg.eps.values, |r| match c {
                DensityConvention::Raw => r.l1_gap_raw,
                DensityConvention::Shifted => r.l1_gap_shifted,
            });
            let l2_gaps = aggregate(&rows, &cfg.eps.values, |r| match c {
                DensityConvention::Raw => r.l2_gap_raw,
                DensityConvention::Shifted => r.l2_gap_shifted,
            });
            let strictly_decreasing = gaps.iter().all(|g| g.mean.is_finite())
                && gaps.windows(2).all(|w| w[1].mean < w[0].mean);
            ConventionSummary {
                convention: c,
                gaps,
                l2_gaps,
                strictly_decreasing,
            }
        })
        .collect();
    let converging = summaries
        .iter()
        .filter(|s| s.strictly_decreasing && s.gaps.len() > 1)
        .min_by(|a, b| {
            let fa = a.gaps.last().map_or(f64::INFINITY, |g| g.mean);
            let fb = b.gaps.last().map_or(f64::INFINITY, |g| g.mean);
            fa.total_cmp(&fb)
        })
        .map(|s| s.convention);
    Ok(ConvergenceReport {
        problem: problem.name.clone(),
        scheme: cfg.eps.scheme.label().into(),
        rows,
        summaries,
        converging,
    })
}

/// Macroscopic reference on `ref_nx` cells (an integer multiple of the
/// configured `Nx`) at the same Courant number, averaged onto the coarse cells
/// and sampled at the coarse time levels.
pub fn macro_reference(
    cfg: &RunConfig,
    problem: &Problem,
    ref_nx: usize,
) -> Result<Vec<MacroField>> {
    let nx = cfg.grid.nx;
    let factor = ref_nx / nx;
    if factor == 0 || factor * nx != ref_nx || !problem.is_noise_free() {
        return Err(Error::Config(format!(
            "reference of {ref_nx} cells must refine {nx} cells of a noise-free problem"
        )));
    }
    let mut fine_cfg = cfg.clone();
    fine_cfg.grid.nx = ref_nx;
    let fine_u0 = fine_cfg.initial_density()?;
    let fine_table = macro_table(&fine_cfg, problem, &fine_u0)?;
    let fine_dt = cfg.time.dt / factor as f64;
    let steps = crate::macroscopic::step_count(cfg.time.t_end, fine_dt)?;
    let fine_path = WienerPath::zero(0, cfg.time.t_end, steps);
    let fine = run_macro(&fine_table, &fine_u0, cfg.time.t_end, fine_dt, &fine_path)?;
    fine.states
        .iter()
        .step_by(factor)
        .map(|s| s.coarsen(factor))
        .collect()
}

/// Error of the macroscopic solver at `Nx` against [`macro_reference`],
/// measured in `L¹([0,T]×T¹)` on the coarse time levels.
pub fn macro_self_convergence(
    cfg: &RunConfig,
    problem: &Problem,
    u0: &MacroField,
    ref_nx: usize,
) -> Result<f64> {
    let reference = macro_reference(cfg, problem, ref_nx)?;
    let table = macro_table(cfg, problem, u0)?;
    let coarse = run_macro(
        &table,
        u0,
        cfg.time.t_end,
        cfg.time.dt,
        &cfg.base_path(problem, 0)?,
    )?;
    space_time_l1(&coarse.states, &reference, cfg.time.dt)
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::XiGrid;
use crate::kinetic::relax::{exact_field_relax, relax_toward, DensityConvention, Scheme};
use crate::kinetic::transport::{transport_with_scale, ExitCount};
use crate::kinetic::KineticField;
use crate::macroscopic::{step_count, MacroField};
use crate::maxwell::defect_measure_with_density;
use crate::problem::Problem;
use crate::wiener::WienerPath;

/// Recording and splitting choices for [`run_kinetic`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KineticOptions {
    pub scheme: Scheme,
    pub convention: DensityConvention,
    /// Record the density every this many steps; the initial state is always recorded.
    pub density_stride: usize,
    /// Record defect statistics every this many steps; 0 disables.
    pub defect_stride: usize,
    /// Keep a copy of the field every this many steps; 0 disables.
    pub snapshot_stride: usize,
    /// Largest admissible field drift `max|Λ| Δt / ε` per step, in velocity units.
    pub xi_margin: f64,
}

impl Default for KineticOptions {
    fn default() -> Self {
        Self {
            scheme: Scheme::TransportRelax,
            convention: DensityConvention::Raw,
            density_stride: 1,
            defect_stride: 0,
            snapshot_stride: 0,
            xi_margin: 1.0,
        }
    }
}

/// Defect statistics at one time level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DefectSample {
    pub t: f64,
    /// Smallest cell value of the full defect density.
    pub min_total: f64,
    /// Smallest cell value of its relaxation part.
    pub min_relaxation: f64,
    pub mass: f64,
}

#[derive(Debug, Clone)]
pub struct KineticTrajectory {
    pub eps: f64,
    pub dt: f64,
    pub steps: usize,
    pub options: KineticOptions,
    /// Convention densities at the recorded times, starting at `t = 0`.
    pub densities: Vec<MacroField>,
    pub defects: Vec<DefectSample>,
    pub snapshots: Vec<KineticField>,
    pub final_field: KineticField,
    /// Largest change of a row's raw density across a relaxation step, when the
    /// scheme relaxes toward the raw density; `None` otherwise.
    pub relax_drift: Option<f64>,
    pub exits: ExitCount,
}

/// Density of the initial equilibrium `1_{u0>ξ}` in `convention`.
pub fn initial_density(
    problem: &Problem,
    u0: &MacroField,
    convention: DensityConvention,
) -> MacroField {
    match convention {
        DensityConvention::Raw => u0.clone(),
        DensityConvention::Shifted => MacroField {
            grid: u0.grid,
            t: u0.t,
            u: u0
                .u
                .iter()
                .enumerate()
                .map(|(i, u)| u - problem.lambda.eval(u0.grid.center(i)))
                .collect(),
        },
    }
}

/// Largest `|a|` over the cell centres of the phase grid.
fn max_flux_speed(problem: &Problem, f: &KineticField) -> f64 {
    let xg = f.x_grid();
    let vg = f.xi_grid();
    let mut m = 0.0_f64;
    for i in 0..xg.n {
        for j in 0..vg.n {
            m = m.max(problem.flux.eval(xg.center(i), vg.center(j)).abs());
        }
    }
    m
}

/// Runs the kinetic scheme from `F_0 = 1_{u0>ξ}` on `[0, T]` with step `Δt`.
/// `path` may be finer than `Δt`; the transport takes one remap per path step.
#[allow(clippy::too_many_arguments)]
pub fn run_kinetic(
    problem: &Problem,
    eps: f64,
    u0: &MacroField,
    xi: XiGrid,
    t_end: f64,
    dt: f64,
    path: &WienerPath,
    opts: KineticOptions,
) -> Result<KineticTrajectory> {
    if !(eps > 0.0) {
        return Err(Error::Config(format!("ε must be positive, got {eps}")));
    }
    if opts.density_stride == 0 {
        return Err(Error::Config("density stride must be at least 1".into()));
    }
    if path.components() != problem.noise_dim() {
        return Err(Error::Config(format!(
            "path has {} components, problem has {} noise fields",
            path.components(),
            problem.noise_dim()
        )));
    }
    let steps = step_count(t_end, dt)?;
    if (path.t_end() - t_end).abs() > 1e-12 * t_end {
        return Err(Error::Config(format!(
            "path ends at {}, run at {t_end}",
            path.t_end()
        )));
    }
    let mut f = KineticField::from_density(u0, xi, eps);
    f.t = 0.0;

    let speed = max_flux_speed(problem, &f);
    let dx = f.x_grid().dx();
    if speed * dt > dx * (1.0 + 1e-12) {
        return Err(Error::Cfl(format!(
            "max|a| Δt = {:.6} exceeds Δx = {dx:.6}",
            speed * dt
        )));
    }
    let field_scale = match opts.scheme {
        Scheme::TransportRelax => {
            let drift = problem.max_abs_lambda(256) * dt / eps;
            if drift > opts.xi_margin * (1.0 + 1e-12) {
                return Err(Error::Cfl(format!(
                    "field drift max|Λ| Δt/ε = {drift:.6} exceeds the velocity margin {}",
                    opts.xi_margin
                )));
            }
            1.0 / eps
        }
        Scheme::ExactHighField => 0.0,
    };

    let record_density = |f: &KineticField, raw: &[f64]| MacroField {
        grid: f.x_grid(),
        t: f.t,
        u: opts.convention.apply(problem, f, raw),
    };
    let raw0 = f.local_density().u;
    let mut densities = vec![record_density(&f, &raw0)];
    let mut defects = Vec::new();
    let mut snapshots = Vec::new();
    let mut exits = ExitCount::default();
    let track_drift =
        opts.scheme == Scheme::TransportRelax && opts.convention == DensityConvention::Raw;
    let mut drift = 0.0_f64;

    for n in 0..steps {
        let t = n as f64 * dt;
        let (moved, e) = transport_with_scale(&f, problem, field_scale, t, dt, path)?;
        exits.outside += e.outside;
        exits.unsaturated += e.unsaturated;
        let raw = moved.local_density().u;
        let target = opts.convention.apply(problem, &moved, &raw);
        f = match opts.scheme {
            Scheme::TransportRelax => relax_toward(&moved, &target, dt),
            Scheme::ExactHighField => exact_field_relax(&moved, problem, &target, dt),
        };
        f.t = (n + 1) as f64 * dt;
        if !f.is_finite() {
            return Err(Error::NonFinite { step: n + 1 });
        }
        let step = n + 1;
        let needs_raw = step % opts.density_stride == 0
            || track_drift
            || (opts.defect_stride > 0 && step % opts.defect_stride == 0);
        let raw_after = if needs_raw {
            f.local_density().u
        } else {
            Vec::new()
        };
        if track_drift {
            for (a, b) in raw_after.iter().zip(&raw) {
                drift = drift.max((a - b).abs());
            }
        }
        if step % opts.density_stride == 0 {
            densities.push(record_density(&f, &raw_after));
        }
        if opts.defect_stride > 0 && step % opts.defect_stride == 0 {
            let target = opts.convention.apply(problem, &f, &raw_after);
            let d = defect_measure_with_density(&f, &target, problem, eps);
            defects.push(DefectSample {
                t: f.t,
                min_total: d.min_total(),
                min_relaxation: d.relaxation.iter().copied().fold(f64::INFINITY, f64::min),
                mass: d.mass(dx, xi.dxi()),
            });
        }
        if opts.snapshot_stride > 0 && step % opts.snapshot_stride == 0 {
            snapshots.push(f.clone());
        }
    }
    Ok(KineticTrajectory {
        eps,
        dt,
        steps,
        options: opts,
        densities,
        defects,
        snapshots,
        final_field: f,
        relax_drift: track_drift.then_some(drift),
        exits,
    })
}

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kinetic::characteristics::{aligned_steps, heun_step, CharState, Direction};
use crate::kinetic::KineticField;
use crate::problem::Problem;
use crate::wiener::WienerPath;

/// Boundary-row deviation from the far-field value above which a foot leaving
/// the velocity interval counts as an exit.
pub const SATURATION_TOL: f64 = 1e-6;
/// Largest admissible fraction of exiting feet per step.
pub const EXIT_FRACTION: f64 = 0.01;

#[inline]
fn cubic_weights(s: f64) -> [f64; 4] {
    let (sm1, sm2, sp1) = (s - 1.0, s - 2.0, s + 1.0);
    [
        -s * sm1 * sm2 / 6.0,
        sp1 * sm1 * sm2 / 2.0,
        -sp1 * s * sm2 / 2.0,
        sp1 * s * sm1 / 6.0,
    ]
}

/// Tensor cubic Lagrange interpolation of the cell values at `(x, ξ)`, clipped
/// to the range of the four enclosing values. Periodic in x; rows outside the
/// velocity interval read the far-field values.
pub(crate) fn interpolate(f: &KineticField, x: f64, xi: f64) -> f64 {
    let xg = f.x_grid();
    let vg = f.xi_grid();
    let nxi = vg.n as isize;
    let pj = (xi - vg.min) / vg.dxi() - 0.5;
    if pj < -2.0 {
        return f.far.below;
    }
    if pj > nxi as f64 + 1.0 {
        return f.far.above;
    }
    let px = x.rem_euclid(1.0) / xg.dx() - 0.5;
    let ix = px.floor();
    let jx = pj.floor();
    let wx = cubic_weights(px - ix);
    let wj = cubic_weights(pj - jx);
    let (ix, jx) = (ix as isize, jx as isize);
    let value = |i: isize, j: isize| -> f64 {
        if j < 0 {
            f.far.below
        } else if j >= nxi {
            f.far.above
        } else {
            f.get(xg.wrap(i), j as usize)
        }
    };
    let mut acc = 0.0;
    for (a, wa) in wx.iter().enumerate() {
        let i = ix - 1 + a as isize;
        let mut col = 0.0;
        for (b, wb) in wj.iter().enumerate() {
            col += wb * value(i, jx - 1 + b as isize);
        }
        acc += wa * col;
    }
    let corners = [
        value(ix, jx),
        value(ix + 1, jx),
        value(ix, jx + 1),
        value(ix + 1, jx + 1),
    ];
    let lo = corners.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = corners.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    acc.clamp(lo, hi)
}

/// Exit bookkeeping for one remap.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ExitCount {
    /// Feet outside the velocity interval.
    pub outside: usize,
    /// Feet outside where the adjacent boundary row is not at its far-field value.
    pub unsaturated: usize,
}

/// Semi-Lagrangian remap over one path step: every cell centre is traced back
/// along the characteristics to its foot, where the old field is interpolated
/// and multiplied by the transport weight.
pub(crate) fn remap(
    f: &KineticField,
    problem: &Problem,
    field_scale: f64,
    h: f64,
    dw: &[f64],
) -> (KineticField, ExitCount) {
    let xg = f.x_grid();
    let vg = f.xi_grid();
    let nxi = vg.n;
    let far = f.far;
    let rows: Vec<(Vec<f64>, ExitCount)> = (0..xg.n)
        .into_par_iter()
        .map(|i| {
            let x = xg.center(i);
            let mut row = Vec::with_capacity(nxi);
            let mut exits = ExitCount::default();
            for j in 0..nxi {
                let foot = heun_step(
                    problem,
                    field_scale,
                    CharState::new(x, vg.center(j)),
                    h,
                    dw,
                    Direction::Backward,
                );
                if foot.xi < vg.min || foot.xi > vg.max {
                    exits.outside += 1;
                    let fi = ((foot.x / xg.dx()) as usize).min(xg.n - 1);
                    let (edge, far_value) = if foot.xi < vg.min {
                        (f.get(fi, 0), far.below)
                    } else {
                        (f.get(fi, nxi - 1), far.above)
                    };
                    if (edge - far_value).abs() > SATURATION_TOL {
                        exits.unsaturated += 1;
                    }
                }
                row.push(foot.weight() * interpolate(f, foot.x, foot.xi));
            }
            (row, exits)
        })
        .collect();
    let mut values = Vec::with_capacity(xg.n * nxi);
    let mut exits = ExitCount::default();
    for (row, e) in rows {
        values.extend(row);
        exits.outside += e.outside;
        exits.unsaturated += e.unsaturated;
    }
    let mut out = KineticField::new(xg, vg, f.eps, f.t + h, values).expect("row sizes match");
    out.far = far;
    (out, exits)
}

/// Rejects a remap whose unsaturated exits exceed [`EXIT_FRACTION`] of the nodes.
pub(crate) fn check_exits(exits: ExitCount, nodes: usize, t: f64) -> Result<()> {
    if exits.unsaturated as f64 > EXIT_FRACTION * nodes as f64 {
        return Err(Error::DomainTooSmall {
            exits: exits.unsaturated,
            nodes,
            t,
        });
    }
    Ok(())
}

/// Transport over `[t, t + Δt]` with the field drift `Λ/ε`, one remap per
/// step of `path`.
pub fn transport_step(
    f: &KineticField,
    problem: &Problem,
    t: f64,
    dt: f64,
    path: &WienerPath,
) -> Result<KineticField> {
    transport_with_scale(f, problem, 1.0 / f.eps, t, dt, path).map(|(g, _)| g)
}

pub(crate) fn transport_with_scale(
    f: &KineticField,
    problem: &Problem,
    field_scale: f64,
    t: f64,
    dt: f64,
    path: &WienerPath,
) -> Result<(KineticField, ExitCount)> {
    let (first, count) = aligned_steps(path, t, dt)?;
    let nodes = f.values().len();
    let mut g = f.clone();
    g.t = t;
    let mut total = ExitCount::default();
    for n in first..first + count {
        let dw = path.increments(n)?;
        let (next, exits) = remap(&g, problem, field_scale, path.dt(), &dw);
        check_exits(exits, nodes, next.t)?;
        total.outside += exits.outside;
        total.unsaturated += exits.unsaturated;
        g = next;
    }
    g.t = t + dt;
    Ok((g, total))
}

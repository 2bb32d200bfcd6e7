use serde::Serialize;

use crate::error::{Error, Result};
use crate::kinetic::transport::transport_with_scale;
use crate::kinetic::KineticField;
use crate::problem::Problem;
use crate::wiener::WienerPath;

/// `‖S(t, 0) X_0‖_{L¹}` at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormSample {
    pub t: f64,
    pub norm: f64,
}

/// L¹ gap between the transport built from remaps of step `Δt` and the one
/// built from two half-step remaps per step, over the same horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompositionGap {
    pub dt: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SemigroupReport {
    pub initial_norm: f64,
    pub norms: Vec<NormSample>,
    /// `max_t ‖S(t,0) X_0‖ / ‖X_0‖ - 1`.
    pub max_growth: f64,
    pub contraction_tol: f64,
    pub contraction_holds: bool,
    pub gaps: Vec<CompositionGap>,
    /// `gap(Δt/2) / gap(Δt)` for consecutive levels.
    pub ratios: Vec<f64>,
}

/// Checks the discrete transport operator `S(t, s)` (field drift included, no
/// relaxation) on data `x0`.
///
/// Contraction: `‖S(t, 0) X_0‖_{L¹}` is sampled after every step of `path`.
/// Composition: for `ℓ = 0..levels`, `S_ℓ` remaps once per step of
/// `path.refine(2^ℓ)` over `[0, T]`; the gap at level `ℓ` is
/// `‖S_ℓ X_0 - S_{ℓ+1} X_0‖_{L¹}`, i.e. each step of the one-leg operator
/// against its two-leg split at the midpoint.
pub fn semigroup_checks(
    problem: &Problem,
    eps: f64,
    x0: &KineticField,
    path: &WienerPath,
    levels: usize,
    contraction_tol: f64,
) -> Result<SemigroupReport> {
    if levels == 0 {
        return Err(Error::Config(
            "composition check needs at least one level".into(),
        ));
    }
    let scale = 1.0 / eps;
    let h = path.dt();
    let initial_norm = x0.l1_norm();
    let mut norms = vec![NormSample {
        t: 0.0,
        norm: initial_norm,
    }];
    let mut g = x0.clone();
    g.t = 0.0;
    for n in 0..path.n_steps() {
        let (next, _) = transport_with_scale(&g, problem, scale, n as f64 * h, h, path)?;
        g = next;
        norms.push(NormSample {
            t: g.t,
            norm: g.l1_norm(),
        });
    }
    let max_growth = norms
        .iter()
        .map(|s| s.norm / initial_norm - 1.0)
        .fold(f64::NEG_INFINITY, f64::max);

    let t_end = path.t_end();
    let mut finals = Vec::with_capacity(levels + 1);
    let mut dts = Vec::with_capacity(levels + 1);
    for level in 0..=levels {
        let p = path.refine(1 << level)?;
        let (s, _) = transport_with_scale(x0, problem, scale, 0.0, t_end, &p)?;
        dts.push(p.dt());
        finals.push(s);
    }
    let mut gaps = Vec::with_capacity(levels);
    for level in 0..levels {
        gaps.push(CompositionGap {
            dt: dts[level],
            gap: finals[level].l1_distance(&finals[level + 1])?,
        });
    }
    let ratios = gaps.windows(2).map(|w| w[1].gap / w[0].gap).collect();
    Ok(SemigroupReport {
        initial_norm,
        norms,
        max_growth,
        contraction_tol,
        contraction_holds: max_growth <= contraction_tol,
        gaps,
        ratios,
    })
}

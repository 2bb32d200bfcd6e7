use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::Problem;
use crate::wiener::WienerPath;

/// A point on a stochastic characteristic: torus coordinate, velocity and the
/// logarithm of the transport weight `η = exp(-∫ div_x a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharState {
    pub x: f64,
    pub xi: f64,
    pub log_weight: f64,
}

impl CharState {
    pub fn new(x: f64, xi: f64) -> Self {
        Self {
            x,
            xi,
            log_weight: 0.0,
        }
    }

    pub fn weight(&self) -> f64 {
        self.log_weight.exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Forward,
    Backward,
}

/// Velocity drift `Λ(x) s - ¼ ∂_ξ G²(x, ξ)`; `s` is `1/ε`, or 0 when the
/// field term is handled elsewhere.
#[inline]
fn xi_drift(problem: &Problem, field_scale: f64, x: f64, xi: f64) -> f64 {
    let field = if field_scale == 0.0 {
        0.0
    } else {
        problem.lambda.eval(x) * field_scale
    };
    if problem.is_noise_free() {
        field
    } else {
        field - 0.25 * problem.dg2_dxi_unchecked(x, xi)
    }
}

#[inline]
fn xi_noise(problem: &Problem, x: f64, xi: f64, dw: &[f64]) -> f64 {
    problem
        .noise
        .iter()
        .zip(dw)
        .map(|(g, &w)| if w == 0.0 { 0.0 } else { g.eval(x, xi) * w })
        .sum()
}

/// One Heun (explicit trapezoidal) step of the Stratonovich system
///
/// `dx = a dt`, `dξ = (Λ s - ¼ ∂_ξ G²) dt + Σ g_k ∘ dβ_k`,
///
/// with the log-weight advanced by the trapezoidal average of `-div_x a`.
/// `Backward` integrates the time-reversed system with reversed increments,
/// which traces the inverse flow from an arrival point back to its foot.
pub(crate) fn heun_step(
    problem: &Problem,
    field_scale: f64,
    state: CharState,
    dt: f64,
    dw: &[f64],
    direction: Direction,
) -> CharState {
    let sign = match direction {
        Direction::Forward => 1.0,
        Direction::Backward => -1.0,
    };
    let CharState { x, xi, log_weight } = state;
    let ax = problem.flux.eval(x, xi);
    let fx = xi_drift(problem, field_scale, x, xi);
    let gx = xi_noise(problem, x, xi, dw);

    let xp = x + sign * ax * dt;
    let xip = xi + sign * (fx * dt + gx);

    let ap = problem.flux.eval(xp, xip);
    let fp = xi_drift(problem, field_scale, xp, xip);
    let gp = xi_noise(problem, xp, xip, dw);

    let x_new = x + sign * 0.5 * (ax + ap) * dt;
    let xi_new = xi + sign * 0.5 * ((fx + fp) * dt + gx + gp);

    let div0 = problem.flux.dx(x, xi);
    let div1 = problem.flux.dx(x_new, xi_new);
    CharState {
        x: x_new.rem_euclid(1.0),
        xi: xi_new,
        log_weight: log_weight - 0.5 * (div0 + div1) * dt,
    }
}

/// Advances a characteristic over `[t, t + Δt]`, which must be a whole number
/// of steps of `path`; one Heun step is taken per path step.
pub fn characteristics_step(
    state: CharState,
    problem: &Problem,
    eps: f64,
    t: f64,
    dt: f64,
    path: &WienerPath,
    direction: Direction,
) -> Result<CharState> {
    let (first, count) = aligned_steps(path, t, dt)?;
    let h = path.dt();
    let scale = 1.0 / eps;
    let mut s = state;
    let steps: Box<dyn Iterator<Item = usize>> = match direction {
        Direction::Forward => Box::new(first..first + count),
        Direction::Backward => Box::new((first..first + count).rev()),
    };
    for n in steps {
        let dw = path.increments(n)?;
        s = heun_step(problem, scale, s, h, &dw, direction);
    }
    Ok(s)
}

/// First path step and number of steps covering `[t, t + Δt]`.
pub(crate) fn aligned_steps(path: &WienerPath, t: f64, dt: f64) -> Result<(usize, usize)> {
    let h = path.dt();
    let a = t / h;
    let m = dt / h;
    let tol = 1e-9;
    if (a - a.round()).abs() > tol || (m - m.round()).abs() > tol || m.round() < 1.0 {
        return Err(Error::Config(format!(
            "interval [{t}, {}] is not aligned with the path step {h}",
            t + dt
        )));
    }
    let (first, count) = (a.round() as usize, m.round() as usize);
    if first + count > path.n_steps() {
        return Err(Error::Range(format!(
            "interval [{t}, {}] runs past the path horizon {}",
            t + dt,
            path.t_end()
        )));
    }
    Ok((first, count))
}

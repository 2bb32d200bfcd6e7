use serde::Serialize;

use crate::coeffs::CoefficientTable;
use crate::error::{Error, Result};
use crate::macroscopic::MacroTrajectory;
use crate::wiener::WienerPath;

/// `exp(1 - 1/(1 - s²))` on `|s| < 1`, peak 1 at `s = 0`, and its derivative.
fn bump(s: f64) -> (f64, f64) {
    if s.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let q = 1.0 - s * s;
    let v = (1.0 - 1.0 / q).exp();
    (v, v * (-2.0 * s / (q * q)))
}

/// Separable nonnegative test function `φ(t, x) = ψ(t) χ(x)`: smooth bumps
/// supported in `(t_lo, t_hi)` and in the periodic window `|x - x_center| < x_half`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestFunction {
    pub t_lo: f64,
    pub t_hi: f64,
    pub x_center: f64,
    pub x_half: f64,
}

impl TestFunction {
    pub fn new(t_lo: f64, t_hi: f64, x_center: f64, x_half: f64) -> Result<Self> {
        if !(t_lo < t_hi) || !(x_half > 0.0 && x_half <= 0.5) {
            return Err(Error::Config(format!(
                "degenerate test function: t in ({t_lo}, {t_hi}), half-width {x_half}"
            )));
        }
        Ok(Self {
            t_lo,
            t_hi,
            x_center,
            x_half,
        })
    }

    /// Named presets on `[0, T]`.
    pub fn preset(name: &str, t_end: f64) -> Result<Self> {
        match name {
            "bump" => Self::new(0.1 * t_end, 0.9 * t_end, 0.5, 0.25),
            "wide" => Self::new(0.05 * t_end, 0.95 * t_end, 0.5, 0.5),
            "left" => Self::new(0.1 * t_end, 0.9 * t_end, 0.25, 0.2),
            "right" => Self::new(0.1 * t_end, 0.9 * t_end, 0.75, 0.2),
            other => Err(Error::Config(format!(
                "unknown test function `{other}` (expected bump, wide, left or right)"
            ))),
        }
    }

    fn s_t(&self, t: f64) -> f64 {
        (2.0 * t - self.t_lo - self.t_hi) / (self.t_hi - self.t_lo)
    }

    fn s_x(&self, x: f64) -> f64 {
        let d = (x - self.x_center + 0.5).rem_euclid(1.0) - 0.5;
        d / self.x_half
    }

    pub fn psi(&self, t: f64) -> f64 {
        bump(self.s_t(t)).0
    }

    pub fn dpsi(&self, t: f64) -> f64 {
        bump(self.s_t(t)).1 * 2.0 / (self.t_hi - self.t_lo)
    }

    pub fn chi(&self, x: f64) -> f64 {
        bump(self.s_x(x)).0
    }

    pub fn dchi(&self, x: f64) -> f64 {
        bump(self.s_x(x)).1 / self.x_half
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        self.psi(t) * self.chi(x)
    }
}

/// The four terms of the Kruzhkov-type entropy statistic for one state `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyStatistic {
    pub k: f64,
    pub seed: u64,
    /// `∫ |u - k| ∂_t φ`
    pub time_term: f64,
    /// `∫ sgn(u - k) (B(x, u) - B(x, k)) ∂_x φ`
    pub flux_term: f64,
    /// `∫ ∂_x B(x, k) sgn(u - k) φ`
    pub source_term: f64,
    /// `-Σ_n Σ_i sgn(u_i^n - k) C(x_i, u_i^n) ΔW_n φ(t_n, x_i) Δx`
    pub noise_term: f64,
    pub total: f64,
}

#[inline]
fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Evaluates the entropy statistic on a macroscopic trajectory.
///
/// Deterministic terms use the midpoint of each space-time cell for `φ` and
/// its derivatives and the average of the two bounding time levels for the
/// solution-dependent factor. The noise term is an Itô sum with `φ` frozen at
/// the left time level.
pub fn kruzhkov_statistic(
    traj: &MacroTrajectory,
    coeffs: &CoefficientTable,
    k: f64,
    phi: &TestFunction,
    path: &WienerPath,
) -> Result<EntropyStatistic> {
    let steps = traj.states.len().saturating_sub(1);
    if steps == 0 {
        return Err(Error::Config("trajectory has no time steps".into()));
    }
    if path.n_steps() != steps || path.components() != coeffs.noise_dim() {
        return Err(Error::Config(format!(
            "trajectory has {steps} steps, path {} steps with {} components (table has {})",
            path.n_steps(),
            path.components(),
            coeffs.noise_dim()
        )));
    }
    let grid = traj.states[0].grid;
    if grid != coeffs.grid {
        return Err(Error::Config(
            "trajectory and coefficient table use different grids".into(),
        ));
    }
    let dx = grid.dx();
    let dt = traj.dt;
    let n = grid.n;

    let mut b_k = Vec::with_capacity(n);
    let mut db_k = Vec::with_capacity(n);
    for i in 0..n {
        b_k.push(coeffs.flux_at_center(i, k)?);
        db_k.push(coeffs.flux_dx_at_center(i, k)?);
    }

    let mut time_term = 0.0;
    let mut flux_term = 0.0;
    let mut source_term = 0.0;
    let mut noise_term = 0.0;
    for step in 0..steps {
        let t0 = traj.states[step].t;
        let tm = t0 + 0.5 * dt;
        let (psi, dpsi, psi0) = (phi.psi(tm), phi.dpsi(tm), phi.psi(t0));
        let u0 = &traj.states[step].u;
        let u1 = &traj.states[step + 1].u;
        let dw = path.increments(step)?;
        for i in 0..n {
            let x = grid.center(i);
            let (chi, dchi) = (phi.chi(x), phi.dchi(x));
            if psi != 0.0 && (chi != 0.0 || dchi != 0.0) {
                let (a, b) = (u0[i], u1[i]);
                let (sa, sb) = (sgn(a - k), sgn(b - k));
                time_term += 0.5 * ((a - k).abs() + (b - k).abs()) * dpsi * chi;
                if dchi != 0.0 {
                    let qa = sa * (coeffs.flux_at_center(i, a)? - b_k[i]);
                    let qb = sb * (coeffs.flux_at_center(i, b)? - b_k[i]);
                    flux_term += 0.5 * (qa + qb) * psi * dchi;
                }
                source_term += db_k[i] * 0.5 * (sa + sb) * psi * chi;
            }
            if psi0 != 0.0 && chi != 0.0 {
                let s = sgn(u0[i] - k);
                if s != 0.0 {
                    for (c, &w) in dw.iter().enumerate() {
                        noise_term -= s * coeffs.noise_at_center(c, i, u0[i])? * w * psi0 * chi;
                    }
                }
            }
        }
    }
    let cell = dt * dx;
    let time_term = time_term * cell;
    let flux_term = flux_term * cell;
    let source_term = source_term * cell;
    let noise_term = noise_term * dx;
    Ok(EntropyStatistic {
        k,
        seed: path.seed(),
        time_term,
        flux_term,
        source_term,
        noise_term,
        total: time_term + flux_term + source_term + noise_term,
    })
}

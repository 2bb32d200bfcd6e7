//! Homogenized flux and noise coefficients of the limit equation.
//!
//! `b(x, ξ) = ∫_0^∞ a(x, ξ + vΛ) e^{-v} dv` solves `b - Λ ∂_ξ b = a`, and
//! `B(x, u) = ∫_{ξ_min}^u b dξ`. The noise coefficients `c_k`, `C_k` are built
//! the same way from `∂_ξ g_k`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{linspace, XGrid};
use crate::maxwell::maxwellian_unchecked;
use crate::problem::{Coefficient, Problem};
use crate::quadrature::{gauss_laguerre, gauss_legendre};

pub const DEFAULT_LAGUERRE: usize = 128;
/// Gauss–Legendre points per panel for ξ-integrals.
const PANEL_ORDER: usize = 8;

fn check_order(n_laguerre: usize) -> Result<()> {
    if !(4..=256).contains(&n_laguerre) {
        return Err(Error::Domain {
            what: "Gauss-Laguerre order",
            value: n_laguerre as f64,
            lo: 4.0,
            hi: 256.0,
        });
    }
    Ok(())
}

/// `∫_0^∞ f(ξ + vΛ) e^{-v} dv`, short-circuited to `f(ξ)` when `Λ = 0`.
#[inline]
fn exp_average(lambda: f64, xi: f64, n_laguerre: usize, f: impl Fn(f64) -> f64) -> f64 {
    if lambda == 0.0 {
        return f(xi);
    }
    let rule = gauss_laguerre(n_laguerre);
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&v, &w)| w * f(xi + v * lambda))
        .sum()
}

/// `b(x, ξ)`.
pub fn b_coeff(problem: &Problem, x: f64, xi: f64, n_laguerre: usize) -> Result<f64> {
    check_order(n_laguerre)?;
    let lambda = problem.lambda.eval(x);
    let v = exp_average(lambda, xi, n_laguerre, |s| problem.flux.eval(x, s));
    finite("b", x, xi, v)
}

/// `c_k(x, ξ)` for noise component `k`.
pub fn c_coeff(problem: &Problem, k: usize, x: f64, xi: f64, n_laguerre: usize) -> Result<f64> {
    check_order(n_laguerre)?;
    let g = noise_component(problem, k)?;
    let lambda = problem.lambda.eval(x);
    let v = exp_average(lambda, xi, n_laguerre, |s| g.dxi(x, s));
    finite("c", x, xi, v)
}

fn noise_component(problem: &Problem, k: usize) -> Result<&Coefficient> {
    problem
        .noise
        .get(k)
        .ok_or_else(|| Error::Range(format!("noise component {k} of {}", problem.noise_dim())))
}

fn finite(name: &str, x: f64, xi: f64, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::CoefficientEval {
            field: name.into(),
            x,
            xi,
        })
    }
}

/// `|b - Λ (b(ξ+h) - b(ξ-h)) / 2h - a|`.
pub fn residual_b(problem: &Problem, x: f64, xi: f64, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::Domain {
            what: "difference step",
            value: h,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let n = DEFAULT_LAGUERRE;
    let lambda = problem.lambda.eval(x);
    let b = b_coeff(problem, x, xi, n)?;
    let db = (b_coeff(problem, x, xi + h, n)? - b_coeff(problem, x, xi - h, n)?) / (2.0 * h);
    Ok((b - lambda * db - problem.flux.try_eval(x, xi)?).abs())
}

/// Composite Gauss–Legendre integral of `f` over `[lo, hi]` with `panels` panels.
fn panel_integral(lo: f64, hi: f64, panels: usize, f: &impl Fn(f64) -> f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let rule = gauss_legendre(PANEL_ORDER);
    let panels = panels.max(1);
    let h = (hi - lo) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * h;
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            acc += w * f(mid + 0.5 * h * t);
        }
    }
    acc * 0.5 * h
}

/// A ξ-antiderivative from the bottom of the velocity interval, with an
/// estimate of the mass lost by not starting at `-∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Antiderivative {
    pub value: f64,
    pub tail_estimate: f64,
}

/// Estimate of `|∫_{-∞}^{ξ_min} f|`, from the window of one domain width below.
fn tail_estimate(problem: &Problem, n_xi: usize, f: &impl Fn(f64) -> f64) -> f64 {
    let width = problem.xi_max - problem.xi_min;
    panel_integral(problem.xi_min - width, problem.xi_min, n_xi, f).abs()
}

fn check_u(problem: &Problem, u: f64) -> Result<()> {
    if !(u >= problem.xi_min && u <= problem.xi_max) {
        return Err(Error::Domain {
            what: "macroscopic state u",
            value: u,
            lo: problem.xi_min,
            hi: problem.xi_max,
        });
    }
    Ok(())
}

/// `B(x, u) = ∫_{ξ_min}^u b(x, ξ) dξ` over `n_xi` panels.
pub fn flux_b(
    problem: &Problem,
    x: f64,
    u: f64,
    n_laguerre: usize,
    n_xi: usize,
) -> Result<Antiderivative> {
    check_order(n_laguerre)?;
    check_u(problem, u)?;
    let lambda = problem.lambda.eval(x);
    let b = |s: f64| exp_average(lambda, s, n_laguerre, |t| problem.flux.eval(x, t));
    let value = panel_integral(problem.xi_min, u, n_xi, &b);
    let tail = tail_estimate(problem, n_xi, &b);
    let value = finite("B", x, u, value)?;
    Ok(Antiderivative {
        value,
        tail_estimate: tail,
    })
}

/// `C_k(x, u) = ∫_{ξ_min}^u c_k(x, ξ) dξ` over `n_xi` panels.
pub fn noise_c(
    problem: &Problem,
    k: usize,
    x: f64,
    u: f64,
    n_laguerre: usize,
    n_xi: usize,
) -> Result<Antiderivative> {
    check_order(n_laguerre)?;
    check_u(problem, u)?;
    let g = noise_component(problem, k)?;
    let lambda = problem.lambda.eval(x);
    let c = |s: f64| exp_average(lambda, s, n_laguerre, |t| g.dxi(x, t));
    let value = panel_integral(problem.xi_min, u, n_xi, &c);
    let tail = tail_estimate(problem, n_xi, &c);
    let value = finite("C", x, u, value)?;
    Ok(Antiderivative {
        value,
        tail_estimate: tail,
    })
}

/// Both sides of `∫ a M_k dξ = B(x, k)` and their gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluxIdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// Left side by trapezoid quadrature of `a M_k` over `xi_grid` (split at the
/// kink `ξ = k`); right side by the exponential-average antiderivative of `b`
/// from the first grid node.
pub fn check_flux_identity(
    problem: &Problem,
    x: f64,
    k_val: f64,
    xi_grid: &[f64],
) -> Result<FluxIdentityCheck> {
    if xi_grid.len() < 2 {
        return Err(Error::Config("grid needs at least two nodes".into()));
    }
    let lo = xi_grid[0];
    let hi = xi_grid[xi_grid.len() - 1];
    if !(lo < k_val && k_val <= hi) {
        return Err(Error::Coverage {
            need_lo: k_val,
            need_hi: k_val,
            lo,
            hi,
        });
    }
    let lambda = problem.lambda.eval(x);
    if lambda > 0.0 {
        return Err(Error::Domain {
            what: "high-field coefficient",
            value: lambda,
            lo: f64::NEG_INFINITY,
            hi: 0.0,
        });
    }
    let integrand = |xi: f64| problem.flux.eval(x, xi) * maxwellian_unchecked(k_val, lambda, xi);
    let mut lhs = 0.0;
    for w in xi_grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a < k_val && k_val < b {
            // left limit of the indicator at the kink when Λ = 0
            let at_k = if lambda == 0.0 {
                problem.flux.eval(x, k_val)
            } else {
                integrand(k_val)
            };
            lhs += 0.5 * (k_val - a) * (integrand(a) + at_k);
        } else if b <= k_val {
            let fb = if lambda == 0.0 && b == k_val {
                problem.flux.eval(x, b)
            } else {
                integrand(b)
            };
            lhs += 0.5 * (b - a) * (integrand(a) + fb);
        }
    }
    let panels = ((k_val - lo) / 0.05).ceil().max(1.0) as usize;
    let b = |s: f64| exp_average(lambda, s, DEFAULT_LAGUERRE, |t| problem.flux.eval(x, t));
    let rhs = panel_integral(lo, k_val, panels, &b);
    Ok(FluxIdentityCheck {
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
    })
}

// ---------------------------------------------------------------------------
// Tabulation
// ---------------------------------------------------------------------------

/// Monotone piecewise-cubic Hermite slopes (Fritsch–Carlson).
fn pchip_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = ys
        .windows(2)
        .zip(&h)
        .map(|(w, h)| (w[1] - w[0]) / h)
        .collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            d[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s * d0 <= 0.0 {
            0.0
        } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

/// One tabulated function of `u` with monotone cubic interpolation.
#[derive(Debug, Clone, Serialize)]
struct Curve {
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl Curve {
    fn new(u_nodes: &[f64], values: Vec<f64>) -> Self {
        let slopes = pchip_slopes(u_nodes, &values);
        Self { values, slopes }
    }
}

/// Query options for building a [`CoefficientTable`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableOptions {
    pub n_laguerre: usize,
    /// ξ-panels per u-cell of the table.
    pub panels_per_cell: usize,
    /// Number of u-cells.
    pub n_u: usize,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self {
            n_laguerre: DEFAULT_LAGUERRE,
            panels_per_cell: 2,
            n_u: 400,
        }
    }
}

/// `B(x, u)`, `b(x, u)` and `C_k(x, u)` tabulated on the half-grid
/// `x_m = m Δx / 2`: even `m` are cell interfaces, odd `m` cell centres.
#[derive(Debug, Clone, Serialize)]
pub struct CoefficientTable {
    pub grid: XGrid,
    pub u_nodes: Vec<f64>,
    flux: Vec<Curve>,
    speed: Vec<Vec<f64>>,
    noise: Vec<Vec<Curve>>,
    pub n_laguerre: usize,
    pub tail_estimate: f64,
}

impl CoefficientTable {
    /// Tabulates the coefficients of `problem` for u in `[u_lo, u_hi]`.
    pub fn build(
        problem: &Problem,
        grid: XGrid,
        u_lo: f64,
        u_hi: f64,
        opts: TableOptions,
    ) -> Result<Self> {
        check_order(opts.n_laguerre)?;
        check_u(problem, u_lo)?;
        check_u(problem, u_hi)?;
        if !(u_lo < u_hi) || opts.n_u < 2 {
            return Err(Error::Config(format!("empty u-range [{u_lo}, {u_hi}]")));
        }
        let u_nodes = linspace(u_lo, u_hi, opts.n_u);
        let lead_panels = (((u_lo - problem.xi_min) / (u_nodes[1] - u_nodes[0])).ceil() as usize)
            .max(1)
            * opts.panels_per_cell;
        let nl = opts.n_laguerre;
        let positions: Vec<f64> = (0..2 * grid.n)
            .map(|m| m as f64 * 0.5 * grid.dx())
            .collect();

        let cumulative = |f: &(dyn Fn(f64) -> f64 + Sync)| -> Vec<f64> {
            let mut acc = panel_integral(problem.xi_min, u_lo, lead_panels, &f);
            let mut out = Vec::with_capacity(u_nodes.len());
            out.push(acc);
            for w in u_nodes.windows(2) {
                acc += panel_integral(w[0], w[1], opts.panels_per_cell, &f);
                out.push(acc);
            }
            out
        };

        type Row = (Curve, Vec<f64>, Vec<Curve>, f64);
        let row_at = |x: f64| -> Row {
            let lambda = problem.lambda.eval(x);
            let b = |s: f64| exp_average(lambda, s, nl, |t| problem.flux.eval(x, t));
            let flux_vals = cumulative(&b);
            let speed: Vec<f64> = u_nodes.iter().map(|&u| b(u)).collect();
            let mut tail = tail_estimate(problem, 64, &b);
            let noise = problem
                .noise
                .iter()
                .map(|g| {
                    let c = |s: f64| exp_average(lambda, s, nl, |t| g.dxi(x, t));
                    tail = tail.max(tail_estimate(problem, 64, &c));
                    Curve::new(&u_nodes, cumulative(&c))
                })
                .collect();
            (Curve::new(&u_nodes, flux_vals), speed, noise, tail)
        };
        let rows: Vec<Row> = if problem.x_homogeneous {
            let row = row_at(0.0);
            vec![row; positions.len()]
        } else {
            positions.par_iter().map(|&x| row_at(x)).collect()
        };

        let mut flux = Vec::with_capacity(rows.len());
        let mut speed = Vec::with_capacity(rows.len());
        let mut noise = Vec::with_capacity(rows.len());
        let mut tail_estimate = 0.0_f64;
        for (f, s, n, t) in rows {
            if f.values.iter().chain(&s).any(|v| !v.is_finite()) {
                return Err(Error::CoefficientEval {
                    field: "B".into(),
                    x: f64::NAN,
                    xi: f64::NAN,
                });
            }
            flux.push(f);
            speed.push(s);
            noise.push(n);
            tail_estimate = tail_estimate.max(t);
        }
        Ok(Self {
            grid,
            u_nodes,
            flux,
            speed,
            noise,
            n_laguerre: nl,
            tail_estimate,
        })
    }

    /// Tabulates caller-supplied `B`, `∂_u B` and `C_k`, bypassing quadrature.
    #[allow(clippy::type_complexity)]
    pub fn from_functions(
        grid: XGrid,
        u_lo: f64,
        u_hi: f64,
        n_u: usize,
        flux: impl Fn(f64, f64) -> f64 + Sync,
        speed: impl Fn(f64, f64) -> f64 + Sync,
        noise: &[&(dyn Fn(f64, f64) -> f64 + Sync)],
    ) -> Result<Self> {
        if !(u_lo < u_hi) || n_u < 2 {
            return Err(Error::Config(format!("empty u-range [{u_lo}, {u_hi}]")));
        }
        let u_nodes = linspace(u_lo, u_hi, n_u);
        let positions: Vec<f64> = (0..2 * grid.n)
            .map(|m| m as f64 * 0.5 * grid.dx())
            .collect();
        let mut f_rows = Vec::new();
        let mut s_rows = Vec::new();
        let mut n_rows = Vec::new();
        for &x in &positions {
            f_rows.push(Curve::new(
                &u_nodes,
                u_nodes.iter().map(|&u| flux(x, u)).collect(),
            ));
            s_rows.push(u_nodes.iter().map(|&u| speed(x, u)).collect());
            n_rows.push(
                noise
                    .iter()
                    .map(|c| Curve::new(&u_nodes, u_nodes.iter().map(|&u| c(x, u)).collect()))
                    .collect(),
            );
        }
        Ok(Self {
            grid,
            u_nodes,
            flux: f_rows,
            speed: s_rows,
            noise: n_rows,
            n_laguerre: 0,
            tail_estimate: 0.0,
        })
    }

    pub fn noise_dim(&self) -> usize {
        self.noise.first().map_or(0, Vec::len)
    }

    pub fn u_range(&self) -> (f64, f64) {
        (self.u_nodes[0], self.u_nodes[self.u_nodes.len() - 1])
    }

    /// Locates `u` in the table: cell index and local coordinate in `[0, 1]`.
    #[inline]
    fn locate(&self, u: f64) -> Result<(usize, f64)> {
        let (lo, hi) = self.u_range();
        let tol = 1e-12 * (hi - lo);
        if !(u >= lo - tol && u <= hi + tol) {
            return Err(Error::Domain {
                what: "macroscopic state u (outside coefficient table)",
                value: u,
                lo,
                hi,
            });
        }
        let n = self.u_nodes.len() - 1;
        let s = ((u - lo) / (hi - lo) * n as f64).clamp(0.0, n as f64);
        let j = (s.floor() as usize).min(n - 1);
        Ok((j, s - j as f64))
    }

    fn hermite(&self, curve: &Curve, u: f64) -> Result<f64> {
        let (j, t) = self.locate(u)?;
        let h = self.u_nodes[j + 1] - self.u_nodes[j];
        let (y0, y1) = (curve.values[j], curve.values[j + 1]);
        let (d0, d1) = (curve.slopes[j], curve.slopes[j + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        Ok((2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * d1)
    }

    /// `B(x_{i+½}, u)`.
    pub fn flux_at_interface(&self, i: usize, u: f64) -> Result<f64> {
        self.hermite(&self.flux[2 * ((i + 1) % self.grid.n)], u)
    }

    /// `B(x_i, u)`.
    pub fn flux_at_center(&self, i: usize, u: f64) -> Result<f64> {
        self.hermite(&self.flux[2 * i + 1], u)
    }

    /// `(B(x_{i+½}, k) - B(x_{i-½}, k)) / Δx`.
    pub fn flux_dx_at_center(&self, i: usize, k: f64) -> Result<f64> {
        let right = self.hermite(&self.flux[2 * ((i + 1) % self.grid.n)], k)?;
        let left = self.hermite(&self.flux[2 * i], k)?;
        Ok((right - left) / self.grid.dx())
    }

    /// `C_k(x_i, u)`.
    pub fn noise_at_center(&self, k: usize, i: usize, u: f64) -> Result<f64> {
        self.hermite(&self.noise[2 * i + 1][k], u)
    }

    /// `max |b(x_{i+½}, ·)|` over the value range spanned by `ua`, `ub`.
    pub fn speed_bound_at_interface(&self, i: usize, ua: f64, ub: f64) -> Result<f64> {
        let row = &self.speed[2 * ((i + 1) % self.grid.n)];
        let (lo, hi) = if ua <= ub { (ua, ub) } else { (ub, ua) };
        let (j0, t0) = self.locate(lo)?;
        let (j1, t1) = self.locate(hi)?;
        let at = |j: usize, t: f64| row[j] + t * (row[j + 1] - row[j]);
        let mut m = at(j0, t0).abs().max(at(j1, t1).abs());
        for v in &row[j0 + 1..=j1] {
            m = m.max(v.abs());
        }
        Ok(m)
    }

    /// `max |b|` over the whole table.
    pub fn max_speed(&self) -> f64 {
        self.speed
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Rows `(x, u, B, C_1.., tail)` at cell centres, for CSV dumps.
    pub fn center_rows(&self) -> Vec<Vec<f64>> {
        let mut rows = Vec::new();
        for i in 0..self.grid.n {
            let x = self.grid.center(i);
            for (j, &u) in self.u_nodes.iter().enumerate() {
                let mut r = vec![x, u, self.flux[2 * i + 1].values[j]];
                for c in &self.noise[2 * i + 1] {
                    r.push(c.values[j]);
                }
                r.push(self.tail_estimate);
                rows.push(r);
            }
        }
        rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{HighField, Preset, PresetParams};

    fn gaussian(lambda: f64) -> Problem {
        Problem::new(
            "g",
            Coefficient::new("a", |_, xi: f64| (-xi * xi).exp()),
            HighField::constant(lambda),
            vec![],
            (-6.0, 6.0),
        )
        .unwrap()
    }

    fn erf_antiderivative(u: f64) -> f64 {
        // √π/2 (1 + erf u), with erf from 2000-panel composite Simpson on [0, u]
        let n = 2000;
        let h = u / n as f64;
        let mut s = 1.0 + (-u * u).exp();
        for i in 1..n {
            let t = i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * (-t * t).exp();
        }
        std::f64::consts::PI.sqrt() / 2.0 + s * h / 3.0
    }

    #[test]
    fn b_examples() {
        let p = gaussian(0.0);
        assert_eq!(b_coeff(&p, 0.3, 0.7, 64).unwrap(), (-0.49_f64).exp());

        // 10^6-point trapezoid oracle in v on [0, 40]
        let p = gaussian(-1.0);
        let n = 1_000_000;
        let h = 40.0 / n as f64;
        let oracle: f64 = (0..=n)
            .map(|i| {
                let v = i as f64 * h;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                w * (-(v * v)).exp() * (-v).exp()
            })
            .sum::<f64>()
            * h;
        let got = b_coeff(&p, 0.0, 0.0, 64).unwrap();
        assert!((got - oracle).abs() < 1e-8, "{got} vs {oracle}");

        let p = Problem::new(
            "c",
            Coefficient::new("a", |_, _| 2.5),
            HighField::constant(-3.0),
            vec![],
            (-1.0, 1.0),
        )
        .unwrap();
        assert!((b_coeff(&p, 0.1, 0.2, 64).unwrap() - 2.5).abs() < 1e-11);
        assert!(b_coeff(&p, 0.1, 0.2, 2).is_err());
    }

    #[test]
    fn residual_examples() {
        let p = gaussian(-1.0);
        for xi in [-1.0, 0.0, 0.5, 2.0] {
            assert!(residual_b(&p, 0.0, xi, 1e-4).unwrap() <= 1e-6);
        }
        let p = gaussian(0.0);
        assert!(residual_b(&p, 0.0, 0.3, 1e-4).unwrap() < 1e-15);
    }

    #[test]
    fn c_examples() {
        let g = Coefficient::new("g", |_, xi: f64| xi.sin()).with_dxi(|_, xi: f64| xi.cos());
        let p = Problem::new(
            "s",
            Coefficient::zero("a"),
            HighField::constant(-1.0),
            vec![g.clone()],
            (-6.0, 6.0),
        )
        .unwrap();
        assert!((c_coeff(&p, 0, 0.0, 0.0, 64).unwrap() - 0.5).abs() < 1e-12);
        let p0 = Problem::new(
            "s",
            Coefficient::zero("a"),
            HighField::constant(0.0),
            vec![g],
            (-6.0, 6.0),
        )
        .unwrap();
        assert_eq!(c_coeff(&p0, 0, 0.0, 0.4, 64).unwrap(), 0.4_f64.cos());
        assert!(c_coeff(&p0, 1, 0.0, 0.4, 64).is_err());
    }

    #[test]
    fn antiderivatives_match_erf() {
        let p = gaussian(0.0);
        for u in [-1.5, 0.0, 0.4, 2.0] {
            let got = flux_b(&p, 0.0, u, 64, 400).unwrap();
            let want = erf_antiderivative(u) - erf_antiderivative(-6.0);
            assert!((got.value - want).abs() < 1e-8, "u={u}");
            assert!(got.tail_estimate < 1e-15);
        }
        assert_eq!(flux_b(&p, 0.0, -6.0, 64, 10).unwrap().value, 0.0);
        assert!(matches!(
            flux_b(&p, 0.0, 7.0, 64, 10),
            Err(Error::Domain { .. })
        ));

        let g = Coefficient::new("g", |_, xi: f64| {
            // antiderivative of e^{-ξ²}, vanishing at -∞
            erf_antiderivative(xi) - std::f64::consts::PI.sqrt()
        })
        .with_dxi(|_, xi: f64| (-xi * xi).exp());
        let p = Problem::new(
            "n",
            Coefficient::zero("a"),
            HighField::constant(0.0),
            vec![g],
            (-6.0, 6.0),
        )
        .unwrap();
        let c = noise_c(&p, 0, 0.2, 0.5, 64, 400).unwrap();
        assert!((c.value - erf_antiderivative(0.5)).abs() < 1e-8);
    }

    #[test]
    fn flux_identity_examples() {
        let grid = linspace(-6.0, 3.0, 9000);
        let p = gaussian(0.0);
        let r = check_flux_identity(&p, 0.0, 0.5, &grid).unwrap();
        assert!(r.gap <= 1e-6, "{r:?}");
        let p = gaussian(-1.0);
        let r = check_flux_identity(&p, 0.0, 0.0, &grid).unwrap();
        assert!(r.gap <= 1e-6, "{r:?}");
        let p = Problem::new(
            "z",
            Coefficient::zero("a"),
            HighField::constant(-1.0),
            vec![],
            (-6.0, 6.0),
        )
        .unwrap();
        let r = check_flux_identity(&p, 0.0, 1.0, &grid).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
    }

    #[test]
    fn table_matches_direct_quadrature() {
        let p = Problem::preset(Preset::P2, &PresetParams::default()).unwrap();
        let grid = XGrid::new(8).unwrap();
        let t = CoefficientTable::build(&p, grid, -3.0, 3.0, TableOptions::default()).unwrap();
        for i in [0, 3, 7] {
            for u in [-2.9, -0.31, 0.0, 1.7] {
                let direct = flux_b(&p, grid.center(i), u, 64, 800).unwrap().value;
                assert!((t.flux_at_center(i, u).unwrap() - direct).abs() < 1e-7);
                let direct = noise_c(&p, 0, grid.center(i), u, 64, 800).unwrap().value;
                assert!((t.noise_at_center(0, i, u).unwrap() - direct).abs() < 1e-7);
            }
        }
        assert!(t.flux_at_center(0, 3.5).is_err());
        let s = t.speed_bound_at_interface(2, -0.1, 0.1).unwrap();
        let direct = (0..=200)
            .map(|j| {
                b_coeff(&p, 0.375, -0.1 + 0.001 * j as f64, 64)
                    .unwrap()
                    .abs()
            })
            .fold(0.0, f64::max);
        assert!((s - direct).abs() < 1e-3, "{s} vs {direct}");
    }

    #[test]
    fn pchip_preserves_monotone_data() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = [0.0, 0.0, 1.0, 1.0, 1.0];
        let d = pchip_slopes(&xs, &ys);
        assert!(d.iter().all(|&v| v >= 0.0));
        assert_eq!(d[1], 0.0);
        assert_eq!(d[3], 0.0);
    }
}

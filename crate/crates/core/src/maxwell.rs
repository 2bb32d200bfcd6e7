//! The modified Maxwellian `M_k`, solution of `M + Λ ∂_ξ M = 1_{k>ξ}`, its
//! identities, sharp cell averages of equilibrium indicators, and the kinetic
//! defect density.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kinetic::KineticField;
use crate::problem::Problem;

fn check_lambda(lambda_x: f64) -> Result<()> {
    if lambda_x > 0.0 || lambda_x.is_nan() {
        return Err(Error::Domain {
            what: "high-field coefficient",
            value: lambda_x,
            lo: f64::NEG_INFINITY,
            hi: 0.0,
        });
    }
    Ok(())
}

/// Closed form of `M_k(ξ)` for `Λ = lambda_x ≤ 0`.
///
/// `Λ = 0` is the plain indicator `1_{k>ξ}`; otherwise
/// `1 - exp(-(k - ξ)/λ)` below `k` and 0 above, with `λ = -Λ`.
pub fn maxwellian(k: f64, lambda_x: f64, xi: f64) -> Result<f64> {
    check_lambda(lambda_x)?;
    Ok(maxwellian_unchecked(k, lambda_x, xi))
}

#[inline]
pub(crate) fn maxwellian_unchecked(k: f64, lambda_x: f64, xi: f64) -> f64 {
    if xi >= k {
        0.0
    } else if lambda_x == 0.0 {
        1.0
    } else {
        -(-(k - xi) / -lambda_x).exp_m1()
    }
}

/// `M_k` at a fixed `x`, with `Λ(x)` cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxwellianEval {
    pub k: f64,
    pub x: f64,
    pub lambda_x: f64,
}

impl MaxwellianEval {
    pub fn new(problem: &Problem, k: f64, x: f64) -> Result<Self> {
        let lambda_x = problem.lambda.eval(x);
        check_lambda(lambda_x)?;
        Ok(Self { k, x, lambda_x })
    }

    #[inline]
    pub fn eval(&self, xi: f64) -> f64 {
        maxwellian_unchecked(self.k, self.lambda_x, xi)
    }

    pub fn cell_average(&self, lo: f64, hi: f64) -> f64 {
        maxwellian_cell_average(self.k, self.lambda_x, lo, hi)
    }
}

/// Brute-force quadrature of `∫_0^∞ 1_{k > ξ - Λu} e^{-u} du`, truncated at
/// `u = 50`, by composite Simpson with `n_quad` panels on the part of
/// `[0, 50]` where the indicator is on.
pub fn maxwellian_oracle(k: f64, lambda_x: f64, xi: f64, n_quad: usize) -> f64 {
    const U_MAX: f64 = 50.0;
    let lam = -lambda_x;
    // indicator is on for u < (k - ξ)/λ
    let upper = if lam == 0.0 {
        if k > xi {
            U_MAX
        } else {
            0.0
        }
    } else {
        ((k - xi) / lam).clamp(0.0, U_MAX)
    };
    if upper <= 0.0 {
        return 0.0;
    }
    let n = n_quad.max(100) + n_quad.max(100) % 2;
    let h = upper / n as f64;
    let mut acc = 1.0 + (-upper).exp();
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * (-(i as f64) * h).exp();
    }
    acc * h / 3.0
}

/// Exact mean of `M_k` over `[lo, hi]`.
pub fn maxwellian_cell_average(k: f64, lambda_x: f64, lo: f64, hi: f64) -> f64 {
    if lambda_x == 0.0 {
        return indicator_cell_average(k, lo, hi);
    }
    let lam = -lambda_x;
    let b = hi.min(k);
    if b <= lo {
        return 0.0;
    }
    // ∫_lo^b (1 - e^{-(k-ξ)/λ}) dξ = (b - lo) - λ (e^{-(k-b)/λ} - e^{-(k-lo)/λ})
    let ea = (-(k - lo) / lam).exp();
    let eb = (-(k - b) / lam).exp();
    ((b - lo) - lam * (eb - ea)) / (hi - lo)
}

/// Exact mean of `1_{u>ξ}` over `[cell_lo, cell_hi]`.
#[inline]
pub fn indicator_cell_average(u: f64, cell_lo: f64, cell_hi: f64) -> f64 {
    if cell_hi <= u {
        1.0
    } else if cell_lo >= u {
        0.0
    } else {
        (u - cell_lo) / (cell_hi - cell_lo)
    }
}

fn uniform_step(xi_grid: &[f64]) -> Result<f64> {
    if xi_grid.len() < 3 {
        return Err(Error::Config(
            "velocity grid needs at least three nodes".into(),
        ));
    }
    let h = (xi_grid[xi_grid.len() - 1] - xi_grid[0]) / (xi_grid.len() - 1) as f64;
    if !(h > 0.0) {
        return Err(Error::Config("velocity grid must be increasing".into()));
    }
    Ok(h)
}

/// Largest `|M + Λ ∂_ξ M - 1_{k>ξ}|` over interior nodes, with a centred
/// difference for `∂_ξ M`. Nodes whose stencil straddles the kink are skipped.
pub fn maxwellian_residual(k: f64, lambda_x: f64, xi_grid: &[f64]) -> Result<f64> {
    check_lambda(lambda_x)?;
    uniform_step(xi_grid)?;
    let mut worst = 0.0_f64;
    for w in xi_grid.windows(3) {
        let (l, c, r) = (w[0], w[1], w[2]);
        if l <= k && k <= r {
            continue;
        }
        let m = maxwellian_unchecked(k, lambda_x, c);
        let dm =
            (maxwellian_unchecked(k, lambda_x, r) - maxwellian_unchecked(k, lambda_x, l)) / (r - l);
        let target = if k > c { 1.0 } else { 0.0 };
        worst = worst.max((m + lambda_x * dm - target).abs());
    }
    Ok(worst)
}

/// Trapezoid quadrature of `f` over the nodes, with every cell containing a
/// breakpoint split there. Pieces touching a breakpoint use one-sided values,
/// so jumps at the breakpoints are integrated exactly.
fn piecewise_trapezoid(xi_grid: &[f64], breaks: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    const INSET: f64 = 1e-12;
    let mut total = 0.0;
    for w in xi_grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut cuts: Vec<f64> = breaks
            .iter()
            .copied()
            .filter(|&p| a <= p && p <= b)
            .collect();
        if cuts.is_empty() {
            total += 0.5 * (b - a) * (f(a) + f(b));
            continue;
        }
        cuts.push(a);
        cuts.push(b);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        for piece in cuts.windows(2) {
            let (l, r) = (piece[0], piece[1]);
            let e = INSET * (r - l);
            total += 0.5 * (r - l) * (f(l + e) + f(r - e));
        }
    }
    total
}

fn check_coverage(xi_grid: &[f64], need_lo: f64, need_hi: f64) -> Result<()> {
    let lo = xi_grid[0];
    let hi = xi_grid[xi_grid.len() - 1];
    if lo > need_lo || hi < need_hi {
        return Err(Error::Coverage {
            need_lo,
            need_hi,
            lo,
            hi,
        });
    }
    Ok(())
}

/// `∫ |M_k - M_{k2}| dξ` by trapezoid quadrature; equals `|k - k2|`.
pub fn l1_distance(k: f64, k2: f64, lambda_x: f64, xi_grid: &[f64]) -> Result<f64> {
    check_lambda(lambda_x)?;
    uniform_step(xi_grid)?;
    let lam = -lambda_x;
    check_coverage(xi_grid, k.min(k2) - 40.0 * lam - 1.0, k.max(k2) + 1.0)?;
    Ok(piecewise_trapezoid(xi_grid, &[k, k2], |xi| {
        (maxwellian_unchecked(k, lambda_x, xi) - maxwellian_unchecked(k2, lambda_x, xi)).abs()
    }))
}

/// `∫ (M_k - 1_{0>ξ}) dξ` by trapezoid quadrature.
///
/// For constant `Λ` the exact value is `k + Λ`, not `k`: the smeared tail of
/// `M_k` below `k` carries mass `-Λ` less than the sharp indicator.
pub fn maxwellian_mass(k: f64, lambda_x: f64, xi_grid: &[f64]) -> Result<f64> {
    check_lambda(lambda_x)?;
    uniform_step(xi_grid)?;
    let lam = -lambda_x;
    check_coverage(xi_grid, k.min(0.0) - 40.0 * lam - 1.0, k.max(0.0) + 1.0)?;
    Ok(piecewise_trapezoid(xi_grid, &[k, 0.0], |xi| {
        maxwellian_unchecked(k, lambda_x, xi) - if 0.0 > xi { 1.0 } else { 0.0 }
    }))
}

/// Grid density of the kinetic defect measure, split into its two parts.
#[derive(Debug, Clone, Serialize)]
pub struct DefectField {
    pub t: f64,
    pub eps: f64,
    pub nx: usize,
    pub nxi: usize,
    /// `(1/ε) ∫_{ξ_min}^{ξ} (1_{u>ζ} - F) dζ`, row-major.
    pub relaxation: Vec<f64>,
    /// `-Λ(x) F`, row-major.
    pub field: Vec<f64>,
}

impl DefectField {
    pub fn total(&self, i: usize, j: usize) -> f64 {
        let idx = i * self.nxi + j;
        self.relaxation[idx] + self.field[idx]
    }

    pub fn min_total(&self) -> f64 {
        self.relaxation
            .iter()
            .zip(&self.field)
            .map(|(r, f)| r + f)
            .fold(f64::INFINITY, f64::min)
    }

    /// `Σ m Δx Δξ`.
    pub fn mass(&self, dx: f64, dxi: f64) -> f64 {
        self.relaxation
            .iter()
            .zip(&self.field)
            .map(|(r, f)| r + f)
            .sum::<f64>()
            * dx
            * dxi
    }
}

/// Defect density of `F` relative to its own local density.
pub fn defect_measure(f: &KineticField, problem: &Problem, eps: f64) -> DefectField {
    let u = f.local_density();
    defect_measure_with_density(f, &u.u, problem, eps)
}

/// Defect density with an explicit relaxation target density per x-cell.
pub fn defect_measure_with_density(
    f: &KineticField,
    u: &[f64],
    problem: &Problem,
    eps: f64,
) -> DefectField {
    let grid = f.xi_grid();
    let xg = f.x_grid();
    let nxi = grid.n;
    let dxi = grid.dxi();
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..xg.n)
        .into_par_iter()
        .map(|i| {
            let row = f.row(i);
            let lambda = problem.lambda.eval(xg.center(i));
            let mut relax = Vec::with_capacity(nxi);
            let mut field = Vec::with_capacity(nxi);
            let mut acc = 0.0;
            for (j, &fv) in row.iter().enumerate() {
                let (lo, hi) = grid.cell(j);
                acc += (indicator_cell_average(u[i], lo, hi) - fv) * dxi;
                relax.push(acc / eps);
                field.push(-lambda * fv);
            }
            (relax, field)
        })
        .collect();
    let mut relaxation = Vec::with_capacity(xg.n * nxi);
    let mut field = Vec::with_capacity(xg.n * nxi);
    for (r, fl) in rows {
        relaxation.extend(r);
        field.extend(fl);
    }
    DefectField {
        t: f.t,
        eps,
        nx: xg.n,
        nxi,
        relaxation,
        field,
    }
}

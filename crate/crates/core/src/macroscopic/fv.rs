use rayon::prelude::*;

use crate::coeffs::CoefficientTable;
use crate::error::{Error, Result};
use crate::macroscopic::MacroField;
use crate::wiener::WienerPath;

/// Rusanov interface fluxes `F_{i+½}` for the current state.
fn interface_fluxes(u: &MacroField, coeffs: &CoefficientTable, dt: f64) -> Result<Vec<f64>> {
    let n = u.grid.n;
    let dx = u.grid.dx();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let ul = u.u[i];
            let ur = u.u[(i + 1) % n];
            let fl = coeffs.flux_at_interface(i, ul)?;
            let fr = coeffs.flux_at_interface(i, ur)?;
            let s = coeffs.speed_bound_at_interface(i, ul, ur)?;
            if s * dt > dx * (1.0 + 1e-12) {
                return Err(Error::Cfl(format!(
                    "wave speed {s:.6} at interface {i} gives {:.6} > 1",
                    s * dt / dx
                )));
            }
            Ok(0.5 * (fl + fr) - 0.5 * s * (ur - ul))
        })
        .collect()
}

/// One conservative Rusanov step followed by an Euler–Maruyama noise update
/// `u_i += Σ_k C_k(x_i, u_i) ΔW_k` evaluated at the old state.
pub fn fv_step(
    u: &MacroField,
    coeffs: &CoefficientTable,
    dt: f64,
    dw: &[f64],
) -> Result<MacroField> {
    if coeffs.grid != u.grid {
        return Err(Error::Config(
            "coefficient table and field use different grids".into(),
        ));
    }
    if dw.len() != coeffs.noise_dim() {
        return Err(Error::Config(format!(
            "{} noise increments for {} noise components",
            dw.len(),
            coeffs.noise_dim()
        )));
    }
    let n = u.grid.n;
    let ratio = dt / u.grid.dx();
    let flux = interface_fluxes(u, coeffs, dt)?;
    let next: Result<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let left = flux[(i + n - 1) % n];
            let mut v = u.u[i] - ratio * (flux[i] - left);
            for (k, &w) in dw.iter().enumerate() {
                if w != 0.0 {
                    v += coeffs.noise_at_center(k, i, u.u[i])? * w;
                }
            }
            Ok(v)
        })
        .collect();
    Ok(MacroField {
        grid: u.grid,
        t: u.t + dt,
        u: next?,
    })
}

/// Time levels `u^0, u^1, ...` of a macroscopic run.
#[derive(Debug, Clone)]
pub struct MacroTrajectory {
    pub dt: f64,
    pub states: Vec<MacroField>,
}

impl MacroTrajectory {
    pub fn last(&self) -> &MacroField {
        self.states
            .last()
            .expect("trajectory holds the initial state")
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }
}

/// Number of steps of size `dt` in `[0, t_end]`, rejecting non-divisible pairs.
pub fn step_count(t_end: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !(t_end > 0.0) {
        return Err(Error::Config(format!(
            "need T > 0 and Δt > 0 (T = {t_end}, Δt = {dt})"
        )));
    }
    let n = (t_end / dt).round();
    if (n * dt - t_end).abs() > 1e-9 * t_end || n < 1.0 {
        return Err(Error::Config(format!(
            "Δt = {dt} does not divide T = {t_end}"
        )));
    }
    Ok(n as usize)
}

/// Iterates [`fv_step`] on the time grid of `path`, which must use step `dt`.
pub fn run_macro(
    coeffs: &CoefficientTable,
    u0: &MacroField,
    t_end: f64,
    dt: f64,
    path: &WienerPath,
) -> Result<MacroTrajectory> {
    let steps = step_count(t_end, dt)?;
    if path.n_steps() != steps || (path.t_end() - t_end).abs() > 1e-12 * t_end {
        return Err(Error::Config(format!(
            "path has {} steps on [0, {}], run needs {steps} on [0, {t_end}]",
            path.n_steps(),
            path.t_end()
        )));
    }
    if coeffs.max_speed() * dt > u0.grid.dx() * (1.0 + 1e-12) {
        return Err(Error::Cfl(format!(
            "max|b| Δt = {:.6} exceeds Δx = {:.6}",
            coeffs.max_speed() * dt,
            u0.grid.dx()
        )));
    }
    let mut states = Vec::with_capacity(steps + 1);
    let mut u = u0.clone();
    u.t = 0.0;
    states.push(u.clone());
    for n in 0..steps {
        let dw = path.increments(n)?;
        u = fv_step(&u, coeffs, dt, &dw)?;
        u.t = (n + 1) as f64 * dt;
        if !u.is_finite() {
            return Err(Error::NonFinite { step: n + 1 });
        }
        states.push(u.clone());
    }
    Ok(MacroTrajectory { dt, states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::XGrid;

    fn burgers(grid: XGrid) -> CoefficientTable {
        CoefficientTable::from_functions(grid, -2.0, 2.0, 800, |_, u| 0.5 * u * u, |_, u| u, &[])
            .unwrap()
    }

    #[test]
    fn riemann_shock_speed() {
        let grid = XGrid::new(400).unwrap();
        let t = burgers(grid);
        let u0 = MacroField::from_fn(grid, 0.0, |x| if x < 0.5 { 1.0 } else { 0.0 });
        let dt = 0.5 * grid.dx();
        let path = WienerPath::zero(0, 0.5, 400);
        let traj = run_macro(&t, &u0, 0.5, dt, &path).unwrap();
        let u = traj.last();
        // shock sits where u crosses 1/2 inside [0.6, 0.9]
        let i = (0..grid.n)
            .filter(|&i| grid.center(i) > 0.6 && grid.center(i) < 0.9)
            .find(|&i| u.u[i] < 0.5)
            .unwrap();
        let pos = grid.center(i) - 0.5 * grid.dx();
        assert!((pos - 0.75).abs() <= 2.0 * grid.dx(), "shock at {pos}");
    }

    #[test]
    fn zero_flux_leaves_state() {
        let grid = XGrid::new(16).unwrap();
        let t = CoefficientTable::from_functions(grid, -2.0, 2.0, 10, |_, _| 0.0, |_, _| 0.0, &[])
            .unwrap();
        let u0 = MacroField::from_fn(grid, 0.0, |x| x.sin());
        let u1 = fv_step(&u0, &t, 0.1, &[]).unwrap();
        assert_eq!(u0.u, u1.u);
    }

    #[test]
    fn constant_noise_adds_brownian_endpoint() {
        let grid = XGrid::new(8).unwrap();
        let c = 0.3;
        let noise = |_: f64, _: f64| c;
        let t = CoefficientTable::from_functions(
            grid,
            -20.0,
            20.0,
            10,
            |_, _| 0.0,
            |_, _| 0.0,
            &[&noise],
        )
        .unwrap();
        let u0 = MacroField::from_fn(grid, 0.0, |x| x);
        let path = WienerPath::sample(4, 1, 1.0, 50).unwrap();
        let traj = run_macro(&t, &u0, 1.0, 0.02, &path).unwrap();
        let w = path.nodes(0)[50];
        for (a, b) in traj.last().u.iter().zip(&u0.u) {
            assert!((a - (b + c * w)).abs() < 1e-12);
        }
    }

    #[test]
    fn conservation_and_maximum_principle() {
        let grid = XGrid::new(64).unwrap();
        let t = burgers(grid);
        let mut u = MacroField::from_fn(grid, 0.0, |x| {
            0.5 + 0.4 * (2.0 * std::f64::consts::PI * x).sin()
        });
        let m0 = u.mass();
        let (lo, hi) = (u.min(), u.max());
        for _ in 0..100 {
            let m = u.mass();
            u = fv_step(&u, &t, 0.01, &[]).unwrap();
            assert!((u.mass() - m).abs() < 1e-12);
            assert!(u.max() <= hi + 1e-12 && u.min() >= lo - 1e-12);
        }
        assert!((u.mass() - m0).abs() < 1e-11);
    }

    #[test]
    fn cfl_violation_is_reported() {
        let grid = XGrid::new(10).unwrap();
        let t = burgers(grid);
        let u0 = MacroField::constant(grid, 0.0, 1.5);
        let path = WienerPath::zero(0, 1.0, 5);
        assert!(matches!(
            run_macro(&t, &u0, 1.0, 0.2, &path),
            Err(Error::Cfl(_))
        ));
        assert!(matches!(fv_step(&u0, &t, 0.2, &[]), Err(Error::Cfl(_))));
    }

    #[test]
    fn rejects_misaligned_path() {
        let grid = XGrid::new(10).unwrap();
        let t = burgers(grid);
        let u0 = MacroField::constant(grid, 0.0, 0.1);
        let path = WienerPath::zero(0, 1.0, 7);
        assert!(matches!(
            run_macro(&t, &u0, 1.0, 0.1, &path),
            Err(Error::Config(_))
        ));
        assert!(step_count(1.0, 0.3).is_err());
    }
}

use hfbgk::grid::XiGrid;
use hfbgk::harness::converge::macro_table;
use hfbgk::harness::{converge_in_eps, macro_self_convergence, output, RunConfig};
use hfbgk::kinetic::{run_kinetic, KineticOptions};
use hfbgk::macroscopic::{run_macro, MacroField};
use hfbgk::maxwell::indicator_cell_average;
use hfbgk::problem::{validate, Preset, PresetParams, Problem};
use hfbgk::wiener::WienerPath;

fn preset(p: Preset) -> Problem {
    Problem::preset(p, &PresetParams::default()).unwrap()
}

#[test]
fn wiener_components_are_uncorrelated() {
    let n = 20_000;
    let t = 0.8;
    let prods: Vec<f64> = (0..n)
        .map(|s| {
            let p = WienerPath::sample(s, 2, t, 4).unwrap();
            p.nodes(0)[4] * p.nodes(1)[4]
        })
        .collect();
    let mean = prods.iter().sum::<f64>() / n as f64;
    // product of independent N(0, T) variables has standard deviation T
    let se = t / (n as f64).sqrt();
    assert!(mean.abs() < 5.0 * se, "covariance {mean} vs se {se}");
}

#[test]
fn wiener_paths_are_reproducible() {
    let a = WienerPath::sample(77, 3, 1.0, 32).unwrap();
    let b = WienerPath::sample(77, 3, 1.0, 32).unwrap();
    let c = WienerPath::sample(78, 3, 1.0, 32).unwrap();
    for k in 0..3 {
        assert_eq!(a.nodes(k), b.nodes(k));
        assert_ne!(a.nodes(k), c.nodes(k));
    }
}

#[test]
fn validation_is_deterministic() {
    for p in [Preset::P0, Preset::P1, Preset::P2, Preset::P3] {
        let a = validate(&preset(p), 40).unwrap();
        let b = validate(&preset(p), 40).unwrap();
        assert_eq!(a.checks.len(), b.checks.len());
        for (x, y) in a.checks.iter().zip(&b.checks) {
            assert_eq!(x.passed, y.passed);
            assert_eq!(x.value.to_bits(), y.value.to_bits());
        }
        assert_eq!(a.growth_constant.to_bits(), b.growth_constant.to_bits());
    }
}

#[test]
fn analytic_derivatives_match_differences() {
    let h = 1e-5;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-3);
    for p in [Preset::P0, Preset::P1, Preset::P2, Preset::P3] {
        let prob = preset(p);
        let coeffs = std::iter::once(&prob.flux).chain(prob.noise.iter());
        for c in coeffs {
            for x in [0.05, 0.3, 0.62, 0.9] {
                for xi in [-2.7, -1.1, -0.3, 0.4, 1.3, 1.9, 2.6] {
                    let fx = (c.eval(x + h, xi) - c.eval(x - h, xi)) / (2.0 * h);
                    let fxi = (c.eval(x, xi + h) - c.eval(x, xi - h)) / (2.0 * h);
                    assert!(
                        rel(c.dx(x, xi), fx) < 1e-5,
                        "{} d/dx at ({x}, {xi})",
                        c.name()
                    );
                    assert!(
                        rel(c.dxi(x, xi), fxi) < 1e-5,
                        "{} d/dxi at ({x}, {xi})",
                        c.name()
                    );
                }
            }
        }
    }
}

#[test]
fn fast_relaxation_stays_near_equilibrium() {
    // no noise, no field: F stays within one velocity cell of 1_{u>ξ}
    let p = preset(Preset::P0);
    let xg = hfbgk::grid::XGrid::new(32).unwrap();
    let vg = XiGrid::new(-3.0, 3.0, 120).unwrap();
    let u0 = MacroField::from_fn(xg, 0.0, |x| 0.3 * (2.0 * std::f64::consts::PI * x).sin());
    let (t_end, dt) = (0.1, 0.01);
    let path = WienerPath::zero(0, t_end, 10);
    let opts = KineticOptions {
        snapshot_stride: 1,
        ..KineticOptions::default()
    };
    let traj = run_kinetic(&p, 1e-4, &u0, vg, t_end, dt, &path, opts).unwrap();
    assert_eq!(traj.snapshots.len(), 10);
    for f in &traj.snapshots {
        for i in 0..xg.n {
            let u = f.density_of_row(i);
            let gap: f64 = f
                .row(i)
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    let (lo, hi) = vg.cell(j);
                    (v - indicator_cell_average(u, lo, hi)).abs()
                })
                .sum::<f64>()
                * vg.dxi();
            assert!(gap <= vg.dxi(), "row {i} at t = {}: {gap}", f.t);
        }
    }
}

fn burgers(nx: usize, dt: f64) -> RunConfig {
    RunConfig::from_toml_str(&format!(
        r#"
[problem]
preset = "P3"
xi_min = -1.0
xi_max = 2.0
u0 = "sine"
u0_mean = 0.5
u0_amp = 0.4
[grid]
nx = {nx}
nxi = 64
[time]
t_end = 0.25
dt = {dt}
"#
    ))
    .unwrap()
}

#[test]
fn burgers_converges_under_grid_doubling() {
    let errs: Vec<f64> = [128usize, 256]
        .iter()
        .map(|&nx| {
            let cfg = burgers(nx, 0.5 / nx as f64);
            let p = cfg.build_problem().unwrap();
            let u0 = cfg.initial_density().unwrap();
            macro_self_convergence(&cfg, &p, &u0, 4096).unwrap()
        })
        .collect();
    let order = (errs[0] / errs[1]).log2();
    assert!(order >= 0.7, "errors {errs:?}, order {order}");
}

#[test]
fn constant_state_is_stationary() {
    let cfg = burgers(64, 0.5 / 64.0);
    let p = cfg.build_problem().unwrap();
    let u0 = MacroField::constant(cfg.x_grid().unwrap(), 0.0, 0.37);
    let table = macro_table(&cfg, &p, &u0).unwrap();
    let path = WienerPath::zero(0, 0.25, 32);
    let traj = run_macro(&table, &u0, 0.25, 0.5 / 64.0, &path).unwrap();
    for s in &traj.states {
        assert!(s.u.iter().all(|v| (v - 0.37).abs() < 1e-14));
    }
}

fn small_converge(values: &str, seeds: &str) -> RunConfig {
    RunConfig::from_toml_str(&format!(
        r#"
[problem]
preset = "P1"
xi_min = -8.0
xi_max = 4.0
[grid]
nx = 16
nxi = 60
n_u = 100
[time]
t_end = 0.1
dt = 0.02
[noise]
seeds = {seeds}
[eps]
values = {values}
"#
    ))
    .unwrap()
}

#[test]
fn report_has_one_row_per_eps_and_seed() {
    let cfg = small_converge("[0.4, 0.2, 0.1]", "[1, 2]");
    let r = converge_in_eps(&cfg).unwrap();
    assert_eq!(r.rows.len(), 6);
    let d = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(output::write_report(d.path(), &r, false).unwrap()).unwrap();
    assert_eq!(text.lines().count(), 7);

    let single = converge_in_eps(&small_converge("[0.2]", "[3]")).unwrap();
    assert_eq!(single.rows.len(), 1);
}

#[test]
fn report_is_byte_identical_across_runs() {
    let cfg = small_converge("[0.4, 0.2]", "[4]");
    let bytes: Vec<Vec<u8>> = (0..2)
        .map(|_| {
            let d = tempfile::tempdir().unwrap();
            let r = converge_in_eps(&cfg).unwrap();
            std::fs::read(output::write_report(d.path(), &r, false).unwrap()).unwrap()
        })
        .collect();
    assert_eq!(bytes[0], bytes[1]);
}

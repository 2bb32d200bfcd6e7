use std::fs;
use std::path::{Path, PathBuf};

use csv::Writer;

use crate::coeffs::CoefficientTable;
use crate::error::Result;
use crate::harness::converge::ConvergenceReport;
use crate::harness::studies::{EntropyStudy, MaxwellianSuite, ValidationRow};
use crate::kinetic::{DefectSample, KineticField};
use crate::macroscopic::MacroField;

fn num(v: f64) -> String {
    format!("{v:.12e}")
}

fn writer(dir: &Path, name: &str) -> Result<(Writer<fs::File>, PathBuf)> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    Ok((Writer::from_path(&path)?, path))
}

/// `report.csv`: one row per `(ε, seed)`. The wall-clock column holds `-`
/// unless `record_wallclock` is set. Failed runs keep their row with NaN
/// entries; their messages go to `failures.csv`.
pub fn write_report(
    dir: &Path,
    report: &ConvergenceReport,
    record_wallclock: bool,
) -> Result<PathBuf> {
    let (mut w, path) = writer(dir, "report.csv")?;
    w.write_record([
        "eps",
        "seed",
        "l1_gap_raw",
        "l1_gap_shifted",
        "weakstar_max_gap",
        "defect_min",
        "wallclock_s",
    ])?;
    for r in &report.rows {
        let wall = if record_wallclock && r.wallclock_s.is_finite() {
            format!("{:.3}", r.wallclock_s)
        } else {
            "-".into()
        };
        w.write_record([
            num(r.eps),
            r.seed.to_string(),
            num(r.l1_gap_raw),
            num(r.l1_gap_shifted),
            num(r.weakstar_max_gap),
            num(r.defect_min),
            wall,
        ])?;
    }
    w.flush()?;
    let failed: Vec<_> = report.failures().collect();
    if !failed.is_empty() {
        let (mut w, _) = writer(dir, "failures.csv")?;
        w.write_record(["eps", "seed", "error"])?;
        for r in failed {
            w.write_record([
                num(r.eps),
                r.seed.to_string(),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
    }
    Ok(path)
}

/// `summary.csv`: aggregated L¹ gaps per convention with the mean L² gap
/// alongside; `converging` marks the converging convention.
pub fn write_summary(dir: &Path, report: &ConvergenceReport) -> Result<PathBuf> {
    let (mut w, path) = writer(dir, "summary.csv")?;
    w.write_record([
        "convention",
        "eps",
        "mean_gap",
        "std_err",
        "samples",
        "strictly_decreasing",
        "converging",
        "mean_l2_gap",
    ])?;
    for s in &report.summaries {
        let conv = report.converging == Some(s.convention);
        for (g, l2) in s.gaps.iter().zip(&s.l2_gaps) {
            w.write_record([
                s.convention.label().to_string(),
                num(g.eps),
                num(g.mean),
                num(g.std_err),
                g.samples.to_string(),
                s.strictly_decreasing.to_string(),
                conv.to_string(),
                num(l2.mean),
            ])?;
        }
    }
    w.flush()?;
    Ok(path)
}

/// `density.csv` with columns `t,x,u`.
pub fn write_density(dir: &Path, states: &[MacroField]) -> Result<PathBuf> {
    let (mut w, path) = writer(dir, "density.csv")?;
    w.write_record(["t", "x", "u"])?;
    for s in states {
        for (i, u) in s.u.iter().enumerate() {
            w.write_record([num(s.t), num(s.grid.center(i)), num(*u)])?;
        }
    }
    w.flush()?;
    Ok(path)
}

/// `defect.csv` with columns `t,defect_min,defect_mass`.
pub fn write_defects(dir: &Path, defects: &[DefectSample]) -> Result<PathBuf> {
    let (mut w, path) = writer(dir, "defect.csv")?;
    w.write_record(["t", "defect_min", "defect_mass"])?;
    for d in defects {
        w.write_record([num(d.t), num(d.min_total), num(d.mass)])?;
    }
    w.flush()?;
    Ok(path)
}

/// `entropy.csv` with the time, flux, source and noise terms as
/// `term1..term4` per `(seed, k)`, followed by
/// `entropy_noise.csv` with the noise-term mean and standard error per `k`.
pub fn write_entropy(dir: &Path, study: &EntropyStudy) -> Result<PathBuf> {
    let (mut w, path) = writer(dir, "entropy.csv")?;
    w.write_record(["seed", "k", "term1", "term2", "term3", "term4", "total"])?;
    for s in &study.stats {
        w.write_record([
            s.seed.to_string(),
            num(s.k),
            num(s.time_term),
            num(s.flux_term),
            num(s.source_term),
            num(s.noise_term),
            num(s.total),
        ])?;
    }
    w.flush()?;
    let (mut w, _) = writer(dir, "entropy_noise.csv")?;
    w.write_record(["k", "noise_mean", "noise_std_err"])?;
    for (k, m, se) in &study.noise_means {
        w.write_record([num(*k), num(*m), num(*se)])?;
    }
    w.flush()?;
    Ok(path)
}

/// `coeffs.csv` with columns `x,u,B_1,C_1..C_d,tail_estimate` at cell centres.
pub fn write_coeffs(dir: &Path, table: &CoefficientTable) -> Result<PathBuf> {
    let (mut w, path) = writer(dir, "coeffs.csv")?;
    let mut header = vec!["x".to_string(), "u".into(), "B_1".into()];
    for k in 0..table.noise_dim() {
        header.push(format!("C_{}", k + 1));
    }
    header.push("tail_estimate".into());
    w.write_record(&header)?;
    for r in table.center_rows() {
        w.write_record(r.iter().map(|v| num(*v)))?;
    }
    w.flush()?;
    Ok(path)
}

/// `maxwellian.csv` with columns `property,k,k2,lambda,computed,expected,abs_error`.
/// Pointwise rows name the velocity in the property column; `k2` is empty
/// where a check has a single level.
pub fn write_maxwellian_suite(dir: &Path, suite: &MaxwellianSuite) -> Result<PathBuf> {
    let (mut w, path) = writer(dir, "maxwellian.csv")?;
    w.write_record([
        "property",
        "k",
        "k2",
        "lambda",
        "computed",
        "expected",
        "abs_error",
    ])?;
    for s in &suite.oracle {
        w.write_record([
            format!("pointwise_xi={}", s.xi),
            num(s.k),
            String::new(),
            num(s.lambda),
            num(s.closed),
            num(s.oracle),
            num(s.abs_err),
        ])?;
    }
    for s in &suite.distances {
        w.write_record([
            "l1_distance".into(),
            num(s.k),
            num(s.k2),
            num(s.lambda),
            num(s.computed),
            num((s.k - s.k2).abs()),
            num(s.abs_err),
        ])?;
    }
    for s in &suite.flux_identity {
        w.write_record([
            format!("flux_identity_{}", s.preset),
            num(s.k),
            String::new(),
            String::new(),
            num(s.lhs),
            num(s.rhs),
            num(s.gap),
        ])?;
    }
    for s in &suite.residuals {
        w.write_record([
            "residual".into(),
            num(s.k),
            String::new(),
            num(s.lambda),
            num(s.residual),
            num(0.0),
            num(s.residual),
        ])?;
    }
    w.flush()?;
    Ok(path)
}

/// `validate.csv` with columns `check,value,tolerance,pass`.
pub fn write_validation(dir: &Path, rows: &[ValidationRow]) -> Result<PathBuf> {
    let (mut w, path) = writer(dir, "validate.csv")?;
    w.write_record(["check", "value", "tolerance", "pass"])?;
    for r in rows {
        w.write_record([
            r.check.clone(),
            num(r.value),
            num(r.tolerance),
            r.pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(path)
}

/// Writes `F_<step>.snap` files into `dir/snapshots`.
pub fn write_snapshots(dir: &Path, snapshots: &[KineticField], dt: f64) -> Result<Vec<PathBuf>> {
    let sub = dir.join("snapshots");
    fs::create_dir_all(&sub)?;
    snapshots
        .iter()
        .map(|f| {
            let step = (f.t / dt).round() as usize;
            let p = sub.join(format!("F_{step:06}.snap"));
            f.write_snapshot(&p)?;
            Ok(p)
        })
        .collect()
}

const PLOTS: &str = r#"# gnuplot script for the files in this directory
set datafile separator ","
set key autotitle columnhead
set terminal pngcairo size 900,600

if (system("test -f density.csv && echo 1") eq "1") {
    set output "density.png"
    set xlabel "x"; set ylabel "t"
    plot "density.csv" using 2:1:3 with image
}

if (system("test -f defect.csv && echo 1") eq "1") {
    set output "defect.png"
    set xlabel "t"; set ylabel "defect"
    plot "defect.csv" using 1:2 with lines, "" using 1:4 with lines
}

if (system("test -f report.csv && echo 1") eq "1") {
    set output "gaps.png"
    set logscale xy
    set xlabel "eps"; set ylabel "L1 gap"
    plot "report.csv" using 1:3 with points title "raw", "" using 1:4 with points title "shifted"
    unset logscale
}
"#;

pub fn write_plot_script(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let p = dir.join("plots.gp");
    fs::write(&p, PLOTS)?;
    Ok(p)
}

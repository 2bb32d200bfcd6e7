use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use hfbgk::harness::converge::{macro_table, refinement_factor};
use hfbgk::harness::{
    converge_in_eps, entropy_study, maxwellian_suite, output, validate_config, RunConfig,
};
use hfbgk::kinetic::{initial_density, run_kinetic};
use hfbgk::macroscopic::{run_macro, TestFunction};

#[derive(Parser)]
#[command(
    name = "hfbgk",
    version,
    about = "Stochastic high-field BGK solver and hydrodynamic-limit checks"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `[output] dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base seed (overrides `[noise] seed` and any seed list).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the configuration and write validate.csv.
    Validate,
    /// Single kinetic run: density.csv, defect.csv, optional snapshots.
    RunKinetic {
        #[arg(long)]
        eps: f64,
    },
    /// Single macroscopic run: density.csv.
    RunMacro,
    /// ε → 0 study: report.csv and summary.csv.
    Converge,
    /// Modified Maxwellian identities: maxwellian.csv.
    CheckMaxwellian {
        /// Number of random pointwise comparisons.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Kruzhkov statistic over realizations: entropy.csv.
    CheckEntropy {
        /// Comma-separated levels.
        #[arg(long, value_delimiter = ',', default_value = "0.5")]
        k: Vec<f64>,
        /// Test function preset: bump, wide, left or right.
        #[arg(long, default_value = "bump")]
        phi: String,
        #[arg(long)]
        realizations: Option<usize>,
    },
    /// Tabulated macroscopic coefficients: coeffs.csv.
    DumpCoeffs,
}

fn load(g: &Global) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => RunConfig::default(),
    };
    if let Some(o) = &g.out {
        cfg.output.dir = o.clone();
    }
    if let Some(s) = g.seed {
        cfg.noise.seed = s;
        cfg.noise.seeds = None;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report(path: &Path) {
    println!("wrote {}", path.display());
}

fn run(cli: Cli) -> Result<bool> {
    let mut cfg = load(&cli.global)?;
    let dir = cfg.output_dir().to_path_buf();
    match cli.command {
        Command::Validate => {
            let rows = validate_config(&cfg)?;
            for r in &rows {
                println!(
                    "{:<4} {:<32} {:>12.4e} (limit {:.1e})",
                    if r.pass { "ok" } else { "FAIL" },
                    r.check,
                    r.value,
                    r.tolerance
                );
            }
            report(&output::write_validation(&dir, &rows)?);
            Ok(rows.iter().all(|r| r.pass))
        }
        Command::RunKinetic { eps } => {
            let problem = cfg.build_problem()?;
            let u0 = cfg.initial_density()?;
            let factor = refinement_factor(
                cfg.time.dt,
                eps,
                cfg.eps.margin,
                problem.max_abs_lambda(256),
            );
            let path = cfg.base_path(&problem, cfg.noise.seed)?.refine(factor)?;
            let dt = cfg.time.dt / factor as f64;
            let mut opts = cfg.kinetic_options();
            opts.density_stride *= factor;
            opts.defect_stride *= factor;
            opts.snapshot_stride *= factor;
            let traj = run_kinetic(
                &problem,
                eps,
                &u0,
                cfg.xi_grid()?,
                cfg.time.t_end,
                dt,
                &path,
                opts,
            )?;
            println!(
                "{} steps of {dt:.3e}, {} feet outside the velocity interval",
                traj.steps, traj.exits.outside
            );
            report(&output::write_density(&dir, &traj.densities)?);
            if !traj.defects.is_empty() {
                report(&output::write_defects(&dir, &traj.defects)?);
            }
            let snaps = output::write_snapshots(&dir, &traj.snapshots, dt)?;
            if !snaps.is_empty() {
                println!("wrote {} snapshots", snaps.len());
            }
            report(&output::write_plot_script(&dir)?);
            Ok(true)
        }
        Command::RunMacro => {
            let problem = cfg.build_problem()?;
            let u0 = cfg.initial_density()?;
            let table = macro_table(&cfg, &problem, &u0)?;
            let start = initial_density(&problem, &u0, cfg.output.convention);
            let path = cfg.base_path(&problem, cfg.noise.seed)?;
            let traj = run_macro(&table, &start, cfg.time.t_end, cfg.time.dt, &path)?;
            let states: Vec<_> = traj
                .states
                .iter()
                .step_by(cfg.output.density_stride)
                .cloned()
                .collect();
            report(&output::write_density(&dir, &states)?);
            report(&output::write_plot_script(&dir)?);
            Ok(true)
        }
        Command::Converge => {
            let r = converge_in_eps(&cfg)?;
            for s in &r.summaries {
                let gaps: Vec<String> = s.gaps.iter().map(|g| format!("{:.4e}", g.mean)).collect();
                println!(
                    "{:<8} [{}] strictly decreasing: {}",
                    s.convention.label(),
                    gaps.join(", "),
                    s.strictly_decreasing
                );
            }
            match r.converging {
                Some(c) => println!("converging convention: {}", c.label()),
                None => println!("no convention gives a strictly decreasing gap sequence"),
            }
            report(&output::write_report(
                &dir,
                &r,
                cfg.output.record_wallclock,
            )?);
            report(&output::write_summary(&dir, &r)?);
            report(&output::write_plot_script(&dir)?);
            let failed = r.failures().count();
            if failed > 0 {
                eprintln!("{failed} run(s) failed; see failures.csv");
            }
            Ok(failed == 0)
        }
        Command::CheckMaxwellian { samples } => {
            let s = maxwellian_suite(cfg.noise.seed, samples)?;
            let checks = [
                ("pointwise vs quadrature", s.max_oracle_err(), 1e-8),
                ("L1 distance", s.max_distance_err(), 1e-6),
                ("flux identity", s.max_flux_gap(), 1e-6),
                ("defining equation", s.max_residual(), 1e-5),
            ];
            let mut ok = true;
            for (name, v, tol) in checks {
                ok &= v <= tol;
                println!(
                    "{:<4} {name:<24} max error {v:.3e} (limit {tol:.0e})",
                    if v <= tol { "ok" } else { "FAIL" }
                );
            }
            report(&output::write_maxwellian_suite(&dir, &s)?);
            Ok(ok)
        }
        Command::CheckEntropy {
            k,
            phi,
            realizations,
        } => {
            if let Some(m) = realizations {
                cfg.noise.realizations = m;
                cfg.noise.seeds = None;
            }
            let phi = TestFunction::preset(&phi, cfg.time.t_end)?;
            let study = entropy_study(&cfg, &k, &phi)?;
            for (k, m, se) in &study.noise_means {
                println!("k = {k}: noise term mean {m:.4e}, standard error {se:.4e}");
            }
            report(&output::write_entropy(&dir, &study)?);
            Ok(true)
        }
        Command::DumpCoeffs => {
            let problem = cfg.build_problem()?;
            let u0 = cfg.initial_density()?;
            let table = macro_table(&cfg, &problem, &u0)?;
            report(&output::write_coeffs(&dir, &table)?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn seed_flag_overrides_seed_list() {
        let cli = Cli::parse_from(["hfbgk", "--seed", "9", "validate"]);
        let cfg = load(&cli.global).unwrap();
        assert_eq!(cfg.seeds(), vec![9]);
    }

    #[test]
    fn entropy_levels_split_on_commas() {
        let cli = Cli::parse_from(["hfbgk", "check-entropy", "--k", "0.2,0.7", "--phi", "wide"]);
        match cli.command {
            Command::CheckEntropy { k, phi, .. } => {
                assert_eq!(k, vec![0.2, 0.7]);
                assert_eq!(phi, "wide");
            }
            _ => panic!("wrong subcommand"),
        }
    }
}

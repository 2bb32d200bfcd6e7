use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{XGrid, XiGrid};
use crate::kinetic::{DensityConvention, KineticOptions, Scheme};
use crate::macroscopic::{step_count, MacroField};
use crate::problem::{Preset, PresetParams, Problem};
use crate::wiener::WienerPath;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    pub preset: Preset,
    /// Only 1 is supported.
    pub dim_x: usize,
    pub xi_min: f64,
    pub xi_max: f64,
    #[serde(rename = "trunc_R")]
    pub trunc_r: f64,
    pub sigma: f64,
    pub lambda_const: Option<f64>,
    pub flux_const: f64,
    /// Initial density profile: `sine`, `riemann` or `constant`.
    pub u0: String,
    pub u0_mean: f64,
    pub u0_amp: f64,
}

impl Default for ProblemSection {
    fn default() -> Self {
        let p = PresetParams::default();
        Self {
            preset: Preset::P1,
            dim_x: 1,
            xi_min: p.xi_min,
            xi_max: p.xi_max,
            trunc_r: p.trunc_r,
            sigma: p.sigma,
            lambda_const: None,
            flux_const: p.flux_const,
            u0: "sine".into(),
            u0_mean: 0.5,
            u0_amp: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub nx: usize,
    pub nxi: usize,
    /// Velocity interval of the kinetic grid; defaults to the problem's.
    pub xi_min: Option<f64>,
    pub xi_max: Option<f64>,
    /// Headroom added on both sides of the initial density range for the
    /// macroscopic coefficient table.
    pub u_margin: f64,
    pub n_u: usize,
    pub n_laguerre: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            nx: 64,
            nxi: 128,
            xi_min: None,
            xi_max: None,
            u_margin: 1.0,
            n_u: 400,
            n_laguerre: crate::coeffs::DEFAULT_LAGUERRE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSection {
    pub t_end: f64,
    pub dt: f64,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self {
            t_end: 0.3,
            dt: 0.0075,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub seed: u64,
    /// Realizations use seeds `seed, seed + 1, ..`; ignored when `seeds` is set.
    pub realizations: usize,
    pub seeds: Option<Vec<u64>>,
    /// Number of Brownian components; must match the problem when given.
    pub d: Option<usize>,
    /// Path steps on `[0, T]`; must equal `T/Δt` when given.
    pub steps: Option<usize>,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            seed: 1,
            realizations: 1,
            seeds: None,
            d: None,
            steps: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpsSection {
    /// Strictly decreasing.
    pub values: Vec<f64>,
    pub scheme: Scheme,
    /// Velocity margin `c` in `Δt_ε = min(Δt, ε c / (4 max|Λ|))`.
    pub margin: f64,
}

impl Default for EpsSection {
    fn default() -> Self {
        Self {
            values: vec![0.4, 0.2, 0.1, 0.05],
            scheme: Scheme::ExactHighField,
            margin: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub density_stride: usize,
    pub defect_stride: usize,
    pub snapshot_stride: usize,
    /// Density convention for single kinetic runs.
    pub convention: DensityConvention,
    /// Writes measured run times into `report.csv`; off keeps the file
    /// reproducible byte for byte.
    pub record_wallclock: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            density_stride: 1,
            defect_stride: 1,
            snapshot_stride: 0,
            convention: DensityConvention::Raw,
            record_wallclock: false,
        }
    }
}

/// Experiment configuration, read from a TOML file with the sections
/// `[problem] [grid] [time] [noise] [eps] [output]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSection,
    pub grid: GridSection,
    pub time: TimeSection,
    pub noise: NoiseSection,
    pub eps: EpsSection,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.problem.dim_x != 1 {
            return Err(Error::Config(format!(
                "dim_x = {} is not supported (only 1)",
                self.problem.dim_x
            )));
        }
        if self.grid.nx == 0 || self.grid.nxi == 0 || self.grid.n_u < 2 {
            return Err(Error::Config("grid sizes must be positive".into()));
        }
        let steps = step_count(self.time.t_end, self.time.dt)?;
        if let Some(s) = self.noise.steps {
            if s != steps {
                return Err(Error::Config(format!(
                    "[noise] steps = {s} but T/Δt = {steps}"
                )));
            }
        }
        if self.eps.values.is_empty() {
            return Err(Error::Config("[eps] values is empty".into()));
        }
        if self.eps.values.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::Config("ε values must be positive".into()));
        }
        if self.eps.values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("ε values must be strictly decreasing".into()));
        }
        if !(self.eps.margin > 0.0) {
            return Err(Error::Config("[eps] margin must be positive".into()));
        }
        if self.output.density_stride == 0 {
            return Err(Error::Config(
                "[output] density_stride must be at least 1".into(),
            ));
        }
        let (lo, hi) = self.xi_bounds();
        XiGrid::new(lo, hi, self.grid.nxi)?;
        let p = self.build_problem()?;
        if let Some(d) = self.noise.d {
            if d != p.noise_dim() {
                return Err(Error::Config(format!(
                    "[noise] d = {d}, preset has {} noise fields",
                    p.noise_dim()
                )));
            }
        }
        let _ = self.initial_profile()?;
        Ok(())
    }

    pub fn preset_params(&self) -> PresetParams {
        PresetParams {
            flux_const: self.problem.flux_const,
            lambda_const: self.problem.lambda_const,
            sigma: self.problem.sigma,
            trunc_r: self.problem.trunc_r,
            xi_min: self.problem.xi_min,
            xi_max: self.problem.xi_max,
        }
    }

    pub fn build_problem(&self) -> Result<Problem> {
        Problem::preset(self.problem.preset, &self.preset_params())
    }

    pub fn xi_bounds(&self) -> (f64, f64) {
        (
            self.grid.xi_min.unwrap_or(self.problem.xi_min),
            self.grid.xi_max.unwrap_or(self.problem.xi_max),
        )
    }

    pub fn x_grid(&self) -> Result<XGrid> {
        XGrid::new(self.grid.nx)
    }

    pub fn xi_grid(&self) -> Result<XiGrid> {
        let (lo, hi) = self.xi_bounds();
        XiGrid::new(lo, hi, self.grid.nxi)
    }

    pub fn steps(&self) -> Result<usize> {
        step_count(self.time.t_end, self.time.dt)
    }

    fn initial_profile(&self) -> Result<impl Fn(f64) -> f64> {
        let (m, a) = (self.problem.u0_mean, self.problem.u0_amp);
        let kind = match self.problem.u0.as_str() {
            "sine" => 0,
            "riemann" => 1,
            "constant" => 2,
            other => {
                return Err(Error::Config(format!(
                    "unknown initial profile `{other}` (expected sine, riemann or constant)"
                )))
            }
        };
        Ok(move |x: f64| match kind {
            0 => m + a * (2.0 * std::f64::consts::PI * x).sin(),
            // u_L = m + a on (1/4, 3/4), m - a elsewhere
            1 => {
                if (0.25..0.75).contains(&x) {
                    m + a
                } else {
                    m - a
                }
            }
            _ => m,
        })
    }

    /// Initial density on the configured torus grid.
    pub fn initial_density(&self) -> Result<MacroField> {
        let f = self.initial_profile()?;
        Ok(MacroField::from_fn(self.x_grid()?, 0.0, f))
    }

    pub fn seeds(&self) -> Vec<u64> {
        match &self.noise.seeds {
            Some(s) => s.clone(),
            None => (0..self.noise.realizations.max(1) as u64)
                .map(|k| self.noise.seed + k)
                .collect(),
        }
    }

    /// Path on the configured time grid; the zero path for noise-free problems.
    pub fn base_path(&self, problem: &Problem, seed: u64) -> Result<WienerPath> {
        let steps = self.steps()?;
        if problem.is_noise_free() {
            Ok(WienerPath::zero(0, self.time.t_end, steps))
        } else {
            WienerPath::sample(seed, problem.noise_dim(), self.time.t_end, steps)
        }
    }

    /// Options for a single kinetic run.
    pub fn kinetic_options(&self) -> KineticOptions {
        KineticOptions {
            scheme: self.eps.scheme,
            convention: self.output.convention,
            density_stride: self.output.density_stride,
            defect_stride: self.output.defect_stride,
            snapshot_stride: self.output.snapshot_stride,
            xi_margin: self.eps.margin,
        }
    }

    pub fn output_dir(&self) -> &Path {
        &self.output.dir
    }
}

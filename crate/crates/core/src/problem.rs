//! Coefficient data of the kinetic model: flux velocity `a(x, ξ)`, high-field
//! coefficient `Λ(x)` and noise amplitudes `g_k(x, ξ)` on the one-dimensional
//! torus, together with admissibility checks and the smooth velocity cutoff.

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::legendre_integrate;

pub type ScalarFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type SpatialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Relative step for central differences when no analytic derivative is supplied.
pub const FD_STEP: f64 = 1e-6;

/// A scalar coefficient `c(x, ξ)` with optional analytic first derivatives.
#[derive(Clone)]
pub struct Coefficient {
    name: String,
    value: ScalarFn,
    d_x: Option<ScalarFn>,
    d_xi: Option<ScalarFn>,
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Coefficient")
            .field("name", &self.name)
            .field("analytic_dx", &self.d_x.is_some())
            .field("analytic_dxi", &self.d_xi.is_some())
            .finish()
    }
}

impl Coefficient {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            value: Arc::new(f),
            d_x: None,
            d_xi: None,
        }
    }

    pub fn zero(name: impl Into<String>) -> Self {
        Self::new(name, |_, _| 0.0)
            .with_dx(|_, _| 0.0)
            .with_dxi(|_, _| 0.0)
    }

    pub fn with_dx(mut self, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.d_x = Some(Arc::new(f));
        self
    }

    pub fn with_dxi(mut self, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.d_xi = Some(Arc::new(f));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn has_analytic_dx(&self) -> bool {
        self.d_x.is_some()
    }

    pub fn has_analytic_dxi(&self) -> bool {
        self.d_xi.is_some()
    }

    /// Unchecked evaluation, for hot loops whose inputs were validated.
    #[inline]
    pub fn eval(&self, x: f64, xi: f64) -> f64 {
        (self.value)(x, xi)
    }

    pub fn try_eval(&self, x: f64, xi: f64) -> Result<f64> {
        finite(&self.name, x, xi, self.eval(x, xi))
    }

    #[inline]
    pub fn dx(&self, x: f64, xi: f64) -> f64 {
        match &self.d_x {
            Some(d) => d(x, xi),
            None => {
                let h = FD_STEP * x.abs().max(1.0);
                (self.eval(x + h, xi) - self.eval(x - h, xi)) / (2.0 * h)
            }
        }
    }

    #[inline]
    pub fn dxi(&self, x: f64, xi: f64) -> f64 {
        match &self.d_xi {
            Some(d) => d(x, xi),
            None => {
                let h = FD_STEP * xi.abs().max(1.0);
                (self.eval(x, xi + h) - self.eval(x, xi - h)) / (2.0 * h)
            }
        }
    }

    /// `c · Θ_R`, with derivatives updated by the product rule.
    fn truncated(&self, r: f64) -> Self {
        let base = self.clone();
        let value = {
            let b = base.clone();
            move |x: f64, xi: f64| b.eval(x, xi) * cutoff_r(xi, r)
        };
        let mut out = Coefficient::new(format!("{}^R", base.name), value);
        if base.d_x.is_some() {
            let b = base.clone();
            out = out.with_dx(move |x, xi| b.dx(x, xi) * cutoff_r(xi, r));
        }
        if base.d_xi.is_some() {
            let b = base.clone();
            out = out.with_dxi(move |x, xi| {
                b.dxi(x, xi) * cutoff_r(xi, r) + b.eval(x, xi) * cutoff_r_derivative(xi, r)
            });
        }
        out
    }
}

/// The high-field coefficient `Λ(x)`.
#[derive(Clone)]
pub struct HighField {
    value: SpatialFn,
}

impl fmt::Debug for HighField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("HighField")
    }
}

impl HighField {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { value: Arc::new(f) }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.value)(x)
    }
}

fn finite(name: &str, x: f64, xi: f64, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::CoefficientEval {
            field: name.to_string(),
            x,
            xi,
        })
    }
}

/// Coefficient bundle on `T^1 × [ξ_min, ξ_max]`.
///
/// Immutable once built; every evaluation is a pure function of its inputs.
#[derive(Clone, Debug)]
pub struct Problem {
    pub name: String,
    pub flux: Coefficient,
    pub lambda: HighField,
    pub noise: Vec<Coefficient>,
    pub xi_min: f64,
    pub xi_max: f64,
    pub trunc_r: Option<f64>,
    /// Declared independence of every coefficient from `x`; lets tables share
    /// one row across the torus.
    pub x_homogeneous: bool,
}

impl Problem {
    pub fn new(
        name: impl Into<String>,
        flux: Coefficient,
        lambda: HighField,
        noise: Vec<Coefficient>,
        xi_domain: (f64, f64),
    ) -> Result<Self> {
        let (xi_min, xi_max) = xi_domain;
        if !(xi_min < xi_max) || !xi_min.is_finite() || !xi_max.is_finite() {
            return Err(Error::Config(format!(
                "velocity interval [{xi_min}, {xi_max}] is empty or unbounded"
            )));
        }
        Ok(Self {
            name: name.into(),
            flux,
            lambda,
            noise,
            xi_min,
            xi_max,
            trunc_r: None,
            x_homogeneous: false,
        })
    }

    /// Marks the coefficients as independent of `x`.
    pub fn x_homogeneous(mut self) -> Self {
        self.x_homogeneous = true;
        self
    }

    /// Spatial dimension of the torus. Only `N = 1` is implemented.
    pub fn dim_x(&self) -> usize {
        1
    }

    /// Number of Brownian components driving the noise.
    pub fn noise_dim(&self) -> usize {
        self.noise.len()
    }

    pub fn is_noise_free(&self) -> bool {
        self.noise.is_empty()
    }

    /// Largest `|Λ(x)|` over a uniform sample of the torus.
    pub fn max_abs_lambda(&self, samples: usize) -> f64 {
        (0..samples.max(1))
            .map(|i| self.lambda.eval(i as f64 / samples.max(1) as f64).abs())
            .fold(0.0, f64::max)
    }

    /// Multiplies `a` and every `g_k` by `Θ_R(ξ)`.
    pub fn truncate(&self, r: f64) -> Result<Problem> {
        if !(r > 0.0) {
            return Err(Error::Domain {
                what: "truncation radius R",
                value: r,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        Ok(Problem {
            name: self.name.clone(),
            flux: self.flux.truncated(r),
            lambda: self.lambda.clone(),
            noise: self.noise.iter().map(|g| g.truncated(r)).collect(),
            xi_min: self.xi_min,
            xi_max: self.xi_max,
            trunc_r: Some(self.trunc_r.map_or(r, |old| old.min(r))),
            x_homogeneous: self.x_homogeneous,
        })
    }

    /// `div_x a(x, ξ)`.
    pub fn eval_div_a(&self, x: f64, xi: f64) -> Result<f64> {
        self.flux.try_eval(x, xi)?;
        finite("div_x a", x, xi, self.flux.dx(x, xi))
    }

    /// `G²(x, ξ) = Σ_k g_k(x, ξ)²`.
    pub fn eval_g2(&self, x: f64, xi: f64) -> Result<f64> {
        let mut acc = 0.0;
        for g in &self.noise {
            let v = g.try_eval(x, xi)?;
            acc += v * v;
        }
        Ok(acc)
    }

    /// `∂_ξ G²(x, ξ) = 2 Σ_k g_k ∂_ξ g_k`.
    pub fn eval_dg2_dxi(&self, x: f64, xi: f64) -> Result<f64> {
        let mut acc = 0.0;
        for g in &self.noise {
            let v = g.try_eval(x, xi)?;
            let d = finite(g.name(), x, xi, g.dxi(x, xi))?;
            acc += 2.0 * v * d;
        }
        Ok(acc)
    }

    /// Unchecked `∂_ξ G²`, used inside the characteristic integrator.
    #[inline]
    pub(crate) fn dg2_dxi_unchecked(&self, x: f64, xi: f64) -> f64 {
        self.noise
            .iter()
            .map(|g| 2.0 * g.eval(x, xi) * g.dxi(x, xi))
            .sum()
    }

    /// Builds one of the shipped benchmark problems.
    pub fn preset(preset: Preset, params: &PresetParams) -> Result<Problem> {
        let c = params.flux_const;
        let lambda = params.lambda_const.unwrap_or(preset.default_lambda());
        let gaussian_flux = move || {
            Coefficient::new("a", move |_x, xi| c * (-xi * xi).exp())
                .with_dx(|_, _| 0.0)
                .with_dxi(move |_x, xi| -2.0 * xi * c * (-xi * xi).exp())
        };
        let domain = (params.xi_min, params.xi_max);
        let problem = match preset {
            Preset::P0 => Problem::new(
                "P0",
                gaussian_flux(),
                HighField::constant(lambda),
                vec![],
                domain,
            )?
            .x_homogeneous(),
            Preset::P1 => Problem::new(
                "P1",
                gaussian_flux(),
                HighField::constant(lambda),
                vec![],
                domain,
            )?
            .x_homogeneous(),
            Preset::P2 => {
                let sigma = params.sigma;
                let g = Coefficient::new("g_1", move |x, xi| {
                    sigma * xi.sin() * (1.0 + 0.5 * (2.0 * std::f64::consts::PI * x).cos())
                })
                .with_dx(move |x, xi| {
                    let tau = 2.0 * std::f64::consts::PI;
                    -sigma * xi.sin() * 0.5 * tau * (tau * x).sin()
                })
                .with_dxi(move |x, xi| {
                    sigma * xi.cos() * (1.0 + 0.5 * (2.0 * std::f64::consts::PI * x).cos())
                });
                Problem::new(
                    "P2",
                    gaussian_flux(),
                    HighField::constant(lambda),
                    vec![g],
                    domain,
                )?
            }
            Preset::P3 => {
                let r = params.trunc_r;
                let a = Coefficient::new("a", move |_x, xi| xi * cutoff_r(xi, r))
                    .with_dx(|_, _| 0.0)
                    .with_dxi(move |_x, xi| cutoff_r(xi, r) + xi * cutoff_r_derivative(xi, r));
                let mut p = Problem::new("P3", a, HighField::constant(lambda), vec![], domain)?
                    .x_homogeneous();
                p.trunc_r = Some(r);
                p
            }
        };
        // A positive Λ is still constructed; `validate` reports it.
        Ok(problem)
    }
}

/// Shipped benchmark problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    /// Free streaming, `a = c e^{-ξ²}`, `Λ = 0`, no noise.
    P0,
    /// High field, `a` as in P0, `Λ = -1`, no noise.
    P1,
    /// Noisy high field, `g_1 = σ sin ξ (1 + ½ cos 2πx)`.
    P2,
    /// Burgers-like, `a = ξ Θ_R(ξ)`.
    P3,
}

impl Preset {
    pub fn default_lambda(self) -> f64 {
        match self {
            Preset::P0 | Preset::P3 => 0.0,
            Preset::P1 | Preset::P2 => -1.0,
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "P0" => Ok(Preset::P0),
            "P1" => Ok(Preset::P1),
            "P2" => Ok(Preset::P2),
            "P3" => Ok(Preset::P3),
            other => Err(Error::Config(format!("unknown preset `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetParams {
    pub flux_const: f64,
    /// `None` selects the preset's own value.
    pub lambda_const: Option<f64>,
    pub sigma: f64,
    pub trunc_r: f64,
    pub xi_min: f64,
    pub xi_max: f64,
}

impl Default for PresetParams {
    fn default() -> Self {
        Self {
            flux_const: 1.0,
            lambda_const: None,
            sigma: 0.5,
            trunc_r: 4.0,
            xi_min: -6.0,
            xi_max: 6.0,
        }
    }
}

// ---------------------------------------------------------------------------
// Smooth cutoff Θ
// ---------------------------------------------------------------------------

fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 / (t * t - 1.0)).exp()
    }
}

const BUMP_ORDER: usize = 64;

fn bump_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| {
        // Same rule as the CDF halves, so that Θ(3/4) = 1/2 holds to rounding.
        2.0 * legendre_integrate(BUMP_ORDER, -1.0, 0.0, bump)
    })
}

/// CDF of the normalized bump `exp(1/(t²-1))` on `[-1, 1]`.
fn bump_cdf(tau: f64) -> f64 {
    if tau <= -1.0 {
        return 0.0;
    }
    if tau >= 1.0 {
        return 1.0;
    }
    let z = bump_mass();
    if tau <= 0.0 {
        legendre_integrate(BUMP_ORDER, -1.0, tau, bump) / z
    } else {
        1.0 - legendre_integrate(BUMP_ORDER, tau, 1.0, bump) / z
    }
}

/// `Θ(s)`: equal to 1 on `|s| ≤ 1/2`, 0 on `|s| ≥ 1`, and a monotone `C^∞`
/// bridge built from the integrated normalized bump in between.
pub fn cutoff(s: f64) -> f64 {
    let a = s.abs();
    if a <= 0.5 {
        1.0
    } else if a >= 1.0 {
        0.0
    } else {
        1.0 - bump_cdf(4.0 * a - 3.0)
    }
}

/// `Θ'(s)`.
pub fn cutoff_derivative(s: f64) -> f64 {
    let a = s.abs();
    if a <= 0.5 || a >= 1.0 {
        0.0
    } else {
        -4.0 * s.signum() * bump(4.0 * a - 3.0) / bump_mass()
    }
}

/// `Θ_R(ξ) = Θ(ξ / R)`.
#[inline]
pub fn cutoff_r(xi: f64, r: f64) -> f64 {
    cutoff(xi / r)
}

#[inline]
pub fn cutoff_r_derivative(xi: f64, r: f64) -> f64 {
    cutoff_derivative(xi / r) / r
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// Admissibility assumptions checked by [`validate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Assumption {
    LambdaNonpositive,
    DivergenceNonnegative,
    NoiseVanishesAtZero,
    NoiseGrowthBound,
    FluxMomentIntegrable,
    NoiseDerivativeMomentIntegrable,
}

impl Assumption {
    pub const ALL: [Assumption; 6] = [
        Assumption::LambdaNonpositive,
        Assumption::DivergenceNonnegative,
        Assumption::NoiseVanishesAtZero,
        Assumption::NoiseGrowthBound,
        Assumption::FluxMomentIntegrable,
        Assumption::NoiseDerivativeMomentIntegrable,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Assumption::LambdaNonpositive => "lambda_nonpositive",
            Assumption::DivergenceNonnegative => "div_x_a_nonnegative",
            Assumption::NoiseVanishesAtZero => "g_k(x,0)=0",
            Assumption::NoiseGrowthBound => "G2<=C(1+xi^2)",
            Assumption::FluxMomentIntegrable => "int|xi a|<inf",
            Assumption::NoiseDerivativeMomentIntegrable => "int|xi d_xi g|<inf",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DerivativeSource {
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub assumption: Assumption,
    pub passed: bool,
    /// Worst-case sample point `(x, ξ)`; `ξ` is absent for x-only checks.
    pub witness_x: f64,
    pub witness_xi: Option<f64>,
    /// Worst-case value of the checked quantity.
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
    pub growth_constant: f64,
    pub div_source: DerivativeSource,
    pub noise_dxi_source: DerivativeSource,
    pub samples: usize,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, a: Assumption) -> &CheckResult {
        self.checks
            .iter()
            .find(|c| c.assumption == a)
            .expect("every assumption is reported")
    }
}

/// Tolerance on sign checks of derivatives obtained by finite differences.
const FD_SIGN_TOL: f64 = 1e-8;

/// Checks every admissibility assumption on a `samples × samples` lattice of
/// `T^1 × [ξ_min, ξ_max]`. Violations are reported, never raised.
pub fn validate(problem: &Problem, samples: usize) -> Result<ValidationReport> {
    let n = samples.max(2);
    let xs: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
    let dxi = (problem.xi_max - problem.xi_min) / (n - 1) as f64;
    let xis: Vec<f64> = (0..n).map(|j| problem.xi_min + j as f64 * dxi).collect();

    let mut checks = Vec::with_capacity(Assumption::ALL.len());

    // Λ ≤ 0
    let mut worst = (f64::NEG_INFINITY, 0.0);
    for &x in &xs {
        let l = finite("lambda", x, f64::NAN, problem.lambda.eval(x))?;
        if l > worst.0 {
            worst = (l, x);
        }
    }
    checks.push(CheckResult {
        assumption: Assumption::LambdaNonpositive,
        passed: worst.0 <= 0.0,
        witness_x: worst.1,
        witness_xi: None,
        value: worst.0,
    });

    // div_x a ≥ 0
    let div_tol = if problem.flux.has_analytic_dx() {
        0.0
    } else {
        FD_SIGN_TOL
    };
    let mut worst = (f64::INFINITY, 0.0, 0.0);
    for &x in &xs {
        for &xi in &xis {
            let d = problem.eval_div_a(x, xi)?;
            if d < worst.0 {
                worst = (d, x, xi);
            }
        }
    }
    checks.push(CheckResult {
        assumption: Assumption::DivergenceNonnegative,
        passed: worst.0 >= -div_tol,
        witness_x: worst.1,
        witness_xi: Some(worst.2),
        value: worst.0,
    });

    // g_k(x, 0) = 0
    let mut worst = (0.0_f64, 0.0);
    for &x in &xs {
        for g in &problem.noise {
            let v = g.try_eval(x, 0.0)?.abs();
            if v > worst.0 {
                worst = (v, x);
            }
        }
    }
    checks.push(CheckResult {
        assumption: Assumption::NoiseVanishesAtZero,
        passed: worst.0 <= 1e-12,
        witness_x: worst.1,
        witness_xi: Some(0.0),
        value: worst.0,
    });

    // G² ≤ C (1 + ξ²): fit C on the lattice
    let mut worst = (0.0_f64, 0.0, 0.0);
    for &x in &xs {
        for &xi in &xis {
            let ratio = problem.eval_g2(x, xi)? / (1.0 + xi * xi);
            if ratio > worst.0 {
                worst = (ratio, x, xi);
            }
        }
    }
    let growth_constant = worst.0;
    checks.push(CheckResult {
        assumption: Assumption::NoiseGrowthBound,
        passed: growth_constant.is_finite(),
        witness_x: worst.1,
        witness_xi: Some(worst.2),
        value: growth_constant,
    });

    // ∫ |ξ a| dξ < ∞ on the truncated interval
    let mut worst = (0.0_f64, 0.0);
    for &x in &xs {
        let mut samples_row = Vec::with_capacity(n);
        for &xi in &xis {
            samples_row.push((xi * problem.flux.try_eval(x, xi)?).abs());
        }
        let v = crate::quadrature::trapezoid(&samples_row, dxi);
        if v > worst.0 {
            worst = (v, x);
        }
    }
    checks.push(CheckResult {
        assumption: Assumption::FluxMomentIntegrable,
        passed: worst.0.is_finite(),
        witness_x: worst.1,
        witness_xi: None,
        value: worst.0,
    });

    // ∫ |ξ ∂_ξ g_k| dξ < ∞
    let mut worst = (0.0_f64, 0.0);
    for &x in &xs {
        for g in &problem.noise {
            let mut row = Vec::with_capacity(n);
            for &xi in &xis {
                row.push((xi * finite(g.name(), x, xi, g.dxi(x, xi))?).abs());
            }
            let v = crate::quadrature::trapezoid(&row, dxi);
            if v > worst.0 {
                worst = (v, x);
            }
        }
    }
    checks.push(CheckResult {
        assumption: Assumption::NoiseDerivativeMomentIntegrable,
        passed: worst.0.is_finite(),
        witness_x: worst.1,
        witness_xi: None,
        value: worst.0,
    });

    let source = |analytic: bool| {
        if analytic {
            DerivativeSource::Analytic
        } else {
            DerivativeSource::FiniteDifference
        }
    };
    Ok(ValidationReport {
        checks,
        growth_constant,
        div_source: source(problem.flux.has_analytic_dx()),
        noise_dxi_source: source(problem.noise.iter().all(Coefficient::has_analytic_dxi)),
        samples: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn bump_flux() -> Coefficient {
        Coefficient::new("a", |_, xi: f64| (-xi * xi).exp())
    }

    fn simple(lambda: f64, flux: Coefficient, noise: Vec<Coefficient>) -> Problem {
        Problem::new("t", flux, HighField::constant(lambda), noise, (-4.0, 4.0)).unwrap()
    }

    #[test]
    fn constants_pass_every_check() {
        let p = simple(-1.0, bump_flux(), vec![Coefficient::zero("g")]);
        let r = validate(&p, 17).unwrap();
        assert_eq!(r.checks.len(), Assumption::ALL.len());
        for a in Assumption::ALL {
            assert_eq!(r.checks.iter().filter(|c| c.assumption == a).count(), 1);
        }
        assert!(r.all_passed(), "{r:?}");
    }

    #[test]
    fn positive_lambda_is_flagged() {
        let p = simple(0.1, bump_flux(), vec![]);
        let r = validate(&p, 9).unwrap();
        let c = r.check(Assumption::LambdaNonpositive);
        assert!(!c.passed);
        assert!((c.value - 0.1).abs() < 1e-15);
        assert!(r.check(Assumption::DivergenceNonnegative).passed);
    }

    #[test]
    fn negative_divergence_is_flagged_at_origin() {
        let flux = Coefficient::new("a", |x: f64, xi: f64| {
            -(2.0 * PI * x).sin() * (-xi * xi).exp()
        });
        let p = simple(-1.0, flux, vec![]);
        let r = validate(&p, 16).unwrap();
        let c = r.check(Assumption::DivergenceNonnegative);
        assert!(!c.passed);
        // div_x a = -2π cos(2πx) e^{-ξ²}: minimum -2π at x = 0, ξ = 0
        assert_eq!(c.witness_x, 0.0);
        assert!(c.witness_xi.unwrap().abs() < 0.3);
        let exact = -2.0 * PI * (-c.witness_xi.unwrap().powi(2)).exp();
        assert!((c.value - exact).abs() < 1e-6, "{} vs {exact}", c.value);
        assert_eq!(r.div_source, DerivativeSource::FiniteDifference);
    }

    #[test]
    fn noise_at_zero_violation_is_reported_not_raised() {
        let g = Coefficient::new("g", |_, xi: f64| 1.0 + xi);
        let p = simple(-1.0, bump_flux(), vec![g]);
        let r = validate(&p, 9).unwrap();
        assert!(!r.check(Assumption::NoiseVanishesAtZero).passed);
        assert!(r.growth_constant >= 1.0);
    }

    #[test]
    fn nan_coefficient_is_an_error() {
        let flux = Coefficient::new("a", |x: f64, _| if x > 0.55 { f64::NAN } else { 0.0 });
        let p = simple(-1.0, flux, vec![]);
        match validate(&p, 8) {
            Err(Error::CoefficientEval { field, .. }) => assert_eq!(field, "a"),
            other => panic!("expected coefficient error, got {other:?}"),
        }
    }

    #[test]
    fn validation_is_deterministic() {
        let p = Problem::preset(Preset::P2, &PresetParams::default()).unwrap();
        let a = format!("{:?}", validate(&p, 21).unwrap());
        let b = format!("{:?}", validate(&p, 21).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn all_presets_are_admissible() {
        for preset in [Preset::P0, Preset::P1, Preset::P2, Preset::P3] {
            let p = Problem::preset(preset, &PresetParams::default()).unwrap();
            let r = validate(&p, 33).unwrap();
            assert!(r.all_passed(), "{preset:?}: {r:?}");
        }
    }

    #[test]
    fn cutoff_plateaus_and_midpoint() {
        assert_eq!(cutoff(0.25), 1.0);
        assert_eq!(cutoff(-0.5), 1.0);
        assert_eq!(cutoff(2.0), 0.0);
        assert_eq!(cutoff(-1.0), 0.0);
        // the bridge is antisymmetric about s = 3/4
        assert!((cutoff(0.75) - 0.5).abs() < 1e-13);
        for s in [0.55, 0.6, 0.7, 0.8, 0.9, 0.97] {
            let sum = cutoff(s) + cutoff(1.5 - s);
            assert!((sum - 1.0).abs() < 1e-12, "s={s}");
        }
    }

    #[test]
    fn cutoff_matches_brute_force_bump_integral() {
        // Oracle: midpoint rule on the un-normalized bump with 2e5 cells.
        let n = 200_000;
        let h = 2.0 / n as f64;
        let mass: f64 = (0..n)
            .map(|i| bump(-1.0 + (i as f64 + 0.5) * h))
            .sum::<f64>()
            * h;
        for s in [0.6, 0.75, 0.8, 0.95] {
            let tau = 4.0 * s - 3.0;
            let m = ((tau + 1.0) / h).round() as usize;
            let part: f64 = (0..m)
                .map(|i| bump(-1.0 + (i as f64 + 0.5) * h))
                .sum::<f64>()
                * h;
            let oracle = 1.0 - part / mass;
            assert!(
                (cutoff(s) - oracle).abs() < 1e-8,
                "s={s}: {} vs {oracle}",
                cutoff(s)
            );
        }
    }

    #[test]
    fn cutoff_is_monotone_with_consistent_derivative() {
        let mut prev = 1.0;
        for i in 0..=400 {
            let s = 0.5 + 0.5 * i as f64 / 400.0;
            let v = cutoff(s);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
        for s in [0.55, 0.66, 0.75, 0.81, 0.93, -0.7] {
            let h = 1e-6;
            let fd = (cutoff(s + h) - cutoff(s - h)) / (2.0 * h);
            assert!((fd - cutoff_derivative(s)).abs() < 1e-6, "s={s}");
        }
    }

    #[test]
    fn truncation_masks_flux() {
        let p = simple(
            -1.0,
            bump_flux().with_dxi(|_, xi: f64| -2.0 * xi * (-xi * xi).exp()),
            vec![],
        );
        let r = 2.0;
        let t = p.truncate(r).unwrap();
        let xi = r / 4.0;
        assert_eq!(t.flux.eval(0.3, xi), p.flux.eval(0.3, xi));
        assert_eq!(t.flux.eval(0.3, 2.0 * r), 0.0);
        let xi = 0.75 * r;
        assert!((t.flux.eval(0.1, xi) - 0.5 * p.flux.eval(0.1, xi)).abs() < 1e-13);
        // product rule on ∂_ξ
        for xi in [-1.7, -1.2, 0.3, 1.1, 1.6] {
            let h = 1e-6;
            let fd = (t.flux.eval(0.0, xi + h) - t.flux.eval(0.0, xi - h)) / (2.0 * h);
            assert!((fd - t.flux.dxi(0.0, xi)).abs() < 1e-6);
        }
        assert!(p.truncate(0.0).is_err());
    }

    #[test]
    fn truncation_is_idempotent_on_inner_region() {
        let p = simple(0.0, bump_flux(), vec![]);
        let r = 1.5;
        let once = p.truncate(r).unwrap();
        let twice = once.truncate(2.0 * r).unwrap();
        for i in 0..=50 {
            let xi = -r / 2.0 + r * i as f64 / 50.0;
            assert_eq!(once.flux.eval(0.2, xi), twice.flux.eval(0.2, xi));
        }
    }

    #[test]
    fn noise_square_and_derivative() {
        let sigma = |x: f64| 1.0 + 0.5 * x;
        let g = Coefficient::new("g", move |x, xi| xi * sigma(x)).with_dxi(move |x, _| sigma(x));
        let p = simple(-1.0, bump_flux(), vec![g, Coefficient::zero("g2")]);
        let (x, xi) = (0.4, 1.3);
        assert!((p.eval_g2(x, xi).unwrap() - sigma(x).powi(2) * xi * xi).abs() < 1e-14);
        assert!((p.eval_dg2_dxi(x, xi).unwrap() - 2.0 * sigma(x).powi(2) * xi).abs() < 1e-14);

        let c = 0.7;
        let g = Coefficient::new("g", move |_, xi: f64| c * xi.sin());
        let p = simple(-1.0, bump_flux(), vec![g]);
        assert!(p.eval_dg2_dxi(0.3, 0.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn divergence_of_x_independent_flux_vanishes() {
        let p = simple(-1.0, bump_flux(), vec![]);
        assert_eq!(p.eval_div_a(0.37, 0.2).unwrap(), 0.0);
    }

    #[test]
    fn finite_differences_agree_with_analytic_derivatives() {
        let params = PresetParams::default();
        for preset in [Preset::P2, Preset::P3] {
            let p = Problem::preset(preset, &params).unwrap();
            let numeric_flux = {
                let f = p.flux.clone();
                Coefficient::new("a_fd", move |x, xi| f.eval(x, xi))
            };
            for &(x, xi) in &[(0.1, -1.3), (0.45, 0.7), (0.8, 2.2), (0.3, 2.9)] {
                let exact = p.flux.dxi(x, xi);
                let fd = numeric_flux.dxi(x, xi);
                assert!(
                    (fd - exact).abs() <= 1e-5 * exact.abs().max(1.0),
                    "{preset:?} {x} {xi}"
                );
                for g in &p.noise {
                    let gf = g.clone();
                    let numeric = Coefficient::new("g_fd", move |x, xi| gf.eval(x, xi));
                    let e = g.dx(x, xi);
                    assert!((numeric.dx(x, xi) - e).abs() <= 1e-5 * e.abs().max(1.0));
                }
            }
        }
    }
}

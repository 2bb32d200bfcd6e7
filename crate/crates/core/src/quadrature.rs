//! Gaussian quadrature rules and composite trapezoid helpers.
//!
//! Rules are computed once per order by Newton iteration on the three-term
//! recurrences and cached process-wide.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights of a quadrature rule.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

type Cache = Mutex<HashMap<usize, Arc<Rule>>>;

fn cached(cache: &'static OnceLock<Cache>, n: usize, build: fn(usize) -> Rule) -> Arc<Rule> {
    let map = cache.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = map.lock().expect("quadrature cache poisoned");
    guard.entry(n).or_insert_with(|| Arc::new(build(n))).clone()
}

/// Gauss–Laguerre rule for `∫_0^∞ f(v) e^{-v} dv`.
pub fn gauss_laguerre(n: usize) -> Arc<Rule> {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    cached(&CACHE, n, build_laguerre)
}

/// Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Arc<Rule> {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    cached(&CACHE, n, build_legendre)
}

/// Evaluates `e^{-x/2} L_n(x)` and `e^{-x/2} L_{n-1}(x)`.
///
/// The exponential scaling keeps the recurrence finite for the large nodes of
/// high-order rules; it does not change the Newton ratio `L_n / L_n'`.
fn scaled_laguerre(n: usize, x: f64) -> (f64, f64) {
    let scale = (-0.5 * x).exp();
    let mut p1 = scale;
    let mut p2 = 0.0;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = ((2.0 * jf - 1.0 - x) * p2 - (jf - 1.0) * p3) / jf;
    }
    (p1, p2)
}

fn build_laguerre(n: usize) -> Rule {
    assert!(n >= 1, "Gauss-Laguerre order must be positive");
    let nf = n as f64;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let mut z = 0.0_f64;
    for i in 0..n {
        z = match i {
            0 => 3.0 / (1.0 + 2.4 * nf),
            1 => z + 15.0 / (1.0 + 2.5 * nf),
            _ => {
                let ai = (i - 1) as f64;
                z + (1.0 + 2.55 * ai) / (1.9 * ai) * (z - nodes[i - 2])
            }
        };
        for _ in 0..100 {
            let (p1, p2) = scaled_laguerre(n, z);
            // x L_n'(x) = n (L_n - L_{n-1})
            let dp = nf * (p1 - p2) / z;
            let z1 = z;
            z = z1 - p1 / dp;
            if (z - z1).abs() <= 1e-15 * z.abs() {
                break;
            }
        }
        nodes[i] = z;
        // w_i = x_i / ((n+1)^2 L_{n+1}(x_i)^2), evaluated with the scaled polynomial.
        let (ln1, _) = scaled_laguerre(n + 1, z);
        let denom = (nf + 1.0) * (nf + 1.0) * ln1 * ln1;
        weights[i] = z * (-z).exp() / denom;
    }
    Rule { nodes, weights }
}

fn build_legendre(n: usize) -> Rule {
    assert!(n >= 1, "Gauss-Legendre order must be positive");
    let nf = n as f64;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Rule { nodes, weights }
}

/// Integrates `f` over `[a, b]` with an `n`-point Gauss–Legendre rule.
pub fn legendre_integrate(n: usize, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let rule = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&t, &w)| w * f(mid + half * t))
        .sum::<f64>()
        * half
}

/// Composite trapezoid rule on samples taken at uniform spacing `h`.
pub fn trapezoid(samples: &[f64], h: f64) -> f64 {
    match samples.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = samples[1..n - 1].iter().sum();
            h * (inner + 0.5 * (samples[0] + samples[n - 1]))
        }
    }
}

/// Composite trapezoid rule of `f` on `[a, b]` with `panels` panels.
pub fn trapezoid_fn(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut acc = 0.5 * (f(a) + f(b));
    for k in 1..panels {
        acc += f(a + k as f64 * h);
    }
    acc * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laguerre_integrates_moments() {
        for n in [4, 16, 64, 128, 256] {
            let rule = gauss_laguerre(n);
            let m0: f64 = rule.weights.iter().sum();
            let m1: f64 = rule
                .weights
                .iter()
                .zip(&rule.nodes)
                .map(|(w, x)| w * x)
                .sum();
            let m3: f64 = rule
                .weights
                .iter()
                .zip(&rule.nodes)
                .map(|(w, x)| w * x.powi(3))
                .sum();
            assert!((m0 - 1.0).abs() < 1e-11, "n={n} m0={m0}");
            assert!((m1 - 1.0).abs() < 1e-11, "n={n} m1={m1}");
            assert!((m3 - 6.0).abs() < 1e-9, "n={n} m3={m3}");
        }
    }

    #[test]
    fn laguerre_nodes_are_increasing_and_positive() {
        let rule = gauss_laguerre(64);
        assert!(rule.nodes[0] > 0.0);
        assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn laguerre_cosine_average() {
        // ∫_0^∞ cos(v) e^{-v} dv = 1/2
        let rule = gauss_laguerre(64);
        let v: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(x, w)| w * x.cos())
            .sum();
        assert!((v - 0.5).abs() < 1e-12, "{v}");
    }

    #[test]
    fn legendre_integrates_polynomials() {
        let v = legendre_integrate(8, 0.0, 2.0, |x| x.powi(5));
        assert!((v - 64.0 / 6.0).abs() < 1e-12);
        let rule = gauss_legendre(33);
        let s: f64 = rule.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn trapezoid_is_exact_on_linear() {
        let v = trapezoid_fn(-1.0, 3.0, 7, |x| 2.0 * x + 1.0);
        assert!((v - 12.0).abs() < 1e-12);
        assert_eq!(trapezoid(&[1.0], 0.1), 0.0);
    }
}

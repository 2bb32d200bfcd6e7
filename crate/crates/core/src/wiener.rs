//! Reproducible multi-component Brownian paths on a uniform grid.
//!
//! Every Gaussian draw is addressed by `(seed, component, step, level)`, so a
//! path is a pure function of its seed and grid. Refinement inserts
//! Brownian-bridge midpoints and keeps every existing node bit for bit, which
//! lets runs at different time steps share one underlying path.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A sampled path `W(t) ∈ R^K` on `t_j = j T / n`, with `W(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerPath {
    seed: u64,
    t_end: f64,
    n_steps: usize,
    /// Refinement tag folded into the draw address of newly inserted nodes.
    level: u64,
    /// `values[k][j] = W_k(t_j)`.
    values: Vec<Vec<f64>>,
}

/// Gaussian source addressed by `(seed, stream, index)`.
struct Draws {
    rng: ChaCha8Rng,
}

impl Draws {
    fn new(seed: u64, component: usize, level: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(((level & 0xffff_ffff) << 32) | (component as u64 & 0xffff_ffff));
        Self { rng }
    }

    /// Standard normal for the given index (Box–Muller, first branch).
    fn normal(&mut self, index: u64) -> f64 {
        // two u64 draws occupy four 32-bit words
        self.rng.set_word_pos(index as u128 * 4);
        let u1 = ((self.rng.next_u64() >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64);
        let u2 = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Level tag reserved for non-dyadic bridge insertion with the given factor.
fn general_level(parent: u64, factor: usize) -> u64 {
    0x8000_0000 | ((parent & 0x7fff) << 16) | (factor as u64 & 0xffff)
}

impl WienerPath {
    /// Samples `components` independent Brownian motions on `[0, t_end]`
    /// with `n_steps` uniform steps.
    pub fn sample(seed: u64, components: usize, t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t_end > 0.0) || n_steps == 0 {
            return Err(Error::Config(format!(
                "path needs a positive horizon and at least one step (T = {t_end}, n = {n_steps})"
            )));
        }
        let sd = (t_end / n_steps as f64).sqrt();
        let values = (0..components)
            .map(|k| {
                let mut draws = Draws::new(seed, k, 0);
                let mut w = Vec::with_capacity(n_steps + 1);
                w.push(0.0);
                let mut acc = 0.0;
                for j in 0..n_steps {
                    acc += sd * draws.normal(j as u64);
                    w.push(acc);
                }
                w
            })
            .collect();
        Ok(Self {
            seed,
            t_end,
            n_steps,
            level: 0,
            values,
        })
    }

    /// Path that is identically zero, for noise-free problems.
    pub fn zero(components: usize, t_end: f64, n_steps: usize) -> Self {
        Self {
            seed: 0,
            t_end,
            n_steps,
            level: 0,
            values: vec![vec![0.0; n_steps + 1]; components],
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn components(&self) -> usize {
        self.values.len()
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    /// Node values `W_k(t_j)` for `j = 0..=n`.
    pub fn nodes(&self, component: usize) -> &[f64] {
        &self.values[component]
    }

    /// Refines every step into `factor` substeps by Brownian-bridge insertion.
    ///
    /// Powers of two are refined by repeated halving, so
    /// `refine(refine(p, 2), 2) == refine(p, 4)`. Other factors insert the
    /// interior points of each step sequentially.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::Config("refinement factor must be positive".into()));
        }
        let mut out = self.clone();
        let mut f = factor;
        while f % 2 == 0 {
            out = out.halve();
            f /= 2;
        }
        if f > 1 {
            out = out.insert_uniform(f);
        }
        Ok(out)
    }

    fn halve(&self) -> Self {
        let level = self.level + 1;
        let half_sd = (self.dt() / 4.0).sqrt();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, w)| {
                let mut draws = Draws::new(self.seed, k, level);
                let mut out = Vec::with_capacity(2 * self.n_steps + 1);
                for j in 0..self.n_steps {
                    out.push(w[j]);
                    out.push(0.5 * (w[j] + w[j + 1]) + half_sd * draws.normal(j as u64));
                }
                out.push(w[self.n_steps]);
                out
            })
            .collect();
        Self {
            seed: self.seed,
            t_end: self.t_end,
            n_steps: 2 * self.n_steps,
            level,
            values,
        }
    }

    fn insert_uniform(&self, m: usize) -> Self {
        let level = general_level(self.level, m);
        let h = self.dt() / m as f64;
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, w)| {
                let mut draws = Draws::new(self.seed, k, level);
                let mut out = Vec::with_capacity(m * self.n_steps + 1);
                for j in 0..self.n_steps {
                    let right = w[j + 1];
                    let mut left = w[j];
                    out.push(left);
                    for i in 1..m {
                        // bridge from the previous inserted point to the right node
                        let remaining = (m - i + 1) as f64 * h;
                        let mean = left + (h / remaining) * (right - left);
                        let var = h * (remaining - h) / remaining;
                        left = mean + var.sqrt() * draws.normal((j * m + i) as u64);
                        out.push(left);
                    }
                }
                out.push(w[self.n_steps]);
                out
            })
            .collect();
        Self {
            seed: self.seed,
            t_end: self.t_end,
            n_steps: m * self.n_steps,
            level,
            values,
        }
    }

    /// `ΔW_k` over step `step`.
    pub fn increment(&self, component: usize, step: usize) -> Result<f64> {
        if component >= self.components() || step >= self.n_steps {
            return Err(Error::Range(format!(
                "increment ({component}, {step}) outside {} components x {} steps",
                self.components(),
                self.n_steps
            )));
        }
        let w = &self.values[component];
        Ok(w[step + 1] - w[step])
    }

    /// All components of `ΔW` over step `step`.
    pub fn increments(&self, step: usize) -> Result<Vec<f64>> {
        (0..self.components())
            .map(|k| self.increment(k, step))
            .collect()
    }

    /// `W(t)` by linear interpolation between grid nodes.
    pub fn evaluate(&self, t: f64) -> Result<Vec<f64>> {
        let tol = 1e-12 * self.t_end;
        if !(t >= -tol && t <= self.t_end + tol) {
            return Err(Error::Range(format!("t = {t} outside [0, {}]", self.t_end)));
        }
        let s = (t.clamp(0.0, self.t_end) / self.dt()).min(self.n_steps as f64);
        let j = (s.floor() as usize).min(self.n_steps - 1);
        let theta = s - j as f64;
        Ok(self
            .values
            .iter()
            .map(|w| w[j] + theta * (w[j + 1] - w[j]))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starts_at_zero_and_is_reproducible() {
        let a = WienerPath::sample(7, 3, 1.0, 64).unwrap();
        let b = WienerPath::sample(7, 3, 1.0, 64).unwrap();
        assert_eq!(a, b);
        for k in 0..3 {
            assert_eq!(a.nodes(k)[0], 0.0);
        }
        let c = WienerPath::sample(8, 3, 1.0, 64).unwrap();
        assert_ne!(a.nodes(0), c.nodes(0));
        assert_ne!(a.nodes(0), a.nodes(1));
    }

    #[test]
    fn refinement_keeps_coarse_nodes_exactly() {
        let p = WienerPath::sample(3, 2, 0.5, 10).unwrap();
        for factor in [2, 3, 4, 6, 8] {
            let r = p.refine(factor).unwrap();
            assert_eq!(r.n_steps(), 10 * factor);
            for k in 0..2 {
                for j in 0..=10 {
                    assert_eq!(r.nodes(k)[j * factor].to_bits(), p.nodes(k)[j].to_bits());
                }
            }
        }
    }

    #[test]
    fn dyadic_refinement_nests() {
        let p = WienerPath::sample(11, 1, 1.0, 16).unwrap();
        let twice = p.refine(2).unwrap().refine(2).unwrap();
        let once = p.refine(4).unwrap();
        assert_eq!(twice, once);
    }

    #[test]
    fn interpolation_hits_nodes_and_rejects_outside() {
        let p = WienerPath::sample(5, 2, 2.0, 8).unwrap();
        let v = p.evaluate(0.875).unwrap();
        let w = p.nodes(1);
        assert!((v[1] - 0.5 * (w[3] + w[4])).abs() < 1e-13);
        assert_eq!(p.evaluate(2.0).unwrap()[0], p.nodes(0)[8]);
        assert!(matches!(p.evaluate(2.5), Err(Error::Range(_))));
        assert!(matches!(p.increment(2, 0), Err(Error::Range(_))));
        assert!(matches!(p.increment(0, 8), Err(Error::Range(_))));
    }

    #[test]
    fn increments_sum_to_endpoint() {
        let p = WienerPath::sample(1, 1, 1.0, 100).unwrap();
        let s: f64 = (0..100).map(|j| p.increment(0, j).unwrap()).sum();
        assert!((s - p.nodes(0)[100]).abs() < 1e-12);
    }

    #[test]
    fn zero_path_has_zero_increments() {
        let p = WienerPath::zero(2, 1.0, 4);
        assert_eq!(p.increments(3).unwrap(), vec![0.0, 0.0]);
    }
}

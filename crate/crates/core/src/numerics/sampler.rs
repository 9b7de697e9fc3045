use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};

/// Counter-based deterministic random source.
///
/// `seed` selects the key and `counter` the stream, so independent consumers can take
/// `with_counter(seed, k)` for distinct `k` and never overlap.
#[derive(Debug, Clone)]
pub struct SeededSampler {
    seed: u64,
    counter: u64,
    rng: ChaCha8Rng,
}

impl SeededSampler {
    pub fn new(seed: u64) -> Self {
        Self::with_counter(seed, 0)
    }

    pub fn with_counter(seed: u64, counter: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(counter);
        Self { seed, counter, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// A fresh sampler on stream `counter` of the same seed.
    pub fn split(&self, counter: u64) -> Self {
        Self::with_counter(self.seed, counter)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on the open interval (0, 1).
    pub fn open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0);
        ((self.open01() * n as f64) as usize).min(n - 1)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.open01()
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Gamma variate with unit scale.
    pub fn gamma(&mut self, shape: f64) -> Result<f64> {
        let g = Gamma::new(shape, 1.0)
            .map_err(|e| Error::domain(format!("gamma shape {shape}: {e}")))?;
        Ok(g.sample(&mut self.rng))
    }
}

/// `count` draws from the Dirichlet distribution with parameters `alphas` (all coordinates).
pub fn dirichlet_sample(
    alphas: &[f64],
    count: usize,
    sampler: &mut SeededSampler,
) -> Result<Vec<Vec<f64>>> {
    if alphas.len() < 2 {
        return Err(Error::domain(
            "Dirichlet sampling needs at least 2 parameters",
        ));
    }
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut point = alphas
            .iter()
            .map(|&a| sampler.gamma(a))
            .collect::<Result<Vec<f64>>>()?;
        let total: f64 = point.iter().sum();
        if !(total > 0.0) {
            // all shapes tiny and every draw underflowed; redraw-free fallback
            return Err(Error::domain("Dirichlet draw underflowed"));
        }
        for v in &mut point {
            *v /= total;
        }
        out.push(point);
    }
    Ok(out)
}

/// `count` points drawn uniformly from the open `n`-simplex (all `n` coordinates returned).
///
/// Normalized i.i.d. exponentials are uniform on the simplex.
pub fn simplex_sample(
    n: usize,
    count: usize,
    sampler: &mut SeededSampler,
) -> Result<Vec<Vec<f64>>> {
    if n < 2 {
        return Err(Error::domain(format!(
            "simplex dimension must be >= 2, got {n}"
        )));
    }
    if count == 0 {
        return Err(Error::domain("simplex_sample needs count >= 1"));
    }
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut point: Vec<f64> = (0..n).map(|_| -sampler.open01().ln()).collect();
        let total: f64 = point.iter().sum();
        for v in &mut point {
            *v /= total;
        }
        out.push(point);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_sum_to_one() {
        let pts = simplex_sample(2, 3, &mut SeededSampler::new(7)).unwrap();
        assert_eq!(pts.len(), 3);
        for p in &pts {
            assert!(p[0] > 0.0 && p[0] < 1.0);
            assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = simplex_sample(2, 5, &mut SeededSampler::new(7)).unwrap();
        let b = simplex_sample(2, 5, &mut SeededSampler::new(7)).unwrap();
        assert_eq!(a, b);
        let c = simplex_sample(2, 5, &mut SeededSampler::new(8)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn streams_differ() {
        let base = SeededSampler::new(3);
        let mut s0 = base.split(0);
        let mut s1 = base.split(1);
        assert_ne!(s0.next_u64(), s1.next_u64());
        assert_eq!(base.split(1).counter(), 1);
    }

    #[test]
    fn uniform_mean_on_3_simplex() {
        let pts = simplex_sample(3, 10_000, &mut SeededSampler::new(1)).unwrap();
        for k in 0..3 {
            let mean = pts.iter().map(|p| p[k]).sum::<f64>() / pts.len() as f64;
            assert!((mean - 1.0 / 3.0).abs() < 0.02, "coord {k}: {mean}");
        }
    }

    #[test]
    fn dirichlet_means() {
        let alphas = [2.0, 3.0, 4.0];
        let pts = dirichlet_sample(&alphas, 20_000, &mut SeededSampler::new(1)).unwrap();
        for (k, a) in alphas.iter().enumerate() {
            let mean = pts.iter().map(|p| p[k]).sum::<f64>() / pts.len() as f64;
            assert!((mean - a / 9.0).abs() < 0.01, "coord {k}: {mean}");
        }
        assert!(dirichlet_sample(&[1.0], 3, &mut SeededSampler::new(1)).is_err());
        assert!(dirichlet_sample(&[1.0, 0.0], 3, &mut SeededSampler::new(1)).is_err());
    }

    #[test]
    fn normal_moments() {
        let mut s = SeededSampler::new(2);
        let xs: Vec<f64> = (0..20_000).map(|_| s.normal()).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.03 && (var - 1.0).abs() < 0.05);
    }

    #[test]
    fn rejects_degenerate_dimension() {
        assert!(simplex_sample(1, 3, &mut SeededSampler::new(0)).is_err());
    }
}

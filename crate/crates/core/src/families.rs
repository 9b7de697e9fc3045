//! The concrete families: Beta, Flip, Binomial, Dirichlet, Multinomial and Normal
//! channels, with their parameter translation functions.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::continuous::{LikelihoodChannel, Obs, ObsSpace, OutSupport, PdfChannel, PdfState};
use crate::discrete::Space;
use crate::error::{Error, Result};
use crate::numerics::{
    log_beta_fn, log_binomial, log_dirichlet_norm, Domain, Interval, QuadConfig,
};

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::domain(format!(
            "{name} must be a finite positive real, got {v}"
        )))
    }
}

/// `a · ln x`, with `0 · ln 0 = 0`.
fn xlogy(a: f64, x: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * x.ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        Ok(Self {
            alpha: positive("alpha", alpha)?,
            beta: positive("beta", beta)?,
        })
    }

    pub fn from_slice(p: &[f64]) -> Result<Self> {
        match p {
            [a, b] => Self::new(*a, *b),
            _ => Err(Error::mismatch(format!(
                "Beta takes 2 parameters, got {}",
                p.len()
            ))),
        }
    }

    pub fn to_vec(self) -> Vec<f64> {
        vec![self.alpha, self.beta]
    }

    pub fn density(&self, x: f64) -> f64 {
        beta_density(
            self.alpha,
            self.beta,
            log_beta_fn(self.alpha, self.beta).unwrap_or(f64::NAN),
            x,
        )
    }

    pub fn state(&self) -> Result<PdfState> {
        let (a, b) = (self.alpha, self.beta);
        let lb = log_beta_fn(a, b)?;
        PdfState::from_normalized(
            Arc::new(move |x| beta_density(a, b, lb, x[0])),
            Domain::Interval(Interval::unit()),
        )
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }
}

fn beta_density(a: f64, b: f64, log_b: f64, x: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) {
        return 0.0;
    }
    x.powf(a - 1.0) * (1.0 - x).powf(b - 1.0) * (-log_b).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinomConfig {
    pub n: u64,
}

impl BinomConfig {
    pub fn new(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("binomial needs n >= 1 trials"));
        }
        Ok(Self { n })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletParams {
    pub alphas: Vec<f64>,
}

impl DirichletParams {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.len() < 2 {
            return Err(Error::domain("Dirichlet needs at least 2 parameters"));
        }
        for &a in &alphas {
            positive("Dirichlet parameter", a)?;
        }
        Ok(Self { alphas })
    }

    pub fn dim(&self) -> usize {
        self.alphas.len()
    }

    /// Density at a point given by its first `n - 1` coordinates.
    pub fn density(&self, x: &[f64]) -> f64 {
        let norm = log_dirichlet_norm(&self.alphas).unwrap_or(f64::NAN);
        dirichlet_density(&self.alphas, norm, x)
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        let full = complete_simplex(x);
        if full.iter().any(|&v| v <= 0.0) {
            return Err(Error::domain("log density off the open simplex"));
        }
        let mut acc = log_dirichlet_norm(&self.alphas)?;
        for (a, v) in self.alphas.iter().zip(&full) {
            acc += (a - 1.0) * v.ln();
        }
        Ok(acc)
    }

    pub fn state(&self) -> Result<PdfState> {
        let alphas = self.alphas.clone();
        let norm = log_dirichlet_norm(&alphas)?;
        PdfState::from_normalized(
            Arc::new(move |x| dirichlet_density(&alphas, norm, x)),
            Domain::Simplex(self.dim()),
        )
    }

    pub fn mean(&self) -> Vec<f64> {
        let total: f64 = self.alphas.iter().sum();
        self.alphas.iter().map(|a| a / total).collect()
    }
}

/// All `n` coordinates from the first `n - 1`.
pub fn complete_simplex(x: &[f64]) -> Vec<f64> {
    let mut full = x.to_vec();
    full.push(1.0 - x.iter().sum::<f64>());
    full
}

fn dirichlet_density(alphas: &[f64], log_norm: f64, x: &[f64]) -> f64 {
    if x.len() + 1 != alphas.len() {
        return f64::NAN;
    }
    let last = 1.0 - x.iter().sum::<f64>();
    // rounding at the slanted face
    if last < -1e-12 || x.iter().any(|&v| v < 0.0) {
        return 0.0;
    }
    let last = last.max(0.0);
    let mut prod = log_norm.exp();
    for (a, v) in alphas.iter().zip(x.iter().chain(std::iter::once(&last))) {
        prod *= v.powf(a - 1.0);
    }
    prod
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalParams {
    pub mu: f64,
    pub sigma: f64,
}

impl NormalParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::domain(format!("mu must be finite, got {mu}")));
        }
        Ok(Self {
            mu,
            sigma: positive("sigma", sigma)?,
        })
    }

    pub fn from_slice(p: &[f64]) -> Result<Self> {
        match p {
            [m, s] => Self::new(*m, *s),
            _ => Err(Error::mismatch(format!(
                "Normal takes 2 parameters, got {}",
                p.len()
            ))),
        }
    }

    pub fn to_vec(self) -> Vec<f64> {
        vec![self.mu, self.sigma]
    }

    pub fn density(&self, x: f64) -> f64 {
        gauss(x, self.mu, self.sigma)
    }

    /// The normal state truncated to `μ ± k·σ`, `k` from the config.
    pub fn state(&self, cfg: &QuadConfig) -> Result<PdfState> {
        let (m, s) = (self.mu, self.sigma);
        PdfState::from_normalized(
            Arc::new(move |x| gauss(x[0], m, s)),
            Domain::Interval(Interval::around(m, cfg.gauss_truncation_sigmas * s)?),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseLevel {
    pub nu: f64,
}

impl NoiseLevel {
    pub fn new(nu: f64) -> Result<Self> {
        Ok(Self {
            nu: positive("nu", nu)?,
        })
    }
}

pub(crate) fn gauss(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp() / ((2.0 * PI).sqrt() * sigma)
}

/// Beta channel on `[0, 1]`, parameters `(α, β)`.
pub fn beta_channel() -> PdfChannel {
    PdfChannel::new(
        "beta",
        2,
        Arc::new(|p, x| {
            let lb = log_beta_fn(p[0], p[1]).unwrap_or(f64::NAN);
            beta_density(p[0], p[1], lb, x[0])
        }),
        OutSupport::Fixed(Domain::Interval(Interval::unit())),
    )
    .with_check(Arc::new(|p| BetaParams::from_slice(p).map(|_| ())))
}

/// Observation space `{0, 1}`; index 1 is `"1"`.
pub fn coin_space() -> Space {
    Space::range(2).expect("non-empty")
}

/// Flip channel `x ↦ x|1⟩ + (1−x)|0⟩`.
pub fn flip_channel() -> LikelihoodChannel {
    LikelihoodChannel::new(
        "flip",
        1,
        Arc::new(|x, y| match y {
            Obs::Index(1) => x[0],
            Obs::Index(0) => 1.0 - x[0],
            _ => f64::NAN,
        }),
        ObsSpace::Finite(coin_space()),
    )
}

/// Binomial channel on `{0, ..., n}`.
pub fn binom_channel(cfg: BinomConfig) -> LikelihoodChannel {
    let n = cfg.n;
    LikelihoodChannel::new(
        format!("binom({n})"),
        1,
        Arc::new(move |x, y| match y {
            Obs::Index(i) if (i as u64) <= n => binom_pmf(n, i as u64, x[0]),
            _ => f64::NAN,
        }),
        ObsSpace::Finite(Space::range(n as usize + 1).expect("non-empty")),
    )
}

fn binom_pmf(n: u64, i: u64, x: f64) -> f64 {
    let lc = log_binomial(n, i).unwrap_or(f64::NAN);
    (lc + xlogy(i as f64, x) + xlogy((n - i) as f64, 1.0 - x)).exp()
}

/// Dirichlet channel on the `n`-simplex (first `n − 1` coordinates).
pub fn dirichlet_channel(n: usize) -> Result<PdfChannel> {
    if n < 2 {
        return Err(Error::domain("Dirichlet needs n >= 2"));
    }
    Ok(PdfChannel::new(
        format!("dirichlet({n})"),
        n,
        Arc::new(|p, x| {
            let norm = log_dirichlet_norm(p).unwrap_or(f64::NAN);
            dirichlet_density(p, norm, x)
        }),
        OutSupport::Fixed(Domain::Simplex(n)),
    )
    .with_check(Arc::new(|p| DirichletParams::new(p.to_vec()).map(|_| ()))))
}

/// Multinomial channel: a simplex point `x̄` goes to `Σ xᵢ|yᵢ⟩`, labels kept in the given order.
pub fn mult_channel<S: Into<String>>(
    labels: impl IntoIterator<Item = S>,
) -> Result<LikelihoodChannel> {
    let space = Space::ordered(labels)?;
    let n = space.len();
    if n < 2 {
        return Err(Error::domain("multinomial needs at least 2 labels"));
    }
    Ok(LikelihoodChannel::new(
        format!("mult({n})"),
        n - 1,
        Arc::new(move |x, y| match y {
            Obs::Index(i) if i + 1 < n => x[i],
            Obs::Index(i) if i + 1 == n => 1.0 - x.iter().sum::<f64>(),
            _ => f64::NAN,
        }),
        ObsSpace::Finite(space),
    ))
}

/// Normal channel, parameters `(μ, σ)`, output truncated to `μ ± k·σ`.
pub fn normal_channel() -> PdfChannel {
    PdfChannel::new(
        "normal",
        2,
        Arc::new(|p, x| gauss(x[0], p[0], p[1])),
        OutSupport::Window(Arc::new(|p, k| {
            Interval::around(p[0], k * p[1].abs()).unwrap_or(Interval::unit())
        })),
    )
    .with_check(Arc::new(|p| NormalParams::from_slice(p).map(|_| ())))
}

/// Observation model `y ~ Normal(x, ν)`.
pub fn normal_likelihood(nu: NoiseLevel) -> LikelihoodChannel {
    let nu = nu.nu;
    LikelihoodChannel::new(
        format!("normal-noise({nu})"),
        1,
        Arc::new(move |x, y| match y {
            Obs::Real(y) => gauss(y, x[0], nu),
            Obs::Index(_) => f64::NAN,
        }),
        ObsSpace::RealLine(Arc::new(move |x, k| {
            Interval::around(x[0], k * nu).unwrap_or(Interval::unit())
        })),
    )
}

/// `h(α, β, i) = (α + i, β + 1 − i)`.
pub fn h_beta_flip(p: BetaParams, i: u8) -> Result<BetaParams> {
    match i {
        0 => BetaParams::new(p.alpha, p.beta + 1.0),
        1 => BetaParams::new(p.alpha + 1.0, p.beta),
        _ => Err(Error::domain(format!(
            "coin observation must be 0 or 1, got {i}"
        ))),
    }
}

/// `h(α, β, i) = (α + i, β + n − i)`.
pub fn h_beta_binom(p: BetaParams, cfg: BinomConfig, i: u64) -> Result<BetaParams> {
    if i > cfg.n {
        return Err(Error::domain(format!(
            "binomial observation {i} exceeds n = {}",
            cfg.n
        )));
    }
    BetaParams::new(p.alpha + i as f64, p.beta + (cfg.n - i) as f64)
}

/// Increment the parameter of the observed label.
pub fn h_dirichlet(p: &DirichletParams, labels: &Space, y: &str) -> Result<DirichletParams> {
    let i = labels.index_of(y)?;
    h_dirichlet_index(p, i)
}

pub fn h_dirichlet_index(p: &DirichletParams, i: usize) -> Result<DirichletParams> {
    if i >= p.dim() {
        return Err(Error::UnknownLabel(format!("#{i}")));
    }
    let mut alphas = p.alphas.clone();
    alphas[i] += 1.0;
    DirichletParams::new(alphas)
}

/// Posterior `((μν² + yσ²)/(ν² + σ²), νσ/√(ν² + σ²))`.
pub fn h_normal(p: NormalParams, nu: NoiseLevel, y: f64) -> NormalParams {
    let (v2, s2) = (nu.nu * nu.nu, p.sigma * p.sigma);
    NormalParams {
        mu: (p.mu * v2 + y * s2) / (v2 + s2),
        sigma: nu.nu * p.sigma / (v2 + s2).sqrt(),
    }
}

//! Updating with several observations at once, and sufficient statistics `(s, t, q)` with
//! `p(x, ȳ) = s(ȳ) · q(x, t(ȳ))`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::conjugacy::{state_distance, CheckConfig, CheckReport, ProbeVerdict, State};
use crate::continuous::{update_pdf, LikelihoodChannel, Obs, ObsSpace, PdfState, RandVarC};
use crate::error::{Error, Result};
use crate::families::NoiseLevel;

/// Longest batch accepted.
pub const MAX_BATCH: usize = 1000;

/// An ordered, non-empty list of observations from one observation space.
#[derive(Debug, Clone, PartialEq)]
pub struct ObsBatch {
    obs: Vec<Obs>,
}

impl ObsBatch {
    pub fn new(space: &ObsSpace, obs: Vec<Obs>) -> Result<Self> {
        if obs.is_empty() {
            return Err(Error::domain("a batch needs at least one observation"));
        }
        if obs.len() > MAX_BATCH {
            return Err(Error::domain(format!(
                "batches are capped at {MAX_BATCH} observations"
            )));
        }
        for &y in &obs {
            space.check(y)?;
        }
        Ok(Self { obs })
    }

    /// Parses labels (finite spaces) or numbers (the real line).
    pub fn parse<S: AsRef<str>>(space: &ObsSpace, items: &[S]) -> Result<Self> {
        let obs = items
            .iter()
            .map(|s| space.obs(s.as_ref().trim()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(space, obs)
    }

    pub fn obs(&self) -> &[Obs] {
        &self.obs
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    /// The same observations in another order; `perm` must be a permutation of indices.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.len()];
        for &i in perm {
            if i >= self.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::domain("not a permutation"));
            }
        }
        if perm.len() != self.len() {
            return Err(Error::domain("not a permutation"));
        }
        Ok(Self {
            obs: perm.iter().map(|&i| self.obs[i]).collect(),
        })
    }
}

/// `x ↦ Σᵢ ln v(x, yᵢ)`.
pub fn conjunction_log_likelihood(model: &LikelihoodChannel, batch: &ObsBatch) -> Result<RandVarC> {
    for &y in batch.obs() {
        model.obs_space().check(y)?;
    }
    let (m, obs) = (model.clone(), batch.obs.clone());
    Ok(RandVarC::new(move |x| {
        obs.iter().map(|&y| m.kernel(x, y).ln()).sum()
    }))
}

/// The conjunction `x ↦ Πᵢ v(x, yᵢ)` of the single-observation likelihoods.
pub fn conjunction_likelihood(model: &LikelihoodChannel, batch: &ObsBatch) -> Result<RandVarC> {
    for &y in batch.obs() {
        model.obs_space().check(y)?;
    }
    let (m, obs) = (model.clone(), batch.obs.clone());
    Ok(RandVarC::new(move |x| {
        obs.iter().map(|&y| m.kernel(x, y)).product()
    }))
}

/// Update by a likelihood given in log form, shifted by its maximum over a grid of the
/// support so that long products do not underflow. The shift is a scalar and cancels.
pub fn update_log(prior: &PdfState, log_r: &RandVarC, cfg: &CheckConfig) -> Result<PdfState> {
    let shift = log_shift(prior, log_r, cfg);
    let lr = log_r.clone();
    update_pdf(
        prior,
        &RandVarC::new(move |x| (lr.eval(x) - shift).exp()),
        &cfg.quad,
    )
}

fn log_shift(prior: &PdfState, log_r: &RandVarC, cfg: &CheckConfig) -> f64 {
    let axis = prior.support().first_axis();
    let n = prior.support().dim();
    let best = axis
        .grid(2 * cfg.grid_points + 1)
        .into_iter()
        .map(|t| {
            // a point on the first axis, rest of the coordinates at the centre
            let mut x = vec![t; 1];
            if n > 1 {
                let rest = ((1.0 - t) / n as f64).max(0.0);
                x.extend(std::iter::repeat(rest).take(n - 1));
            }
            log_r.eval(&x)
        })
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if best.is_finite() {
        best
    } else {
        0.0
    }
}

/// A single update by the conjunction likelihood of the whole batch.
pub fn multi_update(
    prior: &PdfState,
    model: &LikelihoodChannel,
    batch: &ObsBatch,
    cfg: &CheckConfig,
) -> Result<PdfState> {
    update_log(prior, &conjunction_log_likelihood(model, batch)?, cfg)
}

/// One update per observation, in batch order.
pub fn sequential_update(
    prior: &PdfState,
    model: &LikelihoodChannel,
    batch: &ObsBatch,
    cfg: &CheckConfig,
) -> Result<PdfState> {
    let mut st = prior.clone();
    for &y in batch.obs() {
        st = update_pdf(&st, &model.likelihood(y)?, &cfg.quad)?;
    }
    Ok(st)
}

/// Value of a statistic `t(ȳ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Summary {
    Counts { ones: u64, zeros: u64 },
    Sum(f64),
}

pub type LogSFn = Arc<dyn Fn(&[Obs]) -> Result<f64> + Send + Sync>;
pub type TFn = Arc<dyn Fn(&[Obs]) -> Result<Summary> + Send + Sync>;
pub type LogQFn = Arc<dyn Fn(f64, Summary) -> Result<f64> + Send + Sync>;

/// A sufficient statistic for `m` observations; `s` and `q` are kept as logarithms.
#[derive(Clone)]
pub struct SuffStat {
    pub name: String,
    pub m: usize,
    pub log_s: LogSFn,
    pub t: TFn,
    pub log_q: LogQFn,
}

impl fmt::Debug for SuffStat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SuffStat({}, m = {})", self.name, self.m)
    }
}

impl SuffStat {
    fn check_len(&self, ys: &[Obs]) -> Result<()> {
        if ys.len() == self.m {
            Ok(())
        } else {
            Err(Error::mismatch(format!(
                "{} is defined for {} observations, got {}",
                self.name,
                self.m,
                ys.len()
            )))
        }
    }

    pub fn s(&self, ys: &[Obs]) -> Result<f64> {
        self.check_len(ys)?;
        Ok((self.log_s)(ys)?.exp())
    }

    pub fn t(&self, ys: &[Obs]) -> Result<Summary> {
        self.check_len(ys)?;
        (self.t)(ys)
    }

    pub fn q(&self, x: f64, z: Summary) -> Result<f64> {
        Ok((self.log_q)(x, z)?.exp())
    }

    /// `s(ȳ) · q(x, t(ȳ))`, evaluated in log space.
    pub fn factorized(&self, x: f64, ys: &[Obs]) -> Result<f64> {
        self.check_len(ys)?;
        Ok(((self.log_s)(ys)? + (self.log_q)(x, (self.t)(ys)?)?).exp())
    }

    /// `x ↦ ln q(x, z)` as a random variable.
    pub fn log_q_rv(&self, z: Summary) -> RandVarC {
        let lq = self.log_q.clone();
        RandVarC::new(move |x| lq(x[0], z).unwrap_or(f64::NAN))
    }
}

/// `a · ln x` with `0 · ln 0 = 0`.
fn xlogy(a: f64, x: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * x.ln()
    }
}

/// Bernoulli counts: `t(ȳ) = (n₁, n₀)`, `q(x, n, n') = xⁿ(1−x)^{n'}`, `s ≡ 1`.
pub fn beta_flip_stat(m: usize) -> Result<SuffStat> {
    if m == 0 {
        return Err(Error::domain("a statistic needs m >= 1"));
    }
    Ok(SuffStat {
        name: format!("beta-flip-counts(m={m})"),
        m,
        log_s: Arc::new(|_| Ok(0.0)),
        t: Arc::new(|ys| {
            let (mut ones, mut zeros) = (0, 0);
            for &y in ys {
                match y {
                    Obs::Index(1) => ones += 1,
                    Obs::Index(0) => zeros += 1,
                    _ => return Err(Error::mismatch(format!("coin observation {y}"))),
                }
            }
            Ok(Summary::Counts { ones, zeros })
        }),
        log_q: Arc::new(|x, z| match z {
            Summary::Counts { ones, zeros } => {
                Ok(xlogy(ones as f64, x) + xlogy(zeros as f64, 1.0 - x))
            }
            Summary::Sum(_) => Err(Error::mismatch("counts statistic given a sum")),
        }),
    })
}

/// Gaussian sum: `s(ȳ) = (2πν²)^{−m/2} exp(−Σyᵢ²/2ν²)`, `t(ȳ) = Σyᵢ`,
/// `q(x, z) = exp((2zx − m x²)/2ν²)`.
pub fn normal_stat(m: usize, nu: NoiseLevel) -> Result<SuffStat> {
    if m == 0 {
        return Err(Error::domain("a statistic needs m >= 1"));
    }
    let v2 = nu.nu * nu.nu;
    let reals = |ys: &[Obs]| -> Result<Vec<f64>> {
        ys.iter()
            .map(|y| match y {
                Obs::Real(v) => Ok(*v),
                Obs::Index(_) => Err(Error::mismatch("normal statistic needs real observations")),
            })
            .collect()
    };
    Ok(SuffStat {
        name: format!("normal-sum(m={m}, nu={})", nu.nu),
        m,
        log_s: Arc::new(move |ys| {
            let ys = reals(ys)?;
            let sq: f64 = ys.iter().map(|y| y * y).sum();
            Ok(-(m as f64) / 2.0 * (2.0 * PI * v2).ln() - sq / (2.0 * v2))
        }),
        t: Arc::new(move |ys| Ok(Summary::Sum(reals(ys)?.iter().sum()))),
        log_q: Arc::new(move |x, z| match z {
            Summary::Sum(z) => Ok((2.0 * z * x - m as f64 * x * x) / (2.0 * v2)),
            Summary::Counts { .. } => Err(Error::mismatch("sum statistic given counts")),
        }),
    })
}

/// Largest relative error of `Πᵢ v(x, yᵢ) = s(ȳ)·q(x, t(ȳ))` over the probe points,
/// with the product evaluated directly as the oracle.
pub fn check_factorization(
    stat: &SuffStat,
    model: &LikelihoodChannel,
    batch: &ObsBatch,
    x_probes: &[f64],
    tolerance: f64,
) -> Result<CheckReport> {
    if x_probes.is_empty() {
        return Err(Error::domain("factorization check needs probe points"));
    }
    let direct = conjunction_likelihood(model, batch)?;
    let mut per_probe = Vec::with_capacity(x_probes.len());
    for &x in x_probes {
        let want = direct.eval(&[x]);
        let got = stat.factorized(x, batch.obs())?;
        let err = if want == 0.0 {
            got.abs()
        } else {
            ((got - want) / want).abs()
        };
        per_probe.push(ProbeVerdict {
            params: vec![x],
            obs: format!("m={}", batch.len()),
            err,
            passed: err <= tolerance,
        });
    }
    Ok(CheckReport::from_errors(
        format!("factorization[{}]", stat.name),
        tolerance,
        per_probe,
    ))
}

/// Distance between the update by the conjunction likelihood and the update by
/// `q(−, t(ȳ))` alone.
pub fn check_stat_update_equiv(
    stat: &SuffStat,
    prior: &PdfState,
    model: &LikelihoodChannel,
    batch: &ObsBatch,
    cfg: &CheckConfig,
    tolerance: f64,
) -> Result<CheckReport> {
    let by_conjunction = multi_update(prior, model, batch, cfg)?;
    let z = stat.t(batch.obs())?;
    let by_summary = update_log(prior, &stat.log_q_rv(z), cfg)?;
    let d = state_distance(&State::Pdf(by_conjunction), &State::Pdf(by_summary), cfg)?;
    Ok(CheckReport::single(
        format!("stat-update[{}]", stat.name),
        d,
        tolerance,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{flip_channel, normal_likelihood, BetaParams, NormalParams};

    fn coins(bits: &[usize]) -> ObsBatch {
        ObsBatch::new(
            flip_channel().obs_space(),
            bits.iter().map(|&b| Obs::Index(b)).collect(),
        )
        .unwrap()
    }

    fn reals(v: &[f64], nu: f64) -> (LikelihoodChannel, ObsBatch) {
        let m = normal_likelihood(NoiseLevel::new(nu).unwrap());
        let b = ObsBatch::new(m.obs_space(), v.iter().map(|&y| Obs::Real(y)).collect()).unwrap();
        (m, b)
    }

    #[test]
    fn flip_conjunction_is_count_monomial() {
        let r = conjunction_likelihood(&flip_channel(), &coins(&[1, 0, 0, 1, 1])).unwrap();
        for x in [0.0, 0.2, 0.7, 1.0] {
            let want = x * x * x * (1.0 - x) * (1.0 - x);
            assert!((r.eval(&[x]) - want).abs() < 1e-15);
        }
        let single = conjunction_likelihood(&flip_channel(), &coins(&[1])).unwrap();
        assert_eq!(single.eval(&[0.3]), 0.3);
    }

    #[test]
    fn normal_conjunction_is_proportional_to_squared_error() {
        let (m, b) = reals(&[1.0, 2.0, 3.0], 1.0);
        let r = conjunction_likelihood(&m, &b).unwrap();
        let ratio = |x: f64| {
            r.eval(&[x])
                / (-[1.0, 2.0, 3.0]
                    .iter()
                    .map(|y: &f64| (y - x).powi(2))
                    .sum::<f64>()
                    / 2.0)
                    .exp()
        };
        let base = ratio(0.0);
        for x in [-1.0, 0.5, 2.0, 4.0] {
            assert!((ratio(x) / base - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn counts_statistic() {
        let st = beta_flip_stat(5).unwrap();
        let b = coins(&[1, 0, 0, 1, 1]);
        assert_eq!(
            st.t(b.obs()).unwrap(),
            Summary::Counts { ones: 3, zeros: 2 }
        );
        assert_eq!(st.s(b.obs()).unwrap(), 1.0);
        assert!(
            (st.q(0.5, Summary::Counts { ones: 3, zeros: 2 }).unwrap() - 0.03125).abs() < 1e-16
        );
        assert!(st.t(coins(&[1]).obs()).is_err());
    }

    #[test]
    fn sum_statistic() {
        let nu = NoiseLevel::new(1.0).unwrap();
        let st = normal_stat(3, nu).unwrap();
        let (m, b) = reals(&[1.0, 2.0, 3.0], 1.0);
        assert_eq!(st.t(b.obs()).unwrap(), Summary::Sum(6.0));
        for z in [-3.0, 0.0, 12.5] {
            assert_eq!(st.q(0.0, Summary::Sum(z)).unwrap(), 1.0);
        }
        let r = check_factorization(&st, &m, &b, &[-1.0, 0.0, 2.0], 1e-10).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn halved_exponent_fails() {
        let nu = NoiseLevel::new(1.0).unwrap();
        let mut st = normal_stat(3, nu).unwrap();
        let good = st.log_q.clone();
        st.log_q = Arc::new(move |x, z| Ok(good(x, z)? / 2.0));
        let (m, b) = reals(&[1.0, 2.0, 3.0], 1.0);
        let r = check_factorization(&st, &m, &b, &[-1.0, 0.0, 2.0], 1e-9).unwrap();
        assert!(!r.passed && r.max_abs_err > 0.1);
    }

    #[test]
    fn batch_validation() {
        let space = flip_channel().obs_space().clone();
        assert!(ObsBatch::new(&space, vec![]).is_err());
        assert!(ObsBatch::new(&space, vec![Obs::Index(2)]).is_err());
        assert!(ObsBatch::new(&space, vec![Obs::Index(1); MAX_BATCH + 1]).is_err());
        let b = ObsBatch::parse(&space, &["1", "0", " 1"]).unwrap();
        assert_eq!(b.obs(), [Obs::Index(1), Obs::Index(0), Obs::Index(1)]);
        assert!(b.permuted(&[0, 0, 1]).is_err());
        assert_eq!(b.permuted(&[1, 0, 2]).unwrap().obs()[0], Obs::Index(0));
    }

    #[test]
    fn summary_routes_agree() {
        let cfg = CheckConfig::default();
        let prior = BetaParams::new(2.0, 3.0).unwrap().state().unwrap();
        let r = check_stat_update_equiv(
            &beta_flip_stat(3).unwrap(),
            &prior,
            &flip_channel(),
            &coins(&[1, 1, 0]),
            &cfg,
            1e-6,
        )
        .unwrap();
        assert!(r.passed, "{r:?}");
        let post = multi_update(&prior, &flip_channel(), &coins(&[1, 1, 0]), &cfg).unwrap();
        let want = BetaParams::new(4.0, 4.0).unwrap().state().unwrap();
        assert!(state_distance(&State::Pdf(post), &State::Pdf(want), &cfg).unwrap() < 1e-6);

        let nu = NoiseLevel::new(1.0).unwrap();
        let (m, b) = reals(&[1.0, 2.0, 3.0], 1.0);
        let prior = NormalParams::new(0.0, 1.0)
            .unwrap()
            .state(&cfg.quad)
            .unwrap();
        let r = check_stat_update_equiv(&normal_stat(3, nu).unwrap(), &prior, &m, &b, &cfg, 1e-6)
            .unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn long_batches_do_not_underflow() {
        let cfg = CheckConfig::default();
        let bits: Vec<usize> = (0..600).map(|i| usize::from(i % 3 == 0)).collect();
        let prior = BetaParams::new(1.0, 1.0).unwrap().state().unwrap();
        let post = multi_update(&prior, &flip_channel(), &coins(&bits), &cfg).unwrap();
        let want = BetaParams::new(201.0, 401.0).unwrap().state().unwrap();
        assert!(state_distance(&State::Pdf(post), &State::Pdf(want), &cfg).unwrap() < 1e-6);
    }
}

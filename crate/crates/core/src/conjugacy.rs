//! Conjugate pairs and the executable checks of their defining laws.
//!
//! A pair is a prior channel `c: P → X`, a model `d: X → O` and a translator `h: P × O → P`.
//! Each check walks the parameter grid times the observation set, computes one error per
//! probe and reports the maximum. Probes run in parallel and are collected in probe order,
//! so reports are bit-identical across runs.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuous::{
    graph_push, inversion_pdf, pull_pdf, update_pdf, ContChannel, LikelihoodChannel, Obs, ObsEvent,
    ObsRandVar, ObsSpace, OutSupport, PdfChannel, PdfState, PointMass,
};
use crate::discrete::{copy_channel, push, FiniteDist, MIN_VALIDITY};
use crate::error::{Error, Result};
use crate::families::{
    beta_channel, binom_channel, dirichlet_channel, flip_channel, h_beta_binom, h_beta_flip,
    h_dirichlet_index, h_normal, mult_channel, normal_channel, normal_likelihood, BetaParams,
    BinomConfig, DirichletParams, NoiseLevel, NormalParams,
};
use crate::numerics::{
    dirichlet_sample, integrate_1d, simplex_sample, Domain, GaussRule, Interval, QuadConfig,
    SeededSampler,
};

pub type Translator = Arc<dyn Fn(&[f64], Obs) -> Result<Vec<f64>> + Send + Sync>;
/// Draws `count` points (all simplex coordinates) from the prior at the given parameters.
pub type PriorSampler =
    Arc<dyn Fn(&[f64], usize, &mut SeededSampler) -> Result<Vec<Vec<f64>>> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub law: f64,
    pub inversion: f64,
    pub update: f64,
}

impl Tolerances {
    pub fn uniform(t: f64) -> Self {
        Self {
            law: t,
            inversion: t,
            update: t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckConfig {
    pub quad: QuadConfig,
    pub seed: u64,
    pub mc_samples: usize,
    pub grid_points: usize,
    pub cdf_probes: usize,
    /// Equal cells the carrier is cut into for the set quantifier.
    pub cells: usize,
    /// Replaces every pair's own tolerances when set.
    pub tolerance_override: Option<f64>,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            quad: QuadConfig::default(),
            seed: 1,
            mc_samples: 1 << 16,
            grid_points: 101,
            cdf_probes: 11,
            cells: 8,
            tolerance_override: None,
        }
    }
}

impl CheckConfig {
    pub fn validate(&self) -> Result<()> {
        self.quad.validate()?;
        if self.grid_points < 2 || self.cdf_probes < 2 || self.cells == 0 || self.mc_samples == 0 {
            return Err(Error::InvalidConfig(
                "need grid_points >= 2, cdf_probes >= 2, cells >= 1, mc_samples >= 1".into(),
            ));
        }
        if let Some(t) = self.tolerance_override {
            if !(t > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "tolerance must be positive, got {t}"
                )));
            }
        }
        Ok(())
    }

    /// The override if one is set, else `own`.
    pub fn tol(&self, own: f64) -> f64 {
        self.tolerance_override.unwrap_or(own)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairKind {
    BetaFlip,
    BetaBinom { n: u64 },
    DirichletMult { n: usize },
    NormalNormal { nu: f64 },
}

#[derive(Clone)]
pub struct ConjugatePair {
    pub name: String,
    pub kind: PairKind,
    pub prior: PdfChannel,
    pub model: LikelihoodChannel,
    pub translator: Translator,
    pub param_probe_grid: Vec<Vec<f64>>,
    pub obs_probe_set: Vec<Obs>,
    pub tolerances: Tolerances,
    pub prior_sampler: Option<PriorSampler>,
}

impl fmt::Debug for ConjugatePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConjugatePair")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("params", &self.param_probe_grid.len())
            .field("obs", &self.obs_probe_set)
            .finish()
    }
}

impl ConjugatePair {
    pub fn with_translator(mut self, name: impl Into<String>, t: Translator) -> Self {
        self.name = name.into();
        self.translator = t;
        self
    }

    /// Negative control: the true translator with its first output parameter shifted.
    pub fn shifted(self, delta: f64) -> Self {
        let h = self.translator.clone();
        let name = format!("{}+shift{delta}", self.name);
        self.with_translator(
            name,
            Arc::new(move |p, y| {
                let mut q = h(p, y)?;
                q[0] += delta;
                Ok(q)
            }),
        )
    }

    pub fn probes(&self) -> Vec<(Vec<f64>, Obs)> {
        let mut out = Vec::new();
        for p in &self.param_probe_grid {
            for &y in &self.obs_probe_set {
                out.push((p.clone(), y));
            }
        }
        out
    }

    /// Applies the translator once per observation, in order.
    pub fn fold(&self, p: &[f64], ys: &[Obs]) -> Result<Vec<f64>> {
        ys.iter()
            .try_fold(p.to_vec(), |q, &y| (self.translator)(&q, y))
    }

    pub fn obs_label(&self, y: Obs) -> String {
        match (self.model.obs_space(), y) {
            (ObsSpace::Finite(s), Obs::Index(i)) if i < s.len() => s.label(i).to_string(),
            _ => y.to_string(),
        }
    }

    fn is_simplex(&self) -> bool {
        matches!(self.kind, PairKind::DirichletMult { .. })
    }
}

fn grid2(a: &[f64], b: &[f64]) -> Vec<Vec<f64>> {
    a.iter()
        .flat_map(|&x| b.iter().map(move |&y| vec![x, y]))
        .collect()
}

const BETA_GRID: [f64; 4] = [0.5, 1.0, 2.0, 5.0];

pub fn beta_flip_pair() -> ConjugatePair {
    ConjugatePair {
        name: "beta-flip".into(),
        kind: PairKind::BetaFlip,
        prior: beta_channel(),
        model: flip_channel(),
        translator: Arc::new(|p, y| match y {
            Obs::Index(i) if i <= 1 => {
                Ok(h_beta_flip(BetaParams::from_slice(p)?, i as u8)?.to_vec())
            }
            _ => Err(Error::mismatch(format!("coin observation {y}"))),
        }),
        param_probe_grid: grid2(&BETA_GRID, &BETA_GRID),
        obs_probe_set: vec![Obs::Index(0), Obs::Index(1)],
        tolerances: Tolerances::uniform(1e-6),
        prior_sampler: None,
    }
}

/// The corrupted translator `h'(α, β, i) = (α + 2i, β)`.
pub fn corrupted_beta_flip_pair() -> ConjugatePair {
    beta_flip_pair().with_translator(
        "beta-flip(corrupted)",
        Arc::new(|p, y| match y {
            Obs::Index(i) if i <= 1 => Ok(vec![p[0] + 2.0 * i as f64, p[1]]),
            _ => Err(Error::mismatch(format!("coin observation {y}"))),
        }),
    )
}

pub fn beta_binom_pair(n: u64) -> Result<ConjugatePair> {
    let cfg = BinomConfig::new(n)?;
    Ok(ConjugatePair {
        name: format!("beta-binom(n={n})"),
        kind: PairKind::BetaBinom { n },
        prior: beta_channel(),
        model: binom_channel(cfg),
        translator: Arc::new(move |p, y| match y {
            Obs::Index(i) => Ok(h_beta_binom(BetaParams::from_slice(p)?, cfg, i as u64)?.to_vec()),
            Obs::Real(_) => Err(Error::mismatch("binomial observations are counts")),
        }),
        param_probe_grid: grid2(&BETA_GRID, &BETA_GRID),
        obs_probe_set: (0..=n as usize).map(Obs::Index).collect(),
        tolerances: Tolerances::uniform(1e-6),
        prior_sampler: None,
    })
}

/// Dirichlet prior over three outcomes `y0, y1, y2` with the multinomial model.
pub fn dirichlet_mult_pair() -> ConjugatePair {
    let labels = ["y0", "y1", "y2"];
    ConjugatePair {
        name: "dirichlet-mult".into(),
        kind: PairKind::DirichletMult { n: 3 },
        prior: dirichlet_channel(3).expect("n = 3"),
        model: mult_channel(labels).expect("distinct labels"),
        translator: Arc::new(|p, y| match y {
            Obs::Index(i) => Ok(h_dirichlet_index(&DirichletParams::new(p.to_vec())?, i)?.alphas),
            Obs::Real(_) => Err(Error::mismatch("multinomial observations are labels")),
        }),
        param_probe_grid: vec![vec![1.0, 1.0, 1.0], vec![2.0, 3.0, 4.0]],
        obs_probe_set: (0..3).map(Obs::Index).collect(),
        tolerances: Tolerances::uniform(1e-2),
        prior_sampler: Some(Arc::new(|p, count, s| dirichlet_sample(p, count, s))),
    }
}

pub fn normal_normal_pair(nu: f64) -> Result<ConjugatePair> {
    let noise = NoiseLevel::new(nu)?;
    Ok(ConjugatePair {
        name: format!("normal-normal(nu={nu})"),
        kind: PairKind::NormalNormal { nu },
        prior: normal_channel(),
        model: normal_likelihood(noise),
        translator: Arc::new(move |p, y| match y {
            Obs::Real(y) => Ok(h_normal(NormalParams::from_slice(p)?, noise, y).to_vec()),
            Obs::Index(_) => Err(Error::mismatch("normal observations are reals")),
        }),
        param_probe_grid: grid2(&[-2.0, 0.0, 3.0], &[0.5, 1.0, 2.0]),
        obs_probe_set: vec![Obs::Real(-1.0), Obs::Real(0.5), Obs::Real(2.0)],
        tolerances: Tolerances {
            law: 1e-5,
            inversion: 1e-6,
            update: 1e-6,
        },
        prior_sampler: None,
    })
}

/// Every shipped pair: Beta–Flip, Beta–Binomial for n ∈ {1, 4, 10}, Dirichlet–Multinomial,
/// Normal–Normal for ν ∈ {0.5, 1}.
pub fn shipped_pairs() -> Vec<ConjugatePair> {
    let mut v = vec![beta_flip_pair()];
    for n in [1, 4, 10] {
        v.push(beta_binom_pair(n).expect("n >= 1"));
    }
    v.push(dirichlet_mult_pair());
    for nu in [0.5, 1.0] {
        v.push(normal_normal_pair(nu).expect("nu > 0"));
    }
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeVerdict {
    pub params: Vec<f64>,
    pub obs: String,
    pub err: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_name: String,
    pub probes: usize,
    pub max_abs_err: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip)]
    pub per_probe: Vec<ProbeVerdict>,
}

impl CheckReport {
    pub fn from_errors(
        name: impl Into<String>,
        tolerance: f64,
        per_probe: Vec<ProbeVerdict>,
    ) -> Self {
        let max_abs_err = per_probe.iter().map(|p| p.err).fold(0.0, f64::max);
        // a NaN error anywhere must fail the report
        let all_finite = per_probe.iter().all(|p| p.err.is_finite());
        Self {
            check_name: name.into(),
            probes: per_probe.len(),
            max_abs_err,
            tolerance,
            passed: all_finite && max_abs_err <= tolerance,
            per_probe,
        }
    }

    /// A single-valued report.
    pub fn single(name: impl Into<String>, err: f64, tolerance: f64) -> Self {
        Self::from_errors(
            name,
            tolerance,
            vec![ProbeVerdict {
                params: Vec::new(),
                obs: String::new(),
                err,
                passed: err <= tolerance,
            }],
        )
    }

    /// Pass/fail pattern over probes.
    pub fn verdicts(&self) -> Vec<bool> {
        self.per_probe.iter().map(|p| p.passed).collect()
    }
}

/// Whether two reports over the same probes pass and fail on exactly the same probes.
pub fn verdicts_agree(a: &CheckReport, b: &CheckReport) -> bool {
    a.probes == b.probes
        && a.per_probe
            .iter()
            .zip(&b.per_probe)
            .all(|(x, y)| x.params == y.params && x.obs == y.obs && x.passed == y.passed)
}

fn run_probes(
    pair: &ConjugatePair,
    name: String,
    tolerance: f64,
    f: impl Fn(usize, &[f64], Obs) -> Result<f64> + Sync,
) -> Result<CheckReport> {
    let probes = pair.probes();
    let errs: Vec<f64> = probes
        .par_iter()
        .enumerate()
        .map(|(k, (p, y))| f(k, p, *y))
        .collect::<Result<Vec<f64>>>()?;
    let per_probe = probes
        .into_iter()
        .zip(errs)
        .map(|((p, y), err)| ProbeVerdict {
            obs: pair.obs_label(y),
            params: p,
            err,
            passed: err <= tolerance,
        })
        .collect();
    Ok(CheckReport::from_errors(name, tolerance, per_probe))
}

fn first_axis_interval(d: &Domain) -> Result<Interval> {
    match d {
        Domain::Interval(i) => Ok(*i),
        Domain::Simplex(_) => Err(Error::Unsupported("interval operation on a simplex".into())),
    }
}

/// For every probe `(p, y)` and every cell `M` (plus the whole carrier), compares
/// `∫_M u(p,x)·v(x,y) dx` with `(∫ u(p,x)·v(x,y) dx)·∫_M u(h(p,y),x) dx`.
///
/// The per-probe error is the largest discrepancy divided by `∫ u·v`, i.e. measured
/// between normalized posterior masses. Bounded carriers are cut into equal cells; on the
/// real line the cells cover four posterior standard deviations either side of the
/// posterior mean, plus the two tails. Simplex carriers use importance-sampled Monte Carlo
/// with common random numbers on both sides.
pub fn check_pointwise_law(pair: &ConjugatePair, cfg: &CheckConfig) -> Result<CheckReport> {
    cfg.validate()?;
    let name = format!("pointwise-law[{}]", pair.name);
    let tol = cfg.tol(pair.tolerances.law);
    if pair.is_simplex() {
        run_probes(pair, name, tol, |k, p, y| {
            law_simplex(pair, p, y, cfg, k as u64)
        })
    } else {
        run_probes(pair, name, tol, |_, p, y| law_interval(pair, p, y, cfg))
    }
}

fn law_interval(pair: &ConjugatePair, p: &[f64], y: Obs, cfg: &CheckConfig) -> Result<f64> {
    let q = (pair.translator)(p, y)?;
    let prior = pair.prior.at(p, &cfg.quad)?;
    let post = pair.prior.at(&q, &cfg.quad)?;
    let lik = pair.model.likelihood(y)?;
    let w = first_axis_interval(prior.support())?;
    let joint = |x: f64| prior.eval(x) * lik.eval(&[x]);
    let z = integrate_1d(joint, w, &cfg.quad)?;
    if !(z > MIN_VALIDITY) {
        return Err(Error::ZeroMassObservation(pair.obs_label(y)));
    }
    // M = X
    let mut err = (z - z * post.total_mass(&cfg.quad)?).abs() / z;
    let span = w.hull(&post.support().first_axis());
    let cells = match pair.prior.out_support() {
        OutSupport::Fixed(_) => span.cells(cfg.cells),
        OutSupport::Window(_) => {
            let m1 = integrate_1d(|x| x * joint(x), w, &cfg.quad)? / z;
            let m2 = integrate_1d(|x| (x - m1) * (x - m1) * joint(x), w, &cfg.quad)? / z;
            let core = Interval::around(m1, 4.0 * m2.sqrt())?;
            let mut cells = core.cells(cfg.cells);
            if span.lo < core.lo {
                cells.push(Interval {
                    lo: span.lo,
                    hi: core.lo,
                });
            }
            if core.hi < span.hi {
                cells.push(Interval {
                    lo: core.hi,
                    hi: span.hi,
                });
            }
            cells
        }
    };
    for cell in cells {
        let lhs = match w.intersect(&cell) {
            Some(c) => integrate_1d(joint, c, &cfg.quad)?,
            None => 0.0,
        };
        let rhs = z * post.mass(&cell, &cfg.quad)?;
        err = err.max((lhs - rhs).abs() / z);
    }
    Ok(err)
}

fn law_simplex(
    pair: &ConjugatePair,
    p: &[f64],
    y: Obs,
    cfg: &CheckConfig,
    stream: u64,
) -> Result<f64> {
    let q = (pair.translator)(p, y)?;
    pair.prior.validate(p)?;
    pair.prior.validate(&q)?;
    let Domain::Simplex(n) = pair.prior.at(p, &cfg.quad)?.support().to_owned() else {
        return Err(Error::Unsupported(
            "simplex law on an interval prior".into(),
        ));
    };
    let mut sampler = SeededSampler::with_counter(cfg.seed, stream);
    // proposal density g: the prior itself when it can be sampled, else uniform
    let (points, from_prior) = match &pair.prior_sampler {
        Some(draw) => (draw(p, cfg.mc_samples, &mut sampler)?, true),
        None => (simplex_sample(n, cfg.mc_samples, &mut sampler)?, false),
    };
    let vol = Domain::Simplex(n).volume();
    let cells = Interval::unit().cells(cfg.cells);
    let mut lhs = vec![0.0; cells.len() + 1];
    let mut rhs = vec![0.0; cells.len() + 1];
    for full in &points {
        let x = &full[..n - 1];
        let up = pair.prior.kernel(p, x);
        let g = if from_prior { up } else { 1.0 / vol };
        if !(g > 0.0 && g.is_finite()) {
            continue;
        }
        let a = up / g * pair.model.kernel(x, y);
        let b = pair.prior.kernel(&q, x) / g;
        lhs[cells.len()] += a;
        rhs[cells.len()] += b;
        for (k, c) in cells.iter().enumerate() {
            if c.contains(x[0]) && (k + 1 == cells.len() || x[0] < c.hi) {
                lhs[k] += a;
                rhs[k] += b;
            }
        }
    }
    let m = points.len() as f64;
    let z = lhs[cells.len()] / m;
    if !(z > MIN_VALIDITY) {
        return Err(Error::ZeroMassObservation(pair.obs_label(y)));
    }
    Ok(lhs
        .iter()
        .zip(&rhs)
        .map(|(l, r)| (l / m - z * r / m).abs() / z)
        .fold(0.0, f64::max))
}

/// Compares the translator posterior `c(h(p, y))` with the Bayesian inversion `d†_{c(p)}(y)`.
pub fn check_inversion_equivalence(pair: &ConjugatePair, cfg: &CheckConfig) -> Result<CheckReport> {
    cfg.validate()?;
    let name = format!("inversion[{}]", pair.name);
    run_probes(pair, name, cfg.tol(pair.tolerances.inversion), |_, p, y| {
        let q = (pair.translator)(p, y)?;
        let a = pair.prior.at(&q, &cfg.quad)?;
        let b = inversion_pdf(&pair.model, &pair.prior.at(p, &cfg.quad)?, y, &cfg.quad)?;
        state_distance(&State::Pdf(a), &State::Pdf(b), cfg)
    })
}

/// Compares `c(h(p, y))` with the update of `c(p)` by the pulled-back point predicate
/// `d ≪ 1_y` (finite observations) or by the likelihood `v(-, y)` (real observations).
pub fn check_update_equivalence(pair: &ConjugatePair, cfg: &CheckConfig) -> Result<CheckReport> {
    cfg.validate()?;
    let name = format!("update[{}]", pair.name);
    run_probes(pair, name, cfg.tol(pair.tolerances.update), |_, p, y| {
        let q = (pair.translator)(p, y)?;
        let a = pair.prior.at(&q, &cfg.quad)?;
        let r = match pair.model.obs_space() {
            ObsSpace::Finite(_) => pull_pdf(
                &pair.model,
                &ObsRandVar::point(pair.model.obs_space(), y)?,
                &cfg.quad,
            )?,
            ObsSpace::RealLine(_) => pair.model.likelihood(y)?,
        };
        let b = update_pdf(&pair.prior.at(p, &cfg.quad)?, &r, &cfg.quad)?;
        state_distance(&State::Pdf(a), &State::Pdf(b), cfg)
    })
}

/// Exact parameter match for Dirichlet pairs: fits the exponents of the inversion
/// posterior's log density at `n + 1` interior points and compares them with `h(p, y)`.
pub fn check_inversion_parameters(pair: &ConjugatePair, cfg: &CheckConfig) -> Result<CheckReport> {
    cfg.validate()?;
    let PairKind::DirichletMult { n } = pair.kind else {
        return Err(Error::Unsupported(format!(
            "exponent fit for {}",
            pair.name
        )));
    };
    let name = format!("inversion-parameters[{}]", pair.name);
    // barycentre and the points pulled toward each vertex
    let mut pts = vec![vec![1.0 / n as f64; n]];
    for k in 0..n {
        let mut v = vec![0.2 / (n - 1) as f64; n];
        v[k] = 0.8;
        pts.push(v);
    }
    run_probes(pair, name, 1e-9, |_, p, y| {
        let q = (pair.translator)(p, y)?;
        let post = inversion_pdf(&pair.model, &pair.prior.at(p, &cfg.quad)?, y, &cfg.quad)?;
        // log b(x) = c + Σ e_j ln x_j
        let mut rows = Vec::with_capacity(n + 1);
        let mut rhs = Vec::with_capacity(n + 1);
        for full in &pts {
            let mut row = vec![1.0];
            row.extend(full.iter().map(|v| v.ln()));
            rows.push(row);
            rhs.push(post.density(&full[..n - 1]).ln());
        }
        let sol = solve(rows, rhs)?;
        Ok(sol[1..]
            .iter()
            .zip(&q)
            .map(|(e, a)| (e + 1.0 - a).abs())
            .fold(0.0, f64::max))
    })
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty");
        if a[piv][col].abs() < 1e-300 {
            return Err(Error::domain("singular exponent-fit system"));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Ok(x)
}

/// A state on any carrier the checks handle.
#[derive(Debug, Clone)]
pub enum State {
    Point(PointMass),
    Pdf(PdfState),
    Finite(FiniteDist),
}

/// Distance between two states on the same carrier.
///
/// One-dimensional densities: the larger of the sup density gap on an evenly spaced grid
/// over both supports (points where either density is infinite are skipped) and the
/// largest CDF gap at the quantiles `0, 1/(k-1), ..., 1` of the equal mixture of the two.
/// Simplex densities of dimension ≥ 2: a Monte Carlo estimate of the L1 distance.
/// Finite and point states: total variation.
pub fn state_distance(a: &State, b: &State, cfg: &CheckConfig) -> Result<f64> {
    match (a, b) {
        (State::Finite(x), State::Finite(y)) => x.total_variation(y),
        (State::Point(x), State::Point(y)) => {
            if x.carrier != y.carrier {
                return Err(Error::mismatch("point states on different carriers"));
            }
            Ok(if x.at == y.at { 0.0 } else { 1.0 })
        }
        (State::Point(p), State::Pdf(s)) | (State::Pdf(s), State::Point(p)) => {
            if s.support().dim() != 1 || !p.carrier.contains(s.support().first_axis().lo) {
                return Err(Error::mismatch(
                    "point and density states on different carriers",
                ));
            }
            // a point mass and a diffuse state are mutually singular
            Ok(1.0)
        }
        (State::Pdf(x), State::Pdf(y)) => pdf_distance(x, y, cfg),
        _ => Err(Error::mismatch("finite state vs continuous state")),
    }
}

fn pdf_distance(a: &PdfState, b: &PdfState, cfg: &CheckConfig) -> Result<f64> {
    let (da, db) = (a.support(), b.support());
    match (da, db) {
        (Domain::Simplex(n), Domain::Simplex(m)) if n != m => {
            Err(Error::mismatch(format!("simplex {n} vs simplex {m}")))
        }
        (Domain::Simplex(n), Domain::Simplex(_)) if *n > 2 => {
            let mut s = SeededSampler::new(cfg.seed);
            let pts = simplex_sample(*n, cfg.mc_samples, &mut s)?;
            let vol = da.volume();
            let sum: f64 = pts
                .iter()
                .map(|full| {
                    let x = &full[..n - 1];
                    let d = (a.density(x) - b.density(x)).abs();
                    if d.is_finite() {
                        d
                    } else {
                        0.0
                    }
                })
                .sum();
            Ok(vol * sum / pts.len() as f64)
        }
        (Domain::Interval(_), Domain::Simplex(_)) | (Domain::Simplex(_), Domain::Interval(_)) => {
            Err(Error::mismatch("interval state vs simplex state"))
        }
        _ => line_distance(a, b, cfg),
    }
}

fn line_distance(a: &PdfState, b: &PdfState, cfg: &CheckConfig) -> Result<f64> {
    let span = a.support().first_axis().hull(&b.support().first_axis());
    let grid = span.grid(cfg.grid_points);
    let mut sup = 0.0f64;
    for &x in &grid {
        let (u, v) = (a.eval(x), b.eval(x));
        if u.is_finite() && v.is_finite() {
            sup = sup.max((u - v).abs());
        }
    }
    // a fixed-rule mixture CDF on the grid only locates the probe points
    let rule = GaussRule::new(8);
    let mut cum = vec![0.0];
    for w in grid.windows(2) {
        let m = 0.5
            * (rule.estimate(|x| a.eval(x), w[0], w[1]) + rule.estimate(|x| b.eval(x), w[0], w[1]));
        cum.push(cum.last().expect("non-empty") + m);
    }
    let total = *cum.last().expect("non-empty");
    let mut gap = 0.0f64;
    for k in 0..cfg.cdf_probes {
        let level = total * k as f64 / (cfg.cdf_probes - 1) as f64;
        let i = cum.partition_point(|&c| c < level).clamp(1, grid.len() - 1);
        let (c0, c1) = (cum[i - 1], cum[i]);
        let frac = if c1 > c0 {
            ((level - c0) / (c1 - c0)).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let t = grid[i - 1] + frac * (grid[i] - grid[i - 1]);
        gap = gap.max((a.cdf(t, &cfg.quad)? - b.cdf(t, &cfg.quad)?).abs());
    }
    Ok(sup.max(gap))
}

/// Copy-commutation check: compares `copy ≫ ω` with `ω ⊗ ω` on a grid of rectangles.
///
/// Point states and finite Dirac states pass exactly. Diffuse states are not deterministic:
/// their report fails, with a discrepancy of at least `1/16 · 3` on the diagonal cells.
pub fn check_deterministic_state(omega: &State, cfg: &CheckConfig) -> Result<CheckReport> {
    let mut per_probe = Vec::new();
    let mut push_probe = |label: String, err: f64| {
        per_probe.push(ProbeVerdict {
            params: Vec::new(),
            obs: label,
            err,
            passed: err == 0.0,
        })
    };
    let name = match omega {
        State::Point(p) => {
            let cells = p.carrier.cells(4);
            for m in &cells {
                for n in &cells {
                    let copy = match m.intersect(n) {
                        Some(mn) => p.mass(&mn),
                        None => 0.0,
                    };
                    push_probe(format!("{m:?}x{n:?}"), (copy - p.mass(m) * p.mass(n)).abs());
                }
            }
            "deterministic[point]"
        }
        State::Pdf(s) => {
            let carrier = first_axis_interval(s.support())?;
            let graph = graph_push(&ContChannel::identity(), s)?;
            let cells = carrier.cells(4);
            for m in &cells {
                for n in &cells {
                    let copy = graph.mass(m, &ObsEvent::Interval(*n), &cfg.quad)?;
                    let prod = s.mass(m, &cfg.quad)? * s.mass(n, &cfg.quad)?;
                    push_probe(format!("{m:?}x{n:?}"), (copy - prod).abs());
                }
            }
            "deterministic[density]"
        }
        State::Finite(d) => {
            let joint = push(&copy_channel(d.space()), d)?;
            let w = d.weights();
            for i in 0..w.len() {
                for j in 0..w.len() {
                    let copy = joint.weights()[joint.space().pair_index(i, j)];
                    push_probe(
                        format!("({},{})", d.space().label(i), d.space().label(j)),
                        (copy - w[i] * w[j]).abs(),
                    );
                }
            }
            "deterministic[finite]"
        }
    };
    Ok(CheckReport::from_errors(name, 0.0, per_probe))
}

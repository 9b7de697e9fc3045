//! Density-represented probability: pdf-states, pdf-channels, likelihood channels with
//! finite or real observation spaces, and the transformation, conditioning and
//! inversion operations over them.
//!
//! States keep their density as a closure plus a declared support; nothing is sampled
//! onto a grid. Closures that need an inner integral return `NaN` when that integral
//! fails, which surfaces as [`Error::NonFinite`] in the next integration.

use std::cell::Cell;
use std::fmt;
use std::sync::Arc;

use crate::discrete::{FiniteDist, RandVarD, Space, MIN_VALIDITY};
use crate::error::{Error, Result};
use crate::numerics::{integrate_1d, Domain, Interval, QuadConfig};

/// Normalization slack accepted for produced states.
pub const NORM_TOL: f64 = 1e-6;

pub type DensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type KernelFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type LikelihoodFn = Arc<dyn Fn(&[f64], Obs) -> f64 + Send + Sync>;
pub type WindowFn = Arc<dyn Fn(&[f64], f64) -> Interval + Send + Sync>;
pub type ParamCheck = Arc<dyn Fn(&[f64]) -> Result<()> + Send + Sync>;

/// Runs `body` with a slot an inner closure can park its error in.
fn with_failure_slot<T>(body: impl FnOnce(&Cell<Option<Error>>) -> Result<T>) -> Result<T> {
    let slot = Cell::new(None);
    let out = body(&slot);
    match slot.into_inner() {
        Some(e) => Err(e),
        None => out,
    }
}

/// A state given by a density on a finite interval or a simplex.
#[derive(Clone)]
pub struct PdfState {
    density: DensityFn,
    support: Domain,
    norm_checked: bool,
    evidence: Option<f64>,
}

impl fmt::Debug for PdfState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PdfState")
            .field("support", &self.support)
            .field("norm_checked", &self.norm_checked)
            .field("evidence", &self.evidence)
            .finish()
    }
}

impl PdfState {
    /// Wraps a density whose normalization is known analytically.
    pub fn from_normalized(density: DensityFn, support: Domain) -> Result<Self> {
        check_support(&support)?;
        Ok(Self {
            density,
            support,
            norm_checked: false,
            evidence: None,
        })
    }

    /// Wraps a density and verifies `∫ density = 1 ± 1e-6`.
    pub fn new_checked(density: DensityFn, support: Domain, cfg: &QuadConfig) -> Result<Self> {
        let mut s = Self::from_normalized(density, support)?;
        s.verify_normalization(cfg)?;
        Ok(s)
    }

    pub fn verify_normalization(&mut self, cfg: &QuadConfig) -> Result<()> {
        let total = self.total_mass(cfg)?;
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::domain(format!(
                "density integrates to {total}, not 1"
            )));
        }
        self.norm_checked = true;
        Ok(())
    }

    /// Uniform density on a finite interval.
    pub fn uniform(interval: Interval) -> Result<Self> {
        let h = 1.0 / interval.width();
        Self::from_normalized(Arc::new(move |_| h), Domain::Interval(interval))
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        (self.density)(x)
    }

    /// Density at a point of a one-dimensional carrier.
    pub fn eval(&self, x: f64) -> f64 {
        (self.density)(&[x])
    }

    pub fn density_fn(&self) -> &DensityFn {
        &self.density
    }

    pub fn support(&self) -> &Domain {
        &self.support
    }

    pub fn norm_checked(&self) -> bool {
        self.norm_checked
    }

    /// The normalization constant this state was divided by, for posteriors.
    pub fn evidence(&self) -> Option<f64> {
        self.evidence
    }

    pub fn total_mass(&self, cfg: &QuadConfig) -> Result<f64> {
        self.support.integrate(&*self.density, cfg)
    }

    /// Mass of the part of the support whose first coordinate lies in `cell`.
    pub fn mass(&self, cell: &Interval, cfg: &QuadConfig) -> Result<f64> {
        self.support.integrate_slab(*cell, &*self.density, cfg)
    }

    /// Distribution function of the first coordinate.
    pub fn cdf(&self, t: f64, cfg: &QuadConfig) -> Result<f64> {
        let axis = self.support.first_axis();
        if t <= axis.lo {
            return Ok(0.0);
        }
        self.mass(
            &Interval {
                lo: axis.lo,
                hi: t.min(axis.hi),
            },
            cfg,
        )
    }

    /// `∫ g · f` over the support.
    pub fn expect(&self, g: &dyn Fn(&[f64]) -> f64, cfg: &QuadConfig) -> Result<f64> {
        let f = &self.density;
        self.support.integrate(&|x| f(x) * g(x), cfg)
    }
}

fn check_support(d: &Domain) -> Result<()> {
    match d {
        Domain::Interval(i) if !i.is_finite() => Err(Error::domain(
            "state supports must be finite windows; truncate the real line first",
        )),
        Domain::Simplex(n) if *n < 2 => Err(Error::domain("simplex needs n >= 2")),
        _ => Ok(()),
    }
}

/// Where a channel's output lives, possibly depending on its input.
#[derive(Clone)]
pub enum OutSupport {
    Fixed(Domain),
    /// Input-dependent window; the second argument is the Gaussian truncation width in sds.
    Window(WindowFn),
}

impl fmt::Debug for OutSupport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutSupport::Fixed(d) => write!(f, "Fixed({d:?})"),
            OutSupport::Window(_) => write!(f, "Window(..)"),
        }
    }
}

impl OutSupport {
    pub fn at(&self, x: &[f64], cfg: &QuadConfig) -> Domain {
        match self {
            OutSupport::Fixed(d) => *d,
            OutSupport::Window(w) => Domain::Interval(w(x, cfg.gauss_truncation_sigmas)),
        }
    }

    /// Smallest output domain covering every input in `input`.
    fn hull_over(&self, input: &Domain, cfg: &QuadConfig) -> Result<Domain> {
        match (self, input) {
            (OutSupport::Fixed(d), _) => Ok(*d),
            (OutSupport::Window(w), Domain::Interval(i)) => {
                let s = cfg.gauss_truncation_sigmas;
                Ok(Domain::Interval(w(&[i.lo], s).hull(&w(&[i.hi], s))))
            }
            (OutSupport::Window(_), Domain::Simplex(_)) => Err(Error::Unsupported(
                "input-dependent output windows over simplex inputs".into(),
            )),
        }
    }
}

/// A pdf-channel `∫u`: each input `p` is sent to the state with density `u(p, ·)`.
#[derive(Clone)]
pub struct PdfChannel {
    name: String,
    input_dim: usize,
    kernel: KernelFn,
    out: OutSupport,
    check: Option<ParamCheck>,
}

impl fmt::Debug for PdfChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PdfChannel")
            .field("name", &self.name)
            .field("input_dim", &self.input_dim)
            .field("out", &self.out)
            .finish()
    }
}

impl PdfChannel {
    pub fn new(
        name: impl Into<String>,
        input_dim: usize,
        kernel: KernelFn,
        out: OutSupport,
    ) -> Self {
        Self {
            name: name.into(),
            input_dim,
            kernel,
            out,
            check: None,
        }
    }

    /// Attach a validator for inputs (parameter invariants of a family).
    pub fn with_check(mut self, check: ParamCheck) -> Self {
        self.check = Some(check);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn out_support(&self) -> &OutSupport {
        &self.out
    }

    pub fn kernel(&self, p: &[f64], x: &[f64]) -> f64 {
        (self.kernel)(p, x)
    }

    pub fn validate(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.input_dim {
            return Err(Error::mismatch(format!(
                "{} expects {} input coordinates, got {}",
                self.name,
                self.input_dim,
                p.len()
            )));
        }
        match &self.check {
            Some(c) => c(p),
            None => Ok(()),
        }
    }

    /// The state `c(p)`.
    pub fn at(&self, p: &[f64], cfg: &QuadConfig) -> Result<PdfState> {
        self.validate(p)?;
        let support = self.out.at(p, cfg);
        let kernel = self.kernel.clone();
        let p = p.to_vec();
        PdfState::from_normalized(Arc::new(move |x| kernel(&p, x)), support)
    }
}

/// An observation: an index into a finite observation space, or a real value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Obs {
    Index(usize),
    Real(f64),
}

impl fmt::Display for Obs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Obs::Index(i) => write!(f, "#{i}"),
            Obs::Real(y) => write!(f, "{y}"),
        }
    }
}

#[derive(Clone)]
pub enum ObsSpace {
    Finite(Space),
    /// The real line, truncated around each input by the given window.
    RealLine(WindowFn),
}

impl fmt::Debug for ObsSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObsSpace::Finite(s) => write!(f, "Finite({s:?})"),
            ObsSpace::RealLine(_) => write!(f, "RealLine(..)"),
        }
    }
}

impl ObsSpace {
    pub fn check(&self, y: Obs) -> Result<()> {
        match (self, y) {
            (ObsSpace::Finite(s), Obs::Index(i)) if i < s.len() => Ok(()),
            (ObsSpace::Finite(_), Obs::Index(i)) => Err(Error::UnknownLabel(format!("#{i}"))),
            (ObsSpace::RealLine(_), Obs::Real(v)) if v.is_finite() => Ok(()),
            _ => Err(Error::mismatch(format!(
                "observation {y} does not fit {self:?}"
            ))),
        }
    }

    /// Observation for a label of a finite space.
    pub fn obs(&self, label: &str) -> Result<Obs> {
        match self {
            ObsSpace::Finite(s) => s.index_of(label).map(Obs::Index),
            ObsSpace::RealLine(_) => label
                .trim()
                .parse::<f64>()
                .map(Obs::Real)
                .map_err(|_| Error::UnknownLabel(label.to_string())),
        }
    }
}

/// A statistical model `d = ∫v` from a continuous carrier to observations.
#[derive(Clone)]
pub struct LikelihoodChannel {
    name: String,
    input_dim: usize,
    kernel: LikelihoodFn,
    obs: ObsSpace,
}

impl fmt::Debug for LikelihoodChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LikelihoodChannel")
            .field("name", &self.name)
            .field("input_dim", &self.input_dim)
            .field("obs", &self.obs)
            .finish()
    }
}

impl LikelihoodChannel {
    pub fn new(
        name: impl Into<String>,
        input_dim: usize,
        kernel: LikelihoodFn,
        obs: ObsSpace,
    ) -> Self {
        Self {
            name: name.into(),
            input_dim,
            kernel,
            obs,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn obs_space(&self) -> &ObsSpace {
        &self.obs
    }

    /// `v(x, y)` without validation.
    pub fn kernel(&self, x: &[f64], y: Obs) -> f64 {
        (self.kernel)(x, y)
    }

    /// The likelihood `v(-, y)` as a random variable on the carrier.
    pub fn likelihood(&self, y: Obs) -> Result<RandVarC> {
        self.obs.check(y)?;
        let k = self.kernel.clone();
        Ok(RandVarC::new(move |x| k(x, y)))
    }

    /// `d(x)` as a finite distribution (finite observation spaces only).
    pub fn row(&self, x: &[f64]) -> Result<FiniteDist> {
        match &self.obs {
            ObsSpace::Finite(s) => {
                let w = (0..s.len())
                    .map(|j| (self.kernel)(x, Obs::Index(j)))
                    .collect();
                FiniteDist::from_unnormalized(s.clone(), w)
            }
            ObsSpace::RealLine(_) => Err(Error::Unsupported("row of a real-valued model".into())),
        }
    }

    /// View a real-valued model as a pdf-channel into the real line.
    pub fn as_pdf_channel(&self) -> Result<PdfChannel> {
        match &self.obs {
            ObsSpace::RealLine(w) => {
                let k = self.kernel.clone();
                Ok(PdfChannel::new(
                    self.name.clone(),
                    self.input_dim,
                    Arc::new(move |x, y| k(x, Obs::Real(y[0]))),
                    OutSupport::Window(w.clone()),
                ))
            }
            ObsSpace::Finite(_) => Err(Error::Unsupported(
                "finite observation spaces have no density channel".into(),
            )),
        }
    }

    /// `d(x)(N)` for an event on the observation space.
    pub fn mass_at(&self, x: &[f64], event: &ObsEvent, cfg: &QuadConfig) -> Result<f64> {
        match (&self.obs, event) {
            (ObsSpace::Finite(s), ObsEvent::Labels(ls)) => {
                let mut acc = 0.0;
                for &j in ls {
                    if j >= s.len() {
                        return Err(Error::UnknownLabel(format!("#{j}")));
                    }
                    acc += (self.kernel)(x, Obs::Index(j));
                }
                Ok(acc)
            }
            (ObsSpace::RealLine(w), ObsEvent::Interval(n)) => {
                let Some(n) = w(x, cfg.gauss_truncation_sigmas).intersect(n) else {
                    return Ok(0.0);
                };
                integrate_1d(|y| (self.kernel)(x, Obs::Real(y)), n, cfg)
            }
            _ => Err(Error::mismatch(
                "event does not match the observation space",
            )),
        }
    }
}

/// A real-valued function on a continuous carrier; a predicate when its range is in `[0, 1]`.
#[derive(Clone)]
pub struct RandVarC {
    f: DensityFn,
}

impl fmt::Debug for RandVarC {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("RandVarC(..)")
    }
}

impl RandVarC {
    pub fn new(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f) }
    }

    pub fn constant(v: f64) -> Self {
        Self::new(move |_| v)
    }

    pub fn truth() -> Self {
        Self::constant(1.0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    /// Pointwise product `r & s`.
    pub fn and(&self, other: &RandVarC) -> RandVarC {
        let (a, b) = (self.f.clone(), other.f.clone());
        Self::new(move |x| a(x) * b(x))
    }

    /// Scalar multiple `a · r`.
    pub fn scale(&self, a: f64) -> RandVarC {
        let f = self.f.clone();
        Self::new(move |x| a * f(x))
    }
}

/// A random variable on an observation space.
#[derive(Clone)]
pub enum ObsRandVar {
    Finite(RandVarD),
    Real(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl ObsRandVar {
    /// Point predicate `1_{y}` on a finite observation space.
    pub fn point(space: &ObsSpace, y: Obs) -> Result<Self> {
        space.check(y)?;
        match (space, y) {
            (ObsSpace::Finite(s), Obs::Index(i)) => {
                Ok(ObsRandVar::Finite(RandVarD::point(s, s.label(i))?))
            }
            _ => Err(Error::Unsupported(
                "point predicates on the real line are null; use the likelihood v(-, y)".into(),
            )),
        }
    }

    pub fn truth(space: &ObsSpace) -> Self {
        match space {
            ObsSpace::Finite(s) => ObsRandVar::Finite(RandVarD::truth(s)),
            ObsSpace::RealLine(_) => ObsRandVar::Real(Arc::new(|_| 1.0)),
        }
    }
}

/// An event on an observation space: a set of label indices or an interval.
#[derive(Debug, Clone, PartialEq)]
pub enum ObsEvent {
    Labels(Vec<usize>),
    Interval(Interval),
}

/// Result of pushing a state through a model.
#[derive(Debug, Clone)]
pub enum PushedObs {
    Finite(FiniteDist),
    Real(PdfState),
}

/// State transformation `c ≫ ω` for a pdf-channel:
/// the output density is `y ↦ ∫ f(x)·u(x,y) dx`, and its normalization is re-verified.
pub fn push_pdf(c: &PdfChannel, omega: &PdfState, cfg: &QuadConfig) -> Result<PdfState> {
    if c.input_dim != omega.support.dim() {
        return Err(Error::mismatch(format!(
            "push: {} takes {} coordinates, state has {}",
            c.name,
            c.input_dim,
            omega.support.dim()
        )));
    }
    let out = c.out.hull_over(&omega.support, cfg)?;
    let (f, k, support, cfg2) = (omega.density.clone(), c.kernel.clone(), omega.support, *cfg);
    let density: DensityFn = Arc::new(move |y| {
        support
            .integrate(&|x| f(x) * k(x, y), &cfg2)
            .unwrap_or(f64::NAN)
    });
    PdfState::new_checked(density, out, cfg)
}

/// Push through a model; finite observation spaces give an exact finite distribution.
pub fn push_likelihood(
    c: &LikelihoodChannel,
    omega: &PdfState,
    cfg: &QuadConfig,
) -> Result<PushedObs> {
    if c.input_dim != omega.support.dim() {
        return Err(Error::mismatch("push: model input vs state carrier"));
    }
    match &c.obs {
        ObsSpace::Finite(s) => {
            let mut w = Vec::with_capacity(s.len());
            for j in 0..s.len() {
                let k = &c.kernel;
                w.push(omega.expect(&|x| k(x, Obs::Index(j)), cfg)?);
            }
            Ok(PushedObs::Finite(FiniteDist::from_unnormalized(
                s.clone(),
                w,
            )?))
        }
        ObsSpace::RealLine(_) => Ok(PushedObs::Real(push_pdf(&c.as_pdf_channel()?, omega, cfg)?)),
    }
}

/// Push-forward along a deterministic map `g`: the measure `M ↦ ω(g⁻¹(M))`.
#[derive(Clone)]
pub struct Pushforward {
    state: PdfState,
    map: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl Pushforward {
    pub fn mass(&self, m: &Interval, cfg: &QuadConfig) -> Result<f64> {
        let g = &self.map;
        self.state
            .expect(&|x| if m.contains(g(x[0])) { 1.0 } else { 0.0 }, cfg)
    }

    pub fn cdf(&self, t: f64, cfg: &QuadConfig) -> Result<f64> {
        let g = &self.map;
        self.state
            .expect(&|x| if g(x[0]) <= t { 1.0 } else { 0.0 }, cfg)
    }
}

/// State transformation through the deterministic channel `η ∘ g`.
pub fn push_deterministic(
    g: impl Fn(f64) -> f64 + Send + Sync + 'static,
    omega: &PdfState,
) -> Result<Pushforward> {
    if !matches!(omega.support, Domain::Interval(_)) {
        return Err(Error::Unsupported(
            "deterministic push on simplex carriers".into(),
        ));
    }
    Ok(Pushforward {
        state: omega.clone(),
        map: Arc::new(g),
    })
}

/// Sequential composition `d ∘ c` with kernel `(x, z) ↦ ∫ u(x,y)·v(y,z) dy`.
pub fn compose_pdf(d: &PdfChannel, c: &PdfChannel, cfg: &QuadConfig) -> Result<PdfChannel> {
    let sample_out = c.out.at(&vec![0.0; c.input_dim], cfg);
    if sample_out.dim() != d.input_dim {
        return Err(Error::mismatch(format!(
            "compose: {} outputs {} coordinates, {} takes {}",
            c.name,
            sample_out.dim(),
            d.name,
            d.input_dim
        )));
    }
    let (u, v, c_out, cfg2) = (c.kernel.clone(), d.kernel.clone(), c.out.clone(), *cfg);
    let kernel: KernelFn = Arc::new(move |x, z| {
        c_out
            .at(x, &cfg2)
            .integrate(&|y| u(x, y) * v(y, z), &cfg2)
            .unwrap_or(f64::NAN)
    });
    let out = match (&d.out, &c.out) {
        (OutSupport::Fixed(dom), _) => OutSupport::Fixed(*dom),
        (OutSupport::Window(wd), c_out) => {
            let (wd, c_out) = (wd.clone(), c_out.clone());
            OutSupport::Window(Arc::new(move |x, s| {
                let mid = c_out.at(
                    x,
                    &QuadConfig {
                        gauss_truncation_sigmas: s,
                        ..QuadConfig::default()
                    },
                );
                let i = mid.first_axis();
                wd(&[i.lo], s).hull(&wd(&[i.hi], s))
            }))
        }
    };
    Ok(PdfChannel::new(
        format!("{} . {}", d.name, c.name),
        c.input_dim,
        kernel,
        out,
    ))
}

/// Composition with a graph, `d ∘ ⟨id, c⟩`, whose kernel is
/// `(x, z) ↦ ∫ u(x,y)·v((x,y), z) dy`. `d` takes the pair `(x, y)` as input.
pub fn graph_compose(d: &PdfChannel, c: &PdfChannel, cfg: &QuadConfig) -> Result<PdfChannel> {
    if c.input_dim != 1 || d.input_dim != 2 {
        return Err(Error::mismatch(
            "graph_compose needs c on a line and d on the pair (x, y)",
        ));
    }
    let (u, v, c_out, cfg2) = (c.kernel.clone(), d.kernel.clone(), c.out.clone(), *cfg);
    let kernel: KernelFn = Arc::new(move |x, z| {
        c_out
            .at(x, &cfg2)
            .integrate(&|y| u(x, y) * v(&[x[0], y[0]], z), &cfg2)
            .unwrap_or(f64::NAN)
    });
    let out = match &d.out {
        OutSupport::Fixed(dom) => OutSupport::Fixed(*dom),
        OutSupport::Window(_) => {
            return Err(Error::Unsupported(
                "graph_compose with an input-dependent output window".into(),
            ))
        }
    };
    Ok(PdfChannel::new(
        format!("{} . <id,{}>", d.name, c.name),
        1,
        kernel,
        out,
    ))
}

/// Any channel out of a one-dimensional carrier that a graph can be formed with.
#[derive(Clone)]
pub enum ContChannel {
    Pdf(PdfChannel),
    Likelihood(LikelihoodChannel),
    Deterministic(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl ContChannel {
    pub fn identity() -> Self {
        ContChannel::Deterministic(Arc::new(|x| x))
    }

    /// `c(x)(N)`.
    pub fn mass_at(&self, x: f64, event: &ObsEvent, cfg: &QuadConfig) -> Result<f64> {
        match (self, event) {
            (ContChannel::Pdf(c), ObsEvent::Interval(n)) => c.at(&[x], cfg)?.mass(n, cfg),
            (ContChannel::Likelihood(d), ev) => d.mass_at(&[x], ev, cfg),
            (ContChannel::Deterministic(g), ObsEvent::Interval(n)) => {
                Ok(if n.contains(g(x)) { 1.0 } else { 0.0 })
            }
            _ => Err(Error::mismatch("event does not match the channel's output")),
        }
    }
}

/// The joint state `⟨id, c⟩ ≫ ω`.
#[derive(Clone)]
pub struct JointState {
    state: PdfState,
    channel: ContChannel,
}

/// Form the graph state `⟨id, c⟩ ≫ ω`.
pub fn graph_push(c: &ContChannel, omega: &PdfState) -> Result<JointState> {
    if !matches!(omega.support, Domain::Interval(_)) {
        return Err(Error::Unsupported(
            "graph states over simplex carriers".into(),
        ));
    }
    let input_dim = match c {
        ContChannel::Pdf(p) => p.input_dim,
        ContChannel::Likelihood(l) => l.input_dim,
        ContChannel::Deterministic(_) => 1,
    };
    if input_dim != 1 {
        return Err(Error::mismatch("graph channel input vs state carrier"));
    }
    Ok(JointState {
        state: omega.clone(),
        channel: c.clone(),
    })
}

impl JointState {
    /// Mass of the rectangle `M × N`: `∫_M f(x)·c(x)(N) dx`.
    pub fn mass(&self, m: &Interval, n: &ObsEvent, cfg: &QuadConfig) -> Result<f64> {
        let f = &self.state.density;
        let c = &self.channel;
        with_failure_slot(|slot| {
            self.state
                .mass_weighted(m, cfg, &|x| match c.mass_at(x, n, cfg) {
                    Ok(v) => f(&[x]) * v,
                    Err(e) => {
                        slot.set(Some(e));
                        f64::NAN
                    }
                })
        })
    }

    /// `∫ h d(⟨id,c⟩ ≫ ω)` for a pdf-channel or a finite model.
    pub fn expect(&self, h: &dyn Fn(f64, Obs) -> f64, cfg: &QuadConfig) -> Result<f64> {
        let inner: Box<dyn Fn(f64) -> Result<f64> + '_> = match &self.channel {
            ContChannel::Pdf(c) => Box::new(move |x| {
                let st = c.at(&[x], cfg)?;
                st.expect(&|y| h(x, Obs::Real(y[0])), cfg)
            }),
            ContChannel::Likelihood(d) => match d.obs_space() {
                ObsSpace::Finite(s) => {
                    let n = s.len();
                    Box::new(move |x| {
                        Ok((0..n)
                            .map(|j| d.kernel(&[x], Obs::Index(j)) * h(x, Obs::Index(j)))
                            .sum())
                    })
                }
                ObsSpace::RealLine(_) => {
                    let c = d.as_pdf_channel()?;
                    Box::new(move |x| {
                        let st = c.at(&[x], cfg)?;
                        st.expect(&|y| h(x, Obs::Real(y[0])), cfg)
                    })
                }
            },
            ContChannel::Deterministic(g) => Box::new(move |x| Ok(h(x, Obs::Real(g(x))))),
        };
        with_failure_slot(|slot| {
            self.state.expect(
                &|x| match inner(x[0]) {
                    Ok(v) => v,
                    Err(e) => {
                        slot.set(Some(e));
                        f64::NAN
                    }
                },
                cfg,
            )
        })
    }
}

impl PdfState {
    fn mass_weighted(&self, m: &Interval, cfg: &QuadConfig, g: &dyn Fn(f64) -> f64) -> Result<f64> {
        let Some(m) = self.support.first_axis().intersect(m) else {
            return Ok(0.0);
        };
        integrate_1d(g, m, cfg)
    }
}

/// Order of the iterated integral over a product state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterationOrder {
    /// inner integral over the first factor
    FirstInner,
    /// inner integral over the second factor
    SecondInner,
}

/// `∫∫ h(x, y) dω(x) dρ(y)` for the product state `ω ⊗ ρ`, in the given order.
pub fn integrate_product(
    omega: &PdfState,
    rho: &PdfState,
    h: &dyn Fn(f64, f64) -> f64,
    order: IterationOrder,
    cfg: &QuadConfig,
) -> Result<f64> {
    with_failure_slot(|slot| match order {
        IterationOrder::FirstInner => rho.expect(
            &|y| match omega.expect(&|x| h(x[0], y[0]), cfg) {
                Ok(v) => v,
                Err(e) => {
                    slot.set(Some(e));
                    f64::NAN
                }
            },
            cfg,
        ),
        IterationOrder::SecondInner => omega.expect(
            &|x| match rho.expect(&|y| h(x[0], y[0]), cfg) {
                Ok(v) => v,
                Err(e) => {
                    slot.set(Some(e));
                    f64::NAN
                }
            },
            cfg,
        ),
    })
}

/// Constant channel `x ↦ ρ`, so that `⟨id, const ρ⟩ ≫ ω = ω ⊗ ρ`.
pub fn constant_channel(rho: &PdfState) -> Result<PdfChannel> {
    let Domain::Interval(_) = rho.support else {
        return Err(Error::Unsupported("constant channel into a simplex".into()));
    };
    let f = rho.density.clone();
    Ok(PdfChannel::new(
        "const",
        1,
        Arc::new(move |_, y| f(y)),
        OutSupport::Fixed(rho.support),
    ))
}

/// Validity `ω ⊨ r = ∫ f·r`.
pub fn validity_pdf(omega: &PdfState, r: &RandVarC, cfg: &QuadConfig) -> Result<f64> {
    omega.expect(&*r.f, cfg)
}

/// Predicate transformation `(c ≪ r)(x) = ∫ r d c(x)`, a sum for finite observations.
pub fn pull_pdf(c: &LikelihoodChannel, r: &ObsRandVar, cfg: &QuadConfig) -> Result<RandVarC> {
    match (&c.obs, r) {
        (ObsSpace::Finite(s), ObsRandVar::Finite(rv)) => {
            if rv.space() != s {
                return Err(Error::mismatch(
                    "pull: random variable vs observation space",
                ));
            }
            let (k, vals) = (c.kernel.clone(), rv.values().to_vec());
            Ok(RandVarC::new(move |x| {
                vals.iter()
                    .enumerate()
                    .map(|(j, v)| k(x, Obs::Index(j)) * v)
                    .sum()
            }))
        }
        (ObsSpace::RealLine(w), ObsRandVar::Real(g)) => {
            let (k, w, g, cfg2) = (c.kernel.clone(), w.clone(), g.clone(), *cfg);
            Ok(RandVarC::new(move |x| {
                integrate_1d(
                    |y| k(x, Obs::Real(y)) * g(y),
                    w(x, cfg2.gauss_truncation_sigmas),
                    &cfg2,
                )
                .unwrap_or(f64::NAN)
            }))
        }
        _ => Err(Error::mismatch(
            "pull: random variable vs observation space",
        )),
    }
}

/// Validity of an observation-space random variable in a pushed state.
pub fn validity_obs(pushed: &PushedObs, r: &ObsRandVar, cfg: &QuadConfig) -> Result<f64> {
    match (pushed, r) {
        (PushedObs::Finite(d), ObsRandVar::Finite(rv)) => crate::discrete::validity(d, rv),
        (PushedObs::Real(s), ObsRandVar::Real(g)) => s.expect(&|y| g(y[0]), cfg),
        _ => Err(Error::mismatch("validity: random variable vs pushed state")),
    }
}

/// Conditioning `ω|_r` with density `x ↦ f(x)·r(x) / (ω ⊨ r)`.
pub fn update_pdf(omega: &PdfState, r: &RandVarC, cfg: &QuadConfig) -> Result<PdfState> {
    let f = &omega.density;
    let negative = Cell::new(false);
    let z = omega.support.integrate(
        &|x| {
            let (fx, rx) = (f(x), r.eval(x));
            if rx < 0.0 && fx > 0.0 {
                negative.set(true);
            }
            fx * rx
        },
        cfg,
    )?;
    if negative.get() {
        return Err(Error::domain("update needs a non-negative random variable"));
    }
    if !(z > MIN_VALIDITY) {
        return Err(Error::ZeroValidity(z));
    }
    let (f, rf) = (omega.density.clone(), r.f.clone());
    Ok(PdfState {
        density: Arc::new(move |x| f(x) * rf(x) / z),
        support: omega.support,
        norm_checked: false,
        evidence: Some(z),
    })
}

/// Bayesian inversion `c†_ω(y)` with density `x ↦ f(x)·v(x,y) / ∫ f·v(-,y)`.
pub fn inversion_pdf(
    c: &LikelihoodChannel,
    omega: &PdfState,
    y: Obs,
    cfg: &QuadConfig,
) -> Result<PdfState> {
    if c.input_dim != omega.support.dim() {
        return Err(Error::mismatch("inversion: model input vs state carrier"));
    }
    c.obs.check(y)?;
    let (f, k) = (omega.density.clone(), c.kernel.clone());
    let z = omega.support.integrate(&|x| f(x) * k(x, y), cfg)?;
    if !(z > MIN_VALIDITY) {
        return Err(Error::ZeroMassObservation(y.to_string()));
    }
    Ok(PdfState {
        density: Arc::new(move |x| f(x) * k(x, y) / z),
        support: omega.support,
        norm_checked: false,
        evidence: Some(z),
    })
}

/// A point mass `η(x)` on a one-dimensional carrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMass {
    pub at: f64,
    pub carrier: Interval,
}

impl PointMass {
    pub fn mass(&self, m: &Interval) -> f64 {
        if m.contains(self.at) {
            1.0
        } else {
            0.0
        }
    }
}

/// Largest absolute density difference over `points`, skipping points where either density
/// is not finite (integrable endpoint singularities).
pub fn sup_diff_on(a: &PdfState, b: &PdfState, points: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .filter_map(|x| {
            let (u, v) = (a.density(x), b.density(x));
            (u.is_finite() && v.is_finite()).then(|| (u - v).abs())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cfg() -> QuadConfig {
        QuadConfig::default()
    }

    fn flip() -> LikelihoodChannel {
        LikelihoodChannel::new(
            "flip",
            1,
            Arc::new(|x, y| match y {
                Obs::Index(1) => x[0],
                Obs::Index(0) => 1.0 - x[0],
                _ => f64::NAN,
            }),
            ObsSpace::Finite(Space::new(["0", "1"]).unwrap()),
        )
    }

    fn uniform() -> PdfState {
        PdfState::uniform(Interval::unit()).unwrap()
    }

    fn gauss(x: f64, m: f64, s: f64) -> f64 {
        (-(x - m).powi(2) / (2.0 * s * s)).exp() / ((2.0 * PI).sqrt() * s)
    }

    #[test]
    fn flip_pullbacks() {
        let c = flip();
        let one = pull_pdf(
            &c,
            &ObsRandVar::point(c.obs_space(), Obs::Index(1)).unwrap(),
            &cfg(),
        )
        .unwrap();
        let zero = pull_pdf(
            &c,
            &ObsRandVar::point(c.obs_space(), Obs::Index(0)).unwrap(),
            &cfg(),
        )
        .unwrap();
        let t = pull_pdf(&c, &ObsRandVar::truth(c.obs_space()), &cfg()).unwrap();
        for x in [0.0, 0.3, 0.9] {
            assert!((one.eval(&[x]) - x).abs() < 1e-15);
            assert!((zero.eval(&[x]) - (1.0 - x)).abs() < 1e-15);
            assert!((t.eval(&[x]) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_updated_by_identity_is_beta_2_1() {
        let post = update_pdf(&uniform(), &RandVarC::new(|x| x[0]), &cfg()).unwrap();
        for x in Interval::unit().grid(101) {
            assert!((post.eval(x) - 2.0 * x).abs() < 1e-9);
        }
        assert!((post.evidence().unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn scalar_disappears_from_update() {
        let r = RandVarC::new(|x| 0.2 + x[0] * x[0]);
        let a = update_pdf(&uniform(), &r, &cfg()).unwrap();
        let b = update_pdf(&uniform(), &r.scale(2.5), &cfg()).unwrap();
        let grid: Vec<Vec<f64>> = Interval::unit()
            .grid(101)
            .into_iter()
            .map(|x| vec![x])
            .collect();
        assert!(sup_diff_on(&a, &b, &grid) < 1e-9);
    }

    #[test]
    fn zero_validity_and_zero_mass() {
        let zero = RandVarC::constant(0.0);
        assert!(matches!(
            update_pdf(&uniform(), &zero, &cfg()),
            Err(Error::ZeroValidity(_))
        ));
        let point = PdfState::from_normalized(
            Arc::new(|x| if x[0] < 0.5 { 2.0 } else { 0.0 }),
            Domain::Interval(Interval::unit()),
        )
        .unwrap();
        let only_high = LikelihoodChannel::new(
            "step",
            1,
            Arc::new(|x, y| match y {
                Obs::Index(1) => (x[0] >= 0.5) as u8 as f64,
                _ => (x[0] < 0.5) as u8 as f64,
            }),
            ObsSpace::Finite(Space::new(["0", "1"]).unwrap()),
        );
        assert!(matches!(
            inversion_pdf(&only_high, &point, Obs::Index(1), &cfg()),
            Err(Error::ZeroMassObservation(_))
        ));
        assert!(update_pdf(&uniform(), &RandVarC::constant(-1.0), &cfg()).is_err());
    }

    #[test]
    fn validity_of_truth_and_flip() {
        assert!(
            (validity_pdf(&uniform(), &RandVarC::truth(), &cfg()).unwrap() - 1.0).abs() < 1e-14
        );
        let c = flip();
        let r = pull_pdf(
            &c,
            &ObsRandVar::point(c.obs_space(), Obs::Index(1)).unwrap(),
            &cfg(),
        )
        .unwrap();
        assert!((validity_pdf(&uniform(), &r, &cfg()).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn constant_kernel_push_returns_its_density() {
        let g = |y: f64| 3.0 * y * y;
        let c = PdfChannel::new(
            "const",
            1,
            Arc::new(move |_, y| g(y[0])),
            OutSupport::Fixed(Domain::Interval(Interval::unit())),
        );
        let beta21 =
            PdfState::from_normalized(Arc::new(|x| 2.0 * x[0]), Domain::Interval(Interval::unit()))
                .unwrap();
        let out = push_pdf(&c, &beta21, &cfg()).unwrap();
        assert!(out.norm_checked());
        for y in [0.0, 0.25, 0.5, 1.0] {
            assert!((out.eval(y) - g(y)).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_convolution() {
        let c = cfg();
        let noise = PdfChannel::new(
            "norm(-,1)",
            1,
            Arc::new(|x, y| gauss(y[0], x[0], 1.0)),
            OutSupport::Window(Arc::new(|x, s| Interval::around(x[0], s).unwrap())),
        );
        let prior = PdfState::from_normalized(
            Arc::new(|x| gauss(x[0], 0.0, 1.0)),
            Domain::Interval(Interval::around(0.0, 12.0).unwrap()),
        )
        .unwrap();
        let out = push_pdf(&noise, &prior, &c).unwrap();
        let grid = Interval::around(0.0, 6.0).unwrap().grid(101);
        let err = grid
            .iter()
            .map(|&y| (out.eval(y) - gauss(y, 0.0, 2f64.sqrt())).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn squared_pushforward_cdf() {
        let p = push_deterministic(|x| x * x, &uniform()).unwrap();
        for t in [0.25, 0.81] {
            assert!((p.cdf(t, &cfg()).unwrap() - t.sqrt()).abs() < 1e-8);
        }
    }

    #[test]
    fn compose_gaussians() {
        let c = cfg();
        let k = |s: f64| {
            PdfChannel::new(
                format!("n{s}"),
                1,
                Arc::new(move |x, y| gauss(y[0], x[0], s)),
                OutSupport::Window(Arc::new(move |x, w| Interval::around(x[0], w * s).unwrap())),
            )
        };
        let (s1, s2) = (0.6, 0.8);
        let comp = compose_pdf(&k(s2), &k(s1), &c).unwrap();
        let tot = (s1 * s1 + s2 * s2).sqrt();
        for (x, z) in [(0.0, 0.0), (0.5, 1.5), (-1.0, 0.3)] {
            assert!((comp.kernel(&[x], &[z]) - gauss(z, x, tot)).abs() < 1e-9);
        }
        let st = comp.at(&[0.2], &c).unwrap();
        assert!((st.total_mass(&c).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn narrow_kernel_approximates_identity() {
        let c = cfg();
        let inner = PdfChannel::new(
            "beta-ish",
            1,
            Arc::new(|_, y| 2.0 * y[0]),
            OutSupport::Fixed(Domain::Interval(Interval::unit())),
        );
        let narrow = |w: f64| {
            PdfChannel::new(
                "narrow",
                1,
                Arc::new(move |x, y| gauss(y[0], x[0], w)),
                OutSupport::Window(Arc::new(move |x, s| Interval::around(x[0], s * w).unwrap())),
            )
        };
        let mut last = f64::INFINITY;
        for w in [0.1, 0.03, 0.01] {
            let comp = compose_pdf(&narrow(w), &inner, &c).unwrap();
            let err = [0.3, 0.5, 0.7]
                .iter()
                .map(|&z| (comp.kernel(&[0.0], &[z]) - 2.0 * z).abs())
                .fold(0.0, f64::max);
            assert!(err <= last);
            last = err;
        }
        assert!(last < 1e-6);
    }

    #[test]
    fn graph_masses() {
        let c = cfg();
        let id_graph = graph_push(&ContChannel::identity(), &uniform()).unwrap();
        let m = Interval::new(0.0, 0.6).unwrap();
        let n = ObsEvent::Interval(Interval::new(0.4, 1.0).unwrap());
        assert!((id_graph.mass(&m, &n, &c).unwrap() - 0.2).abs() < 1e-9);
        let flip_graph = graph_push(&ContChannel::Likelihood(flip()), &uniform()).unwrap();
        let heads = flip_graph
            .mass(&Interval::unit(), &ObsEvent::Labels(vec![1]), &c)
            .unwrap();
        assert!((heads - 0.5).abs() < 1e-14);
    }

    #[test]
    fn fubini_on_uniform_square() {
        let c = cfg();
        let h = |x: f64, y: f64| x * y;
        let a =
            integrate_product(&uniform(), &uniform(), &h, IterationOrder::FirstInner, &c).unwrap();
        let b =
            integrate_product(&uniform(), &uniform(), &h, IterationOrder::SecondInner, &c).unwrap();
        let joint = graph_push(
            &ContChannel::Pdf(constant_channel(&uniform()).unwrap()),
            &uniform(),
        )
        .unwrap();
        let j = joint
            .expect(
                &|x, y| match y {
                    Obs::Real(y) => h(x, y),
                    Obs::Index(_) => f64::NAN,
                },
                &c,
            )
            .unwrap();
        for v in [a, b, j] {
            assert!((v - 0.25).abs() < 1e-13, "{v}");
        }
    }

    #[test]
    fn inversion_constant_likelihood_is_prior() {
        let c = LikelihoodChannel::new(
            "const",
            1,
            Arc::new(|_, y| if y == Obs::Index(0) { 0.3 } else { 0.7 }),
            ObsSpace::Finite(Space::new(["0", "1"]).unwrap()),
        );
        let prior =
            PdfState::from_normalized(Arc::new(|x| 2.0 * x[0]), Domain::Interval(Interval::unit()))
                .unwrap();
        let post = inversion_pdf(&c, &prior, Obs::Index(1), &cfg()).unwrap();
        for x in [0.1, 0.5, 0.9] {
            assert!((post.eval(x) - prior.eval(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn carrier_checks() {
        let st = PdfState::from_normalized(Arc::new(|_| 2.0), Domain::Simplex(3)).unwrap();
        assert!(matches!(
            inversion_pdf(&flip(), &st, Obs::Index(1), &cfg()),
            Err(Error::CarrierMismatch(_))
        ));
        assert!(inversion_pdf(&flip(), &uniform(), Obs::Index(2), &cfg()).is_err());
        assert!(inversion_pdf(&flip(), &uniform(), Obs::Real(0.5), &cfg()).is_err());
        assert!(PdfState::from_normalized(
            Arc::new(|_| 1.0),
            Domain::Interval(Interval::real_line())
        )
        .is_err());
    }

    #[test]
    fn checked_normalization_rejects_bad_density() {
        let bad = PdfState::new_checked(
            Arc::new(|_| 2.0),
            Domain::Interval(Interval::unit()),
            &cfg(),
        );
        assert!(bad.is_err());
    }

    #[test]
    fn joint_expectation_weights_once() {
        let w = PdfState::uniform(Interval::unit()).unwrap();
        let g = graph_push(&ContChannel::Likelihood(flip()), &w).unwrap();
        let one = g.expect(&|_, _| 1.0, &cfg()).unwrap();
        assert!((one - 1.0).abs() < 1e-12);
        // E[x·1{y=1}] = ∫ x² dx
        let heads = g
            .expect(&|x, y| if y == Obs::Index(1) { x } else { 0.0 }, &cfg())
            .unwrap();
        assert!((heads - 1.0 / 3.0).abs() < 1e-12);
    }
}

//! Adaptive composite Gauss–Legendre quadrature on intervals and on low-dimensional simplices.

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real interval `[lo, hi]`.
///
/// Infinite endpoints are allowed so that a carrier such as the real line can be
/// described, but they must be replaced by a finite window before integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::domain(format!(
                "interval needs lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn unit() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }

    pub fn real_line() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    /// `center ± half_width`.
    pub fn around(center: f64, half_width: f64) -> Result<Self> {
        Self::new(center - half_width, center + half_width)
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo < hi).then_some(Interval { lo, hi })
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Replace infinite endpoints by the finite bounds of `window`.
    pub fn truncate(&self, window: &Interval) -> Result<Interval> {
        let lo = if self.lo.is_finite() {
            self.lo
        } else {
            window.lo
        };
        let hi = if self.hi.is_finite() {
            self.hi
        } else {
            window.hi
        };
        let out = Interval::new(lo, hi)?;
        if !out.is_finite() {
            return Err(Error::domain("truncation window must be finite"));
        }
        Ok(out)
    }

    /// `n` equally spaced points including both endpoints.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        if n < 2 {
            return vec![0.5 * (self.lo + self.hi)];
        }
        let step = self.width() / (n - 1) as f64;
        (0..n)
            .map(|k| {
                if k == n - 1 {
                    self.hi
                } else {
                    self.lo + step * k as f64
                }
            })
            .collect()
    }

    /// Split into `n` equal cells.
    pub fn cells(&self, n: usize) -> Vec<Interval> {
        let pts = self.grid(n + 1);
        pts.windows(2)
            .map(|w| Interval { lo: w[0], hi: w[1] })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadConfig {
    pub nodes_per_panel: usize,
    pub max_panels: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Half-width, in standard deviations, of the window replacing the real line for Gaussians.
    pub gauss_truncation_sigmas: f64,
    /// Panels the interval is cut into before adaptive refinement starts.
    pub min_panels: usize,
    /// Panels `[a, b]` with `b - a` below this multiple of `max(|a|, |b|)` are not refined
    /// further and drop out of the convergence test; guards singularities at points like
    /// `x = 1`, where floating point cannot resolve `1 - x` any finer.
    pub min_rel_width: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            nodes_per_panel: 16,
            max_panels: 1 << 14,
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            gauss_truncation_sigmas: 12.0,
            min_panels: 8,
            min_rel_width: 1e-13,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_panel < 2 {
            return Err(Error::InvalidConfig(
                "nodes_per_panel must be at least 2".into(),
            ));
        }
        if self.max_panels == 0 || self.min_panels == 0 || self.min_panels > self.max_panels {
            return Err(Error::InvalidConfig(
                "need 0 < min_panels <= max_panels".into(),
            ));
        }
        for (name, v) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must lie in (0, 1), got {v}"
                )));
            }
        }
        if !(self.min_rel_width > 0.0 && self.min_rel_width < 1e-3) {
            return Err(Error::InvalidConfig(
                "min_rel_width must lie in (0, 1e-3)".into(),
            ));
        }
        if !(self.gauss_truncation_sigmas > 0.0) || !self.gauss_truncation_sigmas.is_finite() {
            return Err(Error::InvalidConfig(
                "gauss_truncation_sigmas must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Newton iteration on the Legendre recurrence; nodes are returned in increasing order.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, d) = legendre(n, z);
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, z);
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Fixed (non-adaptive) rule on `[a, b]`; non-finite values count as zero.
    pub fn estimate(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let (half, mid) = (0.5 * (b - a), 0.5 * (a + b));
        let acc: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(z, w)| {
                let v = f(mid + half * z);
                if v.is_finite() {
                    w * v
                } else {
                    0.0
                }
            })
            .sum();
        acc * half
    }

    fn apply(&self, f: &mut dyn FnMut(f64) -> Result<f64>, a: f64, b: f64) -> Result<f64> {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (z, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * z)?;
        }
        Ok(acc * half)
    }
}

/// Value and derivative of the Legendre polynomial `P_n` at `z`.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

fn cached_rule(n: usize) -> Arc<GaussRule> {
    static RULES: OnceLock<Mutex<HashMap<usize, Arc<GaussRule>>>> = OnceLock::new();
    let map = RULES.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = map.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| Arc::new(GaussRule::new(n)))
        .clone()
}

/// Result of an adaptive integration with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

struct Panel {
    a: f64,
    b: f64,
    left: f64,
    right: f64,
    err: f64,
}

impl Panel {
    fn fine(&self) -> f64 {
        self.left + self.right
    }
}

struct ByError(Panel);

impl PartialEq for ByError {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for ByError {}
impl PartialOrd for ByError {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for ByError {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .err
            .total_cmp(&other.0.err)
            .then_with(|| other.0.a.total_cmp(&self.0.a))
    }
}

/// Adaptive composite Gauss–Legendre integration of `f` over a finite interval.
///
/// Each panel is estimated once with the full rule and once as the sum of the rule on its
/// two halves; the difference is the panel's error estimate. The panel with the largest
/// error is bisected until the summed error is below `max(abs_tol, rel_tol * |value|)`.
/// Panels too narrow to resolve relative to their position (see `min_rel_width`) are frozen:
/// they keep their estimate, their error is reported but no longer drives refinement.
/// Panel sums are accumulated in left-to-right order, so the result is deterministic.
pub fn integrate_adaptive(
    f: impl Fn(f64) -> f64,
    domain: Interval,
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    cfg.validate()?;
    if !domain.is_finite() {
        return Err(Error::domain(
            "integration domain must be truncated to a finite window",
        ));
    }
    let rule = cached_rule(cfg.nodes_per_panel);
    let mut eval = |x: f64| -> Result<f64> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { x })
        }
    };

    let make_panel = |a: f64, b: f64, coarse: f64, eval: &mut dyn FnMut(f64) -> Result<f64>| {
        let m = 0.5 * (a + b);
        let left = rule.apply(eval, a, m)?;
        let right = rule.apply(eval, m, b)?;
        Ok::<_, Error>(Panel {
            a,
            b,
            left,
            right,
            err: (coarse - (left + right)).abs(),
        })
    };

    let mut heap = BinaryHeap::new();
    let mut frozen: Vec<Panel> = Vec::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for cell in domain.cells(cfg.min_panels) {
        let coarse = rule.apply(&mut eval, cell.lo, cell.hi)?;
        let p = make_panel(cell.lo, cell.hi, coarse, &mut eval)?;
        total += p.fine();
        total_err += p.err;
        heap.push(ByError(p));
    }

    loop {
        let target = cfg.abs_tol.max(cfg.rel_tol * total.abs());
        if total_err <= target {
            // running sums drift; confirm with an ordered recomputation
            let (value, error, live_err) = ordered_sums(&heap, &frozen);
            if live_err <= cfg.abs_tol.max(cfg.rel_tol * value.abs()) {
                return Ok(QuadResult {
                    value,
                    error,
                    panels: heap.len() + frozen.len(),
                });
            }
            total = value;
            total_err = live_err;
        }
        if heap.len() + frozen.len() >= cfg.max_panels {
            let (value, error, _) = ordered_sums(&heap, &frozen);
            return Err(Error::NonConvergent {
                panels: heap.len() + frozen.len(),
                estimate: value,
                error,
            });
        }
        let Some(ByError(worst)) = heap.pop() else {
            // everything frozen: the remaining error sits at unresolvable widths
            let (value, error, _) = ordered_sums(&heap, &frozen);
            return Ok(QuadResult {
                value,
                error,
                panels: frozen.len(),
            });
        };
        let m = 0.5 * (worst.a + worst.b);
        if worst.b - worst.a < cfg.min_rel_width * worst.a.abs().max(worst.b.abs())
            || !(worst.a < m && m < worst.b)
        {
            total_err -= worst.err;
            frozen.push(worst);
            continue;
        }
        let l = make_panel(worst.a, m, worst.left, &mut eval)?;
        let r = make_panel(m, worst.b, worst.right, &mut eval)?;
        total += l.fine() + r.fine() - worst.fine();
        total_err += l.err + r.err - worst.err;
        heap.push(ByError(l));
        heap.push(ByError(r));
    }
}

/// Value, total error and error of the unfrozen panels, summed left to right.
fn ordered_sums(heap: &BinaryHeap<ByError>, frozen: &[Panel]) -> (f64, f64, f64) {
    let mut panels: Vec<(&Panel, bool)> = heap
        .iter()
        .map(|p| (&p.0, true))
        .chain(frozen.iter().map(|p| (p, false)))
        .collect();
    panels.sort_by(|x, y| x.0.a.total_cmp(&y.0.a));
    panels.iter().fold((0.0, 0.0, 0.0), |(v, e, l), (p, live)| {
        (v + p.fine(), e + p.err, if *live { l + p.err } else { l })
    })
}

/// `∫ f` over a finite interval; see [`integrate_adaptive`].
pub fn integrate_1d(f: impl Fn(f64) -> f64, domain: Interval, cfg: &QuadConfig) -> Result<f64> {
    integrate_adaptive(f, domain, cfg).map(|r| r.value)
}

/// Integration domains for densities: a finite interval or the open probability simplex.
///
/// A simplex over `n` outcomes is parameterized by its first `n - 1` coordinates; the
/// last coordinate is `1 - Σ` of the others.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Interval(Interval),
    Simplex(usize),
}

impl Domain {
    /// Number of free coordinates a point of this domain is passed with.
    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval(_) => 1,
            Domain::Simplex(n) => n - 1,
        }
    }

    /// Range of the first free coordinate.
    pub fn first_axis(&self) -> Interval {
        match self {
            Domain::Interval(i) => *i,
            Domain::Simplex(_) => Interval::unit(),
        }
    }

    /// Lebesgue volume of the domain in its free coordinates.
    pub fn volume(&self) -> f64 {
        match self {
            Domain::Interval(i) => i.width(),
            Domain::Simplex(n) => {
                let k = n - 1;
                1.0 / (1..=k).map(|j| j as f64).product::<f64>()
            }
        }
    }

    /// Whether quadrature (rather than Monte Carlo) is available on this domain.
    pub fn supports_quadrature(&self) -> bool {
        match self {
            Domain::Interval(i) => i.is_finite(),
            Domain::Simplex(n) => *n <= 3,
        }
    }

    pub fn integrate(&self, f: &dyn Fn(&[f64]) -> f64, cfg: &QuadConfig) -> Result<f64> {
        self.integrate_slab(self.first_axis(), f, cfg)
    }

    /// Integral over the part of the domain whose first coordinate lies in `slab`.
    pub fn integrate_slab(
        &self,
        slab: Interval,
        f: &dyn Fn(&[f64]) -> f64,
        cfg: &QuadConfig,
    ) -> Result<f64> {
        let Some(slab) = self.first_axis().intersect(&slab) else {
            return Ok(0.0);
        };
        match *self {
            Domain::Interval(_) => integrate_1d(|x| f(&[x]), slab, cfg),
            Domain::Simplex(2) => integrate_1d(|x| f(&[x]), slab, cfg),
            Domain::Simplex(3) => {
                let failure: Cell<Option<Error>> = Cell::new(None);
                let outer = integrate_1d(
                    |x0| {
                        let rest = 1.0 - x0;
                        if rest <= 0.0 {
                            return 0.0;
                        }
                        match integrate_1d(|x1| f(&[x0, x1]), Interval { lo: 0.0, hi: rest }, cfg) {
                            Ok(v) => v,
                            Err(e) => {
                                failure.set(Some(e));
                                f64::NAN
                            }
                        }
                    },
                    slab,
                    cfg,
                );
                match (outer, failure.into_inner()) {
                    (_, Some(e)) => Err(e),
                    (r, None) => r,
                }
            }
            Domain::Simplex(n) => Err(Error::Unsupported(format!(
                "quadrature on the {n}-simplex; use Monte Carlo"
            ))),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Domain::Interval(i) => x.len() == 1 && i.contains(x[0]),
            Domain::Simplex(n) => {
                x.len() == n - 1 && x.iter().all(|&v| v >= 0.0) && x.iter().sum::<f64>() <= 1.0
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rule_is_exact_for_high_degree() {
        let rule = GaussRule::new(16);
        assert!((rule.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // ∫_{-1}^{1} x^30 dx = 2/31
        let v: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(x, w)| w * x.powi(30))
            .sum();
        assert!((v - 2.0 / 31.0).abs() < 1e-14);
        for w in rule.nodes.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn odd_rule_has_center_node() {
        let rule = GaussRule::new(5);
        assert_eq!(rule.nodes[2], 0.0);
        assert!((rule.weights[2] - 128.0 / 225.0).abs() < 1e-14);
    }

    #[test]
    fn constant_and_linear() {
        let cfg = QuadConfig::default();
        assert!((integrate_1d(|_| 1.0, Interval::unit(), &cfg).unwrap() - 1.0).abs() < 1e-14);
        assert!((integrate_1d(|x| x, Interval::unit(), &cfg).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn standard_normal_on_truncated_line() {
        let cfg = QuadConfig::default();
        let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let w = Interval::real_line()
            .truncate(&Interval::around(0.0, cfg.gauss_truncation_sigmas).unwrap())
            .unwrap();
        assert!((integrate_1d(phi, w, &cfg).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn endpoint_singularity_converges() {
        let cfg = QuadConfig::default();
        let r = integrate_adaptive(|x| x.powf(-0.5), Interval::unit(), &cfg).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn singularity_at_one_is_frozen_not_fatal() {
        let cfg = QuadConfig::default();
        let r = integrate_adaptive(|x| (1.0 - x).powf(-0.5), Interval::unit(), &cfg).unwrap();
        assert!((r.value - 2.0).abs() < 1e-5, "{r:?}");
    }

    #[test]
    fn infinite_domain_rejected() {
        let cfg = QuadConfig::default();
        assert!(matches!(
            integrate_1d(|_| 1.0, Interval::real_line(), &cfg),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn nan_integrand_reported() {
        let cfg = QuadConfig::default();
        assert!(matches!(
            integrate_1d(|_| f64::NAN, Interval::unit(), &cfg),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn panel_budget_exhaustion() {
        let cfg = QuadConfig {
            max_panels: 8,
            ..QuadConfig::default()
        };
        let r = integrate_1d(|x| x.powf(-0.9), Interval::unit(), &cfg);
        assert!(matches!(r, Err(Error::NonConvergent { .. })), "{r:?}");
    }

    #[test]
    fn config_validation() {
        let bad = QuadConfig {
            rel_tol: 0.0,
            ..QuadConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = QuadConfig {
            nodes_per_panel: 1,
            ..QuadConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn simplex_volumes_and_integrals() {
        let cfg = QuadConfig::default();
        assert_eq!(Domain::Simplex(2).volume(), 1.0);
        assert_eq!(Domain::Simplex(3).volume(), 0.5);
        let v = Domain::Simplex(3).integrate(&|_| 1.0, &cfg).unwrap();
        assert!((v - 0.5).abs() < 1e-13);
        // ∫ x0 over the 2-simplex = 1/6
        let v = Domain::Simplex(3).integrate(&|x| x[0], &cfg).unwrap();
        assert!((v - 1.0 / 6.0).abs() < 1e-13);
        assert!(Domain::Simplex(4).integrate(&|_| 1.0, &cfg).is_err());
    }

    #[test]
    fn interval_helpers() {
        let i = Interval::new(0.0, 1.0).unwrap();
        assert_eq!(i.grid(101).len(), 101);
        assert_eq!(i.grid(101)[100], 1.0);
        assert_eq!(i.cells(8).len(), 8);
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(i.intersect(&Interval::new(2.0, 3.0).unwrap()).is_none());
    }
}

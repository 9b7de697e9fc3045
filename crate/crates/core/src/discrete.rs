//! Exact probability on finite sets: distributions, stochastic channels, validity,
//! predicate transformation, conditioning and Bayesian inversion.
//!
//! Carriers are [`Space`]s of opaque string labels. Base spaces iterate in sorted label
//! order; product spaces iterate lexicographically over component index pairs.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Weights below this are pruned to zero after renormalization.
pub const PRUNE_BELOW: f64 = 1e-15;
/// Validities at or below this make an update undefined.
pub const MIN_VALIDITY: f64 = 1e-300;
const NORM_SLACK: f64 = 1e-9;

#[derive(Debug)]
struct SpaceInner {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    factors: Option<(Space, Space)>,
}

/// A finite, non-empty, ordered set of labels.
#[derive(Clone)]
pub struct Space(Arc<SpaceInner>);

impl fmt::Debug for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.labels()).finish()
    }
}

impl PartialEq for Space {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.labels == other.0.labels
    }
}

impl Space {
    /// Sorted, deduplicated space over `labels`.
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        labels.sort();
        labels.dedup();
        Self::from_ordered(labels, None)
    }

    fn from_ordered(labels: Vec<String>, factors: Option<(Space, Space)>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::domain("a space needs at least one label"));
        }
        let index = labels
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, l)| (l, i))
            .collect();
        Ok(Space(Arc::new(SpaceInner {
            labels,
            index,
            factors,
        })))
    }

    /// Space keeping the given order; duplicate labels are an error.
    pub fn ordered<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::domain(format!("duplicate label {l:?}")));
            }
        }
        Self::from_ordered(labels, None)
    }

    /// `{"0", "1", ..., "n-1"}` ordered numerically.
    pub fn range(n: usize) -> Result<Self> {
        Self::from_ordered((0..n).map(|i| i.to_string()).collect(), None)
    }

    /// Cartesian product; labels are `"(x,y)"`.
    pub fn product(a: &Space, b: &Space) -> Space {
        let labels = a
            .labels()
            .iter()
            .flat_map(|x| b.labels().iter().map(move |y| format!("({x},{y})")))
            .collect();
        Self::from_ordered(labels, Some((a.clone(), b.clone())))
            .expect("product of non-empty spaces")
    }

    pub fn labels(&self) -> &[String] {
        &self.0.labels
    }

    pub fn len(&self) -> usize {
        self.0.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.0
            .index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn label(&self, i: usize) -> &str {
        &self.0.labels[i]
    }

    pub fn factors(&self) -> Option<(&Space, &Space)> {
        self.0.factors.as_ref().map(|(a, b)| (a, b))
    }

    /// Index of the pair `(i, j)` in a product space.
    pub fn pair_index(&self, i: usize, j: usize) -> usize {
        let (_, b) = self.factors().expect("pair_index on a product space");
        i * b.len() + j
    }
}

fn check_same(a: &Space, b: &Space, what: &str) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::mismatch(format!("{what}: {a:?} vs {b:?}")))
    }
}

/// Renormalize, prune tiny weights, renormalize again.
fn normalize(weights: &mut [f64]) -> Result<()> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::domain(format!(
            "cannot normalize weights with total {total}"
        )));
    }
    for w in weights.iter_mut() {
        *w /= total;
        if *w < PRUNE_BELOW {
            *w = 0.0;
        }
    }
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    Ok(())
}

/// Finite-support probability distribution over a [`Space`].
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDist {
    space: Space,
    weights: Vec<f64>,
}

impl FiniteDist {
    /// Weights must be non-negative and sum to 1 (within 1e-9; the result is renormalized).
    pub fn new(space: Space, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.len() {
            return Err(Error::mismatch(format!(
                "{} weights for a space of {} labels",
                weights.len(),
                space.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::domain("weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > NORM_SLACK {
            return Err(Error::domain(format!("weights sum to {total}, not 1")));
        }
        Self::from_unnormalized(space, weights)
    }

    /// Normalizes arbitrary non-negative weights with a positive total.
    pub fn from_unnormalized(space: Space, mut weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.len() {
            return Err(Error::mismatch("weight count differs from space size"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::domain("weights must be finite and non-negative"));
        }
        normalize(&mut weights)?;
        Ok(Self { space, weights })
    }

    /// Builds the carrier from the given labels.
    pub fn from_pairs(pairs: &[(&str, f64)]) -> Result<Self> {
        let space = Space::new(pairs.iter().map(|(l, _)| *l))?;
        if space.len() != pairs.len() {
            return Err(Error::domain("duplicate labels"));
        }
        let mut weights = vec![0.0; space.len()];
        for (l, w) in pairs {
            weights[space.index_of(l)?] = *w;
        }
        Self::new(space, weights)
    }

    pub fn uniform(space: Space) -> Self {
        let n = space.len();
        Self {
            space,
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn prob(&self, label: &str) -> Result<f64> {
        Ok(self.weights[self.space.index_of(label)?])
    }

    /// Probability of an event given as a set of labels.
    pub fn prob_of(&self, event: &[&str]) -> Result<f64> {
        let mut acc = 0.0;
        for l in event {
            acc += self.prob(l)?;
        }
        Ok(acc)
    }

    /// Product state `ω ⊗ ρ`.
    pub fn product(&self, other: &FiniteDist) -> FiniteDist {
        let space = Space::product(&self.space, &other.space);
        let weights = self
            .weights
            .iter()
            .flat_map(|a| other.weights.iter().map(move |b| a * b))
            .collect();
        FiniteDist { space, weights }
    }

    /// Total variation distance `½ Σ |a - b|`.
    pub fn total_variation(&self, other: &FiniteDist) -> Result<f64> {
        check_same(&self.space, &other.space, "total variation")?;
        Ok(0.5
            * self
                .weights
                .iter()
                .zip(&other.weights)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }

    /// Largest pointwise weight difference.
    pub fn max_diff(&self, other: &FiniteDist) -> Result<f64> {
        check_same(&self.space, &other.space, "comparison")?;
        Ok(self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Unit mass at `label`.
pub fn dirac(space: &Space, label: &str) -> Result<FiniteDist> {
    let i = space.index_of(label)?;
    let mut weights = vec![0.0; space.len()];
    weights[i] = 1.0;
    Ok(FiniteDist {
        space: space.clone(),
        weights,
    })
}

/// A row-stochastic matrix between two finite spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteChannel {
    input: Space,
    output: Space,
    /// row-major, `input.len() x output.len()`
    matrix: Vec<f64>,
}

impl DiscreteChannel {
    pub fn new(input: Space, output: Space, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != input.len() {
            return Err(Error::mismatch(format!(
                "{} rows for {} inputs",
                rows.len(),
                input.len()
            )));
        }
        let mut matrix = Vec::with_capacity(input.len() * output.len());
        for (i, row) in rows.into_iter().enumerate() {
            let d = FiniteDist::new(output.clone(), row).map_err(|e| {
                Error::domain(format!(
                    "row for `{}` is not a distribution: {e}",
                    input.label(i)
                ))
            })?;
            matrix.extend(d.weights);
        }
        Ok(Self {
            input,
            output,
            matrix,
        })
    }

    /// Channel whose row at each input is the given distribution.
    pub fn from_rows(input: Space, rows: Vec<FiniteDist>) -> Result<Self> {
        let output = rows
            .first()
            .map(|r| r.space.clone())
            .ok_or_else(|| Error::domain("channel needs at least one row"))?;
        if rows.len() != input.len() {
            return Err(Error::mismatch("row count differs from input size"));
        }
        let mut matrix = Vec::with_capacity(input.len() * output.len());
        for r in rows {
            check_same(&r.space, &output, "channel rows")?;
            matrix.extend(r.weights);
        }
        Ok(Self {
            input,
            output,
            matrix,
        })
    }

    /// Rebuilds from raw, possibly slightly denormalized, rows.
    fn from_matrix(input: Space, output: Space, mut matrix: Vec<f64>) -> Result<Self> {
        let m = output.len();
        for row in matrix.chunks_mut(m) {
            normalize(row)?;
        }
        Ok(Self {
            input,
            output,
            matrix,
        })
    }

    pub fn identity(space: &Space) -> Self {
        let n = space.len();
        let mut matrix = vec![0.0; n * n];
        for i in 0..n {
            matrix[i * n + i] = 1.0;
        }
        Self {
            input: space.clone(),
            output: space.clone(),
            matrix,
        }
    }

    /// Channel ignoring its input and returning `state`.
    pub fn constant(input: &Space, state: &FiniteDist) -> Self {
        let matrix = (0..input.len())
            .flat_map(|_| state.weights.iter().copied())
            .collect();
        Self {
            input: input.clone(),
            output: state.space.clone(),
            matrix,
        }
    }

    pub fn input(&self) -> &Space {
        &self.input
    }

    pub fn output(&self) -> &Space {
        &self.output
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.output.len() + j]
    }

    fn row_slice(&self, i: usize) -> &[f64] {
        let m = self.output.len();
        &self.matrix[i * m..(i + 1) * m]
    }

    /// The distribution `c(x)`.
    pub fn row(&self, label: &str) -> Result<FiniteDist> {
        let i = self.input.index_of(label)?;
        Ok(FiniteDist {
            space: self.output.clone(),
            weights: self.row_slice(i).to_vec(),
        })
    }

    pub fn max_diff(&self, other: &DiscreteChannel) -> Result<f64> {
        check_same(&self.input, &other.input, "channel inputs")?;
        check_same(&self.output, &other.output, "channel outputs")?;
        Ok(self
            .matrix
            .iter()
            .zip(&other.matrix)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// State transformation `c ≫ ω`.
pub fn push(c: &DiscreteChannel, omega: &FiniteDist) -> Result<FiniteDist> {
    check_same(
        &omega.space,
        &c.input,
        "push: state carrier vs channel input",
    )?;
    let mut out = vec![0.0; c.output.len()];
    for (i, w) in omega.weights.iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        for (o, p) in out.iter_mut().zip(c.row_slice(i)) {
            *o += w * p;
        }
    }
    FiniteDist::from_unnormalized(c.output.clone(), out)
}

/// Sequential composition `d ∘ c` (first `c`, then `d`).
pub fn compose(d: &DiscreteChannel, c: &DiscreteChannel) -> Result<DiscreteChannel> {
    check_same(&c.output, &d.input, "compose: output of c vs input of d")?;
    let (n, m, k) = (c.input.len(), c.output.len(), d.output.len());
    let mut matrix = vec![0.0; n * k];
    for x in 0..n {
        for y in 0..m {
            let cy = c.matrix[x * m + y];
            if cy == 0.0 {
                continue;
            }
            for z in 0..k {
                matrix[x * k + z] += cy * d.matrix[y * k + z];
            }
        }
    }
    DiscreteChannel::from_matrix(c.input.clone(), d.output.clone(), matrix)
}

/// Copier `x ↦ 1|x,x⟩`.
pub fn copy_channel(space: &Space) -> DiscreteChannel {
    let prod = Space::product(space, space);
    let n = space.len();
    let mut matrix = vec![0.0; n * prod.len()];
    for i in 0..n {
        matrix[i * prod.len() + prod.pair_index(i, i)] = 1.0;
    }
    DiscreteChannel {
        input: space.clone(),
        output: prod,
        matrix,
    }
}

/// Parallel composition `c ⊗ d`.
pub fn tensor(c: &DiscreteChannel, d: &DiscreteChannel) -> DiscreteChannel {
    let input = Space::product(&c.input, &d.input);
    let output = Space::product(&c.output, &d.output);
    let mut matrix = vec![0.0; input.len() * output.len()];
    for x in 0..c.input.len() {
        for a in 0..d.input.len() {
            let row = input.pair_index(x, a);
            for y in 0..c.output.len() {
                for b in 0..d.output.len() {
                    matrix[row * output.len() + output.pair_index(y, b)] =
                        c.entry(x, y) * d.entry(a, b);
                }
            }
        }
    }
    DiscreteChannel {
        input,
        output,
        matrix,
    }
}

/// Tuple `⟨c, d⟩ = (c ⊗ d) ∘ copy`.
pub fn tuple_channel(c: &DiscreteChannel, d: &DiscreteChannel) -> Result<DiscreteChannel> {
    check_same(&c.input, &d.input, "tuple: channels need a common input")?;
    compose(&tensor(c, d), &copy_channel(&c.input))
}

/// A real-valued function on a finite space; a predicate when its range lies in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandVarD {
    space: Space,
    values: Vec<f64>,
}

impl RandVarD {
    pub fn new(space: Space, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::mismatch("value count differs from space size"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("random variable values must be finite"));
        }
        Ok(Self { space, values })
    }

    pub fn constant(space: &Space, value: f64) -> Self {
        Self {
            space: space.clone(),
            values: vec![value; space.len()],
        }
    }

    pub fn truth(space: &Space) -> Self {
        Self::constant(space, 1.0)
    }

    /// Indicator `1_E` of an event.
    pub fn indicator(space: &Space, event: &[&str]) -> Result<Self> {
        let mut values = vec![0.0; space.len()];
        for l in event {
            values[space.index_of(l)?] = 1.0;
        }
        Ok(Self {
            space: space.clone(),
            values,
        })
    }

    /// Point predicate `1_{y}`.
    pub fn point(space: &Space, label: &str) -> Result<Self> {
        Self::indicator(space, &[label])
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_predicate(&self) -> bool {
        self.values.iter().all(|v| (0.0..=1.0).contains(v))
    }
}

/// `ω ⊨ r = Σ ω(x)·r(x)`.
pub fn validity(omega: &FiniteDist, r: &RandVarD) -> Result<f64> {
    check_same(&omega.space, &r.space, "validity")?;
    Ok(omega
        .weights
        .iter()
        .zip(&r.values)
        .map(|(w, v)| w * v)
        .sum())
}

/// Predicate transformation `(c ≪ r)(x) = Σ_y c(x)(y)·r(y)`.
pub fn pull(c: &DiscreteChannel, r: &RandVarD) -> Result<RandVarD> {
    check_same(
        &c.output,
        &r.space,
        "pull: channel output vs random variable",
    )?;
    let values = (0..c.input.len())
        .map(|i| {
            c.row_slice(i)
                .iter()
                .zip(&r.values)
                .map(|(p, v)| p * v)
                .sum()
        })
        .collect();
    Ok(RandVarD {
        space: c.input.clone(),
        values,
    })
}

/// Conditioning `ω|_r (x) = ω(x)·r(x) / (ω ⊨ r)`.
pub fn update(omega: &FiniteDist, r: &RandVarD) -> Result<FiniteDist> {
    check_same(&omega.space, &r.space, "update")?;
    if omega
        .weights
        .iter()
        .zip(&r.values)
        .any(|(w, v)| *w > 0.0 && *v < 0.0)
    {
        return Err(Error::domain("update needs a non-negative random variable"));
    }
    let v = validity(omega, r)?;
    if !(v > MIN_VALIDITY) {
        return Err(Error::ZeroValidity(v));
    }
    let weights = omega
        .weights
        .iter()
        .zip(&r.values)
        .map(|(w, x)| w * x / v)
        .collect();
    FiniteDist::from_unnormalized(omega.space.clone(), weights)
}

/// Pointwise product `r & s`.
pub fn rv_and(r: &RandVarD, s: &RandVarD) -> Result<RandVarD> {
    check_same(&r.space, &s.space, "conjunction")?;
    Ok(RandVarD {
        space: r.space.clone(),
        values: r.values.iter().zip(&s.values).map(|(a, b)| a * b).collect(),
    })
}

/// Scalar multiple `a · r`.
pub fn rv_scale(a: f64, r: &RandVarD) -> RandVarD {
    RandVarD {
        space: r.space.clone(),
        values: r.values.iter().map(|v| a * v).collect(),
    }
}

/// Bayesian inversion `c†_ω` at one observation `y`:
/// `x ↦ ω(x)·c(x)(y) / (c ≫ ω)(y)`.
pub fn inversion_at(c: &DiscreteChannel, omega: &FiniteDist, y: &str) -> Result<FiniteDist> {
    check_same(
        &omega.space,
        &c.input,
        "inversion: state carrier vs channel input",
    )?;
    let j = c.output.index_of(y)?;
    let weights: Vec<f64> = omega
        .weights
        .iter()
        .enumerate()
        .map(|(i, w)| w * c.entry(i, j))
        .collect();
    let mass: f64 = weights.iter().sum();
    if !(mass > MIN_VALIDITY) {
        return Err(Error::ZeroMassObservation(y.to_string()));
    }
    FiniteDist::from_unnormalized(omega.space.clone(), weights)
}

/// Bayesian inversion `c†_ω : Y → X`.
///
/// Outputs with zero mass under `c ≫ ω` have no posterior and are left out of the
/// inverse's input space.
pub fn inversion(c: &DiscreteChannel, omega: &FiniteDist) -> Result<DiscreteChannel> {
    let predicted = push(c, omega)?;
    let retained: Vec<&str> = c
        .output
        .labels()
        .iter()
        .zip(predicted.weights())
        .filter(|(_, w)| **w > MIN_VALIDITY)
        .map(|(l, _)| l.as_str())
        .collect();
    let input = if retained.len() == c.output.len() {
        c.output.clone()
    } else {
        Space::from_ordered(retained.iter().map(|s| s.to_string()).collect(), None)?
    };
    let rows = retained
        .iter()
        .map(|y| inversion_at(c, omega, y))
        .collect::<Result<Vec<_>>>()?;
    DiscreteChannel::from_rows(input, rows)
}

/// Restricts a distribution to a sub-space; every dropped label must carry zero mass.
pub fn restrict(omega: &FiniteDist, sub: &Space) -> Result<FiniteDist> {
    let mut weights = vec![0.0; sub.len()];
    let mut kept = 0.0;
    for (i, l) in sub.labels().iter().enumerate() {
        weights[i] = omega.prob(l)?;
        kept += weights[i];
    }
    if (kept - 1.0).abs() > 1e-12 {
        return Err(Error::mismatch(
            "restriction drops labels with positive mass",
        ));
    }
    FiniteDist::from_unnormalized(sub.clone(), weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> Space {
        Space::new(["a", "b"]).unwrap()
    }

    fn flip_like() -> DiscreteChannel {
        DiscreteChannel::new(
            ab(),
            Space::new(["0", "1"]).unwrap(),
            vec![vec![0.2, 0.8], vec![0.7, 0.3]],
        )
        .unwrap()
    }

    fn half() -> FiniteDist {
        FiniteDist::uniform(ab())
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-14
    }

    #[test]
    fn dirac_and_unknown_label() {
        let d = dirac(&ab(), "a").unwrap();
        assert_eq!(d.weights(), &[1.0, 0.0]);
        assert!(matches!(dirac(&ab(), "z"), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn push_hand_sum() {
        let out = push(&flip_like(), &half()).unwrap();
        assert!(close(out.prob("1").unwrap(), 0.55));
        assert!(close(out.prob("0").unwrap(), 0.45));
        let at_a = push(&flip_like(), &dirac(&ab(), "a").unwrap()).unwrap();
        assert_eq!(at_a, flip_like().row("a").unwrap());
        assert_eq!(
            push(&DiscreteChannel::identity(&ab()), &half()).unwrap(),
            half()
        );
    }

    #[test]
    fn push_carrier_mismatch() {
        let other = FiniteDist::uniform(Space::new(["x", "y"]).unwrap());
        assert!(matches!(
            push(&flip_like(), &other),
            Err(Error::CarrierMismatch(_))
        ));
    }

    #[test]
    fn unit_laws() {
        let c = flip_like();
        let left = compose(&DiscreteChannel::identity(c.output()), &c).unwrap();
        let right = compose(&c, &DiscreteChannel::identity(c.input())).unwrap();
        assert!(left.max_diff(&c).unwrap() < 1e-15);
        assert!(right.max_diff(&c).unwrap() < 1e-15);
    }

    #[test]
    fn copy_and_identity_tensor() {
        let cp = copy_channel(&ab());
        let out = cp.row("a").unwrap();
        assert_eq!(out.prob("(a,a)").unwrap(), 1.0);
        let id = DiscreteChannel::identity(&ab());
        let t = tensor(&id, &id);
        let prod = Space::product(&ab(), &ab());
        assert!(t.max_diff(&DiscreteChannel::identity(&prod)).unwrap() == 0.0);
    }

    #[test]
    fn graph_joint_of_2x2_instance() {
        let g = tuple_channel(&DiscreteChannel::identity(&ab()), &flip_like()).unwrap();
        let joint = push(&g, &half()).unwrap();
        for (l, w) in [
            ("(a,1)", 0.4),
            ("(a,0)", 0.1),
            ("(b,1)", 0.15),
            ("(b,0)", 0.35),
        ] {
            assert!(close(joint.prob(l).unwrap(), w), "{l}");
        }
    }

    #[test]
    fn validity_pull_update_examples() {
        let r = RandVarD::new(ab(), vec![0.8, 0.3]).unwrap();
        assert!(close(validity(&half(), &r).unwrap(), 0.55));
        assert!(close(
            validity(&half(), &RandVarD::truth(&ab())).unwrap(),
            1.0
        ));
        let p = pull(
            &flip_like(),
            &RandVarD::point(flip_like().output(), "1").unwrap(),
        )
        .unwrap();
        assert!(close(p.values()[0], 0.8) && close(p.values()[1], 0.3));
        let truth = pull(&flip_like(), &RandVarD::truth(flip_like().output())).unwrap();
        assert!(truth.values().iter().all(|v| close(*v, 1.0)));
        let post = update(&half(), &r).unwrap();
        assert!(close(post.prob("a").unwrap(), 8.0 / 11.0));
        assert!(close(post.prob("b").unwrap(), 3.0 / 11.0));
        assert_eq!(update(&half(), &RandVarD::truth(&ab())).unwrap(), half());
    }

    #[test]
    fn and_and_scale() {
        let r = RandVarD::new(ab(), vec![0.8, 0.3]).unwrap();
        let s = RandVarD::new(ab(), vec![0.5, 0.5]).unwrap();
        let rs = rv_and(&r, &s).unwrap();
        assert!(close(rs.values()[0], 0.4) && close(rs.values()[1], 0.15));
        assert_eq!(rv_and(&r, &RandVarD::truth(&ab())).unwrap(), r);
        let scaled = update(&half(), &rv_scale(3.7, &r)).unwrap();
        assert!(scaled.max_diff(&update(&half(), &r).unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn zero_validity_rejected() {
        let omega = dirac(&ab(), "a").unwrap();
        let r = RandVarD::point(&ab(), "b").unwrap();
        assert!(matches!(update(&omega, &r), Err(Error::ZeroValidity(_))));
        let neg = RandVarD::new(ab(), vec![-1.0, 1.0]).unwrap();
        assert!(update(&half(), &neg).is_err());
    }

    #[test]
    fn inversion_examples() {
        let inv = inversion(&flip_like(), &half()).unwrap();
        let at1 = inv.row("1").unwrap();
        assert!(close(at1.prob("a").unwrap(), 8.0 / 11.0));
        let id = DiscreteChannel::identity(&ab());
        let inv_id = inversion(&id, &half()).unwrap();
        assert!(inv_id.max_diff(&id).unwrap() == 0.0);
    }

    #[test]
    fn inversion_drops_impossible_outputs() {
        let c = DiscreteChannel::new(
            ab(),
            Space::new(["0", "1", "2"]).unwrap(),
            vec![vec![0.5, 0.5, 0.0], vec![0.1, 0.9, 0.0]],
        )
        .unwrap();
        let inv = inversion(&c, &half()).unwrap();
        assert_eq!(inv.input().labels(), &["0", "1"]);
        assert!(matches!(
            inversion_at(&c, &half(), "2"),
            Err(Error::ZeroMassObservation(_))
        ));
    }

    #[test]
    fn construction_errors() {
        assert!(FiniteDist::new(ab(), vec![0.5, 0.6]).is_err());
        assert!(FiniteDist::new(ab(), vec![-0.5, 1.5]).is_err());
        assert!(Space::new(Vec::<String>::new()).is_err());
        assert!(DiscreteChannel::new(ab(), ab(), vec![vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn tiny_weights_are_pruned() {
        let d = FiniteDist::from_unnormalized(ab(), vec![1.0, 1e-17]).unwrap();
        assert_eq!(d.weights(), &[1.0, 0.0]);
    }

    #[test]
    fn range_space_orders_numerically() {
        let s = Space::range(12).unwrap();
        assert_eq!(s.label(2), "2");
        assert_eq!(s.label(10), "10");
    }
}

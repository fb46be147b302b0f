//! Finite domains, distributions, `±1` concepts, and the arithmetic that the
//! rest of the crate is built on.
//!
//! A [`Domain`] is just a size `n`; points are the indices `0..n`. A
//! [`Distribution`] is a validated probability vector over a domain, a
//! [`Concept`] assigns `+1` or `-1` to every point, and a [`ConceptClass`]
//! bundles concepts that share a domain.
//!
//! The module also hosts the three scalar operations everything else leans on:
//! [`correlation`] (the expectation of the pointwise product of two concepts),
//! [`loss`] (disagreement probability, derived from correlation so the
//! identity `loss = (1 - correlation) / 2` holds by construction), and
//! [`is_mu_close`] (the two-sided multiplicative neighborhood test between
//! distributions).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute slack allowed when checking that a probability vector sums to one.
pub const PROB_SUM_TOLERANCE: f64 = 1e-12;

/// A finite domain of `size` points, identified with the indices `0..size`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    size: usize,
}

impl Domain {
    /// Creates a domain with `size >= 1` points.
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::invalid(
                "size",
                "domain must have at least one point",
            ));
        }
        Ok(Domain { size })
    }

    /// Number of points in the domain.
    pub fn size(&self) -> usize {
        self.size
    }
}

/// A probability vector over a finite domain.
///
/// Entries are finite, nonnegative, and sum to one within
/// [`PROB_SUM_TOLERANCE`]. Entries equal to zero are allowed; they denote
/// points outside the support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    /// Validates and wraps a probability vector.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution(
                "empty probability vector".into(),
            ));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "entry {i} is {p}; entries must be finite and nonnegative"
                )));
            }
        }
        let sum = kahan_sum(&probs);
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {sum}, not 1 within {PROB_SUM_TOLERANCE}"
            )));
        }
        Ok(Distribution { probs })
    }

    /// Normalizes an arbitrary nonnegative weight vector into a distribution.
    ///
    /// Fails if the weights are empty, contain a negative or non-finite entry,
    /// or sum to zero.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("empty weight vector".into()));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "weight {i} is {w}; weights must be finite and nonnegative"
                )));
            }
        }
        let total = kahan_sum(&weights);
        if total <= 0.0 {
            return Err(Error::InvalidDistribution(
                "weights sum to zero; nothing to normalize".into(),
            ));
        }
        let probs = weights.into_iter().map(|w| w / total).collect();
        Distribution::new(probs)
    }

    /// The uniform distribution on `n` points.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "uniform distribution needs n >= 1"));
        }
        Distribution::new(vec![1.0 / n as f64; n])
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    /// Always false: distributions have at least one point.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Probability of point `i`.
    pub fn prob(&self, i: usize) -> f64 {
        self.probs[i]
    }

    /// The underlying probability vector.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

impl TryFrom<Vec<f64>> for Distribution {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Distribution::new(v)
    }
}

impl From<Distribution> for Vec<f64> {
    fn from(d: Distribution) -> Vec<f64> {
        d.probs
    }
}

/// Draws points from a fixed [`Distribution`] by inverting the cumulative sum.
#[derive(Debug, Clone)]
pub struct DistributionSampler {
    cumulative: Vec<f64>,
}

impl DistributionSampler {
    /// Precomputes the cumulative table for `dist`.
    pub fn new(dist: &Distribution) -> Self {
        let mut acc = 0.0;
        let cumulative = dist
            .probs()
            .iter()
            .map(|&p| {
                acc += p;
                acc
            })
            .collect();
        DistributionSampler { cumulative }
    }

    /// Draws one point index using the supplied RNG.
    pub fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen::<f64>() * self.cumulative.last().copied().unwrap_or(1.0);
        match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&u).expect("cumulative sums are finite"))
        {
            Ok(i) | Err(i) => i.min(self.cumulative.len() - 1),
        }
    }
}

/// A `±1` labeling of a finite domain.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct Concept {
    labels: Vec<i8>,
}

impl Concept {
    /// Validates that every label is `+1` or `-1`.
    pub fn new(labels: Vec<i8>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid(
                "labels",
                "concept must label at least one point",
            ));
        }
        for (i, &l) in labels.iter().enumerate() {
            if l != 1 && l != -1 {
                return Err(Error::invalid(
                    "labels",
                    format!("label at point {i} is {l}; labels must be +1 or -1"),
                ));
            }
        }
        Ok(Concept { labels })
    }

    /// Builds a concept from a predicate over point indices.
    pub fn from_fn(n: usize, f: impl Fn(usize) -> bool) -> Result<Self> {
        Concept::new((0..n).map(|x| if f(x) { 1 } else { -1 }).collect())
    }

    /// Number of labeled points.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    /// Always false: concepts label at least one point.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// The label of point `x`.
    pub fn label(&self, x: usize) -> i8 {
        self.labels[x]
    }

    /// All labels in point order.
    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    /// The pointwise negation.
    pub fn negated(&self) -> Concept {
        Concept {
            labels: self.labels.iter().map(|l| -l).collect(),
        }
    }

    /// A copy with the labels at `points` flipped.
    pub fn with_flipped(&self, points: &[usize]) -> Concept {
        let mut labels = self.labels.clone();
        for &x in points {
            labels[x] = -labels[x];
        }
        Concept { labels }
    }
}

impl TryFrom<Vec<i8>> for Concept {
    type Error = Error;
    fn try_from(v: Vec<i8>) -> Result<Self> {
        Concept::new(v)
    }
}

impl From<Concept> for Vec<i8> {
    fn from(c: Concept) -> Vec<i8> {
        c.labels
    }
}

/// A nonempty set of concepts over a shared domain.
///
/// Duplicate concepts are permitted; [`ConceptClass::dedup_report`] lists them
/// so callers can decide whether duplicates matter for their experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptClass {
    domain: Domain,
    concepts: Vec<Concept>,
}

impl ConceptClass {
    /// Validates that all concepts label exactly the domain.
    pub fn new(domain: Domain, concepts: Vec<Concept>) -> Result<Self> {
        if concepts.is_empty() {
            return Err(Error::invalid(
                "concepts",
                "class must contain at least one concept",
            ));
        }
        for (i, c) in concepts.iter().enumerate() {
            if c.len() != domain.size() {
                return Err(Error::DimensionMismatch {
                    what: "concept length vs domain size",
                    expected: domain.size(),
                    got: c.len(),
                });
            }
            let _ = i;
        }
        Ok(ConceptClass { domain, concepts })
    }

    /// The shared domain.
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Number of concepts.
    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    /// Always false: classes are nonempty.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// The `i`-th concept.
    pub fn concept(&self, i: usize) -> &Concept {
        &self.concepts[i]
    }

    /// All concepts in index order.
    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    /// Groups of indices holding identical concepts (only groups of size >= 2).
    pub fn dedup_report(&self) -> Vec<Vec<usize>> {
        use std::collections::HashMap;
        let mut seen: HashMap<&[i8], Vec<usize>> = HashMap::new();
        for (i, c) in self.concepts.iter().enumerate() {
            seen.entry(c.labels()).or_default().push(i);
        }
        let mut groups: Vec<Vec<usize>> = seen.into_values().filter(|g| g.len() >= 2).collect();
        groups.sort();
        groups
    }

    /// A new class holding the subset of concepts at `indices`, in order.
    pub fn subset(&self, indices: &[usize]) -> Result<ConceptClass> {
        let concepts = indices
            .iter()
            .map(|&i| {
                self.concepts
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::invalid("indices", format!("index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        ConceptClass::new(self.domain.clone(), concepts)
    }
}

/// A domain point together with a `±1` label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    /// Point index into the domain.
    pub point: usize,
    /// Observed label, `+1` or `-1`.
    pub label: i8,
}

/// Correlation of two concepts under a distribution: `E[h(x) c(x)]`.
///
/// The sum runs in point order, so the result is deterministic for fixed
/// inputs.
pub fn correlation(h: &Concept, c: &Concept, p: &Distribution) -> Result<f64> {
    check_len("correlation concept h", h.len(), p.len())?;
    check_len("correlation concept c", c.len(), p.len())?;
    let mut acc = 0.0;
    for (x, &px) in p.probs().iter().enumerate() {
        acc += px * f64::from(h.label(x) * c.label(x));
    }
    Ok(acc)
}

/// Disagreement probability `Pr[h(x) != c(x)]`, computed as
/// `(1 - correlation(h, c, p)) / 2` so the identity with [`correlation`] is
/// exact rather than merely approximate.
pub fn loss(h: &Concept, c: &Concept, p: &Distribution) -> Result<f64> {
    Ok((1.0 - correlation(h, c, p)?) / 2.0)
}

/// Two-sided multiplicative neighborhood test.
///
/// Returns true iff `p(x) <= mu * q(x)` and `q(x) <= mu * p(x)` for every
/// point `x`. The comparisons force the zero-mass convention: a point with
/// zero mass under one distribution is compatible only with zero mass under
/// the other. The predicate is symmetric in `p` and `q` by construction.
pub fn is_mu_close(p: &Distribution, q: &Distribution, mu: f64) -> Result<bool> {
    if !(mu.is_finite() && mu >= 1.0) {
        return Err(Error::invalid(
            "mu",
            format!("mu must be finite and >= 1, got {mu}"),
        ));
    }
    check_len("neighborhood distribution q", q.len(), p.len())?;
    for (&px, &qx) in p.probs().iter().zip(q.probs()) {
        if px > mu * qx || qx > mu * px {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Convex mixture `delta * p + (1 - delta) * r`.
pub fn mix(p: &Distribution, r: &Distribution, delta: f64) -> Result<Distribution> {
    if !(delta.is_finite() && (0.0..=1.0).contains(&delta)) {
        return Err(Error::invalid(
            "delta",
            format!("delta must be in [0, 1], got {delta}"),
        ));
    }
    check_len("mixture distribution r", r.len(), p.len())?;
    let probs = p
        .probs()
        .iter()
        .zip(r.probs())
        .map(|(&px, &rx)| delta * px + (1.0 - delta) * rx)
        .collect();
    Distribution::new(probs)
}

fn check_len(what: &'static str, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            got,
        });
    }
    Ok(())
}

/// Compensated summation; keeps validation stable on large domains.
fn kahan_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for &x in xs {
        let y = x - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}

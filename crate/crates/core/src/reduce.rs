//! Distribution-transfer reductions.
//!
//! Everything here converts access to one distribution into access to a
//! multiplicatively close one:
//!
//! * [`pac_rejection_sample`] filters examples drawn from `Q` so the accepted
//!   ones are distributed exactly as `P`, enabling any PAC learner for `P`.
//! * [`RejectionSqOracle`] answers correlation queries against `P` using only
//!   queries against `Q`, by quantizing the importance-weighted query into a
//!   batch of `±1` queries and recombining the answers.
//! * [`properify`] converts an improper hypothesis into a class member that
//!   is almost as accurate, using self-labeled fresh samples.
//! * [`exact_identify`] pins down the one member of a high-dimension witness
//!   set within fixed radius of a hypothesis, when it exists.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boost::ExampleStream;
use crate::config::Calibration;
use crate::domain::{
    loss, Concept, ConceptClass, Distribution, DistributionSampler, LabeledExample,
};
use crate::error::{Error, Result};
use crate::oracle::{HypothesisRef, OracleAccount, SqOracle, SqQuery, TraceEvent};
use crate::sqdim::{verify_witness, SqWitness};

/// Identification radius: a hypothesis identifies a witness member when their
/// disagreement mass is at most this value.
pub const IDENTIFY_RADIUS: f64 = 0.3;

/// Smallest witness dimension for which identification is meaningful: pairwise
/// disagreements of a `d`-member witness are at least `1/2 - 1/(2d)`, and the
/// radius test needs that to clear twice [`IDENTIFY_RADIUS`].
pub const IDENTIFY_MIN_DIM: usize = 3;

/// A target value quantized onto the sign-average grid `{(n-2k)/n}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizedQuery {
    /// Number of `±1` sub-queries.
    pub n: usize,
    /// How many of them carry the `-1` sign.
    pub k: usize,
    /// The grid value `(n - 2k) / n`.
    pub value: f64,
}

impl QuantizedQuery {
    /// The sub-query signs: `k` minus-ones followed by `n - k` plus-ones.
    pub fn signs(&self) -> Vec<i8> {
        let mut s = vec![-1i8; self.k];
        s.resize(self.n, 1);
        s
    }
}

/// Grid size guaranteeing resolution strictly below `tau`.
fn quantization_grid(tau: f64) -> Result<usize> {
    if !(tau.is_finite() && tau > 0.0 && tau <= 1.0) {
        return Err(Error::invalid(
            "tau",
            format!("quantization resolution must lie in (0, 1], got {tau}"),
        ));
    }
    Ok((1.0 / tau).floor() as usize + 1)
}

/// Nearest grid count: the `k` minimizing `|(n - 2k)/n - gamma|`, ties to the
/// smaller `k`.
fn quantize_count(gamma: f64, n: usize) -> usize {
    let ideal = n as f64 * (1.0 - gamma) / 2.0;
    let lo = (ideal.floor().max(0.0) as usize).min(n);
    let hi = (ideal.ceil().max(0.0) as usize).min(n);
    let dist = |k: usize| ((n as f64 - 2.0 * k as f64) / n as f64 - gamma).abs();
    // Strict inequality keeps the smaller k on ties.
    if dist(hi) < dist(lo) {
        hi
    } else {
        lo
    }
}

/// Quantizes `gamma` onto a sign grid of resolution below `tau`: the grid has
/// `n = floor(1/tau) + 1` entries (so `1/n < tau`), and the chosen `k`
/// minimizes the distance of `(n-2k)/n` to `gamma`, ties to smaller `k`.
pub fn quantize_signs(gamma: f64, tau: f64) -> Result<QuantizedQuery> {
    if !(-1.0..=1.0).contains(&gamma) {
        return Err(Error::invalid(
            "gamma",
            format!("quantized value must lie in [-1, 1], got {gamma}"),
        ));
    }
    let n = quantization_grid(tau)?;
    let k = quantize_count(gamma, n);
    Ok(QuantizedQuery {
        n,
        k,
        value: (n as f64 - 2.0 * k as f64) / n as f64,
    })
}

/// Relative slack tolerated when validating acceptance probabilities, to keep
/// boundary-exact ratios (like `epsilon * mu == 1`) from failing on float
/// rounding.
const RATIO_SLACK: f64 = 1e-9;

/// Per-point acceptance probabilities `epsilon * P(x) / Q(x)` of the
/// rejection filter, validated to lie in `[epsilon^2, 1]`.
///
/// Points outside both supports get acceptance 1 (they are never drawn); a
/// point in `P`'s support but not `Q`'s is a contract violation, as is a
/// ratio outside the two-sided `1/epsilon` neighborhood.
pub fn rejection_acceptance(p: &Distribution, q: &Distribution, epsilon: f64) -> Result<Vec<f64>> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::invalid(
            "epsilon",
            format!("acceptance scale must lie in (0, 1], got {epsilon}"),
        ));
    }
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            what: "rejection source vs target distribution",
            expected: p.len(),
            got: q.len(),
        });
    }
    let lo = epsilon * epsilon;
    p.probs()
        .iter()
        .zip(q.probs())
        .enumerate()
        .map(|(x, (&px, &qx))| {
            if qx == 0.0 {
                if px == 0.0 {
                    return Ok(1.0);
                }
                return Err(Error::Precondition(format!(
                    "point {x} has mass {px} under the target but zero under the source"
                )));
            }
            let a = epsilon * px / qx;
            if a > 1.0 + RATIO_SLACK || a < lo * (1.0 - RATIO_SLACK) {
                return Err(Error::Precondition(format!(
                    "acceptance probability {a} at point {x} leaves [{lo}, 1]; \
                     the source is not 1/epsilon-close to the target"
                )));
            }
            Ok(a.clamp(lo, 1.0))
        })
        .collect()
}

/// The distribution of accepted points: `Q(x) * a(x)` normalized, which is
/// exactly `P` whenever the acceptance contract holds.
pub fn accepted_distribution(
    p: &Distribution,
    q: &Distribution,
    epsilon: f64,
) -> Result<Distribution> {
    let acc = rejection_acceptance(p, q, epsilon)?;
    let weights = q
        .probs()
        .iter()
        .zip(&acc)
        .map(|(&qx, &ax)| qx * ax)
        .collect();
    Distribution::normalized(weights)
}

/// Result of drawing a rejection-filtered sample.
#[derive(Debug, Clone)]
pub struct RejectionSample {
    /// The accepted examples, in acceptance order.
    pub examples: Vec<LabeledExample>,
    /// Source draws spent, accepted or not.
    pub attempts: u64,
}

/// Attempt budget for collecting `m` accepted examples: `ceil(2 m / eps^2)`,
/// under which the collection fails with probability at most `e^{-m}`.
pub fn rejection_attempt_budget(m: usize, epsilon: f64) -> u64 {
    (2.0 * m as f64 / (epsilon * epsilon)).ceil() as u64
}

/// Draws from a `Q`-stream and keeps each example with probability
/// `epsilon * P(x) / Q(x)`, until `m` examples are accepted. The accepted
/// sample is i.i.d. from `P` with the stream's labels.
pub fn pac_rejection_sample(
    stream: &mut dyn ExampleStream,
    p: &Distribution,
    q: &Distribution,
    epsilon: f64,
    m: usize,
    seed: u64,
) -> Result<RejectionSample> {
    let acc = rejection_acceptance(p, q, epsilon)?;
    let budget = rejection_attempt_budget(m, epsilon);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut examples = Vec::with_capacity(m);
    let mut attempts = 0u64;
    while examples.len() < m {
        if attempts >= budget {
            return Err(Error::StreamExhausted {
                consumed: attempts,
                context: format!(
                    "rejection filter accepted {} of {m} examples within its budget of {budget} attempts",
                    examples.len()
                ),
            });
        }
        attempts += 1;
        let ex = stream.next_example()?;
        if rand::Rng::gen::<f64>(&mut rng) < acc[ex.point] {
            examples.push(ex);
        }
    }
    Ok(RejectionSample { examples, attempts })
}

/// A learned hypothesis with an optional class index.
#[derive(Debug, Clone)]
pub struct PacHypothesis {
    /// The hypothesis labels.
    pub concept: Concept,
    /// Index into the learner's class, when the output is a member.
    pub class_index: Option<usize>,
}

/// Sample-based (PAC) learner.
pub trait PacLearner {
    /// Learns a hypothesis from a labeled sample.
    fn learn(&mut self, sample: &[LabeledExample], domain_size: usize) -> Result<PacHypothesis>;
}

/// Empirical-risk minimization over a finite class: the member with the
/// fewest sample disagreements, ties to the smaller index.
#[derive(Debug, Clone)]
pub struct ErmLearner {
    class: ConceptClass,
}

impl ErmLearner {
    /// ERM learner over `class`.
    pub fn new(class: ConceptClass) -> Self {
        ErmLearner { class }
    }
}

impl PacLearner for ErmLearner {
    fn learn(&mut self, sample: &[LabeledExample], domain_size: usize) -> Result<PacHypothesis> {
        if sample.is_empty() {
            return Err(Error::invalid("sample", "ERM needs a non-empty sample"));
        }
        if domain_size != self.class.domain().size() {
            return Err(Error::DimensionMismatch {
                what: "sample domain vs ERM class",
                expected: self.class.domain().size(),
                got: domain_size,
            });
        }
        let mut best = (0usize, u64::MAX);
        for (i, c) in self.class.concepts().iter().enumerate() {
            let mistakes = sample
                .iter()
                .filter(|ex| c.label(ex.point) != ex.label)
                .count() as u64;
            if mistakes < best.1 {
                best = (i, mistakes);
            }
        }
        Ok(PacHypothesis {
            concept: self.class.concept(best.0).clone(),
            class_index: Some(best.0),
        })
    }
}

/// Sample size under which a consistent (or ERM, in the realizable setting)
/// learner over a class of the given size reaches error `epsilon` with
/// failure probability `fail_prob`.
pub fn erm_sample_size(class_size: usize, epsilon: f64, fail_prob: f64) -> usize {
    (((class_size.max(2) as f64).ln() + (1.0 / fail_prob).ln()) / epsilon).ceil() as usize
}

/// Outcome of the rejection-filtered PAC route.
#[derive(Debug, Clone)]
pub struct RejectionPacOutcome {
    /// The learned hypothesis.
    pub hypothesis: PacHypothesis,
    /// Source draws spent.
    pub attempts: u64,
    /// Accepted examples handed to the learner.
    pub accepted: usize,
}

/// Learns under `P` from a `Q`-stream: rejection-filters `m` examples and
/// hands them to the PAC learner.
pub fn pac_rejection_learn(
    stream: &mut dyn ExampleStream,
    p: &Distribution,
    q: &Distribution,
    epsilon: f64,
    m: usize,
    learner: &mut dyn PacLearner,
    seed: u64,
) -> Result<RejectionPacOutcome> {
    let sample = pac_rejection_sample(stream, p, q, epsilon, m, seed)?;
    let hypothesis = learner.learn(&sample.examples, p.len())?;
    Ok(RejectionPacOutcome {
        hypothesis,
        attempts: sample.attempts,
        accepted: sample.examples.len(),
    })
}

/// Answers correlation queries against `P` using an oracle for `Q`.
///
/// For a query `psi` at tolerance `tau`, the importance-weighted query
/// `epsilon * (P/Q) * psi` (pointwise in `[-1, 1]` by the closeness
/// precondition) is quantized onto a grid of `n = floor(2/(epsilon tau)) + 1`
/// signs per point; sub-query `i` asks the `±1` concept whose point-`x` sign
/// is the `i`-th entry of point `x`'s sign list. The recombined answer
/// `(1/epsilon) * (1/n) * sum_i answers_i`, with each sub-query at tolerance
/// `epsilon tau / 2`, deviates from the true `P`-correlation by at most
/// `tau/2` from quantization plus `tau/2` from the sub-answers.
pub struct RejectionSqOracle<O> {
    inner: O,
    p: Distribution,
    q: Distribution,
    epsilon: f64,
    /// Importance weights `epsilon * P(x) / Q(x)`, zero off `Q`'s support.
    weights: Vec<f64>,
    account: OracleAccount,
    trace: Vec<TraceEvent>,
    recording: bool,
}

impl<O: SqOracle> RejectionSqOracle<O> {
    /// Wraps a `Q`-oracle; validates the two-sided closeness contract.
    pub fn new(inner: O, p: Distribution, q: Distribution, epsilon: f64) -> Result<Self> {
        // Shares the range validation with the rejection filter.
        let acc = rejection_acceptance(&p, &q, epsilon)?;
        let weights = q
            .probs()
            .iter()
            .zip(&acc)
            .map(|(&qx, &ax)| if qx == 0.0 { 0.0 } else { ax })
            .collect();
        Ok(RejectionSqOracle {
            inner,
            p,
            q,
            epsilon,
            weights,
            account: OracleAccount::default(),
            trace: Vec::new(),
            recording: false,
        })
    }

    /// Sub-queries spent on one `P`-query at tolerance `tau`.
    pub fn subqueries_for(&self, tau: f64) -> Result<usize> {
        quantization_grid(self.epsilon * tau / 2.0).map_err(|_| {
            Error::invalid(
                "tau",
                format!("tolerance {tau} is out of range for scale {}", self.epsilon),
            )
        })
    }

    /// The wrapped `Q`-oracle.
    pub fn inner(&self) -> &O {
        &self.inner
    }

    /// The target distribution the recombined answers refer to.
    pub fn target_distribution(&self) -> &Distribution {
        &self.p
    }

    /// The source distribution the inner oracle refers to.
    pub fn source_distribution(&self) -> &Distribution {
        &self.q
    }
}

impl<O: SqOracle> SqOracle for RejectionSqOracle<O> {
    fn answer(&mut self, query: &SqQuery) -> Result<f64> {
        let psi = query.hypothesis();
        if psi.len() != self.p.len() {
            return Err(Error::DimensionMismatch {
                what: "query hypothesis vs oracle domain",
                expected: self.p.len(),
                got: psi.len(),
            });
        }
        let tau = query.tolerance();
        let n = self.subqueries_for(tau)?;
        let inner_tau = self.epsilon * tau / 2.0;

        // Per-point minus-sign counts for the weighted query values.
        let counts: Vec<usize> = self
            .weights
            .iter()
            .zip(psi.labels())
            .map(|(&w, &s)| quantize_count((w * f64::from(s)).clamp(-1.0, 1.0), n))
            .collect();

        let mut total = 0.0;
        for i in 0..n {
            let sub = Concept::new(
                counts
                    .iter()
                    .map(|&k| if i < k { -1i8 } else { 1 })
                    .collect(),
            )?;
            total += self.inner.answer(&SqQuery::new(sub, inner_tau)?)?;
        }
        let nu = total / (self.epsilon * n as f64);

        if self.recording {
            self.trace.push(TraceEvent {
                query_index: self.account.queries,
                hypothesis: HypothesisRef::Inline(psi.labels().to_vec()),
                tolerance: tau,
                answer: nu,
                eliminated_count: 0,
            });
        }
        self.account.queries += 1;
        self.account.min_tolerance = Some(match self.account.min_tolerance {
            Some(t) => t.min(tau),
            None => tau,
        });
        Ok(nu)
    }

    fn account(&self) -> &OracleAccount {
        &self.account
    }

    fn trace(&self) -> &[TraceEvent] {
        &self.trace
    }

    fn set_recording(&mut self, on: bool) {
        self.recording = on;
    }
}

/// Strong learner by exhaustive scan: queries every class member at tolerance
/// `epsilon` and returns the one with the largest answer. When the target is
/// in the class, the winner's true correlation is at least `1 - 2 epsilon`,
/// i.e. its loss is at most `epsilon`.
pub fn scan_sq_learn(
    oracle: &mut dyn SqOracle,
    class: &ConceptClass,
    epsilon: f64,
) -> Result<(usize, Concept)> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::invalid(
            "epsilon",
            format!("scan accuracy must lie in (0, 1], got {epsilon}"),
        ));
    }
    let mut best: Option<(usize, f64)> = None;
    for i in 0..class.len() {
        let nu = oracle.answer(&SqQuery::new(class.concept(i).clone(), epsilon)?)?;
        if best.is_none_or(|(_, b)| nu > b) {
            best = Some((i, nu));
        }
    }
    let (idx, _) = best.expect("classes are non-empty");
    Ok((idx, class.concept(idx).clone()))
}

/// Outcome of converting an improper hypothesis into a class member.
#[derive(Debug, Clone)]
pub struct ProperifyOutcome {
    /// Index of the returned member.
    pub index: usize,
    /// The returned member.
    pub concept: Concept,
    /// Sample points on which the member agreed with the input hypothesis.
    pub agreement: u64,
    /// Fresh sample size used.
    pub samples: u64,
    /// Agreement count required to pass.
    pub threshold: u64,
    /// Counted state: member index plus two sample counters.
    pub bits_counted: u64,
}

/// Replaces an improper hypothesis `h` of error at most `epsilon` with a
/// class member of error at most `3 epsilon` (with high probability).
///
/// Draws `ceil(c_p ln|class| / epsilon^2)` fresh points, labels them by `h`
/// itself, and returns the member with the highest agreement (ties to the
/// lowest index), provided it reaches a `1 - 2 epsilon` fraction. Taking the
/// argmax rather than the first qualifying member keeps the output
/// independent of class order: at loose `epsilon` the `1 - 2 epsilon` bar
/// can be low enough that several members clear it.
pub fn properify(
    h: &Concept,
    class: &ConceptClass,
    p: &Distribution,
    epsilon: f64,
    cal: &Calibration,
    seed: u64,
) -> Result<ProperifyOutcome> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::invalid(
            "epsilon",
            format!("properification needs epsilon in (0, 1/2), got {epsilon}"),
        ));
    }
    if h.len() != p.len() || class.domain().size() != p.len() {
        return Err(Error::DimensionMismatch {
            what: "hypothesis/class vs distribution",
            expected: p.len(),
            got: if h.len() != p.len() {
                h.len()
            } else {
                class.domain().size()
            },
        });
    }
    let n_samples =
        ((cal.c_p * (class.len().max(2) as f64).ln()) / (epsilon * epsilon)).ceil() as u64;
    let threshold = ((1.0 - 2.0 * epsilon) * n_samples as f64).ceil() as u64;

    let sampler = DistributionSampler::new(p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<usize> = (0..n_samples).map(|_| sampler.draw(&mut rng)).collect();

    let mut best: Option<(usize, u64)> = None;
    for (i, c) in class.concepts().iter().enumerate() {
        let agreement = points.iter().filter(|&&x| c.label(x) == h.label(x)).count() as u64;
        if best.is_none_or(|(_, b)| agreement > b) {
            best = Some((i, agreement));
        }
    }
    let (index, agreement) = best.expect("classes are non-empty");
    if agreement < threshold {
        return Err(Error::NoConsistentConcept {
            threshold,
            n: n_samples,
        });
    }
    let bits = crate::boost::bits_for(class.len() as u64) as u64
        + 2 * crate::boost::bits_for(n_samples + 1) as u64;
    Ok(ProperifyOutcome {
        index,
        concept: class.concept(index).clone(),
        agreement,
        samples: n_samples,
        threshold,
        bits_counted: bits,
    })
}

/// Identifies the unique witness member within [`IDENTIFY_RADIUS`] of `h`
/// under `q`, returning its class index.
///
/// Preconditions: the witness verifies under `q` and has dimension at least
/// [`IDENTIFY_MIN_DIM`]. Pairwise member disagreements are then at least
/// `1/2 - 1/(2 dim)`; when that exceeds twice the radius the ball around `h`
/// contains at most one member, but near the dimension bound two members can
/// both fall inside, which surfaces as [`Error::AmbiguousIdentification`]
/// rather than an arbitrary pick.
pub fn exact_identify(
    h: &Concept,
    class: &ConceptClass,
    witness: &SqWitness,
    q: &Distribution,
) -> Result<usize> {
    if !verify_witness(class, q, witness)? {
        return Err(Error::Precondition(
            "identification witness does not verify under the query distribution".into(),
        ));
    }
    if witness.dim < IDENTIFY_MIN_DIM {
        return Err(Error::Precondition(format!(
            "identification needs witness dimension at least {IDENTIFY_MIN_DIM}, got {}",
            witness.dim
        )));
    }
    let mut hits = Vec::new();
    for &idx in &witness.members {
        if loss(h, class.concept(idx), q)? <= IDENTIFY_RADIUS {
            hits.push(idx);
        }
    }
    match hits.as_slice() {
        [] => Err(Error::IdentificationFailed {
            threshold: IDENTIFY_RADIUS,
        }),
        [only] => Ok(*only),
        [first, second, ..] => Err(Error::AmbiguousIdentification {
            first: *first,
            second: *second,
            threshold: IDENTIFY_RADIUS,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boost::SeededStream;
    use crate::domain::{correlation, Domain};
    use crate::oracle::ExactOracle;
    use crate::sqdim::sq_dim_exact;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn threshold_class(n: usize) -> ConceptClass {
        let concepts = (0..=n)
            .map(|j| Concept::from_fn(n, |x| x >= j).unwrap())
            .collect();
        ConceptClass::new(Domain::new(n).unwrap(), concepts).unwrap()
    }

    fn parity_class(bits: u32) -> ConceptClass {
        let n = 1usize << bits;
        let concepts = (0..n)
            .map(|a| {
                Concept::new(
                    (0..n)
                        .map(|x| if (a & x).count_ones() % 2 == 0 { 1 } else { -1 })
                        .collect(),
                )
                .unwrap()
            })
            .collect();
        ConceptClass::new(Domain::new(n).unwrap(), concepts).unwrap()
    }

    #[test]
    fn quantization_examples() {
        // tau = 1 gives a 2-point grid {1, 0, -1} over k in {0, 1, 2}.
        let q = quantize_signs(0.0, 1.0).unwrap();
        assert_eq!((q.n, q.k), (2, 1));
        assert_eq!(q.value, 0.0);
        assert_eq!(quantize_signs(1.0, 1.0).unwrap().k, 0);
        assert_eq!(quantize_signs(-1.0, 1.0).unwrap().k, 2);
        // Tie halfway between 1 and 0: the smaller k wins.
        let tie = quantize_signs(0.5, 1.0).unwrap();
        assert_eq!(tie.k, 0);
        assert_eq!(tie.value, 1.0);
        // Exact grid hit: gamma = 1/3 on the 9-point grid.
        let hit = quantize_signs(1.0 / 3.0, 0.125).unwrap();
        assert_eq!((hit.n, hit.k), (9, 3));
        assert_abs_diff_eq!(hit.value, 1.0 / 3.0, epsilon = 1e-15);
        // Between grid points: the 5-point grid rounds 1/3 to 0.2 (distance
        // 2/15), not 0.6 (distance 4/15).
        let near = quantize_signs(1.0 / 3.0, 0.25).unwrap();
        assert_eq!((near.n, near.k), (5, 2));
        assert_abs_diff_eq!(near.value, 0.2, epsilon = 1e-15);
        assert!(quantize_signs(1.5, 0.25).is_err());
        assert!(quantize_signs(0.0, 0.0).is_err());
    }

    #[test]
    fn quantization_signs_materialize_the_count() {
        let q = quantize_signs(-0.4, 0.3).unwrap();
        let signs = q.signs();
        assert_eq!(signs.len(), q.n);
        assert_eq!(signs.iter().filter(|&&s| s == -1).count(), q.k);
        let avg = signs.iter().map(|&s| f64::from(s)).sum::<f64>() / q.n as f64;
        assert_abs_diff_eq!(avg, q.value, epsilon = 1e-15);
    }

    #[test]
    fn acceptance_worked_example() {
        let p = Distribution::new(vec![0.5, 0.5]).unwrap();
        let q = Distribution::new(vec![0.25, 0.75]).unwrap();
        let acc = rejection_acceptance(&p, &q, 0.5).unwrap();
        assert_abs_diff_eq!(acc[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(acc[1], 1.0 / 3.0, epsilon = 1e-15);
        let accepted = accepted_distribution(&p, &q, 0.5).unwrap();
        for x in 0..2 {
            assert_abs_diff_eq!(accepted.prob(x), p.prob(x), epsilon = 1e-15);
        }
    }

    #[test]
    fn acceptance_rejects_contract_violations() {
        // Ratio 0.5 * 9 = 4.5 > 1 at point 0.
        let p = Distribution::new(vec![0.9, 0.1]).unwrap();
        let q = Distribution::new(vec![0.1, 0.9]).unwrap();
        assert!(matches!(
            rejection_acceptance(&p, &q, 0.5),
            Err(Error::Precondition(_))
        ));
        // Support mismatch: target mass on a source-null point.
        let p2 = Distribution::new(vec![0.5, 0.5]).unwrap();
        let q2 = Distribution::new(vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            rejection_acceptance(&p2, &q2, 0.5),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn rejection_sample_is_deterministic_and_within_budget() {
        let p = Distribution::new(vec![0.5, 0.5]).unwrap();
        let q = Distribution::new(vec![0.25, 0.75]).unwrap();
        let target = Concept::new(vec![1, -1]).unwrap();
        let run = || {
            let mut stream = SeededStream::new(&q, target.clone(), 5).unwrap();
            pac_rejection_sample(&mut stream, &p, &q, 0.5, 200, 17).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.examples, b.examples);
        assert_eq!(a.attempts, b.attempts);
        assert!(a.attempts <= rejection_attempt_budget(200, 0.5));
        // Labels come from the stream's target.
        assert!(a
            .examples
            .iter()
            .all(|ex| ex.label == target.label(ex.point)));
        // The accepted sample leans toward P, not Q: point 0 has mass 1/2
        // under P but only 1/4 under Q.
        let zeros = a.examples.iter().filter(|ex| ex.point == 0).count();
        assert!(
            (zeros as f64 / 200.0 - 0.5).abs() < 0.12,
            "accepted sample is not P-like: {zeros}/200 zeros"
        );
    }

    #[test]
    fn erm_picks_minimal_disagreement() {
        let class = threshold_class(4);
        let mut erm = ErmLearner::new(class.clone());
        // Labels consistent with theta_2 exactly.
        let sample: Vec<LabeledExample> = (0..4)
            .map(|x| LabeledExample {
                point: x,
                label: class.concept(2).label(x),
            })
            .collect();
        let h = erm.learn(&sample, 4).unwrap();
        assert_eq!(h.class_index, Some(2));
        assert_eq!(h.concept, *class.concept(2));
    }

    #[test]
    fn pac_rejection_route_learns_under_the_target_distribution() {
        let class = threshold_class(8);
        let p = Distribution::uniform(8).unwrap();
        // A source with bounded ratios against P (normalizer stays near 1).
        let q = Distribution::normalized(vec![1.5, 0.8, 1.0, 1.2, 0.6, 1.4, 0.9, 1.1]).unwrap();
        let epsilon_close = 0.25;
        let target = class.concept(5).clone();
        let m = erm_sample_size(class.len(), 0.1, 1.0 / 3.0);
        let mut stream = SeededStream::new(&q, target.clone(), 23).unwrap();
        let mut erm = ErmLearner::new(class.clone());
        let out = pac_rejection_learn(&mut stream, &p, &q, epsilon_close, m, &mut erm, 29).unwrap();
        let l = loss(&out.hypothesis.concept, &target, &p).unwrap();
        assert!(l <= 0.1, "transferred ERM loss {l} too large");
        assert_eq!(out.accepted, m);
    }

    #[test]
    fn recombined_answers_are_exact_on_the_worked_example() {
        // P = (1/2, 1/2), Q = (1/4, 3/4), epsilon = 1/2, psi = all-ones.
        // The weighted query is (1, 1/3); both values land exactly on the
        // 9-point grid, so the recombined answer is exact for every target.
        let p = Distribution::new(vec![0.5, 0.5]).unwrap();
        let q = Distribution::new(vec![0.25, 0.75]).unwrap();
        let psi = Concept::new(vec![1, 1]).unwrap();
        for labels in [[1i8, 1], [1, -1], [-1, 1], [-1, -1]] {
            let c = Concept::new(labels.to_vec()).unwrap();
            let inner = ExactOracle::new(c.clone(), q.clone()).unwrap();
            let mut oracle = RejectionSqOracle::new(inner, p.clone(), q.clone(), 0.5).unwrap();
            assert_eq!(oracle.subqueries_for(0.5).unwrap(), 9);
            let nu = oracle
                .answer(&SqQuery::new(psi.clone(), 0.5).unwrap())
                .unwrap();
            let truth = correlation(&psi, &c, &p).unwrap();
            assert_abs_diff_eq!(nu, truth, epsilon = 1e-12);
        }
    }

    #[test]
    fn recombined_answers_stay_within_half_tolerance_of_truth() {
        // Exact inner oracle: the only deviation left is quantization, which
        // is bounded by tau/2 by the grid-resolution choice.
        let sizes = [2usize, 4, 8];
        for &n in &sizes {
            let class = threshold_class(n);
            let p = Distribution::uniform(n).unwrap();
            let raw: Vec<f64> = (0..n)
                .map(|x| 1.0 + 0.5 * ((x * 7 + 3) % 5) as f64 / 5.0)
                .collect();
            let q = Distribution::normalized(raw).unwrap();
            let epsilon_close = 0.5;
            for tau in [0.5f64, 0.25] {
                for target in class.concepts() {
                    let inner = ExactOracle::new(target.clone(), q.clone()).unwrap();
                    let mut oracle =
                        RejectionSqOracle::new(inner, p.clone(), q.clone(), epsilon_close).unwrap();
                    for psi in class.concepts() {
                        let nu = oracle
                            .answer(&SqQuery::new(psi.clone(), tau).unwrap())
                            .unwrap();
                        let truth = correlation(psi, target, &p).unwrap();
                        assert!(
                            (nu - truth).abs() <= tau / 2.0 + 1e-12,
                            "n={n} tau={tau}: recombined {nu} vs true {truth}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn rejection_oracle_rejects_distant_sources() {
        let p = Distribution::new(vec![0.9, 0.1]).unwrap();
        let q = Distribution::new(vec![0.1, 0.9]).unwrap();
        let c = Concept::new(vec![1, -1]).unwrap();
        let inner = ExactOracle::new(c, q.clone()).unwrap();
        assert!(matches!(
            RejectionSqOracle::new(inner, p, q, 0.5),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn scan_learner_through_the_rejection_oracle() {
        let class = threshold_class(8);
        let p = Distribution::uniform(8).unwrap();
        let q = Distribution::normalized(vec![1.2, 0.9, 1.1, 0.8, 1.0, 1.3, 0.7, 1.0]).unwrap();
        let target_idx = 3;
        let inner = ExactOracle::new(class.concept(target_idx).clone(), q.clone()).unwrap();
        let mut oracle = RejectionSqOracle::new(inner, p.clone(), q, 0.5).unwrap();
        let (idx, h) = scan_sq_learn(&mut oracle, &class, 0.05).unwrap();
        let l = loss(&h, class.concept(target_idx), &p).unwrap();
        assert!(l <= 0.05, "scan loss {l} exceeds the accuracy bound");
        // On thresholds under near-uniform weights the scan recovers the
        // target index itself.
        assert_eq!(idx, target_idx);
    }

    #[test]
    fn properify_recovers_the_target_from_its_own_labels() {
        let class = threshold_class(16);
        let p = Distribution::uniform(16).unwrap();
        let cal = Calibration::default();
        // Neighboring thresholds differ by mass 1/16 = 0.0625 > 3 epsilon, so
        // only the target passes the agreement threshold.
        let epsilon = 0.02;
        for target_idx in [0usize, 7, 16] {
            let out = properify(class.concept(target_idx), &class, &p, epsilon, &cal, 41).unwrap();
            assert_eq!(out.index, target_idx);
            assert_eq!(out.agreement, out.samples);
        }
    }

    #[test]
    fn properify_tolerates_epsilon_corruption() {
        let class = threshold_class(16);
        let p = Distribution::uniform(16).unwrap();
        let cal = Calibration::default();
        let epsilon = 0.1;
        let target_idx = 8;
        // Corrupt one point: mass 1/16 < epsilon.
        let h = class.concept(target_idx).with_flipped(&[2]);
        let out = properify(&h, &class, &p, epsilon, &cal, 43).unwrap();
        let l = loss(&out.concept, class.concept(target_idx), &p).unwrap();
        assert!(
            l <= 3.0 * epsilon,
            "properified member at loss {l} from the original target"
        );
    }

    #[test]
    fn properify_prefers_the_best_member_at_loose_epsilon() {
        // At epsilon = 0.25 the agreement bar is 1 - 2 epsilon = 1/2, which
        // every parity clears against any other parity; the argmax rule must
        // still return the exact match, not the first member over the bar.
        let class = parity_class(3);
        let p = Distribution::uniform(8).unwrap();
        let cal = Calibration::default();
        let out = properify(class.concept(5), &class, &p, 0.25, &cal, 53).unwrap();
        assert_eq!(out.index, 5);
        assert_eq!(out.agreement, out.samples);
    }

    #[test]
    fn properify_reports_when_no_member_is_close() {
        // Alternating labels are at distance 1/2 - O(1/n) from every
        // threshold, far beyond the 2-epsilon agreement slack.
        let class = threshold_class(16);
        let p = Distribution::uniform(16).unwrap();
        let h = Concept::from_fn(16, |x| x % 2 == 0).unwrap();
        match properify(&h, &class, &p, 0.05, &Calibration::default(), 47) {
            Err(Error::NoConsistentConcept { .. }) => {}
            other => panic!("expected no consistent member, got {other:?}"),
        }
    }

    #[test]
    fn identify_recovers_members_from_small_corruption() {
        // 8-point parity witness: pairwise disagreement 1/2, single-point
        // corruption 1/8 < the radius margin, so every flip identifies.
        let class = parity_class(3);
        let p = Distribution::uniform(8).unwrap();
        let witness = sq_dim_exact(&class, &p, 24).unwrap();
        assert_eq!(witness.dim, 8);
        for target_idx in 0..class.len() {
            for flip in 0..8usize {
                let h = class.concept(target_idx).with_flipped(&[flip]);
                let got = exact_identify(&h, &class, &witness, &p).unwrap();
                assert_eq!(got, target_idx, "flip {flip} misidentified");
            }
        }
    }

    #[test]
    fn identify_surfaces_boundary_ambiguity() {
        // On the 4-point parity witness a single flipped point sits at
        // distance 1/4 from the true member and 1/4 from one other, both
        // inside the radius: ambiguity is an error, not a pick.
        let class = parity_class(2);
        let p = Distribution::uniform(4).unwrap();
        let witness = sq_dim_exact(&class, &p, 24).unwrap();
        assert_eq!(witness.dim, 4);
        let h = class.concept(0).with_flipped(&[3]);
        match exact_identify(&h, &class, &witness, &p) {
            Err(Error::AmbiguousIdentification { .. }) => {}
            other => panic!("expected ambiguity, got {other:?}"),
        }
    }

    #[test]
    fn identify_reports_distant_hypotheses_and_low_dimension() {
        let class = parity_class(3);
        let p = Distribution::uniform(8).unwrap();
        let witness = sq_dim_exact(&class, &p, 24).unwrap();
        // Three flips of the all-ones member: distance 3/8 to it and at
        // least 3/8 to every other member.
        let h = class.concept(0).with_flipped(&[0, 1, 2]);
        for idx in &witness.members {
            assert!(loss(&h, class.concept(*idx), &p).unwrap() > IDENTIFY_RADIUS);
        }
        match exact_identify(&h, &class, &witness, &p) {
            Err(Error::IdentificationFailed { .. }) => {}
            other => panic!("expected failed identification, got {other:?}"),
        }

        let thresholds = threshold_class(8);
        let u8d = Distribution::uniform(8).unwrap();
        let w2 = sq_dim_exact(&thresholds, &u8d, 24).unwrap();
        assert_eq!(w2.dim, 2);
        match exact_identify(thresholds.concept(0), &thresholds, &w2, &u8d) {
            Err(Error::Precondition(_)) => {}
            other => panic!("expected a dimension precondition, got {other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn quantization_meets_its_resolution_bound(
            gamma in -1.0f64..=1.0,
            tau in 0.01f64..=1.0,
        ) {
            let q = quantize_signs(gamma, tau).unwrap();
            prop_assert!(q.k <= q.n);
            prop_assert!(1.0 / q.n as f64 <= tau);
            prop_assert!((q.value - gamma).abs() <= 1.0 / q.n as f64 + 1e-12);
            prop_assert!((q.value - gamma).abs() < tau);
        }

        #[test]
        fn accepted_distribution_reproduces_the_target(
            raw_p in proptest::collection::vec(0.1f64..1.0, 2..10),
            ratios in proptest::collection::vec(0.6f64..1.6, 2..10),
        ) {
            let n = raw_p.len().min(ratios.len());
            let p = Distribution::normalized(raw_p[..n].to_vec()).unwrap();
            let q = Distribution::normalized(
                p.probs().iter().zip(&ratios).map(|(&px, &r)| px * r).collect(),
            ).unwrap();
            // Ratios live in [0.6/1.6, 1.6/0.6] ⊂ [0.3, 2.7]; epsilon = 0.3
            // keeps the acceptance contract satisfiable.
            let accepted = accepted_distribution(&p, &q, 0.3).unwrap();
            for x in 0..n {
                prop_assert!((accepted.prob(x) - p.prob(x)).abs() <= 1e-12);
            }
        }
    }
}

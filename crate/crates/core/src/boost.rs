//! Boost-by-majority with rejection sampling, and its statistical-query form.
//!
//! The booster runs `T` rounds. In round `t` it draws examples from the base
//! distribution and keeps each with a probability given by a binomial weight
//! of the example's current voting margin, which induces the round
//! distribution `P_t(x) = w_t(x) P(x) / Z`. Accepted examples feed a weak
//! learner; the returned hypotheses are aggregated by majority vote.
//!
//! Two deliberate departures from the textbook presentation, both recorded in
//! the project notes:
//!
//! * The weight argument is the label-relative margin `y * sum_i h_i(x)`, not
//!   the raw vote sum. The raw sum does not distinguish a point every
//!   hypothesis gets right from one every hypothesis gets wrong, and boosting
//!   with it provably stalls; the floor expression in the weight is exactly
//!   the pivotal-vote count only under the margin reading.
//! * Acceptance probabilities are normalized by the round's maximal feasible
//!   weight. Rejection sampling induces the same `P_t` under any constant
//!   scaling, and without the normalization the raw binomial densities (of
//!   order `1/sqrt(T)` and below) reject essentially everything at large `T`,
//!   which would trip the consecutive-rejection abort in round one.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Calibration;
use crate::domain::{
    correlation, Concept, ConceptClass, Distribution, DistributionSampler, LabeledExample,
};
use crate::error::{Error, Result};
use crate::oracle::{SqOracle, SqQuery};

/// Natural-log factorial table, shared across weight-row evaluations.
#[derive(Debug, Clone)]
pub struct LnFactorial {
    table: Vec<f64>,
}

impl LnFactorial {
    /// Table covering `0! ..= n!`.
    pub fn up_to(n: usize) -> Self {
        let mut table = Vec::with_capacity(n + 1);
        table.push(0.0);
        for k in 1..=n {
            table.push(table[k - 1] + (k as f64).ln());
        }
        LnFactorial { table }
    }

    /// Whether the table covers `n!`.
    pub fn covers(&self, n: usize) -> bool {
        self.table.len() > n
    }

    fn ln_choose(&self, n: usize, k: usize) -> f64 {
        self.table[n] - self.table[k] - self.table[n - k]
    }
}

/// Binomial probability mass `C(n,k) p^k (1-p)^{n-k}`, with the convention
/// that out-of-range `k` (negative or above `n`) has mass zero.
pub fn binom_pmf(n: usize, k: i64, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(
            "p",
            format!("probability must lie in [0,1], got {p}"),
        ));
    }
    if k < 0 || k > n as i64 {
        return Ok(0.0);
    }
    let k = k as usize;
    // Degenerate coins first: 0^0 = 1 under the pmf convention.
    if p == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    if p == 1.0 {
        return Ok(if k == n { 1.0 } else { 0.0 });
    }
    let lf = LnFactorial::up_to(n);
    Ok(ln_pmf(&lf, n, k, p).exp())
}

fn ln_pmf(lf: &LnFactorial, n: usize, k: usize, p: f64) -> f64 {
    lf.ln_choose(n, k) + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()
}

/// Boosting weight of a margin-`r` example at round `t` of a `rounds_total`
/// horizon: the binomial mass at the pivotal remaining-vote count,
/// `Binom(T-t, floor((T-t-r)/2), 1/2+gamma)`.
pub fn bbm_weight(rounds_total: usize, t: usize, r: i64, gamma: f64) -> Result<f64> {
    if t > rounds_total {
        return Err(Error::invalid(
            "t",
            format!("round {t} exceeds the horizon {rounds_total}"),
        ));
    }
    if r.unsigned_abs() as usize > t {
        return Err(Error::invalid(
            "r",
            format!("margin {r} is impossible after {t} rounds"),
        ));
    }
    let s = rounds_total - t;
    let k = (s as i64 - r).div_euclid(2);
    binom_pmf(s, k, 0.5 + gamma)
}

/// One round's weights over the margins `-t ..= t`, rescaled so the largest
/// weight among margins of the feasible parity (`m = t mod 2`) is exactly 1.
///
/// The rescaling cancels in every normalized quantity (round distributions,
/// simulated correlations) and turns the values into directly usable
/// acceptance probabilities. Values are computed on demand from a shared
/// log-factorial table: a boosting round only ever evaluates the weights of
/// margins that actually occur, so materializing all `2t + 1` of them would
/// make long horizons quadratic for no benefit.
#[derive(Debug, Clone)]
pub struct WeightRow {
    rounds_total: usize,
    round: usize,
    gamma: f64,
    lf: Arc<LnFactorial>,
    /// Log of the peak raw (unscaled) weight over feasible margins.
    ln_peak: f64,
}

impl WeightRow {
    /// Builds the row for round `t` (weights applied to margins after `t`
    /// hypotheses, i.e. the acceptance weights for round `t+1`'s sample).
    /// The factorial table must cover `rounds_total`.
    pub fn new(rounds_total: usize, t: usize, gamma: f64, lf: Arc<LnFactorial>) -> Result<Self> {
        if t > rounds_total {
            return Err(Error::invalid(
                "t",
                format!("round {t} exceeds the horizon {rounds_total}"),
            ));
        }
        let p = 0.5 + gamma;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(
                "gamma",
                format!("advantage must lie in [-1/2, 1/2], got {gamma}"),
            ));
        }
        let s = rounds_total - t;
        if !lf.covers(s) {
            return Err(Error::invalid(
                "lf",
                format!("factorial table does not cover {s}"),
            ));
        }
        // As m runs over the feasible margins {-t, -t+2, ..., t}, the pivot
        // count k = floor((s - m)/2) steps through a contiguous integer range,
        // so the peak of the (unimodal) pmf over feasible margins is the pmf
        // at the mode clamped into that range.
        let k_lo = (s as i64 - t as i64).div_euclid(2).max(0);
        let k_hi = (s as i64 + t as i64).div_euclid(2).min(s as i64);
        debug_assert!(k_lo <= k_hi);
        let ln_peak = if p == 0.0 {
            if k_lo > 0 {
                return Err(Error::DegenerateRound { round: t });
            }
            0.0
        } else if p == 1.0 {
            if k_hi < s as i64 {
                return Err(Error::DegenerateRound { round: t });
            }
            0.0
        } else {
            let mode = (((s + 1) as f64) * p).floor() as i64;
            let k_peak = mode.clamp(k_lo, k_hi) as usize;
            ln_pmf(&lf, s, k_peak, p)
        };
        Ok(WeightRow {
            rounds_total,
            round: t,
            gamma,
            lf,
            ln_peak,
        })
    }

    /// Round index `t` the row belongs to.
    pub fn round(&self) -> usize {
        self.round
    }

    /// Horizon `T`.
    pub fn rounds_total(&self) -> usize {
        self.rounds_total
    }

    /// Advantage parameter.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Log of the raw peak weight this row was rescaled by.
    pub fn ln_peak(&self) -> f64 {
        self.ln_peak
    }

    /// Rescaled weight (equals acceptance probability) of margin `m`.
    pub fn value(&self, m: i64) -> f64 {
        let t = self.round as i64;
        if m < -t || m > t {
            return 0.0;
        }
        let s = (self.rounds_total - self.round) as i64;
        let k = (s - m).div_euclid(2);
        if k < 0 || k > s {
            return 0.0;
        }
        let p = 0.5 + self.gamma;
        if p == 0.0 {
            return if k == 0 { 1.0 } else { 0.0 };
        }
        if p == 1.0 {
            return if k == s { 1.0 } else { 0.0 };
        }
        (ln_pmf(&self.lf, s as usize, k as usize, p) - self.ln_peak).exp()
    }
}

/// Normalizes `p(x) * weights(x)` into a distribution; an all-zero product is
/// the degenerate-round condition.
pub fn normalized_reweight(
    p: &Distribution,
    weights: &[f64],
    round: usize,
) -> Result<Distribution> {
    if weights.len() != p.len() {
        return Err(Error::DimensionMismatch {
            what: "reweighting vector vs distribution",
            expected: p.len(),
            got: weights.len(),
        });
    }
    let prods: Vec<f64> = p
        .probs()
        .iter()
        .zip(weights)
        .map(|(&px, &w)| px * w)
        .collect();
    if prods.iter().sum::<f64>() <= 0.0 {
        return Err(Error::DegenerateRound { round });
    }
    Distribution::normalized(prods)
}

/// Raw vote sum per point for a hypothesis list.
pub fn vote_counts(hypotheses: &[Concept], n: usize) -> Vec<i64> {
    let mut votes = vec![0i64; n];
    for h in hypotheses {
        for (v, &l) in votes.iter_mut().zip(h.labels()) {
            *v += l as i64;
        }
    }
    votes
}

/// The round distribution `P_t` induced by the collected hypotheses against a
/// known target: `P_t(x) ∝ P(x) * w(margin(x))`.
pub fn bbm_distribution(
    p: &Distribution,
    hypotheses: &[Concept],
    target: &Concept,
    rounds_total: usize,
    gamma: f64,
) -> Result<Distribution> {
    let t = hypotheses.len();
    let lf = Arc::new(LnFactorial::up_to(rounds_total));
    let row = WeightRow::new(rounds_total, t, gamma, lf)?;
    let votes = vote_counts(hypotheses, p.len());
    if target.len() != p.len() {
        return Err(Error::DimensionMismatch {
            what: "target vs distribution",
            expected: p.len(),
            got: target.len(),
        });
    }
    let weights: Vec<f64> = votes
        .iter()
        .zip(target.labels())
        .map(|(&v, &y)| row.value(y as i64 * v))
        .collect();
    normalized_reweight(p, &weights, t)
}

/// Majority-vote aggregate of weak hypotheses. Ties (vote sum zero, which
/// includes the empty aggregate) evaluate to `-1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MajorityHypothesis {
    /// Member hypotheses, in collection order.
    pub members: Vec<Concept>,
}

impl MajorityHypothesis {
    /// Sign of the vote sum at `x`, ties to `-1`.
    pub fn eval(&self, x: usize) -> i8 {
        let sum: i64 = self.members.iter().map(|h| h.label(x) as i64).sum();
        if sum > 0 {
            1
        } else {
            -1
        }
    }

    /// Materializes the vote as a plain concept over an `n`-point domain.
    pub fn to_concept(&self, n: usize) -> Result<Concept> {
        Concept::new((0..n).map(|x| self.eval(x)).collect())
    }
}

/// Parameters of one boosting run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoostParams {
    /// Assumed weak-learner advantage.
    pub gamma: f64,
    /// Target error of the majority vote.
    pub epsilon: f64,
    /// Horizon `T`.
    pub rounds: usize,
    /// Consecutive-rejection limit before the run aborts.
    pub abort_window: usize,
    /// Accepted examples per round handed to the weak learner.
    pub examples_per_round: usize,
    /// Check the stop rule every this many rounds (sampled runs).
    pub stop_check_every: usize,
    /// Fresh examples per stop-rule check.
    pub validation_samples: usize,
}

impl BoostParams {
    /// Derives the horizon and abort window from `(gamma, epsilon)`:
    /// `T = ceil(ln(1/eps)/gamma^2) * c_t` and
    /// `abort_window = ceil(c_abort * ln(T+1) / eps^3)`.
    pub fn new(
        gamma: f64,
        epsilon: f64,
        examples_per_round: usize,
        cal: &Calibration,
    ) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 0.5) {
            return Err(Error::invalid(
                "gamma",
                format!("advantage must lie in (0, 1/2), got {gamma}"),
            ));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::invalid(
                "epsilon",
                format!("target error must lie in (0,1), got {epsilon}"),
            ));
        }
        if examples_per_round == 0 {
            return Err(Error::invalid(
                "examples_per_round",
                "at least one example per round",
            ));
        }
        let rounds = ((1.0 / epsilon).ln() / (gamma * gamma)).ceil() as usize * cal.c_t as usize;
        let rounds = rounds.max(1);
        let abort_window =
            (cal.c_abort * ((rounds + 1) as f64).ln() / epsilon.powi(3)).ceil() as usize;
        Ok(BoostParams {
            gamma,
            epsilon,
            rounds,
            abort_window,
            examples_per_round,
            stop_check_every: 4,
            validation_samples: (16.0 / (epsilon * epsilon)).ceil() as usize,
        })
    }
}

/// A labeled-example source.
pub trait ExampleStream {
    /// Next i.i.d. labeled example.
    fn next_example(&mut self) -> Result<LabeledExample>;
    /// Examples drawn so far.
    fn consumed(&self) -> u64;
}

/// Seeded i.i.d. stream from a distribution labeled by a fixed target,
/// optionally capped to model a finite sample budget.
#[derive(Debug, Clone)]
pub struct SeededStream {
    sampler: DistributionSampler,
    target: Concept,
    rng: ChaCha8Rng,
    consumed: u64,
    cap: Option<u64>,
}

impl SeededStream {
    /// Unbounded stream.
    pub fn new(dist: &Distribution, target: Concept, seed: u64) -> Result<Self> {
        if target.len() != dist.len() {
            return Err(Error::DimensionMismatch {
                what: "target vs distribution",
                expected: dist.len(),
                got: target.len(),
            });
        }
        Ok(SeededStream {
            sampler: DistributionSampler::new(dist),
            target,
            rng: ChaCha8Rng::seed_from_u64(seed),
            consumed: 0,
            cap: None,
        })
    }

    /// Caps the stream at `cap` total draws.
    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = Some(cap);
        self
    }
}

impl ExampleStream for SeededStream {
    fn next_example(&mut self) -> Result<LabeledExample> {
        if let Some(cap) = self.cap {
            if self.consumed >= cap {
                return Err(Error::StreamExhausted {
                    consumed: self.consumed,
                    context: "stream cap reached".into(),
                });
            }
        }
        self.consumed += 1;
        let point = self.sampler.draw(&mut self.rng);
        Ok(LabeledExample {
            point,
            label: self.target.label(point),
        })
    }

    fn consumed(&self) -> u64 {
        self.consumed
    }
}

/// A weak hypothesis along with how it can be referenced compactly.
#[derive(Debug, Clone)]
pub struct WeakHypothesis {
    /// The hypothesis itself.
    pub concept: Concept,
    /// `(class index, negated)` when the hypothesis is a signed class member.
    pub class_ref: Option<(usize, bool)>,
}

/// Sample-based weak learner.
pub trait WeakLearner {
    /// Learns from one round's accepted sample.
    fn learn(&mut self, sample: &[LabeledExample], domain_size: usize) -> Result<WeakHypothesis>;
    /// Bits needed to reference one returned hypothesis, when the learner
    /// draws from a fixed signed family; `None` means hypotheses are inline.
    fn ref_width(&self) -> Option<u32>;
}

/// Maximal prefix-greedy set of class members whose pairwise correlations
/// under `p` are at most `1/d` in magnitude.
pub fn orthogonal_cover(class: &ConceptClass, p: &Distribution, d: usize) -> Result<Vec<usize>> {
    if d == 0 {
        return Err(Error::invalid("d", "dimension bound must be positive"));
    }
    let bound = 1.0 / d as f64;
    let mut cover: Vec<usize> = Vec::new();
    for i in 0..class.len() {
        let mut ok = true;
        for &j in &cover {
            if correlation(class.concept(i), class.concept(j), p)?.abs() > bound {
                ok = false;
                break;
            }
        }
        if ok {
            cover.push(i);
        }
    }
    Ok(cover)
}

/// Weak learner that scans a near-orthogonal cover of the class under the
/// empirical distribution of the round sample and returns the signed member
/// with the largest empirical correlation against the labels.
#[derive(Debug, Clone)]
pub struct CoverWeakLearner {
    class: ConceptClass,
    d: usize,
}

impl CoverWeakLearner {
    /// Weak learner over `class` at dimension bound `d`.
    pub fn new(class: ConceptClass, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("d", "dimension bound must be positive"));
        }
        Ok(CoverWeakLearner { class, d })
    }
}

impl WeakLearner for CoverWeakLearner {
    fn learn(&mut self, sample: &[LabeledExample], domain_size: usize) -> Result<WeakHypothesis> {
        if sample.is_empty() {
            return Err(Error::invalid(
                "sample",
                "weak learner needs a non-empty sample",
            ));
        }
        if domain_size != self.class.domain().size() {
            return Err(Error::DimensionMismatch {
                what: "sample domain vs weak-learner class",
                expected: self.class.domain().size(),
                got: domain_size,
            });
        }
        let mut counts = vec![0.0f64; domain_size];
        for ex in sample {
            counts[ex.point] += 1.0;
        }
        let empirical = Distribution::normalized(counts)?;
        let cover = orthogonal_cover(&self.class, &empirical, self.d)?;
        let m = sample.len() as f64;
        let mut best: Option<(usize, f64)> = None;
        for &i in &cover {
            let h = self.class.concept(i);
            let corr: f64 = sample
                .iter()
                .map(|ex| (h.label(ex.point) * ex.label) as f64)
                .sum::<f64>()
                / m;
            if best.is_none_or(|(_, b)| corr.abs() > b.abs()) {
                best = Some((i, corr));
            }
        }
        let (idx, corr) = best.expect("cover of a non-empty class is non-empty");
        let negated = corr < 0.0;
        let concept = if negated {
            self.class.concept(idx).negated()
        } else {
            self.class.concept(idx).clone()
        };
        Ok(WeakHypothesis {
            concept,
            class_ref: Some((idx, negated)),
        })
    }

    fn ref_width(&self) -> Option<u32> {
        Some(bits_for(2 * self.class.len() as u64))
    }
}

/// Bits needed to address `n` distinct values.
pub fn bits_for(n: u64) -> u32 {
    64 - n.saturating_sub(1).leading_zeros()
}

/// Outcome of a sample-based boosting run.
#[derive(Debug, Clone)]
pub struct BoostOutcome {
    /// The aggregated hypothesis.
    pub majority: MajorityHypothesis,
    /// Rounds that produced a hypothesis.
    pub rounds_completed: usize,
    /// Round at which the consecutive-rejection abort fired, if any.
    pub aborted_at: Option<usize>,
    /// Rounds whose weak-learner call failed.
    pub flagged_rounds: Vec<usize>,
    /// Whether the stop rule ended the run before the horizon.
    pub early_stopped: bool,
    /// Total stream draws (acceptance attempts plus validation).
    pub samples_consumed: u64,
    /// Counted state bits: hypothesis references plus loop counters.
    pub bits_counted: u64,
    /// Per-hypothesis `(class index, negated)` references when available.
    pub class_refs: Vec<Option<(usize, bool)>>,
}

/// Boost-by-majority from examples, with rejection sampling.
///
/// Per round: draw from the stream, accept with the margin weight, collect
/// `examples_per_round` accepted examples (or abort after `abort_window`
/// consecutive rejections), call the weak learner, and fold its hypothesis
/// into the vote. The stop rule estimates the majority's error on fresh
/// validation draws every `stop_check_every` rounds and ends the run once the
/// estimate reaches `epsilon/2`.
pub fn bbm_boost(
    stream: &mut dyn ExampleStream,
    weak: &mut dyn WeakLearner,
    params: &BoostParams,
    domain_size: usize,
    seed: u64,
) -> Result<BoostOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lf = Arc::new(LnFactorial::up_to(params.rounds));
    let mut votes = vec![0i64; domain_size];
    let mut hyps: Vec<Concept> = Vec::new();
    let mut class_refs = Vec::new();
    let mut flagged = Vec::new();
    let mut aborted_at = None;
    let mut early_stopped = false;
    let start = stream.consumed();

    'rounds: for t in 0..params.rounds {
        let row = WeightRow::new(params.rounds, t, params.gamma, lf.clone())?;
        let mut accepted: Vec<LabeledExample> = Vec::with_capacity(params.examples_per_round);
        let mut consecutive = 0usize;
        while accepted.len() < params.examples_per_round {
            if consecutive >= params.abort_window {
                aborted_at = Some(t);
                break 'rounds;
            }
            let ex = stream.next_example()?;
            let margin = ex.label as i64 * votes[ex.point];
            if rng.gen::<f64>() < row.value(margin) {
                accepted.push(ex);
                consecutive = 0;
            } else {
                consecutive += 1;
            }
        }
        let wh = match weak.learn(&accepted, domain_size) {
            Ok(wh) => wh,
            Err(_) => {
                flagged.push(t);
                aborted_at = Some(t);
                break 'rounds;
            }
        };
        for (v, &l) in votes.iter_mut().zip(wh.concept.labels()) {
            *v += l as i64;
        }
        hyps.push(wh.concept);
        class_refs.push(wh.class_ref);

        if (t + 1) % params.stop_check_every == 0 {
            // Majority sign straight from the vote table (ties resolve to -1,
            // matching `MajorityHypothesis::eval`); cloning the hypothesis
            // list here would make long runs quadratic.
            let mut mistakes = 0u64;
            for _ in 0..params.validation_samples {
                let ex = stream.next_example()?;
                let maj = if votes[ex.point] > 0 { 1 } else { -1 };
                if maj != ex.label {
                    mistakes += 1;
                }
            }
            let est = mistakes as f64 / params.validation_samples as f64;
            if est <= params.epsilon / 2.0 {
                early_stopped = true;
                break 'rounds;
            }
        }
    }

    let ref_bits: u64 = class_refs
        .iter()
        .map(|r| match (r, weak.ref_width()) {
            (Some(_), Some(w)) => w as u64,
            _ => domain_size as u64,
        })
        .sum();
    let counter_bits = bits_for(params.rounds as u64 + 1)
        + bits_for(params.examples_per_round as u64 + 1)
        + bits_for(params.abort_window as u64 + 1);
    Ok(BoostOutcome {
        rounds_completed: hyps.len(),
        majority: MajorityHypothesis { members: hyps },
        aborted_at,
        flagged_rounds: flagged,
        early_stopped,
        samples_consumed: stream.consumed() - start,
        bits_counted: ref_bits + counter_bits as u64,
        class_refs,
    })
}

/// Statistical-query weak learner: queries a near-orthogonal cover of the
/// class at tolerance `1/(3d)` and returns the signed member with the largest
/// answered correlation. When the class has SQ dimension at most `d` under
/// the oracle's distribution, the returned correlation is at least `1/(3d)`.
pub fn weak_sq_learn(
    oracle: &mut dyn SqOracle,
    class: &ConceptClass,
    p: &Distribution,
    d: usize,
) -> Result<WeakHypothesis> {
    let cover = orthogonal_cover(class, p, d)?;
    let tau = 1.0 / (3.0 * d as f64);
    let mut best: Option<(usize, f64)> = None;
    for &i in &cover {
        let nu = oracle.answer(&SqQuery::new(class.concept(i).clone(), tau)?)?;
        if best.is_none_or(|(_, b)| nu.abs() > b.abs()) {
            best = Some((i, nu));
        }
    }
    let (idx, nu) = best.expect("cover of a non-empty class is non-empty");
    let negated = nu < 0.0;
    let concept = if negated {
        class.concept(idx).negated()
    } else {
        class.concept(idx).clone()
    };
    Ok(WeakHypothesis {
        concept,
        class_ref: Some((idx, negated)),
    })
}

/// Boosting state visible to the query simulation: the horizon, advantage,
/// target error, and the hypotheses collected so far. Vote counts are always
/// recomputed from the hypothesis list, never stored per point.
#[derive(Debug, Clone)]
pub struct BoostState {
    /// Horizon `T`.
    pub rounds_total: usize,
    /// Advantage `gamma`.
    pub gamma: f64,
    /// Target error, which sets the simulation tolerance scale.
    pub epsilon: f64,
    /// Hypotheses collected in rounds `1..=t`.
    pub hypotheses: Vec<Concept>,
}

impl BoostState {
    /// Current round index `t`.
    pub fn round(&self) -> usize {
        self.hypotheses.len()
    }
}

/// Simulates the correlation query `psi` against the round distribution
/// `P_t` using only base-distribution queries.
///
/// The domain splits into label-free regions by raw vote value `v`; on the
/// region `R_v` the weight is `wbar + wtil * c(x)` with
/// `wbar = (w(v)+w(-v))/2`, `wtil = (w(v)-w(-v))/2`, so the reweighted
/// numerator and normalizer reduce to per-region base queries. Each populated
/// region costs two base queries (plus one shared all-ones query), every one
/// at tolerance `tau * eps^3 / (2 c_sim (t+1))`.
pub fn sq_simulate_query(
    base: &mut dyn SqOracle,
    psi: &Concept,
    state: &BoostState,
    p: &Distribution,
    tau: f64,
    cal: &Calibration,
) -> Result<f64> {
    let votes = vote_counts(&state.hypotheses, p.len());
    let lf = Arc::new(LnFactorial::up_to(state.rounds_total));
    let row = WeightRow::new(state.rounds_total, state.round(), state.gamma, lf)?;
    simulate_with(base, psi, &votes, &row, p, tau, state.epsilon, cal.c_sim)
}

/// Core of the query simulation, reusing a prebuilt vote table and weight row.
#[allow(clippy::too_many_arguments)]
fn simulate_with(
    base: &mut dyn SqOracle,
    psi: &Concept,
    votes: &[i64],
    row: &WeightRow,
    p: &Distribution,
    tau: f64,
    epsilon: f64,
    c_sim: f64,
) -> Result<f64> {
    if psi.len() != p.len() {
        return Err(Error::DimensionMismatch {
            what: "query vs distribution",
            expected: p.len(),
            got: psi.len(),
        });
    }
    let t = row.round();
    let base_tau = tau * epsilon.powi(3) / (2.0 * c_sim * (t + 1) as f64);
    let n = p.len();

    // Populated regions: raw vote value -> point list.
    let mut regions: std::collections::BTreeMap<i64, Vec<usize>> =
        std::collections::BTreeMap::new();
    for (x, &v) in votes.iter().enumerate() {
        if p.prob(x) > 0.0 {
            regions.entry(v).or_default().push(x);
        }
    }

    let ones = Concept::from_fn(n, |_| true)?;
    // E_P[c], shared by every region's sign-mass recovery.
    let u = base.answer(&SqQuery::new(ones.clone(), base_tau)?)?;

    let mut numer = 0.0;
    let mut z_hat = 0.0;
    for (&v, points) in &regions {
        let wbar = (row.value(v) + row.value(-v)) / 2.0;
        let wtil = (row.value(v) - row.value(-v)) / 2.0;
        if wbar == 0.0 && wtil == 0.0 {
            continue;
        }
        // Label-free region statistics are computed exactly from P.
        let mass: f64 = points.iter().map(|&x| p.prob(x)).sum();
        let psi_mass: f64 = points
            .iter()
            .map(|&x| p.prob(x) * psi.label(x) as f64)
            .sum();

        // Signed mass S_v = E_P[1_R c] via the +1-on-R/-1-off-R query.
        let marker = Concept::from_fn(n, |x| votes[x] == v && p.prob(x) > 0.0)?;
        let s_v = (base.answer(&SqQuery::new(marker, base_tau)?)? + u) / 2.0;

        // E_P[1_R psi c] via the psi-on-R/+1-off-R query.
        let masked = Concept::new(
            (0..n)
                .map(|x| {
                    if votes[x] == v && p.prob(x) > 0.0 {
                        psi.label(x)
                    } else {
                        1
                    }
                })
                .collect(),
        )?;
        let masked_ans = base.answer(&SqQuery::new(masked, base_tau)?)?;
        let region_corr = masked_ans - u + s_v;

        numer += wbar * region_corr + wtil * psi_mass;
        z_hat += wbar * mass + wtil * s_v;
    }
    if z_hat <= 0.0 {
        return Err(Error::DegenerateSimulation { z_hat });
    }
    Ok(numer / z_hat)
}

/// Per-round record of an SQ boosting run.
#[derive(Debug, Clone)]
pub struct SqBoostRound {
    /// Round index.
    pub t: usize,
    /// Chosen signed class member.
    pub class_ref: (usize, bool),
    /// Normalizer relative to the peak weight, `Z_t / w_max`.
    pub z_rel: f64,
    /// Largest `P_t(x)/P(x)` over the support.
    pub max_ratio: f64,
    /// Worst simulated-vs-exact deviation among this round's queries
    /// (populated when auditing is on).
    pub sim_max_dev: Option<f64>,
    /// The materialized round distribution (populated when recording is on).
    pub p_t: Option<Distribution>,
}

/// Options controlling how much an SQ boosting run materializes for audits.
#[derive(Debug, Clone, Default)]
pub struct SqBoostOptions {
    /// Keep each round's `P_t`.
    pub record_rounds: bool,
    /// Compare every simulated answer against the exact `P_t` correlation.
    pub audit_exact: bool,
}

/// Outcome of an SQ boosting run.
#[derive(Debug, Clone)]
pub struct SqBoostOutcome {
    /// The aggregated hypothesis.
    pub majority: MajorityHypothesis,
    /// Rounds that produced a hypothesis.
    pub rounds_completed: usize,
    /// Horizon the run was configured with.
    pub rounds_total: usize,
    /// Advantage used by the weight schedule.
    pub gamma: f64,
    /// Weak-learner query tolerance (before simulation scaling).
    pub tau_weak: f64,
    /// Declared query budget of one weak-learner call (for budget formulas).
    pub queries_per_round_declared: u64,
    /// Round at which the low-mass abort fired, if any.
    pub aborted_at: Option<usize>,
    /// Rounds flagged for degenerate simulation.
    pub flagged_rounds: Vec<usize>,
    /// Whether the accuracy stop rule ended the run.
    pub early_stopped: bool,
    /// Base-oracle queries consumed by this run.
    pub queries_consumed: u64,
    /// Smallest base tolerance used by this run.
    pub min_tolerance: Option<f64>,
    /// Counted state bits: hypothesis references plus the round counter.
    pub bits_counted: u64,
    /// Last estimated majority error from the stop rule.
    pub estimated_loss: f64,
    /// Per-round audit records.
    pub rounds: Vec<SqBoostRound>,
}

/// Boost-by-majority in the statistical-query model.
///
/// The weak learner runs at dimension bound `4d` (the round distributions of
/// a `d`-bounded neighborhood have dimension at most `4d`), so its tolerance
/// is `1/(12d)`, its guaranteed correlation `1/(12d)`, and the schedule's
/// advantage `gamma = 1/(24d)` (half the correlation). All label statistics
/// flow through `base`; the target is used to materialize round distributions
/// for cover construction and auditing, which is recorded as a deliberate
/// transparency choice in the project notes.
#[allow(clippy::too_many_arguments)]
pub fn sq_bbm_boost(
    base: &mut dyn SqOracle,
    class: &ConceptClass,
    target: &Concept,
    p: &Distribution,
    d: usize,
    epsilon: f64,
    cal: &Calibration,
    opts: &SqBoostOptions,
) -> Result<SqBoostOutcome> {
    if d == 0 {
        return Err(Error::invalid("d", "dimension bound must be positive"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(
            "epsilon",
            format!("target error must lie in (0,1), got {epsilon}"),
        ));
    }
    let dim = 4 * d;
    let gamma = 1.0 / (6.0 * dim as f64);
    let tau_weak = 1.0 / (3.0 * dim as f64);
    let rounds_total =
        (((1.0 / epsilon).ln() / (gamma * gamma)).ceil() as usize * cal.c_t as usize).max(1);
    let abort_level = epsilon.powi(3) / (cal.c_abort * ((rounds_total + 1) as f64).ln());

    let n = p.len();
    let lf = Arc::new(LnFactorial::up_to(rounds_total));
    let mut votes = vec![0i64; n];
    let mut hyps: Vec<Concept> = Vec::new();
    let mut records = Vec::new();
    let mut flagged = Vec::new();
    let mut aborted_at = None;
    let mut early_stopped = false;
    let mut est_loss = 0.5;
    let mut max_cover = 0u64;
    let queries_start = base.account().queries;

    for t in 0..rounds_total {
        let row = WeightRow::new(rounds_total, t, gamma, lf.clone())?;
        // Materialize P_t for this round's cover and audits.
        let weights: Vec<f64> = votes
            .iter()
            .zip(target.labels())
            .map(|(&v, &y)| row.value(y as i64 * v))
            .collect();
        let z_rel: f64 = p.probs().iter().zip(&weights).map(|(&px, &w)| px * w).sum();
        if z_rel <= abort_level {
            aborted_at = Some(t);
            break;
        }
        let p_t = normalized_reweight(p, &weights, t)?;
        let max_ratio = p
            .probs()
            .iter()
            .zip(p_t.probs())
            .filter(|(&px, _)| px > 0.0)
            .map(|(&px, &qx)| qx / px)
            .fold(0.0f64, f64::max);

        let cover = orthogonal_cover(class, &p_t, dim)?;
        max_cover = max_cover.max(cover.len() as u64);
        let mut best: Option<(usize, f64)> = None;
        let mut sim_max_dev: Option<f64> = None;
        let mut degenerate = false;
        for &i in &cover {
            let psi = class.concept(i);
            let nu = match simulate_with(base, psi, &votes, &row, p, tau_weak, epsilon, cal.c_sim) {
                Ok(nu) => nu,
                Err(Error::DegenerateSimulation { .. }) => {
                    degenerate = true;
                    break;
                }
                Err(e) => return Err(e),
            };
            if opts.audit_exact {
                let exact = correlation(psi, target, &p_t)?;
                let dev = (nu - exact).abs();
                sim_max_dev = Some(sim_max_dev.map_or(dev, |d: f64| d.max(dev)));
            }
            if best.is_none_or(|(_, b)| nu.abs() > b.abs()) {
                best = Some((i, nu));
            }
        }
        if degenerate {
            flagged.push(t);
            aborted_at = Some(t);
            break;
        }
        let (idx, nu) = best.expect("cover of a non-empty class is non-empty");
        let negated = nu < 0.0;
        let h = if negated {
            class.concept(idx).negated()
        } else {
            class.concept(idx).clone()
        };
        for (v, &l) in votes.iter_mut().zip(h.labels()) {
            *v += l as i64;
        }
        hyps.push(h);
        records.push(SqBoostRound {
            t,
            class_ref: (idx, negated),
            z_rel,
            max_ratio,
            sim_max_dev,
            p_t: if opts.record_rounds { Some(p_t) } else { None },
        });

        // Accuracy stop rule: one direct base query on the current majority.
        // The majority sign comes straight from the vote table (ties resolve
        // to -1, matching `MajorityHypothesis::eval`); cloning the hypothesis
        // list every round would make long runs quadratic.
        let maj_concept = Concept::from_fn(n, |x| votes[x] > 0)?;
        let maj_nu = base.answer(&SqQuery::new(maj_concept, epsilon / 4.0)?)?;
        est_loss = (1.0 - maj_nu) / 2.0;
        if est_loss <= 0.75 * epsilon {
            early_stopped = true;
            break;
        }
    }

    let account = base.account();
    let bits = hyps.len() as u64 * bits_for(2 * class.len() as u64) as u64
        + bits_for(rounds_total as u64 + 1) as u64;
    Ok(SqBoostOutcome {
        rounds_completed: hyps.len(),
        majority: MajorityHypothesis { members: hyps },
        rounds_total,
        gamma,
        tau_weak,
        queries_per_round_declared: (dim as u64).max(max_cover),
        aborted_at,
        flagged_rounds: flagged,
        early_stopped,
        queries_consumed: account.queries - queries_start,
        min_tolerance: account.min_tolerance,
        bits_counted: bits,
        estimated_loss: est_loss,
        rounds: records,
    })
}

/// Majority evaluation as a free function, mirroring the displayed rule.
pub fn majority_eval(m: &MajorityHypothesis, x: usize) -> i8 {
    m.eval(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Domain;
    use crate::oracle::ExactOracle;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    // Direct import: both globs above re-export an `Rng` trait.
    use rand::Rng;

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
    fn binom_pmf_matches_direct_formula() {
        assert_abs_diff_eq!(binom_pmf(4, 2, 0.5).unwrap(), 0.375, epsilon = 1e-12);
        assert_abs_diff_eq!(binom_pmf(3, 1, 0.6).unwrap(), 0.288, epsilon = 1e-12);
        assert_eq!(binom_pmf(3, -1, 0.7).unwrap(), 0.0);
        assert_eq!(binom_pmf(3, 4, 0.7).unwrap(), 0.0);
        assert_eq!(binom_pmf(5, 0, 0.0).unwrap(), 1.0);
        assert_eq!(binom_pmf(5, 1, 0.0).unwrap(), 0.0);
        assert_eq!(binom_pmf(5, 5, 1.0).unwrap(), 1.0);
        assert_eq!(binom_pmf(5, 4, 1.0).unwrap(), 0.0);
        assert!(binom_pmf(3, 1, 1.5).is_err());
    }

    #[test]
    fn bbm_weight_examples() {
        assert_abs_diff_eq!(bbm_weight(3, 0, 0, 0.1).unwrap(), 0.288, epsilon = 1e-12);
        // Margin too high for the remaining rounds: floor goes negative.
        assert_eq!(bbm_weight(5, 5, 1, 0.3).unwrap(), 0.0);
        // Degenerate coin gamma = 1/2.
        assert_eq!(bbm_weight(4, 4, 0, 0.5).unwrap(), 1.0);
        assert_eq!(bbm_weight(4, 2, 0, 0.5).unwrap(), 0.0);
        assert!(bbm_weight(3, 4, 0, 0.1).is_err());
        assert!(bbm_weight(3, 1, 2, 0.1).is_err());
    }

    #[test]
    fn weight_row_agrees_with_bbm_weight() {
        for (rounds, t, gamma) in [
            (6usize, 3usize, 0.1f64),
            (9, 5, 0.25),
            (4, 4, 0.05),
            (7, 0, 0.4),
        ] {
            let lf = Arc::new(LnFactorial::up_to(rounds));
            let row = WeightRow::new(rounds, t, gamma, lf.clone()).unwrap();
            let feasible: Vec<i64> = (-(t as i64)..=t as i64)
                .filter(|m| (m - t as i64) % 2 == 0)
                .collect();
            let peak = feasible
                .iter()
                .map(|&m| bbm_weight(rounds, t, m, gamma).unwrap())
                .fold(0.0f64, f64::max);
            assert!(peak > 0.0);
            for m in -(t as i64)..=t as i64 {
                let expected = bbm_weight(rounds, t, m, gamma).unwrap() / peak;
                assert_abs_diff_eq!(row.value(m), expected, epsilon = 1e-12);
            }
            // Outside the margin range the weight is zero.
            assert_eq!(row.value(t as i64 + 1), 0.0);
        }
    }

    #[test]
    fn reweighting_normalizes_products() {
        let p = Distribution::new(vec![0.5, 0.5]).unwrap();
        let q = normalized_reweight(&p, &[0.2, 0.8], 0).unwrap();
        assert_abs_diff_eq!(q.prob(0), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(q.prob(1), 0.8, epsilon = 1e-15);
        match normalized_reweight(&p, &[0.0, 0.0], 3) {
            Err(Error::DegenerateRound { round: 3 }) => {}
            other => panic!("expected degenerate round, got {other:?}"),
        }
    }

    #[test]
    fn round_zero_distribution_is_the_base_distribution() {
        let p = Distribution::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let c = Concept::new(vec![1, -1, 1, -1]).unwrap();
        let q = bbm_distribution(&p, &[], &c, 4, 0.1).unwrap();
        for x in 0..4 {
            assert_abs_diff_eq!(q.prob(x), p.prob(x), epsilon = 1e-15);
        }
    }

    #[test]
    fn correct_hypothesis_leaves_distribution_unchanged() {
        // A first hypothesis equal to the target gives margin +1 everywhere,
        // hence a constant weight: P_1 = P. Under a raw-vote reading the
        // mixed-sign target would reweight the two halves differently, so
        // this test pins the margin semantics.
        let p = Distribution::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let c = Concept::new(vec![1, -1, 1, -1]).unwrap();
        let q = bbm_distribution(&p, std::slice::from_ref(&c), &c, 6, 0.2).unwrap();
        for x in 0..4 {
            assert_abs_diff_eq!(q.prob(x), p.prob(x), epsilon = 1e-14);
        }
    }

    #[test]
    fn single_mistake_hypothesis_tilts_toward_the_mistake() {
        let p = Distribution::uniform(4).unwrap();
        let c = Concept::new(vec![1, 1, 1, 1]).unwrap();
        let h = Concept::new(vec![1, 1, 1, -1]).unwrap();
        let rounds = 6;
        let gamma = 0.2;
        let q = bbm_distribution(&p, &[h], &c, rounds, gamma).unwrap();
        let w_right = bbm_weight(rounds, 1, 1, gamma).unwrap();
        let w_wrong = bbm_weight(rounds, 1, -1, gamma).unwrap();
        let z = 0.25 * (3.0 * w_right + w_wrong);
        assert_abs_diff_eq!(q.prob(3), 0.25 * w_wrong / z, epsilon = 1e-12);
        assert_abs_diff_eq!(q.prob(0), 0.25 * w_right / z, epsilon = 1e-12);
        assert!(q.prob(3) > q.prob(0));
    }

    #[test]
    fn majority_tie_rule() {
        let h = Concept::new(vec![1, -1]).unwrap();
        let m = MajorityHypothesis {
            members: vec![h.clone(), h.negated()],
        };
        assert_eq!(m.eval(0), -1);
        assert_eq!(m.eval(1), -1);
        let single = MajorityHypothesis {
            members: vec![h.clone()],
        };
        assert_eq!(single.eval(0), 1);
        assert_eq!(single.eval(1), -1);
        let three = MajorityHypothesis {
            members: vec![h.clone(), h.clone(), h.negated()],
        };
        assert_eq!(three.eval(0), 1);
        assert_eq!(majority_eval(&three, 1), -1);
        // The empty aggregate is the constant -1 vote.
        let empty = MajorityHypothesis { members: vec![] };
        assert_eq!(
            empty.to_concept(2).unwrap(),
            Concept::new(vec![-1, -1]).unwrap()
        );
    }

    #[test]
    fn boost_params_pin_the_derived_budgets() {
        let cal = Calibration::default();
        let params = BoostParams::new(0.1, 0.1, 50, &cal).unwrap();
        assert_eq!(params.rounds, 462);
        assert_eq!(params.abort_window, 18414);
        assert!(BoostParams::new(0.5, 0.1, 50, &cal).is_err());
        assert!(BoostParams::new(0.1, 1.0, 50, &cal).is_err());
    }

    #[test]
    fn weak_sq_learn_on_small_classes() {
        let p = Distribution::uniform(4).unwrap();
        let c = Concept::new(vec![1, -1, 1, -1]).unwrap();

        let singleton = ConceptClass::new(Domain::new(4).unwrap(), vec![c.clone()]).unwrap();
        let mut oracle = ExactOracle::new(c.clone(), p.clone()).unwrap();
        let wh = weak_sq_learn(&mut oracle, &singleton, &p, 1).unwrap();
        assert_eq!(wh.concept, c);

        let pair =
            ConceptClass::new(Domain::new(4).unwrap(), vec![c.negated(), c.clone()]).unwrap();
        let mut oracle = ExactOracle::new(c.clone(), p.clone()).unwrap();
        let wh = weak_sq_learn(&mut oracle, &pair, &p, 1).unwrap();
        // The cover keeps only the first member (its negation is maximally
        // correlated with it); the sign flip recovers the target.
        assert_eq!(wh.concept, c);
        assert_eq!(wh.class_ref, Some((0, true)));
    }

    #[test]
    fn weak_sq_learn_meets_its_correlation_guarantee() {
        let class = threshold_class(8);
        let p = Distribution::uniform(8).unwrap();
        let d = crate::sqdim::sq_dim_exact(&class, &p, 24).unwrap().dim;
        for target_idx in 0..class.len() {
            let target = class.concept(target_idx).clone();
            let mut oracle = ExactOracle::new(target.clone(), p.clone()).unwrap();
            let wh = weak_sq_learn(&mut oracle, &class, &p, d).unwrap();
            let corr = correlation(&wh.concept, &target, &p).unwrap();
            assert!(
                corr >= 1.0 / (3.0 * d as f64) - 1e-12,
                "target {target_idx}: correlation {corr} below guarantee"
            );
        }
    }

    #[test]
    fn simulation_collapses_at_round_zero() {
        let p = Distribution::new(vec![0.4, 0.1, 0.1, 0.4]).unwrap();
        let c = Concept::new(vec![1, 1, -1, -1]).unwrap();
        let psi = Concept::new(vec![1, -1, 1, -1]).unwrap();
        let mut oracle = ExactOracle::new(c.clone(), p.clone()).unwrap();
        let state = BoostState {
            rounds_total: 8,
            gamma: 0.1,
            epsilon: 0.25,
            hypotheses: vec![],
        };
        let cal = Calibration::default();
        let nu = sq_simulate_query(&mut oracle, &psi, &state, &p, 0.2, &cal).unwrap();
        assert_abs_diff_eq!(nu, correlation(&psi, &c, &p).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn simulation_matches_exact_round_distribution() {
        // Two rounds of hypotheses over a 4-point domain, every query checked
        // against the directly materialized round distribution.
        let p = Distribution::new(vec![0.4, 0.1, 0.2, 0.3]).unwrap();
        let c = Concept::new(vec![1, -1, -1, 1]).unwrap();
        let h1 = Concept::new(vec![1, 1, -1, -1]).unwrap();
        let h2 = Concept::new(vec![1, -1, 1, -1]).unwrap();
        let state = BoostState {
            rounds_total: 10,
            gamma: 0.15,
            epsilon: 0.2,
            hypotheses: vec![h1.clone(), h2.clone()],
        };
        let p_t = bbm_distribution(&p, &state.hypotheses, &c, 10, 0.15).unwrap();
        let cal = Calibration::default();
        for bits in 0..16u32 {
            let psi = Concept::new(
                (0..4)
                    .map(|x| if bits >> x & 1 == 1 { 1 } else { -1 })
                    .collect(),
            )
            .unwrap();
            let mut oracle = ExactOracle::new(c.clone(), p.clone()).unwrap();
            let nu = sq_simulate_query(&mut oracle, &psi, &state, &p, 0.1, &cal).unwrap();
            let exact = correlation(&psi, &c, &p_t).unwrap();
            assert_abs_diff_eq!(nu, exact, epsilon = 1e-9);
        }
    }

    #[test]
    fn sq_boost_learns_singleton_in_one_round() {
        let p = Distribution::uniform(4).unwrap();
        let c = Concept::new(vec![1, -1, 1, -1]).unwrap();
        let class = ConceptClass::new(Domain::new(4).unwrap(), vec![c.clone()]).unwrap();
        let mut oracle = ExactOracle::new(c.clone(), p.clone()).unwrap();
        let cal = Calibration::default();
        let out = sq_bbm_boost(
            &mut oracle,
            &class,
            &c,
            &p,
            1,
            0.1,
            &cal,
            &SqBoostOptions::default(),
        )
        .unwrap();
        assert_eq!(out.rounds_completed, 1);
        assert!(out.early_stopped);
        let maj = out.majority.to_concept(4).unwrap();
        assert_eq!(maj, c);
    }

    #[test]
    fn sq_boost_reaches_target_error_on_thresholds() {
        let class = threshold_class(16);
        let p = Distribution::uniform(16).unwrap();
        let cal = Calibration::default();
        let d = crate::sqdim::sq_dim_exact(&class, &p, 24).unwrap().dim;
        let opts = SqBoostOptions {
            record_rounds: true,
            audit_exact: true,
        };
        for target_idx in [0usize, 5, 8, 13] {
            let target = class.concept(target_idx).clone();
            let mut oracle = ExactOracle::new(target.clone(), p.clone()).unwrap();
            let out = sq_bbm_boost(&mut oracle, &class, &target, &p, d, 0.1, &cal, &opts).unwrap();
            let final_loss =
                crate::domain::loss(&out.majority.to_concept(16).unwrap(), &target, &p).unwrap();
            assert!(
                final_loss <= 0.1,
                "target {target_idx}: loss {final_loss} above target"
            );
            assert!(out.rounds_completed <= out.rounds_total);
            for r in &out.rounds {
                if let Some(dev) = r.sim_max_dev {
                    assert!(dev <= 1e-9, "round {}: simulation deviation {dev}", r.t);
                }
                assert!(r.p_t.is_some());
            }
        }
    }

    #[test]
    fn sq_boost_on_honest_parity_dimension_completes() {
        let class = parity_class(3);
        let p = Distribution::uniform(8).unwrap();
        let cal = Calibration::default();
        let target = class.concept(5).clone();
        let mut oracle = ExactOracle::new(target.clone(), p.clone()).unwrap();
        let out = sq_bbm_boost(
            &mut oracle,
            &class,
            &target,
            &p,
            8,
            0.1,
            &cal,
            &SqBoostOptions::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(out.tau_weak, 1.0 / 96.0, epsilon = 1e-15);
        let final_loss =
            crate::domain::loss(&out.majority.to_concept(8).unwrap(), &target, &p).unwrap();
        assert_eq!(final_loss, 0.0);
    }

    #[test]
    fn sampled_boost_aborts_when_all_mass_is_rejected() {
        // With T = 3 and two perfect rounds, every example sits at margin +2
        // while the round-2 weights vanish there, so the booster must abort
        // and return the current majority.
        let p = Distribution::uniform(4).unwrap();
        let c = Concept::new(vec![1, -1, 1, -1]).unwrap();
        let class = ConceptClass::new(Domain::new(4).unwrap(), vec![c.clone()]).unwrap();
        let mut params = BoostParams::new(0.1, 0.4, 10, &Calibration::default()).unwrap();
        params.rounds = 3;
        params.abort_window = 40;
        params.stop_check_every = usize::MAX;
        let mut stream = SeededStream::new(&p, c.clone(), 7).unwrap();
        let mut weak = CoverWeakLearner::new(class, 1).unwrap();
        let out = bbm_boost(&mut stream, &mut weak, &params, 4, 11).unwrap();
        assert_eq!(out.aborted_at, Some(2));
        assert_eq!(out.rounds_completed, 2);
        assert_eq!(out.majority.to_concept(4).unwrap(), c);
    }

    #[test]
    fn sampled_boost_learns_thresholds() {
        let class = threshold_class(8);
        let p = Distribution::uniform(8).unwrap();
        let cal = Calibration::default();
        let gamma = 1.0 / 48.0;
        let mut successes = 0;
        for seed in 0..8u64 {
            let target = class.concept(1 + (seed as usize * 3) % 7).clone();
            let params = BoostParams::new(gamma, 0.2, 150, &cal).unwrap();
            let mut stream = SeededStream::new(&p, target.clone(), seed).unwrap();
            let mut weak = CoverWeakLearner::new(class.clone(), 8).unwrap();
            let out = bbm_boost(&mut stream, &mut weak, &params, 8, seed ^ 0xabcd).unwrap();
            let l = crate::domain::loss(&out.majority.to_concept(8).unwrap(), &target, &p).unwrap();
            if l <= 0.2 {
                successes += 1;
            }
        }
        assert!(
            successes >= 6,
            "only {successes}/8 sampled runs reached the target error"
        );
    }

    #[test]
    fn sampled_boost_is_deterministic_per_seed() {
        let class = threshold_class(8);
        let p = Distribution::uniform(8).unwrap();
        let target = class.concept(4).clone();
        let params = BoostParams::new(1.0 / 48.0, 0.2, 60, &Calibration::default()).unwrap();
        let run = || {
            let mut stream = SeededStream::new(&p, target.clone(), 3).unwrap();
            let mut weak = CoverWeakLearner::new(class.clone(), 8).unwrap();
            bbm_boost(&mut stream, &mut weak, &params, 8, 9).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.majority, b.majority);
        assert_eq!(a.samples_consumed, b.samples_consumed);
        assert_eq!(a.rounds_completed, b.rounds_completed);
    }

    #[test]
    fn capped_stream_surfaces_exhaustion() {
        let p = Distribution::uniform(4).unwrap();
        let c = Concept::new(vec![1, 1, -1, -1]).unwrap();
        let class = ConceptClass::new(Domain::new(4).unwrap(), vec![c.clone()]).unwrap();
        let params = BoostParams::new(0.1, 0.3, 50, &Calibration::default()).unwrap();
        let mut stream = SeededStream::new(&p, c, 1).unwrap().with_cap(20);
        let mut weak = CoverWeakLearner::new(class, 1).unwrap();
        match bbm_boost(&mut stream, &mut weak, &params, 4, 2) {
            Err(Error::StreamExhausted { consumed: 20, .. }) => {}
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn pmf_rows_sum_to_one(n in 0usize..40, p in 0.0f64..=1.0) {
            let total: f64 = (0..=n as i64).map(|k| binom_pmf(n, k, p).unwrap()).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }

        #[test]
        fn majority_matches_reference_sign(votes in proptest::collection::vec(proptest::bool::ANY, 1..9), x in 0usize..4) {
            let members: Vec<Concept> = votes
                .iter()
                .map(|&b| Concept::from_fn(4, move |_| b).unwrap())
                .collect();
            let m = MajorityHypothesis { members };
            let sum: i64 = votes.iter().map(|&b| if b { 1i64 } else { -1 }).sum();
            let expected = if sum > 0 { 1 } else { -1 };
            prop_assert_eq!(m.eval(x), expected);
        }

        #[test]
        fn simulation_agrees_with_materialized_distribution(
            seed in 0u64..400,
            t in 0usize..4,
            rounds in 4usize..10,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 6usize;
            let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
            let p = Distribution::normalized(raw).unwrap();
            let rand_concept = |rng: &mut ChaCha8Rng| {
                Concept::new((0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect()).unwrap()
            };
            let c = rand_concept(&mut rng);
            let hyps: Vec<Concept> = (0..t).map(|_| rand_concept(&mut rng)).collect();
            let psi = rand_concept(&mut rng);
            let state = BoostState {
                rounds_total: rounds.max(t + 1),
                gamma: 0.12,
                epsilon: 0.3,
                hypotheses: hyps.clone(),
            };
            let p_t = bbm_distribution(&p, &hyps, &c, state.rounds_total, state.gamma).unwrap();
            let mut oracle = ExactOracle::new(c.clone(), p.clone()).unwrap();
            let cal = Calibration::default();
            let nu = sq_simulate_query(&mut oracle, &psi, &state, &p, 0.15, &cal).unwrap();
            let exact = correlation(&psi, &c, &p_t).unwrap();
            prop_assert!((nu - exact).abs() <= 1e-9);
        }
    }
}

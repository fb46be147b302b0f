//! Statistical-query oracles.
//!
//! A query is a `±1` hypothesis plus a tolerance `tau`; a valid oracle answer
//! is any value within `tau` of the true correlation between the hypothesis
//! and the hidden target. Three oracles are provided:
//!
//! * [`ExactOracle`] answers with the true correlation (tolerance ignored,
//!   but still validated and accounted).
//! * [`SamplingOracle`] answers with an empirical mean over fresh labeled
//!   samples, sized by the Hoeffding bound for the query's tolerance.
//! * [`AdversarialOracle`] has no fixed target. It maintains a version space
//!   of still-consistent concepts and answers so as to keep as many alive as
//!   possible, breaking ties toward the answer of smallest magnitude. It
//!   demonstrates query lower bounds: every answer is consistent, so a
//!   learner cannot distinguish the surviving concepts.
//!
//! All oracles keep an [`OracleAccount`] (query count, minimum tolerance
//! used, samples spent) and can record a [`TraceEvent`] log for the CLI's
//! JSON-lines trace output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{correlation, Concept, ConceptClass, Distribution, DistributionSampler};
use crate::error::{Error, Result};

/// A correlation query: hypothesis plus tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct SqQuery {
    hypothesis: Concept,
    tolerance: f64,
}

impl SqQuery {
    /// Validates that `tolerance` lies in `(0, 1]`.
    pub fn new(hypothesis: Concept, tolerance: f64) -> Result<Self> {
        if !(tolerance.is_finite() && tolerance > 0.0 && tolerance <= 1.0) {
            return Err(Error::invalid(
                "tolerance",
                format!("tolerance must be in (0, 1], got {tolerance}"),
            ));
        }
        Ok(SqQuery {
            hypothesis,
            tolerance,
        })
    }

    /// The queried hypothesis.
    pub fn hypothesis(&self) -> &Concept {
        &self.hypothesis
    }

    /// The query tolerance.
    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }
}

/// Running totals for oracle usage.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OracleAccount {
    /// Number of queries answered.
    pub queries: u64,
    /// Smallest tolerance any answered query used.
    pub min_tolerance: Option<f64>,
    /// Labeled samples consumed (sampling oracles only).
    pub samples: u64,
}

impl OracleAccount {
    fn charge(&mut self, tolerance: f64, samples: u64) {
        self.queries += 1;
        self.samples += samples;
        self.min_tolerance = Some(match self.min_tolerance {
            Some(t) => t.min(tolerance),
            None => tolerance,
        });
    }
}

/// How a trace event refers to the queried hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HypothesisRef {
    /// Index into the oracle's concept class.
    Id(usize),
    /// Inline `±1` labels.
    Inline(Vec<i8>),
}

/// One line of the JSON-lines oracle trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceEvent {
    /// 0-based index of the query.
    pub query_index: u64,
    /// Queried hypothesis, by class id when the oracle recognizes it.
    pub hypothesis: HypothesisRef,
    /// Query tolerance.
    pub tolerance: f64,
    /// Returned answer.
    pub answer: f64,
    /// Concepts eliminated from the version space (0 for fixed-target oracles).
    pub eliminated_count: usize,
}

/// Common interface for all oracles.
pub trait SqOracle {
    /// Answers a query within its tolerance contract.
    fn answer(&mut self, query: &SqQuery) -> Result<f64>;
    /// Usage totals so far.
    fn account(&self) -> &OracleAccount;
    /// Recorded trace events (empty unless recording is enabled).
    fn trace(&self) -> &[TraceEvent];
    /// Enables or disables trace recording.
    fn set_recording(&mut self, on: bool);
}

/// Writes a trace as JSON lines.
pub fn write_trace_jsonl<W: std::io::Write>(events: &[TraceEvent], mut w: W) -> Result<()> {
    for e in events {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, Default)]
struct OracleLog {
    account: OracleAccount,
    trace: Vec<TraceEvent>,
    recording: bool,
}

impl OracleLog {
    fn record(
        &mut self,
        hypothesis: HypothesisRef,
        tolerance: f64,
        answer: f64,
        eliminated: usize,
        samples: u64,
    ) {
        if self.recording {
            self.trace.push(TraceEvent {
                query_index: self.account.queries,
                hypothesis,
                tolerance,
                answer,
                eliminated_count: eliminated,
            });
        }
        self.account.charge(tolerance, samples);
    }
}

/// Oracle that answers with the exact correlation against a fixed target.
#[derive(Debug, Clone)]
pub struct ExactOracle {
    target: Concept,
    dist: Distribution,
    log: OracleLog,
}

impl ExactOracle {
    /// Creates an exact oracle for `target` under `dist`.
    pub fn new(target: Concept, dist: Distribution) -> Result<Self> {
        if target.len() != dist.len() {
            return Err(Error::DimensionMismatch {
                what: "oracle target vs distribution",
                expected: dist.len(),
                got: target.len(),
            });
        }
        Ok(ExactOracle {
            target,
            dist,
            log: OracleLog::default(),
        })
    }

    /// The hidden target (exposed for test harnesses).
    pub fn target(&self) -> &Concept {
        &self.target
    }
}

impl SqOracle for ExactOracle {
    fn answer(&mut self, query: &SqQuery) -> Result<f64> {
        let nu = correlation(query.hypothesis(), &self.target, &self.dist)?;
        self.log.record(
            HypothesisRef::Inline(query.hypothesis().labels().to_vec()),
            query.tolerance(),
            nu,
            0,
            0,
        );
        Ok(nu)
    }

    fn account(&self) -> &OracleAccount {
        &self.log.account
    }

    fn trace(&self) -> &[TraceEvent] {
        &self.log.trace
    }

    fn set_recording(&mut self, on: bool) {
        self.log.recording = on;
    }
}

/// Number of samples the sampling oracle draws for a query at tolerance
/// `tau` with per-query failure budget `fail_prob`: the Hoeffding count
/// `ceil(ln(2 / fail_prob) / (2 tau^2))`.
pub fn hoeffding_samples(tau: f64, fail_prob: f64) -> u64 {
    ((2.0 / fail_prob).ln() / (2.0 * tau * tau)).ceil() as u64
}

/// Oracle that answers with a fresh-sample empirical mean.
#[derive(Debug, Clone)]
pub struct SamplingOracle {
    target: Concept,
    sampler: DistributionSampler,
    fail_prob: f64,
    rng: ChaCha8Rng,
    log: OracleLog,
}

impl SamplingOracle {
    /// Creates a sampling oracle with per-query failure budget `fail_prob`.
    pub fn new(target: Concept, dist: Distribution, fail_prob: f64, seed: u64) -> Result<Self> {
        if target.len() != dist.len() {
            return Err(Error::DimensionMismatch {
                what: "oracle target vs distribution",
                expected: dist.len(),
                got: target.len(),
            });
        }
        if !(fail_prob > 0.0 && fail_prob < 1.0) {
            return Err(Error::invalid(
                "fail_prob",
                format!("failure budget must be in (0, 1), got {fail_prob}"),
            ));
        }
        Ok(SamplingOracle {
            target,
            sampler: DistributionSampler::new(&dist),
            fail_prob,
            rng: ChaCha8Rng::seed_from_u64(seed),
            log: OracleLog::default(),
        })
    }

    /// Samples drawn for a query at tolerance `tau`.
    pub fn samples_for(&self, tau: f64) -> u64 {
        hoeffding_samples(tau, self.fail_prob)
    }
}

impl SqOracle for SamplingOracle {
    fn answer(&mut self, query: &SqQuery) -> Result<f64> {
        let n = self.samples_for(query.tolerance());
        let h = query.hypothesis();
        if h.len() != self.target.len() {
            return Err(Error::DimensionMismatch {
                what: "query hypothesis vs oracle domain",
                expected: self.target.len(),
                got: h.len(),
            });
        }
        let mut sum: i64 = 0;
        for _ in 0..n {
            let x = self.sampler.draw(&mut self.rng);
            sum += i64::from(h.label(x) * self.target.label(x));
        }
        let nu = sum as f64 / n as f64;
        self.log.record(
            HypothesisRef::Inline(h.labels().to_vec()),
            query.tolerance(),
            nu,
            0,
            n,
        );
        Ok(nu)
    }

    fn account(&self) -> &OracleAccount {
        &self.log.account
    }

    fn trace(&self) -> &[TraceEvent] {
        &self.log.trace
    }

    fn set_recording(&mut self, on: bool) {
        self.log.recording = on;
    }
}

/// The set of concepts still consistent with every adversarial answer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VersionSpace {
    alive: Vec<bool>,
    count: usize,
}

impl VersionSpace {
    /// A full version space over `n` concepts.
    pub fn full(n: usize) -> Self {
        VersionSpace {
            alive: vec![true; n],
            count: n,
        }
    }

    /// Number of surviving concepts.
    pub fn len(&self) -> usize {
        self.count
    }

    /// True when no concept survives.
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Whether concept `i` survives.
    pub fn contains(&self, i: usize) -> bool {
        self.alive.get(i).copied().unwrap_or(false)
    }

    /// Indices of surviving concepts, ascending.
    pub fn surviving(&self) -> Vec<usize> {
        self.alive
            .iter()
            .enumerate()
            .filter_map(|(i, &a)| a.then_some(i))
            .collect()
    }

    fn eliminate(&mut self, i: usize) {
        if self.alive[i] {
            self.alive[i] = false;
            self.count -= 1;
        }
    }
}

/// Worst-case oracle with no fixed target.
///
/// For each query it scans the closed intervals `[rho_j - tau, rho_j + tau]`
/// around the correlations of the surviving concepts and returns the answer
/// covered by the most intervals; the interval structure means the optimum is
/// attained at an interval endpoint or at zero, so the scan is exact. Ties go
/// to the answer of smallest magnitude (then the smaller signed value).
/// Concepts whose interval excludes the answer are eliminated, so the
/// surviving set only shrinks and is never emptied by a consistent answer.
#[derive(Debug, Clone)]
pub struct AdversarialOracle {
    class: ConceptClass,
    dist: Distribution,
    vs: VersionSpace,
    log: OracleLog,
}

impl AdversarialOracle {
    /// Creates an adversary over `class` and `dist` with a full version space.
    pub fn new(class: ConceptClass, dist: Distribution) -> Result<Self> {
        if class.domain().size() != dist.len() {
            return Err(Error::DimensionMismatch {
                what: "class domain vs distribution",
                expected: dist.len(),
                got: class.domain().size(),
            });
        }
        let vs = VersionSpace::full(class.len());
        Ok(AdversarialOracle {
            class,
            dist,
            vs,
            log: OracleLog {
                recording: true,
                ..OracleLog::default()
            },
        })
    }

    /// The current version space.
    pub fn version_space(&self) -> &VersionSpace {
        &self.vs
    }

    /// The concept class the adversary defends.
    pub fn class(&self) -> &ConceptClass {
        &self.class
    }

    fn class_id_of(&self, h: &Concept) -> Option<usize> {
        self.class
            .concepts()
            .iter()
            .position(|c| c.labels() == h.labels())
    }
}

impl SqOracle for AdversarialOracle {
    fn answer(&mut self, query: &SqQuery) -> Result<f64> {
        if self.vs.is_empty() {
            return Err(Error::EmptyVersionSpace);
        }
        let tau = query.tolerance();
        let alive = self.vs.surviving();
        let rhos: Vec<f64> = alive
            .iter()
            .map(|&j| correlation(query.hypothesis(), self.class.concept(j), &self.dist))
            .collect::<Result<_>>()?;

        // Candidate answers: every interval endpoint, plus zero (the
        // tie-break target). The survivor count is piecewise constant between
        // endpoints and closed at them, so the maximum over candidates is the
        // global maximum.
        let mut candidates: Vec<f64> = Vec::with_capacity(2 * rhos.len() + 1);
        for &rho in &rhos {
            candidates.push(rho - tau);
            candidates.push(rho + tau);
        }
        candidates.push(0.0);

        let count_at = |nu: f64| rhos.iter().filter(|&&r| (r - nu).abs() <= tau).count();
        let mut best_nu = 0.0f64;
        let mut best_count = 0usize;
        for &nu in &candidates {
            let c = count_at(nu);
            let better = c > best_count
                || (c == best_count
                    && (nu.abs() < best_nu.abs() - f64::EPSILON
                        || ((nu.abs() - best_nu.abs()).abs() <= f64::EPSILON && nu < best_nu)));
            if better {
                best_count = c;
                best_nu = nu;
            }
        }

        let mut eliminated = 0;
        for (&j, &rho) in alive.iter().zip(&rhos) {
            if (rho - best_nu).abs() > tau {
                self.vs.eliminate(j);
                eliminated += 1;
            }
        }
        debug_assert!(
            !self.vs.is_empty(),
            "consistent answer kept at least one concept"
        );

        let hyp_ref = match self.class_id_of(query.hypothesis()) {
            Some(id) => HypothesisRef::Id(id),
            None => HypothesisRef::Inline(query.hypothesis().labels().to_vec()),
        };
        self.log.record(hyp_ref, tau, best_nu, eliminated, 0);
        Ok(best_nu)
    }

    fn account(&self) -> &OracleAccount {
        &self.log.account
    }

    fn trace(&self) -> &[TraceEvent] {
        &self.log.trace
    }

    fn set_recording(&mut self, on: bool) {
        self.log.recording = on;
    }
}

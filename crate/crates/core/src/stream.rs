//! Bounded-memory streaming learners.
//!
//! A [`StreamingLearner`] declares a state width in bits and a sample budget
//! up front; [`run_stream`] then feeds it one labeled example at a time,
//! round-tripping the packed state through its serialized words after every
//! update and failing loudly if the state ever leaves its declared width.
//! The point is that the memory bound is *checked*, not merely claimed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boost::{bits_for, orthogonal_cover};
use crate::domain::{
    loss, Concept, ConceptClass, Distribution, DistributionSampler, LabeledExample,
};
use crate::error::{Error, Result};

/// A fixed-width bit vector packed into 64-bit words, with bit 0 the lowest
/// bit of word 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitState {
    width: u64,
    words: Vec<u64>,
}

fn words_for(width: u64) -> usize {
    width.div_ceil(64) as usize
}

impl BitState {
    /// The all-zero state of the given width.
    pub fn zero(width: u64) -> Self {
        BitState {
            width,
            words: vec![0; words_for(width)],
        }
    }

    /// Declared width in bits.
    pub fn width(&self) -> u64 {
        self.width
    }

    /// The packed words (little-endian bit order).
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Rebuilds a state from its serialized words, validating the word count
    /// and that no bit beyond the declared width is set.
    pub fn from_words(width: u64, words: Vec<u64>) -> Result<Self> {
        if words.len() != words_for(width) {
            return Err(Error::invalid(
                "words",
                format!(
                    "width {width} needs {} words, got {}",
                    words_for(width),
                    words.len()
                ),
            ));
        }
        let tail = width % 64;
        if tail != 0 {
            let pad = words.last().copied().unwrap_or(0) >> tail;
            if pad != 0 {
                return Err(Error::invalid(
                    "words",
                    format!("bits beyond the declared width {width} are set"),
                ));
            }
        }
        Ok(BitState { width, words })
    }

    /// Reads the `len`-bit field at `offset` (`len <= 64`).
    pub fn read(&self, offset: u64, len: u32) -> u64 {
        debug_assert!(len <= 64 && offset + u64::from(len) <= self.width);
        if len == 0 {
            return 0;
        }
        let (w, b) = ((offset / 64) as usize, offset % 64);
        let mask = if len == 64 {
            u64::MAX
        } else {
            (1u64 << len) - 1
        };
        let mut v = self.words[w] >> b;
        let taken = 64 - b;
        if u64::from(len) > taken {
            v |= self.words[w + 1] << taken;
        }
        v & mask
    }

    /// Writes `value` into the `len`-bit field at `offset`.
    ///
    /// Fails if the field leaves the declared width or the value does not fit
    /// in `len` bits.
    pub fn write(&mut self, offset: u64, len: u32, value: u64) -> Result<()> {
        if len > 64 || offset + u64::from(len) > self.width {
            return Err(Error::invalid(
                "offset",
                format!(
                    "field [{offset}, {offset}+{len}) leaves the declared width {}",
                    self.width
                ),
            ));
        }
        let mask = if len == 64 {
            u64::MAX
        } else {
            (1u64 << len) - 1
        };
        if value & !mask != 0 {
            return Err(Error::invalid(
                "value",
                format!("value {value} does not fit in {len} bits"),
            ));
        }
        if len == 0 {
            return Ok(());
        }
        let (w, b) = ((offset / 64) as usize, offset % 64);
        self.words[w] = (self.words[w] & !(mask << b)) | (value << b);
        let taken = 64 - b;
        if u64::from(len) > taken {
            let hi_len = u64::from(len) - taken;
            let hi_mask = (1u64 << hi_len) - 1;
            self.words[w + 1] = (self.words[w + 1] & !hi_mask) | (value >> taken);
        }
        Ok(())
    }

    /// Index of the highest set bit plus one (0 for the all-zero state).
    pub fn occupied_bits(&self) -> u64 {
        for (i, &w) in self.words.iter().enumerate().rev() {
            if w != 0 {
                return i as u64 * 64 + (64 - u64::from(w.leading_zeros()));
            }
        }
        0
    }
}

/// Whether a learner wants more examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamStatus {
    /// Keep streaming.
    Continue,
    /// The learner is finished; its output is ready.
    Done,
}

/// A learner whose entire between-example memory is a declared-width
/// [`BitState`].
pub trait StreamingLearner {
    /// Declared state width in bits.
    fn state_width(&self) -> u64;
    /// Declared sample budget.
    fn declared_samples(&self) -> u64;
    /// The initial state.
    fn init_state(&self) -> Result<BitState>;
    /// Folds one example into the state.
    fn update(
        &self,
        state: &mut BitState,
        example: &LabeledExample,
        step: u64,
    ) -> Result<StreamStatus>;
    /// Extracts the output hypothesis from a final state.
    fn output(&self, state: &BitState) -> Result<Concept>;
}

/// One consumed example of a checked streaming run, as logged per step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StreamEvent {
    /// 0-based step index.
    pub step: u64,
    /// Domain point drawn.
    pub point: usize,
    /// Label fed to the learner.
    pub label: i8,
    /// Occupied state bits after the update.
    pub occupied_bits: u64,
    /// Whether the learner declared itself finished on this step.
    pub done: bool,
}

/// Record of one checked streaming run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunTrace {
    /// Examples actually consumed.
    pub samples_consumed: u64,
    /// The learner's declared width.
    pub bits_declared: u64,
    /// Largest occupied bit count observed across all steps.
    pub bits_max_observed: u64,
    /// Loss of the output against the run's target.
    pub final_loss: f64,
    /// Whether `final_loss` met the caller's bound.
    pub success: bool,
    /// The output hypothesis.
    pub output: Concept,
}

/// Runs a streaming learner on i.i.d. examples from `p` labeled by `target`,
/// enforcing the declared width and the serialize/rebuild round trip after
/// every update.
pub fn run_stream(
    learner: &dyn StreamingLearner,
    p: &Distribution,
    target: &Concept,
    loss_bound: f64,
    seed: u64,
) -> Result<RunTrace> {
    run_stream_traced(learner, p, target, loss_bound, seed, |_| {})
}

/// [`run_stream`] with a per-step observer, for event logs.
pub fn run_stream_traced(
    learner: &dyn StreamingLearner,
    p: &Distribution,
    target: &Concept,
    loss_bound: f64,
    seed: u64,
    mut on_event: impl FnMut(&StreamEvent),
) -> Result<RunTrace> {
    if target.len() != p.len() {
        return Err(Error::DimensionMismatch {
            what: "stream target vs distribution",
            expected: p.len(),
            got: target.len(),
        });
    }
    let declared = learner.state_width();
    let mut state = learner.init_state()?;
    if state.width() != declared {
        return Err(Error::StateWidthViolation {
            step: 0,
            declared,
            observed: state.width(),
        });
    }
    let sampler = DistributionSampler::new(p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut consumed = 0u64;
    let mut max_observed = state.occupied_bits();

    for step in 0..learner.declared_samples() {
        let point = sampler.draw(&mut rng);
        let example = LabeledExample {
            point,
            label: target.label(point),
        };
        consumed += 1;
        let status = learner.update(&mut state, &example, step)?;
        if state.width() != declared {
            return Err(Error::StateWidthViolation {
                step,
                declared,
                observed: state.width(),
            });
        }
        let rebuilt = BitState::from_words(state.width(), state.words().to_vec())?;
        if rebuilt != state {
            return Err(Error::Format(format!(
                "bit-state round trip diverged at step {step}"
            )));
        }
        max_observed = max_observed.max(state.occupied_bits());
        on_event(&StreamEvent {
            step,
            point,
            label: example.label,
            occupied_bits: state.occupied_bits(),
            done: status == StreamStatus::Done,
        });
        if status == StreamStatus::Done {
            break;
        }
    }

    let output = learner.output(&state)?;
    let final_loss = loss(&output, target, p)?;
    Ok(RunTrace {
        samples_consumed: consumed,
        bits_declared: declared,
        bits_max_observed: max_observed,
        final_loss,
        success: final_loss <= loss_bound,
        output,
    })
}

/// Zero-memory learner that always outputs a fixed hypothesis.
#[derive(Debug, Clone)]
pub struct ConstantLearner {
    concept: Concept,
}

impl ConstantLearner {
    /// Learner that ignores the stream and returns `concept`.
    pub fn new(concept: Concept) -> Self {
        ConstantLearner { concept }
    }
}

impl StreamingLearner for ConstantLearner {
    fn state_width(&self) -> u64 {
        0
    }

    fn declared_samples(&self) -> u64 {
        0
    }

    fn init_state(&self) -> Result<BitState> {
        Ok(BitState::zero(0))
    }

    fn update(&self, _: &mut BitState, _: &LabeledExample, _: u64) -> Result<StreamStatus> {
        Ok(StreamStatus::Done)
    }

    fn output(&self, _: &BitState) -> Result<Concept> {
        Ok(self.concept.clone())
    }
}

/// Mistake-driven enumeration: the state is one class index, advanced
/// whenever the current candidate mislabels an example. In the realizable
/// setting every candidate with error above `epsilon` is dislodged quickly,
/// so `ceil(|class| ln(3 |class|) / epsilon)` examples leave an
/// `epsilon`-good candidate with constant probability.
#[derive(Debug, Clone)]
pub struct EnumerationLearner {
    class: ConceptClass,
    epsilon: f64,
}

impl EnumerationLearner {
    /// Enumeration learner over `class` targeting error `epsilon`.
    pub fn new(class: ConceptClass, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::invalid(
                "epsilon",
                format!("target error must lie in (0, 1), got {epsilon}"),
            ));
        }
        Ok(EnumerationLearner { class, epsilon })
    }
}

impl StreamingLearner for EnumerationLearner {
    fn state_width(&self) -> u64 {
        u64::from(bits_for(self.class.len() as u64))
    }

    fn declared_samples(&self) -> u64 {
        let m = self.class.len() as f64;
        (m * (3.0 * m).ln() / self.epsilon).ceil() as u64
    }

    fn init_state(&self) -> Result<BitState> {
        Ok(BitState::zero(self.state_width()))
    }

    fn update(&self, state: &mut BitState, ex: &LabeledExample, _: u64) -> Result<StreamStatus> {
        let w = bits_for(self.class.len() as u64);
        let idx = state.read(0, w) as usize;
        if self.class.concept(idx).label(ex.point) != ex.label && idx + 1 < self.class.len() {
            state.write(0, w, (idx + 1) as u64)?;
        }
        Ok(StreamStatus::Continue)
    }

    fn output(&self, state: &BitState) -> Result<Concept> {
        let idx = state.read(0, bits_for(self.class.len() as u64)) as usize;
        Ok(self.class.concept(idx.min(self.class.len() - 1)).clone())
    }
}

/// Samples per estimated query for a `q`-query learner at tolerance `tau`:
/// `ceil(ln(6q) / (2 (tau/2)^2))`, so each estimate lands within `tau/2` with
/// failure probability `1/(3q)` and the whole scan fails with probability at
/// most `1/3`.
pub fn samples_per_query(q: u64, tau: f64) -> u64 {
    ((6.0 * q as f64).ln() / (2.0 * (tau / 2.0).powi(2))).ceil() as u64
}

/// The cover-scan weak learner converted to bounded memory.
///
/// It estimates the target correlation of each member of a near-orthogonal
/// cover from a fresh block of samples, keeping only: the current query
/// index, the best signed member reference, the best and current signed
/// counts (offset-encoded), and the in-block sample counter. Widths are
/// allocated for the declared query budget `max(d, cover size)`, so the
/// declared state width matches the budget-formula shape rather than the
/// instance that happened to be drawn.
#[derive(Debug, Clone)]
pub struct SqStreamingLearner {
    class: ConceptClass,
    cover: Vec<usize>,
    declared_q: u64,
    tau: f64,
    block: u64,
    w_query: u32,
    w_ref: u32,
    w_sum: u32,
    w_ctr: u32,
}

impl SqStreamingLearner {
    /// Builds the learner for `class` under `p` at dimension bound `d`
    /// (query tolerance `1/(3d)`).
    pub fn new(class: ConceptClass, p: &Distribution, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("d", "dimension bound must be positive"));
        }
        let tau = 1.0 / (3.0 * d as f64);
        let cover = orthogonal_cover(&class, p, d)?;
        let declared_q = (d as u64).max(cover.len() as u64);
        let block = samples_per_query(declared_q, tau);
        Ok(SqStreamingLearner {
            w_query: bits_for(declared_q + 1),
            w_ref: bits_for(2 * class.len() as u64),
            w_sum: bits_for(2 * block + 1),
            w_ctr: bits_for(block),
            class,
            cover,
            declared_q,
            tau,
            block,
        })
    }

    /// The near-orthogonal cover being scanned.
    pub fn cover(&self) -> &[usize] {
        &self.cover
    }

    /// Declared query budget.
    pub fn declared_queries(&self) -> u64 {
        self.declared_q
    }

    /// Query tolerance.
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Samples per estimated query.
    pub fn block(&self) -> u64 {
        self.block
    }

    fn offsets(&self) -> (u64, u64, u64, u64, u64) {
        let o_query = 0u64;
        let o_ref = o_query + u64::from(self.w_query);
        let o_best = o_ref + u64::from(self.w_ref);
        let o_cur = o_best + u64::from(self.w_sum);
        let o_ctr = o_cur + u64::from(self.w_sum);
        (o_query, o_ref, o_best, o_cur, o_ctr)
    }
}

impl StreamingLearner for SqStreamingLearner {
    fn state_width(&self) -> u64 {
        u64::from(self.w_query)
            + u64::from(self.w_ref)
            + 2 * u64::from(self.w_sum)
            + u64::from(self.w_ctr)
    }

    fn declared_samples(&self) -> u64 {
        self.declared_q * self.block
    }

    fn init_state(&self) -> Result<BitState> {
        let mut s = BitState::zero(self.state_width());
        let (_, _, o_best, o_cur, _) = self.offsets();
        // Signed counts are stored offset by the block size.
        s.write(o_best, self.w_sum, self.block)?;
        s.write(o_cur, self.w_sum, self.block)?;
        Ok(s)
    }

    fn update(&self, state: &mut BitState, ex: &LabeledExample, _: u64) -> Result<StreamStatus> {
        let (o_query, o_ref, o_best, o_cur, o_ctr) = self.offsets();
        let qi = state.read(o_query, self.w_query) as usize;
        if qi >= self.cover.len() {
            return Ok(StreamStatus::Done);
        }
        let h = self.class.concept(self.cover[qi]);
        let sign = i64::from(h.label(ex.point) * ex.label);
        let cur = state.read(o_cur, self.w_sum) as i64 - self.block as i64 + sign;
        state.write(o_cur, self.w_sum, (cur + self.block as i64) as u64)?;

        let ctr = state.read(o_ctr, self.w_ctr) + 1;
        if ctr < self.block {
            state.write(o_ctr, self.w_ctr, ctr)?;
            return Ok(StreamStatus::Continue);
        }

        // Block finished: fold the estimate into the running best.
        let best = state.read(o_best, self.w_sum) as i64 - self.block as i64;
        if cur.abs() > best.abs() {
            state.write(o_best, self.w_sum, (cur + self.block as i64) as u64)?;
            let signed_ref = 2 * self.cover[qi] as u64 + u64::from(cur < 0);
            state.write(o_ref, self.w_ref, signed_ref)?;
        }
        state.write(o_cur, self.w_sum, self.block)?;
        state.write(o_ctr, self.w_ctr, 0)?;
        state.write(o_query, self.w_query, (qi + 1) as u64)?;
        if qi + 1 == self.cover.len() {
            return Ok(StreamStatus::Done);
        }
        Ok(StreamStatus::Continue)
    }

    fn output(&self, state: &BitState) -> Result<Concept> {
        let (_, o_ref, _, _, _) = self.offsets();
        let signed_ref = state.read(o_ref, self.w_ref);
        let idx = (signed_ref >> 1) as usize;
        if idx >= self.class.len() {
            return Err(Error::Format(format!(
                "hypothesis reference {idx} is out of class range"
            )));
        }
        let c = self.class.concept(idx);
        Ok(if signed_ref & 1 == 1 {
            c.negated()
        } else {
            c.clone()
        })
    }
}

/// Sample/memory baselines that any interesting `(m, b)` pair must beat.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrivialityVerdict {
    /// The budgets under test.
    pub m: u64,
    /// The budgets under test.
    pub b: u64,
    /// ERM baseline samples: `ceil(log2 |class|) * ceil(1/epsilon)`.
    pub m_erm: u64,
    /// ERM baseline bits: it stores that many full examples.
    pub b_erm: u64,
    /// Enumeration baseline samples: `ceil(|class| ln|class| / epsilon)`.
    pub m_enum: u64,
    /// Enumeration baseline bits: one class index.
    pub b_enum: u64,
    /// `b` is (slack-strictly) below the ERM memory baseline.
    pub beats_erm_memory: bool,
    /// `m` is (slack-strictly) below the enumeration sample baseline.
    pub beats_enum_samples: bool,
    /// Both comparisons hold: the pair is off the trivial frontier.
    pub nontrivial: bool,
}

/// Compares a sample/memory pair against the two trivial strategies. The
/// verdict is advisory: a pair losing a comparison is dominated by a trivial
/// learner on that axis.
pub fn triviality_check(
    m: u64,
    b: u64,
    class_size: usize,
    domain_size: usize,
    epsilon: f64,
    slack: f64,
) -> Result<TrivialityVerdict> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(
            "epsilon",
            format!("target error must lie in (0, 1), got {epsilon}"),
        ));
    }
    if !(slack.is_finite() && slack >= 1.0) {
        return Err(Error::invalid(
            "slack",
            format!("slack must be >= 1, got {slack}"),
        ));
    }
    if class_size == 0 || domain_size == 0 {
        return Err(Error::invalid(
            "class_size",
            "baselines need a non-empty class and domain",
        ));
    }
    let log_c = u64::from(bits_for(class_size as u64)).max(1);
    let log_x = u64::from(bits_for(domain_size as u64)).max(1);
    let log_inv_eps = u64::from(bits_for((1.0 / epsilon).ceil() as u64)).max(1);
    let m_erm = log_c * (1.0 / epsilon).ceil() as u64;
    let b_erm = log_c * (log_x + log_inv_eps);
    let m_enum = (class_size as f64 * (class_size.max(2) as f64).ln() / epsilon).ceil() as u64;
    let b_enum = log_c;
    let beats_erm_memory = (b as f64) * slack < b_erm as f64;
    let beats_enum_samples = (m as f64) * slack < m_enum as f64;
    Ok(TrivialityVerdict {
        m,
        b,
        m_erm,
        b_erm,
        m_enum,
        b_enum,
        beats_erm_memory,
        beats_enum_samples,
        nontrivial: beats_erm_memory && beats_enum_samples,
    })
}

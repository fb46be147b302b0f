//! `sqmem` — command-line front end for the finite-domain SQ workbench.
//!
//! Subcommands: `sqdim` (dimension search), `ball` (neighborhood dimension
//! maximization), `boost` (example-stream boosting), `sqboost` (query-model
//! boosting), `reduce` (distribution-transfer reductions), `stream`
//! (bit-checked streaming runs), and `bench` (experiment suites).
//!
//! Exit codes: 0 on success (and when all suite criteria pass), 1 on runtime
//! or suite failure, 2 on usage errors.

mod input;
mod output;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Value};

use input::{load_class, load_dist, load_source_dist, usage, UsageError};
use output::{emit, render, Format};

use sqmem::boost::{
    bbm_boost, bits_for, sq_bbm_boost, BoostParams, CoverWeakLearner, SeededStream, SqBoostOptions,
};
use sqmem::harness::{
    neighbor_transfer_with_source, run_suite, BoostTrialRow, ExperimentResult, Suite, TransferMode,
};
use sqmem::oracle::write_trace_jsonl;
use sqmem::reduce::{erm_sample_size, exact_identify, properify};
use sqmem::stream::{
    run_stream_traced, triviality_check, ConstantLearner, EnumerationLearner, SqStreamingLearner,
    StreamEvent, StreamingLearner,
};
use sqmem::{
    ball_max_sqdim, loss, sq_dim_exact, sq_dim_greedy, verify_witness, Calibration, Concept,
    ConceptClass, Distribution, ExactOracle, OracleAccount, SamplingOracle, SqOracle, SqQuery,
    SqWitness, TraceEvent,
};

#[derive(Parser)]
#[command(
    name = "sqmem",
    version,
    about = "Finite-domain workbench for statistical-query learning experiments"
)]
struct Cli {
    /// Seed for every randomized stage.
    #[arg(long, global = true, default_value_t = 1729)]
    seed: u64,
    /// Write results to this file instead of stdout (for `bench`: base path
    /// of the .json and .csv pair).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Result encoding.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Calibration file; falls back to $SQMEM_CONFIG, then to built-in
    /// defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Certified SQ-dimension of a class under a distribution.
    Sqdim(SqdimArgs),
    /// Best certified dimension over a multiplicative neighborhood of the
    /// base distribution.
    Ball(BallArgs),
    /// Boost-by-majority from a seeded example stream.
    Boost(BoostArgs),
    /// Boost-by-majority in the statistical-query model.
    Sqboost(SqboostArgs),
    /// Distribution-transfer reductions: learn under P through a source Q.
    Reduce {
        #[command(subcommand)]
        cmd: ReduceCmd,
    },
    /// Run a bit-checked streaming learner and report its trace.
    Stream(StreamArgs),
    /// Run an experiment suite (acceptance, smoke, or calibration).
    Bench(BenchArgs),
}

/// Class/distribution arguments shared by most subcommands.
#[derive(Args)]
struct ClassArgs {
    /// Concept class: a generator spec (parity:N, sparse_parity:N:K,
    /// threshold:N, random:M:N:SEED) or a class file (.json or text).
    #[arg(long)]
    class: String,
    /// Distribution: "uniform", "auto" (embedded/default), or a file.
    #[arg(long, default_value = "auto")]
    dist: String,
}

impl ClassArgs {
    fn load(&self, cal: &Calibration) -> Result<(ConceptClass, Distribution)> {
        let (class, embedded) = load_class(&self.class, cal)?;
        let n = class.domain().size();
        let p = load_dist(&self.dist, embedded, n, "--dist")?;
        Ok((class, p))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DimMode {
    /// Branch-and-bound maximum (size-capped).
    Exact,
    /// Seeded greedy lower bound.
    Greedy,
}

#[derive(Args)]
struct SqdimArgs {
    #[command(flatten)]
    class: ClassArgs,
    /// Search strategy.
    #[arg(long, value_enum, default_value_t = DimMode::Exact)]
    mode: DimMode,
    /// Neighborhood radius; when set, the run maximizes over the
    /// mu-neighborhood (like `ball`).
    #[arg(long)]
    mu: Option<f64>,
    /// Random restarts for the neighborhood search.
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    /// Exact-search class-size cap (default: calibration cap).
    #[arg(long)]
    cap: Option<usize>,
}

#[derive(Args)]
struct BallArgs {
    #[command(flatten)]
    class: ClassArgs,
    /// Neighborhood radius (>= 1).
    #[arg(long)]
    mu: f64,
    /// Random restarts.
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    /// Exact-search class-size cap (default: calibration cap).
    #[arg(long)]
    cap: Option<usize>,
}

#[derive(Args)]
struct BoostArgs {
    #[command(flatten)]
    class: ClassArgs,
    /// Target error of the majority vote.
    #[arg(long)]
    eps: f64,
    /// Weak-learner advantage (default: 1/(24 d)).
    #[arg(long)]
    gamma: Option<f64>,
    /// Dimension bound handed to the cover weak learner (default: greedy
    /// dimension of the class).
    #[arg(long)]
    d: Option<usize>,
    /// Accepted examples per boosting round.
    #[arg(long, default_value_t = 512)]
    examples_per_round: usize,
    /// Independent trials.
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Target concept index (default: rotates with the trial index).
    #[arg(long)]
    target: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OracleKind {
    /// Exact correlations (tolerance-0 answers).
    Exact,
    /// Hoeffding-sampled answers charged against a draw budget.
    Sampling,
}

#[derive(Args)]
struct SqboostArgs {
    #[command(flatten)]
    class: ClassArgs,
    /// Target error of the majority vote.
    #[arg(long)]
    eps: f64,
    /// Dimension bound of the class (default: measured greedy dimension).
    #[arg(long)]
    d: Option<usize>,
    /// Base oracle answering the statistical queries.
    #[arg(long, value_enum, default_value_t = OracleKind::Exact)]
    oracle: OracleKind,
    /// Per-query failure probability of the sampling oracle.
    #[arg(long, default_value_t = 0.05)]
    fail_prob: f64,
    /// Total draw budget of the sampling oracle; queries that would exceed
    /// it fail instead of silently running forever.
    #[arg(long, default_value_t = 10_000_000)]
    max_samples: u64,
    /// Independent trials.
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Target concept index (default: rotates with the trial index).
    #[arg(long)]
    target: Option<usize>,
    /// Audit every simulated answer against the exact round correlation.
    #[arg(long)]
    audit: bool,
    /// Write the first trial's base-oracle trace as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ReduceCmd {
    /// Example route: rejection-filter a source sample, then empirical risk
    /// minimization over the class.
    Pac(TransferArgs),
    /// Query route: recombine quantized sub-queries against a source oracle,
    /// then scan the class.
    Sq(TransferArgs),
    /// Replace an improper hypothesis with a class member of comparable
    /// loss.
    Properify(ProperifyArgs),
    /// Identify the unique witness member near a proper hypothesis; near
    /// ties and out-of-radius inputs are errors, never guesses.
    Identify(IdentifyArgs),
}

#[derive(Args)]
struct TransferArgs {
    /// Class (and strong-learner hypothesis space).
    #[arg(long, visible_alias = "strong")]
    class: String,
    /// Target distribution P: "uniform", "auto", or a file.
    #[arg(long = "p", visible_alias = "P", default_value = "auto")]
    p_dist: String,
    /// Source distribution Q: a file, or perturb:MU[:SEED] for a seeded
    /// ratio-perturbation of P.
    #[arg(long = "q", visible_alias = "Q")]
    q_dist: String,
    /// Target error under P.
    #[arg(long)]
    eps: f64,
    /// Target concept index labeling the source.
    #[arg(long, default_value_t = 0)]
    target: usize,
    /// Neighborhood radius between P and Q (implied by perturb:MU; required
    /// for file sources).
    #[arg(long)]
    mu: Option<f64>,
    /// Write the recombined-query trace as JSON lines (query route only).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct ProperifyArgs {
    #[command(flatten)]
    class: ClassArgs,
    /// Error budget of the input hypothesis.
    #[arg(long)]
    eps: f64,
    /// Improper hypothesis as a file of ±1 labels (default: synthesized from
    /// --target and --flips).
    #[arg(long)]
    hypothesis: Option<PathBuf>,
    /// Concept the synthesized hypothesis starts from.
    #[arg(long, default_value_t = 0)]
    target: usize,
    /// Seeded random label flips applied to the synthesized hypothesis.
    #[arg(long, default_value_t = 0)]
    flips: usize,
}

#[derive(Args)]
struct IdentifyArgs {
    /// JSON file: {"class": spec, "dist": spec, "hypothesis": [±1, ...],
    /// "witness": {"dim": d, "members": [...]}} (witness optional; the exact
    /// one is computed when absent).
    #[arg(long)]
    witness: PathBuf,
}

#[derive(Args)]
struct StreamArgs {
    #[command(flatten)]
    class: ClassArgs,
    /// Learner: "weak" (query-simulating cover scanner), "enum"
    /// (version-space index), or "constant:IDX".
    #[arg(long, default_value = "weak")]
    learner: String,
    /// Target concept index labeling the stream.
    #[arg(long, default_value_t = 0)]
    target: usize,
    /// Accuracy parameter (enum budget, default bounds, triviality report).
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Dimension bound of the weak learner (default: 4x greedy dimension).
    #[arg(long)]
    d: Option<usize>,
    /// Success bound on the final loss (default: learner-specific).
    #[arg(long)]
    bound: Option<f64>,
    /// Write per-example events as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    /// All twelve acceptance criteria.
    Acceptance,
    /// The fast subset.
    Smoke,
    /// Re-measurement of the frozen calibration constants.
    Calibration,
}

#[derive(Args)]
struct BenchArgs {
    /// Which suite to run.
    #[arg(long, value_enum, default_value_t = SuiteArg::Smoke)]
    suite: SuiteArg,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            if e.downcast_ref::<UsageError>().is_some() {
                eprintln!("usage error: {e}");
                ExitCode::from(2)
            } else {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let cal =
        Calibration::resolve(cli.config.as_deref()).map_err(|e| usage(format!("--config: {e}")))?;
    let seed = cli.seed;
    let value = match &cli.cmd {
        Cmd::Sqdim(a) => run_sqdim(a, seed, &cal)?,
        Cmd::Ball(a) => run_ball(a, seed, &cal)?,
        Cmd::Boost(a) => run_boost(a, seed, &cal)?,
        Cmd::Sqboost(a) => run_sqboost(a, seed, &cal)?,
        Cmd::Reduce { cmd } => run_reduce(cmd, seed, &cal)?,
        Cmd::Stream(a) => run_stream_cmd(a, seed, &cal)?,
        Cmd::Bench(a) => return run_bench(a, &cal, cli.format, cli.out.as_deref()),
    };
    emit(&value, cli.format, cli.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn dim_report(
    class: &ConceptClass,
    p: &Distribution,
    mode: DimMode,
    ball: Option<(f64, usize)>,
    seed: u64,
    cap: usize,
) -> Result<Value> {
    if let Some((mu, restarts)) = ball {
        let est = ball_max_sqdim(class, p, mu, restarts, seed, cap)?;
        let verified = verify_witness(class, &est.best_q, &est.witness)?;
        return Ok(json!({
            "mode": "ball",
            "dim": est.dim_at_best_q,
            "witness": est.witness,
            "verified": verified,
            "mu": est.mu,
            "best_q": est.best_q.probs(),
            "restarts": est.restarts,
        }));
    }
    let (label, witness) = match mode {
        DimMode::Exact => ("exact", sq_dim_exact(class, p, cap)?),
        DimMode::Greedy => ("greedy", sq_dim_greedy(class, p, seed)?),
    };
    let verified = verify_witness(class, p, &witness)?;
    Ok(json!({
        "mode": label,
        "dim": witness.dim,
        "witness": witness,
        "verified": verified,
    }))
}

fn run_sqdim(a: &SqdimArgs, seed: u64, cal: &Calibration) -> Result<Value> {
    let (class, p) = a.class.load(cal)?;
    let cap = a.cap.unwrap_or(cal.exact_dim_cap);
    dim_report(
        &class,
        &p,
        a.mode,
        a.mu.map(|mu| (mu, a.restarts)),
        seed,
        cap,
    )
}

fn run_ball(a: &BallArgs, seed: u64, cal: &Calibration) -> Result<Value> {
    let (class, p) = a.class.load(cal)?;
    let cap = a.cap.unwrap_or(cal.exact_dim_cap);
    dim_report(
        &class,
        &p,
        DimMode::Exact,
        Some((a.mu, a.restarts)),
        seed,
        cap,
    )
}

/// Per-trial seed: trial 0 runs under the seed itself.
fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed ^ (trial as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

fn trial_target(explicit: Option<usize>, trial: usize, class_len: usize) -> Result<usize> {
    match explicit {
        Some(t) if t < class_len => Ok(t),
        Some(t) => Err(usage(format!(
            "--target {t} is out of range for a class of {class_len}"
        ))),
        None => Ok((trial * 13) % class_len),
    }
}

fn run_boost(a: &BoostArgs, seed: u64, cal: &Calibration) -> Result<Value> {
    let (class, p) = a.class.load(cal)?;
    let d = match a.d {
        Some(d) => d,
        None => sq_dim_greedy(&class, &p, seed)?.dim,
    };
    let gamma = a.gamma.unwrap_or(1.0 / (24.0 * d as f64));
    let params = BoostParams::new(gamma, a.eps, a.examples_per_round, cal)?;
    let mut rows = Vec::with_capacity(a.trials);
    let mut seeds = Vec::with_capacity(a.trials);
    for trial in 0..a.trials {
        let t_seed = trial_seed(seed, trial);
        let target_idx = trial_target(a.target, trial, class.len())?;
        let target = class.concept(target_idx).clone();
        let mut stream = SeededStream::new(&p, target.clone(), t_seed)?;
        let mut weak = CoverWeakLearner::new(class.clone(), d)?;
        let out = bbm_boost(&mut stream, &mut weak, &params, p.len(), t_seed ^ 0xb005)?;
        let majority = out.majority.to_concept(p.len())?;
        let final_loss = loss(&majority, &target, &p)?;
        seeds.push(t_seed);
        rows.push(BoostTrialRow {
            trial,
            seed: t_seed,
            rounds_used: out.rounds_completed,
            samples_consumed: out.samples_consumed,
            queries_consumed: 0,
            min_tolerance: None,
            bits_counted: out.bits_counted,
            final_loss,
            aborted: out.aborted_at.is_some(),
            success: final_loss <= a.eps,
        });
    }
    let spec = format!(
        "boost class={} dist={} eps={} gamma={gamma:.6} d={d} examples_per_round={}",
        a.class.class, a.class.dist, a.eps, a.examples_per_round
    );
    let result = ExperimentResult::new(spec, seeds, rows, cal.clone());
    Ok(serde_json::to_value(result)?)
}

/// Sampling oracle wrapper that fails a query up front when its draw bill
/// would push the total past the budget.
struct CappedOracle {
    inner: SamplingOracle,
    cap: u64,
}

impl SqOracle for CappedOracle {
    fn answer(&mut self, query: &SqQuery) -> sqmem::Result<f64> {
        let need = self.inner.samples_for(query.tolerance());
        let used = self.inner.account().samples;
        if used.saturating_add(need) > self.cap {
            return Err(sqmem::Error::Precondition(format!(
                "sampling budget exhausted: a query at tolerance {:.3e} needs {need} draws \
                 on top of the {used} already used, over the --max-samples cap {}",
                query.tolerance(),
                self.cap
            )));
        }
        self.inner.answer(query)
    }

    fn account(&self) -> &OracleAccount {
        self.inner.account()
    }

    fn trace(&self) -> &[TraceEvent] {
        self.inner.trace()
    }

    fn set_recording(&mut self, on: bool) {
        self.inner.set_recording(on);
    }
}

fn run_sqboost(a: &SqboostArgs, seed: u64, cal: &Calibration) -> Result<Value> {
    let (class, p) = a.class.load(cal)?;
    let d = match a.d {
        Some(d) => d,
        None => sq_dim_greedy(&class, &p, seed)?.dim,
    };
    let opts = SqBoostOptions {
        record_rounds: false,
        audit_exact: a.audit,
    };
    let mut rows = Vec::with_capacity(a.trials);
    let mut seeds = Vec::with_capacity(a.trials);
    for trial in 0..a.trials {
        let t_seed = trial_seed(seed, trial);
        let target_idx = trial_target(a.target, trial, class.len())?;
        let target = class.concept(target_idx).clone();
        let mut base: Box<dyn SqOracle> = match a.oracle {
            OracleKind::Exact => Box::new(ExactOracle::new(target.clone(), p.clone())?),
            OracleKind::Sampling => Box::new(CappedOracle {
                inner: SamplingOracle::new(target.clone(), p.clone(), a.fail_prob, t_seed ^ 0x5a)?,
                cap: a.max_samples,
            }),
        };
        let record = a.trace.is_some() && trial == 0;
        base.set_recording(record);
        let out = sq_bbm_boost(&mut *base, &class, &target, &p, d, a.eps, cal, &opts)?;
        let majority = out.majority.to_concept(p.len())?;
        let final_loss = loss(&majority, &target, &p)?;
        if record {
            let path = a.trace.as_ref().expect("record implies a path");
            let file = File::create(path)
                .with_context(|| format!("creating trace file {}", path.display()))?;
            write_trace_jsonl(base.trace(), BufWriter::new(file))?;
        }
        seeds.push(t_seed);
        rows.push(BoostTrialRow {
            trial,
            seed: t_seed,
            rounds_used: out.rounds_completed,
            samples_consumed: base.account().samples,
            queries_consumed: out.queries_consumed,
            min_tolerance: out.min_tolerance,
            bits_counted: out.bits_counted,
            final_loss,
            aborted: out.aborted_at.is_some(),
            success: final_loss <= a.eps,
        });
    }
    let spec = format!(
        "sqboost class={} dist={} eps={} d={d} oracle={}",
        a.class.class,
        a.class.dist,
        a.eps,
        match a.oracle {
            OracleKind::Exact => "exact",
            OracleKind::Sampling => "sampling",
        }
    );
    let result = ExperimentResult::new(spec, seeds, rows, cal.clone());
    Ok(serde_json::to_value(result)?)
}

/// The uniform output shape of every `reduce` route.
fn reduce_report(
    index: usize,
    labels: &[i8],
    samples_or_queries: u64,
    tolerance: Option<f64>,
    bits: u64,
    success: bool,
) -> Value {
    json!({
        "output_hypothesis": {"index": index, "labels": labels},
        "samples_or_queries": samples_or_queries,
        "tolerance": tolerance,
        "bits": bits,
        "success": success,
    })
}

fn run_reduce(cmd: &ReduceCmd, seed: u64, cal: &Calibration) -> Result<Value> {
    match cmd {
        ReduceCmd::Pac(a) => run_transfer(a, TransferMode::Pac, seed, cal),
        ReduceCmd::Sq(a) => run_transfer(a, TransferMode::Sq, seed, cal),
        ReduceCmd::Properify(a) => run_properify(a, seed, cal),
        ReduceCmd::Identify(a) => run_identify(a, cal),
    }
}

fn run_transfer(
    a: &TransferArgs,
    mode: TransferMode,
    seed: u64,
    cal: &Calibration,
) -> Result<Value> {
    let (class, embedded) = load_class(&a.class, cal)?;
    let n = class.domain().size();
    let p = load_dist(&a.p_dist, embedded, n, "--p")?;
    let (q, implied_mu) = load_source_dist(&a.q_dist, &p, seed)?;
    let mu = a.mu.or(implied_mu).ok_or_else(|| {
        usage("--q names a file, so the neighborhood radius must be given with --mu")
    })?;
    if a.trace.is_some() && mode == TransferMode::Pac {
        return Err(usage(
            "--trace records queries; the pac route draws examples instead",
        ));
    }
    if a.target >= class.len() {
        return Err(usage(format!(
            "--target {} is out of range for a class of {}",
            a.target,
            class.len()
        )));
    }
    let out = neighbor_transfer_with_source(
        &class,
        &p,
        &q,
        a.target,
        mode,
        mu,
        a.eps,
        cal,
        seed,
        a.trace.is_some(),
    )?;
    if let Some(path) = &a.trace {
        let file = File::create(path)
            .with_context(|| format!("creating trace file {}", path.display()))?;
        write_trace_jsonl(&out.source_trace, BufWriter::new(file))?;
    }
    let (soq, bits) = match mode {
        TransferMode::Pac => {
            let m = erm_sample_size(class.len(), a.eps, 1.0 / 3.0) as u64;
            let example_bits = m * (u64::from(bits_for(n as u64)) + 1);
            (
                out.attempts.unwrap_or(0),
                example_bits + out.proper.bits_counted,
            )
        }
        TransferMode::Sq => (
            out.queries.unwrap_or(0),
            out.proper.bits_counted + u64::from(bits_for(class.len() as u64)),
        ),
    };
    Ok(reduce_report(
        out.proper.index,
        out.proper.concept.labels(),
        soq,
        out.min_tolerance,
        bits,
        out.success,
    ))
}

fn run_properify(a: &ProperifyArgs, seed: u64, cal: &Calibration) -> Result<Value> {
    let (class, p) = a.class.load(cal)?;
    let n = class.domain().size();
    let h = match &a.hypothesis {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("--hypothesis {}: {e}", path.display())))?;
            let labels: Vec<i8> = text
                .split_whitespace()
                .map(|t| {
                    t.parse::<i8>()
                        .map_err(|e| usage(format!("label '{t}': {e}")))
                })
                .collect::<Result<_>>()?;
            Concept::new(labels).map_err(|e| usage(format!("--hypothesis: {e}")))?
        }
        None => {
            if a.target >= class.len() {
                return Err(usage(format!(
                    "--target {} is out of range for a class of {}",
                    a.target,
                    class.len()
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xF11B5);
            let points = rand::seq::index::sample(&mut rng, n, a.flips.min(n)).into_vec();
            class.concept(a.target).with_flipped(&points)
        }
    };
    let out = properify(&h, &class, &p, a.eps, cal, seed ^ 2)?;
    Ok(reduce_report(
        out.index,
        out.concept.labels(),
        out.samples,
        None,
        out.bits_counted,
        true,
    ))
}

#[derive(Deserialize)]
struct WitnessFile {
    class: String,
    #[serde(default = "default_dist_spec")]
    dist: String,
    hypothesis: Vec<i8>,
    #[serde(default)]
    witness: Option<SqWitness>,
}

fn default_dist_spec() -> String {
    "auto".into()
}

fn run_identify(a: &IdentifyArgs, cal: &Calibration) -> Result<Value> {
    let text = std::fs::read_to_string(&a.witness)
        .map_err(|e| usage(format!("--witness {}: {e}", a.witness.display())))?;
    let file: WitnessFile = serde_json::from_str(&text)
        .map_err(|e| usage(format!("--witness {}: {e}", a.witness.display())))?;
    let (class, embedded) = load_class(&file.class, cal)?;
    let n = class.domain().size();
    let q = load_dist(&file.dist, embedded, n, "witness dist")?;
    let h = Concept::new(file.hypothesis).map_err(|e| usage(format!("hypothesis: {e}")))?;
    let witness = match file.witness {
        Some(w) => w,
        None => sq_dim_exact(&class, &q, cal.exact_dim_cap)?,
    };
    let idx = exact_identify(&h, &class, &witness, &q)?;
    Ok(reduce_report(
        idx,
        class.concept(idx).labels(),
        0,
        None,
        u64::from(bits_for(class.len() as u64)),
        true,
    ))
}

fn run_stream_cmd(a: &StreamArgs, seed: u64, cal: &Calibration) -> Result<Value> {
    let (class, p) = a.class.load(cal)?;
    if a.target >= class.len() {
        return Err(usage(format!(
            "--target {} is out of range for a class of {}",
            a.target,
            class.len()
        )));
    }
    let target = class.concept(a.target).clone();
    let (learner, default_bound): (Box<dyn StreamingLearner>, f64) = match a.learner.as_str() {
        "weak" => {
            let d = match a.d {
                Some(d) => d,
                None => 4 * sq_dim_greedy(&class, &p, seed)?.dim,
            };
            let weak = SqStreamingLearner::new(class.clone(), &p, d)?;
            let bound = 0.5 - weak.tau() / 2.0;
            (Box::new(weak), bound)
        }
        "enum" => (
            Box::new(EnumerationLearner::new(class.clone(), a.eps)?),
            a.eps,
        ),
        other => match other.strip_prefix("constant:") {
            Some(idx) => {
                let idx: usize = idx
                    .parse()
                    .map_err(|e| usage(format!("--learner {other}: {e}")))?;
                if idx >= class.len() {
                    return Err(usage(format!(
                        "--learner {other}: index out of range for a class of {}",
                        class.len()
                    )));
                }
                (
                    Box::new(ConstantLearner::new(class.concept(idx).clone())),
                    a.eps,
                )
            }
            None => {
                return Err(usage(format!(
                    "--learner {other}: expected weak, enum, or constant:IDX"
                )))
            }
        },
    };
    let bound = a.bound.unwrap_or(default_bound);
    let mut events: Vec<StreamEvent> = Vec::new();
    let trace = run_stream_traced(&*learner, &p, &target, bound, seed, |e| {
        if a.trace.is_some() {
            events.push(e.clone());
        }
    })?;
    if let Some(path) = &a.trace {
        let file = File::create(path)
            .with_context(|| format!("creating trace file {}", path.display()))?;
        let mut w = BufWriter::new(file);
        for event in &events {
            serde_json::to_writer(&mut w, event)?;
            std::io::Write::write_all(&mut w, b"\n")?;
        }
    }
    let verdict = triviality_check(
        trace.samples_consumed,
        trace.bits_declared,
        class.len(),
        p.len(),
        a.eps,
        1.0,
    )?;
    let mut value = serde_json::to_value(&trace)?;
    value["learner"] = json!(a.learner);
    value["triviality"] = serde_json::to_value(verdict)?;
    Ok(value)
}

fn run_bench(
    a: &BenchArgs,
    cal: &Calibration,
    format: Format,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let suite = match a.suite {
        SuiteArg::Acceptance => Suite::Acceptance,
        SuiteArg::Smoke => Suite::Smoke,
        SuiteArg::Calibration => Suite::Calibration,
    };
    let reports = run_suite(suite, cal);
    for report in &reports {
        eprintln!("{}", report.line());
    }
    match out {
        Some(path) => {
            // `--out` names the base of the .json/.csv pair.
            let base = match path.extension().and_then(|x| x.to_str()) {
                Some("json") | Some("csv") => path.with_extension(""),
                _ => path.to_path_buf(),
            };
            std::fs::write(base.with_extension("json"), render(&reports, Format::Json)?)?;
            std::fs::write(base.with_extension("csv"), render(&reports, Format::Csv)?)?;
        }
        None => emit(&reports, format, None)?,
    }
    Ok(if reports.iter().all(|r| r.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

//! The acceptance suite: every headline behavior of the workbench, checked
//! end to end with pinned configurations, plus a calibration suite that
//! re-measures the frozen constants.
//!
//! Each criterion returns a [`CriterionReport`] instead of panicking, so the
//! suite can be driven from tests (which assert `passed`) and from the
//! command line (which prints one line per criterion) without duplicating
//! the configurations.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boost::{
    bbm_boost, bbm_distribution, sq_bbm_boost, sq_simulate_query, BoostParams, BoostState,
    CoverWeakLearner, SeededStream, SqBoostOptions,
};
use crate::config::Calibration;
use crate::domain::{
    correlation, is_mu_close, loss, mix, Concept, ConceptClass, Distribution, Domain,
};
use crate::error::{Error, Result};
use crate::harness::gen::{perturb_distribution, GenSpec};
use crate::oracle::{AdversarialOracle, ExactOracle, SqOracle, SqQuery};
use crate::reduce::{
    accepted_distribution, exact_identify, properify, quantize_signs, rejection_acceptance,
    RejectionSqOracle,
};
use crate::sqdim::{sq_dim_exact, sq_dim_greedy, verify_witness};
use crate::stream::{
    run_stream, ConstantLearner, EnumerationLearner, SqStreamingLearner, StreamingLearner,
};

/// Result of one acceptance or calibration criterion.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CriterionReport {
    /// Criterion number within its suite.
    pub id: usize,
    /// Stable short name.
    pub name: &'static str,
    /// Whether the criterion held.
    pub passed: bool,
    /// One-line summary of what was measured.
    pub detail: String,
    /// Wall-clock seconds spent.
    pub seconds: f64,
}

impl CriterionReport {
    /// The one-line pass/fail form used by tests and the command line.
    pub fn line(&self) -> String {
        format!(
            "criterion {:02} [{}] {} - {} ({:.2}s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.seconds,
        )
    }
}

fn run_criterion(
    id: usize,
    name: &'static str,
    body: impl FnOnce() -> Result<(bool, String)>,
) -> CriterionReport {
    let start = Instant::now();
    let (passed, detail) = match body() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    CriterionReport {
        id,
        name,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Exact dimension of every small parity family, plus the antipodal floor.
pub fn criterion_01(cal: &Calibration) -> CriterionReport {
    run_criterion(1, "parity-dimension-exact", || {
        let start = Instant::now();
        let mut dims = Vec::new();
        for bits in 1..=4u32 {
            let (class, p) = GenSpec::Parity { bits }.generate(cal)?;
            let w = sq_dim_exact(&class, &p, cal.exact_dim_cap)?;
            if w.dim != (1usize << bits) || !verify_witness(&class, &p, &w)? {
                return Ok((
                    false,
                    format!("parity:{bits} certified dimension {}", w.dim),
                ));
            }
            dims.push(w.dim);
        }
        // A perfectly anti-correlated pair can never witness dimension two.
        let c = Concept::new(vec![1, -1])?;
        let pair = ConceptClass::new(Domain::new(2)?, vec![c.clone(), c.negated()])?;
        let w = sq_dim_exact(&pair, &Distribution::uniform(2)?, cal.exact_dim_cap)?;
        if w.dim != 1 {
            return Ok((
                false,
                format!("antipodal pair certified dimension {}", w.dim),
            ));
        }
        let elapsed = start.elapsed().as_secs_f64();
        Ok((
            elapsed < 10.0,
            format!("dims {dims:?} over 1..=4 bits, antipodal pair pins 1, {elapsed:.2}s"),
        ))
    })
}

/// The greedy search never certifies more than the exact search, and both
/// witnesses verify, across random classes.
pub fn criterion_02(cal: &Calibration) -> CriterionReport {
    run_criterion(2, "greedy-below-exact", || {
        let mut max_exact = 0;
        for s in 0..100u64 {
            let m = 3 + (s % 10) as usize;
            let n = 4 + ((s * 7) % 13) as usize;
            let (class, p) = GenSpec::Random { m, n, seed: s }.generate(cal)?;
            let g = sq_dim_greedy(&class, &p, s)?;
            let e = sq_dim_exact(&class, &p, cal.exact_dim_cap)?;
            if g.dim > e.dim {
                return Ok((
                    false,
                    format!("seed {s}: greedy {} above exact {}", g.dim, e.dim),
                ));
            }
            if !verify_witness(&class, &p, &g)? || !verify_witness(&class, &p, &e)? {
                return Ok((
                    false,
                    format!("seed {s}: a returned witness failed verification"),
                ));
            }
            max_exact = max_exact.max(e.dim);
        }
        Ok((
            true,
            format!("100 random classes, exact dimension up to {max_exact}"),
        ))
    })
}

fn spread_targets(class_len: usize, count: usize) -> Vec<usize> {
    (0..count).map(|k| k * class_len / count).collect()
}

/// Round distributions of query boosting stay density-bounded by `c0/eps^3`.
pub fn criterion_03(cal: &Calibration) -> CriterionReport {
    run_criterion(3, "boost-density-bound", || {
        let mut worst = 0.0f64;
        let mut runs = 0usize;
        let mut stopped_early = 0usize;
        for &(n, eps, count) in &[
            (16usize, 0.05f64, 13usize),
            (16, 0.1, 13),
            (64, 0.05, 12),
            (64, 0.1, 12),
        ] {
            let (class, p) = GenSpec::Threshold { n }.generate(cal)?;
            let d = sq_dim_greedy(&class, &p, 0)?.dim;
            for target_idx in spread_targets(class.len(), count) {
                let target = class.concept(target_idx).clone();
                let mut base = ExactOracle::new(target.clone(), p.clone())?;
                let out = sq_bbm_boost(
                    &mut base,
                    &class,
                    &target,
                    &p,
                    d,
                    eps,
                    cal,
                    &SqBoostOptions::default(),
                )?;
                runs += 1;
                if out.early_stopped {
                    stopped_early += 1;
                }
                for r in &out.rounds {
                    worst = worst.max(r.max_ratio * eps.powi(3));
                }
            }
        }
        Ok((
            runs == 50 && worst <= cal.c0,
            format!(
                "{runs} runs ({stopped_early} stopped early), worst density x eps^3 = {worst:.3} against cap {}",
                cal.c0
            ),
        ))
    })
}

/// Every round distribution, patched by a `1/mu` mixture with the base, stays
/// in the `mu`-neighborhood, and its exact dimension is within the 4x
/// transfer factor of the patched distribution's.
pub fn criterion_04(cal: &Calibration) -> CriterionReport {
    run_criterion(4, "round-mixture-closeness", || {
        let eps = 0.1f64;
        let (class, p) = GenSpec::Threshold { n: 16 }.generate(cal)?;
        let d = sq_dim_greedy(&class, &p, 0)?.dim;
        let target = class.concept(11).clone();
        let mut base = ExactOracle::new(target.clone(), p.clone())?;
        let out = sq_bbm_boost(
            &mut base,
            &class,
            &target,
            &p,
            d,
            eps,
            cal,
            &SqBoostOptions {
                record_rounds: true,
                audit_exact: false,
            },
        )?;
        let mu = (cal.c0 / eps.powi(3)).max((4 * d) as f64);
        let delta = (1.0 / mu) * (1.0 + 1e-13);
        for r in &out.rounds {
            let p_t = r.p_t.as_ref().expect("recording was enabled");
            let patched = mix(&p, p_t, delta)?;
            if !is_mu_close(&p, &patched, mu)? {
                return Ok((
                    false,
                    format!(
                        "round {}: patched mixture left the mu={mu:.0} neighborhood",
                        r.t
                    ),
                ));
            }
        }
        // Exact dimension comparison on a spread of rounds.
        let total = out.rounds.len();
        let mut picks: Vec<usize> = (0..8).map(|k| k * total / 8).collect();
        picks.push(total - 1);
        picks.dedup();
        let mut dim_pairs = Vec::new();
        for &i in &picks {
            let r = &out.rounds[i];
            let p_t = r.p_t.as_ref().expect("recording was enabled");
            let patched = mix(&p, p_t, delta)?;
            let d_round = sq_dim_exact(&class, p_t, cal.exact_dim_cap)?.dim;
            let d_patched = sq_dim_exact(&class, &patched, cal.exact_dim_cap)?.dim;
            if d_round > 4 * d_patched {
                return Ok((
                    false,
                    format!("round {}: dimension {d_round} above 4 x {d_patched}", r.t),
                ));
            }
            dim_pairs.push((d_round, d_patched));
        }
        Ok((
            true,
            format!(
                "{total} rounds mu-close after the 1/mu patch (mu = {mu:.0}); dims {dim_pairs:?} on {} sampled rounds",
                picks.len()
            ),
        ))
    })
}

/// Simulated round-distribution queries match the materialized ones to float
/// accuracy when the base oracle is exact.
pub fn criterion_05(cal: &Calibration) -> CriterionReport {
    run_criterion(5, "simulation-matches-exact", || {
        let mut worst = 0.0f64;
        let mut probes = 0usize;
        for s in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(s ^ 0xC5);
            let n = 2 + rng.gen_range(0..63usize);
            let m = 4 + rng.gen_range(0..8usize);
            let (class, _) = GenSpec::Random { m, n, seed: s }.generate(cal)?;
            let p = perturb_distribution(&Distribution::uniform(n)?, 2.0, s)?;
            let target = class.concept(rng.gen_range(0..m)).clone();
            let t = rng.gen_range(1..=5usize);
            let rounds_total = t + rng.gen_range(2..8usize);
            let gamma = 0.05 + 0.025 * rng.gen_range(0..10u32) as f64;
            let hypotheses: Vec<Concept> = (0..t)
                .map(|_| {
                    let c = class.concept(rng.gen_range(0..m)).clone();
                    if rng.gen_bool(0.5) {
                        c.negated()
                    } else {
                        c
                    }
                })
                .collect();
            let p_t = bbm_distribution(&p, &hypotheses, &target, rounds_total, gamma)?;
            let state = BoostState {
                rounds_total,
                gamma,
                epsilon: 0.1,
                hypotheses,
            };
            let mut base = ExactOracle::new(target.clone(), p.clone())?;
            for probe in 0..m.min(6) {
                let psi = class.concept(probe);
                let sim = sq_simulate_query(&mut base, psi, &state, &p, 0.05, cal)?;
                let truth = correlation(psi, &target, &p_t)?;
                worst = worst.max((sim - truth).abs());
                probes += 1;
            }
        }
        Ok((
            worst <= 1e-9,
            format!("{probes} probes over 20 seeded configurations, worst deviation {worst:.2e}"),
        ))
    })
}

/// The sampled boosting route reaches the target error on most trials within
/// its horizon and time budget.
pub fn criterion_06(cal: &Calibration) -> CriterionReport {
    run_criterion(6, "sampled-boost-success", || {
        let start = Instant::now();
        let eps = 0.05f64;
        let (class, p) = GenSpec::Threshold { n: 64 }.generate(cal)?;
        let d = sq_dim_greedy(&class, &p, 0)?.dim;
        let params = BoostParams::new(0.1, eps, 512, cal)?;
        let mut successes = 0usize;
        let mut max_rounds = 0usize;
        let mut aborted = 0usize;
        for trial in 0..100u64 {
            let target_idx = (trial as usize * 13) % class.len();
            let target = class.concept(target_idx).clone();
            let mut stream = SeededStream::new(&p, target.clone(), 1000 + trial)?;
            let mut weak = CoverWeakLearner::new(class.clone(), d)?;
            let out = bbm_boost(&mut stream, &mut weak, &params, p.len(), 2000 + trial)?;
            max_rounds = max_rounds.max(out.rounds_completed);
            if out.aborted_at.is_some() {
                aborted += 1;
            }
            let majority = out.majority.to_concept(p.len())?;
            if loss(&majority, &target, &p)? <= eps {
                successes += 1;
            }
        }
        let elapsed = start.elapsed().as_secs_f64();
        Ok((
            successes >= 67 && max_rounds <= params.rounds && elapsed < 300.0,
            format!(
                "{successes}/100 trials at loss <= {eps}, max {max_rounds}/{} rounds, {aborted} aborted, {elapsed:.1}s",
                params.rounds
            ),
        ))
    })
}

/// Rejection acceptance probabilities stay in `[eps^2, 1]` and the accepted
/// distribution reproduces the target exactly.
pub fn criterion_07(_cal: &Calibration) -> CriterionReport {
    run_criterion(7, "rejection-acceptance-range", || {
        let mut lowest = f64::MAX;
        let mut worst_dev = 0.0f64;
        for s in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(s ^ 0xC7);
            let n = 2 + rng.gen_range(0..31usize);
            let p = perturb_distribution(&Distribution::uniform(n)?, 4.0, s)?;
            let mu = 1.0 + rng.gen_range(0..40u32) as f64 / 10.0;
            let q = perturb_distribution(&p, mu, s + 1000)?;
            let eps = 1.0 / mu;
            let acc = rejection_acceptance(&p, &q, eps)?;
            for &a in &acc {
                if !(eps * eps..=1.0).contains(&a) {
                    return Ok((
                        false,
                        format!("seed {s}: acceptance {a} outside [{}, 1]", eps * eps),
                    ));
                }
                lowest = lowest.min(a / (eps * eps));
            }
            let rec = accepted_distribution(&p, &q, eps)?;
            for (a, b) in rec.probs().iter().zip(p.probs()) {
                worst_dev = worst_dev.max((a - b).abs());
            }
        }
        Ok((
            worst_dev <= 1e-12,
            format!(
                "100 pairs: acceptance down to {lowest:.3}x the floor, accepted vs target off by {worst_dev:.1e}"
            ),
        ))
    })
}

fn check_quantization(gamma: f64, tau: f64) -> Result<Option<String>> {
    let q = quantize_signs(gamma, tau)?;
    let n_expected = (1.0 / tau).floor() as usize + 1;
    if q.n != n_expected {
        return Ok(Some(format!(
            "grid size {} for tau {tau}, expected {n_expected}",
            q.n
        )));
    }
    // The grid has spacing 2/n, so the nearest point is within 1/n, and the
    // size rule forces 1/n strictly below tau.
    let resolution = 1.0 / q.n as f64;
    if resolution >= tau {
        return Ok(Some(format!(
            "grid resolution {resolution} not below tau {tau}"
        )));
    }
    if (q.value - gamma).abs() > resolution + 1e-12 {
        return Ok(Some(format!(
            "value {} is {:.3e} from {gamma}, beyond the 1/n resolution {resolution}",
            q.value,
            (q.value - gamma).abs(),
        )));
    }
    let recomputed = (q.n as f64 - 2.0 * q.k as f64) / q.n as f64;
    if q.value != recomputed || q.k > q.n {
        return Ok(Some(format!(
            "inconsistent grid point (n={}, k={})",
            q.n, q.k
        )));
    }
    let signs = q.signs();
    let minus = signs.iter().filter(|&&s| s == -1).count();
    let mean = signs.iter().map(|&s| f64::from(s)).sum::<f64>() / q.n as f64;
    if minus != q.k || (mean - q.value).abs() > 1e-12 {
        return Ok(Some(format!(
            "sign expansion mismatch at (n={}, k={})",
            q.n, q.k
        )));
    }
    Ok(None)
}

/// Sign-grid quantization lands within its sub-`tau` grid resolution
/// everywhere.
pub fn criterion_08(_cal: &Calibration) -> CriterionReport {
    run_criterion(8, "quantization-resolution", || {
        let mut cases = 0usize;
        for &tau in &[1.0, 0.5, 0.25, 0.125] {
            for k in 0..=40 {
                let gamma = -1.0 + k as f64 / 20.0;
                if let Some(msg) = check_quantization(gamma, tau)? {
                    return Ok((false, format!("gamma {gamma}, tau {tau}: {msg}")));
                }
                cases += 1;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0xC8);
        for _ in 0..1000 {
            let gamma = rng.gen_range(-1.0..=1.0);
            let tau = rng.gen_range(0.01..=1.0);
            if let Some(msg) = check_quantization(gamma, tau)? {
                return Ok((false, format!("gamma {gamma}, tau {tau}: {msg}")));
            }
            cases += 1;
        }
        Ok((
            true,
            format!("{cases} grid and random cases within the sub-tau grid resolution"),
        ))
    })
}

/// Recombined cross-distribution queries answer within half the requested
/// tolerance of the true target-distribution correlation.
pub fn criterion_09(_cal: &Calibration) -> CriterionReport {
    run_criterion(9, "recombined-query-accuracy", || {
        let mut worst_margin = f64::MIN;
        let mut answers = 0usize;
        for n in [2usize, 4, 8] {
            let p = Distribution::normalized((1..=n).map(|i| i as f64).collect())?;
            let q = perturb_distribution(&p, 2.0, n as u64)?;
            let eps = 0.5;
            for &tau in &[0.5, 0.25] {
                for t_mask in 0..(1u32 << n) {
                    let target = Concept::new(
                        (0..n)
                            .map(|x| if t_mask >> x & 1 == 1 { 1 } else { -1 })
                            .collect(),
                    )?;
                    let inner = ExactOracle::new(target.clone(), q.clone())?;
                    let mut oracle = RejectionSqOracle::new(inner, p.clone(), q.clone(), eps)?;
                    for psi_mask in 0..(1u32 << n) {
                        let psi = Concept::new(
                            (0..n)
                                .map(|x| if psi_mask >> x & 1 == 1 { 1 } else { -1 })
                                .collect(),
                        )?;
                        let nu = oracle.answer(&SqQuery::new(psi.clone(), tau)?)?;
                        let truth = correlation(&psi, &target, &p)?;
                        let dev = (nu - truth).abs();
                        answers += 1;
                        worst_margin = worst_margin.max(dev - tau / 2.0);
                        if dev > tau / 2.0 + 1e-12 {
                            return Ok((
                                false,
                                format!("domain {n}, tau {tau}: deviation {dev:.3e} beyond tau/2"),
                            ));
                        }
                    }
                }
            }
        }
        Ok((
            true,
            format!("{answers} recombined answers, worst deviation tau/2 {worst_margin:+.2e}"),
        ))
    })
}

/// Properification tolerates hypothesis corruption up to half the accuracy
/// budget, and exact identification resolves every in-radius perturbation of
/// a parity target (and only those).
pub fn criterion_10(cal: &Calibration) -> CriterionReport {
    run_criterion(10, "properify-and-identify", || {
        // Corrupted-properification trials.
        let mut successes = 0usize;
        for s in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(s ^ 0x10);
            let m = 8 + (s % 12) as usize;
            let n = 20 + (s % 32) as usize;
            let (class, p) = GenSpec::Random { m, n, seed: s }.generate(cal)?;
            let target_idx = rng.gen_range(0..m);
            let target = class.concept(target_idx).clone();
            let eps = [0.05, 0.1, 0.2][(s % 3) as usize];
            let flips = ((n as f64) * eps / 2.0).floor() as usize;
            let mut points: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                points.swap(i, rng.gen_range(0..=i));
            }
            let h = target.with_flipped(&points[..flips]);
            let proper = properify(&h, &class, &p, eps, cal, s)?;
            if loss(&proper.concept, &target, &p)? <= 3.0 * eps {
                successes += 1;
            }
        }

        // Exhaustive identification geometry on parity families.
        let mut identify_cases = 0usize;
        for bits in 2..=4u32 {
            let (class, p) = GenSpec::Parity { bits }.generate(cal)?;
            let n = class.domain().size();
            let witness = sq_dim_exact(&class, &p, cal.exact_dim_cap)?;
            let max_flips: usize = match bits {
                2 => 0,
                3 => 1,
                _ => 3,
            };
            for a in 0..class.len() {
                let target = class.concept(a);
                for mask in 0..(1u32 << n) {
                    if mask.count_ones() as usize > max_flips {
                        continue;
                    }
                    let flips: Vec<usize> = (0..n).filter(|&x| mask >> x & 1 == 1).collect();
                    let h = target.with_flipped(&flips);
                    match exact_identify(&h, &class, &witness, &p) {
                        Ok(idx) if idx == a => identify_cases += 1,
                        Ok(idx) => {
                            return Ok((
                                false,
                                format!(
                                    "parity:{bits}: {} flips of {a} identified as {idx}",
                                    flips.len()
                                ),
                            ))
                        }
                        Err(e) => {
                            return Ok((
                                false,
                                format!("parity:{bits}: {} flips of {a} errored: {e}", flips.len()),
                            ))
                        }
                    }
                }
            }
        }
        // Out-of-radius and boundary behavior must be refused, not guessed.
        // Flipping a two-bit parity anywhere off the all-positive point puts
        // two other members at the same 1/4 distance as the target.
        let (class2, p2) = GenSpec::Parity { bits: 2 }.generate(cal)?;
        let w2 = sq_dim_exact(&class2, &p2, cal.exact_dim_cap)?;
        let one_flip = class2.concept(1).with_flipped(&[1]);
        let ambiguous = matches!(
            exact_identify(&one_flip, &class2, &w2, &p2),
            Err(Error::AmbiguousIdentification { .. })
        );
        let (class3, p3) = GenSpec::Parity { bits: 3 }.generate(cal)?;
        let w3 = sq_dim_exact(&class3, &p3, cal.exact_dim_cap)?;
        let three_flips = class3.concept(0).with_flipped(&[0, 3, 5]);
        let failed = matches!(
            exact_identify(&three_flips, &class3, &w3, &p3),
            Err(Error::IdentificationFailed { .. })
        );

        Ok((
            successes >= 67 && ambiguous && failed,
            format!(
                "{successes}/100 corrupted properifications within 3 eps; {identify_cases} in-radius identifications exact; boundary cases refused"
            ),
        ))
    })
}

/// A consistency-maximizing adversary concedes at most one elimination per
/// member query on a parity family.
pub fn criterion_11(cal: &Calibration) -> CriterionReport {
    run_criterion(11, "adversarial-elimination", || {
        let (class, p) = GenSpec::Parity { bits: 3 }.generate(cal)?;
        let size = class.len();
        let mut oracle = AdversarialOracle::new(class.clone(), p)?;
        let mut survivors = Vec::with_capacity(size);
        for i in 0..size {
            let before = oracle.version_space().len();
            oracle.answer(&SqQuery::new(class.concept(i).clone(), 0.25)?)?;
            let after = oracle.version_space().len();
            if before - after > 1 {
                return Ok((
                    false,
                    format!(
                        "query {i} eliminated {} candidates at tolerance 1/4",
                        before - after
                    ),
                ));
            }
            survivors.push(after);
        }
        let traced: Vec<usize> = oracle.trace().iter().map(|e| e.eliminated_count).collect();
        let trace_ok = traced.iter().sum::<usize>() == size - 1 && traced.iter().all(|&e| e <= 1);
        Ok((
            oracle.version_space().len() == 1 && trace_ok,
            format!("survivors after each member query: {survivors:?}"),
        ))
    })
}

/// Streaming learners run under the checked width/round-trip harness, and the
/// bounded-memory weak learner's declared width meets the pinned layout and
/// the width formula.
pub fn criterion_12(cal: &Calibration) -> CriterionReport {
    run_criterion(12, "stream-width-accounting", || {
        let (class, p) = GenSpec::Threshold { n: 63 }.generate(cal)?;

        let constant = ConstantLearner::new(class.concept(20).clone());
        let t_const = run_stream(&constant, &p, class.concept(20), 1e-12, 1)?;
        if !t_const.success || t_const.bits_declared != 0 {
            return Ok((false, "constant learner failed its zero-state run".into()));
        }

        let mut enum_ok = 0usize;
        for seed in 0..3u64 {
            let enumeration = EnumerationLearner::new(class.clone(), 0.1)?;
            let trace = run_stream(&enumeration, &p, class.concept(40), 0.1, 10 + seed)?;
            if trace.success && trace.bits_max_observed <= trace.bits_declared {
                enum_ok += 1;
            }
        }

        let weak = SqStreamingLearner::new(class.clone(), &p, 8)?;
        let width = weak.state_width();
        let formula = (cal.kappa
            * (class.len() as f64).log2()
            * (weak.declared_queries() as f64 / weak.tau()).log2())
        .ceil() as u64;
        let mut weak_ok = 0usize;
        for seed in 0..3u64 {
            let trace = run_stream(
                &weak,
                &p,
                class.concept(28),
                0.5 - weak.tau() / 2.0,
                20 + seed,
            )?;
            if trace.success && trace.bits_max_observed <= width {
                weak_ok += 1;
            }
        }

        Ok((
            width == 52 && width <= formula && enum_ok >= 2 && weak_ok >= 2,
            format!(
                "weak-learner width {width} bits (formula cap {formula}); enumeration {enum_ok}/3, weak {weak_ok}/3 checked runs"
            ),
        ))
    })
}

/// Re-measures the density constant `c0` on reduced boosting sweeps.
pub fn calibrate_density(cal: &Calibration) -> CriterionReport {
    run_criterion(1, "calibrate-density-constant", || {
        let mut worst = 0.0f64;
        for &eps in &[0.05f64, 0.1] {
            let (class, p) = GenSpec::Threshold { n: 16 }.generate(cal)?;
            let d = sq_dim_greedy(&class, &p, 0)?.dim;
            for target_idx in spread_targets(class.len(), 5) {
                let target = class.concept(target_idx).clone();
                let mut base = ExactOracle::new(target.clone(), p.clone())?;
                let out = sq_bbm_boost(
                    &mut base,
                    &class,
                    &target,
                    &p,
                    d,
                    eps,
                    cal,
                    &SqBoostOptions::default(),
                )?;
                for r in &out.rounds {
                    worst = worst.max(r.max_ratio * eps.powi(3));
                }
            }
        }
        let suggested = worst.max(1.0).log2().ceil().exp2();
        Ok((
            cal.c0 >= suggested,
            format!(
                "measured density x eps^3 up to {worst:.3}; suggested c0 {suggested}, frozen {}",
                cal.c0
            ),
        ))
    })
}

/// Re-measures the width constant `kappa` on boosting and streaming widths.
pub fn calibrate_width(cal: &Calibration) -> CriterionReport {
    run_criterion(2, "calibrate-width-constant", || {
        let mut worst = 0.0f64;
        let (class, p) = GenSpec::Threshold { n: 16 }.generate(cal)?;
        let d = sq_dim_greedy(&class, &p, 0)?.dim;
        for &eps in &[0.05f64, 0.1] {
            let target = class.concept(9).clone();
            let mut base = ExactOracle::new(target.clone(), p.clone())?;
            let out = sq_bbm_boost(
                &mut base,
                &class,
                &target,
                &p,
                d,
                eps,
                cal,
                &SqBoostOptions::default(),
            )?;
            let q = out.queries_consumed.max(1) as f64;
            let tau = out.min_tolerance.unwrap_or(out.tau_weak);
            let denom = (class.len() as f64).log2() * (q / tau).log2();
            worst = worst.max(out.bits_counted as f64 / denom);
        }
        let (class63, p63) = GenSpec::Threshold { n: 63 }.generate(cal)?;
        let weak = SqStreamingLearner::new(class63.clone(), &p63, 8)?;
        let denom =
            (class63.len() as f64).log2() * (weak.declared_queries() as f64 / weak.tau()).log2();
        worst = worst.max(weak.state_width() as f64 / denom);
        let suggested = (worst * 10.0).ceil() / 10.0;
        Ok((
            cal.kappa >= suggested,
            format!(
                "measured width ratio up to {worst:.3}; suggested kappa {suggested}, frozen {}",
                cal.kappa
            ),
        ))
    })
}

/// Which collection of checks to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// All twelve acceptance criteria.
    Acceptance,
    /// The fast subset, for quick sanity runs.
    Smoke,
    /// Re-measurement of the frozen calibration constants.
    Calibration,
}

/// The twelve acceptance criteria, in order.
pub fn acceptance_criteria() -> Vec<fn(&Calibration) -> CriterionReport> {
    vec![
        criterion_01,
        criterion_02,
        criterion_03,
        criterion_04,
        criterion_05,
        criterion_06,
        criterion_07,
        criterion_08,
        criterion_09,
        criterion_10,
        criterion_11,
        criterion_12,
    ]
}

/// Runs a suite and returns one report per criterion.
pub fn run_suite(suite: Suite, cal: &Calibration) -> Vec<CriterionReport> {
    match suite {
        Suite::Acceptance => acceptance_criteria().iter().map(|f| f(cal)).collect(),
        Suite::Smoke => [
            criterion_01 as fn(&Calibration) -> CriterionReport,
            criterion_02,
            criterion_07,
            criterion_08,
            criterion_11,
            criterion_12,
        ]
        .iter()
        .map(|f| f(cal))
        .collect(),
        Suite::Calibration => vec![calibrate_density(cal), calibrate_width(cal)],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_lines_are_single_and_tagged() {
        let report = CriterionReport {
            id: 3,
            name: "example",
            passed: true,
            detail: "ok".into(),
            seconds: 0.25,
        };
        let line = report.line();
        assert!(line.starts_with("criterion 03 [PASS] example"));
        assert!(!line.contains('\n'));
        let failed = CriterionReport {
            passed: false,
            ..report
        };
        assert!(failed.line().contains("[FAIL]"));
    }

    #[test]
    fn smoke_suite_passes_end_to_end() {
        let cal = Calibration::default();
        for report in run_suite(Suite::Smoke, &cal) {
            assert!(report.passed, "{}", report.line());
        }
    }
}

//! SQ-dimension search.
//!
//! The SQ dimension of a class under a distribution is the largest `d` for
//! which some `d` concepts are pairwise nearly orthogonal: every pair
//! satisfies `|corr| <= 1/d`. [`sq_dim_exact`] finds it by exhaustive
//! descending search (capped, since the subset problem is a clique search);
//! [`sq_dim_greedy`] grows a witness in seeded random order and reports a
//! certified lower bound; [`ball_max_sqdim`] hill-climbs over distributions in
//! a multiplicative neighborhood of a base distribution to estimate how large
//! the dimension can get among neighboring distributions — also a lower
//! bound, never an upper bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{correlation, is_mu_close, ConceptClass, Distribution};
use crate::error::{Error, Result};

/// A claimed SQ-dimension witness: `dim` concept indices whose pairwise
/// correlations are all at most `1/dim` in magnitude.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SqWitness {
    /// Claimed dimension; equals `members.len()` for a valid witness.
    pub dim: usize,
    /// Indices into the class, ascending.
    pub members: Vec<usize>,
}

/// Result of the neighborhood search: the best distribution found and the
/// dimension certified there.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BallEstimate {
    /// Neighborhood radius.
    pub mu: f64,
    /// Distribution achieving the best certified dimension.
    pub best_q: Distribution,
    /// Certified dimension at `best_q` (a lower bound for the neighborhood).
    pub dim_at_best_q: usize,
    /// Random restarts used.
    pub restarts: usize,
    /// Witness certifying `dim_at_best_q` under `best_q`.
    pub witness: SqWitness,
}

/// Absolute value of every pairwise correlation, as a dense matrix.
// The triangular two-sided fill has no iterator form; indices are the point.
#[allow(clippy::needless_range_loop)]
fn abs_corr_matrix(class: &ConceptClass, p: &Distribution) -> Result<Vec<Vec<f64>>> {
    let m = class.len();
    let mut mat = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in (i + 1)..m {
            let c = correlation(class.concept(i), class.concept(j), p)?.abs();
            mat[i][j] = c;
            mat[j][i] = c;
        }
    }
    Ok(mat)
}

/// Branch-and-bound clique search over a bitmask adjacency.
fn find_clique(adj: &[u64], need: usize, current: &mut Vec<usize>, candidates: u64) -> bool {
    if current.len() == need {
        return true;
    }
    let mut cands = candidates;
    // Prune: not enough candidates left to finish the clique.
    if current.len() + (cands.count_ones() as usize) < need {
        return false;
    }
    while cands != 0 {
        let v = cands.trailing_zeros() as usize;
        cands &= cands - 1;
        if current.len() + 1 + (cands.count_ones() as usize).min(adj[v].count_ones() as usize)
            < need
        {
            // Even taking v and everything after cannot reach `need`.
            continue;
        }
        current.push(v);
        if find_clique(adj, need, current, cands & adj[v]) {
            return true;
        }
        current.pop();
    }
    false
}

/// Exact SQ dimension by descending exhaustive search.
///
/// Errors with [`Error::ClassTooLarge`] when the class exceeds `cap`
/// (exhaustive subset search is exponential in the worst case). The returned
/// witness is valid by construction; `dim >= 1` always, since any singleton
/// is a witness for `d = 1`.
pub fn sq_dim_exact(class: &ConceptClass, p: &Distribution, cap: usize) -> Result<SqWitness> {
    let m = class.len();
    if m > cap.min(64) {
        return Err(Error::ClassTooLarge {
            size: m,
            cap: cap.min(64),
        });
    }
    check_domain(class, p)?;
    let corr = abs_corr_matrix(class, p)?;
    for d in (2..=m).rev() {
        let bound = 1.0 / d as f64;
        let mut adj = vec![0u64; m];
        for (i, row) in corr.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if i != j && c <= bound {
                    adj[i] |= 1 << j;
                }
            }
        }
        let all: u64 = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
        let mut current = Vec::with_capacity(d);
        if find_clique(&adj, d, &mut current, all) {
            current.sort_unstable();
            return Ok(SqWitness {
                dim: d,
                members: current,
            });
        }
    }
    Ok(SqWitness {
        dim: 1,
        members: vec![0],
    })
}

/// Greedy randomized witness growth; returns a certified lower bound.
///
/// Scans the class in a seeded random order and keeps a concept whenever the
/// grown set still satisfies the pairwise bound at its new size. The result
/// is always a valid witness, so `sq_dim_greedy(...).dim <= sq_dim_exact(...).dim`.
pub fn sq_dim_greedy(class: &ConceptClass, p: &Distribution, seed: u64) -> Result<SqWitness> {
    check_domain(class, p)?;
    let m = class.len();
    let mut order: Vec<usize> = (0..m).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Fisher-Yates shuffle.
    for i in (1..m).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let corr = abs_corr_matrix(class, p)?;
    let mut members: Vec<usize> = Vec::new();
    for &i in &order {
        let grown = members.len() + 1;
        let bound = 1.0 / grown as f64;
        let new_ok = members.iter().all(|&j| corr[i][j] <= bound);
        let old_ok = members
            .iter()
            .enumerate()
            .all(|(a, &ja)| members[a + 1..].iter().all(|&jb| corr[ja][jb] <= bound));
        if new_ok && old_ok {
            members.push(i);
        }
    }
    members.sort_unstable();
    let witness = SqWitness {
        dim: members.len().max(1),
        members: if members.is_empty() { vec![0] } else { members },
    };
    debug_assert!(verify_witness(class, p, &witness)?);
    Ok(witness)
}

/// Checks a claimed witness: consistent dimension, distinct in-range members,
/// and every pairwise correlation at most `1/dim` in magnitude.
pub fn verify_witness(class: &ConceptClass, p: &Distribution, w: &SqWitness) -> Result<bool> {
    check_domain(class, p)?;
    if w.dim == 0 || w.dim != w.members.len() {
        return Ok(false);
    }
    let mut seen = std::collections::HashSet::new();
    for &i in &w.members {
        if i >= class.len() || !seen.insert(i) {
            return Ok(false);
        }
    }
    let bound = 1.0 / w.dim as f64;
    for (a, &i) in w.members.iter().enumerate() {
        for &j in &w.members[a + 1..] {
            if correlation(class.concept(i), class.concept(j), p)?.abs() > bound {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Hill-climbing estimate of the largest SQ dimension among distributions in
/// the `mu`-neighborhood of `p`.
///
/// Starts from `p` itself plus `restarts` random in-neighborhood
/// perturbations, and accepts coordinate moves that strictly increase the
/// certified dimension while staying inside the neighborhood. Because `p` is
/// always a start point and per-restart seeds are derived from the restart
/// index, the result is deterministic and nondecreasing in `restarts` for a
/// fixed seed. The estimate is a lower bound only.
pub fn ball_max_sqdim(
    class: &ConceptClass,
    p: &Distribution,
    mu: f64,
    restarts: usize,
    seed: u64,
    exact_cap: usize,
) -> Result<BallEstimate> {
    if !(mu.is_finite() && mu >= 1.0) {
        return Err(Error::invalid(
            "mu",
            format!("mu must be finite and >= 1, got {mu}"),
        ));
    }
    check_domain(class, p)?;

    let dim_of = |q: &Distribution, seed: u64| -> Result<SqWitness> {
        if class.len() <= exact_cap {
            sq_dim_exact(class, q, exact_cap)
        } else {
            sq_dim_greedy(class, q, seed)
        }
    };

    let mut best_q = p.clone();
    let mut best_w = dim_of(p, seed)?;

    const MOVES_PER_START: usize = 60;
    let factors = [0.8, 1.25, 0.5, 2.0];
    for restart in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (restart as u64).wrapping_mul(0x9e37_79b9));
        // Random start: per-point ratios in [mu^-1/2, mu^1/2]; after
        // normalization every ratio stays inside [1/mu, mu].
        let half = mu.sqrt();
        let raw: Vec<f64> = p
            .probs()
            .iter()
            .map(|&px| px * rng.gen_range(1.0 / half..=half))
            .collect();
        let mut q = match Distribution::normalized(raw) {
            Ok(q) if is_mu_close(p, &q, mu)? => q,
            _ => continue,
        };
        let mut w = dim_of(&q, seed ^ restart as u64)?;
        for step in 0..MOVES_PER_START {
            let x = rng.gen_range(0..p.len());
            if p.prob(x) == 0.0 {
                continue;
            }
            let f = factors[rng.gen_range(0..factors.len())];
            let mut raw = q.probs().to_vec();
            raw[x] *= f;
            let proposal = match Distribution::normalized(raw) {
                Ok(d) => d,
                Err(_) => continue,
            };
            if !is_mu_close(p, &proposal, mu)? {
                continue;
            }
            let pw = dim_of(&proposal, seed ^ (restart as u64) ^ (step as u64) << 8)?;
            if pw.dim > w.dim {
                q = proposal;
                w = pw;
            }
        }
        if w.dim > best_w.dim {
            best_w = w;
            best_q = q;
        }
    }

    debug_assert!(verify_witness(class, &best_q, &best_w)?);
    Ok(BallEstimate {
        mu,
        dim_at_best_q: best_w.dim,
        best_q,
        restarts,
        witness: best_w,
    })
}

fn check_domain(class: &ConceptClass, p: &Distribution) -> Result<()> {
    if class.domain().size() != p.len() {
        return Err(Error::DimensionMismatch {
            what: "class domain vs distribution",
            expected: p.len(),
            got: class.domain().size(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Concept, Domain};
    use proptest::prelude::*;
    // Direct import: both globs above re-export an `Rng` trait.
    use rand::Rng;

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

    fn threshold_class(n: usize) -> ConceptClass {
        let concepts = (0..=n)
            .map(|j| Concept::from_fn(n, |x| x >= j).unwrap())
            .collect();
        ConceptClass::new(Domain::new(n).unwrap(), concepts).unwrap()
    }

    fn random_class(m: usize, n: usize, seed: u64) -> ConceptClass {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let concepts = (0..m)
            .map(|_| {
                Concept::new(
                    (0..n)
                        .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
                        .collect(),
                )
                .unwrap()
            })
            .collect();
        ConceptClass::new(Domain::new(n).unwrap(), concepts).unwrap()
    }

    #[test]
    fn parity_classes_have_maximal_dimension() {
        for bits in 1..=3u32 {
            let class = parity_class(bits);
            let p = Distribution::uniform(class.domain().size()).unwrap();
            let w = sq_dim_exact(&class, &p, 24).unwrap();
            assert_eq!(w.dim, 1 << bits, "parity on {bits} bits");
            assert!(verify_witness(&class, &p, &w).unwrap());
        }
    }

    #[test]
    fn antipodal_pair_has_dimension_one() {
        let h = Concept::new(vec![1, -1, 1, -1]).unwrap();
        let class =
            ConceptClass::new(Domain::new(4).unwrap(), vec![h.clone(), h.negated()]).unwrap();
        let p = Distribution::uniform(4).unwrap();
        let w = sq_dim_exact(&class, &p, 24).unwrap();
        assert_eq!(w.dim, 1);
        // The same pair claimed as a 2-witness must fail verification.
        let bogus = SqWitness {
            dim: 2,
            members: vec![0, 1],
        };
        assert!(!verify_witness(&class, &p, &bogus).unwrap());
    }

    #[test]
    fn threshold_class_dimension_is_two() {
        // Three thresholds need all pairwise gaps in [1/3, 2/3] of the mass,
        // which cannot happen on 8 or 16 uniform points; two can.
        for n in [8usize, 16] {
            let class = threshold_class(n);
            let p = Distribution::uniform(n).unwrap();
            let w = sq_dim_exact(&class, &p, 24).unwrap();
            assert_eq!(w.dim, 2, "threshold class on {n} points");
        }
    }

    #[test]
    fn exact_cap_is_enforced() {
        let class = random_class(25, 4, 3);
        let p = Distribution::uniform(4).unwrap();
        match sq_dim_exact(&class, &p, 24) {
            Err(Error::ClassTooLarge { size: 25, cap: 24 }) => {}
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn greedy_never_beats_exact_and_always_verifies() {
        for seed in 0..30u64 {
            let class = random_class(8, 6, seed);
            let p = Distribution::uniform(6).unwrap();
            let exact = sq_dim_exact(&class, &p, 24).unwrap();
            let greedy = sq_dim_greedy(&class, &p, seed * 7 + 1).unwrap();
            assert!(verify_witness(&class, &p, &greedy).unwrap());
            assert!(
                greedy.dim <= exact.dim,
                "seed {seed}: greedy {} > exact {}",
                greedy.dim,
                exact.dim
            );
        }
    }

    #[test]
    fn ball_search_dominates_base_distribution_and_is_monotone() {
        let class = threshold_class(8);
        let p = Distribution::uniform(8).unwrap();
        let at_p = sq_dim_exact(&class, &p, 24).unwrap().dim;
        let few = ball_max_sqdim(&class, &p, 4.0, 5, 11, 24).unwrap();
        let many = ball_max_sqdim(&class, &p, 4.0, 20, 11, 24).unwrap();
        assert!(few.dim_at_best_q >= at_p);
        assert!(many.dim_at_best_q >= few.dim_at_best_q);
        assert!(is_mu_close(&p, &many.best_q, 4.0).unwrap());
        assert!(verify_witness(&class, &many.best_q, &many.witness).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn exact_witness_always_verifies(seed in 0u64..5000, m in 2usize..9, n in 2usize..7) {
            let class = random_class(m, n, seed);
            let p = Distribution::uniform(n).unwrap();
            let w = sq_dim_exact(&class, &p, 24).unwrap();
            prop_assert!(verify_witness(&class, &p, &w).unwrap());
            prop_assert!(w.dim >= 1 && w.dim <= m);
        }
    }
}

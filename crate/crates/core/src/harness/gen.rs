//! Seeded generators for concept classes and reference distributions.
//!
//! Every generator is named by a compact spec string (`parity:3`,
//! `threshold:64`, `random:20:32:7`, ...) so the same family can be requested
//! from the command line, from tests, and from the acceptance suite without
//! drift. Generation is deterministic: the descriptor (plus its embedded
//! seed, for the random family) fully determines the class.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Calibration;
use crate::domain::{is_mu_close, Concept, ConceptClass, Distribution, Domain};
use crate::error::{Error, Result};

/// A named concept-class family together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenSpec {
    /// All `2^bits` parity labelings of `bits`-bit strings. Concept `a`
    /// labels point `x` by the parity of `a & x`, so index `0` is the
    /// all-ones concept.
    Parity { bits: u32 },
    /// Parity labelings whose support has exactly `k` of the `bits`
    /// positions, in increasing mask order.
    SparseParity { bits: u32, k: u32 },
    /// The `n + 1` threshold labelings of a line of `n` points: concept `j`
    /// labels `x` positive exactly when `x >= j`.
    Threshold { n: usize },
    /// `m` independent uniform sign vectors on `n` points, drawn from the
    /// embedded seed.
    Random { m: usize, n: usize, seed: u64 },
}

impl GenSpec {
    /// Builds the class together with the uniform reference distribution on
    /// its domain.
    pub fn generate(&self, cal: &Calibration) -> Result<(ConceptClass, Distribution)> {
        let class = match *self {
            GenSpec::Parity { bits } => parity_class(bits, cal)?,
            GenSpec::SparseParity { bits, k } => sparse_parity_class(bits, k, cal)?,
            GenSpec::Threshold { n } => threshold_class(n)?,
            GenSpec::Random { m, n, seed } => random_class(m, n, seed)?,
        };
        let p = Distribution::uniform(class.domain().size())?;
        Ok((class, p))
    }
}

impl fmt::Display for GenSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GenSpec::Parity { bits } => write!(f, "parity:{bits}"),
            GenSpec::SparseParity { bits, k } => write!(f, "sparse_parity:{bits}:{k}"),
            GenSpec::Threshold { n } => write!(f, "threshold:{n}"),
            GenSpec::Random { m, n, seed } => write!(f, "random:{m}:{n}:{seed}"),
        }
    }
}

impl FromStr for GenSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let family = parts.next().unwrap_or_default();
        let args: Vec<&str> = parts.collect();
        let parse_int = |raw: &str, what: &str| -> Result<u64> {
            raw.parse::<u64>()
                .map_err(|_| Error::Format(format!("spec `{s}`: `{raw}` is not a valid {what}")))
        };
        match (family, args.as_slice()) {
            ("parity", [bits]) => Ok(GenSpec::Parity {
                bits: parse_int(bits, "bit count")? as u32,
            }),
            ("sparse_parity", [bits, k]) => Ok(GenSpec::SparseParity {
                bits: parse_int(bits, "bit count")? as u32,
                k: parse_int(k, "support size")? as u32,
            }),
            ("threshold", [n]) => Ok(GenSpec::Threshold {
                n: parse_int(n, "domain size")? as usize,
            }),
            ("random", [m, n, seed]) => Ok(GenSpec::Random {
                m: parse_int(m, "class size")? as usize,
                n: parse_int(n, "domain size")? as usize,
                seed: parse_int(seed, "seed")?,
            }),
            _ => Err(Error::Format(format!(
                "spec `{s}`: expected parity:BITS, sparse_parity:BITS:K, threshold:N, or random:M:N:SEED"
            ))),
        }
    }
}

fn parity_domain(bits: u32, cal: &Calibration) -> Result<usize> {
    if bits == 0 {
        return Err(Error::invalid(
            "bits",
            "parity classes need at least one bit",
        ));
    }
    if bits > cal.parity_max_bits {
        return Err(Error::ClassTooLarge {
            // Saturate: the point is the refusal, and 2^bits can overflow.
            size: 1usize.checked_shl(bits).unwrap_or(usize::MAX),
            cap: 1usize << cal.parity_max_bits,
        });
    }
    Ok(1usize << bits)
}

fn parity_concept(a: usize, n: usize) -> Result<Concept> {
    Concept::new(
        (0..n)
            .map(|x| {
                if (a & x).count_ones().is_multiple_of(2) {
                    1
                } else {
                    -1
                }
            })
            .collect(),
    )
}

fn parity_class(bits: u32, cal: &Calibration) -> Result<ConceptClass> {
    let n = parity_domain(bits, cal)?;
    let concepts = (0..n)
        .map(|a| parity_concept(a, n))
        .collect::<Result<_>>()?;
    ConceptClass::new(Domain::new(n)?, concepts)
}

fn sparse_parity_class(bits: u32, k: u32, cal: &Calibration) -> Result<ConceptClass> {
    if k > bits {
        return Err(Error::invalid(
            "k",
            format!("support size {k} exceeds the {bits} available positions"),
        ));
    }
    let n = parity_domain(bits, cal)?;
    let concepts = (0..n)
        .filter(|a| a.count_ones() == k)
        .map(|a| parity_concept(a, n))
        .collect::<Result<Vec<_>>>()?;
    ConceptClass::new(Domain::new(n)?, concepts)
}

fn threshold_class(n: usize) -> Result<ConceptClass> {
    if n == 0 {
        return Err(Error::invalid(
            "n",
            "threshold classes need a non-empty line",
        ));
    }
    let concepts = (0..=n)
        .map(|j| Concept::from_fn(n, |x| x >= j))
        .collect::<Result<_>>()?;
    ConceptClass::new(Domain::new(n)?, concepts)
}

fn random_class(m: usize, n: usize, seed: u64) -> Result<ConceptClass> {
    if m == 0 {
        return Err(Error::invalid(
            "m",
            "random classes need at least one concept",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let concepts = (0..m)
        .map(|_| {
            Concept::new(
                (0..n)
                    .map(|_| if rng.gen_bool(0.5) { 1 } else { -1 })
                    .collect(),
            )
        })
        .collect::<Result<_>>()?;
    ConceptClass::new(Domain::new(n)?, concepts)
}

/// Draws a distribution in the multiplicative `mu`-neighborhood of `p`.
///
/// Each point's mass is scaled by an independent log-uniform factor in
/// `[mu^-1/2, mu^1/2]` and the result is renormalized, which keeps every
/// pointwise ratio strictly inside `[1/mu, mu]`.
pub fn perturb_distribution(p: &Distribution, mu: f64, seed: u64) -> Result<Distribution> {
    if !mu.is_finite() || mu < 1.0 {
        return Err(Error::invalid(
            "mu",
            format!("neighborhood radius must be a finite value of at least 1, got {mu}"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half_span = 0.5 * mu.ln();
    let weights: Vec<f64> = p
        .probs()
        .iter()
        .map(|&px| px * (rng.gen_range(-1.0..=1.0) * half_span).exp())
        .collect();
    let q = Distribution::normalized(weights)?;
    debug_assert!(is_mu_close(p, &q, mu).unwrap_or(false));
    Ok(q)
}

//! Fixture builders shared by the criterion benches in `benches/`.
//!
//! Run the full suite with `cargo bench -p sqmem-bench`; filter individual
//! kernels by name, e.g. `cargo bench -p sqmem-bench -- sq_dim`.

use sqmem::boost::BoostState;
use sqmem::harness::GenSpec;
use sqmem::{Calibration, Concept, ConceptClass, Distribution, ExactOracle};

/// Parity class on `bits` bits together with the uniform distribution.
pub fn parity(bits: u32) -> (ConceptClass, Distribution) {
    GenSpec::Parity { bits }
        .generate(&Calibration::default())
        .expect("parity fixture")
}

/// Threshold class on a line of `n` points with the uniform distribution.
pub fn thresholds(n: usize) -> (ConceptClass, Distribution) {
    GenSpec::Threshold { n }
        .generate(&Calibration::default())
        .expect("threshold fixture")
}

/// A mid-run boosting scene on the threshold line: an exact oracle for the
/// middle cut, a probe query, and a state holding `t` evenly spaced weak
/// hypotheses out of a `10 t` horizon.
pub fn boost_scene(n: usize, t: usize) -> (ExactOracle, Concept, BoostState, Distribution) {
    let (class, p) = thresholds(n);
    let target = class.concept(n / 2).clone();
    let oracle = ExactOracle::new(target, p.clone()).expect("oracle fixture");
    let step = class.len() / (t + 1);
    let hypotheses: Vec<Concept> = (1..=t).map(|i| class.concept(i * step).clone()).collect();
    let state = BoostState {
        rounds_total: 10 * t,
        gamma: 1.0 / 24.0,
        epsilon: 0.1,
        hypotheses,
    };
    let psi = class.concept(n / 3).clone();
    (oracle, psi, state, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        let (class, p) = parity(3);
        assert_eq!(class.len(), 8);
        assert_eq!(p.len(), 8);
        let (oracle, psi, state, dist) = boost_scene(64, 8);
        drop(oracle);
        assert_eq!(psi.len(), dist.len());
        assert_eq!(state.round(), 8);
    }
}

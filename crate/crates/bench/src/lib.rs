//! Fixtures shared by the benchmarks.

use distinct_core::fingerprint::{fingerprint_of, Fingerprint};
use distinct_core::rng::RngStream;
use distinct_core::sampling::draw_poissonized;
use distinct_core::urn::{make_uniform_support, UrnSpec};

/// Uniform urn with `k` balls over `colors` colors.
pub fn uniform_urn(k: u64, colors: u64) -> UrnSpec {
    make_uniform_support(k, colors).expect("valid urn")
}

/// Fingerprint of one Poisson sample of mean `n` from `urn`.
pub fn poisson_fingerprint(urn: &UrnSpec, n: u64, seed: u64) -> Fingerprint {
    let batch = draw_poissonized(urn, n as f64, RngStream::new(seed, 0)).expect("valid mean");
    fingerprint_of(&batch.draws)
}

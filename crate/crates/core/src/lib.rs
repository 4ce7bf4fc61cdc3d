//! Estimating the number of distinct colors in a `k`-ball urn from random
//! samples with linear fingerprint estimators.
//!
//! Two coefficient families are provided: a least-squares fit on the node grid
//! `{1/M, …, 1}` built from discrete Chebyshev polynomials, and exact
//! interpolation through Stirling numbers of the first kind.

pub mod coeffs;
pub mod error;
pub mod estimator;
pub mod exact;
pub mod fingerprint;
pub mod harness;
pub mod orthopoly;
pub mod rng;
pub mod sampling;
pub mod stirling;
pub mod urn;
pub mod vandermonde;
pub mod verify;

pub use coeffs::{CoefficientVector, NodePolynomial, Regime};
pub use error::{Error, Result};
pub use estimator::{
    build_estimator, estimate, exact_bias, select_params, CoefficientCache, EstimateResult,
    Estimator, EstimatorParams, ParamOverrides,
};
pub use fingerprint::{fingerprint, fingerprint_of, histogram, Fingerprint, Histogram};
pub use rng::RngStream;
pub use sampling::{draw, ModelTag, SampleBatch};
pub use urn::{make_hard_pair, make_uniform_support, ColorId, HardInstancePair, UrnSpec};

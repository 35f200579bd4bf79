//! Dimensionality reduction and streaming sketches for weighted Euclidean
//! norms whose weights are only known after the data has been compressed.
//!
//! * [`projection`]: the linear map `g(x) = A x / sqrt(k)` into `C^k` with
//!   entries in `{1, -1, i, -i}`, and the estimators `rho(x, w)` and
//!   `rho(x - y, w)` of the squared weighted norm and distance.
//! * [`sketch`]: an AMS-style streaming sketch with 8-independent complex
//!   hashes and a median-of-means estimator.
//! * [`oracle`]: exact reference quantities and brute-force expectations.
//! * [`generators`] and [`harness`]: seeded inputs and the experiment runner
//!   behind the `wjl` command-line tool.

pub mod error;
pub mod generators;
pub mod harness;
pub mod hashing;
pub mod numeric;
pub mod oracle;
pub mod projection;
pub mod rng;
pub mod sketch;
pub mod units;

pub use error::{Error, Result};
pub use generators::{gen_pair, SparseSpec};
pub use hashing::{HashPolynomial, MERSENNE_61};
pub use oracle::{distortion, p_norm, weighted_sq_norm, WeightedPair};
pub use projection::{
    hoeffding_k, reduce, required_k, rho, rho_pairwise, sample_matrix, PlanParams, ProjectionMatrix,
    ReducedVector,
};
pub use sketch::{plan_sketch, SketchConfig, SketchDims, StreamMode, StreamSketch, WeightedNormEstimate};
pub use units::{unit_axpy, unit_mul, Complex, ComplexUnit};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

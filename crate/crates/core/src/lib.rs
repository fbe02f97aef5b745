//! Exact and Monte Carlo computations around the singularity probability of
//! random ±1 matrices.
//!
//! The building blocks are bit-packed sign vectors, fraction-free integer
//! determinants and primitive hyperplane normals. On top of them sit an
//! exhaustive census of small matrices, three independent ways to count the
//! sign vectors lying on a hyperplane, the lazy-walk smoothing of that count,
//! a classification of sampled hyperplanes by concentration, and a seeded
//! Monte Carlo estimator.

pub mod concentration;
pub mod det;
pub mod error;
pub(crate) mod exact;
pub mod exactcount;
pub mod hyperspec;
pub mod limits;
pub mod montecarlo;
pub mod normal;
pub mod parallel;
pub mod seed;
pub mod sign;
pub mod smoothing;

pub use det::{det_exact, is_singular_fast, PrimeScreen};
pub use error::{Error, Result};
pub use limits::Limits;
pub use normal::{normal_from_rows, NormalVector};
pub use seed::Seed;
pub use sign::{random_sign_matrix, random_sign_vector, SignMatrix, SignVector};

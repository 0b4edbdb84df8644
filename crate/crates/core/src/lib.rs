//! Free-probability toolkit.
//!
//! Moments and free cumulants over the non-crossing partition lattice,
//! conditional expectations onto letter sub-algebras, the maximal
//! correlation between partial sums of free identically distributed
//! variables, free convolution with Stieltjes inversion, and free entropy
//! and Fisher information along the free central limit theorem.

pub mod algebra;
pub mod error;
pub mod info;
pub mod linalg;
pub mod maxcorr;
pub mod moments;
pub mod nc_lattice;
pub mod projections;
pub mod rmt;
pub mod scalar;
pub mod transforms;

/// Library version, embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use algebra::{expand_sum, Generators, NCPolynomial, Word};
pub use error::{Error, Result};
pub use moments::{
    cumulants_to_moments, moments_to_cumulants, CumulantSequence, FreeFamily, Label,
    MomentSequence,
};
pub use nc_lattice::{enumerate_nc, is_noncrossing, kreweras, leq, moebius_to_top, NCPartition};
pub use scalar::{NumericMode, Rational, Scalar};

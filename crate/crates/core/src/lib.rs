//! Exact symbolic engine for multiparameter quantized enveloping algebras and
//! their function-algebra twists.
//!
//! Pipeline, bottom to top:
//! - [`scalar`]: the coefficient ring `Q[q^(1/N), q^(-1/N)]` with exact
//!   rational exponents, quantum integers and binomials.
//! - [`rootdata`]: Cartan data of finite type, the invariant inner product,
//!   rational lattices in the root span.
//! - [`bdstruct`]: Belavin-Drinfeld triples, the solver for compatible
//!   alternating forms, projections and image lattices.
//! - [`borel`]: the two Borel halves as free word algebras with toral
//!   K-indices, the skew Hopf pairing between them, Gram matrices and the
//!   dualization (theta) maps.
//! - [`qfa`]: the vector representation of `sl(n)`, matrix coefficients, and
//!   the braiding on `V (x) V` with its verification toolkit.
//! - [`twist`]: the 2-cocycle built from a disjoint triple, its convolution
//!   inverse, the twisted multiplication and the twisted R-matrix.
//!
//! Everything is exact; there is no floating point anywhere.

pub mod bdstruct;
pub mod borel;
pub mod linalg;
pub mod qfa;
pub mod rootdata;
pub mod scalar;
pub mod twist;

pub use bdstruct::{
    enumerate_disjoint, solve_compatible, validate_triple, BDTriple, CompatibleForm, PKind,
    ProjSign, SignConvention, TripleSide,
};
pub use rootdata::{Lattice, RootDatum, Weight};
pub use scalar::{qbinom, qint, specialize_classical, Scalar, ScalarError, Q};

/// Schema version stamped into every JSON artifact this workspace emits.
pub const SCHEMA_VERSION: u32 = 1;

//! Weights of curvature and torsion terms and the scalar invariants of weight at
//! most four at the center of a normalized structure.
//!
//! There the horizontal curvature is an algebraic curvature tensor with both
//! pairs in `sp(n)` (Ricci-flat, `R = W`), so every complete contraction of
//! `R ⊗ R` with metrics and almost complex structures is a constant multiple of
//! `‖W‖²`. [`verify_reductions`] measures these constants and
//! [`verify_second_derivative_system`] checks that the contractions `A, B, C, D`
//! of `R_{αβγδ,ρσ}` are killed by the Bianchi identities.

mod abcd;
mod pattern;
mod reduce;
mod weight;

pub use abcd::{
    bianchi_relations, second_derivative_functional, verify_second_derivative_system, wiring_label, BianchiIdentity, Relation,
    SecondDerivativeReport, Wiring, ABCD,
};
pub use pattern::{
    enumerate_contractions, named_patterns, ContractionPattern, NamedPattern, SymmetryLevel, Vertical,
};
pub use reduce::{
    curvature_symmetrize, verify_reductions, CurvatureSampler, PatternReduction, ReductionCheck, ReductionReport,
};
pub use weight::{enumerate_table, product_weight, table_columns, TableEntry, TableStatus, TermDescriptor, TermKind};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum InvarError {
    #[error("malformed term: {0}")]
    Malformed(String),
    #[error("cannot parse: {0}")]
    Parse(String),
    #[error("bad contraction: {0}")]
    Contraction(String),
    #[error("linear algebra: {0}")]
    Rank(String),
}

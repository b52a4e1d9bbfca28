//! Conformal change of the pseudohermitian structure and the Q-normalization.

pub mod biquard;
mod change;
mod jets;
mod normalize;
mod state;

pub use change::{connection_change, rescale_point, Rescaled, UJets};
pub use jets::{jet_words, JetWord, QJetTable};
pub use normalize::{
    normalize, normalize_step, vanishing_report, ConformalFactor, FlatOracle, JetOracle, LinearizedOracle,
    Normalization, Vanishing,
};

use crate::poly::PolyError;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfError {
    #[error("conformal factor must vanish at the origin")]
    NonzeroAtOrigin,
    #[error("jets of order {0} are not available")]
    MissingJets(usize),
    #[error("not a jet multiset within the table: {0:?}")]
    BadJet(Vec<usize>),
    #[error("weight-{0} piece of the conformal factor is not in its graded space")]
    BadPiece(usize),
    #[error("series truncated too early: {0}")]
    Truncated(String),
    #[error("oracle changed the lower-order entry {key:?} when adding u_{m}")]
    Unstable { m: usize, key: Vec<usize> },
    #[error("entry {key:?} still nonzero after adding u_{m}")]
    Residual { m: usize, key: Vec<usize> },
    #[error("hypothesis violated: jet {0:?} is nonzero")]
    Hypothesis(Vec<usize>),
    #[error("coefficient matrix is singular")]
    Singular,
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("curvature: {0}")]
    Curv(String),
    #[error("json: {0}")]
    Json(String),
}

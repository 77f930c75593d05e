use thiserror::Error;

/// Everything the engine can refuse to do. Invariant violations are bugs or
/// unsupported degenerate inputs; they are reported, never papered over.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("{0}")]
    Domain(String),
    #[error("invalid space: {}", .0.join("; "))]
    InvalidSpace(Vec<String>),
    #[error("polytope is unbounded")]
    Unbounded,
    #[error("polytope is empty or lower-dimensional (dimension {dim}, expected {expected})")]
    EmptyOrLowerDim { dim: i64, expected: usize },
    #[error("Q is contained in the wall of color {0}")]
    ContainedInWall(String),
    #[error("gstable row {0} is not a facet")]
    GStableNotFacet(usize),
    #[error("gstable row {0} defines a facet contained in a wall")]
    GStableFacetInWall(usize),
    #[error("gstable rows {0} and {1} define the same facet")]
    DuplicateGStableFacets(usize, usize),
    #[error("cannot recover the coefficient of gstable row {0}: it does not define a facet")]
    CannotRecover(usize),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("divisor is not Q-Cartier")]
    NotQCartier,
    #[error("pair not certified: K+Delta is not Q-Cartier")]
    PairNotCertified,
    #[error("zero perturbation: K+Delta is trivial, there is nothing to run")]
    ZeroPerturbation,
    #[error("divisor is not strictly effective")]
    NotStrictlyEffective,
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse(_) => "parse",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::Domain(_) => "domain",
            Error::InvalidSpace(_) => "invalid_space",
            Error::Unbounded => "unbounded",
            Error::EmptyOrLowerDim { .. } => "empty_or_lower_dimensional",
            Error::ContainedInWall(_) => "contained_in_wall",
            Error::GStableNotFacet(_) => "gstable_not_facet",
            Error::GStableFacetInWall(_) => "gstable_facet_in_wall",
            Error::DuplicateGStableFacets(..) => "duplicate_gstable_facets",
            Error::CannotRecover(_) => "cannot_recover",
            Error::PreconditionFailed(_) => "precondition_failed",
            Error::NotQCartier => "not_q_cartier",
            Error::PairNotCertified => "pair_not_certified",
            Error::ZeroPerturbation => "zero_perturbation",
            Error::NotStrictlyEffective => "not_strictly_effective",
            Error::Invariant(_) => "invariant_violation",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

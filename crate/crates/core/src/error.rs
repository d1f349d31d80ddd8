use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "refusing to evaluate {terms} kernel terms (budget {budget}); estimated runtime {estimated_secs:.0} s, \
         pass allow_long to override"
    )]
    BudgetExceeded {
        terms: u64,
        budget: u64,
        estimated_secs: f64,
    },

    #[error(
        "brute-force sum over {n_atoms} atoms exceeds the cap of {cap}: cost grows as N² ({pairs} pairs); \
         set the override to proceed"
    )]
    BruteCapExceeded { n_atoms: u64, cap: u64, pairs: u128 },

    #[error("unsupported lattice: {0}")]
    UnsupportedLattice(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

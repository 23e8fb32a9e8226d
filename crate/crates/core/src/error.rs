use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input matrix has determinant zero.
    #[error("singular basis: zero determinant")]
    SingularBasis,

    /// The lattice has no nonzero vector on the requested axis (detected
    /// exactly for integral input; for real input, none within the search
    /// bound).
    #[error("no nonzero lattice vector on axis {axis} within the search bound")]
    NoAxisVector { axis: usize },

    /// Family parameters out of range.
    #[error("invalid family: q = {q}, n = {n} (need q >= 2 and n >= 2)")]
    InvalidFamily { q: u64, n: usize },

    /// A certified enumeration would have to test more candidates than the
    /// configured budget allows.
    #[error("enumeration too large: {candidates} candidates exceed budget {budget}")]
    IllConditioned { candidates: u128, budget: u128 },

    /// The candidate search in a Bowen-ball membership test ran out of
    /// budget.
    #[error("Bowen ball candidate search exceeded its budget")]
    SearchBudgetExceeded,

    /// A segment base point admits no positive flow interval.
    #[error("empty admissible interval for segment base point")]
    EmptyInterval,

    /// Two partition centers overlap at the partition radius, or a Bowen
    /// membership test is multivalued at that radius.
    #[error("partition centers {first} and {second} are not injectively separated at radius eta")]
    InjectivityRisk { first: usize, second: usize },

    /// The Gauss map is undefined at zero.
    #[error("Gauss map undefined at zero")]
    ZeroInput,

    /// A rational argument lies outside the required range.
    #[error("rational outside the required range")]
    OutOfRange,
}

pub type Result<T> = std::result::Result<T, Error>;

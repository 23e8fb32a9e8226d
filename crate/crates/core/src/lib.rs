//! Lattice-dynamics toolkit for divergent diagonal orbits in the space of
//! unimodular lattices.
//!
//! The crate is organised around the objects it computes with:
//!
//! * [`exact`] — exact integer lattice algebra: Hermite and Smith normal
//!   forms, axis covolumes, and the orbit invariants *type* and
//!   *discriminant*.
//! * [`families`] — the families `Λ_q` of unipotent points `u_{p̄/q}`, their
//!   symmetrized representatives and exhaustive censuses.
//! * [`flow`] — the diagonal group as the sum-zero time space, truncation
//!   regions, line segments in the distinguished direction, and the
//!   symmetric-group action.
//! * [`height`] — sup-norm shortest vectors, heights, Bowen balls and their
//!   algebra, separation counts and `(M, η)`-partitions.
//! * [`measures`] — empirical orbit-average measures, mass-escape bounds,
//!   Siegel statistics, partition entropy and the entropy-inequality harness.
//! * [`cfe`] — the dimension-two continued-fraction correspondence: Gauss
//!   map orbits of rationals, Gauss–Kuzmin comparison and Zaremba censuses.

pub mod arith;
pub mod basis;
pub mod cfe;
pub mod error;
pub mod exact;
pub mod families;
pub mod flow;
pub mod height;
pub mod measures;

pub use basis::RealLatticeBasis;
pub use error::{Error, Result};

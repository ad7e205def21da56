//! Analysis of redundantly recorded observables in many-body pure states.
//!
//! Given a pure state on a qudit lattice, this crate detects observables that
//! are recorded redundantly on disjoint spatial regions, checks the
//! pair-covering relation between their record layouts, constructs joint
//! branch decompositions into simultaneous eigenstates of all records, and
//! estimates N-point functions by sampling branches.
//!
//! The main entry points are:
//!
//! - [`records::finest_common_records`] / [`records::scan_records`] — find the
//!   finest observable recorded on a pair of regions, and sweep a candidate
//!   region family for all redundantly recorded observables.
//! - [`regions::pair_covers`] / [`regions::sphere_criterion`] — the spatial
//!   relations that decide whether a set of recorded observables is guaranteed
//!   compatible.
//! - [`branches::joint_decomposition`] — construct and verify the joint branch
//!   decomposition of a set of recorded observables.
//! - [`estimator::npoint_sampled`] — Monte-Carlo estimation of expectation
//!   values by sampling branches.
//! - [`corpus`] — deterministic generators for reference states (Bell, GHZ,
//!   Shor-code, dilated, tripartite) and planted-record random states with
//!   known oracle decompositions.
//!
//! States are dense complex vectors in mixed-radix little-endian site order
//! (site 0 is the fastest-varying digit). Everything is deterministic given
//! the seeds that appear in the APIs; with the default `parallel` feature the
//! data-parallel kernels run on rayon and produce bit-identical results to
//! their `*_seq` counterparts.

pub mod algebra;
pub mod branches;
pub mod corpus;
pub mod estimator;
mod exec;
pub mod io;
mod lapack;
mod linalg;
pub mod records;
pub mod regions;
pub mod state;

pub use branches::{joint_decomposition, BranchDecomposition, CompatibilityVerdict};
pub use records::{finest_common_records, scan_records, verify_record, RecordedObservable};
pub use regions::{pair_covers, sphere_criterion, Region};
pub use state::{Budget, Lattice, PureState};

use thiserror::Error;

/// Error type shared by the whole crate.
///
/// The variants map onto the failure classes surfaced by the CLI: domain and
/// configuration errors are caller mistakes, resource errors mean a dense
/// object would exceed the memory budget, and numerical errors are internal
/// failures (non-convergence, LAPACK breakdown).
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resource budget exceeded: {0}")]
    Resource(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

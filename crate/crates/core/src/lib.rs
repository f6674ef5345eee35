//! Certification of dimension-restricted quantum behaviors on exclusivity
//! graphs, and lower/upper bounds for the dimension-restricted weighted
//! Lovász number.
//!
//! A behavior is a probability vector `p` attached to the vertices of an
//! exclusivity graph `G`. The library decides whether `p` is realizable by
//! unit vectors in a `d`-dimensional Hilbert space (`p ∈ Q_d(G)`), producing
//! replayable vector certificates for membership and infeasibility margins
//! for refutation, and computes bounds on
//!
//! * `theta_d(G, w)` — the maximum of `w·p` over `Q_d(G)`, and
//! * `theta~_d(G, w)` — its relaxation that tolerates zero vectors,
//!
//! together with the unrestricted Lovász number `theta(G, w)` as a baseline.
//!
//! The numerical substrate is self-contained: a dense Hermitian eigensolver
//! ([`linalg`]), a first-order operator-splitting solver for semidefinite
//! programs ([`sdp`]), and the symmetrized two-copy PPT machinery ([`ppt`]).

pub mod bounds;
pub mod fixtures;
pub mod graph;
pub mod linalg;
pub mod membership;
pub mod ppt;
pub mod report;
pub mod rng;
pub mod sdp;


pub use graph::{Graph, VertexSubset};
pub use linalg::{HermitianMatrix, VectorSystem, C64};
pub use membership::{Behavior, MembershipCfg, PinSet, Verdict, VerdictStatus};
pub use sdp::{SdpProblem, SdpSolution, SolveCfg, SolveStatus};

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum CtxError {
    #[error("graph validation failed: {0}")]
    Graph(String),
    #[error("graph has {0} vertices, exceeding the hard cap of {1}")]
    VertexCap(usize, usize),
    #[error("matrix is not Hermitian within tolerance: max asymmetry {0:.3e}")]
    NotHermitian(f64),
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("rank overflow: eigenvalue mass {mass:.3e} beyond rank {rank} exceeds tolerance")]
    RankOverflow { rank: usize, mass: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("behavior validation failed: {0}")]
    Behavior(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("clique {0:?} does not have the required size {1}")]
    CliqueSize(Vec<usize>, usize),
    #[error("theta cut {theta} exceeds the verified lower bound {lower} rounded down")]
    ThetaCut { theta: f64, lower: f64 },
    #[error("no verified bound: best residual {best_residual:.3e} across {restarts} restarts")]
    NoBound { best_residual: f64, restarts: usize },
    #[error("solver failed: {0}")]
    Solver(String),
    #[error("certificate replay failed: {0}")]
    Certificate(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, CtxError>;

/// Numerical tolerances shared across modules. Values are chosen so that
/// verdict thresholds sit two orders of magnitude above solver noise.
pub mod tol {
    /// Hermitian symmetry tolerance for matrix construction.
    pub const HERM: f64 = 1e-12;
    /// Pinned-entry tolerance for Gram candidates.
    pub const PIN: f64 = 1e-9;
    /// Unit-norm tolerance for certificate vectors.
    pub const NORM: f64 = 1e-9;
    /// Orthogonality tolerance for certificate vectors on edges.
    pub const ORTH: f64 = 1e-7;
    /// Relative eigenvalue cutoff for numerical rank decisions.
    pub const RANK_REL: f64 = 1e-7;
    /// Certificate replay tolerance (probabilities, bound values).
    pub const CERT: f64 = 1e-6;
    /// Infeasibility margin: `eta_max < -MARGIN` certifies exclusion.
    pub const MARGIN: f64 = 1e-6;
    /// Default target for solver residuals and duality gap.
    pub const SOLVER: f64 = 1e-8;
    /// Convergence threshold for alternating-projection residuals.
    pub const ZERO: f64 = 1e-7;
}

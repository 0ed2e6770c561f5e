//! Canonical duality for nonconvex quadratic-composite minimization.
//!
//! A problem is `Π(x) = V(Λ(x)) + ½ xᵀAx − xᵀf` with a quadratic geometric
//! measure `Λ_k(x) = ½ xᵀB^k x + b_kᵀx` and a convex canonical function `V`.
//! The crate builds the canonical dual `Π^d(ς)`, locates its critical points,
//! classifies each primal-dual pair by triality, and corroborates the
//! classification with independent numerical checks.

pub mod document;
pub mod dual;
pub mod error;
pub mod family;
pub mod instances;
pub mod linalg;
pub mod oracle;
pub mod problem;
pub mod report;
pub mod solver;
pub mod triality;

pub use dual::{DualEval, RegionLabel, RegionTag};
pub use error::{Error, Result};
pub use family::{CanonicalFamily, CanonicalFunction, LogBarrier, QuadraticWell};
pub use problem::CanonicalProblem;
pub use solver::{find_critical_points, CriticalPair, SearchConfig};
pub use triality::{classify, TrialityVerdict, VerdictTag};

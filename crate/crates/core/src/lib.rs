//! Certifying global optimality of candidate points in polynomial
//! optimization through the KKT conditions of a determinant-based moment
//! relaxation.
//!
//! The pipeline lifts a feasible point `x̂` to moments `ŷ_α = x̂^α`, builds the
//! moment and localizing matrices, and asks whether nonnegative multipliers
//! exist that make the relaxation's stationarity equations hold at `ŷ`. That
//! question is a linear feasibility problem, solved by minimizing the ℓ1 and
//! ℓ2 norms of its residual.

pub mod certifier;
pub mod cli;
pub mod kkt;
pub mod minors;
pub mod moment;
pub mod multiindex;
pub mod oracle;
pub mod polynomial;
pub mod problem_io;
pub mod solvers;

pub use certifier::{certify, CertifyConfig, CertifyError, NormChoice};
pub use problem_io::{parse_point, parse_problem, CertificateReport, PopProblem, Verdict};

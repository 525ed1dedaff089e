//! Learning a homogeneous halfspace `sign(⟨h*, x⟩)` on `S^{d−1}` from sign
//! queries whose answers are flipped independently with probability `ρ`.
//!
//! [`dc2`] learns a direction inside a fixed plane by Bayesian bisection on a
//! piecewise-constant posterior over the circle. [`dc`] stitches `d − 1` such
//! calls together along an aggregation tree. [`repetitive_dc`] is the
//! majority-vote baseline.

pub mod baselines;
pub mod circle;
pub mod dc;
pub mod dc2;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod oracle;
pub mod schedule;
pub mod tree;

pub use baselines::{repetitive_dc, RepetitionPlan, RepetitiveConfig, RepetitiveMode};
pub use circle::{Angle, CirclePosterior, Sector};
pub use dc::{dc, dc_observed, random_problem, BasisKind, DcConfig, DcMode, Problem};
pub use dc2::{dc2, embed, Dc2Result};
pub use error::{HdcError, Result};
pub use linalg::{estimation_error, UnitVector};
pub use oracle::{MajorityOracle, NoisyOracle, Sign, SignOracle, TruthOracle};
pub use tree::{AggregationTree, TreeKind};

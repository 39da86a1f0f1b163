//! Feasibility certificates for same-route integer equal-flow transportation
//! and assignment problems.
//!
//! The pipeline contracts equal-flow classes into single variables, projects
//! the resulting rational system by Fourier–Motzkin elimination with dominance
//! pruning, and settles integer feasibility with an exact backtracking search.
//! A brute-force oracle cross-checks every stage on small instances, and
//! [`carrental`] builds the fleet-allocation formulations on top.

pub mod carrental;
pub mod cli;
pub mod fbce;
pub mod json;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod reform;
pub mod scalar;
pub mod search;

pub use model::{
    ArcIndex, ArcPattern, Certificate, EqualFlowClass, ForbiddenSet, Infeasibility,
    ProblemInstance, ProblemKind, Relation, VarBounds, Verdict, Witness,
};
pub use scalar::Scalar;

/// Arbitrary-precision rational, the default scalar.
pub type Rational = num_rational::BigRational;

/// Machine-word rational for small systems where overflow is ruled out.
pub type SmallRational = num_rational::Ratio<i64>;

pub type System = fbce::ConstraintSystem<Rational>;
pub type Constraint = fbce::LinearConstraint<Rational>;
pub type RationalCertificate = model::Certificate<Rational>;

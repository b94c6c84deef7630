//! Crate-wide error type. Variants carry the witness data named by the
//! operation that produced them.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix does not have full column rank")]
    RankDeficient,
    #[error("condition (A) violated: {{1..m}} is not an anticone")]
    ConditionAViolated,
    #[error("condition (B) violated: anticone {witness:?} does not span")]
    ConditionBViolated { witness: Vec<usize> },
    #[error("condition (C) violated: nonzero c >= 0 with sum c_i D_i = 0, witness {witness:?}")]
    ConditionCViolated { witness: Vec<String> },
    #[error("fan is not complete: facet {witness:?} not shared by exactly two maximal cones")]
    FanIncomplete { witness: Vec<usize> },
    #[error("fan is not simplicial: cone rays {witness:?}")]
    FanNotSimplicial { witness: Vec<usize> },
    #[error("d is not in K: support {support:?} is not an anticone")]
    NotInK { support: Vec<usize> },
    #[error("no unimodular nef basis found within height bound {height}")]
    BasisNotFound { height: i64 },
    #[error("user basis invalid: {reason}")]
    UserBasisInvalid { reason: String },
    #[error("class not homogeneous of the sector top degree")]
    DegreeMismatch,
    #[error("chi(V) = {value} is not within {tol} of an integer")]
    NonIntegerChi { value: f64, tol: f64 },
    #[error("requested {digits} digits exceeds the certified accuracy of the f64 evaluator")]
    PrecisionUnattainable { digits: u32 },
    #[error("operation requires weak-Fano mode (rho-hat in the closed extended Kaehler cone)")]
    NotWeakFano,
    #[error("normalized I-function has unexpected positive z-powers at d = {d:?}")]
    UnexpectedPositivePowers { d: Vec<String> },
    #[error("GKZ annihilation failed for d = {d:?}: nonzero coefficient at q-degree {degree}, z^{zpow}")]
    AnnihilationFailure { d: Vec<String>, degree: String, zpow: i64 },
    #[error("branch unspecified for q off the positive real locus")]
    BranchUnspecified,
    #[error("critical point count {found} does not match expected {expected}")]
    CountMismatch { found: usize, expected: usize },
    #[error("root solver did not converge: {context}")]
    SolverNoConvergence { context: String },
    #[error("identity violated: {context}")]
    IdentityViolated { context: String },
    #[error("degeneracy witness on face {face:?}: root at {root:?}")]
    DegeneracyWitness { face: Vec<usize>, root: Vec<String> },
    #[error("quadrature tolerance unmet: achieved {achieved:e}, requested {requested:e}")]
    ToleranceUnmet { achieved: f64, requested: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Lifting icode to SPL: per-fragment recognition, recursive-equation
//! assembly, base-case execution and closure by induction.

mod butterfly;
mod fragment;
mod function;
mod induction;
mod multilinear;
mod pipeline;
mod recognize;

use std::fmt;

use thiserror::Error;

use crate::icode::OracleError;
use crate::sigma::{RangeError, SigmaError};
use crate::spl::{SizeExpr, SplError, SplExpr};

pub use butterfly::{butterfly_shape, ButterflyShape, NoMatch};
pub use fragment::{candidate_matrix, lift_fragment, recognize_twiddle_butterfly, Rule, RULES};
pub use function::{base_size, kernel_matrix, kernel_spaces, lift_function, lift_multilinear};
pub use induction::{base_case_matrix, close_by_induction, equivalence_match, Family, BASE_FAMILIES};
pub use multilinear::{pointwise_shape, PointwiseShape};
pub use pipeline::{run_lift, run_lift_with, verify_trace};
pub use recognize::{
    detect_interleaved_complex, recognize_complex_permutation, recognize_identity, recognize_stride_permutation,
    size_of,
};

/// Assurance label of every induction-closed result.
pub const ASSURANCE: &str = "computer-algebra";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LiftError {
    #[error(transparent)]
    Range(#[from] RangeError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Spl(#[from] SplError),
    #[error(transparent)]
    Sigma(#[from] SigmaError),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("{fragment} is not liftable: {}", fmt_attempts(.attempts))]
    Unliftable {
        fragment: String,
        attempts: Vec<(String, String)>,
        /// Deviations of the first candidate that was proposed but failed its check.
        rejected: Vec<Check>,
    },
    #[error("recursive calls: {0}")]
    RecursionShape(String),
    #[error("composition: {0}")]
    Composition(String),
    #[error("induction needs at least 2 check sizes above the base size {base}, got {got:?}")]
    TooFewSizes { base: i64, got: Vec<i64> },
    #[error("induction check failed at n = {size}: deviation {deviation:.3e}")]
    InductionCheck { size: i64, deviation: f64 },
    #[error("base case at n = {size} matches no known transform")]
    BaseCase { size: i64 },
    #[error("kernel is not linear at n = {size}: deviation {deviation:.3e}")]
    Nonlinear { size: i64, deviation: f64 },
    #[error("dimension mismatch: oracle {oracle:?}, candidate {candidate:?}")]
    Dimensions { oracle: (usize, usize), candidate: (usize, usize) },
    #[error("kernel has no liftable statements")]
    Empty,
    #[error("stored step {step} no longer verifies at n = {size}: deviation {deviation:.3e}")]
    Replay { step: usize, size: i64, deviation: f64 },
}

fn fmt_attempts(attempts: &[(String, String)]) -> String {
    attempts.iter().map(|(r, why)| format!("{r}: {why}")).collect::<Vec<_>>().join("; ")
}

/// What a step's soundness check compares, which fixes its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Permutation,
    Arithmetic,
    Multilinear,
    Composition,
    Equation,
    BaseCase,
    Induction,
    Specification,
}

/// One soundness-check sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Check {
    pub size: i64,
    pub deviation: f64,
}

/// The statement a fragment step was lifted from, for replay.
#[derive(Debug, Clone, PartialEq)]
pub struct FragmentRef {
    pub index: usize,
    pub outputs: Vec<String>,
    pub inputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftStep {
    pub rule: String,
    pub kind: StepKind,
    pub input: String,
    pub output: SplExpr,
    pub checks: Vec<Check>,
    pub tolerance: f64,
    pub fragment: Option<FragmentRef>,
}

impl LiftStep {
    pub fn max_deviation(&self) -> f64 {
        self.checks.iter().map(|c| c.deviation).fold(0.0, f64::max)
    }
}

/// `M(n) = rhs` where `rhs` contains `Tensor(I(r), M(n/r))`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursiveEquation {
    pub name: String,
    pub size: SizeExpr,
    pub rhs: SplExpr,
    pub arity: u64,
}

impl fmt::Display for RecursiveEquation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}) = {}", self.name, self.size, self.rhs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedSpl {
    pub expr: SplExpr,
    pub assurance: &'static str,
    pub checked_sizes: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LiftOutcome {
    Recursive(RecursiveEquation),
    Closed(ClosedSpl),
}

/// Result of [`lift_function`]: the per-fragment steps and the assembled form.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionLift {
    pub steps: Vec<LiftStep>,
    pub outcome: LiftOutcome,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftFailure {
    pub stage: String,
    pub reason: String,
    /// Per-size deviations, when the failing stage produced them.
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftTrace {
    pub entry: String,
    pub steps: Vec<LiftStep>,
    pub equation: Option<RecursiveEquation>,
    pub closed: Option<ClosedSpl>,
    pub specification: Option<crate::kb::SpecificationResult>,
    pub failures: Vec<LiftFailure>,
    /// Candidate trials spent across all fragments.
    pub trials: usize,
    /// Upper bound on trials: fragments × recognizers.
    pub trial_bound: usize,
}

impl LiftTrace {
    pub fn succeeded(&self) -> bool {
        self.failures.is_empty() && self.closed.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftConfig {
    /// Sizes at which fragment candidates are checked.
    pub probes: Vec<i64>,
    /// Sizes at which the inductive identity is checked.
    pub check_sizes: Vec<i64>,
    /// Tolerance for arithmetic steps; permutations are always exact.
    pub tolerance: f64,
    pub linearity_sizes: Vec<i64>,
    pub linearity_trials: usize,
    pub seed: u64,
}

impl Default for LiftConfig {
    fn default() -> Self {
        LiftConfig {
            probes: vec![4, 8, 16],
            check_sizes: vec![4, 8, 16],
            tolerance: 1e-10,
            linearity_sizes: vec![2, 4, 8],
            linearity_trials: 3,
            seed: 0x5eed,
        }
    }
}

impl LiftConfig {
    pub fn tolerance_for(&self, kind: StepKind) -> f64 {
        match kind {
            StepKind::Permutation | StepKind::Equation | StepKind::Specification => 0.0,
            StepKind::Multilinear | StepKind::BaseCase => 1e-12,
            StepKind::Arithmetic | StepKind::Composition | StepKind::Induction => self.tolerance,
        }
    }
}

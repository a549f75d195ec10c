//! Lyapunov trajectory tracking for n-level density matrices: su(n) Bloch
//! coordinates, Hamiltonian classification, the feedback flow, critical-point
//! and linear stability analysis, and a batch experiment harness.

pub mod control;
pub mod critical_points;
pub mod error;
pub mod hamiltonian;
pub mod harness;
pub mod lie_algebra;
pub mod linalg;
pub mod quantum_state;
pub mod stability;

pub use control::{
    integrate, lyapunov_value, lyapunov_value_isospectral, ControlledSystem, ConvergenceLabel, ConvergenceRule,
    IntegrateOptions, TrajectoryTrace,
};
pub use error::{Error, Result};
pub use hamiltonian::{
    ad_bracket_span, classify, in_invariant_set, regularity_test, AdBracketSpan, ClassifyOptions, HamiltonianPair,
};
pub use harness::{analyze_system, run_scenario, BatchSummary, Scenario, ScenarioConfig, ScenarioId};
pub use lie_algebra::SuBasis;
pub use linalg::{CMatrix, RMatrix, RVector, C64};
pub use quantum_state::{DensityMatrix, Spectrum};
pub use stability::{linearize, Classification, LinearizationReport, StabilityReport};
pub use critical_points::{enumerate_critical_points, CriticalKind, CriticalPoint};

//! One JSON document per system: classification, Ad-span, regularity,
//! critical points and stability.

use serde::Serialize;

use crate::control::ControlledSystem;
use crate::critical_points::{critical_pairs_extended, enumerate_critical_points, CriticalPointReport, CriticalTrajectoryNote};
use crate::error::Result;
use crate::hamiltonian::{
    ad_bracket_span, classify, regularity_test, vandermonde_independence_check, ClassifyOptions, RegularityReport,
    Transition, DEFAULT_RANK_TOL,
};
use crate::linalg::CMatrix;
use crate::quantum_state::DensityMatrix;
use crate::stability::{stability_report, StabilityReport};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzeOptions {
    pub classify: ClassifyOptions,
    pub kappa: f64,
    pub rank_tol: f64,
    /// Propagate the critical trajectories over `(horizon, dt)`.
    pub critical_trajectories: Option<(f64, f64)>,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions { classify: ClassifyOptions::default(), kappa: 1.0, rank_tol: DEFAULT_RANK_TOL, critical_trajectories: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationSection {
    pub n: usize,
    pub energies: Vec<f64>,
    pub removed_trace: f64,
    /// Pairs are one-based.
    pub transitions: Vec<Transition>,
    pub strongly_regular: bool,
    pub fully_connected: bool,
    pub ideal: bool,
    pub vandermonde_independent: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AdSpanSection {
    pub rank: usize,
    pub root_dim: usize,
    pub spans_t: bool,
    pub rank_history: Vec<usize>,
    /// One-based pairs.
    pub supported_root_spaces: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalTrajectoryEntry {
    pub tau: Vec<usize>,
    #[serde(flatten)]
    pub note: CriticalTrajectoryNote,
}

#[derive(Debug, Clone, Serialize)]
pub struct SystemReport {
    pub classification: ClassificationSection,
    pub ad_span: AdSpanSection,
    pub regularity: RegularityReport,
    pub target_stationary: bool,
    pub critical_points: Vec<CriticalPointReport>,
    pub stability: StabilityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub critical_trajectories: Option<Vec<CriticalTrajectoryEntry>>,
}

/// `rho_d` is given in the caller's frame.
pub fn analyze_system(h0: &CMatrix, h1: &CMatrix, rho_d: &DensityMatrix, opts: &AnalyzeOptions) -> Result<SystemReport> {
    let pair = classify(h0, h1, opts.classify)?;
    let sys = ControlledSystem::new(pair, opts.kappa)?;
    let target = sys.pair.to_internal(rho_d)?;
    let span = ad_bracket_span(&sys.pair, &sys.basis, None, opts.rank_tol)?;
    let one_based = |(k, l): (usize, usize)| (k + 1, l + 1);

    let classification = ClassificationSection {
        n: sys.n(),
        energies: sys.pair.energies().to_vec(),
        removed_trace: sys.pair.removed_trace(),
        transitions: sys.pair.transitions().iter().map(|t| Transition { pair: one_based(t.pair), ..*t }).collect(),
        strongly_regular: sys.pair.strongly_regular,
        fully_connected: sys.pair.fully_connected,
        ideal: sys.pair.ideal,
        vandermonde_independent: vandermonde_independence_check(&sys.pair),
    };
    let ad_span = AdSpanSection {
        rank: span.rank,
        root_dim: sys.basis.root_dim(),
        spans_t: span.spans_t,
        rank_history: span.rank_history.clone(),
        supported_root_spaces: span.supported_root_spaces.iter().map(|&p| one_based(p)).collect(),
    };
    let regularity = regularity_test(&target, &sys.basis, opts.rank_tol)?;
    let target_stationary = target.is_stationary(sys.pair.h0())?;
    let critical_points = enumerate_critical_points(&target)?.iter().map(|c| c.report()).collect();
    let stability = stability_report(&target, &sys)?;
    let critical_trajectories = match opts.critical_trajectories {
        Some((horizon, dt)) => Some(
            critical_pairs_extended(&target, &sys, horizon, dt)?
                .into_iter()
                .map(|(cp, note)| CriticalTrajectoryEntry { tau: cp.tau.iter().map(|t| t + 1).collect(), note })
                .collect(),
        ),
        None => None,
    };

    Ok(SystemReport {
        classification,
        ad_span,
        regularity,
        target_stationary,
        critical_points,
        stability,
        critical_trajectories,
    })
}

//! The four built-in regimes and their defining classification flags.

use crate::error::Result;
use crate::hamiltonian::HamiltonianPair;
use crate::linalg::{c64, CMatrix, MatrixJson};
use crate::quantum_state::{DensityMatrix, DensityMatrixJson};

use super::config::{ScenarioConfig, ScenarioId, TargetMode};

/// Drift energies with transition frequencies 2.4, 6.6 and 4.2 (all distinct).
pub const DRIFT_ENERGIES: [f64; 3] = [3.0, 0.6, -3.6];
pub const CONTROL_STRENGTH: f64 = 4.0;
/// Master seed shared by all presets.
pub const DEFAULT_SEED: u64 = 3;

pub fn drift_hamiltonian() -> CMatrix {
    CMatrix::from_fn(3, 3, |i, j| if i == j { c64(DRIFT_ENERGIES[i], 0.0) } else { c64(0.0, 0.0) })
}

/// All off-diagonal couplings equal to [`CONTROL_STRENGTH`].
pub fn full_control_hamiltonian() -> CMatrix {
    CMatrix::from_fn(3, 3, |i, j| if i == j { c64(0.0, 0.0) } else { c64(CONTROL_STRENGTH, 0.0) })
}

/// As [`full_control_hamiltonian`] without the direct 1-3 coupling.
pub fn missing_coupling_control_hamiltonian() -> CMatrix {
    let mut h1 = full_control_hamiltonian();
    h1[(0, 2)] = c64(0.0, 0.0);
    h1[(2, 0)] = c64(0.0, 0.0);
    h1
}

/// An isospectral pair whose commutator `(11i/144) diag(0, 1, -1)` is diagonal
/// but nonzero; the second state is an irregular target.
pub fn diagonal_commutator_pair() -> (DensityMatrix, DensityMatrix) {
    let r = |x: f64| c64(x, 0.0);
    let i = |x: f64| c64(0.0, x);
    let rho1 = CMatrix::from_row_slice(
        3,
        3,
        &[
            r(1. / 12.), r(-1. / 12.), r(-1. / 12.),
            r(-1. / 12.), r(11. / 24.), r(1. / 8.),
            r(-1. / 12.), r(1. / 8.), r(11. / 24.),
        ],
    );
    let rho2 = CMatrix::from_row_slice(
        3,
        3,
        &[
            r(1. / 3.), i(-1. / 12.), i(1. / 12.),
            i(1. / 12.), r(1. / 3.), i(-1. / 4.),
            i(-1. / 12.), i(1. / 4.), r(1. / 3.),
        ],
    );
    (
        DensityMatrix::new(rho1).expect("valid density matrix"),
        DensityMatrix::new(rho2).expect("valid density matrix"),
    )
}

fn base(id: ScenarioId, h1: CMatrix, target_mode: TargetMode) -> ScenarioConfig {
    ScenarioConfig {
        scenario: id,
        n: Some(3),
        h0: Some(MatrixJson::from_matrix(&drift_hamiltonian())),
        h1: Some(MatrixJson::from_matrix(&h1)),
        hamiltonian_file: None,
        spectrum: Some(vec![3. / 6., 2. / 6., 1. / 6.]),
        target_mode,
        target: None,
        n_trajectories: 50,
        seed: DEFAULT_SEED,
        dt: 1e-3,
        horizon: 200.0,
        stride: 0,
        csv_stride: 100,
        kappa: 1.0,
        output_dir: None,
        classify: Default::default(),
        convergence: Default::default(),
        max_target_attempts: 1000,
    }
}

pub fn preset(id: ScenarioId) -> Result<ScenarioConfig> {
    Ok(match id {
        ScenarioId::Fig1a | ScenarioId::Custom => base(id, full_control_hamiltonian(), TargetMode::StationaryDiagonal),
        ScenarioId::Fig1b => {
            let mut cfg = base(id, full_control_hamiltonian(), TargetMode::NonstationaryRegular);
            cfg.spectrum = Some(vec![0.5, 0.3, 0.2]);
            cfg.horizon = 2000.0;
            cfg.csv_stride = 1000;
            cfg
        }
        ScenarioId::Fig1c => base(id, missing_coupling_control_hamiltonian(), TargetMode::StationaryDiagonal),
        ScenarioId::Fig1d => {
            let mut cfg = base(id, full_control_hamiltonian(), TargetMode::NonstationaryIrregular);
            cfg.spectrum = None;
            cfg.target = Some(DensityMatrixJson::from(&diagonal_commutator_pair().1));
            cfg
        }
    })
}

/// Classification flags each preset must satisfy before anything runs.
pub fn expectation_failures(id: ScenarioId, pair: &HamiltonianPair) -> Vec<String> {
    let mut out = Vec::new();
    let mut expect = |what: &str, actual: bool, wanted: bool| {
        if actual != wanted {
            out.push(format!("{} preset expects {what} = {wanted}, got {actual}", id.name()));
        }
    };
    match id {
        ScenarioId::Fig1a | ScenarioId::Fig1b | ScenarioId::Fig1d => expect("ideal", pair.ideal, true),
        ScenarioId::Fig1c => {
            expect("strongly_regular", pair.strongly_regular, true);
            expect("fully_connected", pair.fully_connected, false);
        }
        ScenarioId::Custom => {}
    }
    out
}

//! JSON scenario configuration and its resolution into a ready-to-run system.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::control::{ControlledSystem, ConvergenceRule};
use crate::error::{Error, Result};
use crate::hamiltonian::{classify, regularity_test, ClassifyOptions, HamiltonianPair, RegularityReport, DEFAULT_RANK_TOL};
use crate::linalg::{CMatrix, MatrixJson};
use crate::quantum_state::{random_isospectral_with, DensityMatrix, DensityMatrixJson, Spectrum, GENERIC_GAP_TOL};

use super::presets;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioId {
    Fig1a,
    Fig1b,
    Fig1c,
    Fig1d,
    Custom,
}

impl ScenarioId {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioId::Fig1a => "fig1a",
            ScenarioId::Fig1b => "fig1b",
            ScenarioId::Fig1c => "fig1c",
            ScenarioId::Fig1d => "fig1d",
            ScenarioId::Custom => "custom",
        }
    }

    pub fn from_panel(panel: &str) -> Result<Self> {
        match panel {
            "a" => Ok(ScenarioId::Fig1a),
            "b" => Ok(ScenarioId::Fig1b),
            "c" => Ok(ScenarioId::Fig1c),
            "d" => Ok(ScenarioId::Fig1d),
            other => Err(Error::InvalidParameter(format!("unknown panel '{other}', expected a, b, c or d"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetMode {
    StationaryDiagonal,
    NonstationaryRegular,
    NonstationaryIrregular,
}

/// `{"H0": {...}, "H1": {...}}`, each a [`MatrixJson`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianPairJson {
    #[serde(rename = "H0")]
    pub h0: MatrixJson,
    #[serde(rename = "H1")]
    pub h1: MatrixJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioId,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default, rename = "H0")]
    pub h0: Option<MatrixJson>,
    #[serde(default, rename = "H1")]
    pub h1: Option<MatrixJson>,
    /// Path to a [`HamiltonianPairJson`]; relative paths resolve against the config file.
    #[serde(default)]
    pub hamiltonian_file: Option<PathBuf>,
    /// Eigenvalues shared by the target and all initial states.
    #[serde(default)]
    pub spectrum: Option<Vec<f64>>,
    pub target_mode: TargetMode,
    /// Explicit target `rho_d(0)` in the caller's frame.
    #[serde(default)]
    pub target: Option<DensityMatrixJson>,
    #[serde(default = "default_n_trajectories")]
    pub n_trajectories: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Bloch snapshot stride in steps; 0 disables the Bloch CSVs.
    #[serde(default)]
    pub stride: usize,
    /// Row stride of the per-trajectory and combined CSVs.
    #[serde(default = "default_csv_stride")]
    pub csv_stride: usize,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub classify: ClassifyOptions,
    #[serde(default)]
    pub convergence: ConvergenceRule,
    /// Attempts allowed when sampling a regular non-stationary target.
    #[serde(default = "default_max_target_attempts")]
    pub max_target_attempts: usize,
}

fn default_n_trajectories() -> usize {
    50
}
fn default_seed() -> u64 {
    1
}
fn default_dt() -> f64 {
    1e-3
}
fn default_horizon() -> f64 {
    200.0
}
fn default_csv_stride() -> usize {
    100
}
fn default_kappa() -> f64 {
    1.0
}
fn default_max_target_attempts() -> usize {
    1000
}

fn merge(base: &mut Value, overrides: Value) {
    match (base, overrides) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                b.insert(k, v);
            }
        }
        (b, o) => *b = o,
    }
}

impl ScenarioConfig {
    pub fn preset(id: ScenarioId) -> Result<Self> {
        presets::preset(id)
    }

    /// Parses a config; for preset scenarios the given keys override the preset.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let user: Value = serde_json::from_str(text)?;
        let id: ScenarioId = match user.get("scenario") {
            Some(v) => serde_json::from_value(v.clone())?,
            None => return Err(Error::Validation(vec!["missing field 'scenario'".into()])),
        };
        if id == ScenarioId::Custom {
            return Ok(serde_json::from_value(user)?);
        }
        let mut base = serde_json::to_value(Self::preset(id)?)?;
        merge(&mut base, user);
        Ok(serde_json::from_value(base)?)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_json_str(&std::fs::read_to_string(path)?)?;
        if let (Some(file), Some(dir)) = (cfg.hamiltonian_file.as_mut(), path.parent()) {
            if file.is_relative() {
                *file = dir.join(&*file);
            }
        }
        Ok(cfg)
    }

    fn hamiltonians(&self) -> Result<(CMatrix, CMatrix)> {
        match (&self.h0, &self.h1, &self.hamiltonian_file) {
            (Some(h0), Some(h1), None) => Ok((h0.to_matrix()?, h1.to_matrix()?)),
            (None, None, Some(path)) => {
                let pair: HamiltonianPairJson = serde_json::from_str(&std::fs::read_to_string(path)?)?;
                Ok((pair.h0.to_matrix()?, pair.h1.to_matrix()?))
            }
            _ => Err(Error::InvalidParameter("give either inline H0 and H1 or hamiltonian_file".into())),
        }
    }

    /// Validates, classifies and builds the target; every violated
    /// expectation is reported together.
    pub fn resolve(&self) -> Result<Scenario> {
        let mut problems = Vec::new();
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            problems.push(format!("dt must be positive (got {})", self.dt));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            problems.push(format!("horizon must be positive (got {})", self.horizon));
        }
        if self.n_trajectories == 0 {
            problems.push("n_trajectories must be at least 1".into());
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            problems.push(format!("kappa must be positive (got {})", self.kappa));
        }
        if self.csv_stride == 0 {
            problems.push("csv_stride must be at least 1".into());
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }

        let (h0, h1) = self.hamiltonians()?;
        let pair = classify(&h0, &h1, self.classify)?;
        let n = pair.n();
        if let Some(expected) = self.n {
            if expected != n {
                return Err(Error::Validation(vec![format!("n = {expected} but the Hamiltonians are {n}x{n}")]));
            }
        }
        let sys = ControlledSystem::new(pair, self.kappa)?;

        let explicit = match &self.target {
            Some(j) => Some(sys.pair.to_internal(&DensityMatrix::try_from(j)?)?),
            None => None,
        };
        let spectrum = match (&self.spectrum, &explicit) {
            (Some(w), _) => Spectrum::new(w.clone())?,
            (None, Some(t)) => t.spectrum()?,
            (None, None) => return Err(Error::Validation(vec!["either spectrum or target is required".into()])),
        };
        if spectrum.n() != n {
            return Err(Error::Validation(vec![format!("spectrum has {} entries, expected {n}", spectrum.n())]));
        }
        if let Some(t) = &explicit {
            let drift = t.eigenvalues().iter().zip(spectrum.weights()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if drift > 1e-8 {
                problems.push(format!("target spectrum differs from the configured spectrum by {drift:e}"));
            }
        }

        let mut target_rejections = 0;
        let target = match (explicit, self.target_mode) {
            (Some(t), _) => t,
            (None, TargetMode::StationaryDiagonal) => DensityMatrix::from_diagonal(spectrum.weights())?,
            (None, TargetMode::NonstationaryRegular) => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(0);
                let mut found = None;
                for _ in 0..self.max_target_attempts.max(1) {
                    let cand = random_isospectral_with(&spectrum, &mut rng)?;
                    let regular = regularity_test(&cand, &sys.basis, DEFAULT_RANK_TOL)?.regular;
                    if regular && !cand.is_stationary(sys.pair.h0())? {
                        found = Some(cand);
                        break;
                    }
                    target_rejections += 1;
                }
                found.ok_or_else(|| {
                    Error::Validation(vec![format!("no regular non-stationary target in {target_rejections} attempts")])
                })?
            }
            (None, TargetMode::NonstationaryIrregular) => {
                return Err(Error::Validation(vec!["target mode nonstationary-irregular needs an explicit target".into()]))
            }
        };

        let regularity = regularity_test(&target, &sys.basis, DEFAULT_RANK_TOL)?;
        let target_stationary = target.is_stationary(sys.pair.h0())?;
        if !target.is_generic(GENERIC_GAP_TOL) {
            problems.push(format!("target is not generic (min gap {:e})", target.min_gap()));
        }
        match self.target_mode {
            TargetMode::StationaryDiagonal if !target_stationary => problems.push("target is not stationary".into()),
            TargetMode::NonstationaryRegular if target_stationary || !regularity.regular => {
                problems.push("target is not a regular non-stationary state".into())
            }
            TargetMode::NonstationaryIrregular if target_stationary || regularity.regular => {
                problems.push(format!("target is not irregular (rank {})", regularity.rank))
            }
            _ => {}
        }
        problems.extend(presets::expectation_failures(self.scenario, &sys.pair));
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }

        Ok(Scenario { config: self.clone(), sys, spectrum, target, target_rejections, regularity, target_stationary })
    }
}

/// A validated configuration with its classified system and target.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub sys: ControlledSystem,
    pub spectrum: Spectrum,
    /// Target `rho_d(0)` in the internal frame.
    pub target: DensityMatrix,
    pub target_rejections: usize,
    pub regularity: RegularityReport,
    pub target_stationary: bool,
}

impl Scenario {
    pub fn pair(&self) -> &HamiltonianPair {
        &self.sys.pair
    }

    /// Initial state of trajectory `index`, drawn from stream `index + 1` of the master seed.
    pub fn initial_state(&self, index: usize) -> Result<DensityMatrix> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(index as u64 + 1);
        random_isospectral_with(&self.spectrum, &mut rng)
    }
}

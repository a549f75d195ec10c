//! Fixtures shared by the criterion benches.

use qlyap_core::{Result, Scenario, ScenarioConfig, ScenarioId};

/// Resolved built-in scenario with its default seed.
pub fn scenario(id: ScenarioId) -> Result<Scenario> {
    ScenarioConfig::preset(id)?.resolve()
}

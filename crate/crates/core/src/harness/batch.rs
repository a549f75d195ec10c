//! Seeded batch integration of a scenario and its CSV / JSON artifacts.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::control::{fmt_float, integrate, ConvergenceLabel, ConvergenceRule, IntegrateOptions, TraceDiagnostics, TrajectoryTrace};
use crate::error::Result;
use crate::quantum_state::{DensityMatrix, DensityMatrixJson};

use super::config::Scenario;

pub const DIAGNOSTIC_STRIDE: usize = 1000;

#[derive(Debug, Clone, Serialize)]
pub struct TrajectorySummary {
    pub index: usize,
    pub final_v: f64,
    pub label: ConvergenceLabel,
    /// Least-squares slope of `log10 V` over the final window.
    pub slope: f64,
    pub diagnostics: TraceDiagnostics,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LabelCounts {
    pub converged: usize,
    pub plateaued: usize,
    pub undecided: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BatchSummary {
    pub scenario: String,
    pub n: usize,
    pub n_trajectories: usize,
    pub seed: u64,
    pub dt: f64,
    pub horizon: f64,
    pub kappa: f64,
    pub rule: ConvergenceRule,
    pub ideal: bool,
    pub strongly_regular: bool,
    pub fully_connected: bool,
    pub target_stationary: bool,
    pub target_regular: bool,
    pub target_rank: usize,
    pub target_rejections: usize,
    /// Target `rho_d(0)` in the caller's frame.
    pub target: DensityMatrixJson,
    pub counts: LabelCounts,
    pub max_trace_drift: f64,
    pub max_spectrum_drift: f64,
    pub max_v_increase: f64,
    pub v_increase_violations: usize,
    pub trajectories: Vec<TrajectorySummary>,
    /// Directory holding the artifacts, if any were written.
    pub output_dir: Option<PathBuf>,
}

impl BatchSummary {
    pub fn final_values(&self) -> Vec<f64> {
        self.trajectories.iter().map(|t| t.final_v).collect()
    }
}

fn options(sc: &Scenario, stride: usize) -> IntegrateOptions {
    IntegrateOptions {
        horizon: sc.config.horizon,
        dt: sc.config.dt,
        stride,
        diagnostic_stride: DIAGNOSTIC_STRIDE,
        ..Default::default()
    }
}

/// Integrates trajectory `index` of the scenario (or an explicit initial
/// state given in the caller's frame) at full resolution.
pub fn simulate_trajectory(sc: &Scenario, index: usize, rho0: Option<&DensityMatrix>) -> Result<TrajectoryTrace> {
    let start = match rho0 {
        Some(r) => sc.pair().to_internal(r)?,
        None => sc.initial_state(index)?,
    };
    integrate(&start, &sc.target, &sc.sys, &options(sc, sc.config.stride))
}

fn sampled_indices(len: usize, every: usize) -> impl Iterator<Item = usize> {
    let last = len - 1;
    (0..len).filter(move |i| i % every == 0 || *i == last)
}

/// Runs all trajectories (concurrently, results ordered by index). With
/// `out_dir`, writes `out_dir/<scenario>/trajNNN.csv`, optional
/// `trajNNN_bloch.csv`, `combined.csv` and `summary.json`.
pub fn run_scenario(sc: &Scenario, out_dir: Option<&Path>) -> Result<BatchSummary> {
    let cfg = &sc.config;
    let dir = out_dir.map(|d| d.join(cfg.scenario.name()));
    if let Some(d) = &dir {
        fs::create_dir_all(d)?;
    }
    let rule = cfg.convergence;
    let every = cfg.csv_stride.max(1);

    let results: Vec<(TrajectorySummary, Vec<f64>, Vec<f64>)> = (0..cfg.n_trajectories)
        .into_par_iter()
        .map(|index| {
            let trace = integrate(&sc.initial_state(index)?, &sc.target, &sc.sys, &options(sc, cfg.stride))?;
            let (label, slope) = rule.classify(&trace);
            if let Some(d) = &dir {
                trace.write_csv(BufWriter::new(File::create(d.join(format!("traj{index:03}.csv")))?), every)?;
                if cfg.stride > 0 {
                    trace.write_bloch_csv(BufWriter::new(File::create(d.join(format!("traj{index:03}_bloch.csv")))?))?;
                }
            }
            let idx: Vec<usize> = sampled_indices(trace.times.len(), every).collect();
            let times = idx.iter().map(|&i| trace.times[i]).collect();
            let values = idx.iter().map(|&i| trace.v_values[i]).collect();
            let summary = TrajectorySummary {
                index,
                final_v: trace.final_v(),
                label,
                slope,
                diagnostics: trace.diagnostics.clone(),
                warnings: trace.warnings.clone(),
            };
            Ok((summary, times, values))
        })
        .collect::<Result<_>>()?;

    let mut counts = LabelCounts::default();
    for (s, _, _) in &results {
        match s.label {
            ConvergenceLabel::Converged => counts.converged += 1,
            ConvergenceLabel::Plateaued => counts.plateaued += 1,
            ConvergenceLabel::Undecided => counts.undecided += 1,
        }
    }
    let agg = |f: fn(&TraceDiagnostics) -> f64| results.iter().map(|(s, _, _)| f(&s.diagnostics)).fold(0.0, f64::max);

    if let Some(d) = &dir {
        let mut w = BufWriter::new(File::create(d.join("combined.csv"))?);
        let header: Vec<String> =
            std::iter::once("t".to_string()).chain((1..=results.len()).map(|i| format!("V_{i}"))).collect();
        writeln!(w, "{}", header.join(","))?;
        let times = &results[0].1;
        for (row, &t) in times.iter().enumerate() {
            let line: Vec<String> =
                std::iter::once(fmt_float(t)).chain(results.iter().map(|(_, _, v)| fmt_float(v[row]))).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        w.flush()?;
    }

    let pair = sc.pair();
    let summary = BatchSummary {
        scenario: cfg.scenario.name().to_string(),
        n: pair.n(),
        n_trajectories: cfg.n_trajectories,
        seed: cfg.seed,
        dt: cfg.dt,
        horizon: cfg.horizon,
        kappa: cfg.kappa,
        rule,
        ideal: pair.ideal,
        strongly_regular: pair.strongly_regular,
        fully_connected: pair.fully_connected,
        target_stationary: sc.target_stationary,
        target_regular: sc.regularity.regular,
        target_rank: sc.regularity.rank,
        target_rejections: sc.target_rejections,
        target: DensityMatrixJson::from(&pair.from_internal(&sc.target)?),
        counts,
        max_trace_drift: agg(|d| d.max_trace_drift),
        max_spectrum_drift: agg(|d| d.max_spectrum_drift),
        max_v_increase: agg(|d| d.max_v_increase),
        v_increase_violations: results.iter().map(|(s, _, _)| s.diagnostics.v_increase_violations).sum(),
        trajectories: results.into_iter().map(|(s, _, _)| s).collect(),
        output_dir: dir.clone(),
    };
    if let Some(d) = &dir {
        let mut w = BufWriter::new(File::create(d.join("summary.json"))?);
        serde_json::to_writer_pretty(&mut w, &summary)?;
        writeln!(w)?;
    }
    Ok(summary)
}

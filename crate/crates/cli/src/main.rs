use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use qlyap_core::harness::report::AnalyzeOptions;
use qlyap_core::harness::{selftest, simulate_trajectory, HamiltonianPairJson, ScenarioConfig, ScenarioId};
use qlyap_core::quantum_state::DensityMatrixJson;
use qlyap_core::{analyze_system, run_scenario, DensityMatrix, Error};

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Lyapunov trajectory tracking for n-level density matrices.
#[derive(Parser)]
#[command(name = "qlyap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    /// Scenario configuration (JSON); keys override the preset named in it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long = "n-traj")]
    n_traj: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Overrides {
    fn load(&self, fallback: ScenarioId) -> anyhow::Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(p) => ScenarioConfig::from_file(p).with_context(|| format!("reading config {}", p.display()))?,
            None => ScenarioConfig::preset(fallback)?,
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(dt) = self.dt {
            cfg.dt = dt;
        }
        if let Some(h) = self.horizon {
            cfg.horizon = h;
        }
        if let Some(n) = self.n_traj {
            cfg.n_trajectories = n;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = Some(o.clone());
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Classification, Ad-span, regularity, critical points and stability as JSON.
    Analyze {
        /// `{"H0": {...}, "H1": {...}}`.
        #[arg(long, requires = "target", conflicts_with = "config")]
        hamiltonians: Option<PathBuf>,
        /// Target density matrix `{"n", "re", "im"}`.
        #[arg(long)]
        target: Option<PathBuf>,
        /// Take H0, H1 and the target from a scenario configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also propagate the critical trajectories over this horizon.
        #[arg(long)]
        critical_horizon: Option<f64>,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate one trajectory at full resolution.
    Simulate {
        #[command(flatten)]
        overrides: Overrides,
        /// Trajectory index whose seeded initial state is used.
        #[arg(long, default_value_t = 0)]
        index: usize,
        /// Explicit initial state `{"n", "re", "im"}`.
        #[arg(long)]
        rho0: Option<PathBuf>,
        /// Bloch snapshot stride in steps (0 = none).
        #[arg(long)]
        stride: Option<usize>,
    },
    /// Batch run of one of the four built-in regimes (or of `--config`).
    #[command(name = "reproduce-fig1")]
    ReproduceFig1 {
        #[arg(long, value_parser = ["a", "b", "c", "d"])]
        panel: Option<String>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the built-in oracle checks.
    Selftest,
}

fn write_json<T: serde::Serialize>(value: &T, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            serde_json::to_writer_pretty(BufWriter::new(File::create(p)?), value)?
        }
        None => println!("{}", serde_json::to_string_pretty(value)?),
    }
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(p: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Analyze { hamiltonians, target, config, critical_horizon, dt, out } => {
            let (h0, h1, rho_d, classify, kappa) = if let Some(cfg) = config {
                let sc = ScenarioConfig::from_file(&cfg)?.resolve()?;
                let rho_d = sc.pair().from_internal(&sc.target)?;
                let (h0, h1) = match (&sc.config.h0, &sc.config.h1, &sc.config.hamiltonian_file) {
                    (Some(a), Some(b), _) => (a.to_matrix()?, b.to_matrix()?),
                    (_, _, Some(f)) => {
                        let pair: HamiltonianPairJson = read_json(f)?;
                        (pair.h0.to_matrix()?, pair.h1.to_matrix()?)
                    }
                    _ => bail!("configuration has no Hamiltonians"),
                };
                (h0, h1, rho_d, sc.config.classify, sc.config.kappa)
            } else {
                let (Some(hp), Some(tp)) = (hamiltonians, target) else {
                    bail!("give --config or both --hamiltonians and --target");
                };
                let pair: HamiltonianPairJson = read_json(&hp)?;
                let rho: DensityMatrixJson = read_json(&tp)?;
                (pair.h0.to_matrix()?, pair.h1.to_matrix()?, DensityMatrix::try_from(&rho)?, Default::default(), 1.0)
            };
            let opts = AnalyzeOptions {
                classify,
                kappa,
                critical_trajectories: critical_horizon.map(|h| (h, dt)),
                ..Default::default()
            };
            let report = analyze_system(&h0, &h1, &rho_d, &opts)?;
            write_json(&report, out.as_deref())?;
            let failed = report
                .critical_trajectories
                .as_ref()
                .is_some_and(|v| v.iter().any(|e| !e.note.ok));
            Ok(if failed { EXIT_NUMERICAL } else { 0 })
        }
        Command::Simulate { overrides, index, rho0, stride } => {
            let mut cfg = overrides.load(ScenarioId::Fig1a)?;
            if let Some(s) = stride {
                cfg.stride = s;
            }
            let sc = cfg.resolve()?;
            let rho0 = match rho0 {
                Some(p) => Some(DensityMatrix::try_from(&read_json::<DensityMatrixJson>(&p)?)?),
                None => None,
            };
            let trace = simulate_trajectory(&sc, index, rho0.as_ref())?;
            let dir = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
            fs::create_dir_all(&dir)?;
            trace.write_csv(BufWriter::new(File::create(dir.join("trajectory.csv"))?), 1)?;
            if cfg.stride > 0 {
                trace.write_bloch_csv(BufWriter::new(File::create(dir.join("trajectory_bloch.csv"))?))?;
            }
            let (label, slope) = cfg.convergence.classify(&trace);
            println!("final V = {:e}, label = {label:?}, tail slope = {slope:e}", trace.final_v());
            println!("wrote {}", dir.join("trajectory.csv").display());
            for w in &trace.warnings {
                eprintln!("warning: {w}");
            }
            Ok(if trace.diagnostics.v_increase_violations > 0 { EXIT_NUMERICAL } else { 0 })
        }
        Command::ReproduceFig1 { panel, overrides } => {
            let id = match (&panel, &overrides.config) {
                (Some(p), _) => ScenarioId::from_panel(p)?,
                (None, Some(_)) => ScenarioId::Custom,
                (None, None) => bail!("give --panel or --config"),
            };
            let mut cfg = overrides.load(id)?;
            if let (Some(p), Some(_)) = (&panel, &overrides.config) {
                if cfg.scenario != id {
                    bail!("--panel {p} disagrees with scenario '{}' in the config", cfg.scenario.name());
                }
            }
            let out = cfg.output_dir.take().unwrap_or_else(|| PathBuf::from("out"));
            let sc = cfg.resolve()?;
            let summary = run_scenario(&sc, Some(&out))?;
            let c = summary.counts;
            println!(
                "{}: {} trajectories, converged {}, plateaued {}, undecided {}",
                summary.scenario, summary.n_trajectories, c.converged, c.plateaued, c.undecided
            );
            println!("max spectrum drift {:e}, V increases beyond tolerance: {}", summary.max_spectrum_drift, summary.v_increase_violations);
            if let Some(d) = &summary.output_dir {
                println!("wrote {}", d.display());
            }
            Ok(if summary.v_increase_violations > 0 { EXIT_NUMERICAL } else { 0 })
        }
        Command::Selftest => {
            let results = selftest();
            for r in &results {
                println!("{} {} ({})", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            Ok(if results.iter().all(|r| r.passed) { 0 } else { EXIT_NUMERICAL })
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Numerical(_) | Error::NotStationary { .. }) => EXIT_NUMERICAL,
        Some(Error::Io(_)) => 1,
        Some(_) => EXIT_VALIDATION,
        None if err.downcast_ref::<serde_json::Error>().is_some() => EXIT_VALIDATION,
        None => 1,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

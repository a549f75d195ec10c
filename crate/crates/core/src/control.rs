//! Lyapunov function, feedback law and the coupled autonomous flow of the
//! state and the target, integrated in Bloch coordinates.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianPair;
use crate::lie_algebra::SuBasis;
use crate::linalg::{c64, commutator, hermiticity_defect, trace_product, RMatrix, RVector};
use crate::quantum_state::DensityMatrix;

/// Spectra of the initial state and target may differ by at most this much.
pub const ISOSPECTRAL_TOL: f64 = 1e-8;
pub const V_INCREASE_TOL: f64 = 1e-9;

/// `V(rho, rho_d) = 1/2 ||rho - rho_d||^2`.
pub fn lyapunov_value(rho: &DensityMatrix, rho_d: &DensityMatrix) -> Result<f64> {
    if rho.n() != rho_d.n() {
        return Err(Error::DimensionMismatch { expected: rho_d.n(), found: rho.n() });
    }
    let diff = rho.matrix() - rho_d.matrix();
    Ok(0.5 * diff.iter().map(|z| z.norm_sqr()).sum::<f64>())
}

/// `Tr(rho_d^2) - Tr(rho rho_d)`; equals [`lyapunov_value`] for isospectral arguments.
pub fn lyapunov_value_isospectral(rho: &DensityMatrix, rho_d: &DensityMatrix) -> Result<f64> {
    if rho.n() != rho_d.n() {
        return Err(Error::DimensionMismatch { expected: rho_d.n(), found: rho.n() });
    }
    Ok(trace_product(rho_d.matrix(), rho_d.matrix()).re - trace_product(rho.matrix(), rho_d.matrix()).re)
}

/// A classified Hamiltonian pair together with its Bloch generators.
#[derive(Debug, Clone)]
pub struct ControlledSystem {
    pub pair: HamiltonianPair,
    pub basis: SuBasis,
    /// `A0(m, k) = Tr(i H0 [xi_m, xi_k])`.
    pub a0: RMatrix,
    /// `A1(m, k) = Tr(i H1 [xi_m, xi_k])`.
    pub a1: RMatrix,
    pub kappa: f64,
}

impl ControlledSystem {
    pub fn new(pair: HamiltonianPair, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("gain must be positive, got {kappa}")));
        }
        let basis = SuBasis::new(pair.n())?;
        let a0 = basis.hamiltonian_generator(pair.h0())?;
        let a1 = basis.hamiltonian_generator(pair.h1())?;
        Ok(ControlledSystem { pair, basis, a0, a1, kappa })
    }

    pub fn n(&self) -> usize {
        self.pair.n()
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// Bloch vector of a state given in the internal frame.
    pub fn bloch(&self, rho: &DensityMatrix) -> Result<RVector> {
        self.basis.to_bloch(rho.matrix())
    }

    /// `f = kappa Tr([-i H1, rho] rho_d)` evaluated with matrices (internal frame).
    pub fn control_field(&self, rho: &DensityMatrix, rho_d: &DensityMatrix) -> Result<f64> {
        if rho.n() != self.n() || rho_d.n() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), found: rho.n().max(rho_d.n()) });
        }
        let gen = self.pair.h1() * c64(0.0, -1.0);
        Ok(self.kappa * trace_product(&commutator(&gen, rho.matrix()), rho_d.matrix()).re)
    }

    /// `f = kappa s_d^T A1 s`.
    pub fn control_field_bloch(&self, s: &RVector, s_d: &RVector) -> f64 {
        self.kappa * s_d.dot(&(&self.a1 * s))
    }

    /// `(ds, ds_d) = ((A0 + f A1) s, A0 s_d)`.
    pub fn vector_field(&self, s: &RVector, s_d: &RVector) -> (RVector, RVector) {
        let a1s = &self.a1 * s;
        let f = self.kappa * s_d.dot(&a1s);
        let ds = &self.a0 * s + a1s * f;
        (ds, &self.a0 * s_d)
    }

    /// Analytic `dV/dt = -f^2 / kappa` along the flow.
    pub fn lyapunov_rate(&self, s: &RVector, s_d: &RVector) -> f64 {
        let f = self.control_field_bloch(s, s_d);
        -f * f / self.kappa
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrateOptions {
    pub horizon: f64,
    pub dt: f64,
    /// Bloch snapshot stride in steps; 0 records none.
    pub stride: usize,
    /// Steps between spectrum-drift checks (the final step is always checked).
    pub diagnostic_stride: usize,
    pub v_increase_tol: f64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions { horizon: 200.0, dt: 1e-3, stride: 0, diagnostic_stride: 1000, v_increase_tol: V_INCREASE_TOL }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TraceDiagnostics {
    pub max_trace_drift: f64,
    pub max_hermiticity_drift: f64,
    pub max_spectrum_drift: f64,
    /// Largest single-step increase of V.
    pub max_v_increase: f64,
    /// Steps where V grew by more than the tolerance.
    pub v_increase_violations: usize,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub s: RVector,
    pub s_d: RVector,
}

#[derive(Debug, Clone)]
pub struct TrajectoryTrace {
    pub times: Vec<f64>,
    pub v_values: Vec<f64>,
    pub f_values: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub final_s: RVector,
    pub final_s_d: RVector,
    pub diagnostics: TraceDiagnostics,
    pub warnings: Vec<String>,
}

/// Row-major copy of the generators for the inner loop.
struct FlatSystem {
    d: usize,
    a0: Vec<f64>,
    a1: Vec<f64>,
    kappa: f64,
}

impl FlatSystem {
    fn new(sys: &ControlledSystem) -> Self {
        let d = sys.dim();
        let flat = |m: &RMatrix| (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| m[(i, j)]).collect();
        FlatSystem { d, a0: flat(&sys.a0), a1: flat(&sys.a1), kappa: sys.kappa }
    }

    #[inline]
    fn matvec(&self, m: &[f64], x: &[f64], out: &mut [f64]) {
        for (row, o) in m.chunks_exact(self.d).zip(out.iter_mut()) {
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    /// Writes the derivative of `(s, s_d)` into `ds`/`dsd`, returns `f`.
    fn eval(&self, s: &[f64], sd: &[f64], ds: &mut [f64], dsd: &mut [f64], tmp: &mut [f64]) -> f64 {
        self.matvec(&self.a1, s, tmp);
        let f = self.kappa * sd.iter().zip(tmp.iter()).map(|(a, b)| a * b).sum::<f64>();
        self.matvec(&self.a0, s, ds);
        for (o, t) in ds.iter_mut().zip(tmp.iter()) {
            *o += f * t;
        }
        self.matvec(&self.a0, sd, dsd);
        f
    }
}

fn half_distance_sq(s: &[f64], sd: &[f64]) -> f64 {
    0.5 * s.iter().zip(sd).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
}

/// Classical fixed-step RK4 on the extended `(s, s_d)` system. Both states are
/// given in the internal frame.
pub fn integrate(
    rho0: &DensityMatrix,
    rho_d0: &DensityMatrix,
    sys: &ControlledSystem,
    opts: &IntegrateOptions,
) -> Result<TrajectoryTrace> {
    if !(opts.dt > 0.0 && opts.dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {}", opts.dt)));
    }
    if !(opts.horizon > 0.0 && opts.horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {}", opts.horizon)));
    }
    let n = sys.n();
    if rho0.n() != n || rho_d0.n() != n {
        return Err(Error::DimensionMismatch { expected: n, found: rho0.n().max(rho_d0.n()) });
    }
    let mut warnings = Vec::new();
    let spectral_gap = rho0.spectrum_distance(rho_d0);
    if spectral_gap > ISOSPECTRAL_TOL {
        warnings.push(format!("initial state and target are not isospectral (deviation {spectral_gap:e})"));
    }

    let flat = FlatSystem::new(sys);
    let d = flat.d;
    let steps = (opts.horizon / opts.dt).round().max(1.0) as usize;
    let dt = opts.dt;
    let diag_stride = opts.diagnostic_stride.max(1);

    let mut s: Vec<f64> = sys.bloch(rho0)?.iter().cloned().collect();
    let mut sd: Vec<f64> = sys.bloch(rho_d0)?.iter().cloned().collect();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let (mut q1, mut q2, mut q3, mut q4) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let (mut ys, mut ysd, mut tmp) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);

    let mut times = Vec::with_capacity(steps + 1);
    let mut v_values = Vec::with_capacity(steps + 1);
    let mut f_values = Vec::with_capacity(steps + 1);
    let mut snapshots = Vec::new();
    let mut diagnostics = TraceDiagnostics::default();

    let spectrum0 = rho0.eigenvalues().to_vec();
    let spectrum_d0 = rho_d0.eigenvalues().to_vec();
    let check = |s: &[f64], sd: &[f64], diag: &mut TraceDiagnostics| -> Result<()> {
        for (vec, reference) in [(s, &spectrum0), (sd, &spectrum_d0)] {
            let m = sys.basis.from_bloch(&RVector::from_column_slice(vec), 1.0)?;
            diag.max_trace_drift = diag.max_trace_drift.max((m.trace().re - 1.0).abs());
            diag.max_hermiticity_drift = diag.max_hermiticity_drift.max(hermiticity_defect(&m));
            let ev = crate::linalg::hermitian_eigenvalues(&m);
            let drift = ev.iter().zip(reference.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            diag.max_spectrum_drift = diag.max_spectrum_drift.max(drift);
        }
        Ok(())
    };

    let mut f = flat.eval(&s, &sd, &mut k1, &mut q1, &mut tmp);
    let mut v = half_distance_sq(&s, &sd);
    times.push(0.0);
    v_values.push(v);
    f_values.push(f);
    if opts.stride > 0 {
        snapshots.push(Snapshot { t: 0.0, s: RVector::from_column_slice(&s), s_d: RVector::from_column_slice(&sd) });
    }
    check(&s, &sd, &mut diagnostics)?;

    for step in 1..=steps {
        // k1/q1 hold the derivative at the current point.
        for i in 0..d {
            ys[i] = s[i] + 0.5 * dt * k1[i];
            ysd[i] = sd[i] + 0.5 * dt * q1[i];
        }
        flat.eval(&ys, &ysd, &mut k2, &mut q2, &mut tmp);
        for i in 0..d {
            ys[i] = s[i] + 0.5 * dt * k2[i];
            ysd[i] = sd[i] + 0.5 * dt * q2[i];
        }
        flat.eval(&ys, &ysd, &mut k3, &mut q3, &mut tmp);
        for i in 0..d {
            ys[i] = s[i] + dt * k3[i];
            ysd[i] = sd[i] + dt * q3[i];
        }
        flat.eval(&ys, &ysd, &mut k4, &mut q4, &mut tmp);
        for i in 0..d {
            s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            sd[i] += dt / 6.0 * (q1[i] + 2.0 * q2[i] + 2.0 * q3[i] + q4[i]);
        }

        f = flat.eval(&s, &sd, &mut k1, &mut q1, &mut tmp);
        let v_next = half_distance_sq(&s, &sd);
        let increase = v_next - v;
        if increase > diagnostics.max_v_increase {
            diagnostics.max_v_increase = increase;
        }
        if increase > opts.v_increase_tol {
            diagnostics.v_increase_violations += 1;
        }
        v = v_next;
        let t = step as f64 * dt;
        times.push(t);
        v_values.push(v);
        f_values.push(f);
        if opts.stride > 0 && step % opts.stride == 0 {
            snapshots.push(Snapshot { t, s: RVector::from_column_slice(&s), s_d: RVector::from_column_slice(&sd) });
        }
        if step % diag_stride == 0 || step == steps {
            check(&s, &sd, &mut diagnostics)?;
        }
    }
    if diagnostics.v_increase_violations > 0 {
        warnings.push(format!(
            "V increased by more than {:e} on {} steps (max {:e})",
            opts.v_increase_tol, diagnostics.v_increase_violations, diagnostics.max_v_increase
        ));
    }

    Ok(TrajectoryTrace {
        times,
        v_values,
        f_values,
        snapshots,
        final_s: RVector::from_vec(s),
        final_s_d: RVector::from_vec(sd),
        diagnostics,
        warnings,
    })
}

/// 17 significant digits.
pub(crate) fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl TrajectoryTrace {
    pub fn final_v(&self) -> f64 {
        *self.v_values.last().expect("trace has at least one sample")
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("trace has at least one sample")
    }

    /// `t,V,f` rows at every `every`-th step (1 = full resolution); the final
    /// step is always included.
    pub fn write_csv<W: Write>(&self, mut w: W, every: usize) -> Result<()> {
        writeln!(w, "t,V,f")?;
        let every = every.max(1);
        let last = self.times.len() - 1;
        for i in (0..=last).filter(|i| i % every == 0 || *i == last) {
            writeln!(w, "{},{},{}", fmt_float(self.times[i]), fmt_float(self.v_values[i]), fmt_float(self.f_values[i]))?;
        }
        Ok(())
    }

    /// `t,s_1..s_D,sd_1..sd_D` for the recorded snapshots.
    pub fn write_bloch_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let dim = self.final_s.len();
        let mut header = vec!["t".to_string()];
        header.extend((1..=dim).map(|i| format!("s_{i}")));
        header.extend((1..=dim).map(|i| format!("sd_{i}")));
        writeln!(w, "{}", header.join(","))?;
        for snap in &self.snapshots {
            let row: Vec<String> = std::iter::once(snap.t)
                .chain(snap.s.iter().cloned())
                .chain(snap.s_d.iter().cloned())
                .map(fmt_float)
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvergenceLabel {
    Converged,
    Plateaued,
    Undecided,
}

/// Batch decision rule for a finished trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceRule {
    /// Final V below this counts as converged.
    pub converged_below: f64,
    /// Slope of log10 V over the final window above this (with V above
    /// `plateau_floor`) counts as a plateau.
    pub plateau_slope: f64,
    pub plateau_floor: f64,
    /// Fraction of the horizon used for the slope fit.
    pub window: f64,
}

impl Default for ConvergenceRule {
    fn default() -> Self {
        ConvergenceRule { converged_below: 1e-8, plateau_slope: -1e-4, plateau_floor: 1e-6, window: 0.2 }
    }
}

impl ConvergenceRule {
    /// Least-squares slope of `log10 V` against `t` over the final window.
    pub fn tail_slope(&self, trace: &TrajectoryTrace) -> f64 {
        let horizon = trace.horizon();
        let start = horizon * (1.0 - self.window);
        let (mut n, mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&t, &v) in trace.times.iter().zip(&trace.v_values).filter(|(t, _)| **t >= start) {
            let y = v.max(f64::MIN_POSITIVE).log10();
            n += 1.0;
            st += t;
            sy += y;
            stt += t * t;
            sty += t * y;
        }
        let denom = n * stt - st * st;
        if n < 2.0 || denom == 0.0 {
            return 0.0;
        }
        (n * sty - st * sy) / denom
    }

    pub fn label(&self, final_v: f64, slope: f64) -> ConvergenceLabel {
        if final_v < self.converged_below {
            ConvergenceLabel::Converged
        } else if slope > self.plateau_slope && final_v > self.plateau_floor {
            ConvergenceLabel::Plateaued
        } else {
            ConvergenceLabel::Undecided
        }
    }

    pub fn classify(&self, trace: &TrajectoryTrace) -> (ConvergenceLabel, f64) {
        let slope = self.tail_slope(trace);
        (self.label(trace.final_v(), slope), slope)
    }
}

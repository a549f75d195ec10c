//! The n! critical points of `V` (equivalently of `J(U) = Tr(U rho_0 U^dag rho_d)`)
//! for a target with distinct eigenvalues, their Hessians and Morse indices.

use serde::Serialize;

use crate::control::{integrate, ControlledSystem, IntegrateOptions};
use crate::error::{Error, Result};
use crate::lie_algebra::SuBasis;
use crate::linalg::{c64, commutator, hermitian_eigen, hs_norm, trace_product, CMatrix, RMatrix};
use crate::quantum_state::{DensityMatrix, GENERIC_GAP_TOL};

/// Largest dimension accepted for the factorial enumeration.
pub const MAX_ENUMERATION_DIM: usize = 6;
pub const COMMUTATOR_TOL: f64 = 1e-10;
pub const TRAJECTORY_COMMUTATOR_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticalKind {
    Minimum,
    Maximum,
    Saddle,
}

#[derive(Debug, Clone)]
pub struct CriticalPoint {
    /// Zero-based permutation: the state carries `w[tau[k]]` in slot `k` of the
    /// target's eigenbasis (weights sorted descending).
    pub tau: Vec<usize>,
    pub state: DensityMatrix,
    /// `J = sum_k w_k w_tau(k)`.
    pub j_value: f64,
    /// `V = Tr(rho_d^2) - J`.
    pub v_value: f64,
    /// Number of tangent directions along which `V` decreases.
    pub morse_index: usize,
    pub kind: CriticalKind,
}

/// JSON row; `tau` is one-based.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalPointReport {
    pub tau: Vec<usize>,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "V")]
    pub v: f64,
    pub morse_index: usize,
    pub kind: CriticalKind,
}

impl CriticalPoint {
    pub fn report(&self) -> CriticalPointReport {
        CriticalPointReport {
            tau: self.tau.iter().map(|t| t + 1).collect(),
            j: self.j_value,
            v: self.v_value,
            morse_index: self.morse_index,
            kind: self.kind,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.tau.iter().enumerate().all(|(i, &t)| i == t)
    }
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        out.push(p.clone());
        // next_permutation
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| p[i] < p[i + 1]) else {
            return out;
        };
        let j = (i + 1..n).rev().find(|&j| p[j] > p[i]).expect("successor exists");
        p.swap(i, j);
        p[i + 1..].reverse();
    }
}

fn diag(w: &[f64]) -> CMatrix {
    CMatrix::from_fn(w.len(), w.len(), |i, j| if i == j { c64(w[i], 0.0) } else { c64(0.0, 0.0) })
}

/// Closed-form Hessian of `J` along the normalized root directions: for the
/// pair `(k, l)` both directions give `-(w_tau(k) - w_tau(l)) (w_k - w_l)`.
pub fn hessian_closed_form(weights: &[f64], tau: &[usize], basis: &SuBasis) -> Vec<f64> {
    let mut out = Vec::with_capacity(basis.root_dim());
    for &(k, l) in basis.pairs() {
        let h = -(weights[tau[k]] - weights[tau[l]]) * (weights[k] - weights[l]);
        out.push(h);
        out.push(h);
    }
    out
}

fn morse_from_hessian(j_hessian: &[f64]) -> (usize, CriticalKind) {
    // V = const - J, so V decreases where J increases.
    let index = j_hessian.iter().filter(|&&h| h > 0.0).count();
    let kind = if index == 0 {
        CriticalKind::Minimum
    } else if index == j_hessian.len() {
        CriticalKind::Maximum
    } else {
        CriticalKind::Saddle
    };
    (index, kind)
}

/// Enumerate the `n!` permutation states of a generic target. States are
/// returned in the frame of `rho_d`.
pub fn enumerate_critical_points(rho_d: &DensityMatrix) -> Result<Vec<CriticalPoint>> {
    let n = rho_d.n();
    if n > MAX_ENUMERATION_DIM {
        return Err(Error::InvalidParameter(format!(
            "critical-point enumeration is limited to n <= {MAX_ENUMERATION_DIM}, got {n}"
        )));
    }
    if !rho_d.is_generic(GENERIC_GAP_TOL) {
        return Err(Error::NonGeneric { gap: rho_d.min_gap() });
    }
    let basis = SuBasis::new(n)?;
    let (w, frame) = hermitian_eigen(rho_d.matrix());
    let purity: f64 = w.iter().map(|x| x * x).sum();
    let mut points = Vec::new();
    for tau in permutations(n) {
        let permuted: Vec<f64> = tau.iter().map(|&t| w[t]).collect();
        let m = &frame * diag(&permuted) * frame.adjoint();
        let state = DensityMatrix::new((&m + m.adjoint()) * c64(0.5, 0.0))?;
        let residual = hs_norm(&commutator(state.matrix(), rho_d.matrix()));
        if residual > COMMUTATOR_TOL {
            return Err(Error::Numerical(format!("critical point {tau:?} does not commute with the target ({residual:e})")));
        }
        let j_value: f64 = w.iter().zip(&permuted).map(|(a, b)| a * b).sum();
        let (morse_index, kind) = morse_from_hessian(&hessian_closed_form(&w, &tau, &basis));
        points.push(CriticalPoint { tau, state, j_value, v_value: purity - j_value, morse_index, kind });
    }
    Ok(points)
}

/// Hessian of `J` along each normalized root direction `sigma_j`,
/// `2 Tr[sigma^2 rho_0 rho_d] - 2 Tr[sigma rho_0 sigma rho_d]`, evaluated in the
/// eigenbasis of `rho_d`.
pub fn hessian_diagonal(cp: &CriticalPoint, rho_d: &DensityMatrix, basis: &SuBasis) -> Result<Vec<f64>> {
    let n = rho_d.n();
    if cp.tau.len() != n || basis.n() != n {
        return Err(Error::DimensionMismatch { expected: n, found: cp.tau.len() });
    }
    let w = rho_d.eigenvalues();
    let d = diag(w);
    let rho0 = diag(&cp.tau.iter().map(|&t| w[t]).collect::<Vec<_>>());
    let prod = &rho0 * &d;
    Ok(basis.sigma()[..basis.root_dim()]
        .iter()
        .map(|s| {
            let s2 = s * s;
            2.0 * trace_product(&s2, &prod).re - 2.0 * trace_product(&(s * &rho0 * s), &d).re
        })
        .collect())
}

/// Diagnostics of one critical trajectory under the free flow.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalTrajectoryNote {
    pub max_commutator: f64,
    pub v_spread: f64,
    pub ok: bool,
}

/// The critical points taken as initial conditions `(rho^(k), rho_d)` and
/// propagated with the drift alone; the commutator must stay zero and `V`
/// constant. `rho_d0` is in the internal frame of `sys`.
pub fn critical_pairs_extended(
    rho_d0: &DensityMatrix,
    sys: &ControlledSystem,
    horizon: f64,
    dt: f64,
) -> Result<Vec<(CriticalPoint, CriticalTrajectoryNote)>> {
    let points = enumerate_critical_points(rho_d0)?;
    let mut free = sys.clone();
    free.a1 = RMatrix::zeros(sys.dim(), sys.dim());
    let stride = ((horizon / dt).round() as usize / 200).max(1);
    let opts = IntegrateOptions { horizon, dt, stride, ..Default::default() };
    let mut out = Vec::with_capacity(points.len());
    for cp in points {
        let trace = integrate(&cp.state, rho_d0, &free, &opts)?;
        let mut max_commutator: f64 = 0.0;
        for snap in &trace.snapshots {
            let a = sys.basis.from_bloch(&snap.s, 1.0)?;
            let b = sys.basis.from_bloch(&snap.s_d, 1.0)?;
            max_commutator = max_commutator.max(hs_norm(&commutator(&a, &b)));
        }
        let (lo, hi) = trace.v_values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let v_spread = hi - lo;
        let ok = max_commutator < TRAJECTORY_COMMUTATOR_TOL && v_spread < TRAJECTORY_COMMUTATOR_TOL;
        out.push((cp, CriticalTrajectoryNote { max_commutator, v_spread, ok }));
    }
    Ok(out)
}

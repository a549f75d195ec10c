//! Linearization of the closed-loop flow at stationary points, restriction to
//! the root block `S_T`, spectral classification and the rank-one update
//! structure `B = B0 - kappa u v^T`.

use nalgebra::DVector;
use serde::Serialize;

use crate::control::ControlledSystem;
use crate::critical_points::{enumerate_critical_points, CriticalPoint};
use crate::error::{Error, Result};
use crate::linalg::{c64, numerical_rank, real_matrix_eigenvalues, smallest_singular_vector, CMatrix, RMatrix, RVector, C64};
use crate::quantum_state::DensityMatrix;

pub const STATIONARY_TOL: f64 = 1e-8;
pub const RE_TOL: f64 = 1e-7;
pub const IMAG_MATCH_TOL: f64 = 1e-6;
pub const FD_EPS: f64 = 1e-6;
pub const KERNEL_RANK_TOL: f64 = 1e-9;
pub const EIGENVECTOR_RESIDUAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Sink,
    Source,
    Saddle,
    CenterType,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumClass {
    pub classification: Classification,
    pub n_pos: usize,
    pub n_neg: usize,
    pub n_imag: usize,
    /// `Im` of each near-imaginary eigenvalue with `Im >= 0`; zero
    /// eigenvalues appear as `0.0`.
    pub imag_pair_frequencies: Vec<f64>,
}

/// Sign counts of the real parts with a dead band of `re_tol`.
pub fn classify_spectrum(eigenvalues: &[C64], re_tol: f64) -> SpectrumClass {
    let n_pos = eigenvalues.iter().filter(|z| z.re > re_tol).count();
    let n_neg = eigenvalues.iter().filter(|z| z.re < -re_tol).count();
    let near: Vec<&C64> = eigenvalues.iter().filter(|z| z.re.abs() <= re_tol).collect();
    let mut imag_pair_frequencies: Vec<f64> = near.iter().filter(|z| z.im >= 0.0).map(|z| z.im).collect();
    imag_pair_frequencies.sort_by(f64::total_cmp);
    let classification = if !near.is_empty() {
        Classification::CenterType
    } else if n_pos == 0 {
        Classification::Sink
    } else if n_neg == 0 {
        Classification::Source
    } else {
        Classification::Saddle
    };
    SpectrumClass { classification, n_pos, n_neg, n_imag: near.len(), imag_pair_frequencies }
}

#[derive(Debug, Clone)]
pub struct LinearizationReport {
    pub df_full: RMatrix,
    pub b_restricted: RMatrix,
    pub eigenvalues: Vec<C64>,
    pub kernel_dim_full: usize,
    pub spectrum: SpectrumClass,
    /// `||D_f - D_f^T||_F`.
    pub asymmetry: f64,
    /// `max |D_f x|` over unit Cartan directions `x`.
    pub s_c_residual: f64,
    /// Norm of the block of `D_f` mapping `S_T` out of `S_T`.
    pub s_t_leak: f64,
    pub stationarity_residual: f64,
    pub control_value: f64,
    /// The target is not stationary; the linearization is taken at `t = 0`
    /// along the critical trajectory and carries no stability guarantee.
    pub heuristic: bool,
}

impl LinearizationReport {
    pub fn classification(&self) -> Classification {
        self.spectrum.classification
    }

    pub fn det_b(&self) -> f64 {
        self.b_restricted.determinant()
    }
}

fn drift_is_zero(sys: &ControlledSystem, s_d: &RVector) -> bool {
    (&sys.a0 * s_d).norm() < STATIONARY_TOL
}

/// `D_f = A0 + f A1 + kappa A1 s0 s_d^T A1`.
pub fn jacobian(s0: &RVector, s_d: &RVector, sys: &ControlledSystem) -> RMatrix {
    let f = sys.control_field_bloch(s0, s_d);
    let a1s = &sys.a1 * s0;
    let row = s_d.transpose() * &sys.a1;
    &sys.a0 + &sys.a1 * f + (a1s * row) * sys.kappa
}

pub fn linearize(s0: &RVector, s_d: &RVector, sys: &ControlledSystem) -> Result<LinearizationReport> {
    let dim = sys.dim();
    if s0.len() != dim || s_d.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: s0.len().max(s_d.len()) });
    }
    let f = sys.control_field_bloch(s0, s_d);
    let heuristic = !drift_is_zero(sys, s_d);
    let stationarity_residual = if heuristic { f.abs() } else { sys.vector_field(s0, s_d).0.norm() };
    if stationarity_residual >= STATIONARY_TOL {
        return Err(Error::NotStationary { residual: stationarity_residual });
    }

    let df_full = jacobian(s0, s_d, sys);
    let root = sys.basis.root_dim();
    let b_restricted = df_full.view((0, 0), (root, root)).into_owned();
    let eigenvalues = real_matrix_eigenvalues(&b_restricted);
    let spectrum = classify_spectrum(&eigenvalues, RE_TOL);
    let kernel_dim_full = dim - numerical_rank(&df_full, KERNEL_RANK_TOL);
    let asymmetry = (&df_full - df_full.transpose()).norm();
    let s_c_residual = (root..dim).map(|c| df_full.column(c).norm()).fold(0.0, f64::max);
    let s_t_leak = df_full.view((root, 0), (dim - root, root)).norm();

    Ok(LinearizationReport {
        df_full,
        b_restricted,
        eigenvalues,
        kernel_dim_full,
        spectrum,
        asymmetry,
        s_c_residual,
        s_t_leak,
        stationarity_residual,
        control_value: f,
        heuristic,
    })
}

/// Central-difference Jacobian of `s -> (A0 + f A1) s` at fixed `s_d`.
pub fn finite_difference_jacobian(s0: &RVector, s_d: &RVector, sys: &ControlledSystem, eps: f64) -> RMatrix {
    let dim = s0.len();
    let mut jac = RMatrix::zeros(dim, dim);
    for c in 0..dim {
        let mut plus = s0.clone();
        let mut minus = s0.clone();
        plus[c] += eps;
        minus[c] -= eps;
        let col = (sys.vector_field(&plus, s_d).0 - sys.vector_field(&minus, s_d).0) / (2.0 * eps);
        jac.set_column(c, &col);
    }
    jac
}

#[derive(Debug, Clone, Serialize)]
pub struct ImagEigenCheck {
    pub re: f64,
    pub im: f64,
    /// `||B0 e - mu e||` for the unit eigenvector `e` of `B`.
    pub b0_residual: f64,
    /// Norm of `u` on the root pairs whose `|omega|` matches `|Im mu|`.
    pub u_projection: f64,
    pub v_projection: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone)]
pub struct RankOneStructure {
    pub b0: RMatrix,
    /// `(A1 s0)` restricted to `S_T`.
    pub u: RVector,
    /// `(A1 s_d)` restricted to `S_T`.
    pub v: RVector,
    /// Largest deviation of `B0` from the expected `omega [[0, 1], [-1, 0]]` blocks.
    pub block_defect: f64,
    /// `||B - (B0 - kappa u v^T)||`.
    pub update_defect: f64,
    pub vt_b0_inv_u: f64,
    pub det_b: f64,
    /// `prod omega_kl^2`.
    pub det_b0: f64,
    pub det_check: bool,
    pub imag_checks: Vec<ImagEigenCheck>,
    pub imag_eigen_lemma_check: bool,
}

const BLOCK_TOL: f64 = 1e-10;

/// Decomposes the restricted Jacobian at a stationary point of a stationary
/// target. A wrong block sign is reported as an error since it means the
/// basis ordering disagrees with the transition table.
pub fn rank_one_update_structure(
    s0: &RVector,
    s_d: &RVector,
    sys: &ControlledSystem,
    report: &LinearizationReport,
) -> Result<RankOneStructure> {
    if report.heuristic {
        return Err(Error::InvalidParameter("rank-one structure requires a stationary target".into()));
    }
    let basis = &sys.basis;
    let root = basis.root_dim();
    let b0 = sys.a0.view((0, 0), (root, root)).into_owned();

    let mut expected = RMatrix::zeros(root, root);
    for t in sys.pair.transitions() {
        let p = basis.pair_slot(t.pair.0, t.pair.1).expect("valid pair");
        expected[(p, p + 1)] = t.omega;
        expected[(p + 1, p)] = -t.omega;
    }
    let scale = sys.pair.transitions().iter().map(|t| t.omega.abs()).fold(1.0, f64::max);
    let block_defect = (&b0 - &expected).amax();
    if block_defect > BLOCK_TOL * scale {
        return Err(Error::Numerical(format!("root block of A0 deviates from the transition table by {block_defect:e}")));
    }

    let u = (&sys.a1 * s0).rows(0, root).into_owned();
    let v = (&sys.a1 * s_d).rows(0, root).into_owned();
    let update = &b0 - (&u * v.transpose()) * sys.kappa;
    let update_defect = (&report.b_restricted - &update).norm();

    let det_b0: f64 = sys.pair.transitions().iter().map(|t| t.omega * t.omega).product();
    let det_b = report.det_b();
    let vt_b0_inv_u = match b0.clone().lu().solve(&u) {
        Some(x) => v.dot(&x),
        None => f64::NAN,
    };
    let det_check = det_b0 != 0.0
        && ((det_b - det_b0) / det_b0).abs() < 1e-8
        && vt_b0_inv_u.abs() < 1e-8 * (1.0 + u.norm() * v.norm() / scale);

    let b_c = report.b_restricted.map(|x| c64(x, 0.0));
    let b0_c = b0.map(|x| c64(x, 0.0));
    let mut imag_checks = Vec::new();
    for mu in report.eigenvalues.iter().filter(|z| z.re.abs() <= RE_TOL) {
        let shifted = &b_c - CMatrix::identity(root, root) * *mu;
        let (_, e) = smallest_singular_vector(&shifted);
        let b0_residual = (&b0_c * &e - &e * *mu).norm();
        let mut u_sq = 0.0;
        let mut v_sq = 0.0;
        for t in sys.pair.transitions().iter().filter(|t| (t.omega.abs() - mu.im.abs()).abs() < IMAG_MATCH_TOL) {
            let p = basis.pair_slot(t.pair.0, t.pair.1).expect("valid pair");
            u_sq += u[p] * u[p] + u[p + 1] * u[p + 1];
            v_sq += v[p] * v[p] + v[p + 1] * v[p + 1];
        }
        let (u_projection, v_projection) = (u_sq.sqrt(), v_sq.sqrt());
        let satisfied = b0_residual < EIGENVECTOR_RESIDUAL_TOL
            || u_projection < EIGENVECTOR_RESIDUAL_TOL
            || v_projection < EIGENVECTOR_RESIDUAL_TOL;
        imag_checks.push(ImagEigenCheck { re: mu.re, im: mu.im, b0_residual, u_projection, v_projection, satisfied });
    }
    let imag_eigen_lemma_check = imag_checks.iter().all(|c| c.satisfied);

    Ok(RankOneStructure {
        b0,
        u,
        v,
        block_defect,
        update_defect,
        vt_b0_inv_u,
        det_b,
        det_b0,
        det_check,
        imag_checks,
        imag_eigen_lemma_check,
    })
}

/// Stable-manifold dimension implied by the Morse index, `(n^2 - n) - index`,
/// against the number of eigenvalues with negative real part. Center-type
/// reports never match.
pub fn stable_manifold_dimension_check(report: &LinearizationReport, cp: &CriticalPoint) -> bool {
    report.spectrum.classification != Classification::CenterType
        && report.spectrum.n_neg + cp.morse_index == report.b_restricted.nrows()
}

/// Transitions (zero-based pairs) whose `|omega|` matches a near-imaginary
/// eigenvalue frequency.
pub fn matched_transitions(sys: &ControlledSystem, spectrum: &SpectrumClass) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for &freq in spectrum.imag_pair_frequencies.iter().filter(|f| **f > IMAG_MATCH_TOL) {
        for t in sys.pair.transitions() {
            if (t.omega.abs() - freq).abs() < IMAG_MATCH_TOL {
                out.push(t.pair);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct PointChecks {
    pub jacobian_fd_error: f64,
    pub kernel_dim_full: usize,
    pub s_c_residual: f64,
    pub s_t_leak: f64,
    pub asymmetry: f64,
    pub det_b: f64,
    pub det_b0: Option<f64>,
    pub det_check: Option<bool>,
    pub imag_eigen_lemma_check: Option<bool>,
    pub stable_manifold_match: Option<bool>,
    /// One-based transitions matched by near-imaginary eigenvalues.
    pub matched_transitions: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointStability {
    /// One-based permutation.
    pub tau: Vec<usize>,
    pub eigenvalues: Vec<(f64, f64)>,
    pub classification: Classification,
    pub n_pos: usize,
    pub n_neg: usize,
    pub n_imag: usize,
    pub imag_pair_frequencies: Vec<f64>,
    pub heuristic: bool,
    pub checks: PointChecks,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub ideal: bool,
    pub strongly_regular: bool,
    pub fully_connected: bool,
    pub target_stationary: bool,
    pub points: Vec<PointStability>,
}

impl StabilityReport {
    pub fn count(&self, c: Classification) -> usize {
        self.points.iter().filter(|p| p.classification == c).count()
    }

    /// The entry for the identity permutation, i.e. the target itself.
    pub fn target(&self) -> Option<&PointStability> {
        self.points.iter().find(|p| p.tau.iter().enumerate().all(|(i, &t)| t == i + 1))
    }
}

/// Linearizes at every critical point of `rho_d` (internal frame).
pub fn stability_report(rho_d: &DensityMatrix, sys: &ControlledSystem) -> Result<StabilityReport> {
    let points = enumerate_critical_points(rho_d)?;
    let s_d = sys.bloch(rho_d)?;
    let target_stationary = drift_is_zero(sys, &s_d);
    let mut out = Vec::with_capacity(points.len());
    for cp in &points {
        let s0 = sys.bloch(&cp.state)?;
        let rep = linearize(&s0, &s_d, sys)?;
        let fd = finite_difference_jacobian(&s0, &s_d, sys, FD_EPS);
        let jacobian_fd_error = (&rep.df_full - fd).amax();
        let structure = if rep.heuristic { None } else { Some(rank_one_update_structure(&s0, &s_d, sys, &rep)?) };
        let stable_manifold_match = (!rep.heuristic && rep.spectrum.classification != Classification::CenterType)
            .then(|| stable_manifold_dimension_check(&rep, cp));
        let checks = PointChecks {
            jacobian_fd_error,
            kernel_dim_full: rep.kernel_dim_full,
            s_c_residual: rep.s_c_residual,
            s_t_leak: rep.s_t_leak,
            asymmetry: rep.asymmetry,
            det_b: rep.det_b(),
            det_b0: structure.as_ref().map(|s| s.det_b0),
            det_check: structure.as_ref().map(|s| s.det_check),
            imag_eigen_lemma_check: structure.as_ref().map(|s| s.imag_eigen_lemma_check),
            stable_manifold_match,
            matched_transitions: matched_transitions(sys, &rep.spectrum).into_iter().map(|(k, l)| (k + 1, l + 1)).collect(),
        };
        out.push(PointStability {
            tau: cp.tau.iter().map(|t| t + 1).collect(),
            eigenvalues: rep.eigenvalues.iter().map(|z| (z.re, z.im)).collect(),
            classification: rep.spectrum.classification,
            n_pos: rep.spectrum.n_pos,
            n_neg: rep.spectrum.n_neg,
            n_imag: rep.spectrum.n_imag,
            imag_pair_frequencies: rep.spectrum.imag_pair_frequencies.clone(),
            heuristic: rep.heuristic,
            checks,
        });
    }
    Ok(StabilityReport {
        ideal: sys.pair.ideal,
        strongly_regular: sys.pair.strongly_regular,
        fully_connected: sys.pair.fully_connected,
        target_stationary,
        points: out,
    })
}

/// Eigenvector helper used by tests: unit vector spanning the kernel of `B - mu`.
pub fn eigenvector(b: &RMatrix, mu: C64) -> DVector<C64> {
    let n = b.nrows();
    let shifted = b.map(|x| c64(x, 0.0)) - CMatrix::identity(n, n) * mu;
    smallest_singular_vector(&shifted).1
}

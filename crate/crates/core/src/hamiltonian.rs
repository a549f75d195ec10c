//! Classification of `(H0, H1)` pairs, the Ad-bracket span, LaSalle
//! invariant-set membership and the regularity rank test.
//!
//! All states handed to this module are expressed in the eigenbasis of `H0`
//! with energies sorted descending (the "internal frame");
//! [`HamiltonianPair::to_internal`] maps states from the caller's frame.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie_algebra::SuBasis;
use crate::linalg::{
    c64, commutator, ensure_square, hermitian_eigen, hermiticity_defect, hs_norm, numerical_rank, CMatrix, RMatrix,
    RVector, C64,
};
use crate::quantum_state::{DensityMatrix, GENERIC_GAP_TOL};

pub const HERMITIAN_INPUT_TOL: f64 = 1e-10;
pub const DEFAULT_RANK_TOL: f64 = 1e-9;
pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyOptions {
    /// Transition frequencies closer than `gap_tol * max(1, max|omega|)` are equal.
    pub gap_tol: f64,
    /// Couplings below `coupling_tol * ||H1||` count as absent.
    pub coupling_tol: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { gap_tol: 1e-8, coupling_tol: 1e-8 }
    }
}

/// One row of the transition table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transition {
    /// Zero-based pair `(k, l)` with `k < l`.
    pub pair: (usize, usize),
    /// `omega_kl = a_l - a_k`.
    pub omega: f64,
    /// `b_kl = H1[k, l] = alpha + i beta`.
    pub alpha: f64,
    pub beta: f64,
}

impl Transition {
    pub fn coupling(&self) -> C64 {
        c64(self.alpha, self.beta)
    }
}

#[derive(Debug, Clone)]
pub struct HamiltonianPair {
    h0: CMatrix,
    h1: CMatrix,
    energies: Vec<f64>,
    frame: CMatrix,
    removed_trace: f64,
    transitions: Vec<Transition>,
    options: ClassifyOptions,
    pub strongly_regular: bool,
    pub fully_connected: bool,
    pub ideal: bool,
}

fn check_hermitian(m: &CMatrix) -> Result<usize> {
    let n = ensure_square(m)?;
    let defect = hermiticity_defect(m);
    if defect > HERMITIAN_INPUT_TOL {
        return Err(Error::NotHermitian(defect));
    }
    Ok(n)
}

fn is_diagonal(m: &CMatrix) -> bool {
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let n = m.nrows();
    (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)].norm() <= 1e-14 * scale))
}

/// Diagonalize `H0` (energies descending), move `H1` into that basis, drop
/// `Tr(H0)/n` and set the strong-regularity / full-connectivity flags.
pub fn classify(h0_raw: &CMatrix, h1_raw: &CMatrix, options: ClassifyOptions) -> Result<HamiltonianPair> {
    let n = check_hermitian(h0_raw)?;
    let n1 = check_hermitian(h1_raw)?;
    if n != n1 {
        return Err(Error::DimensionMismatch { expected: n, found: n1 });
    }
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }

    let (energies, frame) = if is_diagonal(h0_raw) {
        // Pure permutation keeps diagonal inputs exact.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| h0_raw[(b, b)].re.total_cmp(&h0_raw[(a, a)].re));
        let mut p = CMatrix::zeros(n, n);
        for (col, &row) in order.iter().enumerate() {
            p[(row, col)] = c64(1.0, 0.0);
        }
        (order.iter().map(|&k| h0_raw[(k, k)].re).collect::<Vec<_>>(), p)
    } else {
        hermitian_eigen(h0_raw)
    };
    let removed_trace = energies.iter().sum::<f64>() / n as f64;
    let energies: Vec<f64> = energies.iter().map(|a| a - removed_trace).collect();
    let h0 = CMatrix::from_diagonal(&DVector::from_iterator(n, energies.iter().map(|&a| c64(a, 0.0))));
    let h1 = frame.adjoint() * h1_raw * &frame;
    let h1 = (&h1 + h1.adjoint()) * c64(0.5, 0.0);

    let mut transitions = Vec::with_capacity(n * (n - 1) / 2);
    for k in 0..n {
        for l in k + 1..n {
            let b = h1[(k, l)];
            transitions.push(Transition { pair: (k, l), omega: energies[l] - energies[k], alpha: b.re, beta: b.im });
        }
    }

    let w_scale = transitions.iter().map(|t| t.omega.abs()).fold(1.0, f64::max);
    let w_tol = options.gap_tol * w_scale;
    let nonzero = transitions.iter().all(|t| t.omega.abs() > w_tol);
    let distinct = transitions.iter().enumerate().all(|(i, a)| {
        transitions[i + 1..].iter().all(|b| (a.omega.abs() - b.omega.abs()).abs() > w_tol)
    });
    let strongly_regular = nonzero && distinct;

    let h1_norm = hs_norm(&h1);
    let fully_connected =
        h1_norm > 0.0 && transitions.iter().all(|t| t.coupling().norm() > options.coupling_tol * h1_norm);

    Ok(HamiltonianPair {
        h0,
        h1,
        energies,
        frame,
        removed_trace,
        transitions,
        options,
        strongly_regular,
        fully_connected,
        ideal: strongly_regular && fully_connected,
    })
}

impl HamiltonianPair {
    pub fn n(&self) -> usize {
        self.h0.nrows()
    }

    /// Diagonal, trace-free `H0` in the internal frame.
    pub fn h0(&self) -> &CMatrix {
        &self.h0
    }

    pub fn h1(&self) -> &CMatrix {
        &self.h1
    }

    /// `a_1 >= ... >= a_n`, trace removed.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Unitary whose columns are the `H0` eigenvectors in the caller's frame.
    pub fn frame(&self) -> &CMatrix {
        &self.frame
    }

    pub fn removed_trace(&self) -> f64 {
        self.removed_trace
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn options(&self) -> ClassifyOptions {
        self.options
    }

    pub fn transition(&self, k: usize, l: usize) -> Option<&Transition> {
        let key = if k < l { (k, l) } else { (l, k) };
        self.transitions.iter().find(|t| t.pair == key)
    }

    /// Map a state from the caller's frame into the `H0` eigenbasis.
    pub fn to_internal(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        rho.conjugate(&self.frame.adjoint())
    }

    pub fn from_internal(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        rho.conjugate(&self.frame)
    }
}

/// Span of the Ad-brackets `B_m = Ad^m_{-iH0}(-iH1)`.
#[derive(Debug, Clone)]
pub struct AdBracketSpan {
    /// `B_0 .. B_{m_max}` as Bloch vectors restricted to the root block.
    pub generators: Vec<RVector>,
    /// Full Bloch vector of `B_0`, including its Cartan part.
    pub b0_full: RVector,
    pub rank: usize,
    /// Rank of `span{B_0..B_m}` restricted to the root block, for each `m`.
    pub rank_history: Vec<usize>,
    pub spans_t: bool,
    pub supported_root_spaces: Vec<(usize, usize)>,
    /// Orthonormal basis of the root-block span.
    pub basis_t: Vec<RVector>,
    /// Orthonormal basis of `span{B_m}` in the full Bloch space.
    pub basis_full: Vec<RVector>,
}

/// Krylov basis of `start` under `op` by Arnoldi with two Gram-Schmidt passes.
/// Each entry of the returned history is the dimension after that many
/// applications of `op`.
fn arnoldi(op: &RMatrix, start: &RVector, steps: usize, rel_tol: f64) -> (Vec<RVector>, Vec<usize>) {
    let mut basis: Vec<RVector> = Vec::new();
    let mut history = Vec::with_capacity(steps + 1);
    let scale = op.norm().max(1.0);
    let n0 = start.norm();
    if n0 > 1e-14 * scale {
        basis.push(start / n0);
    }
    history.push(basis.len());
    let mut stalled = basis.is_empty();
    for _ in 0..steps {
        if !stalled {
            let last = basis.last().expect("non-empty");
            let mut w = op * last;
            let reference = w.norm();
            for _ in 0..2 {
                for q in &basis {
                    let proj = q.dot(&w);
                    w.axpy(-proj, q, 1.0);
                }
            }
            let residual = w.norm();
            if reference > 0.0 && residual > rel_tol * reference && basis.len() < start.len() {
                basis.push(w / residual);
            } else {
                // Krylov space is invariant; nothing new can appear.
                stalled = true;
            }
        }
        history.push(basis.len());
    }
    (basis, history)
}

/// Computes `B_m` by repeated commutators and the rank of their span.
/// `m_max` defaults to `2 (n^2 - n)`.
pub fn ad_bracket_span(
    pair: &HamiltonianPair,
    basis: &SuBasis,
    m_max: Option<usize>,
    rank_tol: f64,
) -> Result<AdBracketSpan> {
    let n = pair.n();
    if basis.n() != n {
        return Err(Error::DimensionMismatch { expected: n, found: basis.n() });
    }
    let root = basis.root_dim();
    let m_max = m_max.unwrap_or(2 * root);
    let minus_i = c64(0.0, -1.0);
    let gen0 = pair.h0() * minus_i;

    let mut current = pair.h1() * minus_i;
    let b0_full = basis.to_bloch_anti_hermitian(&current)?;
    let mut generators = Vec::with_capacity(m_max + 1);
    generators.push(b0_full.rows(0, root).into_owned());
    for _ in 0..m_max {
        current = commutator(&gen0, &current);
        generators.push(basis.to_bloch_anti_hermitian(&current)?.rows(0, root).into_owned());
    }

    let a0 = basis.hamiltonian_generator(pair.h0())?;
    let a0_t = a0.view((0, 0), (root, root)).into_owned();
    let (basis_t, rank_history) = arnoldi(&a0_t, &generators[0], m_max, rank_tol);
    let (basis_full, _) = arnoldi(&a0, &b0_full, m_max, rank_tol);
    let rank = basis_t.len();

    let supported_root_spaces = basis
        .pairs()
        .iter()
        .enumerate()
        .filter(|(p, _)| {
            basis_t.iter().any(|q| (q[2 * p] * q[2 * p] + q[2 * p + 1] * q[2 * p + 1]).sqrt() > rank_tol)
        })
        .map(|(_, &kl)| kl)
        .collect();

    Ok(AdBracketSpan {
        generators,
        b0_full,
        rank,
        rank_history,
        spans_t: rank == root,
        supported_root_spaces,
        basis_t,
        basis_full,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MembershipMode {
    /// Necessary and sufficient (strongly regular `H0`).
    Exact,
    /// Only `Tr(B [rho1, rho2]) = 0` for all `B` in the span was checked.
    NecessaryOnly,
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantSetVerdict {
    pub member: bool,
    pub mode: MembershipMode,
    /// Largest violated projection (zero when `member`).
    pub residual: f64,
    /// Bloch vector of the anti-Hermitian commutator `[rho1, rho2]`.
    #[serde(skip)]
    pub commutator: RVector,
}

/// Decides whether `(rho1, rho2)` lies in the LaSalle invariant set.
pub fn in_invariant_set(
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    pair: &HamiltonianPair,
    span: &AdBracketSpan,
    basis: &SuBasis,
    tol: f64,
) -> Result<InvariantSetVerdict> {
    let n = pair.n();
    for m in [rho1.n(), rho2.n(), basis.n()] {
        if m != n {
            return Err(Error::DimensionMismatch { expected: n, found: m });
        }
    }
    let c = basis.to_bloch_anti_hermitian(&commutator(rho1.matrix(), rho2.matrix()))?;

    if pair.strongly_regular {
        // Root-space phases rotate independently, so each supported root space
        // must be annihilated separately; B_0's Cartan part adds one condition.
        let mut residual = 0.0_f64;
        for &(k, l) in &span.supported_root_spaces {
            let slot = basis.pair_slot(k, l).expect("valid pair");
            residual = residual.max((c[slot] * c[slot] + c[slot + 1] * c[slot + 1]).sqrt());
        }
        let root = basis.root_dim();
        let cartan_b0 = span.b0_full.rows(root, n - 1);
        residual = residual.max(cartan_b0.dot(&c.rows(root, n - 1)).abs());
        Ok(InvariantSetVerdict { member: residual < tol, mode: MembershipMode::Exact, residual, commutator: c })
    } else {
        let residual = span.basis_full.iter().map(|q| q.dot(&c).abs()).fold(0.0, f64::max);
        Ok(InvariantSetVerdict { member: residual < tol, mode: MembershipMode::NecessaryOnly, residual, commutator: c })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    pub regular: bool,
    pub rank: usize,
    /// `det` of the first `n^2 - n` rows and last `n^2 - n` columns of `A(s_d)`.
    pub det_tilde_a1: f64,
    /// Screening diagnostic: some diagonal entries of the target coincide.
    pub equal_diagonals: bool,
    /// The rank lemma assumes a generic target; false means the verdict is unsupported.
    pub target_generic: bool,
}

/// Rank test on the first `n^2 - n` rows of the commutator superoperator of
/// the target (internal frame).
pub fn regularity_test(rho_d0: &DensityMatrix, basis: &SuBasis, rank_tol: f64) -> Result<RegularityReport> {
    let n = rho_d0.n();
    if basis.n() != n {
        return Err(Error::DimensionMismatch { expected: basis.n(), found: n });
    }
    let a = basis.commutator_superoperator(rho_d0.matrix())?;
    let root = basis.root_dim();
    let dim = basis.dim();
    let a_tilde = a.rows(0, root).into_owned();
    let rank = numerical_rank(&a_tilde, rank_tol);
    let det_tilde_a1 = a_tilde.columns(dim - root, root).into_owned().determinant();
    let m = rho_d0.matrix();
    let equal_diagonals =
        (0..n).any(|i| (i + 1..n).any(|j| (m[(i, i)].re - m[(j, j)].re).abs() < DEFAULT_MEMBERSHIP_TOL));
    Ok(RegularityReport {
        regular: rank == root,
        rank,
        det_tilde_a1,
        equal_diagonals,
        target_generic: rho_d0.is_generic(GENERIC_GAP_TOL),
    })
}

/// The `s x s` matrix with rows `(1, -omega^2, omega^4, ...)`, one row per
/// transition, `s = n(n-1)/2`.
pub fn omega_vandermonde(pair: &HamiltonianPair) -> RMatrix {
    let s = pair.transitions().len();
    RMatrix::from_fn(s, s, |r, c| (-pair.transitions()[r].omega.powi(2)).powi(c as i32))
}

/// Whether the Vandermonde system has only the trivial solution. Decided from
/// the product form of its determinant, `prod (x_j - x_i)` over nodes
/// `x = -omega^2`, with each factor normalized by `|omega_i| + |omega_j|`, so
/// the verdict uses the same tolerance as [`classify`].
pub fn vandermonde_independence_check(pair: &HamiltonianPair) -> bool {
    let t = pair.transitions();
    let w_scale = t.iter().map(|x| x.omega.abs()).fold(1.0, f64::max);
    let tol = pair.options().gap_tol * w_scale;
    let nonzero = t.iter().all(|x| x.omega.abs() > tol);
    let distinct_nodes = t.iter().enumerate().all(|(i, a)| {
        t[i + 1..].iter().all(|b| {
            let diff = (b.omega.powi(2) - a.omega.powi(2)).abs();
            diff / (a.omega.abs() + b.omega.abs()).max(f64::MIN_POSITIVE) > tol
        })
    });
    nonzero && distinct_nodes
}

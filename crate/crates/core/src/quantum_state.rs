//! Density matrices, spectra and seeded isospectral sampling.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, commutator, ensure_square, hermitian_eigen, hermiticity_defect, hs_norm, CMatrix, C64};

/// Default minimum eigenvalue gap for a spectrum to count as generic.
pub const GENERIC_GAP_TOL: f64 = 1e-8;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;
pub const STATIONARY_TOL: f64 = 1e-10;

/// Eigenvalues `w_1 >= ... >= w_n >= 0` summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    weights: Vec<f64>,
}

impl Spectrum {
    pub fn new(mut weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::InvalidDimension(weights.len()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < -PSD_TOL) {
            return Err(Error::InvalidSpectrum(format!("weight {w} is negative or not finite")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidSpectrum(format!("weights sum to {total}, not 1")));
        }
        weights.sort_by(|a, b| b.total_cmp(a));
        Ok(Spectrum { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    /// Smallest gap between consecutive sorted weights.
    pub fn min_gap(&self) -> f64 {
        self.weights.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min)
    }

    pub fn is_generic(&self, gap_tol: f64) -> bool {
        self.min_gap() > gap_tol
    }
}

/// A validated `n x n` density matrix with its spectrum cached in descending order.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    data: CMatrix,
    spectrum: Vec<f64>,
}

impl DensityMatrix {
    pub fn new(data: CMatrix) -> Result<Self> {
        let n = ensure_square(&data)?;
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        let defect = hermiticity_defect(&data);
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let tr = data.trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidTrace(tr));
        }
        let spectrum = hermitian_eigen(&data).0;
        let min = spectrum[n - 1];
        if min < -PSD_TOL {
            return Err(Error::NotPsd(min));
        }
        Ok(DensityMatrix { data, spectrum })
    }

    pub fn from_diagonal(weights: &[f64]) -> Result<Self> {
        let d = DVector::from_iterator(weights.len(), weights.iter().map(|&w| c64(w, 0.0)));
        Self::new(CMatrix::from_diagonal(&d))
    }

    pub fn maximally_mixed(n: usize) -> Result<Self> {
        Self::new(CMatrix::identity(n, n) * c64(1.0 / n as f64, 0.0))
    }

    /// `|psi><psi|` for a (not necessarily normalized) state vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidParameter("zero state vector".into()));
        }
        let v = DVector::from_iterator(psi.len(), psi.iter().map(|z| z / norm));
        Self::new(&v * v.adjoint())
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        Spectrum::new(self.spectrum.iter().map(|w| w.max(0.0)).collect())
    }

    pub fn min_gap(&self) -> f64 {
        self.spectrum.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min)
    }

    /// True iff every pair of eigenvalues is separated by more than `gap_tol`.
    pub fn is_generic(&self, gap_tol: f64) -> bool {
        self.min_gap() > gap_tol
    }

    /// `U rho U^†`.
    pub fn conjugate(&self, u: &CMatrix) -> Result<Self> {
        let m = u * &self.data * u.adjoint();
        // Restore exact Hermiticity lost to rounding in the products.
        Self::new((&m + m.adjoint()) * c64(0.5, 0.0))
    }

    /// True iff `||[H0, rho]|| < 1e-10`.
    pub fn is_stationary(&self, h0: &CMatrix) -> Result<bool> {
        if h0.nrows() != self.n() || h0.ncols() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), found: h0.nrows() });
        }
        Ok(hs_norm(&commutator(h0, &self.data)) < STATIONARY_TOL)
    }

    /// Largest deviation between the sorted spectra of two states.
    pub fn spectrum_distance(&self, other: &DensityMatrix) -> f64 {
        self.spectrum
            .iter()
            .zip(&other.spectrum)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Haar-distributed unitary from the QR decomposition of a complex Ginibre
/// matrix, with the phases of `R`'s diagonal folded back into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let g = CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64(re * scale, im * scale)
    });
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c64(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// `U diag(w) U^†` with `U` Haar-random, drawn from `rng`.
pub fn random_isospectral_with<R: Rng + ?Sized>(spectrum: &Spectrum, rng: &mut R) -> Result<DensityMatrix> {
    let n = spectrum.n();
    let u = haar_unitary(n, rng);
    let d = CMatrix::from_diagonal(&DVector::from_iterator(n, spectrum.weights().iter().map(|&w| c64(w, 0.0))));
    let m = &u * d * u.adjoint();
    DensityMatrix::new((&m + m.adjoint()) * c64(0.5, 0.0))
}

/// Deterministic per `seed`.
pub fn random_isospectral(spectrum: &Spectrum, seed: u64) -> Result<DensityMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_isospectral_with(spectrum, &mut rng)
}

/// Serialized form `{"n": int, "re": [[...]], "im": [[...]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrixJson {
    pub n: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Vec<Vec<f64>>,
}

impl From<&DensityMatrix> for DensityMatrixJson {
    fn from(rho: &DensityMatrix) -> Self {
        let m = rho.matrix();
        let n = rho.n();
        DensityMatrixJson {
            n,
            re: (0..n).map(|i| (0..n).map(|j| m[(i, j)].re).collect()).collect(),
            im: (0..n).map(|i| (0..n).map(|j| m[(i, j)].im).collect()).collect(),
        }
    }
}

impl TryFrom<&DensityMatrixJson> for DensityMatrix {
    type Error = Error;

    fn try_from(j: &DensityMatrixJson) -> Result<Self> {
        let m = crate::linalg::MatrixJson { re: j.re.clone(), im: j.im.clone() }.to_matrix()?;
        if m.nrows() != j.n || m.ncols() != j.n {
            return Err(Error::DimensionMismatch { expected: j.n, found: m.nrows() });
        }
        DensityMatrix::new(m)
    }
}

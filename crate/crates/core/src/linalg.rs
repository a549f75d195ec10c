//! Small dense linear-algebra helpers shared by the analysis modules.
//!
//! Everything here works on `nalgebra` dynamic matrices; the problem sizes
//! (n <= ~10, Bloch dimension n^2 - 1) make dense storage the right choice.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type RMatrix = DMatrix<f64>;
pub type RVector = DVector<f64>;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Hilbert-Schmidt norm `sqrt(Tr(A^† A))`.
pub fn hs_norm(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = c64(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Largest entry of `|M - M^†|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn ensure_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare(m.nrows(), m.ncols()));
    }
    Ok(m.nrows())
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order. Columns of the returned unitary are the eigenvectors.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    // Symmetrize so tiny rounding asymmetry does not leak into the solver.
    let sym = (m + m.adjoint()) * c64(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    hermitian_eigen(m).0
}

/// `exp(X)` for anti-Hermitian `X`, via the Hermitian matrix `iX`.
pub fn expm_anti_hermitian(x: &CMatrix) -> CMatrix {
    let h = x * c64(0.0, 1.0);
    let (values, vectors) = hermitian_eigen(&h);
    let phases = CMatrix::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|&d| C64::from_polar(1.0, -d)),
    ));
    &vectors * phases * vectors.adjoint()
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(m: &RMatrix, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

/// Eigenvalues of a real square matrix, sorted by real part then imaginary part.
pub fn real_matrix_eigenvalues(m: &RMatrix) -> Vec<C64> {
    let mut ev: Vec<C64> = m.clone().complex_eigenvalues().iter().cloned().collect();
    ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    ev
}

/// Unit right-singular vector belonging to the smallest singular value.
pub fn smallest_singular_vector(m: &CMatrix) -> (f64, DVector<C64>) {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let (idx, smin) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bs), (i, &s)| if s < bs { (i, s) } else { (bi, bs) });
    let v = v_t.row(idx).adjoint().into_owned();
    (smin, v)
}

/// JSON shape `{"re": [[...]], "im": [[...]]}` for complex matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let rows = |f: fn(&C64) -> f64| {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        MatrixJson { re: rows(|z| z.re), im: rows(|z| z.im) }
    }

    /// An empty `im` array means a real matrix.
    pub fn to_matrix(&self) -> Result<CMatrix> {
        let n = self.re.len();
        let cols = self.re.first().map_or(0, Vec::len);
        if self.re.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidParameter("ragged 're' rows".into()));
        }
        if !self.im.is_empty() && (self.im.len() != n || self.im.iter().any(|r| r.len() != cols)) {
            return Err(Error::InvalidParameter("'im' shape does not match 're'".into()));
        }
        Ok(CMatrix::from_fn(n, cols, |i, j| {
            let im = if self.im.is_empty() { 0.0 } else { self.im[i][j] };
            c64(self.re[i][j], im)
        }))
    }
}

//! Generators of su(n) and the real Bloch representation.
//!
//! Coordinates are laid out with the root-space block first: for every pair
//! `k < l` in lexicographic order the `lambda_kl / sqrt(2)` coordinate is
//! followed by the `lambda_bar_kl / sqrt(2)` coordinate, giving `n^2 - n`
//! slots. The `n - 1` Cartan coordinates come last. With this ordering the
//! free generator `A0` restricted to one root pair is exactly
//! `omega_kl * [[0, 1], [-1, 0]]`.
//!
//! The Hermitian Bloch basis is `xi_m = -i sigma_m`, and a Hermitian matrix
//! `M` has coordinates `s_m = Tr(M xi_m)`. Anti-Hermitian matrices are mapped
//! through `-i M` first, so `sigma_m` itself has coordinate vector `e_m`.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{c64, CMatrix, RMatrix, RVector, C64};

#[derive(Debug, Clone)]
pub struct SuBasis {
    n: usize,
    pairs: Vec<(usize, usize)>,
    lambda_cartan: Vec<CMatrix>,
    lambda_root: Vec<(CMatrix, CMatrix)>,
    sigma: Vec<CMatrix>,
    xi: Vec<CMatrix>,
}

fn unit(n: usize, i: usize, j: usize) -> CMatrix {
    let mut e = CMatrix::zeros(n, n);
    e[(i, j)] = c64(1.0, 0.0);
    e
}

impl SuBasis {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        let i = c64(0.0, 1.0);
        let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
        let mut lambda_root = Vec::with_capacity(n * (n - 1) / 2);
        for k in 0..n {
            for l in k + 1..n {
                pairs.push((k, l));
                let sym = (unit(n, k, l) + unit(n, l, k)) * i;
                let anti = unit(n, k, l) - unit(n, l, k);
                lambda_root.push((sym, anti));
            }
        }
        let lambda_cartan: Vec<CMatrix> =
            (0..n - 1).map(|k| (unit(n, k, k) - unit(n, k + 1, k + 1)) * i).collect();

        let mut sigma = Vec::with_capacity(n * n - 1);
        let scale = c64(FRAC_1_SQRT_2, 0.0);
        for (sym, anti) in &lambda_root {
            sigma.push(sym * scale);
            sigma.push(anti * scale);
        }
        for r in 1..n {
            let norm = 1.0 / ((r * (r + 1)) as f64).sqrt();
            let mut d = CMatrix::zeros(n, n);
            for s in 0..r {
                d[(s, s)] = c64(0.0, norm);
            }
            d[(r, r)] = c64(0.0, -(r as f64) * norm);
            sigma.push(d);
        }
        let xi = sigma.iter().map(|s| s * c64(0.0, -1.0)).collect();

        Ok(SuBasis { n, pairs, lambda_cartan, lambda_root, sigma, xi })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Bloch dimension `n^2 - 1`.
    pub fn dim(&self) -> usize {
        self.n * self.n - 1
    }

    /// Dimension of the root block (tangent space of the flag manifold).
    pub fn root_dim(&self) -> usize {
        self.n * self.n - self.n
    }

    /// Root pairs `(k, l)`, zero-based, in coordinate order.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Coordinate of the `lambda_kl` component; `lambda_bar_kl` follows it.
    pub fn pair_slot(&self, k: usize, l: usize) -> Option<usize> {
        let (k, l) = if k < l { (k, l) } else { (l, k) };
        self.pairs.iter().position(|&p| p == (k, l)).map(|p| 2 * p)
    }

    pub fn lambda_cartan(&self) -> &[CMatrix] {
        &self.lambda_cartan
    }

    /// `(lambda_kl, lambda_bar_kl)` for each pair in coordinate order.
    pub fn lambda_root(&self) -> &[(CMatrix, CMatrix)] {
        &self.lambda_root
    }

    pub fn sigma(&self) -> &[CMatrix] {
        &self.sigma
    }

    pub fn xi(&self) -> &[CMatrix] {
        &self.xi
    }

    fn check_matrix(&self, m: &CMatrix) -> Result<()> {
        if m.nrows() != self.n || m.ncols() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: m.nrows().max(m.ncols()) });
        }
        Ok(())
    }

    /// Complex coordinates `Tr(M xi_m)`; real for Hermitian `M`.
    fn coordinates(&self, m: &CMatrix) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.dim());
        for &(k, l) in &self.pairs {
            let (a, b) = (m[(k, l)], m[(l, k)]);
            out.push((a + b) * FRAC_1_SQRT_2);
            out.push((a - b) * c64(0.0, FRAC_1_SQRT_2));
        }
        let mut partial = c64(0.0, 0.0);
        for r in 1..self.n {
            partial += m[(r - 1, r - 1)];
            let norm = 1.0 / ((r * (r + 1)) as f64).sqrt();
            out.push((partial - m[(r, r)] * r as f64) * norm);
        }
        out
    }

    /// Bloch vector of a Hermitian matrix; the identity component is dropped.
    pub fn to_bloch(&self, m: &CMatrix) -> Result<RVector> {
        self.check_matrix(m)?;
        Ok(DVector::from_iterator(self.dim(), self.coordinates(m).into_iter().map(|z| z.re)))
    }

    /// Bloch vector of an anti-Hermitian matrix `M`, i.e. of `-i M`.
    pub fn to_bloch_anti_hermitian(&self, m: &CMatrix) -> Result<RVector> {
        self.check_matrix(m)?;
        Ok(DVector::from_iterator(
            self.dim(),
            self.coordinates(m).into_iter().map(|z| (z * c64(0.0, -1.0)).re),
        ))
    }

    /// `sum_m s_m xi_m + (trace / n) I`.
    pub fn from_bloch(&self, s: &RVector, trace: f64) -> Result<CMatrix> {
        if s.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: s.len() });
        }
        let n = self.n;
        let mut m = CMatrix::identity(n, n) * c64(trace / n as f64, 0.0);
        for (p, &(k, l)) in self.pairs.iter().enumerate() {
            let x = s[2 * p] * FRAC_1_SQRT_2;
            let y = s[2 * p + 1] * FRAC_1_SQRT_2;
            m[(k, l)] += c64(x, -y);
            m[(l, k)] += c64(x, y);
        }
        let offset = self.root_dim();
        for r in 1..n {
            let c = s[offset + r - 1] / ((r * (r + 1)) as f64).sqrt();
            for q in 0..r {
                m[(q, q)] += c64(c, 0.0);
            }
            m[(r, r)] -= c64(c * r as f64, 0.0);
        }
        Ok(m)
    }

    /// Real matrix of `rho1 -> -i [rho1, rho2]` in Bloch coordinates, so that
    /// `A(s2) s1` is the Bloch vector of the anti-Hermitian `[rho1, rho2]`.
    pub fn commutator_superoperator(&self, rho2: &CMatrix) -> Result<RMatrix> {
        self.check_matrix(rho2)?;
        let d = self.dim();
        let mut a = RMatrix::zeros(d, d);
        for (k, xi_k) in self.xi.iter().enumerate() {
            let comm = xi_k * rho2 - rho2 * xi_k;
            a.set_column(k, &self.to_bloch_anti_hermitian(&comm)?);
        }
        Ok(a)
    }

    /// Antisymmetric generator of `rho -> -i [H, rho]` in Bloch coordinates:
    /// `A(m, k) = Tr(i H [xi_m, xi_k])`.
    pub fn hamiltonian_generator(&self, h: &CMatrix) -> Result<RMatrix> {
        self.check_matrix(h)?;
        let d = self.dim();
        let mut a = RMatrix::zeros(d, d);
        for (k, xi_k) in self.xi.iter().enumerate() {
            let comm = h * xi_k - xi_k * h;
            a.set_column(k, &self.to_bloch_anti_hermitian(&comm)?);
        }
        Ok(a)
    }
}

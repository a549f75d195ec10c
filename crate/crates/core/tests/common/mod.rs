//! Independent reference implementations used as test oracles. Everything is
//! built from the matrix-unit definitions without calling the library's basis
//! or generator code.
#![allow(dead_code)]

use nalgebra::DVector;
use qlyap_core::linalg::{CMatrix, RMatrix, RVector, C64 as C};

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn unit(n: usize, k: usize, l: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    m[(k, l)] = c(1.0, 0.0);
    m
}

/// `lambda_kl = i(e_kl + e_lk)`.
pub fn lambda(n: usize, k: usize, l: usize) -> CMatrix {
    (unit(n, k, l) + unit(n, l, k)) * c(0.0, 1.0)
}

/// `lambda_bar_kl = e_kl - e_lk`.
pub fn lambda_bar(n: usize, k: usize, l: usize) -> CMatrix {
    unit(n, k, l) - unit(n, l, k)
}

/// `lambda_k = i(e_kk - e_{k+1,k+1})`.
pub fn lambda_cartan(n: usize, k: usize) -> CMatrix {
    (unit(n, k, k) - unit(n, k + 1, k + 1)) * c(0.0, 1.0)
}

/// Orthonormal anti-Hermitian basis: per pair `(k < l)` in lexicographic
/// order `lambda/sqrt2, lambda_bar/sqrt2`, then the normalized Cartan elements.
pub fn sigma(n: usize) -> Vec<CMatrix> {
    let r2 = std::f64::consts::SQRT_2;
    let mut out = Vec::new();
    for k in 0..n {
        for l in k + 1..n {
            out.push(lambda(n, k, l) / c(r2, 0.0));
            out.push(lambda_bar(n, k, l) / c(r2, 0.0));
        }
    }
    for r in 1..n {
        let mut m = CMatrix::zeros(n, n);
        for s in 0..r {
            m[(s, s)] = c(1.0, 0.0);
        }
        m[(r, r)] = c(-(r as f64), 0.0);
        out.push(m * c(0.0, 1.0 / ((r * (r + 1)) as f64).sqrt()));
    }
    out
}

pub fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|k| (k + 1..n).map(move |l| (k, l))).collect()
}

fn tr(m: &CMatrix) -> C {
    m.trace()
}

/// `s_m = Tr(rho xi_m)` with `xi = -i sigma`.
pub fn bloch(rho: &CMatrix) -> RVector {
    let n = rho.nrows();
    let s = sigma(n);
    RVector::from_iterator(s.len(), s.iter().map(|sg| tr(&(rho * sg * c(0.0, -1.0))).re))
}

/// Coefficients of an anti-Hermitian `X = sum c_m sigma_m`.
pub fn coords_anti(x: &CMatrix) -> RVector {
    let s = sigma(x.nrows());
    RVector::from_iterator(s.len(), s.iter().map(|sg| -tr(&(sg * x)).re))
}

pub fn from_bloch(s: &RVector, n: usize) -> CMatrix {
    let mut rho = CMatrix::identity(n, n) / c(n as f64, 0.0);
    for (v, sg) in s.iter().zip(sigma(n)) {
        rho += sg * c(0.0, -*v);
    }
    rho
}

pub fn comm(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Matrix-form closed-loop field mapped to Bloch coordinates:
/// `rho' = -i[H0 + f H1, rho]`, `f = kappa Tr([-i H1, rho] rho_d)`.
pub fn field(h0: &CMatrix, h1: &CMatrix, kappa: f64, s: &RVector, sd: &RVector) -> RVector {
    let n = h0.nrows();
    let rho = from_bloch(s, n);
    let rd = from_bloch(sd, n);
    let f = kappa * tr(&(comm(&(h1 * c(0.0, -1.0)), &rho) * &rd)).re;
    let h = h0 + h1 * c(f, 0.0);
    bloch(&(comm(&h, &rho) * c(0.0, -1.0)))
}

pub fn fd_jacobian(h0: &CMatrix, h1: &CMatrix, kappa: f64, s: &RVector, sd: &RVector, eps: f64) -> RMatrix {
    let d = s.len();
    let mut j = RMatrix::zeros(d, d);
    for k in 0..d {
        let mut p = s.clone();
        let mut m = s.clone();
        p[k] += eps;
        m[k] -= eps;
        j.set_column(k, &((field(h0, h1, kappa, &p, sd) - field(h0, h1, kappa, &m, sd)) / (2.0 * eps)));
    }
    j
}

/// Taylor series; adequate for small `||x||`.
pub fn expm_taylor(x: &CMatrix) -> CMatrix {
    let n = x.nrows();
    let mut term = CMatrix::identity(n, n);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * x / c(k as f64, 0.0);
        sum += &term;
    }
    sum
}

pub fn diag(w: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_iterator(w.len(), w.iter().map(|&x| c(x, 0.0))))
}

pub fn rank(m: &RMatrix, rel_tol: f64) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&x| x > rel_tol * max).count()
}

/// Root-block rank of `X -> [X, rho_d]` over the full basis.
pub fn regularity_rank(rho_d: &CMatrix) -> usize {
    let n = rho_d.nrows();
    let root = n * n - n;
    let s = sigma(n);
    let mut m = RMatrix::zeros(root, s.len());
    for (k, sg) in s.iter().enumerate() {
        let xi = sg * c(0.0, -1.0);
        let col = coords_anti(&comm(&xi, rho_d));
        for r in 0..root {
            m[(r, k)] = col[r];
        }
    }
    rank(&m, 1e-9)
}

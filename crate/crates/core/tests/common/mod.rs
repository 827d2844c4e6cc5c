//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library's numerical code paths.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
}

pub fn pauli_z() -> CMat {
    CMat::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)])
}

/// `op` on `qubit` of an `n`-qubit register, qubit `q` being bit `q` of the
/// basis index (so qubit 0 is the rightmost Kronecker factor).
pub fn embed(op: &CMat, qubit: usize, n: usize) -> CMat {
    let mut out = CMat::identity(1, 1);
    for q in (0..n).rev() {
        let factor = if q == qubit { op.clone() } else { CMat::identity(2, 2) };
        out = out.kronecker(&factor);
    }
    out
}

/// `exp(-i·h·t)` by scaling and squaring a Taylor series.
pub fn expm_i(h: &CMat, t: f64) -> CMat {
    let a = h.map(|x| x * Complex64::new(0.0, -t));
    let norm: f64 = a.iter().map(|x| x.norm()).sum::<f64>().max(1e-300);
    let squarings = (norm.log2().ceil().max(0.0) as u32) + 4;
    let scaled = a.map(|x| x / f64::from(1u32 << squarings));
    let dim = h.nrows();
    let mut term = CMat::identity(dim, dim);
    let mut sum = CMat::identity(dim, dim);
    for k in 1..30 {
        term = &term * &scaled / c(k as f64);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

pub fn uniform(n: usize) -> CVec {
    let dim = 1usize << n;
    CVec::from_element(dim, c(1.0 / (dim as f64).sqrt()))
}

pub fn basis(n: usize, index: usize) -> CVec {
    let mut v = CVec::zeros(1 << n);
    v[index] = c(1.0);
    v
}

/// `⟨ψ|Z_q|ψ⟩` via the dense operator.
pub fn expect(op: &CMat, psi: &CVec) -> f64 {
    (psi.adjoint() * op * psi)[(0, 0)].re
}

/// `tr(ρ·op)`.
pub fn expect_rho(op: &CMat, rho: &CMat) -> f64 {
    (rho * op).trace().re
}

/// Sorted eigenvalues of a Hermitian matrix via the real symmetric embedding
/// `[[Re, -Im], [Im, Re]]`, whose spectrum is each eigenvalue twice.
pub fn hermitian_eigenvalues(h: &CMat) -> Vec<f64> {
    let n = h.nrows();
    let mut real = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            real[(i, j)] = z.re;
            real[(i + n, j + n)] = z.re;
            real[(i, j + n)] = -z.im;
            real[(i + n, j)] = z.im;
        }
    }
    let mut ev: Vec<f64> = real.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev.into_iter().step_by(2).collect()
}

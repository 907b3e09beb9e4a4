//! Dense complex linear algebra for small matrices.
//!
//! Everything here targets side lengths up to a few dozen: the states in this
//! crate live in 4- or 9-dimensional Hilbert spaces, and the largest matrix
//! ever diagonalized is the 27x27 curvature matrix used by tomography.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Maximum element-wise deviation from Hermiticity tolerated by the eigensolver.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Cyclic sweeps allowed before the Jacobi solver gives up.
pub const MAX_JACOBI_SWEEPS: usize = 100;

/// Off-diagonal Frobenius mass (relative to the matrix norm, floored at 1)
/// below which Jacobi iteration stops.
pub const JACOBI_TOL: f64 = 1e-14;

/// Largest side length accepted by the eigensolver.
pub const MAX_SIDE: usize = 64;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// Builds a matrix from real rows; handy for hand-written fixtures.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(n * m);
        for r in rows {
            if r.len() != m {
                return Err(Error::DimensionMismatch("ragged rows".into()));
            }
            data.extend(r.iter().map(|&x| C64::new(x, 0.0)));
        }
        Self::new(n, m, data)
    }

    /// The projector |v><v|.
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest element-wise modulus of `self - other`; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// max |A_ij - conj(A_ji)|.
    pub fn hermiticity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// (A + A†)/2.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * 0.5
        })
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// U A U†.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        u.matmul(self).matmul(&u.adjoint())
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "mul_vec shape mismatch");
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// <v|A|v>.
    pub fn quadratic_form(&self, v: &[C64]) -> C64 {
        let av = self.mul_vec(v);
        v.iter().zip(&av).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        Self::from_fn(rows, cols, |i, j| {
            self[(i / other.rows, j / other.cols)] * other[(i % other.rows, j % other.cols)]
        })
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

/// Tensor product of two matrices.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Real eigenvalues in descending order.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in the same order.
    pub eigenvectors: ComplexMatrix,
}

impl Spectrum {
    /// V diag(f(λ)) V†.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let values: Vec<f64> = self.eigenvalues.iter().map(|&x| f(x)).collect();
        self.with_eigenvalues(&values)
    }

    /// V diag(values) V†, `values` in the order of the stored eigenvectors.
    pub fn with_eigenvalues(&self, values: &[f64]) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .filter(|&k| values[k] != 0.0)
                .map(|k| v[(i, k)] * v[(j, k)].conj() * values[k])
                .sum()
        })
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_eigenvalues(|x| x)
    }
}

fn check_hermitian_input(a: &ComplexMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::NonSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if a.rows() > MAX_SIDE {
        return Err(Error::DimensionMismatch(format!(
            "side {} exceeds the supported maximum {MAX_SIDE}",
            a.rows()
        )));
    }
    let dev = a.hermiticity_deviation();
    if dev > HERMITIAN_TOL || !dev.is_finite() {
        return Err(Error::NotHermitian(dev));
    }
    Ok(())
}

/// Cyclic complex Jacobi. Works in place on `a`; accumulates rotations into
/// `v` when given.
fn jacobi_in_place(a: &mut ComplexMatrix, mut v: Option<&mut ComplexMatrix>) -> Result<()> {
    let n = a.rows();
    let scale = a.frobenius_norm().max(1.0);
    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += 2.0 * a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() < JACOBI_TOL * scale {
            return Ok(());
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag < f64::MIN_POSITIVE {
                    continue;
                }
                let phase = apq / mag;
                let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
                let t = if theta.is_infinite() {
                    0.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                let e_minus = phase.conj();
                let e_plus = phase;

                // A <- A J, J = [[c, s], [-s e^{-i phi}, c e^{-i phi}]] on (p, q)
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * cs - akq * e_minus * sn;
                    a[(k, q)] = akp * sn + akq * e_minus * cs;
                }
                // A <- J† A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * cs - aqk * e_plus * sn;
                    a[(q, k)] = apk * sn + aqk * e_plus * cs;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

                if let Some(v) = v.as_deref_mut() {
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = vkp * cs - vkq * e_minus * sn;
                        v[(k, q)] = vkp * sn + vkq * e_minus * cs;
                    }
                }
            }
        }
    }
    Err(Error::DidNotConverge(MAX_JACOBI_SWEEPS))
}

/// Eigenvalues and eigenvectors of a Hermitian matrix, eigenvalues descending.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<Spectrum> {
    check_hermitian_input(a)?;
    let n = a.rows();
    let mut work = a.hermitian_part();
    let mut vecs = ComplexMatrix::identity(n);
    jacobi_in_place(&mut work, Some(&mut vecs))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| work[(j, j)].re.total_cmp(&work[(i, i)].re));
    let eigenvalues = order.iter().map(|&i| work[(i, i)].re).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| vecs[(i, order[j])]);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues only (descending); skips eigenvector accumulation.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>> {
    check_hermitian_input(a)?;
    let n = a.rows();
    let mut work = a.hermitian_part();
    jacobi_in_place(&mut work, None)?;
    let mut vals: Vec<f64> = (0..n).map(|i| work[(i, i)].re).collect();
    vals.sort_by(|x, y| y.total_cmp(x));
    Ok(vals)
}

/// Schatten 1-norm. With `hermitian_hint` the input is diagonalized directly
/// and |eigenvalues| are summed; otherwise singular values come from A†A.
pub fn trace_norm(a: &ComplexMatrix, hermitian_hint: bool) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::NonSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if hermitian_hint {
        Ok(hermitian_eigenvalues(a)?.iter().map(|x| x.abs()).sum())
    } else {
        let gram = a.adjoint().matmul(a).hermitian_part();
        Ok(hermitian_eigenvalues(&gram)?
            .iter()
            .map(|&x| x.max(0.0).sqrt())
            .sum())
    }
}

/// Principal square root of a positive semidefinite matrix (negative
/// eigenvalues are clipped to zero).
pub fn psd_sqrt(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(hermitian_eig(a)?.map_eigenvalues(|x| x.max(0.0).sqrt()))
}

/// Uhlmann fidelity (Tr sqrt(sqrt(a) b sqrt(a)))^2 between PSD matrices.
pub fn fidelity_matrices(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    let sa = psd_sqrt(a)?;
    let inner = sa.matmul(b).matmul(&sa).hermitian_part();
    let root_sum: f64 = hermitian_eigenvalues(&inner)?
        .iter()
        .map(|&x| x.max(0.0).sqrt())
        .sum();
    Ok((root_sum * root_sum).clamp(0.0, 1.0))
}

//! Density matrices with subsystem structure, and the bipartite operations
//! built on them (partial trace, partial transpose, entropy).

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, hermitian_eigenvalues, ComplexMatrix, Spectrum, C64};

/// Tolerance on unit trace.
pub const TRACE_TOL: f64 = 1e-12;

/// Numerical PSD tolerance: eigenvalues down to `-PSD_TOL` are clipped,
/// anything more negative is rejected.
pub const PSD_TOL: f64 = 1e-10;

/// Negative eigenvalues smaller in magnitude than this are round-off and left alone.
const CLIP_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    dims: Vec<usize>,
}

impl DensityMatrix {
    /// Validates and, when slightly non-PSD, repairs a candidate state.
    pub fn new(matrix: ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NonSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        let total: usize = dims.iter().product();
        if dims.is_empty() || total != matrix.rows() {
            return Err(Error::DimensionMismatch(format!(
                "dims {dims:?} do not match side {}",
                matrix.rows()
            )));
        }
        let dev = matrix.hermiticity_deviation();
        if dev > crate::linalg::HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr} is not 1")));
        }
        let spec = hermitian_eig(&matrix)?;
        let min = spec.eigenvalues.last().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "minimum eigenvalue {min:e} below -{PSD_TOL:e}"
            )));
        }
        let matrix = if min < -CLIP_FLOOR {
            let clipped = spec.map_eigenvalues(|x| x.max(0.0));
            let t = clipped.trace().re;
            clipped.scale_real(1.0 / t)
        } else {
            matrix.hermitian_part()
        };
        Ok(Self { matrix, dims })
    }

    /// For states that are valid by construction (exact formulas, unitary
    /// conjugation, dephasing). Checked in debug builds only.
    pub(crate) fn from_trusted(matrix: ComplexMatrix, dims: Vec<usize>) -> Self {
        debug_assert!(matrix.is_square());
        debug_assert_eq!(dims.iter().product::<usize>(), matrix.rows());
        debug_assert!(matrix.hermiticity_deviation() < 1e-9);
        debug_assert!((matrix.trace().re - 1.0).abs() < 1e-9);
        Self { matrix, dims }
    }

    /// Normalized projector onto `state`.
    pub fn pure(state: &[C64], dims: Vec<usize>) -> Result<Self> {
        let norm: f64 = state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidDensityMatrix(
                "zero or non-finite state vector".into(),
            ));
        }
        let v: Vec<C64> = state.iter().map(|z| z / norm).collect();
        Self::new(ComplexMatrix::outer(&v), dims)
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let n: usize = dims.iter().product();
        Self::from_trusted(ComplexMatrix::identity(n).scale_real(1.0 / n as f64), dims)
    }

    /// Diagonal state with the given populations (must sum to 1).
    pub fn diagonal(populations: &[f64], dims: Vec<usize>) -> Result<Self> {
        Self::new(ComplexMatrix::from_real_diagonal(populations), dims)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Total Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        hermitian_eig(&self.matrix)
    }

    /// ρ ⊗ σ, dims concatenated.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self::from_trusted(self.matrix.kron(&other.matrix), dims)
    }

    /// U ρ U† for a unitary `u` of matching size.
    pub fn unitary_conjugate(&self, u: &ComplexMatrix) -> Result<Self> {
        if u.rows() != self.dim() || u.cols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "unitary is {}x{}, state side is {}",
                u.rows(),
                u.cols(),
                self.dim()
            )));
        }
        Ok(Self::from_trusted(
            self.matrix.conjugate_by(u).hermitian_part(),
            self.dims.clone(),
        ))
    }

    pub(crate) fn require_bipartite(&self) -> Result<(usize, usize)> {
        match self.dims.as_slice() {
            [a, b] => Ok((*a, *b)),
            _ => Err(Error::NonBipartite(self.dims.clone())),
        }
    }
}

/// Splits a composite index into per-subsystem digits (first subsystem most significant).
pub(crate) fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = index % d;
        index /= d;
    }
    out
}

pub(crate) fn compose(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

fn check_subsystem(rho: &DensityMatrix, index: usize, min_parts: usize) -> Result<()> {
    let count = rho.dims.len();
    if count < min_parts {
        return Err(Error::NonBipartite(rho.dims.clone()));
    }
    if index >= count {
        return Err(Error::BadSubsystemIndex { index, count });
    }
    Ok(())
}

/// Reduced state of subsystem `keep`; every other subsystem is traced out.
pub fn partial_trace(rho: &DensityMatrix, keep: usize) -> Result<DensityMatrix> {
    check_subsystem(rho, keep, 2)?;
    let dims = rho.dims();
    let dk = dims[keep];
    let n = rho.dim();
    let mut out = ComplexMatrix::zeros(dk, dk);
    for i in 0..n {
        let di = digits(i, dims);
        for j in 0..n {
            let dj = digits(j, dims);
            let traced_equal = di
                .iter()
                .zip(&dj)
                .enumerate()
                .all(|(s, (a, b))| s == keep || a == b);
            if traced_equal {
                out[(di[keep], dj[keep])] += rho.matrix[(i, j)];
            }
        }
    }
    Ok(DensityMatrix::from_trusted(out.hermitian_part(), vec![dk]))
}

/// Transposes the indices of one subsystem. The result is Hermitian with
/// unit trace but generally not positive, so it is returned as a plain matrix.
pub fn partial_transpose(rho: &DensityMatrix, subsystem: usize) -> Result<ComplexMatrix> {
    check_subsystem(rho, subsystem, 2)?;
    let dims = rho.dims();
    let n = rho.dim();
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        let di = digits(i, dims);
        for j in 0..n {
            let dj = digits(j, dims);
            let mut ri = di.clone();
            let mut rj = dj.clone();
            ri[subsystem] = dj[subsystem];
            rj[subsystem] = di[subsystem];
            out[(compose(&ri, dims), compose(&rj, dims))] = rho.matrix[(i, j)];
        }
    }
    Ok(out)
}

/// Entropy in bits of a list of probabilities; entries are clipped to [0, 1]
/// and 0 log 0 is taken as 0.
pub(crate) fn shannon_bits(probs: impl IntoIterator<Item = f64>) -> f64 {
    probs
        .into_iter()
        .map(|p| p.clamp(0.0, 1.0))
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum()
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    Ok(shannon_bits(hermitian_eigenvalues(rho.matrix())?).max(0.0))
}

/// Entropy in bits of a Hermitian PSD matrix with arbitrary trace `t > 0`,
/// evaluated on the normalized matrix.
pub(crate) fn entropy_of_unnormalized(m: &ComplexMatrix, t: f64) -> Result<f64> {
    Ok(shannon_bits(hermitian_eigenvalues(m)?.into_iter().map(|x| x / t)).max(0.0))
}

/// Uhlmann fidelity between two states.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(
            "fidelity of states with different sizes".into(),
        ));
    }
    crate::linalg::fidelity_matrices(a.matrix(), b.matrix())
}

/// Trace distance ½‖a − b‖₁.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(
            "trace distance of states with different sizes".into(),
        ));
    }
    Ok(0.5 * crate::linalg::trace_norm(&(a.matrix() - b.matrix()), true)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn psi00() -> DensityMatrix {
        let s = 1.0 / 3f64.sqrt();
        let mut v = vec![c(0.0, 0.0); 9];
        v[0] = c(s, 0.0);
        v[4] = c(s, 0.0);
        v[8] = c(s, 0.0);
        DensityMatrix::pure(&v, vec![3, 3]).unwrap()
    }

    #[test]
    fn validation_rejects_bad_candidates() {
        let not_unit = ComplexMatrix::from_real_diagonal(&[0.5, 0.4]);
        assert!(matches!(
            DensityMatrix::new(not_unit, vec![2]),
            Err(Error::InvalidDensityMatrix(_))
        ));
        let negative = ComplexMatrix::from_real_diagonal(&[1.1, -0.1]);
        assert!(DensityMatrix::new(negative, vec![2]).is_err());
        let wrong_dims = ComplexMatrix::from_real_diagonal(&[0.5, 0.5]);
        assert!(DensityMatrix::new(wrong_dims, vec![3]).is_err());
    }

    #[test]
    fn validation_clips_tiny_negative_eigenvalues() {
        let m = ComplexMatrix::from_real_diagonal(&[1.0 + 5e-11, -5e-11]);
        let rho = DensityMatrix::new(m, vec![2]).unwrap();
        let ev = rho.spectrum().unwrap().eigenvalues;
        assert!(ev[1] >= 0.0);
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn partial_trace_of_max_entangled_is_maximally_mixed() {
        let red = partial_trace(&psi00(), 0).unwrap();
        let target = ComplexMatrix::identity(3).scale_real(1.0 / 3.0);
        assert!(red.matrix().max_abs_diff(&target) < 1e-15);
        assert_eq!(red.dims(), &[3]);
    }

    #[test]
    fn partial_trace_of_product_returns_factor() {
        let a = DensityMatrix::diagonal(&[0.2, 0.3, 0.5], vec![3]).unwrap();
        let b = DensityMatrix::diagonal(&[0.6, 0.4], vec![2]).unwrap();
        let ab = a.tensor(&b);
        assert!(
            partial_trace(&ab, 0)
                .unwrap()
                .matrix()
                .max_abs_diff(a.matrix())
                < 1e-15
        );
        assert!(
            partial_trace(&ab, 1)
                .unwrap()
                .matrix()
                .max_abs_diff(b.matrix())
                < 1e-15
        );
    }

    #[test]
    fn bad_subsystem_index() {
        assert!(matches!(
            partial_trace(&psi00(), 2),
            Err(Error::BadSubsystemIndex { index: 2, count: 2 })
        ));
        assert!(matches!(
            partial_transpose(&psi00(), 5),
            Err(Error::BadSubsystemIndex { .. })
        ));
        let single = DensityMatrix::maximally_mixed(vec![3]);
        assert!(matches!(
            partial_trace(&single, 0),
            Err(Error::NonBipartite(_))
        ));
    }

    #[test]
    fn partial_transpose_of_diagonal_is_identity_map() {
        let d = DensityMatrix::diagonal(&[0.1, 0.2, 0.3, 0.4], vec![2, 2]).unwrap();
        assert_eq!(&partial_transpose(&d, 1).unwrap(), d.matrix());
    }

    #[test]
    fn partial_transpose_of_max_entangled() {
        let pt = partial_transpose(&psi00(), 1).unwrap();
        let ev = hermitian_eigenvalues(&pt).unwrap();
        let negatives = ev
            .iter()
            .filter(|&&x| (x + 1.0 / 3.0).abs() < 1e-12)
            .count();
        assert_eq!(negatives, 3);
        assert!((crate::linalg::trace_norm(&pt, true).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn partial_transpose_of_product_stays_psd() {
        let a = DensityMatrix::pure(&[c(0.6, 0.0), c(0.0, 0.8)], vec![2]).unwrap();
        let b = DensityMatrix::pure(&[c(0.8, 0.0), c(0.36, 0.48)], vec![2]).unwrap();
        let ab = a.tensor(&b);
        let pt = partial_transpose(&ab, 1).unwrap();
        let expected = a.matrix().kron(&b.matrix().transpose());
        assert!(pt.max_abs_diff(&expected) < 1e-15);
        assert!(hermitian_eigenvalues(&pt)
            .unwrap()
            .iter()
            .all(|&x| x > -1e-12));
    }

    #[test]
    fn entropy_examples() {
        assert!(von_neumann_entropy(&psi00()).unwrap().abs() < 1e-12);
        let mixed = DensityMatrix::maximally_mixed(vec![3]);
        assert!((von_neumann_entropy(&mixed).unwrap() - 3f64.log2()).abs() < 1e-12);
    }
}

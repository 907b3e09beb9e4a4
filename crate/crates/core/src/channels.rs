//! One-sided dephasing and the stretched-exponential coherence schedule.

use serde::{Deserialize, Serialize};

use crate::density::{digits, DensityMatrix};
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::states::{bell_diagonal_qubit, bell_diagonal_qutrit, BellParams2, BellParams3};

/// Electron-spin inhomogeneous dephasing time of the reference sample, in µs.
pub const DEFAULT_T2_STAR_US: f64 = 44.0;
pub const DEFAULT_STRETCH: f64 = 2.0;

/// λ(t) = exp[−(t / T2*)^n], times in µs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DephasingSchedule {
    pub t2_star_us: f64,
    pub stretch: f64,
}

impl Default for DephasingSchedule {
    fn default() -> Self {
        Self {
            t2_star_us: DEFAULT_T2_STAR_US,
            stretch: DEFAULT_STRETCH,
        }
    }
}

impl DephasingSchedule {
    pub fn new(t2_star_us: f64, stretch: f64) -> Result<Self> {
        if !(t2_star_us.is_finite() && t2_star_us > 0.0) {
            return Err(Error::InvalidParams(format!(
                "T2* = {t2_star_us} must be positive"
            )));
        }
        if !(stretch.is_finite() && stretch > 0.0) {
            return Err(Error::InvalidParams(format!(
                "stretch = {stretch} must be positive"
            )));
        }
        Ok(Self {
            t2_star_us,
            stretch,
        })
    }
}

/// Coherence survival factor λ ∈ [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct DephasingLevel(f64);

impl DephasingLevel {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::LambdaOutOfRange(lambda));
        }
        Ok(Self(lambda))
    }

    pub const ONE: Self = Self(1.0);
    pub const ZERO: Self = Self(0.0);

    pub fn value(self) -> f64 {
        self.0
    }

    /// Parametrized time γ = 1 − λ.
    pub fn gamma(self) -> f64 {
        1.0 - self.0
    }
}

pub fn lambda_of_time(t_us: f64, s: &DephasingSchedule) -> Result<DephasingLevel> {
    if t_us.is_nan() || t_us < 0.0 {
        return Err(Error::NegativeTime(t_us));
    }
    Ok(DephasingLevel(
        (-(t_us / s.t2_star_us).powf(s.stretch)).exp(),
    ))
}

/// Inverse of [`lambda_of_time`]; λ = 0 maps to infinity.
pub fn time_of_lambda(lambda: DephasingLevel, s: &DephasingSchedule) -> f64 {
    if lambda.0 == 0.0 {
        return f64::INFINITY;
    }
    s.t2_star_us * (-lambda.0.ln()).powf(1.0 / s.stretch)
}

/// Multiplies element (i, j) by λ^|m_i − m_j|, where m is the level of the
/// dephased subsystem in the composite index.
pub fn dephase_local(
    rho: &DensityMatrix,
    side: usize,
    lambda: DephasingLevel,
) -> Result<DensityMatrix> {
    let dims = rho.dims();
    if side >= dims.len() {
        return Err(Error::BadSubsystemIndex {
            index: side,
            count: dims.len(),
        });
    }
    let l = lambda.value();
    let d = dims[side];
    let powers: Vec<f64> = (0..d).map(|k| l.powi(k as i32)).collect();
    let levels: Vec<usize> = (0..rho.dim()).map(|i| digits(i, dims)[side]).collect();
    let m = rho.matrix();
    let out = ComplexMatrix::from_fn(rho.dim(), rho.dim(), |i, j| {
        m[(i, j)] * powers[levels[i].abs_diff(levels[j])]
    });
    Ok(DensityMatrix::from_trusted(out, dims.to_vec()))
}

/// Dephasing of the first qubit of a two-qubit state.
pub fn dephase_qubit_local(rho: &DensityMatrix, lambda: DephasingLevel) -> Result<DensityMatrix> {
    if rho.dims() != [2, 2] {
        return Err(Error::UnsupportedDims(rho.dims().to_vec()));
    }
    dephase_local(rho, 0, lambda)
}

pub fn dephased_bell_diagonal_qutrit(p: BellParams3, lambda: DephasingLevel) -> DensityMatrix {
    dephase_local(&bell_diagonal_qutrit(p), 0, lambda).expect("two-qutrit state has subsystem 0")
}

pub fn dephased_bell_diagonal_qubit(p: BellParams2, lambda: DephasingLevel) -> DensityMatrix {
    dephase_local(&bell_diagonal_qubit(p), 0, lambda).expect("two-qubit state has subsystem 0")
}

/// Choi matrix of the channel acting on one `d`-level system: (Φ ⊗ id)(Σ|ii⟩⟨jj|).
pub fn choi_matrix(d: usize, lambda: DephasingLevel) -> ComplexMatrix {
    let l = lambda.value();
    ComplexMatrix::from_fn(d * d, d * d, |r, s| {
        let (i, i2) = (r / d, r % d);
        let (j, j2) = (s / d, s % d);
        if i == i2 && j == j2 {
            crate::linalg::c(l.powi(i.abs_diff(j) as i32), 0.0)
        } else {
            crate::linalg::c(0.0, 0.0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, hermitian_eigenvalues};

    #[test]
    fn schedule_values() {
        let s = DephasingSchedule::default();
        assert_eq!(lambda_of_time(0.0, &s).unwrap().value(), 1.0);
        for n in [0.5, 1.0, 2.0, 3.0] {
            let s = DephasingSchedule::new(44.0, n).unwrap();
            assert!((lambda_of_time(44.0, &s).unwrap().value() - (-1f64).exp()).abs() < 1e-15);
        }
        let l = lambda_of_time(23.0, &s).unwrap().value();
        assert!((l - 0.7609).abs() < 1e-4);
        assert!(matches!(
            lambda_of_time(-1.0, &s),
            Err(Error::NegativeTime(_))
        ));
        let back = time_of_lambda(DephasingLevel::new(l).unwrap(), &s);
        assert!((back - 23.0).abs() < 1e-10);
    }

    #[test]
    fn level_range() {
        assert!(DephasingLevel::new(1.2).is_err());
        assert!(DephasingLevel::new(-0.1).is_err());
        assert!(DephasingLevel::new(f64::NAN).is_err());
    }

    #[test]
    fn matches_closed_form_matrix() {
        let p = BellParams3::new(0.3, 0.0, 0.7).unwrap();
        let l = 0.45;
        let rho = dephased_bell_diagonal_qutrit(p, DephasingLevel::new(l).unwrap());
        let m = rho.matrix();
        let (c0, c2) = (0.3 / 3.0, 0.7 / 3.0);
        let expected: [[f64; 9]; 9] = [
            [c0, 0., 0., 0., c0 * l, 0., 0., 0., c0 * l * l],
            [0.; 9],
            [0., 0., c2, c2 * l, 0., 0., 0., c2 * l * l, 0.],
            [0., 0., c2 * l, c2, 0., 0., 0., c2 * l, 0.],
            [c0 * l, 0., 0., 0., c0, 0., 0., 0., c0 * l],
            [0.; 9],
            [0.; 9],
            [0., 0., c2 * l * l, c2 * l, 0., 0., 0., c2, 0.],
            [c0 * l * l, 0., 0., 0., c0 * l, 0., 0., 0., c0],
        ];
        for i in 0..9 {
            for j in 0..9 {
                assert!(
                    (m[(i, j)] - c(expected[i][j], 0.0)).norm() < 1e-15,
                    "({i},{j})"
                );
            }
        }
    }

    #[test]
    fn identity_and_full_dephasing() {
        let p = BellParams3::new(0.2, 0.5, 0.3).unwrap();
        let rho = bell_diagonal_qutrit(p);
        let same = dephase_local(&rho, 0, DephasingLevel::ONE).unwrap();
        assert_eq!(same.matrix(), rho.matrix());
        let flat = dephase_local(&rho, 0, DephasingLevel::ZERO).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                if i / 3 != j / 3 {
                    assert_eq!(flat.matrix()[(i, j)], c(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn qubit_dephasing() {
        let phi0 = bell_diagonal_qubit(BellParams2::new(1.0, 0.0).unwrap());
        let out = dephase_qubit_local(&phi0, DephasingLevel::ZERO).unwrap();
        let expected = ComplexMatrix::from_real_diagonal(&[0.5, 0.0, 0.0, 0.5]);
        assert!(out.matrix().max_abs_diff(&expected) < 1e-15);

        let l = 0.6;
        let rho = dephased_bell_diagonal_qubit(
            BellParams2::from_b0(0.3).unwrap(),
            DephasingLevel::new(l).unwrap(),
        );
        let t = crate::states::pauli_correlations(&rho).unwrap();
        assert!((t[0] - l).abs() < 1e-14);
        assert!((t[1] - 0.4 * l).abs() < 1e-14);
        assert!((t[2] + 0.4).abs() < 1e-14);
    }

    #[test]
    fn choi_is_psd() {
        for l in [0.0, 0.3, 0.77, 1.0] {
            let choi = choi_matrix(3, DephasingLevel::new(l).unwrap());
            let ev = hermitian_eigenvalues(&choi).unwrap();
            assert!(ev.iter().all(|&x| x > -1e-12));
        }
    }

    #[test]
    fn bad_side() {
        let rho = bell_diagonal_qutrit(BellParams3::new(1.0, 0.0, 0.0).unwrap());
        assert!(matches!(
            dephase_local(&rho, 2, DephasingLevel::ONE),
            Err(Error::BadSubsystemIndex { .. })
        ));
    }
}

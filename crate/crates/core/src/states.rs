//! Qutrit and qubit Bell-diagonal families, plus a level-selective pulse
//! simulator for the NV preparation sequence.
//!
//! Composite index convention: `3 * electron + nuclear` (electron is subsystem 0).

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{c, ComplexMatrix, C64};

/// Tolerance on the probability-sum constraint.
pub const PARAM_TOL: f64 = 1e-12;

fn check_probability(name: &str, x: f64) -> Result<()> {
    if !x.is_finite() || !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidParams(format!(
            "{name} = {x} is not in [0, 1]"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellParams3 {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl BellParams3 {
    pub fn new(c0: f64, c1: f64, c2: f64) -> Result<Self> {
        check_probability("c0", c0)?;
        check_probability("c1", c1)?;
        check_probability("c2", c2)?;
        if (c0 + c1 + c2 - 1.0).abs() > PARAM_TOL {
            return Err(Error::InvalidParams(format!(
                "c0 + c1 + c2 = {} is not 1",
                c0 + c1 + c2
            )));
        }
        Ok(Self { c0, c1, c2 })
    }

    /// Fills in `c1 = 1 - c0 - c2`, absorbing round-off up to `PARAM_TOL`.
    pub fn from_c0_c2(c0: f64, c2: f64) -> Result<Self> {
        let mut c1 = 1.0 - c0 - c2;
        if c1 < 0.0 && c1 > -PARAM_TOL {
            c1 = 0.0;
        }
        Self::new(c0, c1, c2)
    }

    pub fn weights(&self) -> [f64; 3] {
        [self.c0, self.c1, self.c2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellParams2 {
    pub b0: f64,
    pub b1: f64,
}

impl BellParams2 {
    pub fn new(b0: f64, b1: f64) -> Result<Self> {
        check_probability("b0", b0)?;
        check_probability("b1", b1)?;
        if (b0 + b1 - 1.0).abs() > PARAM_TOL {
            return Err(Error::InvalidParams(format!(
                "b0 + b1 = {} is not 1",
                b0 + b1
            )));
        }
        Ok(Self { b0, b1 })
    }

    pub fn from_b0(b0: f64) -> Result<Self> {
        Self::new(b0, 1.0 - b0)
    }
}

/// State vector of |Ψ0k⟩ = Σ_j |j, j+k mod 3⟩ / √3.
pub fn max_entangled_qutrit_vector(k: usize) -> Result<Vec<C64>> {
    if k > 2 {
        return Err(Error::BadIndex(k));
    }
    let amp = c(1.0 / 3f64.sqrt(), 0.0);
    let mut v = vec![c(0.0, 0.0); 9];
    for j in 0..3 {
        v[3 * j + (j + k) % 3] = amp;
    }
    Ok(v)
}

pub fn max_entangled_qutrit(k: usize) -> Result<DensityMatrix> {
    let v = max_entangled_qutrit_vector(k)?;
    Ok(DensityMatrix::from_trusted(
        ComplexMatrix::outer(&v),
        vec![3, 3],
    ))
}

/// c0 |Ψ00⟩⟨Ψ00| + c1 |Ψ01⟩⟨Ψ01| + c2 |Ψ02⟩⟨Ψ02|.
pub fn bell_diagonal_qutrit(p: BellParams3) -> DensityMatrix {
    let mut m = ComplexMatrix::zeros(9, 9);
    for (k, w) in p.weights().into_iter().enumerate() {
        for a in 0..3 {
            for b in 0..3 {
                m[(3 * a + (a + k) % 3, 3 * b + (b + k) % 3)] = c(w / 3.0, 0.0);
            }
        }
    }
    DensityMatrix::from_trusted(m, vec![3, 3])
}

/// b0 |Φ0⟩⟨Φ0| + b1 |Φ1⟩⟨Φ1| with |Φ0⟩ = (|00⟩+|11⟩)/√2 and |Φ1⟩ = (|01⟩+|10⟩)/√2.
pub fn bell_diagonal_qubit(p: BellParams2) -> DensityMatrix {
    let h = 0.5;
    let m = ComplexMatrix::from_fn(4, 4, |i, j| {
        let v = match (i, j) {
            (0, 0) | (0, 3) | (3, 0) | (3, 3) => p.b0 * h,
            (1, 1) | (1, 2) | (2, 1) | (2, 2) => p.b1 * h,
            _ => 0.0,
        };
        c(v, 0.0)
    });
    DensityMatrix::from_trusted(m, vec![2, 2])
}

/// The qubit Bell states as vectors, in the convention of [`bell_diagonal_qubit`].
pub fn qubit_bell_vectors() -> [[C64; 4]; 2] {
    let s = c(FRAC_1_SQRT_2, 0.0);
    let z = c(0.0, 0.0);
    [[s, z, z, s], [z, s, s, z]]
}

fn pauli(k: usize) -> ComplexMatrix {
    let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    let data = match k {
        0 => vec![o, z, z, o],
        1 => vec![z, o, o, z],
        2 => vec![z, -i, i, z],
        _ => vec![o, z, z, -o],
    };
    ComplexMatrix::new(2, 2, data).expect("static Pauli matrix")
}

/// Correlation components (⟨σx⊗σx⟩, ⟨σy⊗σy⟩, ⟨σz⊗σz⟩) of a two-qubit state.
pub fn pauli_correlations(rho: &DensityMatrix) -> Result<[f64; 3]> {
    if rho.dims() != [2, 2] {
        return Err(Error::UnsupportedDims(rho.dims().to_vec()));
    }
    let mut out = [0.0; 3];
    for (k, slot) in out.iter_mut().enumerate() {
        let p = pauli(k + 1);
        *slot = rho.matrix().matmul(&p.kron(&p)).trace().re;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RotationAxis {
    X,
    Y,
    MinusY,
}

/// A pulse that rotates the two-level block spanned by composite levels
/// `level_a` and `level_b`, leaving all other levels alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectiveRotation {
    pub level_a: usize,
    pub level_b: usize,
    pub angle: f64,
    pub axis: RotationAxis,
}

impl SelectiveRotation {
    pub fn new(level_a: usize, level_b: usize, angle: f64, axis: RotationAxis) -> Result<Self> {
        if level_a == level_b {
            return Err(Error::BadLevels {
                a: level_a,
                b: level_b,
                dim: 9,
            });
        }
        if !angle.is_finite() {
            return Err(Error::InvalidParams(format!("rotation angle {angle}")));
        }
        Ok(Self {
            level_a,
            level_b,
            angle,
            axis,
        })
    }

    /// Full `dim × dim` unitary: identity outside the block, exp(−i θ σ/2) inside.
    pub fn unitary(&self, dim: usize) -> Result<ComplexMatrix> {
        if self.level_a >= dim || self.level_b >= dim || self.level_a == self.level_b {
            return Err(Error::BadLevels {
                a: self.level_a,
                b: self.level_b,
                dim,
            });
        }
        let (cs, sn) = ((self.angle / 2.0).cos(), (self.angle / 2.0).sin());
        // block ordered (a, b)
        let block = match self.axis {
            RotationAxis::X => [c(cs, 0.0), c(0.0, -sn), c(0.0, -sn), c(cs, 0.0)],
            RotationAxis::Y => [c(cs, 0.0), c(-sn, 0.0), c(sn, 0.0), c(cs, 0.0)],
            RotationAxis::MinusY => [c(cs, 0.0), c(sn, 0.0), c(-sn, 0.0), c(cs, 0.0)],
        };
        let mut u = ComplexMatrix::identity(dim);
        let (a, b) = (self.level_a, self.level_b);
        u[(a, a)] = block[0];
        u[(a, b)] = block[1];
        u[(b, a)] = block[2];
        u[(b, b)] = block[3];
        Ok(u)
    }
}

pub fn apply_selective_rotation(
    rho: &DensityMatrix,
    r: &SelectiveRotation,
) -> Result<DensityMatrix> {
    let u = r.unitary(rho.dim())?;
    rho.unitary_conjugate(&u)
}

/// Per-spin polarization probabilities: electron into level 1, nuclear into level 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizationModel {
    pub p_e: f64,
    pub p_n: f64,
}

impl PolarizationModel {
    pub fn new(p_e: f64, p_n: f64) -> Result<Self> {
        check_probability("p_e", p_e)?;
        check_probability("p_n", p_n)?;
        Ok(Self { p_e, p_n })
    }

    pub fn perfect() -> Self {
        Self { p_e: 1.0, p_n: 1.0 }
    }
}

/// Product of per-spin mixtures; the residual of each spin is split evenly
/// over its two non-target levels.
pub fn polarized_initial_state(m: PolarizationModel) -> DensityMatrix {
    let re = (1.0 - m.p_e) / 2.0;
    let rn = (1.0 - m.p_n) / 2.0;
    let electron = [re, m.p_e, re];
    let nuclear = [m.p_n, rn, rn];
    let diag: Vec<f64> = electron
        .iter()
        .flat_map(|e| nuclear.iter().map(move |n| e * n))
        .collect();
    DensityMatrix::from_trusted(ComplexMatrix::from_real_diagonal(&diag), vec![3, 3])
}

fn level(electron: usize, nuclear: usize) -> usize {
    3 * electron + nuclear
}

/// Removes every coherence between different electron levels (long free evolution).
pub fn dephase_electron_fully(rho: &DensityMatrix) -> DensityMatrix {
    let m = rho.matrix();
    let out = ComplexMatrix::from_fn(9, 9, |i, j| {
        if i / 3 == j / 3 {
            m[(i, j)]
        } else {
            c(0.0, 0.0)
        }
    });
    DensityMatrix::from_trusted(out, vec![3, 3])
}

/// The pulse list of the preparation sequence, grouped by step.
pub fn preparation_pulses(c0: f64) -> [Vec<SelectiveRotation>; 3] {
    let rot = |a, b, angle, axis| SelectiveRotation {
        level_a: a,
        level_b: b,
        angle,
        axis,
    };
    let alpha = 2.0 * c0.clamp(0.0, 1.0).sqrt().acos();
    let theta_third = 2.0 * (1.0f64 / 3.0).sqrt().acos();
    let theta_half = 2.0 * FRAC_1_SQRT_2.acos();
    use RotationAxis::{MinusY, Y};
    [
        vec![rot(level(1, 0), level(2, 0), alpha, Y)],
        vec![
            rot(level(1, 0), level(1, 1), theta_third, Y),
            rot(level(2, 0), level(2, 1), theta_third, Y),
            rot(level(1, 1), level(1, 2), theta_half, Y),
            rot(level(2, 1), level(2, 2), theta_half, Y),
        ],
        vec![
            rot(level(0, 0), level(1, 0), PI, MinusY),
            rot(level(1, 2), level(2, 2), PI, Y),
            rot(level(1, 0), level(2, 0), PI, MinusY),
            rot(level(0, 2), level(1, 2), PI, Y),
        ],
    ]
}

/// Snapshots of the preparation sequence after each step.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparationStages {
    pub polarized: DensityMatrix,
    /// After the MW pulse and the electron dephasing wait.
    pub after_populations: DensityMatrix,
    /// After the four RF pulses and the second wait.
    pub after_nuclear: DensityMatrix,
    pub prepared: DensityMatrix,
}

fn apply_all(rho: DensityMatrix, pulses: &[SelectiveRotation]) -> Result<DensityMatrix> {
    pulses
        .iter()
        .try_fold(rho, |r, p| apply_selective_rotation(&r, p))
}

pub fn preparation_stages(c0: f64, c2: f64, m: PolarizationModel) -> Result<PreparationStages> {
    check_probability("c0", c0)?;
    check_probability("c2", c2)?;
    if (c0 + c2 - 1.0).abs() > PARAM_TOL {
        return Err(Error::InvalidParams(format!(
            "the preparation sequence yields c1 = 0, so c0 + c2 must be 1 (got {})",
            c0 + c2
        )));
    }
    let [step1, step2, step3] = preparation_pulses(c0);
    let polarized = polarized_initial_state(m);
    let after_populations = dephase_electron_fully(&apply_all(polarized.clone(), &step1)?);
    let after_nuclear = dephase_electron_fully(&apply_all(after_populations.clone(), &step2)?);
    let prepared = apply_all(after_nuclear.clone(), &step3)?;
    Ok(PreparationStages {
        polarized,
        after_populations,
        after_nuclear,
        prepared,
    })
}

pub fn prepare_bell_diagonal_circuit(
    c0: f64,
    c2: f64,
    m: PolarizationModel,
) -> Result<DensityMatrix> {
    Ok(preparation_stages(c0, c2, m)?.prepared)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{fidelity, partial_trace};
    use crate::linalg::hermitian_eigenvalues;

    #[test]
    fn psi00_amplitudes() {
        let v = max_entangled_qutrit_vector(0).unwrap();
        let s = 1.0 / 3f64.sqrt();
        for (i, z) in v.iter().enumerate() {
            let expected = if [0, 4, 8].contains(&i) { s } else { 0.0 };
            assert!((z.re - expected).abs() < 1e-15 && z.im == 0.0);
        }
        assert!(matches!(max_entangled_qutrit(3), Err(Error::BadIndex(3))));
    }

    #[test]
    fn bell_projectors_orthonormal() {
        for j in 0..3 {
            for k in 0..3 {
                let pj = max_entangled_qutrit(j).unwrap();
                let pk = max_entangled_qutrit(k).unwrap();
                let ip = pj.matrix().matmul(pk.matrix()).trace().re;
                assert!((ip - if j == k { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
            let red = partial_trace(&max_entangled_qutrit(j).unwrap(), 0).unwrap();
            let third = ComplexMatrix::identity(3).scale_real(1.0 / 3.0);
            assert!(red.matrix().max_abs_diff(&third) < 1e-15);
        }
    }

    #[test]
    fn qutrit_family_spectrum() {
        let p = BellParams3::new(0.3, 0.0, 0.7).unwrap();
        let ev = hermitian_eigenvalues(bell_diagonal_qutrit(p).matrix()).unwrap();
        assert!((ev[0] - 0.7).abs() < 1e-12 && (ev[1] - 0.3).abs() < 1e-12);
        assert!(ev[2..].iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn params_validation() {
        assert!(BellParams3::new(0.5, 0.5, 0.5).is_err());
        assert!(BellParams3::new(-0.1, 0.6, 0.5).is_err());
        assert!(BellParams3::new(f64::NAN, 0.5, 0.5).is_err());
        assert!(BellParams2::new(0.3, 0.6).is_err());
        assert!(BellParams3::from_c0_c2(0.3, 0.7).unwrap().c1 == 0.0);
    }

    #[test]
    fn qubit_family() {
        let even = bell_diagonal_qubit(BellParams2::new(0.5, 0.5).unwrap());
        let t = pauli_correlations(&even).unwrap();
        assert!((t[0] - 1.0).abs() < 1e-15 && t[1].abs() < 1e-15 && t[2].abs() < 1e-15);
        let p = bell_diagonal_qubit(BellParams2::new(0.3, 0.7).unwrap());
        let ev = hermitian_eigenvalues(p.matrix()).unwrap();
        assert!((ev[0] - 0.7).abs() < 1e-14 && (ev[1] - 0.3).abs() < 1e-14);
    }

    #[test]
    fn rotation_basics() {
        let rho = bell_diagonal_qutrit(BellParams3::new(0.2, 0.5, 0.3).unwrap());
        for angle in [0.0, 4.0 * PI] {
            let r = SelectiveRotation::new(1, 5, angle, RotationAxis::X).unwrap();
            let out = apply_selective_rotation(&rho, &r).unwrap();
            assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-14);
        }
        // 2π is −1 on the block only: it flips coherences leaving the block
        let full_turn = SelectiveRotation::new(1, 5, 2.0 * PI, RotationAxis::X).unwrap();
        let flipped = apply_selective_rotation(&rho, &full_turn).unwrap();
        assert!((flipped.matrix()[(1, 5)] - rho.matrix()[(1, 5)]).norm() < 1e-14);
        assert!((flipped.matrix()[(1, 6)] + rho.matrix()[(1, 6)]).norm() < 1e-14);
        let diagonal = polarized_initial_state(PolarizationModel::new(0.9, 0.8).unwrap());
        let same = apply_selective_rotation(&diagonal, &full_turn).unwrap();
        assert!(same.matrix().max_abs_diff(diagonal.matrix()) < 1e-14);
        assert!(SelectiveRotation::new(2, 2, 1.0, RotationAxis::Y).is_err());
        let far = SelectiveRotation::new(0, 9, 1.0, RotationAxis::Y).unwrap();
        assert!(matches!(
            apply_selective_rotation(&rho, &far),
            Err(Error::BadLevels { .. })
        ));
    }

    #[test]
    fn population_transfer_pulse() {
        let mut diag = [0.0; 9];
        diag[3] = 1.0;
        let rho = DensityMatrix::diagonal(&diag, vec![3, 3]).unwrap();
        let r = preparation_pulses(0.3)[0][0];
        let out = apply_selective_rotation(&rho, &r).unwrap();
        assert!((out.matrix()[(3, 3)].re - 0.3).abs() < 1e-14);
        assert!((out.matrix()[(6, 6)].re - 0.7).abs() < 1e-14);
    }

    #[test]
    fn polarization_examples() {
        let perfect = polarized_initial_state(PolarizationModel::perfect());
        assert!((perfect.matrix()[(3, 3)].re - 1.0).abs() < 1e-15);
        let third = polarized_initial_state(PolarizationModel::new(1.0 / 3.0, 1.0 / 3.0).unwrap());
        let mixed = ComplexMatrix::identity(9).scale_real(1.0 / 9.0);
        assert!(third.matrix().max_abs_diff(&mixed) < 1e-15);
        let real = polarized_initial_state(PolarizationModel::new(0.92, 0.98).unwrap());
        assert!((real.matrix()[(3, 3)].re - 0.9016).abs() < 1e-14);
    }

    #[test]
    fn ideal_circuit_reproduces_family() {
        for c0 in [0.0, 0.3, 0.5, 1.0] {
            let st = preparation_stages(c0, 1.0 - c0, PolarizationModel::perfect()).unwrap();
            let target = bell_diagonal_qutrit(BellParams3::from_c0_c2(c0, 1.0 - c0).unwrap());
            assert!(st.prepared.matrix().max_abs_diff(target.matrix()) < 1e-10);

            let mut pops = [0.0; 9];
            pops[3] = c0;
            pops[6] = 1.0 - c0;
            let expect1 = ComplexMatrix::from_real_diagonal(&pops);
            assert!(st.after_populations.matrix().max_abs_diff(&expect1) < 1e-10);

            // uniform nuclear superposition inside each electron level
            let expect2 = ComplexMatrix::from_fn(9, 9, |i, j| {
                let w = match (i / 3, j / 3) {
                    (1, 1) => c0,
                    (2, 2) => 1.0 - c0,
                    _ => 0.0,
                };
                c(w / 3.0, 0.0)
            });
            assert!(st.after_nuclear.matrix().max_abs_diff(&expect2) < 1e-10);
        }
    }

    #[test]
    fn circuit_rejects_nonzero_c1() {
        assert!(matches!(
            prepare_bell_diagonal_circuit(0.3, 0.3, PolarizationModel::perfect()),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn imperfect_polarization_fidelity() {
        let m = PolarizationModel::new(0.92, 0.98).unwrap();
        let out = prepare_bell_diagonal_circuit(0.3, 0.7, m).unwrap();
        let target = bell_diagonal_qutrit(BellParams3::new(0.3, 0.0, 0.7).unwrap());
        let f = fidelity(&out, &target).unwrap();
        assert!((0.93..=0.99).contains(&f), "fidelity {f}");
    }
}

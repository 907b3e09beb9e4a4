//! Simulated readout of two-qutrit family states and maximum-likelihood
//! reconstruction with a triangular (Cholesky-style) parametrization.

use std::f64::consts::FRAC_PI_2;

use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::density::{fidelity, DensityMatrix};
use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_eigenvalues, ComplexMatrix, C64};
use crate::optimize::rng_for;
use crate::states::{RotationAxis, SelectiveRotation};

/// Element pairs (i < j) that can be nonzero for a dephased family state.
pub const COHERENCE_PAIRS: [(usize, usize); 9] = [
    (0, 4),
    (0, 8),
    (4, 8),
    (1, 5),
    (1, 6),
    (5, 6),
    (2, 3),
    (2, 7),
    (3, 7),
];

pub const MAX_ITERATIONS: usize = 5000;
/// Poisson draws are capped at this multiple of the shot count.
pub const COUNT_CAP_FACTOR: u64 = 10;
/// Stop once an accepted step lowers the scaled objective by less than this.
const OBJECTIVE_TOL: f64 = 1e-15;
const ARMIJO: f64 = 1e-4;
/// Consecutive steps below [`OBJECTIVE_TOL`] before stopping.
const STALL_STEPS: usize = 20;
/// Relative conditioning below which targeted elements count as unidentified.
const IDENTIFIABILITY_TOL: f64 = 1e-10;
const PROB_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSetting {
    /// Applied in order before the projective readout.
    pub pre_rotations: Vec<SelectiveRotation>,
    pub projector_level: usize,
}

impl MeasurementSetting {
    /// The vector v with p = v† ρ v, i.e. U† |level⟩ for the rotation product U.
    pub fn readout_vector(&self, dim: usize) -> Result<Vec<C64>> {
        if self.projector_level >= dim {
            return Err(Error::BadIndex(self.projector_level));
        }
        let mut u = ComplexMatrix::identity(dim);
        for r in &self.pre_rotations {
            u = r.unitary(dim)?.matmul(&u);
        }
        let ud = u.adjoint();
        Ok(ud.column(self.projector_level))
    }

    pub fn probability(&self, rho: &DensityMatrix) -> Result<f64> {
        let v = self.readout_vector(rho.dim())?;
        Ok(rho.matrix().quadratic_form(&v).re.clamp(0.0, 1.0))
    }
}

/// The 9 populations plus an X and a Y π/2 readout for every pair in
/// [`COHERENCE_PAIRS`]: 27 settings.
pub fn default_settings(dims: &[usize]) -> Result<Vec<MeasurementSetting>> {
    if dims != [3, 3] {
        return Err(Error::UnsupportedDims(dims.to_vec()));
    }
    let mut out: Vec<MeasurementSetting> = (0..9)
        .map(|k| MeasurementSetting {
            pre_rotations: Vec::new(),
            projector_level: k,
        })
        .collect();
    for (a, b) in COHERENCE_PAIRS {
        for axis in [RotationAxis::X, RotationAxis::Y] {
            out.push(MeasurementSetting {
                pre_rotations: vec![SelectiveRotation::new(a, b, FRAC_PI_2, axis)?],
                projector_level: a,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub setting: MeasurementSetting,
    pub expected_probability: f64,
    /// `None` marks a noiseless record whose frequency is the expected probability.
    pub counts: Option<u64>,
    pub shots: u64,
}

impl MeasurementRecord {
    /// (observed, scale): counts and shots, or (p, 1) for noiseless records.
    fn observed(&self) -> (f64, f64) {
        match self.counts {
            Some(n) => (n as f64, self.shots as f64),
            None => (self.expected_probability, 1.0),
        }
    }
}

pub fn noiseless_records(
    rho: &DensityMatrix,
    settings: &[MeasurementSetting],
) -> Result<Vec<MeasurementRecord>> {
    settings
        .iter()
        .map(|s| {
            Ok(MeasurementRecord {
                setting: s.clone(),
                expected_probability: s.probability(rho)?,
                counts: None,
                shots: 0,
            })
        })
        .collect()
}

/// Poisson counts with mean `shots · p` per setting. `shots = 0` gives
/// noiseless records.
pub fn simulate_counts(
    rho: &DensityMatrix,
    settings: &[MeasurementSetting],
    shots: u64,
    seed: u64,
) -> Result<Vec<MeasurementRecord>> {
    if shots == 0 {
        return noiseless_records(rho, settings);
    }
    let mut rng = rng_for(seed, 0);
    let cap = shots.saturating_mul(COUNT_CAP_FACTOR);
    settings
        .iter()
        .map(|s| {
            let p = s.probability(rho)?;
            let mean = shots as f64 * p;
            let counts = if mean > 0.0 {
                let draw: f64 = Poisson::new(mean)
                    .map_err(|e| Error::InvalidParams(format!("Poisson mean {mean}: {e}")))?
                    .sample(&mut rng);
                (draw as u64).min(cap)
            } else {
                0
            };
            Ok(MeasurementRecord {
                setting: s.clone(),
                expected_probability: p,
                counts: Some(counts),
                shots,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub rho_mle: DensityMatrix,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub fidelity_vs_truth: Option<f64>,
    /// Log-likelihood after each accepted step, starting with the initial point.
    pub likelihood_history: Vec<f64>,
}

impl ReconstructionResult {
    pub fn set_truth(&mut self, truth: &DensityMatrix) -> Result<f64> {
        let f = fidelity(&self.rho_mle, truth)?;
        self.fidelity_vs_truth = Some(f);
        Ok(f)
    }
}

/// Real parameters ↔ lower-triangular T, ρ = T†T / Tr(T†T).
struct Triangular {
    n: usize,
}

impl Triangular {
    fn len(&self) -> usize {
        self.n * self.n
    }

    fn unpack(&self, x: &[f64]) -> ComplexMatrix {
        let n = self.n;
        let mut t = ComplexMatrix::zeros(n, n);
        let mut k = 0;
        for i in 0..n {
            t[(i, i)] = c(x[k], 0.0);
            k += 1;
        }
        for i in 0..n {
            for j in 0..i {
                t[(i, j)] = c(x[k], x[k + 1]);
                k += 2;
            }
        }
        t
    }

    fn pack(&self, t: &ComplexMatrix) -> Vec<f64> {
        let n = self.n;
        let mut x = Vec::with_capacity(self.len());
        for i in 0..n {
            x.push(t[(i, i)].re);
        }
        for i in 0..n {
            for j in 0..i {
                x.push(t[(i, j)].re);
                x.push(t[(i, j)].im);
            }
        }
        x
    }

    fn state(&self, x: &[f64]) -> ComplexMatrix {
        let t = self.unpack(x);
        let m = t.adjoint().matmul(&t);
        let tr = m.trace().re;
        m.scale_real(1.0 / tr)
    }

    /// Lower-triangular T with T†T = ρ: Cholesky of JρJ conjugated back by
    /// the exchange matrix J. A small ridge keeps rank-deficient states usable.
    fn factor(&self, rho: &ComplexMatrix) -> Vec<f64> {
        let n = self.n;
        let ridge = 1e-6;
        let a = ComplexMatrix::from_fn(n, n, |i, j| {
            let v = rho[(n - 1 - i, n - 1 - j)];
            if i == j {
                v + c(ridge, 0.0)
            } else {
                v
            }
        });
        let mut l = ComplexMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            let d = d.max(ridge).sqrt();
            l[(j, j)] = c(d, 0.0);
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / d;
            }
        }
        // ρ ≈ (J L J)(J L J)†, and T = (J L J)† is lower triangular
        let upper = ComplexMatrix::from_fn(n, n, |i, j| l[(n - 1 - i, n - 1 - j)]);
        self.pack(&upper.adjoint())
    }
}

struct Likelihood {
    vectors: Vec<Vec<C64>>,
    observed: Vec<f64>,
    scales: Vec<f64>,
    total_scale: f64,
}

impl Likelihood {
    fn probabilities(&self, rho: &ComplexMatrix) -> Vec<f64> {
        self.vectors
            .iter()
            .map(|v| rho.quadratic_form(v).re)
            .collect()
    }

    /// Σ [n log(N p) − N p].
    fn log_likelihood(&self, rho: &ComplexMatrix) -> f64 {
        self.probabilities(rho)
            .iter()
            .zip(self.observed.iter().zip(&self.scales))
            .map(|(&p, (&n, &s))| {
                let mean = (s * p).max(PROB_FLOOR);
                if n > 0.0 {
                    n * mean.ln() - mean
                } else {
                    -mean
                }
            })
            .sum()
    }

    /// Half-deviance divided by the total scale: zero for a perfect fit.
    fn objective(&self, rho: &ComplexMatrix) -> f64 {
        let total: f64 = self
            .probabilities(rho)
            .iter()
            .zip(self.observed.iter().zip(&self.scales))
            .map(|(&p, (&n, &s))| {
                let mean = (s * p).max(PROB_FLOOR);
                if n > 0.0 {
                    mean - n - n * (mean / n).ln()
                } else {
                    mean
                }
            })
            .sum();
        total / self.total_scale
    }
}

/// Rejects record sets that cannot pin down the family's nonzero elements:
/// the linear map from those 27 real parameters to the record probabilities
/// must be well conditioned.
fn check_identifiable(vectors: &[Vec<C64>]) -> Result<()> {
    let columns = 9 + 2 * COHERENCE_PAIRS.len();
    let rows: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| {
            let mut row: Vec<f64> = (0..9).map(|k| v[k].norm_sqr()).collect();
            for (a, b) in COHERENCE_PAIRS {
                let w = v[a].conj() * v[b];
                row.push(2.0 * w.re);
                row.push(-2.0 * w.im);
            }
            row
        })
        .collect();
    let gram = ComplexMatrix::from_fn(columns, columns, |i, j| {
        c(rows.iter().map(|r| r[i] * r[j]).sum(), 0.0)
    });
    let ev = hermitian_eigenvalues(&gram)?;
    let largest = ev[0];
    let smallest = ev[columns - 1];
    if !(largest > 0.0) || smallest < IDENTIFIABILITY_TOL * largest {
        return Err(Error::InsufficientData(format!(
            "records do not determine every population and family coherence (condition {:.3e})",
            smallest / largest.max(f64::MIN_POSITIVE)
        )));
    }
    Ok(())
}

/// Maximizes the Poisson likelihood over physical states by gradient ascent
/// with central-difference gradients and Armijo backtracking.
pub fn mle_reconstruct(
    records: &[MeasurementRecord],
    dims: &[usize],
    init: Option<&DensityMatrix>,
) -> Result<ReconstructionResult> {
    if dims != [3, 3] {
        return Err(Error::UnsupportedDims(dims.to_vec()));
    }
    let n = 9;
    if records.is_empty() {
        return Err(Error::InsufficientData("no records".into()));
    }
    if let Some(r) = records.iter().find(|r| r.counts.is_some() && r.shots == 0) {
        return Err(Error::InsufficientData(format!(
            "record for level {} has counts but zero shots",
            r.setting.projector_level
        )));
    }
    let vectors: Vec<Vec<C64>> = records
        .iter()
        .map(|r| r.setting.readout_vector(n))
        .collect::<Result<_>>()?;
    check_identifiable(&vectors)?;

    let (observed, scales): (Vec<f64>, Vec<f64>) = records.iter().map(|r| r.observed()).unzip();
    let lik = Likelihood {
        total_scale: scales.iter().sum(),
        vectors,
        observed,
        scales,
    };
    let tri = Triangular { n };
    let mut x = match init {
        Some(rho) => {
            if rho.dim() != n {
                return Err(Error::DimensionMismatch(
                    "initial state has the wrong size".into(),
                ));
            }
            tri.factor(rho.matrix())
        }
        None => tri.pack(&ComplexMatrix::identity(n)),
    };

    let f = |x: &[f64]| lik.objective(&tri.state(x));
    let m = x.len();
    let mut value = f(&x);
    let mut grad = central_gradient(&f, &x);
    let mut history = vec![lik.log_likelihood(&tri.state(&x))];
    // BFGS inverse-Hessian estimate; plain gradient steps stall on nearly
    // pure states where T has tiny singular values
    let mut h = identity_rows(m);
    let mut fresh = true;
    let mut stalled = 0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut dir: Vec<f64> = h.iter().map(|row| -dot(row, &grad)).collect();
        let mut slope = dot(&grad, &dir);
        if !(slope < 0.0) {
            h = identity_rows(m);
            fresh = true;
            dir = grad.iter().map(|g| -g).collect();
            slope = -dot(&grad, &grad);
        }
        if slope == 0.0 {
            converged = true;
            break;
        }
        let mut step = 1.0;
        let accepted = loop {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            let v = f(&trial);
            if v <= value + ARMIJO * step * slope {
                break Some((trial, v));
            }
            step *= 0.5;
            if step < 1e-20 {
                break None;
            }
        };
        let Some((trial, v)) = accepted else {
            if fresh {
                converged = true;
                break;
            }
            h = identity_rows(m);
            fresh = true;
            continue;
        };
        let new_grad = central_gradient(&f, &trial);
        let s_vec: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y_vec: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s_vec, &y_vec);
        if sy > 1e-12 * dot(&s_vec, &s_vec).sqrt() * dot(&y_vec, &y_vec).sqrt() {
            bfgs_update(&mut h, &s_vec, &y_vec, sy);
            fresh = false;
        }
        let improvement = value - v;
        x = trial;
        value = v;
        grad = new_grad;
        history.push(lik.log_likelihood(&tri.state(&x)));
        stalled = if improvement < OBJECTIVE_TOL {
            stalled + 1
        } else {
            0
        };
        if stalled >= STALL_STEPS {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence(MAX_ITERATIONS));
    }

    let rho = tri.state(&x).hermitian_part();
    let rho_mle = DensityMatrix::new(rho, dims.to_vec())?;
    Ok(ReconstructionResult {
        log_likelihood: lik.log_likelihood(rho_mle.matrix()),
        rho_mle,
        iterations,
        fidelity_vs_truth: None,
        likelihood_history: history,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn identity_rows(m: usize) -> Vec<Vec<f64>> {
    (0..m)
        .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ with ρ = 1 / (s·y).
fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let m = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = h.iter().map(|row| dot(row, y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..m {
        for j in 0..m {
            h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

fn central_gradient(f: &impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|k| {
            let h = 1e-6 * (1.0 + x[k].abs());
            probe[k] = x[k] + h;
            let up = f(&probe);
            probe[k] = x[k] - h;
            let down = f(&probe);
            probe[k] = x[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{dephased_bell_diagonal_qutrit, DephasingLevel};
    use crate::states::BellParams3;

    fn family(c0: f64, c2: f64, l: f64) -> DensityMatrix {
        dephased_bell_diagonal_qutrit(
            BellParams3::from_c0_c2(c0, c2).unwrap(),
            DephasingLevel::new(l).unwrap(),
        )
    }

    #[test]
    fn settings_count_and_dims() {
        assert_eq!(default_settings(&[3, 3]).unwrap().len(), 27);
        assert!(matches!(
            default_settings(&[2, 2]),
            Err(Error::UnsupportedDims(_))
        ));
    }

    #[test]
    fn xy_pair_isolates_real_and_imaginary_parts() {
        let settings = default_settings(&[3, 3]).unwrap();
        let (x, y) = (&settings[9], &settings[10]);
        assert_eq!(x.pre_rotations[0].level_a, 0);
        assert_eq!(x.pre_rotations[0].level_b, 4);
        let mut m =
            ComplexMatrix::from_real_diagonal(&[0.5, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0]);
        m[(0, 4)] = c(0.3, 0.2);
        m[(4, 0)] = c(0.3, -0.2);
        let rho = DensityMatrix::new(m, vec![3, 3]).unwrap();
        assert!((x.probability(&rho).unwrap() - (0.5 - 0.2)).abs() < 1e-14);
        assert!((y.probability(&rho).unwrap() - (0.5 - 0.3)).abs() < 1e-14);
    }

    #[test]
    fn populations_recover_diagonal() {
        let rho = DensityMatrix::diagonal(
            &[0.1, 0.05, 0.05, 0.2, 0.1, 0.1, 0.3, 0.05, 0.05],
            vec![3, 3],
        )
        .unwrap();
        let settings = default_settings(&[3, 3]).unwrap();
        let recs = noiseless_records(&rho, &settings[..9]).unwrap();
        for (k, r) in recs.iter().enumerate() {
            assert!((r.expected_probability - rho.matrix()[(k, k)].re).abs() < 1e-15);
        }
    }

    #[test]
    fn counts_are_seeded() {
        let rho = family(0.3, 0.7, 0.6);
        let settings = default_settings(&[3, 3]).unwrap();
        let a = simulate_counts(&rho, &settings, 1000, 1).unwrap();
        let b = simulate_counts(&rho, &settings, 1000, 1).unwrap();
        let d = simulate_counts(&rho, &settings, 1000, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(
            a.iter().map(|r| r.counts).collect::<Vec<_>>(),
            d.iter().map(|r| r.counts).collect::<Vec<_>>()
        );
        for (x, y) in a.iter().zip(&d) {
            assert_eq!(x.expected_probability, y.expected_probability);
        }
    }

    #[test]
    fn noiseless_round_trip() {
        let truth = family(0.3, 0.7, 0.6);
        let recs = simulate_counts(&truth, &default_settings(&[3, 3]).unwrap(), 0, 0).unwrap();
        let mut result = mle_reconstruct(&recs, &[3, 3], None).unwrap();
        let f = result.set_truth(&truth).unwrap();
        assert!(f > 1.0 - 1e-6, "fidelity {f}");
        assert!(result
            .likelihood_history
            .windows(2)
            .all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn too_few_records() {
        let truth = family(0.3, 0.7, 0.6);
        let settings = default_settings(&[3, 3]).unwrap();
        let recs = noiseless_records(&truth, &settings[..9]).unwrap();
        assert!(matches!(
            mle_reconstruct(&recs, &[3, 3], None),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            mle_reconstruct(&[], &[3, 3], None),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn cholesky_initialization() {
        let tri = Triangular { n: 9 };
        let truth = family(0.4, 0.2, 0.8);
        let back = tri.state(&tri.factor(truth.matrix()));
        assert!(back.max_abs_diff(truth.matrix()) < 1e-4);
    }
}

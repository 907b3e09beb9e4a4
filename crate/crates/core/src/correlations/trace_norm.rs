//! Numerical upper bound on trace-norm discord by searching over
//! quantum-classical states.

use crate::density::{digits, DensityMatrix};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, trace_norm, ComplexMatrix};
use crate::optimize::{
    givens_param_count, givens_unitary, nelder_mead, restart_basis, NelderMeadOptions,
};

pub const DEFAULT_RESTARTS: usize = 32;
/// Iteration cap of the block refinement.
pub const INNER_MAX_ITERS: usize = 2000;
/// The block refinement stops once no step longer than this improves the distance.
const INNER_MIN_STEP: f64 = 1e-10;
const OUTER_OPTIONS: NelderMeadOptions = NelderMeadOptions {
    initial_step: 0.3,
    diameter_tol: 1e-7,
    max_evals: 1500,
};

/// σ = Σ_i A_i ⊗ |φ_i⟩⟨φ_i| with |φ_i⟩ on the measured side.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumClassicalState {
    /// Unnormalized PSD blocks on the unmeasured side; traces sum to 1.
    pub block_states: Vec<ComplexMatrix>,
    /// Columns are the measured-side basis vectors.
    pub basis: ComplexMatrix,
    pub measured_side: usize,
}

impl QuantumClassicalState {
    /// Assembles the full state on `dims` (two entries).
    pub fn to_density(&self, dims: &[usize]) -> DensityMatrix {
        let m = self.measured_side;
        let n: usize = dims.iter().product();
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, a) in self.block_states.iter().enumerate() {
            let phi = self.basis.column(k);
            let proj = ComplexMatrix::outer(&phi);
            let term = if m == 1 { a.kron(&proj) } else { proj.kron(a) };
            out = &out + &term;
        }
        DensityMatrix::from_trusted(out.hermitian_part(), dims.to_vec())
    }
}

#[derive(Debug, Clone)]
pub struct NearestQuantumClassical {
    pub distance: f64,
    pub state: QuantumClassicalState,
}

/// Indices of the composite basis grouped by the measured digit, each group
/// ordered by the unmeasured digit.
struct Layout {
    dims: [usize; 2],
    measured: usize,
    groups: Vec<Vec<usize>>,
}

impl Layout {
    fn new(dims: [usize; 2], measured: usize) -> Self {
        let mut groups = vec![Vec::new(); dims[measured]];
        for i in 0..dims[0] * dims[1] {
            groups[digits(i, &dims)[measured]].push(i);
        }
        Self {
            dims,
            measured,
            groups,
        }
    }

    fn side(&self) -> usize {
        self.dims[self.measured]
    }

    /// Lifts a measured-side unitary to the full space.
    fn lift(&self, v: &ComplexMatrix) -> ComplexMatrix {
        let other = ComplexMatrix::identity(self.dims[1 - self.measured]);
        if self.measured == 1 {
            other.kron(v)
        } else {
            v.kron(&other)
        }
    }

    fn block(&self, m: &ComplexMatrix, k: usize) -> ComplexMatrix {
        let g = &self.groups[k];
        ComplexMatrix::from_fn(g.len(), g.len(), |a, b| m[(g[a], g[b])])
    }

    fn pinch(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(m.rows(), m.cols());
        for g in &self.groups {
            for &i in g {
                for &j in g {
                    out[(i, j)] = m[(i, j)];
                }
            }
        }
        out
    }

    fn assemble(&self, blocks: &[ComplexMatrix]) -> ComplexMatrix {
        let n = self.dims[0] * self.dims[1];
        let mut out = ComplexMatrix::zeros(n, n);
        for (g, b) in self.groups.iter().zip(blocks) {
            for (a, &i) in g.iter().enumerate() {
                for (bb, &j) in g.iter().enumerate() {
                    out[(i, j)] = b[(a, bb)];
                }
            }
        }
        out
    }
}

fn bipartite_dims(rho: &DensityMatrix, measured_side: usize) -> Result<[usize; 2]> {
    let (a, b) = rho.require_bipartite()?;
    if measured_side > 1 {
        return Err(Error::BadSubsystemIndex {
            index: measured_side,
            count: 2,
        });
    }
    Ok([a, b])
}

/// Distance from ρ to its own dephasing in the basis `v`: the best
/// quantum-classical state for that basis when blocks are taken as pinched.
fn pinched_distance(layout: &Layout, rho: &ComplexMatrix, v: &ComplexMatrix) -> f64 {
    let rotated = rho.conjugate_by(&layout.lift(&v.adjoint()));
    let off = &rotated - &layout.pinch(&rotated);
    trace_norm(&off, true).unwrap_or(f64::INFINITY)
}

/// Euclidean projection onto {x ≥ 0, Σx = 1}.
fn project_simplex(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (k + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    values.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Projects Hermitian blocks onto PSD blocks with total trace 1.
fn project_blocks(blocks: &[ComplexMatrix]) -> Result<Vec<ComplexMatrix>> {
    let spectra: Vec<_> = blocks.iter().map(hermitian_eig).collect::<Result<_>>()?;
    let all: Vec<f64> = spectra
        .iter()
        .flat_map(|s| s.eigenvalues.iter().copied())
        .collect();
    let projected = project_simplex(&all);
    let mut offset = 0;
    Ok(spectra
        .iter()
        .map(|s| {
            let n = s.eigenvalues.len();
            let m = s.with_eigenvalues(&projected[offset..offset + n]);
            offset += n;
            m
        })
        .collect())
}

/// sign(H) = V sgn(Λ) V†.
fn matrix_sign(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let s = hermitian_eig(h)?;
    let scale = h.max_abs().max(1e-300);
    Ok(s.map_eigenvalues(|x| {
        if x.abs() <= 1e-14 * scale {
            0.0
        } else {
            x.signum()
        }
    }))
}

/// Projected subgradient descent on the blocks for a fixed basis, starting
/// from the pinched blocks. Returns (distance, blocks) in the rotated frame.
fn refine_blocks(layout: &Layout, rotated: &ComplexMatrix) -> Result<(f64, Vec<ComplexMatrix>)> {
    let mut blocks: Vec<ComplexMatrix> = (0..layout.side())
        .map(|k| layout.block(rotated, k))
        .collect();
    let objective = |blocks: &[ComplexMatrix]| -> Result<f64> {
        trace_norm(&(rotated - &layout.assemble(blocks)), true)
    };
    let mut best = objective(&blocks)?;
    let mut step = 0.05;
    for _ in 0..INNER_MAX_ITERS {
        if step < INNER_MIN_STEP || best == 0.0 {
            break;
        }
        let sign = matrix_sign(&(rotated - &layout.assemble(&blocks)))?;
        let trial: Vec<ComplexMatrix> = blocks
            .iter()
            .enumerate()
            .map(|(k, b)| b + &layout.block(&sign, k).scale_real(step))
            .collect();
        let trial = project_blocks(&trial)?;
        let value = objective(&trial)?;
        if value < best {
            best = value;
            blocks = trial;
            step *= 1.5;
        } else {
            step *= 0.5;
        }
    }
    Ok((best, blocks))
}

/// Minimum over quantum-classical σ of ‖ρ − σ‖₁, measured on `measured_side`.
/// This is an upper bound on the true minimum; the first two restarts use the
/// computational and Fourier bases, later ones random bases derived from `seed`.
pub fn nearest_quantum_classical(
    rho: &DensityMatrix,
    measured_side: usize,
    budget: usize,
    seed: u64,
) -> Result<NearestQuantumClassical> {
    let dims = bipartite_dims(rho, measured_side)?;
    if budget == 0 {
        return Err(Error::BudgetZero);
    }
    let layout = Layout::new(dims, measured_side);
    let d = layout.side();
    let m = rho.matrix();

    let mut best_basis = ComplexMatrix::identity(d);
    let mut best_value = f64::INFINITY;
    for r in 0..budget {
        let v0 = restart_basis(d, seed, r);
        let start = pinched_distance(&layout, m, &v0);
        if start < 1e-15 {
            best_basis = v0;
            break;
        }
        let found = nelder_mead(
            |x| pinched_distance(&layout, m, &v0.matmul(&givens_unitary(d, x))),
            &vec![0.0; givens_param_count(d)],
            OUTER_OPTIONS,
        );
        if found.value < best_value {
            best_value = found.value;
            best_basis = v0.matmul(&givens_unitary(d, &found.x));
        }
    }

    let rotated = m.conjugate_by(&layout.lift(&best_basis.adjoint()));
    let (distance, blocks) = refine_blocks(&layout, &rotated)?;
    Ok(NearestQuantumClassical {
        distance: distance.max(0.0),
        state: QuantumClassicalState {
            block_states: blocks,
            basis: best_basis,
            measured_side,
        },
    })
}

pub fn discord_trace_norm_numeric(
    rho: &DensityMatrix,
    measured_side: usize,
    budget: usize,
    seed: u64,
) -> Result<f64> {
    Ok(nearest_quantum_classical(rho, measured_side, budget, seed)?.distance)
}

//! Mutual-information discord with projective measurements on one side.

use crate::density::{
    digits, entropy_of_unnormalized, partial_trace, von_neumann_entropy, DensityMatrix,
};
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::optimize::{
    givens_param_count, givens_unitary, nelder_mead, restart_basis, NelderMeadOptions,
};

pub const DEFAULT_RESTARTS: usize = 64;
/// Measurement on the nuclear (second) subsystem unless told otherwise.
pub const DEFAULT_MEASURED_SIDE: usize = 1;
const OPTIONS: NelderMeadOptions = NelderMeadOptions {
    initial_step: 0.4,
    diameter_tol: 1e-8,
    max_evals: 3000,
};

/// Quantum mutual information I(A:B) in bits.
pub fn mutual_information(rho: &DensityMatrix) -> Result<f64> {
    rho.require_bipartite()?;
    let sa = von_neumann_entropy(&partial_trace(rho, 0)?)?;
    let sb = von_neumann_entropy(&partial_trace(rho, 1)?)?;
    Ok(sa + sb - von_neumann_entropy(rho)?)
}

struct Conditioner {
    dims: [usize; 2],
    measured: usize,
    groups: Vec<Vec<usize>>,
}

impl Conditioner {
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

    /// Σ_k p_k S(ρ_{o|k}) for the measurement basis given by the columns of `v`.
    fn conditional_entropy(&self, rho: &ComplexMatrix, v: &ComplexMatrix) -> f64 {
        let other = ComplexMatrix::identity(self.dims[1 - self.measured]);
        let vd = v.adjoint();
        let w = if self.measured == 1 {
            other.kron(&vd)
        } else {
            vd.kron(&other)
        };
        let rotated = rho.conjugate_by(&w);
        let mut total = 0.0;
        for g in &self.groups {
            let block = ComplexMatrix::from_fn(g.len(), g.len(), |a, b| rotated[(g[a], g[b])]);
            let p = block.trace().re;
            if p > 1e-15 {
                match entropy_of_unnormalized(&block.hermitian_part(), p) {
                    Ok(s) => total += p * s,
                    Err(_) => return f64::INFINITY,
                }
            }
        }
        total
    }
}

/// I(A:B) minus the best classical correlation from a rank-one projective
/// measurement on `measured_side`, in bits, clipped at 0.
pub fn discord_mi(
    rho: &DensityMatrix,
    measured_side: usize,
    budget: usize,
    seed: u64,
) -> Result<f64> {
    let (a, b) = rho.require_bipartite()?;
    if measured_side > 1 {
        return Err(Error::BadSubsystemIndex {
            index: measured_side,
            count: 2,
        });
    }
    if budget == 0 {
        return Err(Error::BudgetZero);
    }
    let dims = [a, b];
    let d = dims[measured_side];
    let cond = Conditioner::new(dims, measured_side);
    let m = rho.matrix();

    let mut best = f64::INFINITY;
    for r in 0..budget {
        let v0 = restart_basis(d, seed, r);
        let found = nelder_mead(
            |x| cond.conditional_entropy(m, &v0.matmul(&givens_unitary(d, x))),
            &vec![0.0; givens_param_count(d)],
            OPTIONS,
        );
        best = best.min(found.value);
    }

    let s_other = von_neumann_entropy(&partial_trace(rho, 1 - measured_side)?)?;
    let classical = s_other - best;
    let value = mutual_information(rho)? - classical;
    Ok(value.max(0.0))
}

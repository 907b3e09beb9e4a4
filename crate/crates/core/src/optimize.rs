//! Derivative-free local search and orthonormal-basis parametrization shared
//! by the discord optimizers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{c, ComplexMatrix, C64};

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub initial_step: f64,
    /// Stop when every vertex is within this distance of the best one.
    pub diameter_tol: f64,
    pub max_evals: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.4,
            diameter_tol: 1e-8,
            max_evals: 4000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

/// Minimizes `f` from `x0` with the adaptive-free textbook Nelder-Mead
/// coefficients (1, 2, 0.5, 0.5).
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    opts: NelderMeadOptions,
) -> Minimum {
    let n = x0.len();
    if n == 0 {
        let value = f(x0);
        return Minimum {
            x: Vec::new(),
            value,
            evals: 1,
        };
    }
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0, &mut evals)));
    for k in 0..n {
        let mut x = x0.to_vec();
        x[k] += opts.initial_step;
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = &simplex[0].0;
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(best)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter < opts.diameter_tol || evals >= opts.max_evals {
            break;
        }

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (cj, xj) in centroid.iter_mut().zip(x) {
                *cj += xj / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(cj, wj)| cj + t * (wj - cj))
                .collect()
        };

        let xr = along(-1.0);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let x = along(-0.5);
            let v = eval(&x, &mut evals);
            (x, v)
        } else {
            let x = along(0.5);
            let v = eval(&x, &mut evals);
            (x, v)
        };
        if fc < simplex[n].1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for (x, v) in simplex.iter_mut().skip(1) {
            for (xj, bj) in x.iter_mut().zip(&x_best) {
                *xj = bj + 0.5 * (*xj - bj);
            }
            *v = eval(x, &mut evals);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Minimum { x, value, evals }
}

/// Number of real parameters of [`givens_unitary`] for dimension `d`.
pub fn givens_param_count(d: usize) -> usize {
    d * (d - 1)
}

/// Product over pairs i < j of complex Givens rotations, each with an angle
/// and a phase. Together with a fixed reference unitary this covers every
/// orthonormal basis up to per-vector phases.
pub fn givens_unitary(d: usize, params: &[f64]) -> ComplexMatrix {
    debug_assert_eq!(params.len(), givens_param_count(d));
    let mut u = ComplexMatrix::identity(d);
    let mut k = 0;
    for i in 0..d {
        for j in i + 1..d {
            let (theta, phi) = (params[k], params[k + 1]);
            k += 2;
            let (cs, sn) = (theta.cos(), theta.sin());
            let e = C64::from_polar(1.0, phi);
            // u <- u · G, G acting on columns i, j
            for r in 0..d {
                let (ui, uj) = (u[(r, i)], u[(r, j)]);
                u[(r, i)] = ui * cs + uj * e * sn;
                u[(r, j)] = -ui * e.conj() * sn + uj * cs;
            }
        }
    }
    u
}

/// Discrete Fourier basis as columns.
pub fn fourier_unitary(d: usize) -> ComplexMatrix {
    let norm = 1.0 / (d as f64).sqrt();
    ComplexMatrix::from_fn(d, d, |j, k| {
        C64::from_polar(norm, 2.0 * std::f64::consts::PI * (j * k) as f64 / d as f64)
    })
}

/// SplitMix64 finalizer; turns (seed, restart) into independent stream seeds.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, index))
}

/// Haar-random unitary by Gram-Schmidt on a complex Gaussian matrix.
pub fn random_unitary(d: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    loop {
        let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
        let mut degenerate = false;
        for _ in 0..d {
            let mut v: Vec<C64> = (0..d)
                .map(|_| c(StandardNormal.sample(rng), StandardNormal.sample(rng)))
                .collect();
            for q in &cols {
                let ip: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= ip * qi;
                }
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-8 {
                degenerate = true;
                break;
            }
            v.iter_mut().for_each(|z| *z /= norm);
            cols.push(v);
        }
        if !degenerate {
            return ComplexMatrix::from_fn(d, d, |r, k| cols[k][r]);
        }
    }
}

/// Starting basis for restart `index`: computational, then Fourier, then random.
pub fn restart_basis(d: usize, seed: u64, index: usize) -> ComplexMatrix {
    match index {
        0 => ComplexMatrix::identity(d),
        1 => fourier_unitary(d),
        _ => random_unitary(d, &mut rng_for(seed, index as u64)),
    }
}

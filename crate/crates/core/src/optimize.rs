//! Least discord over local projective measurements.
//!
//! Bases are parametrized by a product of complex Givens rotations; the
//! search is a multi-start Nelder–Mead over that parameter torus, plus an
//! exhaustive refined grid when the measured part is a qubit.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DiscordError, Result};
use crate::info::{outcome_and_conditional_entropy, BasisFreeEntropies, BranchProjector, MeasurementBasis, TOL_ENTROPY};
use crate::linalg::ComplexMatrix;
use crate::state::DensityOperator;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub seed: u64,
    pub n_starts: usize,
    /// Objective evaluations allowed per start.
    pub max_evals: usize,
    /// Simplex diameter at which a start counts as converged.
    pub tol: f64,
    /// Run the refined `(θ, φ)` grid for qubit targets.
    pub qubit_grid: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_starts: 32,
            max_evals: 2000,
            tol: 1e-9,
            qubit_grid: true,
        }
    }
}

/// Givens-rotation coordinates of a basis on `target`: `d(d−1)/2` angles
/// followed by `d(d−1)/2` phases, pairs `(i, j)` in lexicographic order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisParams {
    pub target: String,
    pub params: Vec<f64>,
}

pub fn param_count(dim: usize) -> usize {
    dim * (dim - 1)
}

fn pairs(dim: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..dim).flat_map(move |i| (i + 1..dim).map(move |j| (i, j)))
}

fn unitary_from_params(dim: usize, params: &[f64]) -> ComplexMatrix {
    let m = dim * (dim - 1) / 2;
    let mut u = ComplexMatrix::identity(dim);
    for (k, (i, j)) in pairs(dim).enumerate() {
        let (s, c) = (0.5 * params[k]).sin_cos();
        let phase = Complex64::from_polar(1.0, params[m + k]);
        // Right-multiply by the rotation acting on columns i and j.
        for r in 0..dim {
            let ui = u[(r, i)];
            let uj = u[(r, j)];
            u[(r, i)] = ui * c + uj * phase * s;
            u[(r, j)] = -ui * phase.conj() * s + uj * c;
        }
    }
    u
}

/// Deterministic map from parameters to an orthonormal basis. For a qubit,
/// `(θ, φ)` gives first column `(cos θ/2, e^{iφ} sin θ/2)`.
pub fn materialize_basis(p: &BasisParams, dim: usize) -> Result<MeasurementBasis> {
    let expected = param_count(dim);
    if p.params.len() != expected {
        return Err(DiscordError::BadParamCount {
            expected,
            got: p.params.len(),
        });
    }
    MeasurementBasis::new(p.target.clone(), unitary_from_params(dim, &p.params))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub minimum: f64,
    pub best_basis: MeasurementBasis,
    pub best_params: BasisParams,
    pub starts_run: usize,
    pub starts_converged: usize,
    pub evaluations: usize,
    pub converged: bool,
}

struct LocalResult {
    x: Vec<f64>,
    value: f64,
    evals: usize,
    converged: bool,
}

/// Plain Nelder–Mead with the standard reflection/expansion/contraction/shrink
/// coefficients (1, 2, ½, ½).
fn nelder_mead<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], step: f64, tol: f64, max_evals: usize) -> LocalResult {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        simplex.push(x);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| f(x)).collect();
    let mut evals = n + 1;
    let mut converged = false;

    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let diameter = simplex[1..]
            .iter()
            .flat_map(|x| x.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if diameter < tol {
            converged = true;
            break;
        }
        if evals >= max_evals {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|x| x[k]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let reflected = along(1.0);
        let f_r = f(&reflected);
        evals += 1;
        if f_r < values[0] {
            let expanded = along(2.0);
            let f_e = f(&expanded);
            evals += 1;
            if f_e < f_r {
                simplex[n] = expanded;
                values[n] = f_e;
            } else {
                simplex[n] = reflected;
                values[n] = f_r;
            }
            continue;
        }
        if f_r < values[n - 1] {
            simplex[n] = reflected;
            values[n] = f_r;
            continue;
        }
        let (contracted, f_c) = if f_r < values[n] {
            let x = along(0.5);
            let v = f(&x);
            (x, v)
        } else {
            let x = along(-0.5);
            let v = f(&x);
            (x, v)
        };
        evals += 1;
        if f_c < values[n].min(f_r) {
            simplex[n] = contracted;
            values[n] = f_c;
            continue;
        }
        for i in 1..=n {
            let shrunk: Vec<f64> = simplex[i]
                .iter()
                .zip(&simplex[0])
                .map(|(x, b)| b + 0.5 * (x - b))
                .collect();
            values[i] = f(&shrunk);
            simplex[i] = shrunk;
        }
        evals += n;
    }
    LocalResult {
        x: simplex.swap_remove(0),
        value: values[0],
        evals,
        converged,
    }
}

const GRID_SIDE: usize = 64;
const REFINE_SIDE: usize = 16;
const REFINEMENTS: usize = 2;

/// Exhaustive `θ ∈ [0, π]`, `φ ∈ [0, 2π)` grid, then two finer grids spanning
/// one coarse cell on either side of the incumbent.
fn qubit_grid<F: Fn(&[f64]) -> f64 + Sync>(f: &F) -> (Vec<f64>, f64, usize) {
    let scan = |theta0: f64, theta_step: f64, phi0: f64, phi_step: f64, side: usize| {
        (0..side * side)
            .into_par_iter()
            .map(|k| {
                let x = vec![theta0 + theta_step * (k / side) as f64, phi0 + phi_step * (k % side) as f64];
                let v = f(&x);
                (x, v)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold((vec![0.0, 0.0], f64::INFINITY), |best, cand| if cand.1 < best.1 { cand } else { best })
    };
    let mut theta_step = PI / (GRID_SIDE - 1) as f64;
    let mut phi_step = 2.0 * PI / GRID_SIDE as f64;
    let (mut best, mut value) = scan(0.0, theta_step, 0.0, phi_step, GRID_SIDE);
    let mut evals = GRID_SIDE * GRID_SIDE;
    for _ in 0..REFINEMENTS {
        let new_theta = 2.0 * theta_step / (REFINE_SIDE - 1) as f64;
        let new_phi = 2.0 * phi_step / (REFINE_SIDE - 1) as f64;
        let (x, v) = scan(best[0] - theta_step, new_theta, best[1] - phi_step, new_phi, REFINE_SIDE);
        evals += REFINE_SIDE * REFINE_SIDE;
        if v < value {
            best = x;
            value = v;
        }
        theta_step = new_theta;
        phi_step = new_phi;
    }
    (best, value, evals)
}

/// Quasi-random start points: a Halton sequence with a seeded random shift,
/// wrapped onto `[0, 2π)`. Start 0 is the computational basis.
fn start_points(n_params: usize, n_starts: usize, seed: u64) -> Vec<Vec<f64>> {
    const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..n_params).map(|_| rng.random::<f64>()).collect();
    let radical_inverse = |mut i: usize, base: u32| {
        let base = base as usize;
        let mut inv = 1.0 / base as f64;
        let mut out = 0.0;
        while i > 0 {
            out += (i % base) as f64 * inv;
            i /= base;
            inv /= base as f64;
        }
        out
    };
    (0..n_starts)
        .map(|s| {
            if s == 0 {
                return vec![0.0; n_params];
            }
            (0..n_params)
                .map(|k| {
                    let u = radical_inverse(s, PRIMES[k % PRIMES.len()]) + shift[k];
                    2.0 * PI * (u - u.floor())
                })
                .collect()
        })
        .collect()
}

/// Outcome of a basis search for an arbitrary objective.
#[derive(Clone, Debug)]
pub struct BasisSearch {
    pub value: f64,
    pub params: BasisParams,
    pub basis: MeasurementBasis,
    pub starts_run: usize,
    pub starts_converged: usize,
    pub evaluations: usize,
}

/// Minimizes `objective` over all rank-1 projective bases of a `dim`-level
/// `target`. Starts run in parallel; the winner is the lowest value, ties
/// going to the lowest start index, so the result depends only on the seed.
pub fn minimize_over_bases<F>(target: &str, dim: usize, objective: F, config: &OptimizerConfig) -> BasisSearch
where
    F: Fn(&MeasurementBasis) -> f64 + Sync,
{
    let n_params = param_count(dim);
    let f = |x: &[f64]| {
        let basis = MeasurementBasis::new(target, unitary_from_params(dim, x)).expect("Givens products are unitary");
        objective(&basis)
    };
    let mut starts = start_points(n_params, config.n_starts.max(1), config.seed);
    let mut grid_evals = 0;
    if dim == 2 && config.qubit_grid {
        let (x, _, evals) = qubit_grid(&f);
        grid_evals = evals;
        starts.push(x);
    }
    let step = if dim == 2 { 0.25 } else { 0.5 };
    let runs: Vec<LocalResult> = starts
        .par_iter()
        .map(|x0| nelder_mead(&f, x0, step, config.tol, config.max_evals))
        .collect();
    let best = runs
        .iter()
        .enumerate()
        .fold(0, |best, (i, r)| if r.value < runs[best].value { i } else { best });
    let params = BasisParams {
        target: target.to_owned(),
        params: runs[best].x.clone(),
    };
    BasisSearch {
        value: runs[best].value,
        basis: materialize_basis(&params, dim).expect("parameter count matches"),
        params,
        starts_run: runs.len(),
        starts_converged: runs.iter().filter(|r| r.converged).count(),
        evaluations: grid_evals + runs.iter().map(|r| r.evals).sum::<usize>(),
    }
}

fn finish(search: BasisSearch, minimum: f64) -> Result<OptimizationResult> {
    let result = OptimizationResult {
        minimum,
        best_basis: search.basis,
        best_params: search.params,
        starts_run: search.starts_run,
        starts_converged: search.starts_converged,
        evaluations: search.evaluations,
        converged: search.starts_converged > 0,
    };
    if result.converged {
        Ok(result)
    } else {
        Err(DiscordError::NoConvergence { best: Box::new(result) })
    }
}

fn bipartite_measured(rho: &DensityOperator, measured: &str) -> Result<usize> {
    if rho.layout().len() != 2 {
        return Err(DiscordError::NotBipartite(rho.layout().len()));
    }
    rho.layout().dim_of(measured)
}

/// `δ̂(S|A) = min_basis [H(A) + H(S|A)]_basis − H(S,A)` with `A = measured`.
pub fn least_discord(rho: &DensityOperator, measured: &str, config: &OptimizerConfig) -> Result<OptimizationResult> {
    let dim = bipartite_measured(rho, measured)?;
    let fixed = BasisFreeEntropies::of(rho, measured)?;
    let projector = BranchProjector::new(rho, measured)?;
    let search = minimize_over_bases(
        measured,
        dim,
        |basis| {
            let (outcome, cond) = outcome_and_conditional_entropy(&projector.project_all(basis));
            fixed.report(outcome, cond).discord
        },
        config,
    );
    let minimum = search.value;
    debug_assert!(minimum >= -TOL_ENTROPY);
    finish(search, minimum)
}

/// `∂̂(S|A) = H(A) + min_basis H(S|A)_basis − H(S,A)` with the pre-measurement
/// marginal entropy `H(A)`; only the conditional term is minimized.
pub fn least_discord_alt(rho: &DensityOperator, measured: &str, config: &OptimizerConfig) -> Result<OptimizationResult> {
    let dim = bipartite_measured(rho, measured)?;
    let fixed = BasisFreeEntropies::of(rho, measured)?;
    let projector = BranchProjector::new(rho, measured)?;
    let search = minimize_over_bases(
        measured,
        dim,
        |basis| outcome_and_conditional_entropy(&projector.project_all(basis)).1,
        config,
    );
    let minimum = fixed.h_a + search.value - fixed.h_joint;
    finish(search, minimum)
}

/// `ϖ(S|A) = δ̂(S|A) − δ̂(A|S)`.
pub fn polarization(rho: &DensityOperator, side_s: &str, side_a: &str, config: &OptimizerConfig) -> Result<f64> {
    let s_given_a = least_discord(rho, side_a, config)?.minimum;
    let a_given_s = least_discord(rho, side_s, config)?.minimum;
    Ok(s_given_a - a_given_s)
}

//! Multi-round conditional measurement protocols.
//!
//! Round `r` measures side `order[r]` in every live branch, choosing the basis
//! per branch (so later bases may depend on earlier outcomes). After each
//! round the residual entropy is the Shannon entropy of the outcome tree plus,
//! for every branch, the sum of the marginal entropies of the unmeasured
//! parts: parts that have not been measured can only be used one at a time.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DiscordError, Result};
use crate::factory::{nested, NestedSpec};
use crate::info::{qubit_vector, shannon_entropy, von_neumann_entropy, BranchProjector, MeasurementBasis, P_FLOOR};
use crate::linalg::ComplexMatrix;
use crate::optimize::{minimize_over_bases, OptimizerConfig};
use crate::state::DensityOperator;

const EXHAUST_TOL: f64 = 1e-6;
const EXHAUSTIVE_MAX_DIM: usize = 16;

#[derive(Clone, Debug)]
pub enum Strategy {
    /// Per-branch basis minimizing that branch's residual entropy.
    Greedy,
    /// One caller-supplied basis per side, used in every branch.
    Fixed(Vec<MeasurementBasis>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BranchChoice {
    /// Outcomes of the earlier rounds leading to this branch.
    pub path: Vec<usize>,
    pub weight: f64,
    pub basis: MeasurementBasis,
    pub outcome_probabilities: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round_index: usize,
    pub side: String,
    pub branches: Vec<BranchChoice>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProtocolTrace {
    #[serde(rename = "kT")]
    pub kt: f64,
    pub total_dimension: usize,
    pub von_neumann_entropy: f64,
    pub rounds: Vec<RoundRecord>,
    /// Entry `r` is the residual after `r` rounds; entry 0 is before any measurement.
    pub accessible_entropy_by_round: Vec<f64>,
    /// `kT (lg d_total − accessible_entropy_by_round[r])`.
    pub work_by_round: Vec<f64>,
    /// Side alternations; one classical message each, no thermodynamic charge.
    pub exchanges: usize,
}

impl ProtocolTrace {
    /// Smallest `r` at which the residual equals the joint entropy within `1e-6`.
    pub fn rounds_to_exhaust(&self) -> Option<usize> {
        self.accessible_entropy_by_round
            .iter()
            .position(|&h| (h - self.von_neumann_entropy).abs() <= EXHAUST_TOL)
    }
}

type Children = Vec<(f64, Option<DensityOperator>)>;

#[derive(Clone, Debug)]
struct Branch {
    path: Vec<usize>,
    weight: f64,
    state: DensityOperator,
}

/// Sum of single-part marginal entropies; zero once nothing is left.
fn local_entropy(rho: &DensityOperator) -> f64 {
    (0..rho.layout().len())
        .map(|p| von_neumann_entropy(&rho.reduce_to_positions(&[p])))
        .sum()
}

fn children_of(projector: &BranchProjector, basis: &MeasurementBasis) -> Children {
    projector
        .project_all(basis)
        .into_iter()
        .map(|(p, block)| {
            let state = (p > P_FLOOR)
                .then(|| DensityOperator::from_trusted(block.scale_real(1.0 / p), projector.rest_layout().clone()));
            (p, state)
        })
        .collect()
}

/// `H({p_k}) + Σ_k p_k · local_entropy(ρ_k)` for measuring one part.
fn branch_residual(projector: &BranchProjector, basis: &MeasurementBasis) -> f64 {
    let children = children_of(projector, basis);
    let probs: Vec<f64> = children.iter().map(|(p, _)| *p).collect();
    shannon_entropy(&probs)
        + children
            .iter()
            .filter_map(|(p, s)| s.as_ref().map(|s| p * local_entropy(s)))
            .sum::<f64>()
}

fn marginal_eigenbasis(rho: &DensityOperator, side: &str) -> Result<MeasurementBasis> {
    let marginal = rho.partial_trace(&[side])?;
    let spectrum = marginal.eigendecompose()?;
    MeasurementBasis::new(side, spectrum.eigenvectors)
}

fn greedy_basis(rho: &DensityOperator, side: &str, config: &OptimizerConfig) -> Result<MeasurementBasis> {
    let projector = BranchProjector::new(rho, side)?;
    let dim = projector.target_dim();
    let search = minimize_over_bases(side, dim, |b| branch_residual(&projector, b), config);
    // The marginal eigenbasis never increases the residual, so it is always a
    // safe fallback when the search lands on something worse.
    let eigen = marginal_eigenbasis(rho, side)?;
    if branch_residual(&projector, &eigen) < search.value {
        Ok(eigen)
    } else {
        Ok(search.basis)
    }
}

fn residual(branches: &[Branch]) -> f64 {
    let weights: Vec<f64> = branches.iter().map(|b| b.weight).collect();
    shannon_entropy(&weights) + branches.iter().map(|b| b.weight * local_entropy(&b.state)).sum::<f64>()
}

fn check_order(rho: &DensityOperator, order: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for side in order {
        rho.layout().position(side)?;
        if !seen.insert(side.as_str()) {
            return Err(DiscordError::DuplicateSide(side.clone()));
        }
    }
    Ok(())
}

pub fn run_protocol(
    rho: &DensityOperator,
    order: &[String],
    strategy: &Strategy,
    kt: f64,
    config: &OptimizerConfig,
) -> Result<ProtocolTrace> {
    check_order(rho, order)?;
    if kt <= 0.0 || !kt.is_finite() {
        return Err(DiscordError::BadParameter(format!("kT must be positive, got {kt}")));
    }
    if let Strategy::Fixed(bases) = strategy {
        if bases.len() != order.len() || bases.iter().zip(order).any(|(b, s)| b.target() != s) {
            return Err(DiscordError::BadParameter(
                "fixed strategy needs one basis per side, in protocol order".into(),
            ));
        }
    }

    let d_total = rho.dim() as f64;
    let mut live = vec![Branch {
        path: Vec::new(),
        weight: 1.0,
        state: rho.clone(),
    }];
    let mut accessible = vec![residual(&live)];
    let mut rounds = Vec::with_capacity(order.len());

    for (r, side) in order.iter().enumerate() {
        let chosen: Vec<(MeasurementBasis, Children)> = live
            .par_iter()
            .map(|branch| -> Result<_> {
                let basis = match strategy {
                    Strategy::Greedy => greedy_basis(&branch.state, side, config)?,
                    Strategy::Fixed(bases) => bases[r].clone(),
                };
                let projector = BranchProjector::new(&branch.state, side)?;
                if basis.dim() != projector.target_dim() {
                    return Err(DiscordError::ShapeMismatch {
                        rows: basis.dim(),
                        cols: basis.dim(),
                        expected: projector.target_dim(),
                    });
                }
                let children = children_of(&projector, &basis);
                Ok((basis, children))
            })
            .collect::<Result<_>>()?;

        let mut record = RoundRecord {
            round_index: r + 1,
            side: side.clone(),
            branches: Vec::with_capacity(live.len()),
        };
        let mut next = Vec::new();
        for (branch, (basis, children)) in live.iter().zip(chosen) {
            record.branches.push(BranchChoice {
                path: branch.path.clone(),
                weight: branch.weight,
                basis,
                outcome_probabilities: children.iter().map(|(p, _)| *p).collect(),
            });
            for (k, (p, state)) in children.into_iter().enumerate() {
                if let Some(state) = state {
                    let mut path = branch.path.clone();
                    path.push(k);
                    next.push(Branch {
                        path,
                        weight: branch.weight * p,
                        state,
                    });
                }
            }
        }
        live = next;
        accessible.push(residual(&live));
        rounds.push(record);
    }

    Ok(ProtocolTrace {
        kt,
        total_dimension: rho.dim(),
        von_neumann_entropy: von_neumann_entropy(rho),
        rounds,
        work_by_round: accessible.iter().map(|h| kt * (d_total.log2() - h)).collect(),
        accessible_entropy_by_round: accessible,
        exchanges: order.len().saturating_sub(1),
    })
}

/// Builds the nested state, runs the greedy protocol over its sides from the
/// top level down, and reports the first round at which the residual reaches
/// the joint entropy.
pub fn rounds_to_exhaust(spec: &NestedSpec, config: &OptimizerConfig) -> Result<usize> {
    let rho = nested(spec)?;
    let trace = run_protocol(&rho, &spec.sides(), &Strategy::Greedy, 1.0, config)?;
    trace.rounds_to_exhaust().ok_or_else(|| DiscordError::NotExhausted {
        excess: trace.accessible_entropy_by_round.last().copied().unwrap_or(f64::NAN) - trace.von_neumann_entropy,
    })
}

/// Qubit bases on a `θ ∈ {0, π/k, …, π}`, `φ ∈ {0, π/k, …}` grid.
pub fn qubit_candidate_bases(side: &str, k: usize) -> Vec<MeasurementBasis> {
    let mut out = Vec::new();
    for i in 0..=k {
        let theta = std::f64::consts::PI * i as f64 / k as f64;
        let phis = if i == 0 || i == k { 1 } else { 2 * k };
        for j in 0..phis {
            let phi = std::f64::consts::PI * j as f64 / k as f64;
            let v = qubit_vector(theta, phi);
            let w = [-v[1].conj(), v[0].conj()];
            let mut m = ComplexMatrix::zeros(2, 2);
            m.set_column(0, &v);
            m.set_column(1, &w);
            out.push(MeasurementBasis::new(side, m).expect("orthonormal by construction"));
        }
    }
    out
}

fn exhaustive(rho: &DensityOperator, order: &[String], grid: usize) -> Result<f64> {
    let Some((side, rest)) = order.split_first() else {
        return Ok(local_entropy(rho));
    };
    let projector = BranchProjector::new(rho, side)?;
    let mut best = f64::INFINITY;
    for basis in qubit_candidate_bases(side, grid) {
        let children = children_of(&projector, &basis);
        let probs: Vec<f64> = children.iter().map(|(p, _)| *p).collect();
        let mut value = shannon_entropy(&probs);
        for (p, state) in &children {
            if let Some(state) = state {
                value += p * exhaustive(state, rest, grid)?;
            }
        }
        best = best.min(value);
    }
    Ok(best)
}

/// Best residual over every strategy tree whose per-branch bases come from
/// [`qubit_candidate_bases`]; qubit sides and total dimension ≤ 16 only.
pub fn exhaustive_residual(rho: &DensityOperator, order: &[String], grid: usize) -> Result<f64> {
    check_order(rho, order)?;
    if rho.dim() > EXHAUSTIVE_MAX_DIM {
        return Err(DiscordError::BadParameter(format!(
            "exhaustive search is limited to total dimension {EXHAUSTIVE_MAX_DIM}"
        )));
    }
    for side in order {
        if rho.layout().dim_of(side)? != 2 {
            return Err(DiscordError::BadParameter(format!("side `{side}` is not a qubit")));
        }
    }
    exhaustive(rho, order, grid.max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factory::{self, staircase};
    use crate::info::accessible_joint_entropy;

    fn order(sides: &[&str]) -> Vec<String> {
        sides.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn classical_mixture_single_round() {
        let mix = factory::classical_mixture("S", "A");
        let t = run_protocol(&mix, &order(&["A"]), &Strategy::Greedy, 1.0, &OptimizerConfig::default()).unwrap();
        assert!((t.accessible_entropy_by_round[1] - 1.0).abs() < 1e-9);
        assert!((t.work_by_round[1] - 1.0).abs() < 1e-9);
        assert_eq!(t.rounds_to_exhaust(), Some(1));
    }

    #[test]
    fn bell_two_rounds_stay_at_one_bit() {
        let bell = factory::bell("S", "A");
        let t = run_protocol(&bell, &order(&["A", "S"]), &Strategy::Greedy, 1.0, &OptimizerConfig::default()).unwrap();
        assert!((t.accessible_entropy_by_round[0] - 2.0).abs() < 1e-9);
        assert!((t.accessible_entropy_by_round[1] - 1.0).abs() < 1e-9);
        assert!((t.accessible_entropy_by_round[2] - 1.0).abs() < 1e-9);
        assert_eq!(t.rounds_to_exhaust(), None);
        let oracle = exhaustive_residual(&bell, &order(&["A", "S"]), 4).unwrap();
        assert!((oracle - 1.0).abs() < 1e-9);
    }

    #[test]
    fn staircase_two_uses_branch_dependent_bases() {
        let rho = nested(&staircase(2).unwrap()).unwrap();
        let t = run_protocol(&rho, &order(&["A", "B"]), &Strategy::Greedy, 1.0, &OptimizerConfig::default()).unwrap();
        let second = &t.rounds[1];
        assert_eq!(second.branches.len(), 2);
        assert!(!second.branches[0].basis.same_projectors(&second.branches[1].basis, 1e-3));
        assert!(second.branches[0]
            .basis
            .same_projectors(&MeasurementBasis::computational("B", 2), 1e-4));
        assert!(second.branches[1].basis.same_projectors(&MeasurementBasis::hadamard("B"), 1e-4));
    }

    #[test]
    fn fixed_bases_cannot_exhaust_the_staircase() {
        let rho = nested(&staircase(2).unwrap()).unwrap();
        let fixed = Strategy::Fixed(vec![
            MeasurementBasis::computational("A", 2),
            MeasurementBasis::computational("B", 2),
        ]);
        let t = run_protocol(&rho, &order(&["A", "B"]), &fixed, 1.0, &OptimizerConfig::default()).unwrap();
        assert!(t.accessible_entropy_by_round[2] - t.von_neumann_entropy > 0.05);
    }

    #[test]
    fn co_diagonal_nesting_exhausts_with_fixed_bases() {
        // Same skeleton, but every level in the computational basis.
        let rho = nested(&staircase(2).unwrap()).unwrap();
        let dephased = crate::info::outsider_state(&rho, &MeasurementBasis::computational("B", 2)).unwrap();
        let dephased = crate::info::outsider_state(&dephased, &MeasurementBasis::computational("S", 2)).unwrap();
        let fixed = Strategy::Fixed(vec![
            MeasurementBasis::computational("A", 2),
            MeasurementBasis::computational("B", 2),
        ]);
        let t = run_protocol(&dephased, &order(&["A", "B"]), &fixed, 1.0, &OptimizerConfig::default()).unwrap();
        assert_eq!(t.rounds_to_exhaust(), Some(2));
    }

    #[test]
    fn one_round_matches_accessible_joint_entropy() {
        let rho = factory::random_density(&[2, 2], 21).relabel(&["S", "A"]).unwrap();
        let t = run_protocol(&rho, &order(&["A"]), &Strategy::Greedy, 1.0, &OptimizerConfig::default()).unwrap();
        let basis = &t.rounds[0].branches[0].basis;
        let direct = accessible_joint_entropy(&rho, basis).unwrap();
        assert!((t.accessible_entropy_by_round[1] - direct).abs() <= 1e-12);
    }

    #[test]
    fn order_errors() {
        let rho = factory::bell("S", "A");
        let config = OptimizerConfig::default();
        assert!(matches!(
            run_protocol(&rho, &order(&["A", "A"]), &Strategy::Greedy, 1.0, &config),
            Err(DiscordError::DuplicateSide(_))
        ));
        assert!(matches!(
            run_protocol(&rho, &order(&["Q"]), &Strategy::Greedy, 1.0, &config),
            Err(DiscordError::UnknownLabel(_))
        ));
    }

    #[test]
    fn candidate_grid_contains_the_standard_bases() {
        let c = qubit_candidate_bases("A", 2);
        assert!(c.iter().any(|b| b.same_projectors(&MeasurementBasis::computational("A", 2), 1e-12)));
        assert!(c.iter().any(|b| b.same_projectors(&MeasurementBasis::hadamard("A"), 1e-12)));
    }
}

//! Constructors for the state families used throughout the toolkit.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{DiscordError, Result};
use crate::info::MeasurementBasis;
use crate::linalg::{orthonormalize_columns, ComplexMatrix, C0, C1};
use crate::state::{DensityOperator, SubsystemLayout, Tolerances};

fn two_qubits(s: &str, a: &str) -> SubsystemLayout {
    SubsystemLayout::qubits(&[s, a]).expect("two distinct non-empty labels")
}

/// `(|00⟩ + |11⟩)/√2` projector.
pub fn bell(s: &str, a: &str) -> DensityOperator {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    DensityOperator::from_trusted(ComplexMatrix::outer(&[h, C0, C0, h], &[h, C0, C0, h]), two_qubits(s, a))
}

/// `(|00⟩⟨00| + |11⟩⟨11|)/2`.
pub fn classical_mixture(s: &str, a: &str) -> DensityOperator {
    DensityOperator::from_trusted(ComplexMatrix::from_real_diagonal(&[0.5, 0.0, 0.0, 0.5]), two_qubits(s, a))
}

/// `(1−z)/4 · 1 + z · bell`.
pub fn werner(z: f64, s: &str, a: &str) -> Result<DensityOperator> {
    if !(0.0..=1.0).contains(&z) {
        return Err(DiscordError::BadParameter(format!("Werner z = {z} is outside [0, 1]")));
    }
    let noise = ComplexMatrix::identity(4).scale_real((1.0 - z) / 4.0);
    let matrix = &noise + &bell(s, a).matrix().scale_real(z);
    Ok(DensityOperator::from_trusted(matrix, two_qubits(s, a)))
}

/// `|i⟩⟨i| ⊗ |j⟩⟨j|` on two qubits.
pub fn product_pure(s: &str, a: &str, i: usize, j: usize) -> DensityOperator {
    let mut m = ComplexMatrix::zeros(4, 4);
    m[(2 * i + j, 2 * i + j)] = C1;
    DensityOperator::from_trusted(m, two_qubits(s, a))
}

fn ginibre(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let mut g = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            g[(i, j)] = Complex64::new(re, im);
        }
    }
    g
}

fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("q{i}")).collect()
}

/// `G G† / Tr` for a complex Ginibre matrix; full rank almost surely.
/// Parts are labelled `q0, q1, …`.
pub fn random_density(dims: &[usize], seed: u64) -> DensityOperator {
    let layout = SubsystemLayout::new(default_labels(dims.len()).into_iter().zip(dims.iter().copied()))
        .expect("dimensions >= 2");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = ginibre(&mut rng, layout.total_dimension());
    let gg = &g * &g.adjoint();
    let trace = gg.trace().re;
    DensityOperator::validate(gg.scale_real(1.0 / trace), layout, &Tolerances::default())
        .expect("Ginibre states are valid")
}

/// Product of independent random factors.
pub fn random_product(dims: &[usize], seed: u64) -> DensityOperator {
    let labels = default_labels(dims.len());
    let mut acc: Option<DensityOperator> = None;
    for (i, (&d, label)) in dims.iter().zip(&labels).enumerate() {
        let factor = random_density(&[d], seed.wrapping_mul(31).wrapping_add(i as u64))
            .relabel(&[label])
            .expect("one label");
        acc = Some(match acc {
            None => factor,
            Some(prev) => prev.tensor_product(&factor).expect("distinct labels"),
        });
    }
    acc.expect("at least one dimension")
}

/// Unitary from the QR (Gram–Schmidt) factor of a Ginibre matrix.
pub fn random_unitary(dim: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut g = ginibre(&mut rng, dim);
        if orthonormalize_columns(&mut g).is_some() {
            return g;
        }
    }
}

pub fn random_basis(target: &str, dim: usize, seed: u64) -> MeasurementBasis {
    MeasurementBasis::new(target, random_unitary(dim, seed)).expect("orthonormalized columns")
}

/// Recursive classical-quantum state: each level measures `side`, and branch
/// `i` holds `p_i |a_i⟩⟨a_i| ⊗ child_i`. The side comes first in the layout,
/// followed by the child layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestedSpec {
    pub side: String,
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub branches: Vec<NestedBranch>,
}

fn default_dim() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestedBranch {
    pub probability: f64,
    pub state: BranchState,
    pub child: NestedChild,
}

/// Branch basis state, as a computational index or an explicit vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BranchState {
    Index { index: usize },
    Vector { re: Vec<f64>, im: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NestedChild {
    Nested(Box<NestedSpec>),
    Leaf(DensityOperator),
}

impl BranchState {
    fn vector(&self, dim: usize) -> Result<Vec<Complex64>> {
        match self {
            Self::Index { index } => {
                if *index >= dim {
                    return Err(DiscordError::BadNestedSpec(format!(
                        "branch index {index} out of range for dimension {dim}"
                    )));
                }
                let mut v = vec![C0; dim];
                v[*index] = C1;
                Ok(v)
            }
            Self::Vector { re, im } => {
                if re.len() != dim || im.len() != dim {
                    return Err(DiscordError::BadNestedSpec(format!(
                        "branch vector has length {}, expected {dim}",
                        re.len().max(im.len())
                    )));
                }
                Ok(re.iter().zip(im).map(|(&r, &i)| Complex64::new(r, i)).collect())
            }
        }
    }

    fn from_vector(v: &[Complex64]) -> Self {
        Self::Vector {
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        }
    }
}

impl NestedSpec {
    /// Measured sides from the top level down (following the first branch).
    pub fn sides(&self) -> Vec<String> {
        let mut sides = vec![self.side.clone()];
        if let Some(NestedChild::Nested(child)) = self.branches.first().map(|b| &b.child) {
            sides.extend(child.sides());
        }
        sides
    }

    pub fn depth(&self) -> usize {
        self.sides().len()
    }
}

/// Builds the state described by a [`NestedSpec`].
pub fn nested(spec: &NestedSpec) -> Result<DensityOperator> {
    let tol = Tolerances::default();
    if spec.branches.is_empty() {
        return Err(DiscordError::BadNestedSpec(format!("level `{}` has no branches", spec.side)));
    }
    if spec.dim < 2 {
        return Err(DiscordError::BadNestedSpec(format!("level `{}` has dimension {}", spec.side, spec.dim)));
    }
    let total: f64 = spec.branches.iter().map(|b| b.probability).sum();
    if (total - 1.0).abs() > tol.trace || spec.branches.iter().any(|b| b.probability < 0.0) {
        return Err(DiscordError::BadProbabilities(total));
    }

    let vectors: Vec<Vec<Complex64>> = spec
        .branches
        .iter()
        .map(|b| b.state.vector(spec.dim))
        .collect::<Result<_>>()?;
    for (i, u) in vectors.iter().enumerate() {
        for (j, v) in vectors.iter().enumerate().skip(i) {
            let overlap: Complex64 = u.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
            let expected = if i == j { C1 } else { C0 };
            if (overlap - expected).norm() > tol.herm {
                return Err(DiscordError::NonOrthogonalBranches);
            }
        }
    }

    let children: Vec<DensityOperator> = spec
        .branches
        .iter()
        .map(|b| match &b.child {
            NestedChild::Nested(child) => nested(child),
            NestedChild::Leaf(rho) => Ok(rho.clone()),
        })
        .collect::<Result<_>>()?;
    let child_layout = children[0].layout().clone();
    if children.iter().any(|c| c.layout() != &child_layout) {
        return Err(DiscordError::BadNestedSpec(format!(
            "children of level `{}` have different layouts",
            spec.side
        )));
    }
    let side_layout = SubsystemLayout::new([(spec.side.clone(), spec.dim)])?;

    let n = spec.dim * child_layout.total_dimension();
    let mut acc = ComplexMatrix::zeros(n, n);
    for ((branch, v), child) in spec.branches.iter().zip(&vectors).zip(&children) {
        let marker = DensityOperator::from_trusted(ComplexMatrix::outer(v, v), side_layout.clone());
        let term = marker.tensor_product(child)?;
        acc = &acc + &term.matrix().scale_real(branch.probability);
    }
    let layout = SubsystemLayout::new(
        std::iter::once((spec.side.clone(), spec.dim)).chain(child_layout.parts().iter().cloned()),
    )
    .map_err(|_| {
        let clash = child_layout.labels().find(|l| *l == spec.side).unwrap_or(&spec.side);
        DiscordError::LabelCollision(clash.to_owned())
    })?;
    DensityOperator::new(acc, layout)
}

pub const STAIRCASE_SIDES: [&str; 4] = ["A", "B", "C", "D"];
pub const STAIRCASE_LEAF: &str = "S";
/// Branch weights below the top level; the top level is an even split.
pub const STAIRCASE_WEIGHTS: [f64; 2] = [0.7, 0.3];

fn staircase_basis(parity: usize) -> [Vec<Complex64>; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    if parity.is_multiple_of(2) {
        [vec![C1, C0], vec![C0, C1]]
    } else {
        [
            vec![Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
            vec![Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
        ]
    }
}

fn staircase_node(level: usize, depth: usize, parity: usize) -> NestedSpec {
    let basis = staircase_basis(parity);
    let weights = if level == 0 { [0.5, 0.5] } else { STAIRCASE_WEIGHTS };
    let leaf_layout = SubsystemLayout::qubits(&[STAIRCASE_LEAF]).expect("leaf label");
    let branches = (0..2)
        .map(|j| {
            let child = if level + 1 == depth {
                let leaf = DensityOperator::from_trusted(ComplexMatrix::outer(&basis[j], &basis[j]), leaf_layout.clone());
                NestedChild::Leaf(leaf)
            } else {
                NestedChild::Nested(Box::new(staircase_node(level + 1, depth, parity + j)))
            };
            NestedBranch {
                probability: weights[j],
                state: if parity.is_multiple_of(2) {
                    BranchState::Index { index: j }
                } else {
                    BranchState::from_vector(&basis[j])
                },
                child,
            }
        })
        .collect();
    NestedSpec {
        side: STAIRCASE_SIDES[level].to_owned(),
        dim: 2,
        branches,
    }
}

/// The `staircase-n` preset: sides `A, B, C, D` (first `n`) above a leaf
/// qubit `S`. A node reached by outcomes with even sum uses the computational
/// basis, odd sum the Hadamard basis, so conditional operators at every
/// level below the first are not co-diagonal. Leaves copy the last level's
/// branch state onto `S`.
pub fn staircase(n: usize) -> Result<NestedSpec> {
    if !(1..=STAIRCASE_SIDES.len()).contains(&n) {
        return Err(DiscordError::BadParameter(format!("staircase depth {n} is outside 1..=4")));
    }
    Ok(staircase_node(0, n, 0))
}

/// Parses a preset name such as `staircase-2`.
pub fn preset(name: &str) -> Result<NestedSpec> {
    name.strip_prefix("staircase-")
        .and_then(|n| n.parse::<usize>().ok())
        .ok_or_else(|| DiscordError::BadParameter(format!("unknown preset `{name}`")))
        .and_then(staircase)
}

//! Entropies, measurement-conditioned states and discord at a fixed basis.
//!
//! All entropies are in bits. Probabilities at or below [`P_FLOOR`] count as
//! exact zeros, both in `p lg p` and when deciding whether a measurement
//! branch carries a state.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DiscordError, Result};
use crate::linalg::{hermitian_eigen, hermitian_eigenvalues, ComplexMatrix, C0, C1};
use crate::state::{DensityOperator, SubsystemLayout, Tolerances};

pub const P_FLOOR: f64 = 1e-12;
pub const TOL_ENTROPY: f64 = 1e-9;

/// Orthonormal rank-1 projective measurement on one subsystem; the columns of
/// `vectors` are the basis states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BasisJson", into = "BasisJson")]
pub struct MeasurementBasis {
    target: String,
    vectors: ComplexMatrix,
}

impl MeasurementBasis {
    pub fn new(target: impl Into<String>, vectors: ComplexMatrix) -> Result<Self> {
        if !vectors.is_square() || vectors.rows() < 2 {
            return Err(DiscordError::ShapeMismatch {
                rows: vectors.rows(),
                cols: vectors.cols(),
                expected: vectors.rows().max(2),
            });
        }
        let deviation = vectors.unitarity_deviation();
        if deviation > Tolerances::default().herm {
            return Err(DiscordError::NotOrthonormal { deviation });
        }
        Ok(Self {
            target: target.into(),
            vectors,
        })
    }

    pub fn computational(target: impl Into<String>, dim: usize) -> Self {
        Self {
            target: target.into(),
            vectors: ComplexMatrix::identity(dim),
        }
    }

    /// Qubit `{|+⟩, |−⟩}`.
    pub fn hadamard(target: impl Into<String>) -> Self {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self {
            target: target.into(),
            vectors: ComplexMatrix::from_vec(2, 2, vec![h, h, h, -h]).expect("2x2"),
        }
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    pub fn vectors(&self) -> &ComplexMatrix {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.vectors.rows()
    }

    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        self.vectors.column(k)
    }

    pub fn retarget(&self, target: impl Into<String>) -> Self {
        Self {
            target: target.into(),
            vectors: self.vectors.clone(),
        }
    }

    /// Projectors `|v_k⟩⟨v_k|`, which are what a measurement physically fixes.
    pub fn projectors(&self) -> Vec<ComplexMatrix> {
        (0..self.dim())
            .map(|k| {
                let v = self.vector(k);
                ComplexMatrix::outer(&v, &v)
            })
            .collect()
    }

    /// Whether both bases define the same set of projectors (any order, any
    /// column phases).
    pub fn same_projectors(&self, other: &Self, tol: f64) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        let mine = self.projectors();
        let mut theirs: Vec<Option<ComplexMatrix>> = other.projectors().into_iter().map(Some).collect();
        mine.iter().all(|p| {
            let hit = theirs
                .iter()
                .position(|q| q.as_ref().is_some_and(|q| q.max_abs_diff(p) <= tol));
            hit.map(|i| theirs[i] = None).is_some()
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct BasisJson {
    target: String,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl TryFrom<BasisJson> for MeasurementBasis {
    type Error = DiscordError;

    fn try_from(json: BasisJson) -> Result<Self> {
        Self::new(json.target, ComplexMatrix::from_parts(&json.re, &json.im)?)
    }
}

impl From<MeasurementBasis> for BasisJson {
    fn from(b: MeasurementBasis) -> Self {
        let (re, im) = b.vectors.to_parts();
        Self {
            target: b.target,
            re,
            im,
        }
    }
}

/// One outcome of a measurement: `p_A(k)` and the normalized state of the
/// unmeasured remainder. `state` is `None` when the probability is at or
/// below [`P_FLOOR`].
#[derive(Clone, Debug)]
pub struct ConditionalBranch {
    pub outcome: usize,
    pub probability: f64,
    pub state: Option<DensityOperator>,
}

/// Every entropic quantity for one bipartite state and one basis on the
/// measured part `A` (the other part is `S`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfoReport {
    pub h_s: f64,
    pub h_a: f64,
    pub h_joint: f64,
    pub mutual_i: f64,
    /// Shannon entropy of the outcome distribution of the measurement.
    pub h_a_measured: f64,
    pub h_cond: f64,
    pub accessible_joint: f64,
    pub j_asym: f64,
    pub discord: f64,
}

/// `−Σ p lg p`, with `p ≤ P_FLOOR` contributing nothing.
pub fn shannon_entropy(probabilities: &[f64]) -> f64 {
    probabilities
        .iter()
        .filter(|&&p| p > P_FLOOR)
        .map(|&p| -p * p.log2())
        .fold(0.0, |acc, x| acc + x)
}

pub fn von_neumann_entropy(rho: &DensityOperator) -> f64 {
    matrix_entropy(rho.matrix())
}

/// Entropy of a Hermitian matrix known to be a (sub-)normalized state.
pub(crate) fn matrix_entropy(m: &ComplexMatrix) -> f64 {
    match hermitian_eigenvalues(m) {
        Ok(values) => shannon_entropy(&values),
        // The solver only fails on pathological input; fall back to the
        // vector path which has the same sweep budget but a different order.
        Err(_) => shannon_entropy(&hermitian_eigen(m).map(|e| e.values).unwrap_or_default()),
    }
}

fn require_bipartite(rho: &DensityOperator) -> Result<()> {
    match rho.layout().len() {
        2 => Ok(()),
        n => Err(DiscordError::NotBipartite(n)),
    }
}

pub fn mutual_information(rho: &DensityOperator, part_s: &str, part_a: &str) -> Result<f64> {
    require_bipartite(rho)?;
    let h_s = von_neumann_entropy(&rho.partial_trace(&[part_s])?);
    let h_a = von_neumann_entropy(&rho.partial_trace(&[part_a])?);
    Ok(h_s + h_a - von_neumann_entropy(rho))
}

/// Precomputed index bookkeeping for projecting one part onto basis vectors.
pub(crate) struct BranchProjector<'a> {
    rho: &'a DensityOperator,
    target_stride: usize,
    target_dim: usize,
    rest_offsets: Vec<usize>,
    rest_layout: SubsystemLayout,
}

impl<'a> BranchProjector<'a> {
    pub(crate) fn new(rho: &'a DensityOperator, target: &str) -> Result<Self> {
        let layout = rho.layout();
        let pos = layout.position(target)?;
        let parts = layout.parts();
        let target_dim = parts[pos].1;
        let target_stride: usize = parts[pos + 1..].iter().map(|(_, d)| d).product();
        let rest: Vec<usize> = (0..parts.len()).filter(|&p| p != pos).collect();
        let mut rest_offsets = vec![0usize];
        for &p in &rest {
            let stride: usize = parts[p + 1..].iter().map(|(_, d)| d).product();
            rest_offsets = rest_offsets
                .iter()
                .flat_map(|&o| (0..parts[p].1).map(move |k| o + k * stride))
                .collect();
        }
        let rest_layout = if rest.is_empty() {
            SubsystemLayout::trivial()
        } else {
            SubsystemLayout::new(rest.iter().map(|&p| parts[p].clone()))?
        };
        Ok(Self {
            rho,
            target_stride,
            target_dim,
            rest_offsets,
            rest_layout,
        })
    }

    pub(crate) fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub(crate) fn rest_layout(&self) -> &SubsystemLayout {
        &self.rest_layout
    }

    /// `⟨v|ρ|v⟩` on the remainder, unnormalized; its trace is `p(v)`.
    pub(crate) fn project(&self, v: &[Complex64]) -> ComplexMatrix {
        let m = self.rho.matrix();
        let n = self.rest_offsets.len();
        let mut out = ComplexMatrix::zeros(n, n);
        for (i, &oi) in self.rest_offsets.iter().enumerate() {
            for (j, &oj) in self.rest_offsets.iter().enumerate() {
                let mut acc = C0;
                for (a, va) in v.iter().enumerate() {
                    if *va == C0 {
                        continue;
                    }
                    let row = oi + a * self.target_stride;
                    let mut inner = C0;
                    for (b, vb) in v.iter().enumerate() {
                        inner += m[(row, oj + b * self.target_stride)] * vb;
                    }
                    acc += va.conj() * inner;
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    /// `(p_k, ρ_k unnormalized)` for every basis vector.
    pub(crate) fn project_all(&self, basis: &MeasurementBasis) -> Vec<(f64, ComplexMatrix)> {
        (0..basis.dim())
            .map(|k| {
                let block = self.project(&basis.vector(k));
                (block.trace().re.max(0.0), block)
            })
            .collect()
    }

    fn check_basis(&self, basis: &MeasurementBasis) -> Result<()> {
        if basis.dim() != self.target_dim {
            return Err(DiscordError::ShapeMismatch {
                rows: basis.dim(),
                cols: basis.dim(),
                expected: self.target_dim,
            });
        }
        Ok(())
    }
}

/// `(H({p_k}), Σ p_k H(ρ_k))` from unnormalized branch blocks.
pub(crate) fn outcome_and_conditional_entropy(blocks: &[(f64, ComplexMatrix)]) -> (f64, f64) {
    let probs: Vec<f64> = blocks.iter().map(|(p, _)| *p).collect();
    let cond = blocks
        .iter()
        .filter(|(p, _)| *p > P_FLOOR)
        .map(|(p, block)| p * matrix_entropy(&block.scale_real(1.0 / p)))
        .sum();
    (shannon_entropy(&probs), cond)
}

pub fn measure_branches(rho: &DensityOperator, basis: &MeasurementBasis) -> Result<Vec<ConditionalBranch>> {
    let projector = BranchProjector::new(rho, basis.target())?;
    projector.check_basis(basis)?;
    Ok(projector
        .project_all(basis)
        .into_iter()
        .enumerate()
        .map(|(outcome, (probability, block))| ConditionalBranch {
            outcome,
            probability,
            state: (probability > P_FLOOR).then(|| {
                DensityOperator::from_trusted(block.scale_real(1.0 / probability), projector.rest_layout().clone())
            }),
        })
        .collect())
}

/// The outcome-averaged post-measurement state `Σ_k P_k ρ P_k`.
pub fn outsider_state(rho: &DensityOperator, basis: &MeasurementBasis) -> Result<DensityOperator> {
    let layout = rho.layout();
    let pos = layout.position(basis.target())?;
    let parts = layout.parts();
    if basis.dim() != parts[pos].1 {
        return Err(DiscordError::ShapeMismatch {
            rows: basis.dim(),
            cols: basis.dim(),
            expected: parts[pos].1,
        });
    }
    let before: usize = parts[..pos].iter().map(|(_, d)| d).product();
    let after: usize = parts[pos + 1..].iter().map(|(_, d)| d).product();
    let left = ComplexMatrix::identity(before);
    let right = ComplexMatrix::identity(after);
    let n = rho.dim();
    let mut acc = ComplexMatrix::zeros(n, n);
    for local in basis.projectors() {
        let full = left.kron(&local).kron(&right);
        acc = &acc + &(&(&full * rho.matrix()) * &full);
    }
    Ok(DensityOperator::from_trusted(acc, layout.clone()))
}

/// `Σ_k p_A(k) H(ρ_{rest|k})`.
pub fn conditional_entropy(rho: &DensityOperator, basis: &MeasurementBasis) -> Result<f64> {
    let projector = BranchProjector::new(rho, basis.target())?;
    projector.check_basis(basis)?;
    Ok(outcome_and_conditional_entropy(&projector.project_all(basis)).1)
}

/// `[H(A) + H(S|A)]` at the basis, with `H(A)` the outcome-distribution entropy.
pub fn accessible_joint_entropy(rho: &DensityOperator, basis: &MeasurementBasis) -> Result<f64> {
    let projector = BranchProjector::new(rho, basis.target())?;
    projector.check_basis(basis)?;
    let (outcome, cond) = outcome_and_conditional_entropy(&projector.project_all(basis));
    Ok(outcome + cond)
}

/// Entropies that do not depend on the measurement basis.
#[derive(Clone, Copy, Debug)]
pub(crate) struct BasisFreeEntropies {
    pub h_s: f64,
    pub h_a: f64,
    pub h_joint: f64,
}

impl BasisFreeEntropies {
    pub(crate) fn of(rho: &DensityOperator, measured: &str) -> Result<Self> {
        require_bipartite(rho)?;
        let pos = rho.layout().position(measured)?;
        Ok(Self {
            h_s: von_neumann_entropy(&rho.reduce_to_positions(&[1 - pos])),
            h_a: von_neumann_entropy(&rho.reduce_to_positions(&[pos])),
            h_joint: von_neumann_entropy(rho),
        })
    }

    pub(crate) fn report(&self, h_a_measured: f64, h_cond: f64) -> InfoReport {
        let accessible_joint = h_a_measured + h_cond;
        InfoReport {
            h_s: self.h_s,
            h_a: self.h_a,
            h_joint: self.h_joint,
            mutual_i: self.h_s + self.h_a - self.h_joint,
            h_a_measured,
            h_cond,
            accessible_joint,
            j_asym: self.h_s + self.h_a - accessible_joint,
            discord: accessible_joint - self.h_joint,
        }
    }
}

pub fn discord_at_basis(rho: &DensityOperator, basis: &MeasurementBasis) -> Result<InfoReport> {
    let fixed = BasisFreeEntropies::of(rho, basis.target())?;
    let projector = BranchProjector::new(rho, basis.target())?;
    projector.check_basis(basis)?;
    let (outcome, cond) = outcome_and_conditional_entropy(&projector.project_all(basis));
    Ok(fixed.report(outcome, cond))
}

/// Builds `Σ_k p_k ρ_k ⊗ |v_k⟩⟨v_k|` with the measured part placed last.
pub fn classical_quantum_state(
    branches: &[(f64, DensityOperator)],
    basis: &MeasurementBasis,
) -> Result<DensityOperator> {
    if branches.len() > basis.dim() {
        return Err(DiscordError::BadParameter(format!(
            "{} branches for a {}-outcome basis",
            branches.len(),
            basis.dim()
        )));
    }
    let mut terms = Vec::with_capacity(branches.len());
    for (k, (p, rho)) in branches.iter().enumerate() {
        let v = basis.vector(k);
        let marker = DensityOperator::from_trusted(
            ComplexMatrix::outer(&v, &v),
            SubsystemLayout::new([(basis.target().to_owned(), basis.dim())])?,
        );
        terms.push((*p, rho.tensor_product(&marker)?));
    }
    let refs: Vec<(f64, &DensityOperator)> = terms.iter().map(|(p, r)| (*p, r)).collect();
    DensityOperator::mixture(&refs)
}

/// Single-qubit pure state `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
pub fn qubit_vector(theta: f64, phi: f64) -> [Complex64; 2] {
    let (s, c) = (0.5 * theta).sin_cos();
    [C1 * c, Complex64::from_polar(s, phi)]
}

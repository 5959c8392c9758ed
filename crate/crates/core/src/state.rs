//! Density operators over labeled tensor-product spaces.
//!
//! The layout order fixes the Kronecker order: a basis index is the
//! mixed-radix number whose most significant digit belongs to the first part.

use std::collections::HashSet;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DiscordError, Result};
use crate::linalg::{hermitian_eigen, ComplexMatrix, C0};

/// Numerical tolerances used when validating states and bases.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub herm: f64,
    pub trace: f64,
    pub psd: f64,
    pub recon: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            herm: 1e-10,
            trace: 1e-10,
            psd: 1e-9,
            recon: 1e-8,
        }
    }
}

/// Ordered `(label, dimension)` parts of a composite Hilbert space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SubsystemLayout {
    parts: Vec<(String, usize)>,
}

impl SubsystemLayout {
    pub fn new<S: Into<String>>(parts: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let parts: Vec<(String, usize)> = parts.into_iter().map(|(l, d)| (l.into(), d)).collect();
        if parts.is_empty() {
            return Err(DiscordError::BadLayout("layout has no parts".into()));
        }
        let mut seen = HashSet::new();
        for (label, dim) in &parts {
            if label.is_empty() {
                return Err(DiscordError::BadLayout("empty label".into()));
            }
            if *dim < 2 {
                return Err(DiscordError::BadLayout(format!(
                    "part `{label}` has dimension {dim}; parts need dimension >= 2"
                )));
            }
            if !seen.insert(label.as_str()) {
                return Err(DiscordError::BadLayout(format!("duplicate label `{label}`")));
            }
        }
        Ok(Self { parts })
    }

    /// Layout of two qubits.
    pub fn qubits(labels: &[&str]) -> Result<Self> {
        Self::new(labels.iter().map(|&l| (l, 2)))
    }

    /// The one-dimensional space left after every part has been measured.
    pub(crate) fn trivial() -> Self {
        Self { parts: Vec::new() }
    }

    pub fn parts(&self) -> &[(String, usize)] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn total_dimension(&self) -> usize {
        self.parts.iter().map(|(_, d)| d).product()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.parts.iter().map(|(l, _)| l.as_str())
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.parts
            .iter()
            .position(|(l, _)| l == label)
            .ok_or_else(|| DiscordError::UnknownLabel(label.to_owned()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.parts[self.position(label)?].1)
    }

    fn concat(&self, other: &Self) -> Result<Self> {
        for label in other.labels() {
            if self.position(label).is_ok() {
                return Err(DiscordError::LabelCollision(label.to_owned()));
            }
        }
        let mut parts = self.parts.clone();
        parts.extend(other.parts.iter().cloned());
        Ok(Self { parts })
    }

    fn select(&self, positions: &[usize]) -> Self {
        Self {
            parts: positions.iter().map(|&p| self.parts[p].clone()).collect(),
        }
    }

    /// For each subset of positions, the full-index offset of each local index.
    fn offsets(&self, positions: &[usize]) -> Vec<usize> {
        let strides = self.strides();
        let mut offsets = vec![0usize];
        for &p in positions {
            let (dim, stride) = (self.parts[p].1, strides[p]);
            offsets = offsets
                .iter()
                .flat_map(|&o| (0..dim).map(move |k| o + k * stride))
                .collect();
        }
        offsets
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.parts.len()];
        for p in (0..self.parts.len().saturating_sub(1)).rev() {
            strides[p] = strides[p + 1] * self.parts[p + 1].1;
        }
        strides
    }
}

impl fmt::Display for SubsystemLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.parts.iter().map(|(l, d)| format!("{l}:{d}")).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// Hermitian, positive semidefinite, unit-trace operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateJson", into = "StateJson")]
pub struct DensityOperator {
    layout: SubsystemLayout,
    matrix: ComplexMatrix,
}

/// Eigenvalues in descending order with eigenvector columns in the same order.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl DensityOperator {
    /// Checks Hermiticity, trace and positivity. Eigenvalues in `[-tol.psd, 0)`
    /// are clipped to zero and the spectrum renormalized; a non-negative
    /// spectrum leaves the matrix untouched.
    pub fn validate(matrix: ComplexMatrix, layout: SubsystemLayout, tol: &Tolerances) -> Result<Self> {
        let side = layout.total_dimension();
        if !matrix.is_square() || matrix.rows() != side {
            return Err(DiscordError::ShapeMismatch {
                rows: matrix.rows(),
                cols: matrix.cols(),
                expected: side,
            });
        }
        let deviation = matrix.hermiticity_deviation();
        if deviation > tol.herm {
            return Err(DiscordError::NotHermitian { deviation });
        }
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > tol.trace {
            return Err(DiscordError::NotUnitTrace { trace });
        }
        let eig = hermitian_eigen(&matrix)?;
        let lowest = eig.values.last().copied().unwrap_or(0.0);
        if lowest < -tol.psd {
            return Err(DiscordError::NotPositive { eigenvalue: lowest });
        }
        if lowest >= 0.0 {
            return Ok(Self { layout, matrix });
        }
        let clipped: Vec<f64> = eig.values.iter().map(|&v| v.max(0.0)).collect();
        let total: f64 = clipped.iter().sum();
        let renormalized: Vec<f64> = clipped.iter().map(|v| v / total).collect();
        let matrix = ComplexMatrix::from_real_diagonal(&renormalized).conjugate_by(&eig.vectors);
        Ok(Self { layout, matrix })
    }

    /// Validates with default tolerances.
    pub fn new(matrix: ComplexMatrix, layout: SubsystemLayout) -> Result<Self> {
        Self::validate(matrix, layout, &Tolerances::default())
    }

    /// Wraps a matrix already known to be a state (built from valid states by
    /// trace-preserving maps).
    pub(crate) fn from_trusted(matrix: ComplexMatrix, layout: SubsystemLayout) -> Self {
        debug_assert_eq!(matrix.rows(), layout.total_dimension());
        Self { layout, matrix }
    }

    /// `|ψ⟩⟨ψ|` for a normalized vector.
    pub fn pure(amplitudes: &[Complex64], layout: SubsystemLayout) -> Result<Self> {
        Self::new(ComplexMatrix::outer(amplitudes, amplitudes), layout)
    }

    pub fn maximally_mixed(layout: SubsystemLayout) -> Self {
        let d = layout.total_dimension();
        Self::from_trusted(ComplexMatrix::identity(d).scale_real(1.0 / d as f64), layout)
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn tensor_product(&self, other: &Self) -> Result<Self> {
        let layout = self.layout.concat(&other.layout)?;
        Ok(Self::from_trusted(self.matrix.kron(&other.matrix), layout))
    }

    /// Traces out every part not named in `keep`; kept parts stay in layout order.
    pub fn partial_trace<S: AsRef<str>>(&self, keep: &[S]) -> Result<Self> {
        if keep.is_empty() {
            return Err(DiscordError::BadLayout("partial trace must keep at least one part".into()));
        }
        let mut kept = Vec::with_capacity(keep.len());
        for label in keep {
            kept.push(self.layout.position(label.as_ref())?);
        }
        kept.sort_unstable();
        kept.dedup();
        Ok(self.reduce_to_positions(&kept))
    }

    pub(crate) fn reduce_to_positions(&self, kept: &[usize]) -> Self {
        if kept.len() == self.layout.len() {
            return self.clone();
        }
        let traced: Vec<usize> = (0..self.layout.len()).filter(|p| !kept.contains(p)).collect();
        let keep_off = self.layout.offsets(kept);
        let trace_off = self.layout.offsets(&traced);
        let n = keep_off.len();
        let mut out = ComplexMatrix::zeros(n, n);
        for (i, &ki) in keep_off.iter().enumerate() {
            for (j, &kj) in keep_off.iter().enumerate() {
                let mut acc = C0;
                for &t in &trace_off {
                    acc += self.matrix[(ki + t, kj + t)];
                }
                out[(i, j)] = acc;
            }
        }
        Self::from_trusted(out, self.layout.select(kept))
    }

    /// Reorders the tensor factors to the given label order.
    pub fn permute<S: AsRef<str>>(&self, order: &[S]) -> Result<Self> {
        if order.len() != self.layout.len() {
            return Err(DiscordError::BadLayout(format!(
                "permutation names {} parts, layout has {}",
                order.len(),
                self.layout.len()
            )));
        }
        let mut positions = Vec::with_capacity(order.len());
        for label in order {
            let p = self.layout.position(label.as_ref())?;
            if positions.contains(&p) {
                return Err(DiscordError::BadLayout(format!("label `{}` repeated", label.as_ref())));
            }
            positions.push(p);
        }
        let offsets = self.layout.offsets(&positions);
        let n = offsets.len();
        let mut out = ComplexMatrix::zeros(n, n);
        for (i, &oi) in offsets.iter().enumerate() {
            for (j, &oj) in offsets.iter().enumerate() {
                out[(i, j)] = self.matrix[(oi, oj)];
            }
        }
        Ok(Self::from_trusted(out, self.layout.select(&positions)))
    }

    /// Groups every part except `measured` into a single part (labelled by
    /// joining the labels with `+`), placed first; `measured` comes second.
    pub fn bipartition(&self, measured: &str) -> Result<Self> {
        let pos = self.layout.position(measured)?;
        if self.layout.len() == 2 {
            return Ok(self.clone());
        }
        if self.layout.len() < 2 {
            return Err(DiscordError::NotBipartite(self.layout.len()));
        }
        let rest: Vec<&str> = self
            .layout
            .labels()
            .enumerate()
            .filter(|&(p, _)| p != pos)
            .map(|(_, l)| l)
            .collect();
        let mut order = rest.clone();
        order.push(measured);
        let permuted = self.permute(&order)?;
        let rest_dim: usize = self.layout.total_dimension() / self.layout.parts()[pos].1;
        let layout = SubsystemLayout::new([(rest.join("+"), rest_dim), (measured.to_owned(), self.layout.parts()[pos].1)])?;
        Ok(Self::from_trusted(permuted.matrix, layout))
    }

    /// Replaces the labels, keeping dimensions and order.
    pub fn relabel<S: AsRef<str>>(&self, labels: &[S]) -> Result<Self> {
        if labels.len() != self.layout.len() {
            return Err(DiscordError::BadLayout("relabel needs one label per part".into()));
        }
        let layout = SubsystemLayout::new(
            labels
                .iter()
                .zip(self.layout.parts())
                .map(|(l, (_, d))| (l.as_ref().to_owned(), *d)),
        )?;
        Ok(Self::from_trusted(self.matrix.clone(), layout))
    }

    /// `U ρ U†` for a unitary on the full space.
    pub fn evolve(&self, unitary: &ComplexMatrix) -> Self {
        Self::from_trusted(self.matrix.conjugate_by(unitary), self.layout.clone())
    }

    pub fn eigendecompose(&self) -> Result<Spectrum> {
        let eig = hermitian_eigen(&self.matrix)?;
        Ok(Spectrum {
            eigenvalues: eig.values,
            eigenvectors: eig.vectors,
        })
    }

    /// Convex combination `Σ w_i ρ_i`; all operands must share a layout.
    pub fn mixture(weighted: &[(f64, &Self)]) -> Result<Self> {
        let first = weighted
            .first()
            .ok_or_else(|| DiscordError::BadParameter("empty mixture".into()))?
            .1;
        let mut acc = ComplexMatrix::zeros(first.dim(), first.dim());
        for (w, rho) in weighted {
            if rho.layout != first.layout {
                return Err(DiscordError::BadLayout(format!(
                    "mixture of {} and {}",
                    first.layout, rho.layout
                )));
            }
            acc = &acc + &rho.matrix.scale_real(*w);
        }
        Self::new(acc, first.layout.clone())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.matrix.max_abs_diff(&other.matrix)
    }
}

impl Spectrum {
    /// `V Λ V†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        ComplexMatrix::from_real_diagonal(&self.eigenvalues).conjugate_by(&self.eigenvectors)
    }
}

/// JSON interchange form: `{"layout":[["S",2],["A",2]],"re":[[...]],"im":[[...]]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub layout: Vec<(String, usize)>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl TryFrom<StateJson> for DensityOperator {
    type Error = DiscordError;

    fn try_from(json: StateJson) -> Result<Self> {
        if let Some(tag) = json.schema.as_deref().filter(|t| *t != crate::SCHEMA) {
            return Err(DiscordError::BadParameter(format!("unsupported schema `{tag}`")));
        }
        let layout = SubsystemLayout::new(json.layout)?;
        let matrix = ComplexMatrix::from_parts(&json.re, &json.im)?;
        Self::new(matrix, layout)
    }
}

impl From<DensityOperator> for StateJson {
    fn from(rho: DensityOperator) -> Self {
        let (re, im) = rho.matrix.to_parts();
        Self {
            schema: Some(crate::SCHEMA.to_owned()),
            layout: rho.layout.parts,
            re,
            im,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C1;

    fn bell() -> DensityOperator {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let amp = [Complex64::new(h, 0.0), C0, C0, Complex64::new(h, 0.0)];
        DensityOperator::pure(&amp, SubsystemLayout::qubits(&["S", "A"]).unwrap()).unwrap()
    }

    #[test]
    fn maximally_mixed_qubit_validates() {
        let m = ComplexMatrix::identity(2).scale_real(0.5);
        let rho = DensityOperator::new(m, SubsystemLayout::qubits(&["A"]).unwrap()).unwrap();
        assert_eq!(rho.dim(), 2);
    }

    #[test]
    fn asymmetric_matrix_is_not_hermitian() {
        let mut m = ComplexMatrix::identity(2).scale_real(0.5);
        m[(0, 1)] = C1;
        let err = DensityOperator::new(m, SubsystemLayout::qubits(&["A"]).unwrap()).unwrap_err();
        assert!(matches!(err, DiscordError::NotHermitian { .. }));
    }

    #[test]
    fn negative_eigenvalue_is_rejected() {
        let m = ComplexMatrix::from_real_diagonal(&[1.5, -0.5]);
        let err = DensityOperator::new(m, SubsystemLayout::qubits(&["A"]).unwrap()).unwrap_err();
        assert!(matches!(err, DiscordError::NotPositive { .. }));
    }

    #[test]
    fn wrong_trace_and_shape_are_rejected() {
        let layout = SubsystemLayout::qubits(&["A"]).unwrap();
        let m = ComplexMatrix::identity(2);
        assert!(matches!(
            DensityOperator::new(m, layout.clone()),
            Err(DiscordError::NotUnitTrace { .. })
        ));
        let m = ComplexMatrix::identity(3).scale_real(1.0 / 3.0);
        assert!(matches!(
            DensityOperator::new(m, layout),
            Err(DiscordError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn tiny_negative_eigenvalue_is_clipped() {
        let m = ComplexMatrix::from_real_diagonal(&[1.0 + 5e-10, -5e-10]);
        let rho = DensityOperator::new(m, SubsystemLayout::qubits(&["A"]).unwrap()).unwrap();
        let spec = rho.eigendecompose().unwrap();
        assert!(spec.eigenvalues[1] >= -1e-15);
        assert!((spec.eigenvalues.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn layout_rules() {
        assert!(SubsystemLayout::new([("A", 1)]).is_err());
        assert!(SubsystemLayout::new([("A", 2), ("A", 2)]).is_err());
        assert!(SubsystemLayout::new([("", 2)]).is_err());
        let l = SubsystemLayout::new([("A", 2), ("B", 3)]).unwrap();
        assert_eq!(l.total_dimension(), 6);
    }

    #[test]
    fn maximally_mixed_product() {
        let a = DensityOperator::maximally_mixed(SubsystemLayout::qubits(&["S"]).unwrap());
        let b = DensityOperator::maximally_mixed(SubsystemLayout::qubits(&["A"]).unwrap());
        let ab = a.tensor_product(&b).unwrap();
        let expected = ComplexMatrix::identity(4).scale_real(0.25);
        assert_eq!(ab.matrix(), &expected);
        assert_eq!(ab.layout().labels().collect::<Vec<_>>(), vec!["S", "A"]);
        assert!(matches!(a.tensor_product(&a), Err(DiscordError::LabelCollision(_))));
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let rho = bell();
        let a = rho.partial_trace(&["A"]).unwrap();
        assert!(a.matrix().max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-15);
        assert_eq!(rho.partial_trace(&["S", "A"]).unwrap(), rho);
        assert!(matches!(rho.partial_trace(&["X"]), Err(DiscordError::UnknownLabel(_))));
    }

    #[test]
    fn partial_trace_of_product_middle_part() {
        let q = |l: &str, p: f64| {
            DensityOperator::new(
                ComplexMatrix::from_real_diagonal(&[p, 1.0 - p]),
                SubsystemLayout::qubits(&[l]).unwrap(),
            )
            .unwrap()
        };
        let abc = q("A", 0.9).tensor_product(&q("B", 0.6)).unwrap().tensor_product(&q("C", 0.2)).unwrap();
        let b = abc.partial_trace(&["B"]).unwrap();
        assert!((b.matrix()[(0, 0)].re - 0.6).abs() < 1e-15);
        let ac = abc.partial_trace(&["C", "A"]).unwrap();
        assert_eq!(ac.layout().labels().collect::<Vec<_>>(), vec!["A", "C"]);
        assert!((ac.matrix()[(0, 0)].re - 0.18).abs() < 1e-15);
    }

    #[test]
    fn permute_swaps_factors() {
        let a = DensityOperator::new(
            ComplexMatrix::from_real_diagonal(&[0.9, 0.1]),
            SubsystemLayout::qubits(&["A"]).unwrap(),
        )
        .unwrap();
        let b = DensityOperator::maximally_mixed(SubsystemLayout::new([("B", 3)]).unwrap());
        let ab = a.tensor_product(&b).unwrap();
        let ba = b.tensor_product(&a).unwrap();
        assert!(ab.permute(&["B", "A"]).unwrap().max_abs_diff(&ba) < 1e-16);
    }

    #[test]
    fn json_round_trip() {
        let rho = bell();
        let text = serde_json::to_string(&rho).unwrap();
        assert!(text.contains("\"layout\":[[\"S\",2],[\"A\",2]]"));
        let back: DensityOperator = serde_json::from_str(&text).unwrap();
        assert_eq!(back, rho);
    }

    #[test]
    fn json_rejects_invalid_state() {
        let text = r#"{"layout":[["A",2]],"re":[[1,0],[0,1]],"im":[[0,0],[0,0]]}"#;
        assert!(serde_json::from_str::<DensityOperator>(text).is_err());
    }
}

//! The c-not demon acting on system `S`, memory `D`, apparatus `A`, and an
//! optional environment qubit `E` that decoheres the memory.
//!
//! Gate sequence per cycle:
//! (a) c-not A→D, the demon copies the apparatus;
//! [decoherence: c-not D→E, the environment records the memory];
//! (b) c-not D→S, the demon purifies the system;
//! (c) c-not A→D, the demon resets its memory.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DiscordError, Result};
use crate::factory;
use crate::info::{von_neumann_entropy, MeasurementBasis};
use crate::ledger::{net_work_classical, net_work_quantum};
use crate::linalg::{ComplexMatrix, C0, C1};
use crate::state::{DensityOperator, SubsystemLayout, Tolerances};

pub const QUBITS: [&str; 4] = ["S", "D", "A", "E"];

/// Pure state of a few qubits; the first label is the most significant bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PureState {
    labels: Vec<String>,
    #[serde(with = "amplitude_parts")]
    amplitudes: Vec<Complex64>,
}

mod amplitude_parts {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Parts {
        re: Vec<f64>,
        im: Vec<f64>,
    }

    pub fn serialize<S: Serializer>(amps: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        Parts {
            re: amps.iter().map(|z| z.re).collect(),
            im: amps.iter().map(|z| z.im).collect(),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let p = Parts::deserialize(d)?;
        if p.re.len() != p.im.len() {
            return Err(serde::de::Error::custom("re and im lengths differ"));
        }
        Ok(p.re.into_iter().zip(p.im).map(|(r, i)| Complex64::new(r, i)).collect())
    }
}

impl PureState {
    pub fn new(labels: Vec<String>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 1 << labels.len() {
            return Err(DiscordError::ShapeMismatch {
                rows: amplitudes.len(),
                cols: 1,
                expected: 1 << labels.len(),
            });
        }
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > Tolerances::default().trace {
            return Err(DiscordError::NotNormalized(norm));
        }
        Ok(Self { labels, amplitudes })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    fn bit(&self, label: &str) -> Result<usize> {
        let pos = self
            .labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| DiscordError::UnknownLabel(label.to_owned()))?;
        Ok(self.labels.len() - 1 - pos)
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm_sqr()
    }

    pub fn density(&self) -> DensityOperator {
        let layout = SubsystemLayout::qubits(&self.labels.iter().map(String::as_str).collect::<Vec<_>>())
            .expect("distinct qubit labels");
        DensityOperator::from_trusted(ComplexMatrix::outer(&self.amplitudes, &self.amplitudes), layout)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateOp {
    pub control: String,
    pub target: String,
}

impl GateOp {
    pub fn cnot(control: &str, target: &str) -> Self {
        Self {
            control: control.to_owned(),
            target: target.to_owned(),
        }
    }
}

/// Flips `target` wherever `control` is 1; a pure amplitude permutation.
pub fn apply_cnot(state: &PureState, gate: &GateOp) -> Result<PureState> {
    if gate.control == gate.target {
        return Err(DiscordError::SelfControl(gate.control.clone()));
    }
    let c = 1usize << state.bit(&gate.control)?;
    let t = 1usize << state.bit(&gate.target)?;
    let mut amplitudes = state.amplitudes.clone();
    for (i, amp) in state.amplitudes.iter().enumerate() {
        if i & c != 0 {
            amplitudes[i ^ t] = *amp;
        }
    }
    Ok(PureState {
        labels: state.labels.clone(),
        amplitudes,
    })
}

/// Work figures for one cycle, in units of `kT`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CycleLedger {
    #[serde(rename = "kT")]
    pub kt: f64,
    /// `W^Q` of the input `ρ_SA`.
    pub input_quantum_work: f64,
    /// `W^C` of the input with `A` read in the computational basis.
    pub input_classical_work: f64,
    /// `kT (lg d_S − H(ρ_S) + lg d_A − H(ρ_A))` after the cycle, memory reset.
    pub harvested: f64,
    /// `input_quantum_work − harvested`.
    pub shortfall: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CycleStep {
    pub label: String,
    pub state: PureState,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CycleOutcome {
    pub decohere: bool,
    /// Weighted final pure states; one entry for a coherent input.
    pub branches: Vec<(f64, PureState)>,
    /// Intermediate states of the first branch.
    pub steps: Vec<CycleStep>,
    pub rho_s: DensityOperator,
    pub rho_d: DensityOperator,
    pub rho_a: DensityOperator,
    pub h_s: f64,
    pub h_d: f64,
    pub h_a: f64,
    /// `|⟨ε₀|ε₁⟩|` of the environment states correlated with `A = 0, 1`
    /// (undefined when one of them has zero weight).
    pub environment_overlap: Option<f64>,
    pub ledger: CycleLedger,
}

impl CycleOutcome {
    pub fn final_state(&self) -> Option<&PureState> {
        match self.branches.as_slice() {
            [(_, only)] => Some(only),
            _ => None,
        }
    }
}

fn labels() -> Vec<String> {
    QUBITS.iter().map(|&l| l.to_owned()).collect()
}

/// `α|0_S 0_D 0_A 0_E⟩ + β|1_S 0_D 1_A 0_E⟩`.
fn initial_state(alpha: Complex64, beta: Complex64) -> Result<PureState> {
    let mut amps = vec![C0; 16];
    amps[0b0000] = alpha;
    amps[0b1010] = beta;
    PureState::new(labels(), amps)
}

fn gate_sequence(decohere: bool) -> Vec<(&'static str, GateOp)> {
    let mut gates = vec![("a: c-not A->D", GateOp::cnot("A", "D"))];
    if decohere {
        gates.push(("decoherence: c-not D->E", GateOp::cnot("D", "E")));
    }
    gates.push(("b: c-not D->S", GateOp::cnot("D", "S")));
    gates.push(("c: c-not A->D", GateOp::cnot("A", "D")));
    gates
}

fn evolve(initial: PureState, decohere: bool) -> Result<Vec<CycleStep>> {
    let mut steps = vec![CycleStep {
        label: "initial".into(),
        state: initial,
    }];
    for (label, gate) in gate_sequence(decohere) {
        let next = apply_cnot(&steps.last().expect("non-empty").state, &gate)?;
        steps.push(CycleStep {
            label: label.into(),
            state: next,
        });
    }
    Ok(steps)
}

fn environment_overlap(branches: &[(f64, PureState)]) -> Option<f64> {
    // Environment amplitude vectors conditioned on S = D = 0 and A = k.
    let [(_, psi)] = branches else { return None };
    let env = |a: usize| -> Vec<Complex64> { (0..2).map(|e| psi.amplitudes[(a << 1) | e]).collect() };
    let (e0, e1) = (env(0), env(1));
    let n0: f64 = e0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let n1: f64 = e1.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n0 < 1e-12 || n1 < 1e-12 {
        return None;
    }
    let overlap: Complex64 = e0.iter().zip(&e1).map(|(a, b)| a.conj() * b).sum();
    Some(overlap.norm() / (n0 * n1))
}

fn outcome(
    finals: Vec<(f64, PureState)>,
    steps: Vec<CycleStep>,
    input: &DensityOperator,
    decohere: bool,
    kt: f64,
) -> Result<CycleOutcome> {
    let densities: Vec<(f64, DensityOperator)> = finals.iter().map(|(w, s)| (*w, s.density())).collect();
    let refs: Vec<(f64, &DensityOperator)> = densities.iter().map(|(w, d)| (*w, d)).collect();
    let total = DensityOperator::mixture(&refs)?;
    let rho_s = total.partial_trace(&["S"])?;
    let rho_d = total.partial_trace(&["D"])?;
    let rho_a = total.partial_trace(&["A"])?;
    let (h_s, h_d, h_a) = (
        von_neumann_entropy(&rho_s),
        von_neumann_entropy(&rho_d),
        von_neumann_entropy(&rho_a),
    );
    let input_quantum_work = net_work_quantum(input, kt)?;
    let harvested = kt * (2.0 - h_s - h_a);
    let ledger = CycleLedger {
        kt,
        input_quantum_work,
        input_classical_work: net_work_classical(input, &MeasurementBasis::computational("A", 2), kt)?,
        harvested,
        shortfall: input_quantum_work - harvested,
    };
    if decohere {
        if let Some(overlap) = environment_overlap(&finals) {
            assert!(overlap < 1e-12, "decohering c-not left ⟨ε₀|ε₁⟩ = {overlap}");
        }
    }
    Ok(CycleOutcome {
        decohere,
        environment_overlap: environment_overlap(&finals),
        branches: finals,
        steps,
        rho_s,
        rho_d,
        rho_a,
        h_s,
        h_d,
        h_a,
        ledger,
    })
}

/// One demon cycle on `(α|00⟩ + β|11⟩)_SA`.
pub fn run_demon_cycle(alpha: Complex64, beta: Complex64, decohere: bool, kt: f64) -> Result<CycleOutcome> {
    let initial = initial_state(alpha, beta)?;
    let input = DensityOperator::pure(&[alpha, C0, C0, beta], SubsystemLayout::qubits(&["S", "A"])?)?;
    let steps = evolve(initial, decohere)?;
    let last = steps.last().expect("non-empty").state.clone();
    outcome(vec![(1.0, last)], steps, &input, decohere, kt)
}

/// The same cycle on the classical mixture `(|00⟩⟨00| + |11⟩⟨11|)/2`, run
/// branch by branch and mixed with weight ½.
pub fn run_classical_input_cycle(decohere: bool, kt: f64) -> Result<CycleOutcome> {
    let zero = evolve(initial_state(C1, C0)?, decohere)?;
    let one = evolve(initial_state(C0, C1)?, decohere)?;
    let finals = vec![
        (0.5, zero.last().expect("non-empty").state.clone()),
        (0.5, one.last().expect("non-empty").state.clone()),
    ];
    outcome(finals, zero, &factory::classical_mixture("S", "A"), decohere, kt)
}

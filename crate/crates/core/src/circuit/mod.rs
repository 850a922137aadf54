//! Measurement circuits and a dense statevector simulator.
//!
//! Target qubits occupy indices `0..N`; ancillas follow. The off-diagonal
//! (interference) circuit uses one ancilla at index `N`. The indirect circuit
//! adds a second ancilla at `N + 1` that controls the Pauli string.

mod sampling;
mod state;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{HeffError, Result};
use crate::pauli::{BasisState, PauliOp, PauliString};

pub use sampling::{
    sample, sample_counts, with_basis_change, Distribution, Estimate, FlipRates, ReadoutNoise,
    ShotResult,
};
pub use state::{
    exact_expectation, single_qubit_matrix, SparseState, StateVector, MAX_STATEVECTOR_QUBITS,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    H(usize),
    S(usize),
    Sdg(usize),
    X(usize),
    Rx(usize, f64),
    Ry(usize, f64),
    Cnot {
        control: usize,
        target: usize,
    },
    /// One Pauli on `target`, applied when `control` is `|1>`.
    CPauli {
        control: usize,
        target: usize,
        op: PauliOp,
    },
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(q)
            | Gate::S(q)
            | Gate::Sdg(q)
            | Gate::X(q)
            | Gate::Rx(q, _)
            | Gate::Ry(q, _) => {
                vec![q]
            }
            Gate::Cnot { control, target }
            | Gate::CPauli {
                control, target, ..
            } => {
                vec![control, target]
            }
        }
    }

    pub fn is_controlled(&self) -> bool {
        matches!(self, Gate::Cnot { .. } | Gate::CPauli { .. })
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::H(q) => write!(f, "H {q}"),
            Gate::S(q) => write!(f, "S {q}"),
            Gate::Sdg(q) => write!(f, "SDG {q}"),
            Gate::X(q) => write!(f, "X {q}"),
            Gate::Rx(q, t) => write!(f, "RX {q} {t:?}"),
            Gate::Ry(q, t) => write!(f, "RY {q} {t:?}"),
            Gate::Cnot { control, target } => write!(f, "CX {control} {target}"),
            Gate::CPauli {
                control,
                target,
                op,
            } => {
                write!(f, "C{} {control} {target}", op.as_char())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    qubits: usize,
    gates: Vec<Gate>,
    measured: Vec<usize>,
}

impl Circuit {
    /// Empty circuit measuring every qubit.
    pub fn new(qubits: usize) -> Self {
        Circuit {
            qubits,
            gates: Vec::new(),
            measured: (0..qubits).collect(),
        }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn measured(&self) -> &[usize] {
        &self.measured
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        let qs = gate.qubits();
        if let Some(&q) = qs.iter().find(|&&q| q >= self.qubits) {
            return Err(HeffError::IndexOutOfRange {
                index: q,
                len: self.qubits,
            });
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(HeffError::invalid(format!("{gate}: control equals target")));
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<()> {
        for g in gates {
            self.push(g)?;
        }
        Ok(())
    }

    pub fn set_measured(&mut self, measured: Vec<usize>) -> Result<()> {
        if let Some(&q) = measured.iter().find(|&&q| q >= self.qubits) {
            return Err(HeffError::IndexOutOfRange {
                index: q,
                len: self.qubits,
            });
        }
        self.measured = measured;
        Ok(())
    }

    pub fn controlled_gate_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_controlled()).count()
    }

    pub fn single_qubit_gate_count(&self) -> usize {
        self.gates.len() - self.controlled_gate_count()
    }

    /// Plain-text netlist, one gate per line, then the measured qubits.
    pub fn to_netlist(&self) -> String {
        let mut out = format!("QUBITS {}\n", self.qubits);
        for g in &self.gates {
            out.push_str(&format!("{g}\n"));
        }
        out.push_str("MEASURE");
        for q in &self.measured {
            out.push_str(&format!(" {q}"));
        }
        out.push('\n');
        out
    }
}

/// Which component of a complex matrix element a circuit reads out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Real,
    Imag,
}

impl Part {
    pub const BOTH: [Part; 2] = [Part::Real, Part::Imag];
}

/// Gates that flip the set bits of `n` conditioned on `control` reading
/// `control_value`. The 0-controlled form is X-conjugated on the control.
pub fn controlled_prepare(
    n: &BasisState,
    control: usize,
    control_value: bool,
) -> Result<Vec<Gate>> {
    if control < n.len() {
        return Err(HeffError::invalid(format!(
            "control qubit {control} lies inside the {}-qubit target register",
            n.len()
        )));
    }
    let mut gates = Vec::new();
    let flips: Vec<Gate> = n
        .occupied()
        .map(|target| Gate::Cnot { control, target })
        .collect();
    if flips.is_empty() {
        return Ok(gates);
    }
    if !control_value {
        gates.push(Gate::X(control));
    }
    gates.extend(flips);
    if !control_value {
        gates.push(Gate::X(control));
    }
    Ok(gates)
}

fn check_pair(n: &BasisState, n_prime: &BasisState) -> Result<()> {
    if n.len() != n_prime.len() {
        return Err(HeffError::LengthMismatch {
            expected: n.len(),
            found: n_prime.len(),
        });
    }
    if n == n_prime {
        return Err(HeffError::invalid(
            "off-diagonal circuit needs two distinct basis states; use the diagonal path",
        ));
    }
    Ok(())
}

/// Prepares `|n>` on the target register with plain X gates.
pub fn build_diagonal_circuit(n: &BasisState) -> Circuit {
    let mut c = Circuit::new(n.len());
    c.gates = n.occupied().map(Gate::X).collect();
    c
}

/// Interference circuit producing `(|0>|n'> + |1>|n>)/sqrt2` on ancilla
/// `N`, followed by `S†` (imaginary part only) and a final Hadamard.
///
/// With `m0 = <psi| |0><0| (x) H |psi>` and diagonals `d, d'`:
/// real part reads `2 m0 - (d + d')/2 = Re<n|H|n'>`, imaginary part reads
/// `2 m0 - (d + d')/2 = Im<n'|H|n> = -Im<n|H|n'>`.
pub fn build_offdiagonal_circuit(
    n: &BasisState,
    n_prime: &BasisState,
    part: Part,
) -> Result<Circuit> {
    check_pair(n, n_prime)?;
    let anc = n.len();
    let mut c = Circuit::new(n.len() + 1);
    c.push(Gate::H(anc))?;
    c.extend(controlled_prepare(n_prime, anc, false)?)?;
    c.extend(controlled_prepare(n, anc, true)?)?;
    if part == Part::Imag {
        c.push(Gate::Sdg(anc))?;
    }
    c.push(Gate::H(anc))?;
    Ok(c)
}

/// Two-ancilla indirect circuit: ancilla `N` prepares the superposition of
/// `|n'>` and `|n>`, ancilla `N + 1` controls one Pauli per non-identity site
/// of `h`. Only the ancillas are measured; with `P00` the probability of both
/// reading 0, `4 P00 - 1 - (h_nn + h_n'n')/2` is `Re<n|h|n'>` for the real
/// part and `-Im<n|h|n'>` for the imaginary part.
pub fn build_indirect_circuit(
    n: &BasisState,
    n_prime: &BasisState,
    h: &PauliString,
    part: Part,
) -> Result<Circuit> {
    check_pair(n, n_prime)?;
    if h.len() != n.len() {
        return Err(HeffError::LengthMismatch {
            expected: n.len(),
            found: h.len(),
        });
    }
    if h.is_identity() {
        return Err(HeffError::invalid(
            "identity string has no indirect circuit; its off-diagonal element is zero",
        ));
    }
    let (prep, meas) = (n.len(), n.len() + 1);
    let mut c = Circuit::new(n.len() + 2);
    c.push(Gate::H(prep))?;
    c.push(Gate::H(meas))?;
    c.extend(controlled_prepare(n_prime, prep, false)?)?;
    c.extend(controlled_prepare(n, prep, true)?)?;
    for (target, op) in h.ops().enumerate() {
        if op != PauliOp::I {
            c.push(Gate::CPauli {
                control: meas,
                target,
                op,
            })?;
        }
    }
    if part == Part::Imag {
        c.push(Gate::Sdg(prep))?;
    }
    c.push(Gate::H(prep))?;
    c.push(Gate::H(meas))?;
    c.set_measured(vec![prep, meas])?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn bs(s: &str) -> BasisState {
        s.parse().unwrap()
    }

    #[test]
    fn controlled_prepare_example() {
        let gates = controlled_prepare(&bs("011"), 3, true).unwrap();
        assert_eq!(
            gates,
            vec![
                Gate::Cnot {
                    control: 3,
                    target: 1
                },
                Gate::Cnot {
                    control: 3,
                    target: 2
                }
            ]
        );
        assert!(controlled_prepare(&bs("000"), 3, true).unwrap().is_empty());
        assert!(controlled_prepare(&bs("000"), 3, false).unwrap().is_empty());
        let open = controlled_prepare(&bs("100"), 3, false).unwrap();
        assert_eq!(open.first(), Some(&Gate::X(3)));
        assert_eq!(open.last(), Some(&Gate::X(3)));
        assert!(controlled_prepare(&bs("011"), 2, true).is_err());
    }

    #[test]
    fn branch_preparation_gives_entangled_pair() {
        let (n, np) = (bs("011"), bs("110"));
        let mut c = Circuit::new(4);
        c.push(Gate::H(3)).unwrap();
        c.extend(controlled_prepare(&np, 3, false).unwrap())
            .unwrap();
        c.extend(controlled_prepare(&n, 3, true).unwrap()).unwrap();
        let state = StateVector::run(&c).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (i, a) in state.amplitudes().iter().enumerate() {
            let expected = if i as u64 == np.bits() || i as u64 == n.bits() | 1 << 3 {
                h
            } else {
                0.0
            };
            assert!(
                (a - Complex64::new(expected, 0.0)).norm() < 1e-12,
                "index {i}"
            );
        }
    }

    #[test]
    fn offdiagonal_circuit_shape() {
        let (n, np) = (bs("0110"), bs("1001"));
        for part in Part::BOTH {
            let c = build_offdiagonal_circuit(&n, &np, part).unwrap();
            assert_eq!(c.qubits(), 5);
            assert!(c.controlled_gate_count() <= 2 * 4);
            assert!(c.single_qubit_gate_count() <= 5);
        }
        assert!(build_offdiagonal_circuit(&n, &n, Part::Real).is_err());
    }

    #[test]
    fn netlist_export() {
        let c = build_offdiagonal_circuit(&bs("10"), &bs("01"), Part::Imag).unwrap();
        let text = c.to_netlist();
        assert!(text.starts_with("QUBITS 3\nH 2\nX 2\nCX 2 1\nX 2\nCX 2 0\nSDG 2\nH 2\n"));
        assert!(text.ends_with("MEASURE 0 1 2\n"));
    }

    #[test]
    fn indirect_circuit_rejects_identity() {
        let id: PauliString = "IIII".parse().unwrap();
        assert!(build_indirect_circuit(&bs("0110"), &bs("1001"), &id, Part::Real).is_err());
    }

    #[test]
    fn indirect_circuit_reads_string_element() {
        let (n, np) = (bs("0110"), bs("1001"));
        let h: PauliString = "YXXY".parse().unwrap();
        let c = build_indirect_circuit(&n, &np, &h, Part::Real).unwrap();
        let state = StateVector::run(&c).unwrap();
        let p00 = state.probability_all_zero(0b11 << 4);
        let re = 4.0 * p00 - 1.0;
        assert!((re + 1.0).abs() < 1e-12, "{re}");
        let c = build_indirect_circuit(&n, &np, &h, Part::Imag).unwrap();
        let p00 = StateVector::run(&c)
            .unwrap()
            .probability_all_zero(0b11 << 4);
        assert!((4.0 * p00 - 1.0).abs() < 1e-12);
    }
}

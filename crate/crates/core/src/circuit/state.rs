use num_complex::Complex64;

use super::{Circuit, Gate};
use crate::error::{HeffError, Result};
use crate::pauli::{PauliOp, PauliString};

/// Largest register the dense simulator accepts.
pub const MAX_STATEVECTOR_QUBITS: usize = 26;

type Matrix2 = [[Complex64; 2]; 2];

const fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn gate_matrix(gate: &Gate) -> Option<Matrix2> {
    let h = FRAC_1_SQRT_2;
    Some(match *gate {
        Gate::H(_) => [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]],
        Gate::S(_) => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 1.0)]],
        Gate::Sdg(_) => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, -1.0)]],
        Gate::Rx(_, theta) => {
            let (s, co) = (theta / 2.0).sin_cos();
            [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]
        }
        Gate::Ry(_, theta) => {
            let (s, co) = (theta / 2.0).sin_cos();
            [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
        }
        Gate::CPauli { op, .. } => pauli_matrix(op),
        Gate::X(_) | Gate::Cnot { .. } => pauli_matrix(PauliOp::X),
    })
}

pub(crate) fn pauli_matrix(op: PauliOp) -> Matrix2 {
    match op {
        PauliOp::I => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]],
        PauliOp::X => [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
        PauliOp::Y => [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]],
        PauliOp::Z => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]],
    }
}

/// Dense 2x2 matrix of a single-qubit gate (target part for controlled gates).
pub fn single_qubit_matrix(gate: &Gate) -> [[Complex64; 2]; 2] {
    gate_matrix(gate).expect("every gate has a 2x2 block")
}

/// Dense amplitudes; index bit `q` is qubit `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>` on `qubits` qubits.
    pub fn new(qubits: usize) -> Result<Self> {
        if qubits > MAX_STATEVECTOR_QUBITS {
            return Err(HeffError::Capacity {
                what: "statevector register",
                size: qubits,
                limit: MAX_STATEVECTOR_QUBITS,
            });
        }
        let mut amplitudes = vec![c(0.0, 0.0); 1 << qubits];
        amplitudes[0] = c(1.0, 0.0);
        Ok(StateVector { qubits, amplitudes })
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if !len.is_power_of_two() {
            return Err(HeffError::invalid("amplitude count must be a power of two"));
        }
        Ok(StateVector {
            qubits: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    fn check(&self, q: usize) -> Result<()> {
        if q >= self.qubits {
            Err(HeffError::IndexOutOfRange {
                index: q,
                len: self.qubits,
            })
        } else {
            Ok(())
        }
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        for q in gate.qubits() {
            self.check(q)?;
        }
        match *gate {
            Gate::X(q) => {
                let bit = 1usize << q;
                for i in 0..self.amplitudes.len() {
                    if i & bit == 0 {
                        self.amplitudes.swap(i, i | bit);
                    }
                }
            }
            Gate::Cnot { control, target } => {
                let (cb, tb) = (1usize << control, 1usize << target);
                for i in 0..self.amplitudes.len() {
                    if i & cb != 0 && i & tb == 0 {
                        self.amplitudes.swap(i, i | tb);
                    }
                }
            }
            Gate::CPauli {
                control, target, ..
            } => self.apply_matrix(target, Some(control), &single_qubit_matrix(gate)),
            Gate::H(q) | Gate::S(q) | Gate::Sdg(q) | Gate::Rx(q, _) | Gate::Ry(q, _) => {
                self.apply_matrix(q, None, &single_qubit_matrix(gate))
            }
        }
        Ok(())
    }

    fn apply_matrix(&mut self, target: usize, control: Option<usize>, m: &Matrix2) {
        let tb = 1usize << target;
        let cb = control.map_or(0, |c| 1usize << c);
        for i in 0..self.amplitudes.len() {
            if i & tb != 0 || i & cb != cb {
                continue;
            }
            let j = i | tb;
            let (a0, a1) = (self.amplitudes[i], self.amplitudes[j]);
            self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
            self.amplitudes[j] = m[1][0] * a0 + m[1][1] * a1;
        }
    }

    pub fn run(circuit: &Circuit) -> Result<Self> {
        let mut state = StateVector::new(circuit.qubits())?;
        for g in circuit.gates() {
            state.apply(g)?;
        }
        Ok(state)
    }

    /// `<psi| P |psi>` for a Pauli string over the whole register.
    pub fn expectation(&self, obs: &PauliString) -> Result<f64> {
        if obs.len() != self.qubits {
            return Err(HeffError::LengthMismatch {
                expected: self.qubits,
                found: obs.len(),
            });
        }
        let mut acc = c(0.0, 0.0);
        for (i, a) in self.amplitudes.iter().enumerate() {
            if a.re == 0.0 && a.im == 0.0 {
                continue;
            }
            let (phase, j) = obs.apply_bits(i as u64);
            acc += self.amplitudes[j as usize].conj() * phase.to_complex() * a;
        }
        Ok(acc.re)
    }

    /// Nonzero amplitudes, for cheap repeated expectations on sparse states.
    pub fn support(&self) -> SparseState {
        SparseState {
            entries: self
                .amplitudes
                .iter()
                .enumerate()
                .filter(|(_, a)| a.re != 0.0 || a.im != 0.0)
                .map(|(i, a)| (i as u64, *a))
                .collect(),
        }
    }

    /// Probability that every qubit in `mask` reads 0.
    pub fn probability_all_zero(&self, mask: u64) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| *i as u64 & mask == 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }
}

/// Nonzero amplitudes sorted by basis index.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseState {
    entries: Vec<(u64, Complex64)>,
}

impl SparseState {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn amplitude(&self, index: u64) -> Complex64 {
        self.entries
            .binary_search_by_key(&index, |(i, _)| *i)
            .map_or(c(0.0, 0.0), |k| self.entries[k].1)
    }

    /// `<psi| P |psi>`; `obs` must span the register the state came from.
    pub fn expectation(&self, obs: &PauliString) -> f64 {
        let mut acc = c(0.0, 0.0);
        for &(i, a) in &self.entries {
            let (phase, j) = obs.apply_bits(i);
            acc += self.amplitude(j).conj() * phase.to_complex() * a;
        }
        acc.re
    }
}

/// `<psi_final| obs |psi_final>` for the circuit started in `|0...0>`.
pub fn exact_expectation(circuit: &Circuit, obs: &PauliString) -> Result<f64> {
    StateVector::run(circuit)?.expectation(obs)
}

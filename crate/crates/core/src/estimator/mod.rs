//! Assembly of the effective Hamiltonian from diagonal evaluations and
//! circuit-measured off-diagonal elements.

mod mitigation;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{
    build_diagonal_circuit, build_indirect_circuit, build_offdiagonal_circuit, sample_counts,
    with_basis_change, Circuit, Distribution, Estimate, Part, ReadoutNoise, ShotResult,
    StateVector,
};
use crate::error::{HeffError, Result};
use crate::pauli::{BasisState, PauliString, PauliSum};
use crate::rng::{derive_seed, stream};
use crate::subspace::{binomial, SubspaceBasis};

pub use mitigation::{
    build_calibration, mitigate, mitigate_distribution, nnls_unfold, CalibrationMatrix, Confusion,
};

/// Weights with a larger imaginary part make the sum non-Hermitian.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;

/// How matrix elements are obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendKind {
    /// Classical evaluation of every element.
    Oracle,
    /// Statevector simulation with exact expectation values.
    ExactCircuit,
    Sampled {
        shots: u64,
        seed: u64,
    },
    SampledNoisy {
        shots: u64,
        seed: u64,
        noise: ReadoutNoise,
        mitigation: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementStyle {
    /// One ancilla; each off-diagonal string is read out after basis rotation.
    Direct,
    /// Two ancillas; the string is applied as controlled Paulis.
    Indirect,
}

impl std::str::FromStr for MeasurementStyle {
    type Err = HeffError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "direct" => Ok(MeasurementStyle::Direct),
            "indirect" => Ok(MeasurementStyle::Indirect),
            other => Err(HeffError::invalid(format!(
                "unknown measurement style '{other}' (expected direct or indirect)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Backend {
    pub kind: BackendKind,
    pub style: MeasurementStyle,
    /// Measure diagonal elements with circuits instead of evaluating them
    /// classically.
    pub circuit_diagonals: bool,
    /// Calibration shots; the measurement shot count when absent.
    pub calibration_shots: Option<u64>,
    /// Attach raw histograms to every estimate.
    pub keep_counts: bool,
}

impl Backend {
    fn with_kind(kind: BackendKind) -> Self {
        Backend {
            kind,
            style: MeasurementStyle::Direct,
            circuit_diagonals: false,
            calibration_shots: None,
            keep_counts: false,
        }
    }

    pub fn oracle() -> Self {
        Self::with_kind(BackendKind::Oracle)
    }

    pub fn exact() -> Self {
        Self::with_kind(BackendKind::ExactCircuit)
    }

    pub fn sampled(shots: u64, seed: u64) -> Self {
        Self::with_kind(BackendKind::Sampled { shots, seed })
    }

    pub fn noisy(shots: u64, seed: u64, noise: ReadoutNoise, mitigation: bool) -> Self {
        Self::with_kind(BackendKind::SampledNoisy {
            shots,
            seed,
            noise,
            mitigation,
        })
    }

    pub fn with_style(mut self, style: MeasurementStyle) -> Self {
        self.style = style;
        self
    }

    pub fn with_circuit_diagonals(mut self, on: bool) -> Self {
        self.circuit_diagonals = on;
        self
    }

    pub fn with_counts(mut self, on: bool) -> Self {
        self.keep_counts = on;
        self
    }

    pub fn shots(&self) -> Option<u64> {
        match self.kind {
            BackendKind::Sampled { shots, .. } | BackendKind::SampledNoisy { shots, .. } => {
                Some(shots)
            }
            _ => None,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self.kind {
            BackendKind::Sampled { seed, .. } | BackendKind::SampledNoisy { seed, .. } => {
                Some(seed)
            }
            _ => None,
        }
    }

    /// Same backend with a different master seed; no-op for exact kinds.
    pub fn reseeded(&self, new_seed: u64) -> Self {
        let mut b = self.clone();
        match &mut b.kind {
            BackendKind::Sampled { seed, .. } | BackendKind::SampledNoisy { seed, .. } => {
                *seed = new_seed
            }
            _ => {}
        }
        b
    }

    fn noise(&self) -> Option<&ReadoutNoise> {
        match &self.kind {
            BackendKind::SampledNoisy { noise, .. } => Some(noise),
            _ => None,
        }
    }

    fn uses_circuits(&self) -> bool {
        self.kind != BackendKind::Oracle
    }
}

/// A complex matrix-element estimate with per-component standard errors.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct MeasurementEstimate {
    pub value: Complex64,
    pub stderr_re: f64,
    pub stderr_im: f64,
    /// Shots spent over all circuits of this element.
    pub shots: u64,
    /// Circuit executions, counting each basis-rotation setting.
    pub executions: usize,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub counts: Vec<ShotResult>,
}

impl MeasurementEstimate {
    fn exact(value: Complex64) -> Self {
        MeasurementEstimate {
            value,
            ..Default::default()
        }
    }

    /// Real part as a scalar estimate.
    pub fn real(&self) -> Estimate {
        Estimate {
            value: self.value.re,
            stderr: self.stderr_re,
            shots: self.shots,
        }
    }
}

/// Circuit bookkeeping of one effective-Hamiltonian build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CircuitAccounting {
    /// State-preparation circuits for diagonal elements.
    pub diagonal_circuits: usize,
    /// Distinct off-diagonal circuits (per pair and part; per string too in
    /// the indirect style).
    pub offdiagonal_circuits: usize,
    /// Executions including per-string basis-rotation settings.
    pub executions: usize,
    pub calibration_circuits: usize,
    pub total_shots: u64,
}

impl CircuitAccounting {
    /// Counts predicted for a basis of `ns` states and `off_terms`
    /// off-diagonal strings.
    pub fn closed_form(ns: usize, off_terms: usize, backend: &Backend) -> Self {
        if !backend.uses_circuits() {
            return CircuitAccounting::default();
        }
        let pairs = binomial(ns, 2) as usize;
        let diagonal_circuits = if backend.circuit_diagonals { ns } else { 0 };
        let offdiagonal_circuits = match backend.style {
            MeasurementStyle::Direct => 2 * pairs,
            MeasurementStyle::Indirect => 2 * pairs * off_terms,
        };
        let executions = diagonal_circuits + 2 * pairs * off_terms;
        let calibration_circuits = match backend.kind {
            BackendKind::SampledNoisy {
                mitigation: true, ..
            } => 2,
            _ => 0,
        };
        let total_shots = backend.shots().map_or(0, |s| {
            s * executions as u64
                + calibration_circuits as u64 * backend.calibration_shots.unwrap_or(s)
        });
        CircuitAccounting {
            diagonal_circuits,
            offdiagonal_circuits,
            executions,
            calibration_circuits,
            total_shots,
        }
    }
}

/// One measured upper-triangle entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixEntry {
    pub row: usize,
    pub col: usize,
    pub estimate: MeasurementEstimate,
}

/// Projection of the Hamiltonian onto the subspace spanned by a basis.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveHamiltonian {
    pub basis: SubspaceBasis,
    pub matrix: DMatrix<Complex64>,
    pub entries: Vec<MatrixEntry>,
    pub backend: Backend,
    pub accounting: CircuitAccounting,
    pub calibration: Option<CalibrationMatrix>,
}

#[derive(Serialize)]
struct ExportEntry<'a> {
    row: usize,
    col: usize,
    re: f64,
    im: f64,
    stderr_re: f64,
    stderr_im: f64,
    shots: u64,
    executions: usize,
    #[serde(skip_serializing_if = "<[ShotResult]>::is_empty")]
    counts: &'a [ShotResult],
}

#[derive(Serialize)]
struct Export<'a> {
    dimension: usize,
    qubits: usize,
    basis: Vec<String>,
    /// Row-major `[re, im]` pairs.
    matrix: Vec<[f64; 2]>,
    entries: Vec<ExportEntry<'a>>,
    backend: &'a Backend,
    seed: Option<u64>,
    accounting: CircuitAccounting,
    #[serde(skip_serializing_if = "Option::is_none")]
    calibration: Option<&'a CalibrationMatrix>,
}

impl EffectiveHamiltonian {
    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn to_json(&self) -> Result<String> {
        let n = self.dimension();
        let export = Export {
            dimension: n,
            qubits: self.basis.reference.len(),
            basis: self.basis.states.iter().map(|s| s.to_string()).collect(),
            matrix: (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| [self.matrix[(i, j)].re, self.matrix[(i, j)].im])
                .collect(),
            entries: self
                .entries
                .iter()
                .map(|e| ExportEntry {
                    row: e.row,
                    col: e.col,
                    re: e.estimate.value.re,
                    im: e.estimate.value.im,
                    stderr_re: e.estimate.stderr_re,
                    stderr_im: e.estimate.stderr_im,
                    shots: e.estimate.shots,
                    executions: e.estimate.executions,
                    counts: &e.estimate.counts,
                })
                .collect(),
            backend: &self.backend,
            seed: self.backend.seed(),
            accounting: self.accounting,
            calibration: self.calibration.as_ref(),
        };
        Ok(serde_json::to_string_pretty(&export)?)
    }
}

/// Evaluates matrix elements of one Hamiltonian on one backend.
pub struct Estimator<'a> {
    h: &'a PauliSum,
    diagonal: Vec<(f64, PauliString)>,
    off: Vec<(f64, PauliString)>,
    backend: Backend,
    calibration: Option<CalibrationMatrix>,
}

fn real_terms(sum: &PauliSum) -> Vec<(f64, PauliString)> {
    sum.iter().map(|(w, s)| (w.re, *s)).collect()
}

fn check_state(h: &PauliSum, n: &BasisState) -> Result<()> {
    if n.len() != h.qubit_count() {
        return Err(HeffError::LengthMismatch {
            expected: h.qubit_count(),
            found: n.len(),
        });
    }
    Ok(())
}

impl<'a> Estimator<'a> {
    /// Validates the backend and, for mitigated noisy runs, samples the
    /// readout calibration over the target register plus both ancillas.
    pub fn new(h: &'a PauliSum, backend: Backend) -> Result<Self> {
        if !h.is_hermitian(HERMITIAN_TOLERANCE) {
            return Err(HeffError::NonHermitian(format!(
                "Pauli weights carry imaginary parts up to {:e}",
                h.max_imag_weight()
            )));
        }
        if backend.shots() == Some(0) || backend.calibration_shots == Some(0) {
            return Err(HeffError::invalid("shot count must be positive"));
        }
        let (diag, off) = h.classify();
        let calibration = match &backend.kind {
            BackendKind::SampledNoisy {
                noise,
                mitigation: true,
                shots,
                seed,
            } => Some(build_calibration(
                noise,
                h.qubit_count() + 2,
                backend.calibration_shots.unwrap_or(*shots),
                derive_seed(*seed, &[stream::CALIBRATION]),
            )?),
            _ => None,
        };
        Ok(Estimator {
            h,
            diagonal: real_terms(&diag),
            off: real_terms(&off),
            backend,
            calibration,
        })
    }

    /// Replaces the sampled calibration, e.g. with an exact one.
    pub fn with_calibration(mut self, cal: CalibrationMatrix) -> Self {
        self.calibration = Some(cal);
        self
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn calibration(&self) -> Option<&CalibrationMatrix> {
        self.calibration.as_ref()
    }

    pub fn offdiagonal_terms(&self) -> usize {
        self.off.len()
    }

    fn shots_and_seed(&self) -> Option<(u64, u64)> {
        Some((self.backend.shots()?, self.backend.seed()?))
    }

    /// Samples `circuit` and returns the (possibly mitigated) distribution.
    fn run_sampled(&self, circuit: &Circuit, seed: u64) -> Result<(ShotResult, Distribution)> {
        let (shots, _) = self.shots_and_seed().expect("sampled backend");
        let counts = sample_counts(circuit, shots, seed, self.backend.noise())?;
        let dist = match &self.calibration {
            Some(cal) => mitigate(&counts, cal)?,
            None => counts.to_distribution(),
        };
        Ok((counts, dist))
    }

    /// `<n|H|n>`; classical unless circuit diagonals are requested.
    pub fn measure_diagonal(&self, n: &BasisState) -> Result<MeasurementEstimate> {
        check_state(self.h, n)?;
        if !self.backend.uses_circuits() || !self.backend.circuit_diagonals {
            return Ok(MeasurementEstimate::exact(self.h.matrix_element(n, n)?));
        }
        let circuit = build_diagonal_circuit(n);
        let energy = |w: u64| {
            self.diagonal
                .iter()
                .map(|(l, s)| l * parity(s.z_mask() & w))
                .sum::<f64>()
        };
        match self.shots_and_seed() {
            None => {
                let state = StateVector::run(&circuit)?.support();
                let value: f64 = self
                    .diagonal
                    .iter()
                    .map(|(l, s)| l * state.expectation(s))
                    .sum();
                Ok(MeasurementEstimate {
                    value: Complex64::new(value, 0.0),
                    executions: 1,
                    ..Default::default()
                })
            }
            Some((shots, seed)) => {
                let seed = derive_seed(seed, &[stream::DIAGONAL, n.bits()]);
                let (counts, dist) = self.run_sampled(&circuit, seed)?;
                let est = dist.mean_of(energy);
                Ok(MeasurementEstimate {
                    value: Complex64::new(est.value, 0.0),
                    stderr_re: est.stderr,
                    stderr_im: 0.0,
                    shots,
                    executions: 1,
                    counts: self.keep(counts),
                })
            }
        }
    }

    fn keep(&self, counts: ShotResult) -> Vec<ShotResult> {
        if self.backend.keep_counts {
            vec![counts]
        } else {
            Vec::new()
        }
    }

    /// `<n|H|n'>` from the real and imaginary circuits over the off-diagonal
    /// strings. Circuit backends need the two diagonal elements.
    ///
    /// The diagonal strings contribute exactly `(d_n + d_n') / 4` to the
    /// ancilla-projected expectation, so they are added back analytically
    /// before the diagonals are subtracted. The supplied diagonals therefore
    /// cancel and contribute no variance.
    pub fn measure_offdiagonal(
        &self,
        n: &BasisState,
        n_prime: &BasisState,
        diagonals: Option<(f64, f64)>,
    ) -> Result<MeasurementEstimate> {
        check_state(self.h, n)?;
        check_state(self.h, n_prime)?;
        if n == n_prime {
            return Err(HeffError::invalid(
                "off-diagonal element needs two distinct states",
            ));
        }
        if !self.backend.uses_circuits() {
            return Ok(MeasurementEstimate::exact(
                self.h.matrix_element(n, n_prime)?,
            ));
        }
        let (dn, dnp) = diagonals.ok_or_else(|| {
            HeffError::invalid(format!(
                "diagonal elements of {n} and {n_prime} are required by circuit backends"
            ))
        })?;

        let mut out = MeasurementEstimate::default();
        let mut values = [0.0; 2];
        let mut variances = [0.0; 2];
        for (slot, part) in Part::BOTH.into_iter().enumerate() {
            let (raw, var) = match self.backend.style {
                MeasurementStyle::Direct => {
                    let (m0_off, var_m0) = self.direct_m0(n, n_prime, part, &mut out)?;
                    let m0 = m0_off + 0.25 * (dn + dnp);
                    (2.0 * m0 - 0.5 * (dn + dnp), 4.0 * var_m0)
                }
                MeasurementStyle::Indirect => self.indirect_sum(n, n_prime, part, &mut out)?,
            };
            // The imaginary circuits read Im<n'|H|n>.
            let sign = if part == Part::Imag { -1.0 } else { 1.0 };
            values[slot] = sign * raw;
            variances[slot] = var;
        }
        out.value = Complex64::new(values[0], values[1]);
        out.stderr_re = variances[0].sqrt();
        out.stderr_im = variances[1].sqrt();
        Ok(out)
    }

    fn string_seed(&self, n: &BasisState, n_prime: &BasisState, part: Part, k: usize) -> u64 {
        let master = self.backend.seed().unwrap_or(0);
        derive_seed(
            master,
            &[
                stream::OFFDIAGONAL,
                n.bits(),
                n_prime.bits(),
                part as u64,
                k as u64,
            ],
        )
    }

    /// `sum_s lambda_s <|0><0| (x) h_s>` over off-diagonal strings, with its
    /// variance.
    fn direct_m0(
        &self,
        n: &BasisState,
        n_prime: &BasisState,
        part: Part,
        acc: &mut MeasurementEstimate,
    ) -> Result<(f64, f64)> {
        let circuit = build_offdiagonal_circuit(n, n_prime, part)?;
        let nq = n.len();
        let anc_string = |op| PauliString::single(1, 0, op);
        let (mut m0, mut var) = (0.0, 0.0);
        match self.shots_and_seed() {
            None => {
                let state = StateVector::run(&circuit)?.support();
                let z = anc_string(crate::pauli::PauliOp::Z)?;
                let id = PauliString::identity(1)?;
                for (l, s) in &self.off {
                    let with_i = state.expectation(&s.tensor(&id)?);
                    let with_z = state.expectation(&s.tensor(&z)?);
                    m0 += l * 0.5 * (with_i + with_z);
                    acc.executions += 1;
                }
            }
            Some((shots, _)) => {
                let id = PauliString::identity(1)?;
                for (k, (l, s)) in self.off.iter().enumerate() {
                    let mut rotated = with_basis_change(&circuit, &s.tensor(&id)?)?;
                    let mut measured: Vec<usize> =
                        (0..nq).filter(|&q| s.support() >> q & 1 == 1).collect();
                    measured.push(nq);
                    rotated.set_measured(measured)?;
                    let seed = self.string_seed(n, n_prime, part, k);
                    let (counts, dist) = self.run_sampled(&rotated, seed)?;
                    let support = s.support();
                    let est = dist.mean_of(|w| {
                        if w >> nq & 1 == 0 {
                            parity(w & support)
                        } else {
                            0.0
                        }
                    });
                    m0 += l * est.value;
                    var += l * l * est.stderr * est.stderr;
                    acc.executions += 1;
                    acc.shots += shots;
                    acc.counts.extend(self.keep(counts));
                }
            }
        }
        Ok((m0, var))
    }

    /// `sum_s lambda_s (4 P00 - 1 - (h_nn + h_n'n') / 2)` over off-diagonal
    /// strings, with its variance.
    fn indirect_sum(
        &self,
        n: &BasisState,
        n_prime: &BasisState,
        part: Part,
        acc: &mut MeasurementEstimate,
    ) -> Result<(f64, f64)> {
        let nq = n.len();
        let mask = 0b11u64 << nq;
        let (mut total, mut var) = (0.0, 0.0);
        for (k, (l, s)) in self.off.iter().enumerate() {
            let circuit = build_indirect_circuit(n, n_prime, s, part)?;
            let shift = 0.5 * (s.matrix_element(n, n)?.re + s.matrix_element(n_prime, n_prime)?.re);
            let p00 = match self.shots_and_seed() {
                None => Estimate::exact(StateVector::run(&circuit)?.probability_all_zero(mask)),
                Some((shots, _)) => {
                    let seed = self.string_seed(n, n_prime, part, k);
                    let (counts, dist) = self.run_sampled(&circuit, seed)?;
                    acc.shots += shots;
                    acc.counts.extend(self.keep(counts));
                    dist.mean_of(|w| if w & mask == 0 { 1.0 } else { 0.0 })
                }
            };
            total += l * (4.0 * p00.value - 1.0 - shift);
            var += 16.0 * l * l * p00.stderr * p00.stderr;
            acc.executions += 1;
        }
        Ok((total, var))
    }

    /// Measures every diagonal and upper-triangle element of `basis` and
    /// assembles the Hermitian matrix.
    pub fn build(&self, basis: &SubspaceBasis) -> Result<EffectiveHamiltonian> {
        let ns = basis.len();
        let states = &basis.states;
        let diagonals: Vec<MeasurementEstimate> = states
            .par_iter()
            .map(|n| self.measure_diagonal(n))
            .collect::<Result<_>>()?;
        let pairs: Vec<(usize, usize)> = (0..ns)
            .flat_map(|i| (i + 1..ns).map(move |j| (i, j)))
            .collect();
        let off: Vec<MeasurementEstimate> = pairs
            .par_iter()
            .map(|&(i, j)| {
                self.measure_offdiagonal(
                    &states[i],
                    &states[j],
                    Some((diagonals[i].value.re, diagonals[j].value.re)),
                )
            })
            .collect::<Result<_>>()?;

        let mut m = DMatrix::<Complex64>::zeros(ns, ns);
        let mut entries = Vec::with_capacity(ns + pairs.len());
        let mut accounting = CircuitAccounting::default();
        for (i, d) in diagonals.into_iter().enumerate() {
            m[(i, i)] = Complex64::new(d.value.re, 0.0);
            if self.backend.uses_circuits() && self.backend.circuit_diagonals {
                accounting.diagonal_circuits += 1;
            }
            accounting.executions += d.executions;
            accounting.total_shots += d.shots;
            entries.push(MatrixEntry {
                row: i,
                col: i,
                estimate: d,
            });
        }
        for (&(i, j), e) in pairs.iter().zip(off) {
            m[(i, j)] = e.value;
            m[(j, i)] = e.value.conj();
            accounting.executions += e.executions;
            accounting.total_shots += e.shots;
            entries.push(MatrixEntry {
                row: i,
                col: j,
                estimate: e,
            });
        }
        let adjoint = m.adjoint();
        let matrix = (m + adjoint).map(|z| z * 0.5);

        if self.backend.uses_circuits() {
            accounting.offdiagonal_circuits = 2 * pairs.len();
            if self.backend.style == MeasurementStyle::Indirect {
                accounting.offdiagonal_circuits *= self.off.len();
            }
        }
        if let Some(shots) = self.backend.shots() {
            if self.calibration.is_some() {
                accounting.calibration_circuits = 2;
                accounting.total_shots += 2 * self.backend.calibration_shots.unwrap_or(shots);
            }
        }
        Ok(EffectiveHamiltonian {
            basis: basis.clone(),
            matrix,
            entries,
            backend: self.backend.clone(),
            accounting,
            calibration: self.calibration.clone(),
        })
    }
}

fn parity(word: u64) -> f64 {
    if word.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

pub fn measure_diagonal(
    h: &PauliSum,
    n: &BasisState,
    backend: &Backend,
) -> Result<MeasurementEstimate> {
    Estimator::new(h, backend.clone())?.measure_diagonal(n)
}

pub fn measure_offdiagonal(
    h: &PauliSum,
    n: &BasisState,
    n_prime: &BasisState,
    backend: &Backend,
    diagonals: Option<(f64, f64)>,
) -> Result<MeasurementEstimate> {
    Estimator::new(h, backend.clone())?.measure_offdiagonal(n, n_prime, diagonals)
}

pub fn build_effective_hamiltonian(
    h: &PauliSum,
    basis: &SubspaceBasis,
    backend: &Backend,
) -> Result<EffectiveHamiltonian> {
    Estimator::new(h, backend.clone())?.build(basis)
}

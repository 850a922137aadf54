//! Python bindings. Basis states cross the boundary as bitstrings
//! (`"1100"`, qubit 0 first) and matrices as nested lists of complex numbers.

use heff::circuit::{build_indirect_circuit, build_offdiagonal_circuit, Part, ReadoutNoise};
use heff::estimator::{Backend, Estimator};
use heff::harness::{self, BackendChoice, RunConfig, SearchChoice};
use heff::spectra::{self, EigenMethod};
use heff::subspace::{self, SubspaceBasis};
use heff::{BasisState, FermionHamiltonian, HeffError, MeasurementStyle, PauliString, PauliSum};
use num_complex::Complex64;
use pyo3::exceptions::{PyMemoryError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: HeffError) -> PyErr {
    match e {
        HeffError::Capacity { .. } => PyMemoryError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait OrRaise<T> {
    fn or_raise(self) -> PyResult<T>;
}

impl<T> OrRaise<T> for heff::Result<T> {
    fn or_raise(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn parse_states(states: &[String]) -> heff::Result<Vec<BasisState>> {
    states.iter().map(|s| s.parse()).collect()
}

fn parse_part(part: &str) -> heff::Result<Part> {
    match part {
        "real" => Ok(Part::Real),
        "imag" => Ok(Part::Imag),
        other => Err(HeffError::Invalid(format!(
            "part must be 'real' or 'imag', not '{other}'"
        ))),
    }
}

fn to_rows(m: &nalgebra::DMatrix<Complex64>) -> Vec<Vec<Complex64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn from_rows(rows: &[Vec<Complex64>]) -> heff::Result<nalgebra::DMatrix<Complex64>> {
    let n = rows.len();
    if let Some(r) = rows.iter().find(|r| r.len() != n) {
        return Err(HeffError::LengthMismatch {
            expected: n,
            found: r.len(),
        });
    }
    Ok(nalgebra::DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Weighted sum of Pauli strings.
#[pyclass(name = "PauliSum", module = "heff", from_py_object)]
#[derive(Clone)]
struct PyPauliSum {
    inner: PauliSum,
}

#[pymethods]
impl PyPauliSum {
    /// `terms` is a list of `(weight, "XYZI")` pairs.
    #[new]
    fn new(terms: Vec<(Complex64, String)>) -> PyResult<Self> {
        let parsed = terms
            .iter()
            .map(|(w, s)| Ok((*w, s.parse::<PauliString>()?)))
            .collect::<heff::Result<Vec<_>>>()
            .or_raise()?;
        let qubits = parsed.first().map_or(0, |(_, s)| s.len());
        Ok(PyPauliSum {
            inner: PauliSum::from_terms(qubits, parsed).or_raise()?,
        })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyPauliSum {
            inner: PauliSum::parse_text(text).or_raise()?,
        })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn qubits(&self) -> usize {
        self.inner.qubit_count()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn terms(&self) -> Vec<(Complex64, String)> {
        self.inner
            .iter()
            .map(|(w, s)| (*w, s.to_string()))
            .collect()
    }

    /// `<m|H|n>`.
    fn matrix_element(&self, m: &str, n: &str) -> PyResult<Complex64> {
        let m: BasisState = m.parse().or_raise()?;
        let n: BasisState = n.parse().or_raise()?;
        self.inner.matrix_element(&m, &n).or_raise()
    }

    /// `(diagonal, off_diagonal)` parts.
    fn classify(&self) -> (PyPauliSum, PyPauliSum) {
        let (d, o) = self.inner.classify();
        (PyPauliSum { inner: d }, PyPauliSum { inner: o })
    }

    #[pyo3(signature = (tol = 1e-10))]
    fn is_hermitian(&self, tol: f64) -> bool {
        self.inner.is_hermitian(tol)
    }

    fn __repr__(&self) -> String {
        format!(
            "PauliSum(qubits={}, terms={})",
            self.inner.qubit_count(),
            self.inner.len()
        )
    }
}

/// Second-quantized Hamiltonian in the fermion-term text format.
#[pyclass(name = "FermionHamiltonian", module = "heff")]
struct PyFermionHamiltonian {
    inner: FermionHamiltonian,
}

#[pymethods]
impl PyFermionHamiltonian {
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyFermionHamiltonian {
            inner: FermionHamiltonian::parse_text(text).or_raise()?,
        })
    }

    /// Spin-orbital Hamiltonian from spatial integrals in chemists'
    /// notation, flattened row-major.
    #[staticmethod]
    #[pyo3(signature = (orbitals, one_body, two_body, constant = 0.0))]
    fn from_spatial_integrals(
        orbitals: usize,
        one_body: Vec<f64>,
        two_body: Vec<f64>,
        constant: f64,
    ) -> PyResult<Self> {
        Ok(PyFermionHamiltonian {
            inner: FermionHamiltonian::from_spatial_integrals(
                orbitals, &one_body, &two_body, constant,
            )
            .or_raise()?,
        })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn modes(&self) -> usize {
        self.inner.mode_count()
    }

    fn jordan_wigner(&self) -> PyResult<PyPauliSum> {
        Ok(PyPauliSum {
            inner: heff::jw_transform(&self.inner).or_raise()?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "FermionHamiltonian(modes={}, terms={})",
            self.inner.mode_count(),
            self.inner.terms().len()
        )
    }
}

/// Measurement backend: `oracle`, `exact`, `sampled` or `noisy`.
#[pyclass(name = "Backend", module = "heff", from_py_object)]
#[derive(Clone)]
struct PyBackend {
    inner: Backend,
}

#[pymethods]
impl PyBackend {
    #[new]
    #[pyo3(signature = (
        kind = "oracle",
        shots = 8000,
        seed = 0,
        noise = None,
        mitigate = false,
        style = "direct",
        circuit_diagonals = false,
    ))]
    fn new(
        kind: &str,
        shots: u64,
        seed: u64,
        noise: Option<(f64, f64)>,
        mitigate: bool,
        style: &str,
        circuit_diagonals: bool,
    ) -> PyResult<Self> {
        let style: MeasurementStyle = style.parse().or_raise()?;
        let base = match kind.parse::<BackendChoice>().or_raise()? {
            BackendChoice::Oracle => Backend::oracle(),
            BackendChoice::Exact => Backend::exact(),
            BackendChoice::Sampled => Backend::sampled(shots, seed),
            BackendChoice::Noisy => {
                let (p01, p10) = noise.ok_or_else(|| {
                    PyValueError::new_err("the noisy backend needs noise=(p01, p10)")
                })?;
                let noise = ReadoutNoise::uniform(p01, p10).or_raise()?;
                Backend::noisy(shots, seed, noise, mitigate)
            }
        };
        Ok(PyBackend {
            inner: base
                .with_style(style)
                .with_circuit_diagonals(circuit_diagonals),
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Backend({:?}, style={:?})",
            self.inner.kind, self.inner.style
        )
    }
}

/// Measured projection of a Hamiltonian onto a basis.
#[pyclass(name = "EffectiveHamiltonian", module = "heff")]
struct PyEffectiveHamiltonian {
    inner: heff::EffectiveHamiltonian,
}

#[pymethods]
impl PyEffectiveHamiltonian {
    #[getter]
    fn basis(&self) -> Vec<String> {
        self.inner
            .basis
            .states
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    #[getter]
    fn matrix(&self) -> Vec<Vec<Complex64>> {
        to_rows(&self.inner.matrix)
    }

    /// Ascending eigenvalues.
    fn eigenvalues(&self) -> PyResult<Vec<f64>> {
        Ok(heff::eigendecompose(&self.inner).or_raise()?.eigenvalues)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().or_raise()
    }

    fn __repr__(&self) -> String {
        format!("EffectiveHamiltonian(dimension={})", self.inner.dimension())
    }
}

/// Reference plus excitations up to `order`, truncated to the `ns` lowest
/// diagonal energies.
#[pyfunction]
#[pyo3(signature = (h, electrons, order = 2, ns = None, search = "exhaustive", seed = 0))]
fn build_subspace(
    h: &PyPauliSum,
    electrons: usize,
    order: usize,
    ns: Option<usize>,
    search: &str,
    seed: u64,
) -> PyResult<Vec<String>> {
    let cfg = RunConfig {
        electrons: Some(electrons),
        order,
        ns,
        search: search.parse::<SearchChoice>().or_raise()?,
        seed,
        ..RunConfig::default()
    };
    let basis = subspace::build_subspace(&h.inner, &cfg.subspace_spec().or_raise()?).or_raise()?;
    Ok(basis.states.iter().map(|s| s.to_string()).collect())
}

#[pyfunction]
fn build_effective_hamiltonian(
    h: &PyPauliSum,
    basis: Vec<String>,
    backend: &PyBackend,
) -> PyResult<PyEffectiveHamiltonian> {
    let states = parse_states(&basis).or_raise()?;
    let basis = SubspaceBasis::from_states(&h.inner, states).or_raise()?;
    let inner = Estimator::new(&h.inner, backend.inner.clone())
        .and_then(|e| e.build(&basis))
        .or_raise()?;
    Ok(PyEffectiveHamiltonian { inner })
}

/// `<n|H|n'>` measured on `backend`; circuit backends evaluate the two
/// diagonal elements first.
#[pyfunction]
fn measure_element(
    h: &PyPauliSum,
    n: &str,
    n_prime: &str,
    backend: &PyBackend,
) -> PyResult<(Complex64, f64, f64)> {
    let n: BasisState = n.parse().or_raise()?;
    let np: BasisState = n_prime.parse().or_raise()?;
    let est = Estimator::new(&h.inner, backend.inner.clone()).or_raise()?;
    let e = if n == np {
        est.measure_diagonal(&n)
    } else {
        let dn = est.measure_diagonal(&n).or_raise()?.value.re;
        let dnp = est.measure_diagonal(&np).or_raise()?.value.re;
        est.measure_offdiagonal(&n, &np, Some((dn, dnp)))
    }
    .or_raise()?;
    Ok((e.value, e.stderr_re, e.stderr_im))
}

#[pyfunction]
fn exact_sector_spectrum(h: &PyPauliSum, electrons: usize) -> PyResult<Vec<f64>> {
    Ok(spectra::exact_sector_spectrum(&h.inner, electrons)
        .or_raise()?
        .eigenvalues)
}

/// Ascending eigenvalues of a Hermitian matrix given as nested lists.
#[pyfunction]
#[pyo3(signature = (matrix, method = "auto"))]
fn eigvalsh(matrix: Vec<Vec<Complex64>>, method: &str) -> PyResult<Vec<f64>> {
    let method = match method {
        "auto" => EigenMethod::Auto,
        "jacobi" => EigenMethod::Jacobi,
        "library" => EigenMethod::Library,
        other => {
            return Err(PyValueError::new_err(format!(
                "method must be auto, jacobi or library, not '{other}'"
            )))
        }
    };
    let m = from_rows(&matrix).or_raise()?;
    Ok(spectra::eigendecompose_matrix(&m, false, method)
        .or_raise()?
        .eigenvalues)
}

/// Netlist of the single-ancilla off-diagonal circuit.
#[pyfunction]
#[pyo3(signature = (n, n_prime, part = "real"))]
fn offdiagonal_circuit(n: &str, n_prime: &str, part: &str) -> PyResult<String> {
    let c = build_offdiagonal_circuit(
        &n.parse().or_raise()?,
        &n_prime.parse().or_raise()?,
        parse_part(part).or_raise()?,
    )
    .or_raise()?;
    Ok(c.to_netlist())
}

/// Netlist of the two-ancilla circuit for one Pauli string.
#[pyfunction]
#[pyo3(signature = (n, n_prime, string, part = "real"))]
fn indirect_circuit(n: &str, n_prime: &str, string: &str, part: &str) -> PyResult<String> {
    let c = build_indirect_circuit(
        &n.parse().or_raise()?,
        &n_prime.parse().or_raise()?,
        &string.parse().or_raise()?,
        parse_part(part).or_raise()?,
    )
    .or_raise()?;
    Ok(c.to_netlist())
}

/// Runs the full pipeline from a JSON run configuration and returns the
/// manifest as JSON.
#[pyfunction]
fn solve(config_json: &str) -> PyResult<String> {
    let cfg = RunConfig::from_json(config_json).or_raise()?;
    let report = harness::solve(&cfg).or_raise()?;
    serde_json::to_string_pretty(&report.manifest).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule(name = "heff")]
fn heff_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPauliSum>()?;
    m.add_class::<PyFermionHamiltonian>()?;
    m.add_class::<PyBackend>()?;
    m.add_class::<PyEffectiveHamiltonian>()?;
    m.add_function(wrap_pyfunction!(build_subspace, m)?)?;
    m.add_function(wrap_pyfunction!(build_effective_hamiltonian, m)?)?;
    m.add_function(wrap_pyfunction!(measure_element, m)?)?;
    m.add_function(wrap_pyfunction!(exact_sector_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(eigvalsh, m)?)?;
    m.add_function(wrap_pyfunction!(offdiagonal_circuit, m)?)?;
    m.add_function(wrap_pyfunction!(indirect_circuit, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add("CHEMICAL_ACCURACY", harness::CHEMICAL_ACCURACY)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bitstring_and_part_parsing() {
        let s = parse_states(&["1100".into(), "0011".into()]).unwrap();
        assert_eq!(s[1].bits(), 0b1100);
        assert!(parse_states(&["10a".into()]).is_err());
        assert_eq!(parse_part("imag").unwrap(), Part::Imag);
        assert!(parse_part("both").is_err());
    }

    #[test]
    fn nested_rows_round_trip() {
        let rows = vec![
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0)],
            vec![Complex64::new(0.0, -2.0), Complex64::new(3.0, 0.0)],
        ];
        assert_eq!(to_rows(&from_rows(&rows).unwrap()), rows);
        assert!(from_rows(&[vec![Complex64::new(0.0, 0.0); 2]]).is_err());
    }
}

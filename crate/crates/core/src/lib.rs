//! Effective-Hamiltonian eigensolver for second-quantized Hamiltonians.
//!
//! A fermionic Hamiltonian is mapped to qubits, a subspace of occupation
//! basis states is selected, and every matrix element of the Hamiltonian in
//! that subspace is measured with simulated ancilla circuits. The resulting
//! small Hermitian matrix is diagonalized classically.

pub mod circuit;
pub mod error;
pub mod estimator;
pub mod fermion;
pub mod harness;
pub mod pauli;
pub mod rng;
pub mod spectra;
pub mod subspace;

pub use error::{HeffError, Result};
pub use estimator::{build_effective_hamiltonian, Backend, EffectiveHamiltonian, MeasurementStyle};
pub use fermion::{jw_transform, FermionHamiltonian, LadderOp};
pub use pauli::{BasisState, PauliOp, PauliString, PauliSum, Phase};
pub use spectra::{eigendecompose, exact_sector_spectrum, Spectrum};
pub use subspace::{build_subspace, SubspaceBasis, SubspaceSpec};

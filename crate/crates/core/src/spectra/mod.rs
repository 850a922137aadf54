//! Eigendecomposition, exact sector reference spectra and density of states.

mod jacobi;

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HeffError, Result};
use crate::estimator::EffectiveHamiltonian;
use crate::pauli::{BasisState, PauliSum};
use crate::subspace::binomial;

pub use jacobi::jacobi_eigen;

/// Largest matrix dimension accepted for dense decomposition.
pub const MAX_DENSE_DIMENSION: usize = 4096;

/// Largest elementwise deviation from Hermiticity accepted.
pub const HERMITIAN_TOLERANCE: f64 = 1e-9;

/// Above this dimension `EigenMethod::Auto` hands off to nalgebra.
pub const JACOBI_AUTO_LIMIT: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    #[default]
    Auto,
    Jacobi,
    /// nalgebra's Householder tridiagonalization with implicit QR.
    Library,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Ascending, including `constant_shift`.
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors as columns, in eigenvalue order.
    #[serde(skip)]
    pub eigenvectors: Option<DMatrix<Complex64>>,
    pub constant_shift: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn ground_energy(&self) -> Option<f64> {
        self.eigenvalues.first().copied()
    }

    /// Adds `shift` to every eigenvalue and records it.
    pub fn shifted(mut self, shift: f64) -> Self {
        self.eigenvalues.iter_mut().for_each(|e| *e += shift);
        self.constant_shift += shift;
        self
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,eigenvalue\n");
        for (i, e) in self.eigenvalues.iter().enumerate() {
            out.push_str(&format!("{i},{e:?}\n"));
        }
        out
    }
}

/// Largest `|m_ij - conj(m_ji)|`.
pub fn hermitian_defect(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn eigendecompose_matrix(
    m: &DMatrix<Complex64>,
    vectors: bool,
    method: EigenMethod,
) -> Result<Spectrum> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(HeffError::invalid(
            "eigendecomposition needs a square matrix",
        ));
    }
    if n > MAX_DENSE_DIMENSION {
        return Err(HeffError::Capacity {
            what: "dense eigendecomposition",
            size: n,
            limit: MAX_DENSE_DIMENSION,
        });
    }
    let defect = hermitian_defect(m);
    if defect > HERMITIAN_TOLERANCE {
        return Err(HeffError::NonHermitian(format!(
            "matrix deviates from its adjoint by {defect:e}"
        )));
    }
    let use_jacobi = match method {
        EigenMethod::Jacobi => true,
        EigenMethod::Library => false,
        EigenMethod::Auto => n <= JACOBI_AUTO_LIMIT,
    };
    let (eigenvalues, eigenvectors) = if use_jacobi {
        jacobi_eigen(m, vectors)?
    } else {
        library_eigen(m, vectors)
    };
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
        constant_shift: 0.0,
    })
}

fn library_eigen(m: &DMatrix<Complex64>, vectors: bool) -> (Vec<f64>, Option<DMatrix<Complex64>>) {
    let sym = (m + m.adjoint()).map(|z| z * 0.5);
    let n = m.nrows();
    let (values, vecs) = if vectors {
        let e = sym.symmetric_eigen();
        (e.eigenvalues, Some(e.eigenvectors))
    } else {
        (sym.symmetric_eigenvalues(), None)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let sorted = order.iter().map(|&i| values[i]).collect();
    let vecs = vecs.map(|v| DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]));
    (sorted, vecs)
}

/// Full spectrum of an effective Hamiltonian, with eigenvectors.
pub fn eigendecompose(heff: &EffectiveHamiltonian) -> Result<Spectrum> {
    eigendecompose_matrix(&heff.matrix, true, EigenMethod::Auto)
}

/// First-order standard error of eigenvalue `k` from the per-entry errors,
/// treating the measured upper-triangle entries as independent.
pub fn eigenvalue_stderr(
    heff: &EffectiveHamiltonian,
    spectrum: &Spectrum,
    k: usize,
) -> Option<f64> {
    let v = spectrum.eigenvectors.as_ref()?;
    if k >= v.ncols() {
        return None;
    }
    let mut var = 0.0;
    for e in &heff.entries {
        let est = &e.estimate;
        if e.row == e.col {
            var += v[(e.row, k)].norm_sqr().powi(2) * est.stderr_re.powi(2);
        } else {
            let w = v[(e.row, k)].conj() * v[(e.col, k)];
            var +=
                4.0 * (w.re.powi(2) * est.stderr_re.powi(2) + w.im.powi(2) * est.stderr_im.powi(2));
        }
    }
    Some(var.sqrt())
}

/// All states of `qubits` bits with exactly `particles` set, ascending.
pub fn sector_states(qubits: usize, particles: usize) -> Result<Vec<BasisState>> {
    if particles > qubits {
        return Err(HeffError::InvalidParticleCount {
            particles,
            modes: qubits,
        });
    }
    let count = binomial(qubits, particles);
    if count > MAX_DENSE_DIMENSION as u128 {
        return Err(HeffError::Capacity {
            what: "particle-number sector",
            size: usize::try_from(count).unwrap_or(usize::MAX),
            limit: MAX_DENSE_DIMENSION,
        });
    }
    let mut out = Vec::with_capacity(count as usize);
    if particles == 0 {
        out.push(BasisState::vacuum(qubits)?);
        return Ok(out);
    }
    let last = if qubits == 64 {
        u64::MAX
    } else {
        (1u64 << qubits) - 1
    };
    let mut w: u64 = (1u64 << particles) - 1;
    loop {
        out.push(BasisState::new(qubits, w)?);
        // Gosper's hack: next word with the same popcount.
        let c = w & w.wrapping_neg();
        let r = w.wrapping_add(c);
        if r == 0 || r > last {
            break;
        }
        let next = (((r ^ w) >> 2) / c) | r;
        if next > last {
            break;
        }
        w = next;
    }
    Ok(out)
}

/// Dense matrix of `h` restricted to `states`.
pub fn projected_matrix(h: &PauliSum, states: &[BasisState]) -> Result<DMatrix<Complex64>> {
    let index: HashMap<u64, usize> = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.bits(), i))
        .collect();
    let columns: Vec<Vec<(usize, Complex64)>> = states
        .par_iter()
        .map(|n| {
            Ok(h.apply(n)?
                .into_iter()
                .filter_map(|(m, amp)| index.get(&m.bits()).map(|&i| (i, amp)))
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut out = DMatrix::zeros(states.len(), states.len());
    for (j, col) in columns.into_iter().enumerate() {
        for (i, amp) in col {
            out[(i, j)] += amp;
        }
    }
    Ok(out)
}

/// Exact spectrum of `h` within the `particles`-particle sector.
pub fn exact_sector_spectrum(h: &PauliSum, particles: usize) -> Result<Spectrum> {
    let states = sector_states(h.qubit_count(), particles)?;
    let m = projected_matrix(h, &states)?;
    eigendecompose_matrix(&m, false, EigenMethod::Auto)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binning {
    Count(usize),
    Width(f64),
}

/// Unnormalized histogram of eigenvalues.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DosHistogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl DosHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_left,bin_right,count\n");
        for (k, n) in self.counts.iter().enumerate() {
            out.push_str(&format!(
                "{:?},{:?},{n}\n",
                self.bin_edges[k],
                self.bin_edges[k + 1]
            ));
        }
        out
    }
}

/// Histogram over `[min, max]` of the spectrum. Bins are right-open except
/// the last; a spectrum with zero spread collapses to one bin.
pub fn dos(spectrum: &Spectrum, binning: Binning) -> Result<DosHistogram> {
    let values = &spectrum.eigenvalues;
    let (lo, hi) = match (values.first(), values.last()) {
        (Some(&a), Some(&b)) => (a.min(b), a.max(b)),
        _ => return Err(HeffError::invalid("density of states of an empty spectrum")),
    };
    dos_in_range(values, binning, lo, hi)
}

/// Histogram of `values` over `[lo, hi]`; values outside are ignored.
pub fn dos_in_range(values: &[f64], binning: Binning, lo: f64, hi: f64) -> Result<DosHistogram> {
    if lo.partial_cmp(&hi).is_none_or(|o| o.is_gt()) {
        return Err(HeffError::invalid(format!("empty range [{lo}, {hi}]")));
    }
    let (bins, width) = match binning {
        Binning::Count(0) => return Err(HeffError::invalid("bin count must be positive")),
        Binning::Width(w) if !w.is_finite() || w <= 0.0 => {
            return Err(HeffError::invalid(format!(
                "bin width {w} must be positive"
            )))
        }
        _ if hi == lo => (1, 0.0),
        Binning::Count(k) => (k, (hi - lo) / k as f64),
        Binning::Width(w) => (((hi - lo) / w).ceil().max(1.0) as usize, w),
    };
    let mut bin_edges: Vec<f64> = (0..bins).map(|k| lo + k as f64 * width).collect();
    bin_edges.push(match binning {
        Binning::Width(_) if width > 0.0 => lo + bins as f64 * width,
        _ => hi,
    });
    let mut counts = vec![0u64; bins];
    for &v in values {
        if v < lo || v > hi {
            continue;
        }
        let k = if width == 0.0 {
            0
        } else {
            (((v - lo) / width).floor() as usize).min(bins - 1)
        };
        counts[k] += 1;
    }
    Ok(DosHistogram { bin_edges, counts })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn spectrum(values: Vec<f64>) -> Spectrum {
        Spectrum {
            eigenvalues: values,
            eigenvectors: None,
            constant_shift: 0.0,
        }
    }

    #[test]
    fn sector_enumeration_counts() {
        assert_eq!(sector_states(12, 4).unwrap().len(), 495);
        assert_eq!(sector_states(4, 0).unwrap().len(), 1);
        assert_eq!(sector_states(4, 4).unwrap().len(), 1);
        let s: Vec<String> = sector_states(4, 2)
            .unwrap()
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(s.len(), 6);
        assert!(s.contains(&"1100".to_string()) && s.contains(&"0011".to_string()));
        assert!(sector_states(64, 32).is_err());
    }

    #[test]
    fn z_field_levels() {
        // sum_i eps_i (I - Z_i)/2 has sector levels equal to sums of pairs.
        let h = PauliSum::from_real(&[
            (0.5 * (-2.0 - 1.0 + 1.0 + 3.0), "IIII"),
            (1.0, "ZIII"),
            (0.5, "IZII"),
            (-0.5, "IIZI"),
            (-1.5, "IIIZ"),
        ])
        .unwrap();
        let spec = exact_sector_spectrum(&h, 2).unwrap();
        let want = [-3.0, -1.0, 0.0, 1.0, 2.0, 4.0];
        for (a, b) in spec.eigenvalues.iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{:?}", spec.eigenvalues);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        assert!(matches!(
            eigendecompose_matrix(&m, false, EigenMethod::Jacobi),
            Err(HeffError::NonHermitian(_))
        ));
    }

    #[test]
    fn library_and_jacobi_agree() {
        let n = 12;
        let m = DMatrix::from_fn(n, n, |i, j| {
            let (a, b) = (i.min(j) as f64, i.max(j) as f64);
            let im = if i < j {
                0.1 * a
            } else if i > j {
                -0.1 * a
            } else {
                0.0
            };
            Complex64::new((a * 0.37 + b * 0.11).sin(), im)
        });
        let a = eigendecompose_matrix(&m, true, EigenMethod::Jacobi).unwrap();
        let b = eigendecompose_matrix(&m, true, EigenMethod::Library).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn dos_edge_cases() {
        let one = dos(&spectrum(vec![-1.5]), Binning::Count(10)).unwrap();
        assert_eq!(one.counts, vec![1]);
        assert_eq!(one.bin_edges, vec![-1.5, -1.5]);

        let h = dos(&spectrum(vec![0.0, 0.1, 0.5, 1.0]), Binning::Count(2)).unwrap();
        assert_eq!(h.counts, vec![2, 2]);
        assert_eq!(h.bin_edges, vec![0.0, 0.5, 1.0]);

        let w = dos(&spectrum(vec![0.0, 0.25, 1.0]), Binning::Width(0.4)).unwrap();
        assert_eq!(w.counts, vec![2, 0, 1]);
        assert_eq!(w.total(), 3);

        assert!(dos(&spectrum(vec![0.0, 1.0]), Binning::Count(0)).is_err());
        assert!(dos(&spectrum(vec![]), Binning::Count(3)).is_err());
        assert!(dos(&spectrum(vec![0.0]), Binning::Width(-1.0)).is_err());
    }

    #[test]
    fn csv_layout() {
        let s = spectrum(vec![-1.0, 0.5]).shifted(1.0);
        assert_eq!(s.to_csv(), "index,eigenvalue\n0,0.0\n1,1.5\n");
        assert_eq!(s.constant_shift, 1.0);
        let h = dos(&s, Binning::Count(1)).unwrap();
        assert_eq!(h.to_csv(), "bin_left,bin_right,count\n0.0,1.5,2\n");
    }
}

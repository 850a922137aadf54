//! Tensor-product readout calibration and nonnegative least-squares
//! unfolding of measured distributions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::circuit::{sample_counts, Circuit, Distribution, Gate, ReadoutNoise, ShotResult};
use crate::error::{HeffError, Result};

/// Column-stochastic confusion matrix `A[observed][prepared]` of one qubit.
pub type Confusion = [[f64; 2]; 2];

const IDENTITY: Confusion = [[1.0, 0.0], [0.0, 1.0]];

const NNLS_MAX_ITERATIONS: usize = 20_000;
const NNLS_TOLERANCE: f64 = 1e-14;

/// Per-qubit confusion matrices; the composite is their tensor product.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationMatrix {
    qubits: Vec<Confusion>,
}

impl CalibrationMatrix {
    pub fn identity(qubits: usize) -> Self {
        CalibrationMatrix {
            qubits: vec![IDENTITY; qubits],
        }
    }

    /// Infinite-shot calibration of a known noise model.
    pub fn exact(noise: &ReadoutNoise, qubits: usize) -> Self {
        CalibrationMatrix {
            qubits: (0..qubits)
                .map(|q| {
                    let r = noise.rates(q);
                    [[1.0 - r.p01, r.p10], [r.p01, 1.0 - r.p10]]
                })
                .collect(),
        }
    }

    pub fn from_confusions(qubits: Vec<Confusion>) -> Result<Self> {
        for (q, m) in qubits.iter().enumerate() {
            for (a, b) in m[0].iter().zip(&m[1]).map(|(&a, &b)| (a, b)) {
                if a < 0.0 || b < 0.0 || ((a + b) - 1.0).abs() > 1e-12 {
                    return Err(HeffError::invalid(format!(
                        "confusion matrix of qubit {q} is not column-stochastic"
                    )));
                }
            }
            if determinant(m).abs() < 1e-12 {
                return Err(HeffError::invalid(format!(
                    "confusion matrix of qubit {q} is singular"
                )));
            }
        }
        Ok(CalibrationMatrix { qubits })
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits.len()
    }

    pub fn confusion(&self, qubit: usize) -> Option<&Confusion> {
        self.qubits.get(qubit)
    }

    pub fn confusions(&self) -> &[Confusion] {
        &self.qubits
    }
}

fn determinant(m: &Confusion) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn inverse(m: &Confusion) -> Confusion {
    let d = determinant(m);
    [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]
}

fn transpose(m: &Confusion) -> Confusion {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

/// Applies `m_k` to local bit `k` of a dense vector over `mats.len()` bits.
fn kron_apply(mats: &[Confusion], v: &mut [f64]) {
    for (k, m) in mats.iter().enumerate() {
        let bit = 1usize << k;
        for i in 0..v.len() {
            if i & bit == 0 {
                let (a, b) = (v[i], v[i | bit]);
                v[i] = m[0][0] * a + m[0][1] * b;
                v[i | bit] = m[1][0] * a + m[1][1] * b;
            }
        }
    }
}

/// Largest singular value of a 2x2 matrix.
fn spectral_norm(m: &Confusion) -> f64 {
    let (a, b, c, d) = (m[0][0], m[0][1], m[1][0], m[1][1]);
    let s = a * a + b * b + c * c + d * d;
    let det = a * d - b * c;
    ((s + (s * s - 4.0 * det * det).max(0.0).sqrt()) / 2.0).sqrt()
}

/// Estimates each qubit's confusion matrix by preparing all-`|0>` and
/// all-`|1>` registers and sampling them through `noise`.
pub fn build_calibration(
    noise: &ReadoutNoise,
    qubits: usize,
    shots: u64,
    seed: u64,
) -> Result<CalibrationMatrix> {
    if shots == 0 {
        return Err(HeffError::invalid(
            "calibration shot count must be positive",
        ));
    }
    let zeros = Circuit::new(qubits);
    let mut ones = Circuit::new(qubits);
    ones.extend((0..qubits).map(Gate::X))?;

    let read_zero = sample_counts(&zeros, shots, seed, Some(noise))?;
    let read_one = sample_counts(&ones, shots, seed ^ 0x6a09_e667_f3bc_c908, Some(noise))?;
    let ones_frequency = |r: &ShotResult, q: usize| {
        r.counts
            .iter()
            .filter(|(&w, _)| w >> q & 1 == 1)
            .map(|(_, &n)| n)
            .sum::<u64>() as f64
            / shots as f64
    };
    let mats = (0..qubits)
        .map(|q| {
            let p01 = ones_frequency(&read_zero, q);
            let p11 = ones_frequency(&read_one, q);
            [[1.0 - p01, 1.0 - p11], [p01, p11]]
        })
        .collect();
    CalibrationMatrix::from_confusions(mats)
}

/// Solves `A p = e` for `p >= 0` in least squares, `A` the tensor product of
/// `mats`. Returns the unconstrained solution when it is already feasible.
pub fn nnls_unfold(mats: &[Confusion], observed: &[f64]) -> Vec<f64> {
    let mut p = observed.to_vec();
    let inverses: Vec<Confusion> = mats.iter().map(inverse).collect();
    kron_apply(&inverses, &mut p);
    if p.iter().all(|&x| x >= -1e-15) {
        p.iter_mut().for_each(|x| *x = x.max(0.0));
        return p;
    }

    // Accelerated projected gradient on 0.5 * |A p - e|^2.
    let transposed: Vec<Confusion> = mats.iter().map(transpose).collect();
    let lipschitz: f64 = mats.iter().map(|m| spectral_norm(m).powi(2)).product();
    let step = 1.0 / lipschitz;
    let project = |v: &mut Vec<f64>| v.iter_mut().for_each(|x| *x = x.max(0.0));

    let mut x = p;
    project(&mut x);
    let mut y = x.clone();
    let mut t = 1.0f64;
    for _ in 0..NNLS_MAX_ITERATIONS {
        let mut residual = y.clone();
        kron_apply(mats, &mut residual);
        residual.iter_mut().zip(observed).for_each(|(r, e)| *r -= e);
        kron_apply(&transposed, &mut residual);
        let mut next: Vec<f64> = y.iter().zip(&residual).map(|(v, g)| v - step * g).collect();
        project(&mut next);
        let change: f64 = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let momentum = (t - 1.0) / t_next;
        y = next
            .iter()
            .zip(&x)
            .map(|(n, o)| n + momentum * (n - o))
            .collect();
        x = next;
        t = t_next;
        if change < NNLS_TOLERANCE {
            break;
        }
    }
    x
}

/// Unfolds a distribution over `measured` qubits (full-register keys).
pub fn mitigate_distribution(
    dist: &Distribution,
    measured: &[usize],
    cal: &CalibrationMatrix,
) -> Result<Distribution> {
    if measured.len() > 24 {
        return Err(HeffError::Capacity {
            what: "mitigated register",
            size: measured.len(),
            limit: 24,
        });
    }
    let mats = measured
        .iter()
        .map(|&q| {
            cal.confusion(q).copied().ok_or_else(|| {
                HeffError::invalid(format!("calibration does not cover measured qubit {q}"))
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let to_local = |w: u64| {
        measured
            .iter()
            .enumerate()
            .fold(0usize, |acc, (k, &q)| acc | (((w >> q) & 1) as usize) << k)
    };
    let to_word = |i: usize| {
        measured
            .iter()
            .enumerate()
            .fold(0u64, |acc, (k, &q)| acc | (((i >> k) & 1) as u64) << q)
    };

    let mut observed = vec![0.0; 1 << measured.len()];
    for (&w, &p) in &dist.probabilities {
        observed[to_local(w)] += p;
    }
    let p = nnls_unfold(&mats, &observed);
    let total: f64 = p.iter().sum();
    if total <= 0.0 {
        return Err(HeffError::invalid("mitigated distribution vanished"));
    }
    let probabilities: BTreeMap<u64, f64> = p
        .iter()
        .enumerate()
        .filter(|(_, &x)| x > 0.0)
        .map(|(i, &x)| (to_word(i), x / total))
        .collect();
    Ok(Distribution {
        probabilities,
        shots: dist.shots,
    })
}

/// Corrected outcome distribution of a noisy histogram.
pub fn mitigate(counts: &ShotResult, cal: &CalibrationMatrix) -> Result<Distribution> {
    mitigate_distribution(&counts.to_distribution(), &counts.measured, cal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::StateVector;

    fn noisy_exact_distribution(c: &Circuit, noise: &ReadoutNoise) -> (Distribution, Distribution) {
        let probs = StateVector::run(c).unwrap().probabilities();
        let clean: BTreeMap<u64, f64> = probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, &p)| (i as u64, p))
            .collect();
        let mut noisy = vec![0.0; probs.len()];
        for (i, &p) in probs.iter().enumerate() {
            for (j, slot) in noisy.iter_mut().enumerate() {
                let mut w = p;
                for q in 0..c.qubits() {
                    let (b_in, b_out) = (i >> q & 1, j >> q & 1);
                    let r = noise.rates(q);
                    w *= match (b_in, b_out) {
                        (0, 0) => 1.0 - r.p01,
                        (0, _) => r.p01,
                        (_, 0) => r.p10,
                        _ => 1.0 - r.p10,
                    };
                }
                *slot += w;
            }
        }
        let noisy = noisy
            .iter()
            .enumerate()
            .map(|(i, &p)| (i as u64, p))
            .collect();
        (
            Distribution {
                probabilities: clean,
                shots: 0,
            },
            Distribution {
                probabilities: noisy,
                shots: 0,
            },
        )
    }

    #[test]
    fn exact_calibration_recovers_noiseless_distribution() {
        let mut c = Circuit::new(3);
        c.extend([
            Gate::Ry(0, 0.7),
            Gate::Cnot {
                control: 0,
                target: 1,
            },
            Gate::H(2),
        ])
        .unwrap();
        let noise = ReadoutNoise::per_qubit(vec![
            crate::circuit::FlipRates::new(0.02, 0.05).unwrap(),
            crate::circuit::FlipRates::new(0.1, 0.01).unwrap(),
            crate::circuit::FlipRates::new(0.03, 0.03).unwrap(),
        ])
        .unwrap();
        let (clean, noisy) = noisy_exact_distribution(&c, &noise);
        let cal = CalibrationMatrix::exact(&noise, 3);
        let fixed = mitigate_distribution(&noisy, &[0, 1, 2], &cal).unwrap();
        for i in 0..8u64 {
            let a = clean.probabilities.get(&i).copied().unwrap_or(0.0);
            let b = fixed.probabilities.get(&i).copied().unwrap_or(0.0);
            assert!((a - b).abs() < 1e-12, "{i}: {a} vs {b}");
        }
    }

    #[test]
    fn identity_calibration_is_noop() {
        let mut c = Circuit::new(2);
        c.push(Gate::H(0)).unwrap();
        let counts = sample_counts(&c, 1000, 3, None).unwrap();
        let out = mitigate(&counts, &CalibrationMatrix::identity(2)).unwrap();
        assert_eq!(out, counts.to_distribution());
    }

    #[test]
    fn exact_calibration_has_documented_entries() {
        let noise = ReadoutNoise::uniform(0.02, 0.07).unwrap();
        let cal = CalibrationMatrix::exact(&noise, 1);
        assert_eq!(
            cal.confusion(0).unwrap(),
            &[[1.0 - 0.02, 0.07], [0.02, 1.0 - 0.07]]
        );
    }

    #[test]
    fn sampled_calibration_is_close() {
        let noise = ReadoutNoise::uniform(0.02, 0.02).unwrap();
        let cal = build_calibration(&noise, 3, 8000, 9).unwrap();
        let tol = 4.0 * (0.02f64 * 0.98 / 8000.0).sqrt();
        for m in cal.confusions() {
            assert!((m[0][0] - 0.98).abs() < tol);
            assert!((m[1][1] - 0.98).abs() < tol);
        }
        let quiet = ReadoutNoise::uniform(0.0, 0.0).unwrap();
        let cal = build_calibration(&quiet, 2, 100, 9).unwrap();
        assert_eq!(cal, CalibrationMatrix::identity(2));
    }

    #[test]
    fn infeasible_inversion_is_projected() {
        // A pure |0> sample reads perfectly; inverting the noise would push
        // probability below zero on |1>.
        let m = [[0.9, 0.1], [0.1, 0.9]];
        let p = nnls_unfold(&[m], &[1.0, 0.0]);
        assert!(p.iter().all(|&x| x >= 0.0));
        // The optimum on the boundary p = (a, 0) minimizes
        // (0.9a - 1)^2 + (0.1a)^2, i.e. a = 0.9 / 0.82.
        assert!((p[0] - 0.9 / 0.82).abs() < 1e-9, "{p:?}");
        assert_eq!(p[1], 0.0);
    }

    #[test]
    fn rejects_uncovered_qubit() {
        let d = Distribution {
            probabilities: BTreeMap::from([(0, 1.0)]),
            shots: 1,
        };
        assert!(mitigate_distribution(&d, &[3], &CalibrationMatrix::identity(2)).is_err());
    }
}

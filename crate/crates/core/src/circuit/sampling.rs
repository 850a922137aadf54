use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Binomial;
use serde::{Deserialize, Serialize};

use super::state::StateVector;
use super::{Circuit, Gate};
use crate::error::{HeffError, Result};
use crate::pauli::{PauliOp, PauliString};

/// An estimated real quantity with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub shots: u64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            value,
            stderr: 0.0,
            shots: 0,
        }
    }
}

/// Asymmetric readout flip probabilities of one qubit.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct FlipRates {
    /// Probability of reading 1 when the qubit is in `|0>`.
    pub p01: f64,
    /// Probability of reading 0 when the qubit is in `|1>`.
    pub p10: f64,
}

impl FlipRates {
    pub fn new(p01: f64, p10: f64) -> Result<Self> {
        for p in [p01, p10] {
            if !(0.0..0.5).contains(&p) {
                return Err(HeffError::invalid(format!(
                    "readout flip probability {p} outside [0, 0.5)"
                )));
            }
        }
        Ok(FlipRates { p01, p10 })
    }

    fn flip_probability(&self, bit: bool) -> f64 {
        if bit {
            self.p10
        } else {
            self.p01
        }
    }
}

/// Measurement readout noise, either shared by all qubits or given per qubit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutNoise {
    Uniform(FlipRates),
    PerQubit(Vec<FlipRates>),
}

impl ReadoutNoise {
    pub fn uniform(p01: f64, p10: f64) -> Result<Self> {
        Ok(ReadoutNoise::Uniform(FlipRates::new(p01, p10)?))
    }

    pub fn per_qubit(rates: Vec<FlipRates>) -> Result<Self> {
        for r in &rates {
            FlipRates::new(r.p01, r.p10)?;
        }
        Ok(ReadoutNoise::PerQubit(rates))
    }

    /// Flip rates of `qubit`; qubits beyond a per-qubit list are noiseless.
    pub fn rates(&self, qubit: usize) -> FlipRates {
        match self {
            ReadoutNoise::Uniform(r) => *r,
            ReadoutNoise::PerQubit(v) => v.get(qubit).copied().unwrap_or_default(),
        }
    }
}

fn binomial_draw<R: Rng>(rng: &mut R, n: u64, p: f64) -> Result<u64> {
    let p = p.clamp(0.0, 1.0);
    let dist =
        Binomial::new(n, p).map_err(|e| HeffError::invalid(format!("binomial draw: {e}")))?;
    Ok(rng.sample(dist))
}

/// Histogram of measured words. Keys hold the full register word with
/// unmeasured qubits cleared.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotResult {
    pub qubits: usize,
    pub measured: Vec<usize>,
    pub counts: BTreeMap<u64, u64>,
    pub shots: u64,
    pub seed: u64,
}

impl ShotResult {
    pub fn measured_mask(&self) -> u64 {
        self.measured.iter().fold(0, |acc, &q| acc | 1 << q)
    }

    /// Parity estimate of the qubits in `mask` with the binomial standard
    /// error `sqrt((1 - est^2) / shots)`.
    pub fn parity_expectation(&self, mask: u64) -> Estimate {
        let sum: i64 = self
            .counts
            .iter()
            .map(|(&w, &n)| parity(w & mask) * n as i64)
            .sum();
        let value = sum as f64 / self.shots as f64;
        Estimate {
            value,
            stderr: ((1.0 - value * value).max(0.0) / self.shots as f64).sqrt(),
            shots: self.shots,
        }
    }

    pub fn to_distribution(&self) -> Distribution {
        Distribution {
            probabilities: self
                .counts
                .iter()
                .map(|(&w, &n)| (w, n as f64 / self.shots as f64))
                .collect(),
            shots: self.shots,
        }
    }

    /// Bitstring rendering (qubit 0 first) for reports.
    pub fn labeled_counts(&self) -> BTreeMap<String, u64> {
        self.counts
            .iter()
            .map(|(&w, &n)| {
                let label: String = (0..self.qubits)
                    .map(|q| if w >> q & 1 == 1 { '1' } else { '0' })
                    .collect();
                (label, n)
            })
            .collect()
    }
}

fn parity(word: u64) -> i64 {
    if word.count_ones().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Probability distribution over measured words, possibly after mitigation.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    pub probabilities: BTreeMap<u64, f64>,
    pub shots: u64,
}

impl Distribution {
    /// Mean of a per-outcome function with the plug-in standard error
    /// `sqrt(Var f / shots)`.
    pub fn mean_of(&self, f: impl Fn(u64) -> f64) -> Estimate {
        let (mut m1, mut m2) = (0.0, 0.0);
        for (&w, &p) in &self.probabilities {
            let v = f(w);
            m1 += p * v;
            m2 += p * v * v;
        }
        Estimate {
            value: m1,
            stderr: ((m2 - m1 * m1).max(0.0) / self.shots.max(1) as f64).sqrt(),
            shots: self.shots,
        }
    }

    pub fn parity_expectation(&self, mask: u64) -> Estimate {
        self.mean_of(|w| parity(w & mask) as f64)
    }
}

/// Appends the rotations that map `obs`'s eigenbasis onto the Z basis
/// (`H` for X sites, `S†` then `H` for Y sites).
pub fn with_basis_change(circuit: &Circuit, obs: &PauliString) -> Result<Circuit> {
    if obs.len() != circuit.qubits() {
        return Err(HeffError::LengthMismatch {
            expected: circuit.qubits(),
            found: obs.len(),
        });
    }
    let mut rotated = circuit.clone();
    for (q, op) in obs.ops().enumerate() {
        match op {
            PauliOp::X => rotated.push(Gate::H(q))?,
            PauliOp::Y => {
                rotated.push(Gate::Sdg(q))?;
                rotated.push(Gate::H(q))?;
            }
            PauliOp::I | PauliOp::Z => {}
        }
    }
    let mut measured: Vec<usize> = circuit.measured().to_vec();
    for q in 0..obs.len() {
        if obs.support() >> q & 1 == 1 && !measured.contains(&q) {
            measured.push(q);
        }
    }
    measured.sort_unstable();
    rotated.set_measured(measured)?;
    Ok(rotated)
}

/// Draws `shots` computational-basis outcomes of `circuit` on its measured
/// qubits, optionally through a readout flip channel. Outcomes and flips use
/// independent streams of the same seed.
pub fn sample_counts(
    circuit: &Circuit,
    shots: u64,
    seed: u64,
    noise: Option<&ReadoutNoise>,
) -> Result<ShotResult> {
    if shots == 0 {
        return Err(HeffError::invalid("shot count must be positive"));
    }
    let state = StateVector::run(circuit)?;
    let measured = circuit.measured().to_vec();
    let mask = measured.iter().fold(0u64, |acc, &q| acc | 1 << q);

    let mut marginal: BTreeMap<u64, f64> = BTreeMap::new();
    for (i, p) in state.probabilities().into_iter().enumerate() {
        if p > 0.0 {
            *marginal.entry(i as u64 & mask).or_insert(0.0) += p;
        }
    }

    // Multinomial draw as a chain of conditional binomials.
    let mut outcome_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = BTreeMap::new();
    let mut left = shots;
    let mut mass: f64 = marginal.values().sum();
    for (&word, &p) in &marginal {
        if left == 0 {
            break;
        }
        let n = binomial_draw(&mut outcome_rng, left, p / mass)?;
        if n > 0 {
            counts.insert(word, n);
        }
        left -= n;
        mass -= p;
    }

    if let Some(noise) = noise {
        let mut noise_rng = ChaCha8Rng::seed_from_u64(seed);
        noise_rng.set_stream(1);
        for &q in &measured {
            let rates = noise.rates(q);
            let mut next = BTreeMap::new();
            for (&word, &n) in &counts {
                let flipped = binomial_draw(
                    &mut noise_rng,
                    n,
                    rates.flip_probability(word >> q & 1 == 1),
                )?;
                if flipped > 0 {
                    *next.entry(word ^ (1 << q)).or_insert(0) += flipped;
                }
                if n > flipped {
                    *next.entry(word).or_insert(0) += n - flipped;
                }
            }
            counts = next;
        }
    }
    Ok(ShotResult {
        qubits: circuit.qubits(),
        measured,
        counts,
        shots,
        seed,
    })
}

/// Samples the expectation of `obs` after rotating into its eigenbasis.
pub fn sample(
    circuit: &Circuit,
    obs: &PauliString,
    shots: u64,
    seed: u64,
    noise: Option<&ReadoutNoise>,
) -> Result<(ShotResult, Estimate)> {
    let rotated = with_basis_change(circuit, obs)?;
    let result = sample_counts(&rotated, shots, seed, noise)?;
    let estimate = result.parity_expectation(obs.support());
    Ok((result, estimate))
}

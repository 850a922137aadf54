//! Selection of the computational-basis subspace.
//!
//! A reference configuration minimizing the diagonal energy is found (by
//! exhaustive scan or simulated annealing), all configurations up to a given
//! excitation order are enumerated around it, and the lowest-energy ones are
//! kept. Ties are broken by ascending energy and then by lexicographic order
//! of the bitstring.

use std::cmp::Ordering;
use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HeffError, Result};
use crate::pauli::{BasisState, PauliSum};

/// Largest configuration space the exhaustive reference search will scan.
pub const MAX_EXHAUSTIVE_CONFIGURATIONS: u128 = 1 << 28;

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Number of configurations exactly `order` excitations away from a
/// reference with `particles` of `modes` occupied.
pub fn excitation_count(modes: usize, particles: usize, order: usize) -> u128 {
    binomial(particles, order) * binomial(modes.saturating_sub(particles), order)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetSize {
    All,
    Count(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    /// Each sweep proposes one particle move per mode.
    pub sweeps: usize,
    pub seed: u64,
    /// Starting temperature; `None` uses the standard deviation of the
    /// diagonal energy over 100 random configurations.
    pub initial_temperature: Option<f64>,
    /// Geometric factor applied to the temperature after every sweep.
    pub cooling: f64,
}

impl AnnealSchedule {
    pub fn with_seed(seed: u64) -> Self {
        AnnealSchedule {
            sweeps: 200,
            seed,
            initial_temperature: None,
            cooling: 0.95,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStrategy {
    Exhaustive,
    MonteCarlo(AnnealSchedule),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceSpec {
    pub particles: usize,
    pub max_excitation_order: usize,
    pub target_size: TargetSize,
    pub strategy: SearchStrategy,
}

impl SubspaceSpec {
    pub fn new(particles: usize, max_excitation_order: usize) -> Self {
        SubspaceSpec {
            particles,
            max_excitation_order,
            target_size: TargetSize::All,
            strategy: SearchStrategy::Exhaustive,
        }
    }

    pub fn with_target(mut self, target: TargetSize) -> Self {
        self.target_size = target;
        self
    }

    pub fn with_strategy(mut self, strategy: SearchStrategy) -> Self {
        self.strategy = strategy;
        self
    }
}

/// The basis the effective Hamiltonian is built on. `states[0]` is the reference.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceBasis {
    pub reference: BasisState,
    pub states: Vec<BasisState>,
    pub diagonal_energies: Vec<f64>,
    /// Non-fatal notes, e.g. a requested size larger than the candidate pool.
    pub warnings: Vec<String>,
}

impl SubspaceBasis {
    /// Wraps an explicit state list; the first entry is the reference and the
    /// rest are re-sorted by diagonal energy.
    pub fn from_states(h: &PauliSum, states: Vec<BasisState>) -> Result<Self> {
        let reference = *states
            .first()
            .ok_or_else(|| HeffError::invalid("a subspace needs at least one state"))?;
        let nf = reference.particle_count();
        let mut seen = HashSet::new();
        for s in &states {
            if s.len() != h.qubit_count() {
                return Err(HeffError::LengthMismatch {
                    expected: h.qubit_count(),
                    found: s.len(),
                });
            }
            if s.particle_count() != nf {
                return Err(HeffError::invalid(format!(
                    "state {s} has {} particles, reference has {nf}",
                    s.particle_count()
                )));
            }
            if !seen.insert(*s) {
                return Err(HeffError::invalid(format!("duplicate state {s}")));
            }
        }
        let mut rest: Vec<(f64, BasisState)> = states[1..]
            .iter()
            .map(|s| Ok((diagonal_energy(h, s)?, *s)))
            .collect::<Result<_>>()?;
        rest.sort_by(energy_order);
        let mut states = vec![reference];
        let mut energies = vec![diagonal_energy(h, &reference)?];
        for (e, s) in rest {
            states.push(s);
            energies.push(e);
        }
        Ok(SubspaceBasis {
            reference,
            states,
            diagonal_energies: energies,
            warnings: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// One bitstring per line, reference first.
    pub fn to_text(&self) -> String {
        self.states.iter().map(|s| format!("{s}\n")).collect()
    }
}

/// Reads a bitstring-per-line subspace file (`#` comments allowed).
pub fn parse_states(text: &str) -> Result<Vec<BasisState>> {
    text.lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let line = raw.split('#').next().unwrap_or("").trim();
            (!line.is_empty()).then_some((i + 1, line))
        })
        .map(|(line, s)| {
            s.parse().map_err(|e: HeffError| HeffError::Parse {
                line,
                message: e.to_string(),
            })
        })
        .collect()
}

fn energy_order(a: &(f64, BasisState), b: &(f64, BasisState)) -> Ordering {
    a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1))
}

/// `<n|H|n>`; only `I`/`Z` strings contribute.
pub fn diagonal_energy(h: &PauliSum, n: &BasisState) -> Result<f64> {
    Ok(h.matrix_element(n, n)?.re)
}

/// Diagonal energy evaluated straight from `I`/`Z` bit masks.
struct DiagonalModel {
    qubits: usize,
    terms: Vec<(f64, u64)>,
}

impl DiagonalModel {
    fn new(h: &PauliSum) -> Self {
        let (diag, _) = h.classify();
        DiagonalModel {
            qubits: h.qubit_count(),
            terms: diag.iter().map(|(w, s)| (w.re, s.z_mask())).collect(),
        }
    }

    fn energy(&self, bits: u64) -> f64 {
        self.terms
            .iter()
            .map(|&(w, z)| {
                if (z & bits).count_ones().is_multiple_of(2) {
                    w
                } else {
                    -w
                }
            })
            .sum()
    }

    fn state(&self, bits: u64) -> BasisState {
        BasisState::new(self.qubits, bits).expect("bits within register")
    }
}

fn check_particles(modes: usize, particles: usize) -> Result<()> {
    if particles == 0 || particles >= modes {
        Err(HeffError::InvalidParticleCount { particles, modes })
    } else {
        Ok(())
    }
}

/// Next bit word with the same popcount (Gosper's hack).
fn next_combination(v: u64) -> u64 {
    let t = v | (v - 1);
    let shifted = (!t & t.wrapping_add(1)).wrapping_sub(1) >> (v.trailing_zeros() + 1);
    t.wrapping_add(1) | shifted
}

fn random_configuration(rng: &mut ChaCha8Rng, modes: usize, particles: usize) -> u64 {
    let mut positions: Vec<usize> = (0..modes).collect();
    for i in 0..particles {
        let j = rng.random_range(i..modes);
        positions.swap(i, j);
    }
    positions[..particles]
        .iter()
        .fold(0u64, |acc, &p| acc | 1 << p)
}

/// Configuration with `particles` set bits minimizing `<n|H|n>`.
pub fn find_reference(
    h: &PauliSum,
    particles: usize,
    strategy: &SearchStrategy,
) -> Result<BasisState> {
    let modes = h.qubit_count();
    check_particles(modes, particles)?;
    let model = DiagonalModel::new(h);
    match strategy {
        SearchStrategy::Exhaustive => {
            let total = binomial(modes, particles);
            if total > MAX_EXHAUSTIVE_CONFIGURATIONS {
                return Err(HeffError::Capacity {
                    what: "exhaustive reference search",
                    size: total.min(usize::MAX as u128) as usize,
                    limit: MAX_EXHAUSTIVE_CONFIGURATIONS as usize,
                });
            }
            let mut bits = (1u64 << particles) - 1;
            let mut best = (model.energy(bits), model.state(bits));
            for _ in 1..total {
                bits = next_combination(bits);
                let candidate = (model.energy(bits), model.state(bits));
                if energy_order(&candidate, &best) == Ordering::Less {
                    best = candidate;
                }
            }
            Ok(best.1)
        }
        SearchStrategy::MonteCarlo(schedule) => Ok(anneal(&model, particles, schedule)),
    }
}

fn anneal(model: &DiagonalModel, particles: usize, schedule: &AnnealSchedule) -> BasisState {
    let modes = model.qubits;
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let t0 = schedule.initial_temperature.unwrap_or_else(|| {
        let samples: Vec<f64> = (0..100)
            .map(|_| model.energy(random_configuration(&mut rng, modes, particles)))
            .collect();
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        (samples.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / samples.len() as f64).sqrt()
    });
    let mut bits = random_configuration(&mut rng, modes, particles);
    let mut energy = model.energy(bits);
    let mut best = (energy, model.state(bits));
    let mut temperature = t0;
    for _ in 0..schedule.sweeps {
        for _ in 0..modes {
            let occupied = rng.random_range(0..particles);
            let empty = rng.random_range(0..modes - particles);
            let from = nth_set_bit(bits, occupied);
            let to = nth_set_bit(!bits & low_mask(modes), empty);
            let proposal = bits ^ (1 << from) ^ (1 << to);
            let e = model.energy(proposal);
            let delta = e - energy;
            let accept = delta <= 0.0
                || (temperature > 0.0 && rng.random::<f64>() < (-delta / temperature).exp());
            if accept {
                bits = proposal;
                energy = e;
                let candidate = (energy, model.state(bits));
                if energy_order(&candidate, &best) == Ordering::Less {
                    best = candidate;
                }
            }
        }
        temperature *= schedule.cooling;
    }
    best.1
}

fn low_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn nth_set_bit(word: u64, n: usize) -> u32 {
    let mut w = word;
    for _ in 0..n {
        w &= w - 1;
    }
    w.trailing_zeros()
}

/// Index combinations of size `k` from `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// All configurations reached by moving exactly `order` particles from
/// occupied to empty modes. Returns an empty list when `order` exceeds the
/// number of occupied or empty modes.
pub fn enumerate_excitations(reference: &BasisState, order: usize) -> Vec<BasisState> {
    let occupied: Vec<usize> = reference.occupied().collect();
    let empty: Vec<usize> = reference.unoccupied().collect();
    if order > occupied.len() || order > empty.len() {
        return Vec::new();
    }
    if order == 0 {
        return vec![*reference];
    }
    let holes = combinations(occupied.len(), order);
    let particles = combinations(empty.len(), order);
    let mut out = Vec::with_capacity(holes.len() * particles.len());
    for h in &holes {
        let h_mask = h.iter().fold(0u64, |acc, &i| acc | 1 << occupied[i]);
        for p in &particles {
            let p_mask = p.iter().fold(0u64, |acc, &i| acc | 1 << empty[i]);
            out.push(reference.with_flipped(h_mask | p_mask));
        }
    }
    out
}

/// Reference plus the lowest-energy excitations up to the requested order.
pub fn build_subspace(h: &PauliSum, spec: &SubspaceSpec) -> Result<SubspaceBasis> {
    let modes = h.qubit_count();
    check_particles(modes, spec.particles)?;
    let max_order = spec.particles.min(modes - spec.particles);
    if spec.max_excitation_order > max_order {
        return Err(HeffError::invalid(format!(
            "excitation order {} exceeds {max_order} for {} particles in {modes} modes",
            spec.max_excitation_order, spec.particles
        )));
    }
    if spec.target_size == TargetSize::Count(0) {
        return Err(HeffError::invalid("target subspace size must be positive"));
    }
    let reference = find_reference(h, spec.particles, &spec.strategy)?;
    let model = DiagonalModel::new(h);
    let mut candidates: Vec<(f64, BasisState)> = (1..=spec.max_excitation_order)
        .flat_map(|order| enumerate_excitations(&reference, order))
        .map(|s| (model.energy(s.bits()), s))
        .collect();
    candidates.sort_by(energy_order);

    let available = candidates.len() + 1;
    let mut warnings = Vec::new();
    let keep = match spec.target_size {
        TargetSize::All => available,
        TargetSize::Count(n) if n > available => {
            let msg =
                format!("requested {n} states but only {available} candidates exist; keeping all");
            log::warn!("{msg}");
            warnings.push(msg);
            available
        }
        TargetSize::Count(n) => n,
    };
    candidates.truncate(keep - 1);

    let mut states = Vec::with_capacity(keep);
    let mut energies = Vec::with_capacity(keep);
    states.push(reference);
    energies.push(model.energy(reference.bits()));
    for (e, s) in candidates {
        states.push(s);
        energies.push(e);
    }
    Ok(SubspaceBasis {
        reference,
        states,
        diagonal_energies: energies,
        warnings,
    })
}

mod common;

use common::*;
use heff::subspace::{
    binomial, diagonal_energy, enumerate_excitations, find_reference, AnnealSchedule,
    SearchStrategy, TargetSize,
};
use heff::{build_effective_hamiltonian, build_subspace, Backend, BasisState, SubspaceSpec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

fn choose(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn excitation_counts_match_binomial_products() {
    for modes in 1..=12usize {
        for particles in 0..=modes {
            let r = BasisState::from_occupied(modes, &(0..particles).collect::<Vec<_>>()).unwrap();
            let mut seen = HashSet::new();
            for order in 0..=modes {
                let states = enumerate_excitations(&r, order);
                let expected = choose(particles as u64, order as u64)
                    * choose((modes - particles) as u64, order as u64);
                assert_eq!(
                    states.len() as u64,
                    expected,
                    "N={modes} NF={particles} n={order}"
                );
                for s in states {
                    assert_eq!(s.particle_count(), particles);
                    assert_eq!((s.bits() ^ r.bits()).count_ones() as usize, 2 * order);
                    assert!(seen.insert(s.bits()));
                }
            }
            assert_eq!(seen.len() as u64, choose(modes as u64, particles as u64));
        }
    }
    assert_eq!(binomial(12, 4), 495);
}

#[test]
fn complete_two_electron_set_in_four_modes() {
    let h = h2();
    let basis = build_subspace(&h, &SubspaceSpec::new(2, 2)).unwrap();
    let got: HashSet<String> = basis.states.iter().map(|s| s.to_string()).collect();
    let expected: HashSet<String> = ["1100", "1010", "1001", "0110", "0101", "0011"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    assert_eq!(got, expected);
    assert_eq!(basis.reference.to_string(), "1100");
}

#[test]
fn truncation_keeps_lowest_diagonal_energies() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = random_pauli(&mut rng, 8, 200);
    let full = build_subspace(&h, &SubspaceSpec::new(4, 2)).unwrap();
    let cut = build_subspace(
        &h,
        &SubspaceSpec::new(4, 2).with_target(TargetSize::Count(10)),
    )
    .unwrap();
    assert_eq!(cut.len(), 10);
    let mut rest: Vec<f64> = full.diagonal_energies[1..].to_vec();
    rest.sort_by(f64::total_cmp);
    let mut kept: Vec<f64> = cut.diagonal_energies[1..].to_vec();
    kept.sort_by(f64::total_cmp);
    assert_eq!(kept, rest[..9].to_vec());
}

#[test]
fn oversized_request_keeps_everything_with_a_warning() {
    let basis = build_subspace(
        &h2(),
        &SubspaceSpec::new(2, 2).with_target(TargetSize::Count(50)),
    )
    .unwrap();
    assert_eq!(basis.len(), 6);
    assert_eq!(basis.warnings.len(), 1);
}

#[test]
fn bad_requests_are_rejected() {
    let h = h2();
    assert!(build_subspace(&h, &SubspaceSpec::new(5, 1)).is_err());
    assert!(build_subspace(&h, &SubspaceSpec::new(2, 3)).is_err());
    assert!(build_subspace(
        &h,
        &SubspaceSpec::new(2, 1).with_target(TargetSize::Count(0))
    )
    .is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn exhaustive_reference_is_the_global_minimum(seed in any::<u64>(), modes in 3usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_pauli(&mut rng, modes, 400);
        let particles = modes / 2;
        let r = find_reference(&h, particles, &SearchStrategy::Exhaustive).unwrap();
        let m = dense(&h);
        let best = sector_bits(modes, particles)
            .into_iter()
            .map(|b| m[(b as usize, b as usize)].re)
            .fold(f64::INFINITY, f64::min);
        prop_assert!((diagonal_energy(&h, &r).unwrap() - best).abs() < 1e-12);
        prop_assert_eq!(r.particle_count(), particles);
    }

    #[test]
    fn annealed_reference_has_the_right_particle_count(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_pauli(&mut rng, 8, 400);
        let strategy = SearchStrategy::MonteCarlo(AnnealSchedule::with_seed(seed));
        let r = find_reference(&h, 3, &strategy).unwrap();
        let exact = find_reference(&h, 3, &SearchStrategy::Exhaustive).unwrap();
        prop_assert_eq!(r.particle_count(), 3);
        prop_assert!(diagonal_energy(&h, &r).unwrap() >= diagonal_energy(&h, &exact).unwrap() - 1e-12);
        prop_assert_eq!(find_reference(&h, 3, &strategy).unwrap(), r);
    }

    #[test]
    fn subspace_ground_energy_bounds_and_decreases(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_pauli(&mut rng, 8, 400);
        let exact = eigvals(&project(&dense(&h), &sector_bits(8, 4)))[0];
        let mut previous = f64::INFINITY;
        for order in 1..=3 {
            let basis = build_subspace(&h, &SubspaceSpec::new(4, order)).unwrap();
            let heff = build_effective_hamiltonian(&h, &basis, &Backend::oracle()).unwrap();
            let e0 = eigvals(&heff.matrix)[0];
            prop_assert!(e0 >= exact - 1e-9);
            prop_assert!(e0 <= previous + 1e-9);
            previous = e0;
        }
    }
}

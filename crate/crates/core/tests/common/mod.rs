//! Reference implementations shared by the integration tests. Nothing here
//! calls into the library's own matrix-element or mapping code.

#![allow(dead_code)]

use heff::fermion::{FermionTerm, LadderOp};
use heff::{FermionHamiltonian, PauliSum};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// 2x2 matrix of a single Pauli factor, indexed [row][col].
fn factor(op: char) -> [[Complex64; 2]; 2] {
    let (o, l, i) = (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
    match op {
        'I' => [[l, o], [o, l]],
        'X' => [[o, l], [l, o]],
        'Y' => [[o, -i], [i, o]],
        'Z' => [[l, o], [o, -l]],
        _ => panic!("bad Pauli factor {op}"),
    }
}

/// Dense matrix of a Pauli string; basis index bit `q` is qubit `q`,
/// which is character `q` of the label.
pub fn dense_string(label: &str) -> DMatrix<Complex64> {
    let ops: Vec<_> = label.chars().map(factor).collect();
    let dim = 1usize << ops.len();
    DMatrix::from_fn(dim, dim, |r, col| {
        ops.iter()
            .enumerate()
            .map(|(q, m)| m[(r >> q) & 1][(col >> q) & 1])
            .product()
    })
}

pub fn dense(h: &PauliSum) -> DMatrix<Complex64> {
    let dim = 1usize << h.qubit_count();
    let mut m = DMatrix::zeros(dim, dim);
    for (w, s) in h.terms() {
        m += dense_string(&s.to_string()) * *w;
    }
    m
}

/// Dense annihilation operator on mode `p` with the sign counting occupied
/// modes below `p`.
pub fn dense_annihilator(modes: usize, p: usize) -> DMatrix<Complex64> {
    let dim = 1usize << modes;
    let mut m = DMatrix::zeros(dim, dim);
    for s in 0..dim {
        if s >> p & 1 == 1 {
            let below = (s & ((1 << p) - 1)).count_ones();
            let sign = if below.is_multiple_of(2) { 1.0 } else { -1.0 };
            m[(s ^ (1 << p), s)] = c(sign, 0.0);
        }
    }
    m
}

pub fn sector_bits(modes: usize, particles: usize) -> Vec<u64> {
    (0u64..1 << modes)
        .filter(|s| s.count_ones() as usize == particles)
        .collect()
}

/// Applies a ladder product (rightmost first) to an occupation word.
fn apply_term(term: &FermionTerm, mut s: u64) -> Option<(f64, u64)> {
    let mut sign = 1.0;
    for f in term.factors.iter().rev() {
        let occupied = s >> f.mode & 1 == 1;
        if occupied == f.dagger {
            return None;
        }
        if (s & ((1u64 << f.mode) - 1)).count_ones() % 2 == 1 {
            sign = -sign;
        }
        s ^= 1 << f.mode;
    }
    Some((sign, s))
}

/// Sector matrix of a fermionic Hamiltonian built straight from occupation
/// words, rows and columns in ascending bit order.
pub fn fermion_sector_matrix(h: &FermionHamiltonian, particles: usize) -> DMatrix<Complex64> {
    let states = sector_bits(h.mode_count(), particles);
    let index = |s: u64| states.iter().position(|&t| t == s).unwrap();
    let n = states.len();
    let mut m = DMatrix::from_diagonal_element(n, n, c(h.constant(), 0.0));
    for (col, &s) in states.iter().enumerate() {
        for t in h.terms() {
            if let Some((sign, out)) = apply_term(t, s) {
                m[(index(out), col)] += t.coefficient * sign;
            }
        }
    }
    m
}

pub fn project(full: &DMatrix<Complex64>, bits: &[u64]) -> DMatrix<Complex64> {
    let n = bits.len();
    DMatrix::from_fn(n, n, |i, j| full[(bits[i] as usize, bits[j] as usize)])
}

/// Ascending eigenvalues from nalgebra's Hermitian solver.
pub fn eigvals(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

fn push_hermitian(h: &mut FermionHamiltonian, w: Complex64, factors: Vec<LadderOp>) {
    let adjoint: Vec<LadderOp> = factors
        .iter()
        .rev()
        .map(|f| LadderOp {
            mode: f.mode,
            dagger: !f.dagger,
        })
        .collect();
    if adjoint == factors {
        h.add_term(FermionTerm::new(c(w.re, 0.0), factors)).unwrap();
    } else {
        h.add_term(FermionTerm::new(w, factors)).unwrap();
        h.add_term(FermionTerm::new(w.conj(), adjoint)).unwrap();
    }
}

fn weight<R: Rng>(rng: &mut R, complex: bool) -> Complex64 {
    let im = if complex {
        rng.random_range(-1.0..1.0)
    } else {
        0.0
    };
    c(rng.random_range(-1.0..1.0), im)
}

fn distinct<R: Rng>(rng: &mut R, modes: usize, k: usize) -> Vec<usize> {
    rand::seq::index::sample(rng, modes, k).into_vec()
}

/// Random Hermitian particle-conserving Hamiltonian with `numbers` number
/// operators, `hops` hopping pairs and `doubles` pair-excitation pairs.
pub fn random_fermion<R: Rng>(
    rng: &mut R,
    modes: usize,
    numbers: usize,
    hops: usize,
    doubles: usize,
) -> FermionHamiltonian {
    let mut h = FermionHamiltonian::new(modes)
        .unwrap()
        .with_constant(rng.random_range(-1.0..1.0));
    for _ in 0..numbers {
        let p = rng.random_range(0..modes);
        let w = weight(rng, false);
        push_hermitian(
            &mut h,
            w,
            vec![LadderOp::create(p), LadderOp::annihilate(p)],
        );
    }
    for _ in 0..hops {
        let m = distinct(rng, modes, 2);
        let w = weight(rng, true);
        push_hermitian(
            &mut h,
            w,
            vec![LadderOp::create(m[0]), LadderOp::annihilate(m[1])],
        );
    }
    for _ in 0..doubles {
        let m = distinct(rng, modes, 4);
        let w = weight(rng, true);
        push_hermitian(
            &mut h,
            w,
            vec![
                LadderOp::create(m[0]),
                LadderOp::create(m[1]),
                LadderOp::annihilate(m[2]),
                LadderOp::annihilate(m[3]),
            ],
        );
    }
    h
}

/// Mapped random Hamiltonian with at most `max_terms` Pauli strings.
pub fn random_pauli<R: Rng>(rng: &mut R, modes: usize, max_terms: usize) -> PauliSum {
    loop {
        let numbers = rng.random_range(1..=modes);
        let hops = rng.random_range(1..=3);
        let doubles = if modes >= 4 {
            rng.random_range(0..=1)
        } else {
            0
        };
        let h = heff::jw_transform(&random_fermion(rng, modes, numbers, hops, doubles)).unwrap();
        if h.len() <= max_terms {
            return h;
        }
    }
}

pub fn h2() -> PauliSum {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/h2_sto3g.pauli");
    PauliSum::parse_text(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

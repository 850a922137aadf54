//! Second-quantized Hamiltonians and their Jordan–Wigner image.
//!
//! Terms are mapped factor by factor through [`jw_ladder`] and multiplied as
//! Pauli sums, so reordering signs come out of the string algebra instead of
//! a symbolic normal-ordering pass.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{HeffError, Result};
use crate::pauli::{BasisState, PauliOp, PauliString, PauliSum, MAX_QUBITS};

/// Imaginary weights above this after the transform mean the input was not Hermitian.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LadderOp {
    pub mode: usize,
    pub dagger: bool,
}

impl LadderOp {
    pub fn create(mode: usize) -> Self {
        LadderOp { mode, dagger: true }
    }

    pub fn annihilate(mode: usize) -> Self {
        LadderOp {
            mode,
            dagger: false,
        }
    }
}

impl fmt::Display for LadderOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dagger {
            write!(f, "{}^", self.mode)
        } else {
            write!(f, "{}", self.mode)
        }
    }
}

/// `coefficient * f_0 f_1 ... f_k`, applied right to left.
#[derive(Clone, Debug, PartialEq)]
pub struct FermionTerm {
    pub coefficient: Complex64,
    pub factors: Vec<LadderOp>,
}

impl FermionTerm {
    pub fn new(coefficient: Complex64, factors: Vec<LadderOp>) -> Self {
        FermionTerm {
            coefficient,
            factors,
        }
    }

    pub fn conserves_particles(&self) -> bool {
        let created = self.factors.iter().filter(|f| f.dagger).count();
        2 * created == self.factors.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FermionHamiltonian {
    modes: usize,
    constant: f64,
    terms: Vec<FermionTerm>,
}

impl FermionHamiltonian {
    pub fn new(modes: usize) -> Result<Self> {
        if modes == 0 || modes > MAX_QUBITS {
            return Err(HeffError::TooManyQubits(modes));
        }
        Ok(FermionHamiltonian {
            modes,
            constant: 0.0,
            terms: Vec::new(),
        })
    }

    pub fn with_constant(mut self, constant: f64) -> Self {
        self.constant = constant;
        self
    }

    pub fn set_constant(&mut self, constant: f64) {
        self.constant = constant;
    }

    /// Adds a term after checking mode indices and particle-number conservation.
    pub fn add_term(&mut self, term: FermionTerm) -> Result<()> {
        if term.factors.is_empty() {
            return Err(HeffError::invalid(
                "a term needs at least one ladder operator; use the constant for scalars",
            ));
        }
        if let Some(f) = term.factors.iter().find(|f| f.mode >= self.modes) {
            return Err(HeffError::IndexOutOfRange {
                index: f.mode,
                len: self.modes,
            });
        }
        if !term.conserves_particles() {
            return Err(HeffError::invalid(format!(
                "term {} does not conserve particle number",
                term.factors
                    .iter()
                    .map(|f| f.to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            )));
        }
        self.terms.push(term);
        Ok(())
    }

    pub fn mode_count(&self) -> usize {
        self.modes
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn terms(&self) -> &[FermionTerm] {
        &self.terms
    }

    /// Expands spatial-orbital integrals into spin orbitals (mode `2p + spin`).
    ///
    /// `one_body[p * n + q] = h_pq` and `two_body[((p * n + q) * n + r) * n + s] = (pq|rs)`
    /// in chemists' notation; the operator is
    /// `sum h_pq a+_{p s} a_{q s} + 1/2 sum (pq|rs) a+_{p s} a+_{r t} a_{s t} a_{q s}`.
    pub fn from_spatial_integrals(
        orbitals: usize,
        one_body: &[f64],
        two_body: &[f64],
        constant: f64,
    ) -> Result<Self> {
        let n = orbitals;
        if one_body.len() != n * n || two_body.len() != n.pow(4) {
            return Err(HeffError::invalid(format!(
                "integral arrays must have {} and {} entries",
                n * n,
                n.pow(4)
            )));
        }
        let mut h = FermionHamiltonian::new(2 * n)?.with_constant(constant);
        let so = |p: usize, spin: usize| 2 * p + spin;
        for p in 0..n {
            for q in 0..n {
                let v = one_body[p * n + q];
                if v.abs() < 1e-14 {
                    continue;
                }
                for s in 0..2 {
                    h.add_term(FermionTerm::new(
                        Complex64::new(v, 0.0),
                        vec![LadderOp::create(so(p, s)), LadderOp::annihilate(so(q, s))],
                    ))?;
                }
            }
        }
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let v = two_body[((p * n + q) * n + r) * n + s];
                        if v.abs() < 1e-14 {
                            continue;
                        }
                        for a in 0..2 {
                            for b in 0..2 {
                                let (i, j, k, l) = (so(p, a), so(r, b), so(s, b), so(q, a));
                                if i == j || k == l {
                                    continue;
                                }
                                h.add_term(FermionTerm::new(
                                    Complex64::new(0.5 * v, 0.0),
                                    vec![
                                        LadderOp::create(i),
                                        LadderOp::create(j),
                                        LadderOp::annihilate(k),
                                        LadderOp::annihilate(l),
                                    ],
                                ))?;
                            }
                        }
                    }
                }
            }
        }
        Ok(h)
    }

    /// Parses the fermion text format:
    ///
    /// ```text
    /// modes 4
    /// constant 0.7137
    /// 0.5 0.0 1^ 0^ 2 3
    /// ```
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut hamiltonian: Option<FermionHamiltonian> = None;
        let mut constant = 0.0;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |message: String| HeffError::Parse {
                line: line_no,
                message,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields[0] {
                "modes" => {
                    if hamiltonian.is_some() {
                        return Err(err("duplicate `modes` header".into()));
                    }
                    let n: usize = fields
                        .get(1)
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| err("expected `modes <N>`".into()))?;
                    hamiltonian = Some(FermionHamiltonian::new(n).map_err(|e| err(e.to_string()))?);
                }
                "constant" => {
                    constant = fields
                        .get(1)
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| err("expected `constant <value>`".into()))?;
                }
                _ => {
                    let h = hamiltonian
                        .as_mut()
                        .ok_or_else(|| err("term before `modes` header".into()))?;
                    if fields.len() < 3 {
                        return Err(err("expected `<re> <im> <factor>...`".into()));
                    }
                    let re: f64 = fields[0]
                        .parse()
                        .map_err(|_| err(format!("bad real part {:?}", fields[0])))?;
                    let im: f64 = fields[1]
                        .parse()
                        .map_err(|_| err(format!("bad imaginary part {:?}", fields[1])))?;
                    let factors = fields[2..]
                        .iter()
                        .map(|tok| {
                            parse_factor(tok)
                                .ok_or_else(|| err(format!("malformed factor {tok:?}")))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    h.add_term(FermionTerm::new(Complex64::new(re, im), factors))
                        .map_err(|e| err(e.to_string()))?;
                }
            }
        }
        let h = hamiltonian.ok_or_else(|| HeffError::invalid("missing `modes` header"))?;
        Ok(h.with_constant(constant))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("modes {}\n", self.modes);
        if self.constant != 0.0 {
            out.push_str(&format!("constant {:?}\n", self.constant));
        }
        for t in &self.terms {
            out.push_str(&format!("{:?} {:?}", t.coefficient.re, t.coefficient.im));
            for f in &t.factors {
                out.push_str(&format!(" {f}"));
            }
            out.push('\n');
        }
        out
    }
}

fn parse_factor(tok: &str) -> Option<LadderOp> {
    let (digits, dagger) = match tok.strip_suffix('^') {
        Some(d) => (d, true),
        None => (tok, false),
    };
    digits.parse().ok().map(|mode| LadderOp { mode, dagger })
}

/// Jordan–Wigner image of a single ladder operator on `qubits` qubits:
/// `Z_0 ... Z_{j-1} (X_j -+ i Y_j) / 2`, minus sign for the creation operator
/// (it maps `|0>` to `|1>`).
pub fn jw_ladder(mode: usize, dagger: bool, qubits: usize) -> Result<PauliSum> {
    if mode >= qubits {
        return Err(HeffError::IndexOutOfRange {
            index: mode,
            len: qubits,
        });
    }
    let mut tail = PauliString::identity(qubits)?;
    for k in 0..mode {
        tail.set(k, PauliOp::Z);
    }
    let mut x = tail;
    x.set(mode, PauliOp::X);
    let mut y = tail;
    y.set(mode, PauliOp::Y);
    let y_weight = if dagger { -0.5 } else { 0.5 };
    PauliSum::from_terms(
        qubits,
        [
            (Complex64::new(0.5, 0.0), x),
            (Complex64::new(0.0, y_weight), y),
        ],
    )
}

/// Pauli image of one term, no Hermiticity requirement.
pub fn jw_term(term: &FermionTerm, qubits: usize) -> Result<PauliSum> {
    let mut acc = PauliSum::scalar(qubits, term.coefficient)?;
    for f in &term.factors {
        acc = acc.multiply(&jw_ladder(f.mode, f.dagger, qubits)?)?;
        if acc.is_empty() {
            break;
        }
    }
    Ok(acc)
}

/// Maps a Hermitian fermionic Hamiltonian to a real-weighted Pauli sum; the
/// constant lands on the identity string.
pub fn jw_transform(h: &FermionHamiltonian) -> Result<PauliSum> {
    let n = h.mode_count();
    let images = h
        .terms()
        .par_iter()
        .map(|t| jw_term(t, n))
        .collect::<Result<Vec<_>>>()?;
    let mut total = PauliSum::scalar(n, Complex64::new(h.constant(), 0.0))?;
    for image in images {
        for &(w, s) in image.terms() {
            total.push(w, s)?;
        }
    }
    total.normalize();
    let worst = total.max_imag_weight();
    if worst > HERMITIAN_TOLERANCE {
        return Err(HeffError::NonHermitian(format!(
            "mapped weights carry imaginary parts up to {worst:e}"
        )));
    }
    Ok(total.real_part())
}

/// Checks that `h` never connects basis states of different particle number.
///
/// Exhaustive when `2^N <= trials`, otherwise `trials` random basis states
/// (fixed seed) are mapped through `h` and every image is inspected.
pub fn check_particle_conservation(h: &PauliSum, trials: usize) -> bool {
    let n = h.qubit_count();
    if h.is_empty() {
        return true;
    }
    let check = |bits: u64| -> bool {
        let state = BasisState::new(n, bits).expect("bits within register");
        let nf = state.particle_count();
        h.apply(&state)
            .expect("matching register")
            .iter()
            .all(|(m, amp)| m.particle_count() == nf || amp.norm() <= 1e-12)
    };
    if n < 63 && (1u64 << n) <= trials as u64 {
        (0..1u64 << n).all(check)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let word_mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        (0..trials).all(|_| check(rng.random::<u64>() & word_mask))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn weights(sum: &PauliSum) -> Vec<(String, Complex64)> {
        let mut v: Vec<_> = sum.iter().map(|(w, s)| (s.to_string(), *w)).collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v
    }

    #[test]
    fn ladder_images() {
        assert_eq!(
            weights(&jw_ladder(0, true, 2).unwrap()),
            vec![
                ("XI".to_string(), c(0.5, 0.0)),
                ("YI".to_string(), c(0.0, -0.5))
            ]
        );
        assert_eq!(
            weights(&jw_ladder(1, false, 2).unwrap()),
            vec![
                ("ZX".to_string(), c(0.5, 0.0)),
                ("ZY".to_string(), c(0.0, 0.5))
            ]
        );
        assert!(matches!(
            jw_ladder(2, false, 2),
            Err(HeffError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn number_operator_is_projector_on_one() {
        // a+a = (I - Z)/2: occupied means |1>
        let n = jw_term(
            &FermionTerm::new(
                c(1.0, 0.0),
                vec![LadderOp::create(0), LadderOp::annihilate(0)],
            ),
            1,
        )
        .unwrap();
        assert_eq!(
            weights(&n),
            vec![
                ("I".to_string(), c(0.5, 0.0)),
                ("Z".to_string(), c(-0.5, 0.0))
            ]
        );
        let one: BasisState = "1".parse().unwrap();
        let zero: BasisState = "0".parse().unwrap();
        assert_eq!(n.matrix_element(&one, &one).unwrap(), c(1.0, 0.0));
        assert_eq!(n.matrix_element(&zero, &zero).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn hopping_term() {
        let mut h = FermionHamiltonian::new(2).unwrap();
        h.add_term(FermionTerm::new(
            c(1.0, 0.0),
            vec![LadderOp::create(0), LadderOp::annihilate(1)],
        ))
        .unwrap();
        h.add_term(FermionTerm::new(
            c(1.0, 0.0),
            vec![LadderOp::create(1), LadderOp::annihilate(0)],
        ))
        .unwrap();
        let p = jw_transform(&h).unwrap();
        assert_eq!(
            weights(&p),
            vec![
                ("XX".to_string(), c(0.5, 0.0)),
                ("YY".to_string(), c(0.5, 0.0))
            ]
        );
    }

    #[test]
    fn anticommutator_is_identity() {
        let mut h = FermionHamiltonian::new(1).unwrap();
        h.add_term(FermionTerm::new(
            c(1.0, 0.0),
            vec![LadderOp::annihilate(0), LadderOp::create(0)],
        ))
        .unwrap();
        h.add_term(FermionTerm::new(
            c(1.0, 0.0),
            vec![LadderOp::create(0), LadderOp::annihilate(0)],
        ))
        .unwrap();
        assert_eq!(
            weights(&jw_transform(&h).unwrap()),
            vec![("I".to_string(), c(1.0, 0.0))]
        );
    }

    #[test]
    fn constant_lands_on_identity() {
        let h = FermionHamiltonian::new(3).unwrap().with_constant(0.7);
        let p = jw_transform(&h).unwrap();
        assert_eq!(p.identity_weight(), c(0.7, 0.0));
        assert_eq!(p.len(), 1);
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let mut h = FermionHamiltonian::new(2).unwrap();
        h.add_term(FermionTerm::new(
            c(1.0, 0.0),
            vec![LadderOp::create(0), LadderOp::annihilate(1)],
        ))
        .unwrap();
        assert!(matches!(jw_transform(&h), Err(HeffError::NonHermitian(_))));
    }

    #[test]
    fn invalid_terms_are_rejected() {
        let mut h = FermionHamiltonian::new(2).unwrap();
        assert!(h
            .add_term(FermionTerm::new(
                c(1.0, 0.0),
                vec![LadderOp::create(0), LadderOp::create(1)]
            ))
            .is_err());
        assert!(h
            .add_term(FermionTerm::new(
                c(1.0, 0.0),
                vec![LadderOp::create(5), LadderOp::annihilate(1)]
            ))
            .is_err());
        assert!(h.add_term(FermionTerm::new(c(1.0, 0.0), vec![])).is_err());
    }

    #[test]
    fn conservation_check() {
        let x = PauliSum::from_real(&[(1.0, "XIII")]).unwrap();
        assert!(!check_particle_conservation(&x, 100));
        assert!(check_particle_conservation(&PauliSum::new(4), 100));
        let hop = PauliSum::from_real(&[(0.5, "XXII"), (0.5, "YYII"), (0.2, "ZIZI")]).unwrap();
        assert!(check_particle_conservation(&hop, 100));
        assert!(check_particle_conservation(&hop, 3));
    }

    #[test]
    fn parse_fermion_text() {
        let text = "# test\nmodes 4\nconstant 0.25\n0.5 0.0 1^ 0^ 2 3\n-1.0 0 0^ 0\n";
        let h = FermionHamiltonian::parse_text(text).unwrap();
        assert_eq!(h.mode_count(), 4);
        assert_eq!(h.constant(), 0.25);
        assert_eq!(h.terms().len(), 2);
        assert_eq!(
            h.terms()[0].factors,
            vec![
                LadderOp::create(1),
                LadderOp::create(0),
                LadderOp::annihilate(2),
                LadderOp::annihilate(3)
            ]
        );
        assert_eq!(FermionHamiltonian::parse_text(&h.to_text()).unwrap(), h);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = FermionHamiltonian::parse_text("modes 2\n1.0 0.0 0^ x1\n").unwrap_err();
        assert!(matches!(e, HeffError::Parse { line: 2, .. }), "{e}");
        let e = FermionHamiltonian::parse_text("1.0 0.0 0^ 1\n").unwrap_err();
        assert!(matches!(e, HeffError::Parse { line: 1, .. }));
        let e = FermionHamiltonian::parse_text("modes 2\n1.0 0.0 0^ 4\n").unwrap_err();
        assert!(matches!(e, HeffError::Parse { line: 2, .. }));
        assert!(FermionHamiltonian::parse_text("# nothing\n").is_err());
    }
}

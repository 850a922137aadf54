//! Pauli strings, weighted Pauli sums and computational basis states.
//!
//! Qubit `i` is character `i` of a string literal (left to right) and bit `i`
//! of the packed occupation word. `|1>` is an occupied mode and `Z` has
//! eigenvalue `+1` on `|0>`, `-1` on `|1>`. Every basis-dependent sign in the
//! crate follows from these two choices.
//!
//! A string is stored as a pair of bit masks `(x, z)` with
//! `P = i^{|x & z|} X^x Z^z`, so products and basis-state actions reduce to
//! popcounts and never touch dense matrices.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{HeffError, Result};

/// Largest register a packed string or basis state can describe.
pub const MAX_QUBITS: usize = 64;

/// Weights below this magnitude are dropped when a sum is normalized.
pub const PRUNE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PauliOp {
    I,
    X,
    Y,
    Z,
}

impl PauliOp {
    pub const ALL: [PauliOp; 4] = [PauliOp::I, PauliOp::X, PauliOp::Y, PauliOp::Z];

    fn bits(self) -> (bool, bool) {
        match self {
            PauliOp::I => (false, false),
            PauliOp::X => (true, false),
            PauliOp::Y => (true, true),
            PauliOp::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => PauliOp::I,
            (true, false) => PauliOp::X,
            (true, true) => PauliOp::Y,
            (false, true) => PauliOp::Z,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            PauliOp::I => 'I',
            PauliOp::X => 'X',
            PauliOp::Y => 'Y',
            PauliOp::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' | 'i' => Some(PauliOp::I),
            'X' | 'x' => Some(PauliOp::X),
            'Y' | 'y' => Some(PauliOp::Y),
            'Z' | 'z' => Some(PauliOp::Z),
            _ => None,
        }
    }

    /// Single-qubit product `self * other = phase * result`.
    pub fn multiply(self, other: PauliOp) -> (Phase, PauliOp) {
        let a = PauliString::from_ops(&[self]).expect("one qubit");
        let b = PauliString::from_ops(&[other]).expect("one qubit");
        let (phase, p) = a.multiply(&b).expect("equal lengths");
        (phase, p.op(0))
    }
}

/// A power of `i`: one of `1, i, -1, -i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(k: u32) -> Self {
        Phase((k % 4) as u8)
    }

    pub fn power(self) -> u8 {
        self.0
    }

    pub fn conj(self) -> Self {
        Phase((4 - self.0) % 4)
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

fn check_len(len: usize) -> Result<()> {
    if len > MAX_QUBITS {
        Err(HeffError::TooManyQubits(len))
    } else {
        Ok(())
    }
}

fn mask(len: usize) -> u64 {
    if len == 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

/// Occupation-number basis state `|n_0 n_1 ... n_{N-1}>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BasisState {
    len: usize,
    bits: u64,
}

impl BasisState {
    pub fn new(len: usize, bits: u64) -> Result<Self> {
        check_len(len)?;
        if bits & !mask(len) != 0 {
            return Err(HeffError::invalid(format!(
                "bit word {bits:#x} has bits beyond {len} qubits"
            )));
        }
        Ok(BasisState { len, bits })
    }

    pub fn vacuum(len: usize) -> Result<Self> {
        BasisState::new(len, 0)
    }

    pub fn from_occupied(len: usize, modes: &[usize]) -> Result<Self> {
        check_len(len)?;
        let mut bits = 0u64;
        for &m in modes {
            if m >= len {
                return Err(HeffError::IndexOutOfRange { index: m, len });
            }
            bits |= 1 << m;
        }
        Ok(BasisState { len, bits })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn get(&self, qubit: usize) -> bool {
        self.bits >> qubit & 1 == 1
    }

    pub fn particle_count(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn occupied(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(|&q| self.get(q))
    }

    pub fn unoccupied(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(|&q| !self.get(q))
    }

    pub fn with_flipped(&self, flips: u64) -> BasisState {
        BasisState {
            len: self.len,
            bits: (self.bits ^ flips) & mask(self.len),
        }
    }

    /// Key whose integer order equals the lexicographic order of the bitstring
    /// text (`"0011" < "0101" < ... < "1100"`).
    pub fn lex_key(&self) -> u64 {
        if self.len == 0 {
            0
        } else {
            self.bits.reverse_bits() >> (64 - self.len)
        }
    }
}

impl PartialOrd for BasisState {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for BasisState {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.len
            .cmp(&other.len)
            .then(self.lex_key().cmp(&other.lex_key()))
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.len {
            f.write_str(if self.get(q) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BasisState {
    type Err = HeffError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s
            .trim()
            .trim_start_matches('|')
            .trim_end_matches('>')
            .trim_end_matches('⟩');
        check_len(s.len())?;
        let mut bits = 0u64;
        for (q, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => bits |= 1 << q,
                _ => {
                    return Err(HeffError::invalid(format!(
                        "invalid character {c:?} in bitstring {s:?}"
                    )))
                }
            }
        }
        Ok(BasisState {
            len: s.chars().count(),
            bits,
        })
    }
}

/// Tensor product of single-qubit Paulis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    len: usize,
    x: u64,
    z: u64,
}

impl PauliString {
    pub fn identity(len: usize) -> Result<Self> {
        check_len(len)?;
        Ok(PauliString { len, x: 0, z: 0 })
    }

    pub fn from_ops(ops: &[PauliOp]) -> Result<Self> {
        check_len(ops.len())?;
        let (mut x, mut z) = (0u64, 0u64);
        for (q, op) in ops.iter().enumerate() {
            let (xb, zb) = op.bits();
            x |= (xb as u64) << q;
            z |= (zb as u64) << q;
        }
        Ok(PauliString {
            len: ops.len(),
            x,
            z,
        })
    }

    pub fn from_masks(len: usize, x: u64, z: u64) -> Result<Self> {
        check_len(len)?;
        if (x | z) & !mask(len) != 0 {
            return Err(HeffError::invalid("mask bits beyond string length"));
        }
        Ok(PauliString { len, x, z })
    }

    /// `op` on `qubit`, identity elsewhere.
    pub fn single(len: usize, qubit: usize, op: PauliOp) -> Result<Self> {
        if qubit >= len {
            return Err(HeffError::IndexOutOfRange { index: qubit, len });
        }
        let mut s = PauliString::identity(len)?;
        s.set(qubit, op);
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn op(&self, qubit: usize) -> PauliOp {
        PauliOp::from_bits(self.x >> qubit & 1 == 1, self.z >> qubit & 1 == 1)
    }

    pub fn set(&mut self, qubit: usize, op: PauliOp) {
        let (xb, zb) = op.bits();
        let bit = 1u64 << qubit;
        self.x = (self.x & !bit) | if xb { bit } else { 0 };
        self.z = (self.z & !bit) | if zb { bit } else { 0 };
    }

    pub fn ops(&self) -> impl Iterator<Item = PauliOp> + '_ {
        (0..self.len).map(|q| self.op(q))
    }

    /// Qubits carrying a non-identity factor.
    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    /// Number of non-identity factors (`k` of a k-local string).
    pub fn locality(&self) -> usize {
        self.support().count_ones() as usize
    }

    pub fn is_identity(&self) -> bool {
        self.support() == 0
    }

    /// Built from `I` and `Z` only, so diagonal in the computational basis.
    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// `self * other = phase * product`.
    pub fn multiply(&self, other: &PauliString) -> Result<(Phase, PauliString)> {
        if self.len != other.len {
            return Err(HeffError::LengthMismatch {
                expected: self.len,
                found: other.len,
            });
        }
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        // i^{|xa&za|} X^xa Z^za  i^{|xb&zb|} X^xb Z^zb
        //   = i^{...} (-1)^{|za&xb|} X^x Z^z = i^{... - |x&z|} P
        let k = self.y_count() + other.y_count() + 2 * (self.z & other.x).count_ones() + 4
            - (x & z).count_ones() % 4;
        Ok((
            Phase::from_power(k),
            PauliString {
                len: self.len,
                x,
                z,
            },
        ))
    }

    /// `self |n> = phase |m>`.
    pub fn apply(&self, n: &BasisState) -> Result<(Phase, BasisState)> {
        if self.len != n.len {
            return Err(HeffError::LengthMismatch {
                expected: self.len,
                found: n.len,
            });
        }
        Ok(self.apply_bits(n.bits)).map(|(phase, bits)| (phase, BasisState { len: n.len, bits }))
    }

    /// Unchecked action on a raw bit word of the same width.
    #[inline]
    pub fn apply_bits(&self, bits: u64) -> (Phase, u64) {
        let k = self.y_count() + 2 * (self.z & bits).count_ones();
        (Phase::from_power(k), bits ^ self.x)
    }

    /// `<m| self |n>`, always one of `0, ±1, ±i`.
    pub fn matrix_element(&self, m: &BasisState, n: &BasisState) -> Result<Complex64> {
        if m.len != self.len {
            return Err(HeffError::LengthMismatch {
                expected: self.len,
                found: m.len,
            });
        }
        let (phase, image) = self.apply(n)?;
        Ok(if image == *m {
            phase.to_complex()
        } else {
            Complex64::new(0.0, 0.0)
        })
    }

    /// Appends `other`'s qubits after this string's.
    pub fn tensor(&self, other: &PauliString) -> Result<PauliString> {
        let len = self.len + other.len;
        check_len(len)?;
        Ok(PauliString {
            len,
            x: self.x | other.x << self.len,
            z: self.z | other.z << self.len,
        })
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for op in self.ops() {
            write!(f, "{}", op.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = HeffError;

    fn from_str(s: &str) -> Result<Self> {
        let ops = s
            .trim()
            .chars()
            .map(|c| {
                PauliOp::from_char(c)
                    .ok_or_else(|| HeffError::invalid(format!("invalid Pauli character {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        PauliString::from_ops(&ops)
    }
}

/// Weighted sum of Pauli strings on a fixed register.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    qubits: usize,
    terms: Vec<(Complex64, PauliString)>,
}

impl PauliSum {
    pub fn new(qubits: usize) -> Self {
        PauliSum {
            qubits,
            terms: Vec::new(),
        }
    }

    /// Builds a normalized sum; every string must have `qubits` factors.
    pub fn from_terms(
        qubits: usize,
        terms: impl IntoIterator<Item = (Complex64, PauliString)>,
    ) -> Result<Self> {
        let mut sum = PauliSum::new(qubits);
        for (w, s) in terms {
            sum.push(w, s)?;
        }
        sum.normalize();
        Ok(sum)
    }

    /// Parses `"<weight> <string>"`-like pairs from real weights.
    pub fn from_real(terms: &[(f64, &str)]) -> Result<Self> {
        let parsed = terms
            .iter()
            .map(|&(w, s)| Ok((Complex64::new(w, 0.0), s.parse::<PauliString>()?)))
            .collect::<Result<Vec<_>>>()?;
        let qubits = parsed.first().map_or(0, |(_, s)| s.len());
        PauliSum::from_terms(qubits, parsed)
    }

    /// The identity scaled by `weight`.
    pub fn scalar(qubits: usize, weight: Complex64) -> Result<Self> {
        PauliSum::from_terms(qubits, [(weight, PauliString::identity(qubits)?)])
    }

    /// Appends a term without merging duplicates.
    pub fn push(&mut self, weight: Complex64, string: PauliString) -> Result<()> {
        if string.len() != self.qubits {
            return Err(HeffError::LengthMismatch {
                expected: self.qubits,
                found: string.len(),
            });
        }
        self.terms.push((weight, string));
        Ok(())
    }

    /// Merges duplicate strings (first-appearance order) and drops weights
    /// below [`PRUNE_TOLERANCE`].
    pub fn normalize(&mut self) {
        let mut index: HashMap<PauliString, usize> = HashMap::with_capacity(self.terms.len());
        let mut merged: Vec<(Complex64, PauliString)> = Vec::with_capacity(self.terms.len());
        for &(w, s) in &self.terms {
            match index.get(&s) {
                Some(&i) => merged[i].0 += w,
                None => {
                    index.insert(s, merged.len());
                    merged.push((w, s));
                }
            }
        }
        merged.retain(|(w, _)| w.norm() >= PRUNE_TOLERANCE);
        self.terms = merged;
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[(Complex64, PauliString)] {
        &self.terms
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Complex64, PauliString)> {
        self.terms.iter()
    }

    pub fn max_locality(&self) -> usize {
        self.terms
            .iter()
            .map(|(_, s)| s.locality())
            .max()
            .unwrap_or(0)
    }

    /// Weight of the identity string, zero when absent.
    pub fn identity_weight(&self) -> Complex64 {
        self.terms
            .iter()
            .filter(|(_, s)| s.is_identity())
            .map(|(w, _)| *w)
            .sum()
    }

    /// Largest imaginary part among the weights.
    pub fn max_imag_weight(&self) -> f64 {
        self.terms
            .iter()
            .map(|(w, _)| w.im.abs())
            .fold(0.0, f64::max)
    }

    /// All weights real within `tol`, i.e. the sum is a Hermitian operator.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_imag_weight() <= tol
    }

    pub fn scale(&self, factor: Complex64) -> PauliSum {
        let mut out = PauliSum {
            qubits: self.qubits,
            terms: self.terms.iter().map(|&(w, s)| (w * factor, s)).collect(),
        };
        out.normalize();
        out
    }

    pub fn add(&self, other: &PauliSum) -> Result<PauliSum> {
        if self.qubits != other.qubits {
            return Err(HeffError::LengthMismatch {
                expected: self.qubits,
                found: other.qubits,
            });
        }
        let mut out = self.clone();
        out.terms.extend_from_slice(&other.terms);
        out.normalize();
        Ok(out)
    }

    /// Operator product `self * other`, expanded term by term.
    pub fn multiply(&self, other: &PauliSum) -> Result<PauliSum> {
        if self.qubits != other.qubits {
            return Err(HeffError::LengthMismatch {
                expected: self.qubits,
                found: other.qubits,
            });
        }
        let mut out = PauliSum::new(self.qubits);
        for &(wa, a) in &self.terms {
            for &(wb, b) in &other.terms {
                let (phase, p) = a.multiply(&b)?;
                out.terms.push((wa * wb * phase.to_complex(), p));
            }
        }
        out.normalize();
        Ok(out)
    }

    /// Drops the imaginary part of every weight.
    pub fn real_part(&self) -> PauliSum {
        let mut out = PauliSum {
            qubits: self.qubits,
            terms: self
                .terms
                .iter()
                .map(|&(w, s)| (Complex64::new(w.re, 0.0), s))
                .collect(),
        };
        out.normalize();
        out
    }

    /// `<m| H |n>` summed over terms.
    pub fn matrix_element(&self, m: &BasisState, n: &BasisState) -> Result<Complex64> {
        for s in [m, n] {
            if s.len() != self.qubits {
                return Err(HeffError::LengthMismatch {
                    expected: self.qubits,
                    found: s.len(),
                });
            }
        }
        let flips = m.bits ^ n.bits;
        let mut acc = Complex64::new(0.0, 0.0);
        for (w, s) in &self.terms {
            if s.x == flips {
                let (phase, _) = s.apply_bits(n.bits);
                acc += w * phase.to_complex();
            }
        }
        Ok(acc)
    }

    /// `H |n>` as a list of `(image, amplitude)` with equal images merged.
    pub fn apply(&self, n: &BasisState) -> Result<Vec<(BasisState, Complex64)>> {
        if n.len() != self.qubits {
            return Err(HeffError::LengthMismatch {
                expected: self.qubits,
                found: n.len(),
            });
        }
        let mut out: Vec<(BasisState, Complex64)> = Vec::new();
        let mut index: HashMap<u64, usize> = HashMap::new();
        for (w, s) in &self.terms {
            let (phase, bits) = s.apply_bits(n.bits);
            let amp = w * phase.to_complex();
            match index.get(&bits) {
                Some(&i) => out[i].1 += amp,
                None => {
                    index.insert(bits, out.len());
                    out.push((BasisState { len: n.len, bits }, amp));
                }
            }
        }
        Ok(out)
    }

    /// Splits into the `I`/`Z`-only part and the remainder.
    pub fn classify(&self) -> (PauliSum, PauliSum) {
        let (diag, off): (Vec<_>, Vec<_>) = self.terms.iter().partition(|(_, s)| s.is_diagonal());
        (
            PauliSum {
                qubits: self.qubits,
                terms: diag,
            },
            PauliSum {
                qubits: self.qubits,
                terms: off,
            },
        )
    }

    /// Parses the one-term-per-line text format `<re> <im> <string>`.
    pub fn parse_text(text: &str) -> Result<PauliSum> {
        let mut qubits: Option<usize> = None;
        let mut terms = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| HeffError::Parse {
                line: line_no,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(parse_err(format!(
                    "expected `<re> <im> <string>`, found {} fields",
                    fields.len()
                )));
            }
            let re: f64 = fields[0]
                .parse()
                .map_err(|_| parse_err(format!("bad real part {:?}", fields[0])))?;
            let im: f64 = fields[1]
                .parse()
                .map_err(|_| parse_err(format!("bad imaginary part {:?}", fields[1])))?;
            let string: PauliString = fields[2].parse().map_err(|e| parse_err(format!("{e}")))?;
            match qubits {
                None => qubits = Some(string.len()),
                Some(q) if q != string.len() => {
                    return Err(parse_err(format!(
                        "string {} has {} qubits, earlier terms have {q}",
                        fields[2],
                        string.len()
                    )))
                }
                _ => {}
            }
            terms.push((Complex64::new(re, im), string));
        }
        let qubits = qubits.ok_or_else(|| HeffError::invalid("no Pauli terms found"))?;
        PauliSum::from_terms(qubits, terms)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (w, s) in &self.terms {
            out.push_str(&format!("{:?} {:?} {}\n", w.re, w.im, s));
        }
        out
    }
}

/// `a * b = phase * product`.
pub fn multiply_strings(a: &PauliString, b: &PauliString) -> Result<(Phase, PauliString)> {
    a.multiply(b)
}

/// `h |n> = phase |m>`.
pub fn apply_string(h: &PauliString, n: &BasisState) -> Result<(Phase, BasisState)> {
    h.apply(n)
}

pub fn string_matrix_element(m: &BasisState, h: &PauliString, n: &BasisState) -> Result<Complex64> {
    h.matrix_element(m, n)
}

pub fn sum_matrix_element(m: &BasisState, h: &PauliSum, n: &BasisState) -> Result<Complex64> {
    h.matrix_element(m, n)
}

/// `(diagonal_terms, offdiagonal_terms)`.
pub fn classify_terms(h: &PauliSum) -> (PauliSum, PauliSum) {
    h.classify()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn bs(s: &str) -> BasisState {
        s.parse().unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    // Dense matrix of a string; row/column index bit q is qubit q.
    fn dense(s: &PauliString) -> Vec<Vec<Complex64>> {
        let one = |op: PauliOp| -> [[Complex64; 2]; 2] {
            let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
            match op {
                PauliOp::I => [[o, z], [z, o]],
                PauliOp::X => [[z, o], [o, z]],
                PauliOp::Y => [[z, -i], [i, z]],
                PauliOp::Z => [[o, z], [z, -o]],
            }
        };
        let d = 1usize << s.len();
        let mut m = vec![vec![c(0.0, 0.0); d]; d];
        for (r, row) in m.iter_mut().enumerate() {
            for (col, v) in row.iter_mut().enumerate() {
                *v = s
                    .ops()
                    .enumerate()
                    .map(|(q, op)| one(op)[r >> q & 1][col >> q & 1])
                    .product();
            }
        }
        m
    }

    fn matmul(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        let d = a.len();
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| (0..d).map(|k| a[i][k] * b[k][j]).sum())
                    .collect()
            })
            .collect()
    }

    #[test]
    fn single_qubit_products() {
        assert_eq!(
            multiply_strings(&ps("X"), &ps("X")).unwrap(),
            (Phase::ONE, ps("I"))
        );
        assert_eq!(
            multiply_strings(&ps("X"), &ps("Y")).unwrap(),
            (Phase::I, ps("Z"))
        );
        assert_eq!(
            PauliOp::Y.multiply(PauliOp::X),
            (Phase::MINUS_I, PauliOp::Z)
        );
        assert_eq!(
            PauliOp::Z.multiply(PauliOp::Y),
            (Phase::MINUS_I, PauliOp::X)
        );
    }

    #[test]
    fn two_qubit_product_matches_dense() {
        let (a, b) = (ps("ZX"), ps("XZ"));
        let (phase, p) = a.multiply(&b).unwrap();
        // ZX = iY and XZ = -iY per qubit
        assert_eq!(p, ps("YY"));
        assert_eq!(phase, Phase::ONE);
        let lhs = matmul(&dense(&a), &dense(&b));
        let rhs = dense(&p);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(lhs[i][j], rhs[i][j] * phase.to_complex());
            }
        }
    }

    #[test]
    fn all_products_up_to_three_qubits_match_dense() {
        for n in 1..=3usize {
            let all: Vec<PauliString> = (0..4usize.pow(n as u32))
                .map(|mut k| {
                    let ops: Vec<PauliOp> = (0..n)
                        .map(|_| {
                            let op = PauliOp::ALL[k % 4];
                            k /= 4;
                            op
                        })
                        .collect();
                    PauliString::from_ops(&ops).unwrap()
                })
                .collect();
            for a in &all {
                for b in &all {
                    let (phase, p) = a.multiply(b).unwrap();
                    let lhs = matmul(&dense(a), &dense(b));
                    let rhs = dense(&p);
                    for (lr, rr) in lhs.iter().zip(&rhs) {
                        for (l, r) in lr.iter().zip(rr) {
                            assert_eq!(*l, *r * phase.to_complex(), "{a} * {b}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn apply_examples() {
        assert_eq!(
            apply_string(&ps("ZIII"), &bs("1100")).unwrap(),
            (Phase::MINUS_ONE, bs("1100"))
        );
        assert_eq!(
            apply_string(&ps("XIII"), &bs("0000")).unwrap(),
            (Phase::ONE, bs("1000"))
        );
        assert_eq!(
            apply_string(&ps("YXXY"), &bs("0110")).unwrap(),
            (Phase::MINUS_ONE, bs("1001"))
        );
    }

    #[test]
    fn apply_matches_dense_column() {
        let h = ps("YXXY");
        let m = dense(&h);
        let n = bs("0110");
        let (phase, image) = h.apply(&n).unwrap();
        for (r, row) in m.iter().enumerate() {
            let expected = if r as u64 == image.bits() {
                phase.to_complex()
            } else {
                c(0.0, 0.0)
            };
            assert_eq!(row[n.bits() as usize], expected);
        }
    }

    #[test]
    fn string_elements() {
        assert_eq!(
            string_matrix_element(&bs("1100"), &ps("IIII"), &bs("1100")).unwrap(),
            c(1.0, 0.0)
        );
        assert_eq!(
            string_matrix_element(&bs("1001"), &ps("YXXY"), &bs("0110")).unwrap(),
            c(-1.0, 0.0)
        );
        assert_eq!(
            string_matrix_element(&bs("1100"), &ps("YXXY"), &bs("1100")).unwrap(),
            c(0.0, 0.0)
        );
    }

    #[test]
    fn sum_elements() {
        let h = PauliSum::from_real(&[(0.5, "ZIII"), (0.25, "IZII")]).unwrap();
        let n = bs("1100");
        assert_eq!(sum_matrix_element(&n, &h, &n).unwrap(), c(-0.75, 0.0));

        let h = PauliSum::from_real(&[(1.0, "YXXY")]).unwrap();
        assert_eq!(
            sum_matrix_element(&bs("1001"), &h, &bs("0110")).unwrap(),
            c(-1.0, 0.0)
        );

        let h = PauliSum::from_real(&[(0.3, "ZZII"), (-1.1, "IIIZ"), (2.0, "IIII")]).unwrap();
        assert_eq!(
            sum_matrix_element(&bs("1001"), &h, &bs("0110")).unwrap(),
            c(0.0, 0.0)
        );
    }

    #[test]
    fn classification_of_h2_groups() {
        let g1 = [
            "IIII", "ZIII", "IZII", "IIZI", "IIIZ", "ZZII", "ZIZI", "ZIIZ", "IZZI", "IZIZ", "IIZZ",
        ];
        let g2 = ["YXXY", "XXYY", "YYXX", "XYYX"];
        let terms: Vec<(f64, &str)> = g1.iter().chain(&g2).map(|s| (0.1, *s)).collect();
        let h = PauliSum::from_real(&terms).unwrap();
        let (diag, off) = classify_terms(&h);
        assert_eq!(diag.len(), 11);
        assert_eq!(off.len(), 4);
        assert!(diag
            .iter()
            .all(|(_, s)| g1.contains(&s.to_string().as_str())));
        assert!(off
            .iter()
            .all(|(_, s)| g2.contains(&s.to_string().as_str())));
        assert_eq!(diag.add(&off).unwrap().len(), h.len());

        let (d, o) = classify_terms(&PauliSum::new(4));
        assert!(d.is_empty() && o.is_empty());
    }

    #[test]
    fn normalization_merges_and_prunes() {
        let h = PauliSum::from_real(&[
            (0.5, "XZ"),
            (0.25, "XZ"),
            (1e-13, "ZZ"),
            (1.0, "II"),
            (-1.0, "II"),
        ])
        .unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(h.terms()[0], (c(0.75, 0.0), ps("XZ")));
    }

    #[test]
    fn text_round_trip_and_errors() {
        let text = "# H2-like\n0.17 0.0 ZIII\n-0.5 0 IIII  # constant\n\n0.045 0.0 YXXY\n";
        let h = PauliSum::parse_text(text).unwrap();
        assert_eq!(h.len(), 3);
        assert_eq!(h.qubit_count(), 4);
        assert_eq!(PauliSum::parse_text(&h.to_text()).unwrap(), h);

        let err = PauliSum::parse_text("0.1 0.0 ZI\n0.2 0.0 ZII\n").unwrap_err();
        assert!(matches!(err, HeffError::Parse { line: 2, .. }));
        let err = PauliSum::parse_text("0.1 ZI\n").unwrap_err();
        assert!(matches!(err, HeffError::Parse { line: 1, .. }));
        let err = PauliSum::parse_text("0.1 0 ZQ\n").unwrap_err();
        assert!(matches!(err, HeffError::Parse { line: 1, .. }));
    }

    #[test]
    fn length_mismatch_is_reported() {
        assert!(matches!(
            ps("XX").multiply(&ps("X")),
            Err(HeffError::LengthMismatch { .. })
        ));
        assert!(ps("XX").apply(&bs("000")).is_err());
    }

    #[test]
    fn lexicographic_order() {
        let mut v = [bs("1100"), bs("0011"), bs("1010"), bs("0101")];
        v.sort();
        let text: Vec<String> = v.iter().map(|b| b.to_string()).collect();
        assert_eq!(text, ["0011", "0101", "1010", "1100"]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn string(n: usize) -> impl Strategy<Value = PauliString> {
            proptest::collection::vec(0usize..4, n).prop_map(|v| {
                PauliString::from_ops(&v.iter().map(|&k| PauliOp::ALL[k]).collect::<Vec<_>>())
                    .unwrap()
            })
        }

        proptest! {
            #[test]
            fn element_is_hermitian_and_unique((h, m, n) in (1usize..8).prop_flat_map(|n| (string(n), 0u64..(1 << n), 0u64..(1 << n)).prop_map(move |(h, a, b)| (h, BasisState::new(n, a).unwrap(), BasisState::new(n, b).unwrap())))) {
                let a = h.matrix_element(&m, &n).unwrap();
                let b = h.matrix_element(&n, &m).unwrap();
                prop_assert_eq!(a, b.conj());
                let nonzero = (0..1u64 << h.len())
                    .filter(|&k| h.matrix_element(&BasisState::new(h.len(), k).unwrap(), &n).unwrap().norm() > 0.0)
                    .count();
                prop_assert_eq!(nonzero, 1);
                let (phase, _) = h.apply(&n).unwrap();
                prop_assert_eq!(phase.to_complex().norm(), 1.0);
            }

            #[test]
            fn diagonal_strings_have_no_offdiagonal_elements((h, m, n) in (1usize..8).prop_flat_map(|n| (string(n), 0u64..(1 << n), 0u64..(1 << n)).prop_map(move |(h, a, b)| (h, BasisState::new(n, a).unwrap(), BasisState::new(n, b).unwrap())))) {
                if h.is_diagonal() && m != n {
                    prop_assert_eq!(h.matrix_element(&m, &n).unwrap(), Complex64::new(0.0, 0.0));
                }
                if !h.is_diagonal() {
                    prop_assert_eq!(h.matrix_element(&n, &n).unwrap(), Complex64::new(0.0, 0.0));
                }
            }
        }
    }
}

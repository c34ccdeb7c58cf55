//! Phase-tracked Pauli-string arithmetic in the binary symplectic representation.
//!
//! Conventions, fixed once to prevent drift:
//! * A string on `n` qubits is stored as two packed bit vectors `x` and `z`
//!   (`n <= 64`). Site letters map as I=(0,0), X=(1,0), Z=(0,1), Y=(1,1) in
//!   (x, z) order.
//! * Text form uses uppercase `IXYZ` with the leftmost character on qubit 0.
//! * The symplectic vector of a string is the Z block followed by the X block,
//!   `(z | x)`, of total length `2n`.
//! * `PauliString` is unsigned; phases live only in [`SignedPauli`].

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::gf2::{self, Gf2Vec};

/// An unsigned Pauli word on up to 64 qubits.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
}

impl PauliString {
    pub const MAX_QUBITS: usize = 64;

    /// The identity word on `n` qubits.
    pub fn identity(n: usize) -> Self {
        assert!(n >= 1 && n <= Self::MAX_QUBITS, "qubit count {n} out of range");
        PauliString { n, x: 0, z: 0 }
    }

    /// Build from packed X/Z bit masks.
    pub fn from_bits(n: usize, x: u64, z: u64) -> Self {
        assert!(n >= 1 && n <= Self::MAX_QUBITS, "qubit count {n} out of range");
        let mask = Self::mask(n);
        PauliString { n, x: x & mask, z: z & mask }
    }

    /// A single-site letter embedded in an `n`-qubit identity word.
    pub fn single(n: usize, qubit: usize, letter: char) -> Result<Self> {
        let mut p = Self::identity(n);
        p.set_letter(qubit, letter)?;
        Ok(p)
    }

    /// Parse text such as `"XIZZY"`; leftmost character is qubit 0.
    pub fn parse(text: &str) -> Result<Self> {
        let n = text.chars().count();
        if n == 0 || n > Self::MAX_QUBITS {
            return Err(Error::InvalidPauliText {
                text: text.to_string(),
                reason: format!("length must be 1..={}", Self::MAX_QUBITS),
            });
        }
        let mut p = Self::identity(n);
        for (q, c) in text.chars().enumerate() {
            if !matches!(c, 'I' | 'X' | 'Y' | 'Z') {
                return Err(Error::InvalidPauliText {
                    text: text.to_string(),
                    reason: format!("invalid letter '{c}' at position {q}"),
                });
            }
            p.set_letter(q, c)?;
        }
        Ok(p)
    }

    fn mask(n: usize) -> u64 {
        if n == 64 {
            u64::MAX
        } else {
            (1u64 << n) - 1
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_bits(&self) -> u64 {
        self.x
    }

    pub fn z_bits(&self) -> u64 {
        self.z
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Number of non-identity sites.
    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    pub fn letter(&self, qubit: usize) -> char {
        assert!(qubit < self.n);
        match ((self.x >> qubit) & 1, (self.z >> qubit) & 1) {
            (0, 0) => 'I',
            (1, 0) => 'X',
            (1, 1) => 'Y',
            (0, 1) => 'Z',
            _ => unreachable!(),
        }
    }

    pub fn set_letter(&mut self, qubit: usize, letter: char) -> Result<()> {
        if qubit >= self.n {
            return Err(Error::QubitOutOfRange { index: qubit, total: self.n });
        }
        let bit = 1u64 << qubit;
        let (xb, zb) = match letter {
            'I' => (0, 0),
            'X' => (bit, 0),
            'Y' => (bit, bit),
            'Z' => (0, bit),
            _ => {
                return Err(Error::InvalidPauliText {
                    text: letter.to_string(),
                    reason: "letter must be one of IXYZ".into(),
                })
            }
        };
        self.x = (self.x & !bit) | xb;
        self.z = (self.z & !bit) | zb;
        Ok(())
    }

    /// Re-embed into a larger register; qubits `n..m` become identity.
    pub fn embed(&self, m: usize) -> Self {
        assert!(m >= self.n && m <= Self::MAX_QUBITS);
        PauliString { n: m, x: self.x, z: self.z }
    }

    /// Symplectic vector `(z | x)` of length `2n`.
    pub fn to_symplectic(&self) -> Gf2Vec {
        let mut v = Gf2Vec::zeros(2 * self.n);
        for q in 0..self.n {
            v.set(q, (self.z >> q) & 1 == 1);
            v.set(self.n + q, (self.x >> q) & 1 == 1);
        }
        v
    }

    /// Inverse of [`to_symplectic`](Self::to_symplectic).
    pub fn from_symplectic(v: &Gf2Vec) -> Self {
        let len = v.len();
        assert!(len % 2 == 0 && len > 0, "symplectic vector length must be even");
        let n = len / 2;
        let mut x = 0u64;
        let mut z = 0u64;
        for q in 0..n {
            if v.get(q) {
                z |= 1 << q;
            }
            if v.get(n + q) {
                x |= 1 << q;
            }
        }
        PauliString { n, x, z }
    }

    /// Row `(x | z)` used when this string constrains another through the
    /// symplectic product: `row . (z_o | x_o) = x . z_o + z . x_o`.
    pub fn symplectic_row(&self) -> Gf2Vec {
        let mut v = Gf2Vec::zeros(2 * self.n);
        for q in 0..self.n {
            v.set(q, (self.x >> q) & 1 == 1);
            v.set(self.n + q, (self.z >> q) & 1 == 1);
        }
        v
    }

    /// Whether two strings commute, by the symplectic inner product.
    pub fn commutes(&self, other: &Self) -> Result<bool> {
        if self.n != other.n {
            return Err(Error::LengthMismatch { left: self.n, right: other.n });
        }
        let anti = (self.x & other.z).count_ones() + (self.z & other.x).count_ones();
        Ok(anti % 2 == 0)
    }

    /// Product with the phase dropped: bitwise sum mod 2 of symplectic vectors.
    pub fn unsigned_product(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::LengthMismatch { left: self.n, right: other.n });
        }
        Ok(PauliString { n: self.n, x: self.x ^ other.x, z: self.z ^ other.z })
    }

    /// Text form, leftmost character = qubit 0.
    pub fn text(&self) -> String {
        (0..self.n).map(|q| self.letter(q)).collect()
    }

    /// Packed `(z | x)` value; orders words by low-index support first and
    /// Z before X before Y at the first differing site.
    pub fn symplectic_key(&self) -> u128 {
        (self.z as u128) | ((self.x as u128) << self.n)
    }

    fn site_rank(&self, q: usize) -> u8 {
        // I < X < Y < Z, matching byte order of the text form.
        match ((self.x >> q) & 1, (self.z >> q) & 1) {
            (0, 0) => 0,
            (1, 0) => 1,
            (1, 1) => 2,
            (0, 1) => 3,
            _ => unreachable!(),
        }
    }
}

impl Ord for PauliString {
    /// Orders by qubit count, then lexicographically on the text form.
    fn cmp(&self, other: &Self) -> Ordering {
        self.n.cmp(&other.n).then_with(|| {
            for q in 0..self.n {
                match self.site_rank(q).cmp(&other.site_rank(q)) {
                    Ordering::Equal => continue,
                    ord => return ord,
                }
            }
            Ordering::Equal
        })
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({})", self.text())
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.text())
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        PauliString::parse(&text).map_err(D::Error::custom)
    }
}

/// Fourth root of unity, stored as the exponent `k` in `i^k`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_exponent(k: i64) -> Self {
        Phase(k.rem_euclid(4) as u8)
    }

    pub fn exponent(&self) -> u8 {
        self.0
    }

    pub fn times(&self, other: Phase) -> Phase {
        Phase((self.0 + other.0) % 4)
    }

    pub fn is_real(&self) -> bool {
        self.0 % 2 == 0
    }

    pub fn as_complex(&self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            3 => Complex64::new(0.0, -1.0),
            _ => unreachable!(),
        }
    }
}

/// A Pauli word together with a fourth-root-of-unity prefactor.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct SignedPauli {
    pub string: PauliString,
    pub phase: Phase,
}

impl SignedPauli {
    pub fn positive(string: PauliString) -> Self {
        SignedPauli { string, phase: Phase::ONE }
    }

    /// Full product with phase tracking.
    ///
    /// The phase exponent of the product of canonical words
    /// `i^{|x.z|} X^x Z^z` is
    /// `|x1.z1| + |x2.z2| + 2|z1.x2| - |x3.z3| (mod 4)`.
    pub fn multiply(&self, other: &SignedPauli) -> Result<SignedPauli> {
        let p = &self.string;
        let q = &other.string;
        let string = p.unsigned_product(q)?;
        let d1 = (p.x & p.z).count_ones() as i64;
        let d2 = (q.x & q.z).count_ones() as i64;
        let d3 = (string.x & string.z).count_ones() as i64;
        let reorder = 2 * (p.z & q.x).count_ones() as i64;
        let phase = self
            .phase
            .times(other.phase)
            .times(Phase::from_exponent(d1 + d2 + reorder - d3));
        Ok(SignedPauli { string, phase })
    }
}

/// Product of two unsigned strings with the structure phase made explicit.
pub fn multiply(p: &SignedPauli, q: &SignedPauli) -> Result<SignedPauli> {
    p.multiply(q)
}

/// True iff the symplectic vector of `p` lies outside the GF(2) span of `basis`.
pub fn is_independent(p: &PauliString, basis: &[PauliString]) -> bool {
    let rows: Vec<Gf2Vec> = basis.iter().map(|b| b.to_symplectic()).collect();
    !gf2::in_span(&rows, &p.to_symplectic())
}

/// A real-weighted Hermitian sum of Pauli words.
///
/// Zero-coefficient terms are never stored; iteration order is the canonical
/// string order, so identical sentences always iterate identically.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct PauliSentence {
    n: usize,
    terms: BTreeMap<PauliString, f64>,
}

impl PauliSentence {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1 && n <= PauliString::MAX_QUBITS);
        PauliSentence { n, terms: BTreeMap::new() }
    }

    pub fn from_terms<I: IntoIterator<Item = (PauliString, f64)>>(n: usize, terms: I) -> Self {
        let mut s = Self::new(n);
        for (p, c) in terms {
            s.add(p, c);
        }
        s
    }

    /// Parse `[(text, coeff)]` pairs.
    pub fn from_text_terms(terms: &[(&str, f64)]) -> Result<Self> {
        let mut parsed = Vec::with_capacity(terms.len());
        let mut n = 0;
        for (text, c) in terms {
            let p = PauliString::parse(text)?;
            n = n.max(p.n());
            parsed.push((p, *c));
        }
        let mut s = Self::new(n.max(1));
        for (p, c) in parsed {
            if p.n() != s.n {
                return Err(Error::LengthMismatch { left: p.n(), right: s.n });
            }
            s.add(p, c);
        }
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Accumulate `c` onto the coefficient of `p`, dropping exact zeros.
    pub fn add(&mut self, p: PauliString, c: f64) {
        assert_eq!(p.n(), self.n, "term length mismatch");
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(p).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.remove(&p);
        }
    }

    pub fn coeff(&self, p: &PauliString) -> f64 {
        self.terms.get(p).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, f64)> {
        self.terms.iter().map(|(p, c)| (p, *c))
    }

    pub fn strings(&self) -> impl Iterator<Item = &PauliString> {
        self.terms.keys()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = Self::new(self.n);
        for (p, c) in self.terms() {
            out.add(*p, c * factor);
        }
        out
    }

    pub fn plus(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (p, c) in other.terms() {
            out.add(*p, c);
        }
        out
    }

    /// Remove terms with |coeff| below `eps`.
    pub fn pruned(&self, eps: f64) -> Self {
        let mut out = Self::new(self.n);
        for (p, c) in self.terms() {
            if c.abs() >= eps {
                out.add(*p, c);
            }
        }
        out
    }

    /// Coefficient of the identity word.
    pub fn identity_coeff(&self) -> f64 {
        self.coeff(&PauliString::identity(self.n))
    }

    /// Copy without the identity term.
    pub fn without_identity(&self) -> Self {
        let mut out = self.clone();
        out.terms.remove(&PauliString::identity(self.n));
        out
    }

    /// Coefficient dot product; equals Tr(A B) / 2^n for Hermitian sentences.
    pub fn inner(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n);
        // Iterate the smaller map.
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        small
            .terms()
            .map(|(p, c)| c * large.coeff(p))
            .sum()
    }

    /// Euclidean norm of the coefficient vector (= Frobenius norm / 2^{n/2}).
    pub fn coeff_norm(&self) -> f64 {
        self.terms().map(|(_, c)| c * c).sum::<f64>().sqrt()
    }

    /// True iff every pair of terms commutes.
    pub fn is_abelian(&self) -> bool {
        let strings: Vec<&PauliString> = self.terms.keys().collect();
        for (i, p) in strings.iter().enumerate() {
            for q in &strings[i + 1..] {
                if !p.commutes(q).expect("equal lengths") {
                    return false;
                }
            }
        }
        true
    }

    /// The real sentence `C` in `[A, B] = i C`.
    ///
    /// Hermitian sentences have anti-Hermitian commutators, so `C` is real;
    /// an empty result means the sentences commute.
    pub fn commutator(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = Self::new(self.n);
        for (p, a) in self.terms() {
            for (q, b) in other.terms() {
                if p.commutes(q).expect("equal lengths") {
                    continue;
                }
                let prod = SignedPauli::positive(*p)
                    .multiply(&SignedPauli::positive(*q))
                    .expect("equal lengths");
                // [P, Q] = 2 P Q for anticommuting words; P Q = i^k R with k odd.
                let sign = match prod.phase {
                    Phase::I => 1.0,
                    Phase::MINUS_I => -1.0,
                    _ => unreachable!("anticommuting Hermitian words have imaginary structure phase"),
                };
                out.add(prod.string, 2.0 * a * b * sign);
            }
        }
        out
    }
}

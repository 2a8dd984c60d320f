//! Linear algebra over GF(2) and the signature compression of determinant bit strings.
//!
//! A set of `D` distinct occupation strings of length `2N` is mapped to signatures of
//! length at most `2⌈log₂D⌉ − 1` through two linear maps: a restriction to a row basis
//! of the `2N × D` occupation matrix, followed by a projection `U` whose kernel avoids
//! every pairwise difference of the restricted strings.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum Gf2Error {
    #[error("no determinants supplied")]
    Empty,
    #[error("determinant {index} has length {found}, expected {expected}")]
    LengthMismatch { index: usize, expected: usize, found: usize },
    #[error("determinants {first} and {second} are identical")]
    DuplicateDeterminant { first: usize, second: usize },
    #[error("invalid bit string: {0}")]
    Parse(String),
    #[error("candidate search exhausted at dimension {dimension}")]
    SearchExhausted { dimension: usize },
}

/// A vector over GF(2), bit `i` stored in word `i / 64`, position `i % 64`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Gf2Vec {
    len: usize,
    words: Vec<u64>,
}

impl Gf2Vec {
    pub fn zeros(len: usize) -> Self {
        Self { len, words: vec![0; len.div_ceil(64)] }
    }

    pub fn unit(len: usize, i: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(i, true);
        v
    }

    /// Low `len` bits of `value`, bit 0 first.
    pub fn from_u64(value: u64, len: usize) -> Self {
        let mut v = Self::zeros(len);
        for i in 0..len.min(64) {
            if value >> i & 1 == 1 {
                v.set(i, true);
            }
        }
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    /// Parses a string of `0`/`1` characters; character `i` is bit `i`.
    pub fn parse_bits(s: &str) -> Result<Self, Gf2Error> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Gf2Error::Parse(format!("unexpected character {other:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_bools(&bits))
    }

    pub fn to_bit_string(&self) -> String {
        (0..self.len).map(|i| if self.get(i) { '1' } else { '0' }).collect()
    }

    /// Hex rendering of the integer `Σ bit_i 2^i`, most significant digit first,
    /// padded to `⌈len/4⌉` digits.
    pub fn to_hex(&self) -> String {
        let digits = self.len.div_ceil(4).max(1);
        (0..digits)
            .rev()
            .map(|d| {
                let mut nibble = 0u32;
                for b in 0..4 {
                    let i = 4 * d + b;
                    if i < self.len && self.get(i) {
                        nibble |= 1 << b;
                    }
                }
                char::from_digit(nibble, 16).expect("nibble < 16")
            })
            .collect()
    }

    pub fn from_hex(hex: &str, len: usize) -> Result<Self, Gf2Error> {
        let mut v = Self::zeros(len);
        for (d, c) in hex.chars().rev().enumerate() {
            let nibble = c
                .to_digit(16)
                .ok_or_else(|| Gf2Error::Parse(format!("invalid hex digit {c:?} in {hex:?}")))?;
            for b in 0..4 {
                if nibble >> b & 1 == 1 {
                    let i = 4 * d + b;
                    if i >= len {
                        return Err(Gf2Error::Parse(format!("hex {hex:?} exceeds {len} bits")));
                    }
                    v.set(i, true);
                }
            }
        }
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn xor_assign(&mut self, other: &Gf2Vec) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &Gf2Vec) -> Gf2Vec {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    /// Inner product `Σ a_i b_i mod 2`.
    pub fn dot(&self, other: &Gf2Vec) -> bool {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum::<u32>()
            % 2
            == 1
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn first_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(k, w)| 64 * k + w.trailing_zeros() as usize)
    }

    /// Keeps the bits at `positions`, in that order.
    pub fn restrict(&self, positions: &[usize]) -> Gf2Vec {
        let mut out = Gf2Vec::zeros(positions.len());
        for (k, &p) in positions.iter().enumerate() {
            out.set(k, self.get(p));
        }
        out
    }

    /// Copy with length changed; bits beyond the new length are dropped.
    pub fn resized(&self, len: usize) -> Gf2Vec {
        let mut out = Gf2Vec::zeros(len);
        for i in 0..len.min(self.len) {
            out.set(i, self.get(i));
        }
        out
    }

    /// Value of the low 64 bits as an integer.
    pub fn low_u64(&self) -> u64 {
        self.words.first().copied().unwrap_or(0)
    }
}

impl fmt::Debug for Gf2Vec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gf2Vec({})", self.to_bit_string())
    }
}

/// Incrementally built basis in echelon form, remembering which inserted vectors
/// combine into each stored basis vector.
#[derive(Clone, Debug)]
pub struct EchelonBasis {
    len: usize,
    rows: Vec<(usize, Gf2Vec, Gf2Vec)>,
    capacity: usize,
}

impl EchelonBasis {
    /// `capacity` bounds the number of vectors that will ever be inserted; it sizes
    /// the combination bookkeeping.
    pub fn new(len: usize, capacity: usize) -> Self {
        Self { len, rows: Vec::new(), capacity }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduces `v`; returns the residual and the combination of inserted vectors
    /// that was subtracted.
    pub fn reduce(&self, v: &Gf2Vec) -> (Gf2Vec, Gf2Vec) {
        debug_assert_eq!(v.len(), self.len);
        let mut residual = v.clone();
        let mut combo = Gf2Vec::zeros(self.capacity);
        for (pivot, row, row_combo) in &self.rows {
            if residual.get(*pivot) {
                residual.xor_assign(row);
                combo.xor_assign(row_combo);
            }
        }
        (residual, combo)
    }

    pub fn contains(&self, v: &Gf2Vec) -> bool {
        self.reduce(v).0.is_zero()
    }

    /// Inserts `v` as inserted vector number `self.rank()`; returns false if dependent.
    pub fn insert(&mut self, v: &Gf2Vec) -> bool {
        let (residual, mut combo) = self.reduce(v);
        match residual.first_one() {
            None => false,
            Some(pivot) => {
                combo.set(self.rows.len(), !combo.get(self.rows.len()));
                self.rows.push((pivot, residual, combo));
                true
            }
        }
    }

    /// Coordinates of `v` with respect to the inserted vectors, or `None` outside the span.
    pub fn coordinates(&self, v: &Gf2Vec) -> Option<Gf2Vec> {
        let (residual, combo) = self.reduce(v);
        residual.is_zero().then(|| combo.resized(self.rows.len()))
    }
}

/// Rank of the row set and the indices of a row basis, chosen greedily lowest index first.
pub fn rank_and_row_basis(rows: &[Gf2Vec]) -> (usize, Vec<usize>) {
    let Some(first) = rows.first() else {
        return (0, Vec::new());
    };
    let mut basis = EchelonBasis::new(first.len(), rows.len().min(first.len()) + 1);
    let mut chosen = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        if basis.insert(row) {
            chosen.push(i);
        }
    }
    (chosen.len(), chosen)
}

/// Basis of `{u : u · w = 0 for all w in rows}` in reduced form.
pub fn null_space(rows: &[Gf2Vec], len: usize) -> Vec<Gf2Vec> {
    let mut reduced: Vec<Gf2Vec> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    for row in rows {
        let mut r = row.clone();
        for (p, b) in pivots.iter().zip(&reduced) {
            if r.get(*p) {
                r.xor_assign(b);
            }
        }
        if let Some(p) = r.first_one() {
            for b in reduced.iter_mut() {
                if b.get(p) {
                    b.xor_assign(&r);
                }
            }
            reduced.push(r);
            pivots.push(p);
        }
    }
    let pivot_set: HashSet<usize> = pivots.iter().copied().collect();
    (0..len)
        .filter(|c| !pivot_set.contains(c))
        .map(|free| {
            let mut u = Gf2Vec::unit(len, free);
            for (p, b) in pivots.iter().zip(&reduced) {
                if b.get(free) {
                    u.set(*p, true);
                }
            }
            u
        })
        .collect()
}

/// `⌈log₂ d⌉`, zero for `d ≤ 1`.
pub fn ceil_log2(d: usize) -> usize {
    if d <= 1 {
        0
    } else {
        (usize::BITS - (d - 1).leading_zeros()) as usize
    }
}

/// Signature length bound `2⌈log₂D⌉ − 1` for `D ≥ 2`, zero otherwise.
pub fn signature_bound(d: usize) -> usize {
    if d <= 1 {
        0
    } else {
        2 * ceil_log2(d) - 1
    }
}

fn check_inputs(dets: &[Gf2Vec]) -> Result<usize, Gf2Error> {
    let first = dets.first().ok_or(Gf2Error::Empty)?;
    let n = first.len();
    let mut seen = std::collections::HashMap::new();
    for (i, d) in dets.iter().enumerate() {
        if d.len() != n {
            return Err(Gf2Error::LengthMismatch { index: i, expected: n, found: d.len() });
        }
        if let Some(&j) = seen.get(d) {
            return Err(Gf2Error::DuplicateDeterminant { first: j, second: i });
        }
        seen.insert(d.clone(), i);
    }
    Ok(n)
}

/// Selects a row basis of the occupation matrix (rows are spin-orbital positions,
/// columns are determinants) and returns the positions with the restricted strings.
pub fn select_substrings(dets: &[Gf2Vec]) -> Result<(Vec<usize>, Vec<Gf2Vec>), Gf2Error> {
    let n_bits = check_inputs(dets)?;
    let d = dets.len();
    let rows: Vec<Gf2Vec> = (0..n_bits)
        .map(|j| {
            let mut row = Gf2Vec::zeros(d);
            for (i, det) in dets.iter().enumerate() {
                if det.get(j) {
                    row.set(i, true);
                }
            }
            row
        })
        .collect();
    let (_, selected) = rank_and_row_basis(&rows);
    let reduced = dets.iter().map(|v| v.restrict(&selected)).collect();
    Ok((selected, reduced))
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompressionStats {
    pub rank: usize,
    pub kernel_dim: usize,
    /// Candidates examined by each inductive step, outermost first.
    pub candidates_per_step: Vec<usize>,
}

impl CompressionStats {
    /// Per-step candidate allowance `D²/2 + D + 1`.
    pub fn step_budget(d: usize) -> usize {
        d * d / 2 + d + 1
    }
}

fn lexicographic_search(forbidden: &HashSet<Gf2Vec>, len: usize) -> Result<(Gf2Vec, usize), Gf2Error> {
    let limit = if len >= 64 { u64::MAX } else { 1u64 << len };
    let mut examined = 0usize;
    for c in 1..limit {
        examined += 1;
        let candidate = Gf2Vec::from_u64(c, len);
        if !forbidden.contains(&candidate) {
            return Ok((candidate, examined));
        }
    }
    Err(Gf2Error::SearchExhausted { dimension: len })
}

#[cfg(debug_assertions)]
fn all_distinct(vs: &[Gf2Vec]) -> bool {
    let set: HashSet<&Gf2Vec> = vs.iter().collect();
    set.len() == vs.len()
}

/// Builds a basis of a kernel `W` of dimension `r − (2⌈log₂D⌉ − 1)` containing no
/// nonzero input vector and no pairwise sum, for vectors spanning `F₂^r`.
fn kernel_by_induction(reduced: &[Gf2Vec], stats: &mut CompressionStats) -> Result<Vec<Gf2Vec>, Gf2Error> {
    let r = reduced[0].len();
    let target = signature_bound(reduced.len());
    let mut basis = EchelonBasis::new(r, reduced.len());
    let mut basis_index = Vec::with_capacity(r);
    for (i, v) in reduced.iter().enumerate() {
        if basis.rank() == r {
            break;
        }
        if basis.insert(v) {
            basis_index.push(i);
        }
    }
    debug_assert_eq!(basis_index.len(), r);
    let coord_basis = {
        let mut b = EchelonBasis::new(r, r);
        for &i in &basis_index {
            b.insert(&reduced[i]);
        }
        b
    };
    let mut vecs: Vec<Gf2Vec> = reduced
        .iter()
        .map(|v| coord_basis.coordinates(v).expect("vectors span the space"))
        .collect();

    let mut kernel_coords = Vec::new();
    for m in (target + 1..=r).rev() {
        let top = m - 1;
        let pivot_vec = basis_index[top];
        let mut forbidden = HashSet::new();
        forbidden.insert(Gf2Vec::zeros(top));
        let mut in_span = Vec::new();
        let mut shifted = Vec::new();
        for (i, v) in vecs.iter().enumerate() {
            if i == pivot_vec {
                continue;
            }
            if v.get(top) {
                let mut w = v.resized(top);
                w.xor_assign(&vecs[pivot_vec].resized(top));
                shifted.push(w);
            } else {
                in_span.push(v.resized(top));
            }
        }
        for a in in_span.iter().chain(&shifted) {
            forbidden.insert(a.clone());
        }
        for a in &in_span {
            for b in &shifted {
                forbidden.insert(a.xor(b));
            }
        }
        let (l, examined) = lexicographic_search(&forbidden, top)?;
        stats.candidates_per_step.push(examined);

        let mut w = vecs[pivot_vec].resized(r);
        w.xor_assign(&l.resized(r));
        kernel_coords.push(w);

        let e_top_part = vecs[pivot_vec].resized(top);
        vecs = vecs
            .iter()
            .enumerate()
            .map(|(i, v)| {
                if i == pivot_vec {
                    l.clone()
                } else if v.get(top) {
                    let mut w = v.resized(top);
                    w.xor_assign(&e_top_part);
                    w.xor_assign(&l);
                    w
                } else {
                    v.resized(top)
                }
            })
            .collect();
        #[cfg(debug_assertions)]
        {
            debug_assert!(all_distinct(&vecs), "inductive step produced coincident vectors");
        }
    }

    Ok(kernel_coords
        .iter()
        .map(|w| {
            let mut actual = Gf2Vec::zeros(r);
            for (j, &i) in basis_index.iter().enumerate() {
                if w.get(j) {
                    actual.xor_assign(&reduced[i]);
                }
            }
            actual
        })
        .collect())
}

/// Finds the rows of `U` for restricted strings of length `r`.
pub fn find_signature_vectors(reduced: &[Gf2Vec]) -> Result<(Vec<Gf2Vec>, CompressionStats), Gf2Error> {
    check_inputs(reduced)?;
    let d = reduced.len();
    let r = reduced[0].len();
    let mut stats = CompressionStats { rank: r, ..Default::default() };
    if d == 1 {
        return Ok((Vec::new(), stats));
    }
    let bound = signature_bound(d);
    if r <= bound {
        return Ok(((0..r).map(|i| Gf2Vec::unit(r, i)).collect(), stats));
    }
    if d == 2 {
        let diff = reduced[0].xor(&reduced[1]);
        let p = diff.first_one().expect("distinct strings differ somewhere");
        stats.kernel_dim = r - 1;
        return Ok((vec![Gf2Vec::unit(r, p)], stats));
    }
    let kernel = kernel_by_induction(reduced, &mut stats)?;
    stats.kernel_dim = kernel.len();
    let u = null_space(&kernel, r);
    debug_assert_eq!(u.len(), bound);
    Ok((u, stats))
}

/// The compression map: restriction to `selected_rows`, then the rows of `U`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "SignatureMapJson", try_from = "SignatureMapJson")]
pub struct SignatureMap {
    pub n_bits: usize,
    pub selected_rows: Vec<usize>,
    pub u_vectors: Vec<Gf2Vec>,
    pub signatures: Vec<Gf2Vec>,
}

impl SignatureMap {
    pub fn rank(&self) -> usize {
        self.selected_rows.len()
    }

    pub fn signature_len(&self) -> usize {
        self.u_vectors.len()
    }

    /// Signature of an arbitrary string of length `n_bits`.
    pub fn apply(&self, det: &Gf2Vec) -> Gf2Vec {
        let restricted = det.restrict(&self.selected_rows);
        let bits: Vec<bool> = self.u_vectors.iter().map(|u| u.dot(&restricted)).collect();
        Gf2Vec::from_bools(&bits)
    }
}

#[derive(Serialize, Deserialize)]
struct SignatureMapJson {
    n_bits: usize,
    rank: usize,
    signature_len: usize,
    selected_rows: Vec<usize>,
    u_vectors: Vec<String>,
    signatures: Vec<String>,
}

impl From<SignatureMap> for SignatureMapJson {
    fn from(m: SignatureMap) -> Self {
        Self {
            n_bits: m.n_bits,
            rank: m.rank(),
            signature_len: m.signature_len(),
            selected_rows: m.selected_rows.clone(),
            u_vectors: m.u_vectors.iter().map(Gf2Vec::to_hex).collect(),
            signatures: m.signatures.iter().map(Gf2Vec::to_hex).collect(),
        }
    }
}

impl TryFrom<SignatureMapJson> for SignatureMap {
    type Error = Gf2Error;

    fn try_from(j: SignatureMapJson) -> Result<Self, Gf2Error> {
        if j.rank != j.selected_rows.len() {
            return Err(Gf2Error::Parse("rank does not match selected_rows".into()));
        }
        let u_vectors = j
            .u_vectors
            .iter()
            .map(|h| Gf2Vec::from_hex(h, j.rank))
            .collect::<Result<Vec<_>, _>>()?;
        let signatures = j
            .signatures
            .iter()
            .map(|h| Gf2Vec::from_hex(h, j.signature_len))
            .collect::<Result<Vec<_>, _>>()?;
        if u_vectors.len() != j.signature_len {
            return Err(Gf2Error::Parse("signature_len does not match u_vectors".into()));
        }
        Ok(Self { n_bits: j.n_bits, selected_rows: j.selected_rows, u_vectors, signatures })
    }
}

pub fn compress_with_stats(dets: &[Gf2Vec]) -> Result<(SignatureMap, CompressionStats), Gf2Error> {
    let n_bits = check_inputs(dets)?;
    let (selected_rows, reduced) = select_substrings(dets)?;
    let (u_vectors, stats) = find_signature_vectors(&reduced)?;
    let signatures = reduced
        .iter()
        .map(|v| Gf2Vec::from_bools(&u_vectors.iter().map(|u| u.dot(v)).collect::<Vec<_>>()))
        .collect();
    let map = SignatureMap { n_bits, selected_rows, u_vectors, signatures };
    debug_assert!(map.signatures.iter().collect::<HashSet<_>>().len() == dets.len());
    Ok((map, stats))
}

/// Compresses distinct occupation strings to distinct signatures.
pub fn compress(dets: &[Gf2Vec]) -> Result<SignatureMap, Gf2Error> {
    compress_with_stats(dets).map(|(m, _)| m)
}

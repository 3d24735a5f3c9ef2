//! Orientation tables of labeled point sets and canonical order-type codes.
//!
//! A [`Chirotope`] records the orientation of every ordered triple of a
//! labeled point set in general position. Two point sets have the same
//! *order type* when some bijection between them preserves all triple
//! orientations; [`CanonicalCode`] is a complete invariant for this
//! equivalence, so codes can be compared, sorted and used as map keys.
//! Mirror images count as distinct order types unless the type happens to
//! be its own mirror.
//!
//! # Example
//!
//! ```
//! use order_flags::geometry::PointSet;
//! use order_flags::chirotope::Chirotope;
//!
//! let square = PointSet::from_integer_coords(&[(0, 0), (1, 0), (1, 1), (0, 1)]);
//! let rotated = PointSet::from_integer_coords(&[(1, 0), (1, 1), (0, 1), (0, 0)]);
//! let chi = Chirotope::of(&square).unwrap();
//! let rho = Chirotope::of(&rotated).unwrap();
//! assert_eq!(chi.canonical_code(), rho.canonical_code());
//! ```

use crate::geometry::{orient, GeometryError, PointSet};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// The orientation table of a labeled point set in general position.
///
/// Signs are stored for the `C(n,3)` increasing triples `i < j < k`;
/// [`Chirotope::sign`] extends the table to arbitrary distinct triples by
/// permutation parity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Chirotope {
    n: usize,
    /// Signs of increasing triples in lexicographic order.
    signs: Vec<i8>,
}

/// Rank of the increasing triple `(i, j, k)` in the lexicographic order of
/// all increasing triples over `0..n`.
fn triple_rank(n: usize, i: usize, j: usize, k: usize) -> usize {
    debug_assert!(i < j && j < k && k < n);
    let c3 = |m: usize| m * m.saturating_sub(1) * m.saturating_sub(2) / 6;
    let c2 = |m: usize| m * m.saturating_sub(1) / 2;
    // Triples starting below i, plus triples (i, b, *) with b < j, plus
    // triples (i, j, c) with c < k.
    (c3(n) - c3(n - i)) + (c2(n - 1 - i) - c2(n - j)) + (k - j - 1)
}

impl Chirotope {
    /// Number of labeled points.
    pub fn size(&self) -> usize {
        self.n
    }

    /// The orientation table of a point set in general position.
    pub fn of(p: &PointSet) -> Result<Chirotope, GeometryError> {
        let n = p.len();
        for i in 0..n {
            for j in (i + 1)..n {
                if p.point(i) == p.point(j) {
                    return Err(GeometryError::Degenerate);
                }
            }
        }
        let mut signs =
            Vec::with_capacity(n * n.saturating_sub(1) * n.saturating_sub(2) / 6);
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    let s = orient(p.point(i), p.point(j), p.point(k));
                    if s == 0 {
                        return Err(GeometryError::Degenerate);
                    }
                    signs.push(s);
                }
            }
        }
        Ok(Chirotope { n, signs })
    }

    /// Builds a chirotope directly from a sign table over increasing
    /// triples (lexicographic order). All signs must be nonzero.
    pub fn from_signs(n: usize, signs: Vec<i8>) -> Chirotope {
        assert_eq!(signs.len(), n * n.saturating_sub(1) * n.saturating_sub(2) / 6);
        assert!(signs.iter().all(|&s| s == 1 || s == -1));
        Chirotope { n, signs }
    }

    /// The chirotope of `n` points in convex position labeled in
    /// counterclockwise order: every increasing triple is positive.
    pub fn convex(n: usize) -> Chirotope {
        let len = n * n.saturating_sub(1) * n.saturating_sub(2) / 6;
        Chirotope { n, signs: vec![1; len] }
    }

    /// Orientation of the ordered triple `(i, j, k)` of distinct labels.
    pub fn sign(&self, i: usize, j: usize, k: usize) -> i8 {
        debug_assert!(i != j && j != k && i != k);
        // Sort the triple, tracking the permutation parity.
        let (mut a, mut b, mut c) = (i, j, k);
        let mut flip = 1i8;
        if a > b {
            std::mem::swap(&mut a, &mut b);
            flip = -flip;
        }
        if b > c {
            std::mem::swap(&mut b, &mut c);
            flip = -flip;
        }
        if a > b {
            std::mem::swap(&mut a, &mut b);
            flip = -flip;
        }
        flip * self.signs[triple_rank(self.n, a, b, c)]
    }

    /// The orientation signs of all increasing triples, in lexicographic
    /// order.
    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// The chirotope with every orientation reversed (the mirror image).
    pub fn mirror(&self) -> Chirotope {
        Chirotope {
            n: self.n,
            signs: self.signs.iter().map(|s| -s).collect(),
        }
    }

    /// Relabels the chirotope: entry `(i, j, k)` of the result is the sign
    /// of `(perm[i], perm[j], perm[k])` in `self`.
    pub fn relabel(&self, perm: &[usize]) -> Chirotope {
        debug_assert_eq!(perm.len(), self.n);
        let mut signs = Vec::with_capacity(self.signs.len());
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                for k in (j + 1)..self.n {
                    signs.push(self.sign(perm[i], perm[j], perm[k]));
                }
            }
        }
        Chirotope { n: self.n, signs }
    }

    /// The induced chirotope on the listed labels, in the listed order.
    pub fn sub_chirotope(&self, labels: &[usize]) -> Chirotope {
        let m = labels.len();
        let mut signs = Vec::with_capacity(m * m.saturating_sub(1) * m.saturating_sub(2) / 6);
        for i in 0..m {
            for j in (i + 1)..m {
                for k in (j + 1)..m {
                    signs.push(self.sign(labels[i], labels[j], labels[k]));
                }
            }
        }
        Chirotope { n: m, signs }
    }

    /// Whether label `i` is an extreme point: not inside any triangle
    /// spanned by three other labels.
    pub fn is_extreme(&self, i: usize) -> bool {
        let others: Vec<usize> = (0..self.n).filter(|&x| x != i).collect();
        let m = others.len();
        for a in 0..m {
            for b in (a + 1)..m {
                for c in (b + 1)..m {
                    let (j, k, l) = (others[a], others[b], others[c]);
                    let s = self.sign(j, k, l);
                    if self.sign(j, k, i) == s && self.sign(k, l, i) == s && self.sign(l, j, i) == s
                    {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Number of extreme points (the convex-hull size).
    pub fn hull_size(&self) -> usize {
        if self.n <= 2 {
            return self.n;
        }
        (0..self.n).filter(|&i| self.is_extreme(i)).count()
    }

    /// Whether all points are extreme.
    pub fn convex_position(&self) -> bool {
        self.hull_size() == self.n
    }

    /// Packs the sign table of the current labeling into bits, one bit per
    /// increasing triple in lexicographic order (`+1 ↦ 1`), most
    /// significant bit first.
    pub fn encode_bits(&self) -> Vec<u8> {
        pack_bits(self.signs.iter().map(|&s| s == 1))
    }

    /// Radial sweep order around pivot `p` starting at the ray toward `q`:
    /// `q` first, then the remaining labels in counterclockwise angular
    /// order, derived from orientation signs alone.
    fn sweep_order(&self, p: usize, q: usize) -> Vec<usize> {
        let mut rest: Vec<usize> = (0..self.n).filter(|&r| r != p && r != q).collect();
        // Points on the counterclockwise side of the line p→q come first
        // (their angle from the ray is in (0, π)); within a side, r
        // precedes r' exactly when r' lies to the left of the ray p→r.
        rest.sort_by(|&r, &rp| {
            let hr = self.sign(p, q, r);
            let hrp = self.sign(p, q, rp);
            if hr != hrp {
                // +1 half-plane first.
                hrp.cmp(&hr)
            } else if self.sign(p, r, rp) == 1 {
                std::cmp::Ordering::Less
            } else {
                std::cmp::Ordering::Greater
            }
        });
        let mut order = Vec::with_capacity(self.n);
        order.push(p);
        order.push(q);
        order.extend(rest);
        order
    }

    /// The canonical code of the order type of this chirotope.
    ///
    /// For every ordered pair `(p, q)` of distinct labels, the radial
    /// sweep around `p` starting at `q` induces a relabeling; the code is
    /// the lexicographically smallest bit-packed sign table over all
    /// `n(n-1)` sweeps. Two chirotopes get equal codes exactly when some
    /// bijection of their labels carries one sign table to the other, and
    /// reversing all orientations changes the code unless the order type
    /// is its own mirror image.
    pub fn canonical_code(&self) -> CanonicalCode {
        if self.n < 3 {
            return CanonicalCode {
                n: self.n as u8,
                bits: Vec::new(),
            };
        }
        let mut best: Option<Vec<u8>> = None;
        for p in 0..self.n {
            for q in 0..self.n {
                if p == q {
                    continue;
                }
                let order = self.sweep_order(p, q);
                let bits = self.relabel(&order).encode_bits();
                if best.as_ref().is_none_or(|b| bits < *b) {
                    best = Some(bits);
                }
            }
        }
        CanonicalCode {
            n: self.n as u8,
            bits: best.unwrap(),
        }
    }

    /// Canonical code of the labeled structure whose first `k` labels are
    /// pinned: the minimum bit-packed sign table over relabelings that fix
    /// labels `0..k` pointwise and permute the rest arbitrarily.
    ///
    /// With `k = 0` this minimizes over all permutations, which is a
    /// complete (if slower) order-type invariant; it is intended for small
    /// rooted structures where `n - k` stays tiny.
    pub fn rooted_code(&self, k: usize) -> CanonicalCode {
        assert!(k <= self.n);
        let tail: Vec<usize> = (k..self.n).collect();
        let mut best: Option<Vec<u8>> = None;
        let mut perm: Vec<usize> = (0..self.n).collect();
        let mut tails = permutations(&tail);
        while let Some(t) = tails.next() {
            perm[k..].copy_from_slice(&t);
            let bits = self.relabel(&perm).encode_bits();
            if best.as_ref().is_none_or(|b| bits < *b) {
                best = Some(bits);
            }
        }
        CanonicalCode {
            n: self.n as u8,
            bits: best.unwrap_or_default(),
        }
    }
}

/// Iterator over all permutations of a slice (Heap's algorithm).
fn permutations(items: &[usize]) -> Permutations {
    Permutations {
        items: items.to_vec(),
        c: vec![0; items.len()],
        i: 0,
        first: true,
    }
}

struct Permutations {
    items: Vec<usize>,
    c: Vec<usize>,
    i: usize,
    first: bool,
}

impl Permutations {
    fn next(&mut self) -> Option<Vec<usize>> {
        if self.first {
            self.first = false;
            return Some(self.items.clone());
        }
        while self.i < self.items.len() {
            if self.c[self.i] < self.i {
                if self.i % 2 == 0 {
                    self.items.swap(0, self.i);
                } else {
                    self.items.swap(self.c[self.i], self.i);
                }
                self.c[self.i] += 1;
                self.i = 0;
                return Some(self.items.clone());
            }
            self.c[self.i] = 0;
            self.i += 1;
        }
        None
    }
}

/// Packs booleans into bytes, most significant bit first.
fn pack_bits(bits: impl Iterator<Item = bool>) -> Vec<u8> {
    let mut out = Vec::new();
    let mut acc = 0u8;
    let mut used = 0;
    for b in bits {
        acc = (acc << 1) | u8::from(b);
        used += 1;
        if used == 8 {
            out.push(acc);
            acc = 0;
            used = 0;
        }
    }
    if used > 0 {
        out.push(acc << (8 - used));
    }
    out
}

/// A complete, order-comparable identifier of an order type.
///
/// Codes of different sizes never compare equal. The textual form is
/// `<size>:<hex digits>` (sizes below 3 have no digits).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalCode {
    n: u8,
    bits: Vec<u8>,
}

impl CanonicalCode {
    /// Size of the order type this code identifies.
    pub fn size(&self) -> usize {
        self.n as usize
    }

    /// The packed sign bits.
    pub fn bytes(&self) -> &[u8] {
        &self.bits
    }

    /// Rebuilds a code from its size and packed bits (as stored on disk).
    pub fn from_parts(n: u8, bits: Vec<u8>) -> CanonicalCode {
        CanonicalCode { n, bits }
    }

    /// Reconstructs the sign table the code encodes, as a chirotope on
    /// the canonical labeling.
    pub fn decode(&self) -> Chirotope {
        let n = self.n as usize;
        let len = n * n.saturating_sub(1) * n.saturating_sub(2) / 6;
        let mut signs = Vec::with_capacity(len);
        for idx in 0..len {
            let byte = self.bits[idx / 8];
            let bit = (byte >> (7 - idx % 8)) & 1;
            signs.push(if bit == 1 { 1 } else { -1 });
        }
        Chirotope { n, signs }
    }
}

impl fmt::Display for CanonicalCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.n)?;
        for b in &self.bits {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl FromStr for CanonicalCode {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (size, hex) = s
            .split_once(':')
            .ok_or_else(|| GeometryError::Format(format!("bad code {s:?}: missing ':'")))?;
        let n: u8 = size
            .parse()
            .map_err(|_| GeometryError::Format(format!("bad code size in {s:?}")))?;
        if hex.len() % 2 != 0 {
            return Err(GeometryError::Format(format!("odd hex length in {s:?}")));
        }
        let mut bits = Vec::with_capacity(hex.len() / 2);
        for i in (0..hex.len()).step_by(2) {
            let byte = u8::from_str_radix(&hex[i..i + 2], 16)
                .map_err(|_| GeometryError::Format(format!("bad hex in {s:?}")))?;
            bits.push(byte);
        }
        let expected = {
            let n = n as usize;
            let triples = n * n.saturating_sub(1) * n.saturating_sub(2) / 6;
            triples.div_ceil(8)
        };
        if bits.len() != expected {
            return Err(GeometryError::Format(format!(
                "code {s:?} has {got} bytes, size {n} needs {expected}",
                got = bits.len()
            )));
        }
        Ok(CanonicalCode { n, bits })
    }
}

impl Serialize for CanonicalCode {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CanonicalCode {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

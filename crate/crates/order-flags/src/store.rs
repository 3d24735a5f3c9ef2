//! Exhaustive enumeration and persistent storage of realizable order types.
//!
//! The store holds, per size, one [`OrderTypeRecord`] for every order type
//! realizable by planar points in general position, keyed and sorted by
//! canonical code. Enumeration works bottom-up: every size-`n` type is
//! found by inserting a new point into a witness of a size-`n-1` type, one
//! sample point per cell of the arrangement of all connecting lines of the
//! witness. Because each record carries an explicit witness, realizability
//! is guaranteed by construction.
//!
//! # Example
//!
//! ```
//! use order_flags::store::OrderTypeStore;
//!
//! let mut store = OrderTypeStore::new();
//! store.enumerate_up_to(6).unwrap();
//! assert_eq!(store.records(6).unwrap().len(), 20);
//! ```

use crate::chirotope::{CanonicalCode, Chirotope};
use crate::geometry::{format_rational, parse_rational, GeometryError, Point, PointSet};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;

/// Errors from enumeration and store persistence.
#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    /// Underlying I/O failure.
    #[error("store I/O error: {0}")]
    Io(#[from] std::io::Error),
    /// The file is an order-type store of an unsupported version.
    #[error("store version mismatch: expected \"OTDB v1\", found {found:?}")]
    VersionMismatch {
        /// The version string found in the file header.
        found: String,
    },
    /// The file's trailing checksum does not match its content.
    #[error("store checksum mismatch (file truncated or corrupted)")]
    ChecksumMismatch,
    /// A required size is not present in the store.
    #[error("store is missing size {0}; enumerate it first")]
    MissingSize(usize),
    /// A code was looked up that the store does not contain.
    #[error("unknown order-type code {0}")]
    UnknownCode(String),
    /// The file did not parse as an order-type store.
    #[error("store format error: {0}")]
    Format(String),
    /// A geometric failure while validating witnesses.
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// An order type together with an explicit realization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderTypeRecord {
    /// Canonical code identifying the order type.
    pub code: CanonicalCode,
    /// A point set in general position whose chirotope canonicalizes to
    /// `code`; coordinates are integers whenever snapping succeeds.
    pub witness: PointSet,
}

/// Per-size lists of order-type records, sorted by code.
#[derive(Debug, Clone, Default)]
pub struct OrderTypeStore {
    by_size: BTreeMap<usize, Vec<OrderTypeRecord>>,
    /// Alternative witnesses discovered during enumeration, used to widen
    /// the coverage of later extension rounds. Not persisted.
    extras: HashMap<CanonicalCode, Vec<PointSet>>,
}

/// Extra witnesses kept per order type beyond the primary one.
const MAX_EXTRA_WITNESSES: usize = 2;

impl OrderTypeStore {
    /// Creates a store pre-seeded with the unique order types of sizes 0,
    /// 1 and 2.
    pub fn new() -> OrderTypeStore {
        let mut store = OrderTypeStore::default();
        for n in 0..=2usize {
            let coords: Vec<(i64, i64)> = (0..n as i64).map(|i| (i, 0)).collect();
            let witness = PointSet::from_integer_coords(&coords);
            let code = Chirotope::of(&witness).unwrap().canonical_code();
            store.by_size.insert(n, vec![OrderTypeRecord { code, witness }]);
        }
        store
    }

    /// Sizes currently enumerated.
    pub fn sizes(&self) -> Vec<usize> {
        self.by_size.keys().copied().collect()
    }

    /// Largest enumerated size.
    pub fn max_size(&self) -> usize {
        self.by_size.keys().next_back().copied().unwrap_or(0)
    }

    /// The records of the given size, sorted by code.
    pub fn records(&self, n: usize) -> Result<&[OrderTypeRecord], StoreError> {
        self.by_size
            .get(&n)
            .map(Vec::as_slice)
            .ok_or(StoreError::MissingSize(n))
    }

    /// The codes of the given size, sorted.
    pub fn codes(&self, n: usize) -> Vec<CanonicalCode> {
        self.by_size
            .get(&n)
            .map(|recs| recs.iter().map(|r| r.code.clone()).collect())
            .unwrap_or_default()
    }

    /// Looks up a record by code.
    pub fn get(&self, code: &CanonicalCode) -> Option<&OrderTypeRecord> {
        let recs = self.by_size.get(&code.size())?;
        let idx = recs.binary_search_by(|r| r.code.cmp(code)).ok()?;
        Some(&recs[idx])
    }

    /// Position of a code within its (sorted) size class.
    pub fn index_of(&self, code: &CanonicalCode) -> Option<usize> {
        let recs = self.by_size.get(&code.size())?;
        recs.binary_search_by(|r| r.code.cmp(code)).ok()
    }

    /// The code of `n` points in convex position, if size `n` is
    /// enumerated.
    pub fn convex_code(&self, n: usize) -> Option<CanonicalCode> {
        if n < 3 {
            return self.by_size.get(&n).map(|r| r[0].code.clone());
        }
        Some(Chirotope::convex(n).canonical_code())
    }

    /// All codes of size `n` whose convex hull has exactly `h` vertices.
    pub fn codes_with_hull(&self, n: usize, h: usize) -> Vec<CanonicalCode> {
        self.codes(n)
            .into_iter()
            .filter(|c| c.decode().hull_size() == h)
            .collect()
    }

    /// Enumerates all order types of size `n`, which must be 3 or have
    /// size `n - 1` already enumerated. Returns the number of types of
    /// size `n`; calling it again for an enumerated size is a no-op.
    pub fn enumerate(&mut self, n: usize) -> Result<usize, StoreError> {
        if let Some(recs) = self.by_size.get(&n) {
            return Ok(recs.len());
        }
        if n == 3 {
            let witness = PointSet::from_integer_coords(&[(0, 0), (1, 0), (0, 1)]);
            let code = Chirotope::of(&witness).unwrap().canonical_code();
            self.by_size.insert(3, vec![OrderTypeRecord { code, witness }]);
            return Ok(1);
        }
        let parents = self
            .by_size
            .get(&(n - 1))
            .ok_or(StoreError::MissingSize(n - 1))?;
        let mut parent_witnesses: Vec<&PointSet> = Vec::new();
        for rec in parents {
            parent_witnesses.push(&rec.witness);
            if let Some(extra) = self.extras.get(&rec.code) {
                parent_witnesses.extend(extra.iter());
            }
        }

        let per_parent: Vec<Vec<(CanonicalCode, PointSet)>> = parent_witnesses
            .par_iter()
            .map(|&w| {
                let chi = Chirotope::of(w).expect("stored witness is in general position");
                extend_types(w, &chi)
            })
            .collect();

        let mut merged: BTreeMap<CanonicalCode, Vec<PointSet>> = BTreeMap::new();
        for batch in per_parent {
            for (code, witness) in batch {
                let entry = merged.entry(code).or_default();
                if entry.len() <= MAX_EXTRA_WITNESSES {
                    entry.push(witness);
                }
            }
        }

        let snapped: Vec<(CanonicalCode, Vec<PointSet>)> = merged
            .into_par_iter()
            .map(|(code, witnesses)| {
                let mut kept: Vec<PointSet> = Vec::new();
                for w in &witnesses {
                    let chi = Chirotope::of(w).expect("candidate witness is in general position");
                    if let Some(s) = snap_witness(w, &chi) {
                        kept.push(s);
                    }
                }
                if kept.is_empty() {
                    // Snapping failed for every witness; keep an exact
                    // rational realization rather than lose the type.
                    kept.push(witnesses[0].clone());
                }
                (code, kept)
            })
            .collect();

        let mut records = Vec::with_capacity(snapped.len());
        for (code, mut witnesses) in snapped {
            let witness = witnesses.remove(0);
            if !witnesses.is_empty() {
                self.extras.insert(code.clone(), witnesses);
            }
            records.push(OrderTypeRecord { code, witness });
        }
        let count = records.len();
        self.by_size.insert(n, records);
        Ok(count)
    }

    /// Enumerates every size from 3 through `n` that is not yet present.
    pub fn enumerate_up_to(&mut self, n: usize) -> Result<(), StoreError> {
        for size in 3..=n {
            self.enumerate(size)?;
        }
        Ok(())
    }

    /// Re-derives the set of size-`n` codes with an independent sampling
    /// strategy (horizontal instead of vertical slab decomposition,
    /// applied to reflected witnesses), without touching the store.
    ///
    /// Intended as a cross-check: the result must equal
    /// [`OrderTypeStore::codes`] of the same size.
    pub fn enumerate_codes_independent(&self, n: usize) -> Result<BTreeSet<CanonicalCode>, StoreError> {
        assert!(n > 3, "sizes up to 3 have nothing to cross-check");
        let parents = self
            .by_size
            .get(&(n - 1))
            .ok_or(StoreError::MissingSize(n - 1))?;
        let mut parent_witnesses: Vec<PointSet> = Vec::new();
        for rec in parents {
            parent_witnesses.push(transpose(&rec.witness));
            if let Some(extra) = self.extras.get(&rec.code) {
                parent_witnesses.extend(extra.iter().map(transpose));
            }
        }
        let codes: BTreeSet<CanonicalCode> = parent_witnesses
            .par_iter()
            .map(|w| {
                let chi = Chirotope::of(w).expect("transposed witness is in general position");
                extend_types(w, &chi)
                    .into_iter()
                    .map(|(code, _)| code)
                    .collect::<BTreeSet<_>>()
            })
            .reduce(BTreeSet::new, |mut a, b| {
                a.extend(b);
                a
            });
        Ok(codes)
    }

    /// Serializes the store to a binary OTDB v1 file with a trailing
    /// checksum.
    pub fn save(&self, path: &Path) -> Result<(), StoreError> {
        let mut buf: Vec<u8> = Vec::new();
        buf.extend_from_slice(MAGIC);
        push_u32(&mut buf, self.by_size.len() as u32);
        for (&n, records) in &self.by_size {
            push_u32(&mut buf, n as u32);
            push_u32(&mut buf, records.len() as u32);
            for rec in records {
                push_u32(&mut buf, rec.code.bytes().len() as u32);
                buf.extend_from_slice(rec.code.bytes());
                push_u32(&mut buf, rec.witness.len() as u32);
                for p in rec.witness.points() {
                    for coord in [&p.x, &p.y] {
                        let s = format_rational(coord);
                        push_u32(&mut buf, s.len() as u32);
                        buf.extend_from_slice(s.as_bytes());
                    }
                }
            }
        }
        let crc = crc32(&buf);
        push_u32(&mut buf, crc);
        std::fs::write(path, buf)?;
        Ok(())
    }

    /// Loads a store from an OTDB v1 file, verifying the checksum and
    /// re-canonicalizing every witness against its stored code.
    pub fn load(path: &Path) -> Result<OrderTypeStore, StoreError> {
        let data = std::fs::read(path)?;
        if data.len() < 5 || &data[..5] != b"OTDB " {
            return Err(StoreError::Format("not an OTDB file".into()));
        }
        if data.len() < MAGIC.len() || &data[..MAGIC.len()] != MAGIC {
            let end = data
                .iter()
                .position(|&b| b == b'\n')
                .map_or(data.len().min(16), |i| i.min(16));
            return Err(StoreError::VersionMismatch {
                found: String::from_utf8_lossy(&data[..end]).into_owned(),
            });
        }
        if data.len() < MAGIC.len() + 4 {
            return Err(StoreError::ChecksumMismatch);
        }
        let (body, tail) = data.split_at(data.len() - 4);
        let stored_crc = u32::from_le_bytes(tail.try_into().unwrap());
        if crc32(body) != stored_crc {
            return Err(StoreError::ChecksumMismatch);
        }

        let mut cur = Cursor {
            data: &body[MAGIC.len()..],
            pos: 0,
        };
        let mut by_size = BTreeMap::new();
        let blocks = cur.read_u32()?;
        for _ in 0..blocks {
            let n = cur.read_u32()? as usize;
            let count = cur.read_u32()? as usize;
            let mut records = Vec::with_capacity(count);
            for _ in 0..count {
                let code_len = cur.read_u32()? as usize;
                let expected = (n * n.saturating_sub(1) * n.saturating_sub(2) / 6).div_ceil(8);
                if code_len != expected {
                    return Err(StoreError::Format(format!(
                        "size-{n} code has {code_len} bytes, expected {expected}"
                    )));
                }
                let code_bytes = cur.read_bytes(code_len)?.to_vec();
                let code = CanonicalCode::from_parts(n as u8, code_bytes);
                let npoints = cur.read_u32()? as usize;
                let mut points = Vec::with_capacity(npoints);
                for _ in 0..npoints {
                    let x = parse_rational(cur.read_str()?)?;
                    let y = parse_rational(cur.read_str()?)?;
                    points.push(Point::new(x, y));
                }
                records.push(OrderTypeRecord {
                    code,
                    witness: PointSet::new(points),
                });
            }
            by_size.insert(n, records);
        }
        if cur.pos != cur.data.len() {
            return Err(StoreError::Format("trailing bytes after last block".into()));
        }

        // Validate: every witness must realize its code, and codes must be
        // sorted and distinct within each size.
        for records in by_size.values() {
            for pair in records.windows(2) {
                if pair[0].code >= pair[1].code {
                    return Err(StoreError::Format("codes not sorted".into()));
                }
            }
        }
        let bad = by_size
            .par_iter()
            .flat_map(|(_, records)| records.par_iter())
            .find_any(|rec| {
                rec.witness.len() != rec.code.size()
                    || Chirotope::of(&rec.witness)
                        .map(|chi| chi.canonical_code() != rec.code)
                        .unwrap_or(true)
            });
        if let Some(rec) = bad {
            return Err(StoreError::Format(format!(
                "witness does not realize its stored code {}",
                rec.code
            )));
        }
        Ok(OrderTypeStore {
            by_size,
            extras: HashMap::new(),
        })
    }
}

/// Tests whether two point sets have the same order type.
pub fn same_order_type(p: &PointSet, q: &PointSet) -> Result<bool, GeometryError> {
    Ok(Chirotope::of(p)?.canonical_code() == Chirotope::of(q)?.canonical_code())
}

const MAGIC: &[u8] = b"OTDB v1\n";

fn push_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn read_bytes(&mut self, len: usize) -> Result<&'a [u8], StoreError> {
        if self.pos + len > self.data.len() {
            return Err(StoreError::Format("unexpected end of data".into()));
        }
        let out = &self.data[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }

    fn read_u32(&mut self) -> Result<u32, StoreError> {
        let b = self.read_bytes(4)?;
        Ok(u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn read_str(&mut self) -> Result<&'a str, StoreError> {
        let len = self.read_u32()? as usize;
        let b = self.read_bytes(len)?;
        std::str::from_utf8(b).map_err(|_| StoreError::Format("invalid UTF-8".into()))
    }
}

/// CRC-32 (IEEE 802.3, reflected polynomial 0xEDB88320).
pub(crate) fn crc32(data: &[u8]) -> u32 {
    let mut crc = 0xFFFF_FFFFu32;
    for &byte in data {
        crc ^= u32::from(byte);
        for _ in 0..8 {
            crc = if crc & 1 != 0 {
                (crc >> 1) ^ 0xEDB8_8320
            } else {
                crc >> 1
            };
        }
    }
    !crc
}

/// Swaps the x and y coordinates of every point.
fn transpose(ps: &PointSet) -> PointSet {
    PointSet::new(
        ps.points()
            .iter()
            .map(|p| Point::new(p.y.clone(), p.x.clone()))
            .collect(),
    )
}

/// Rank of the pair `(i, j)` with `i < j` in lexicographic order over
/// `0..m`.
fn pair_rank(m: usize, i: usize, j: usize) -> usize {
    let c2 = |v: usize| v * v.saturating_sub(1) / 2;
    (c2(m) - c2(m - i)) + (j - i - 1)
}

/// The chirotope of `parent` with one extra point appended as the last
/// label; `new_signs[pair_rank(i, j)]` is the orientation of
/// `(i, j, new)`.
fn extended_chirotope(parent: &Chirotope, new_signs: &[i8]) -> Chirotope {
    let m = parent.size();
    let n = m + 1;
    let mut signs = Vec::with_capacity(n * (n - 1) * (n - 2) / 6);
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                if k < m {
                    signs.push(parent.sign(i, j, k));
                } else {
                    signs.push(new_signs[pair_rank(m, i, j)]);
                }
            }
        }
    }
    Chirotope::from_signs(n, signs)
}

/// All one-point extensions of a witness: one representative candidate
/// point per cell of the arrangement of connecting lines, deduplicated by
/// the vector of new orientation signs. Returns `(code, extended witness)`
/// pairs in deterministic order.
///
/// The witness is first sheared so that no connecting line is vertical and
/// no two points share an x-coordinate; a vertical-slab decomposition of
/// the arrangement then yields at least one interior sample per cell:
/// slab boundaries are exactly the pairwise line intersections and the
/// witness points' x-coordinates, so inside a slab the line heights are
/// totally ordered and midpoints of consecutive heights (plus a point
/// above and below everything) meet every cell crossing the slab.
fn extend_types(witness: &PointSet, chi: &Chirotope) -> Vec<(CanonicalCode, PointSet)> {
    let m = witness.len();
    debug_assert!(m >= 3);

    // Clear denominators and shear-scale (x, y) -> (Mx + y, My); this is a
    // positive-determinant linear map, so the chirotope is unchanged.
    let mut denom = BigInt::one();
    for p in witness.points() {
        denom = denom.lcm(p.x.denom()).lcm(p.y.denom());
    }
    let ints: Vec<(BigInt, BigInt)> = witness
        .points()
        .iter()
        .map(|p| {
            (
                p.x.numer() * (&denom / p.x.denom()),
                p.y.numer() * (&denom / p.y.denom()),
            )
        })
        .collect();
    let max_y = ints
        .iter()
        .map(|(_, y)| y.abs())
        .max()
        .unwrap_or_else(BigInt::zero);
    let shear: BigInt = &max_y * 2 + 3;
    let pts: Vec<(BigInt, BigInt)> = ints
        .iter()
        .map(|(x, y)| (&shear * x + y, &shear * y))
        .collect();

    // Connecting lines a·x + b·y + c = 0 for every pair, with b != 0.
    struct Line {
        a: BigInt,
        b: BigInt,
        c: BigInt,
    }
    let mut lines = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            let a = &pts[j].1 - &pts[i].1;
            let b = &pts[i].0 - &pts[j].0;
            let c = -(&a * &pts[i].0) - &b * &pts[i].1;
            debug_assert!(!b.is_zero(), "sheared connecting line is vertical");
            lines.push(Line { a, b, c });
        }
    }

    // Slab boundaries: pairwise intersection abscissas plus point
    // abscissas.
    let mut events: Vec<BigRational> = Vec::new();
    for i in 0..lines.len() {
        for j in (i + 1)..lines.len() {
            let den = &lines[i].a * &lines[j].b - &lines[j].a * &lines[i].b;
            if !den.is_zero() {
                let num = &lines[i].b * &lines[j].c - &lines[j].b * &lines[i].c;
                events.push(BigRational::new(num, den));
            }
        }
    }
    for (x, _) in &pts {
        events.push(BigRational::from_integer(x.clone()));
    }
    events.sort();
    events.dedup();

    let one = BigRational::one();
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut xs: Vec<BigRational> = Vec::with_capacity(events.len() + 1);
    xs.push(events[0].clone() - &one);
    for w in events.windows(2) {
        xs.push((&w[0] + &w[1]) * &half);
    }
    xs.push(events[events.len() - 1].clone() + &one);

    let pair_diffs: Vec<(BigInt, BigInt)> = {
        let mut v = Vec::with_capacity(m * (m - 1) / 2);
        for i in 0..m {
            for j in (i + 1)..m {
                v.push((&pts[j].0 - &pts[i].0, &pts[j].1 - &pts[i].1));
            }
        }
        v
    };

    let mut seen: HashSet<Vec<i8>> = HashSet::new();
    let mut out: Vec<(CanonicalCode, PointSet)> = Vec::new();

    for x in &xs {
        let xn = x.numer();
        let xd = x.denom();
        // Heights of all lines at this abscissa; inside a slab (and beyond
        // the outermost events) they are pairwise distinct.
        let mut heights: Vec<BigRational> = lines
            .iter()
            .map(|l| BigRational::new(-(&l.c) * xd - &l.a * xn, &l.b * xd))
            .collect();
        heights.sort();
        heights.dedup();
        let mut ys: Vec<BigRational> = Vec::with_capacity(heights.len() + 1);
        ys.push(heights[0].clone() - &one);
        for w in heights.windows(2) {
            ys.push((&w[0] + &w[1]) * &half);
        }
        ys.push(heights[heights.len() - 1].clone() + &one);

        // v_i = numerator of (x - X_i), shared across the slab.
        let vx: Vec<BigInt> = pts.iter().map(|(xi, _)| xn - xi * xd).collect();
        for y in &ys {
            let yn = y.numer();
            let yd = y.denom();
            let uy: Vec<BigInt> = pts.iter().map(|(_, yi)| yn - yi * yd).collect();
            // Common positive factor xd·yd dropped: orientation of
            // (P_i, P_j, candidate) is the sign of
            // dX_ij·(y-Y_i)·xd - dY_ij·(x-X_i)·yd.
            let wy: Vec<BigInt> = uy.iter().map(|u| u * xd).collect();
            let zx: Vec<BigInt> = vx.iter().map(|v| v * yd).collect();
            let mut signs = Vec::with_capacity(pair_diffs.len());
            let mut idx = 0;
            for i in 0..m {
                for _j in (i + 1)..m {
                    let (dx, dy) = &pair_diffs[idx];
                    let val = dx * &wy[i] - dy * &zx[i];
                    debug_assert!(!val.is_zero(), "sample point lies on a connecting line");
                    signs.push(if val.is_positive() { 1 } else { -1 });
                    idx += 1;
                }
            }
            if seen.insert(signs.clone()) {
                let ext = extended_chirotope(chi, &signs);
                let code = ext.canonical_code();
                let mut points: Vec<Point> = pts
                    .iter()
                    .map(|(px, py)| {
                        Point::new(
                            BigRational::from_integer(px.clone()),
                            BigRational::from_integer(py.clone()),
                        )
                    })
                    .collect();
                points.push(Point::new(x.clone(), y.clone()));
                out.push((code, PointSet::new(points)));
            }
        }
    }
    out
}

/// Searches for a small integer realization of the same chirotope by
/// normalizing into a `2^k` grid and rounding, for increasing `k`.
fn snap_witness(witness: &PointSet, chi: &Chirotope) -> Option<PointSet> {
    let min_x = witness.points().iter().map(|p| &p.x).min()?.clone();
    let min_y = witness.points().iter().map(|p| &p.y).min()?.clone();
    let width = witness.points().iter().map(|p| &p.x).max()? - &min_x;
    let height = witness.points().iter().map(|p| &p.y).max()? - &min_y;
    let range = if width >= height { width } else { height };
    if range.is_zero() {
        return None;
    }
    for k in [4u32, 5, 6, 8, 10, 12, 14, 16, 20, 24, 28, 32, 40, 48] {
        let scale = BigRational::from_integer(BigInt::one() << k) / &range;
        let snapped = PointSet::new(
            witness
                .points()
                .iter()
                .map(|p| {
                    Point::new(
                        ((&p.x - &min_x) * &scale).round(),
                        ((&p.y - &min_y) * &scale).round(),
                    )
                })
                .collect(),
        );
        if let Ok(snapped_chi) = Chirotope::of(&snapped) {
            if snapped_chi == *chi {
                return Some(snapped);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn crc32_test_vector() {
        assert_eq!(crc32(b"123456789"), 0xCBF4_3926);
    }

    #[test]
    fn counts_through_size_six() {
        let mut store = OrderTypeStore::new();
        store.enumerate_up_to(6).unwrap();
        assert_eq!(store.records(3).unwrap().len(), 1);
        assert_eq!(store.records(4).unwrap().len(), 2);
        assert_eq!(store.records(5).unwrap().len(), 3);
        assert_eq!(store.records(6).unwrap().len(), 20);
    }

    #[test]
    fn enumerate_is_idempotent() {
        let mut store = OrderTypeStore::new();
        store.enumerate_up_to(5).unwrap();
        let codes = store.codes(5);
        assert_eq!(store.enumerate(5).unwrap(), 3);
        assert_eq!(store.codes(5), codes);
    }

    #[test]
    fn enumerate_requires_previous_size() {
        let mut store = OrderTypeStore::new();
        assert!(matches!(
            store.enumerate(5),
            Err(StoreError::MissingSize(4))
        ));
    }

    #[test]
    fn every_witness_realizes_its_code() {
        let mut store = OrderTypeStore::new();
        store.enumerate_up_to(6).unwrap();
        for n in 3..=6 {
            for rec in store.records(n).unwrap() {
                let chi = Chirotope::of(&rec.witness).unwrap();
                assert_eq!(chi.canonical_code(), rec.code, "size {n}");
            }
        }
    }

    #[test]
    fn extension_codes_match_their_witnesses() {
        let witness = PointSet::from_integer_coords(&[(0, 0), (7, 1), (5, 6), (1, 5)]);
        let chi = Chirotope::of(&witness).unwrap();
        let found = extend_types(&witness, &chi);
        assert!(found.len() >= 3);
        for (code, ext) in found {
            assert_eq!(ext.len(), 5);
            assert_eq!(Chirotope::of(&ext).unwrap().canonical_code(), code);
        }
    }

    #[test]
    fn hull_size_partition_at_five() {
        let mut store = OrderTypeStore::new();
        store.enumerate_up_to(5).unwrap();
        assert_eq!(store.codes_with_hull(5, 5).len(), 1);
        assert_eq!(store.codes_with_hull(5, 4).len(), 1);
        assert_eq!(store.codes_with_hull(5, 3).len(), 1);
        assert_eq!(store.convex_code(5).unwrap(), store.codes_with_hull(5, 5)[0]);
    }

    #[test]
    fn size_six_has_chiral_types_and_mirror_closure() {
        let mut store = OrderTypeStore::new();
        store.enumerate_up_to(6).unwrap();
        let codes: BTreeSet<_> = store.codes(6).into_iter().collect();
        let mut chiral = 0;
        for code in &codes {
            let mirror = code.decode().mirror().canonical_code();
            assert!(codes.contains(&mirror), "mirror of {code} missing");
            if mirror != *code {
                chiral += 1;
            }
        }
        assert!(chiral > 0, "expected at least one chiral pair at size 6");
        assert_eq!(chiral % 2, 0);
    }

    #[test]
    fn independent_pass_agrees_at_size_six() {
        let mut store = OrderTypeStore::new();
        store.enumerate_up_to(6).unwrap();
        let alt = store.enumerate_codes_independent(6).unwrap();
        let main: BTreeSet<_> = store.codes(6).into_iter().collect();
        assert_eq!(alt, main);
    }

    #[test]
    fn insertion_completeness_oracle_at_five() {
        // Inserting random rational points into the size-4 witnesses must
        // never discover a code outside the enumerated size-5 set.
        let mut store = OrderTypeStore::new();
        store.enumerate_up_to(5).unwrap();
        let known: BTreeSet<_> = store.codes(5).into_iter().collect();
        let mut state = 0x9E37_79B9_7F4A_7C15u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            state >> 11
        };
        for rec in store.records(4).unwrap().to_vec() {
            let mut tried = 0;
            while tried < 10_000 {
                let num_x = (next() % 2001) as i64 - 1000;
                let num_y = (next() % 2001) as i64 - 1000;
                let den = (next() % 97 + 1) as i64;
                let cand = Point::new(
                    BigRational::new(BigInt::from(num_x), BigInt::from(den * 100)),
                    BigRational::new(BigInt::from(num_y), BigInt::from(den * 100)),
                );
                let mut points = rec.witness.points().to_vec();
                // Spread candidates across the witness's bounding box.
                points.push(cand);
                let ps = PointSet::new(points);
                if !ps.general_position() {
                    continue;
                }
                tried += 1;
                let code = Chirotope::of(&ps).unwrap().canonical_code();
                assert!(known.contains(&code), "unknown size-5 code {code}");
            }
        }
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("types.otdb");
        let mut store = OrderTypeStore::new();
        store.enumerate_up_to(6).unwrap();
        store.save(&path).unwrap();
        let loaded = OrderTypeStore::load(&path).unwrap();
        for n in 0..=6 {
            assert_eq!(
                store.records(n).unwrap(),
                loaded.records(n).unwrap(),
                "size {n}"
            );
        }
    }

    #[test]
    fn load_rejects_wrong_version() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.otdb");
        std::fs::write(&path, b"OTDB v9\n\x00\x00\x00\x00").unwrap();
        assert!(matches!(
            OrderTypeStore::load(&path),
            Err(StoreError::VersionMismatch { .. })
        ));
    }

    #[test]
    fn load_rejects_truncated_file() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("trunc.otdb");
        let mut store = OrderTypeStore::new();
        store.enumerate_up_to(4).unwrap();
        store.save(&path).unwrap();
        let data = std::fs::read(&path).unwrap();
        std::fs::write(&path, &data[..data.len() - 7]).unwrap();
        assert!(matches!(
            OrderTypeStore::load(&path),
            Err(StoreError::ChecksumMismatch)
        ));
    }

    #[test]
    fn load_rejects_corrupted_byte() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("corrupt.otdb");
        let mut store = OrderTypeStore::new();
        store.enumerate_up_to(4).unwrap();
        store.save(&path).unwrap();
        let mut data = std::fs::read(&path).unwrap();
        let mid = data.len() / 2;
        data[mid] ^= 0xFF;
        std::fs::write(&path, data).unwrap();
        assert!(OrderTypeStore::load(&path).is_err());
    }

    #[test]
    #[ignore = "slow: enumerates sizes 7 and 8"]
    fn counts_large_sizes() {
        let mut store = OrderTypeStore::new();
        store.enumerate_up_to(8).unwrap();
        assert_eq!(store.records(7).unwrap().len(), 242);
        assert_eq!(store.records(8).unwrap().len(), 6405);
    }

    #[test]
    fn count_size_seven_and_independent_pass() {
        let mut store = OrderTypeStore::new();
        store.enumerate_up_to(7).unwrap();
        assert_eq!(store.records(7).unwrap().len(), 242);
        let alt = store.enumerate_codes_independent(7).unwrap();
        assert_eq!(alt, store.codes(7).into_iter().collect());
    }

    #[test]
    fn same_order_type_on_affine_copies() {
        let p = PointSet::from_integer_coords(&[(0, 0), (4, 1), (5, 4), (2, 6), (-1, 3)]);
        // A rotated and scaled copy (direct similarity).
        let q = PointSet::new(
            p.points()
                .iter()
                .map(|pt| {
                    Point::new(
                        &pt.x * BigRational::from_integer(BigInt::from(3))
                            - &pt.y * BigRational::from_integer(BigInt::from(4)),
                        &pt.x * BigRational::from_integer(BigInt::from(4))
                            + &pt.y * BigRational::from_integer(BigInt::from(3)),
                    )
                })
                .collect(),
        );
        assert!(same_order_type(&p, &q).unwrap());
        let mut store = OrderTypeStore::new();
        store.enumerate_up_to(5).unwrap();
        let hull4 = store.codes_with_hull(5, 4)[0].clone();
        let w = store.get(&hull4).unwrap().witness.clone();
        assert!(!same_order_type(&p, &w).unwrap());
    }
}

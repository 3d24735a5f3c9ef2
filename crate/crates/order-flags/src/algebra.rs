//! The flag algebra of planar order types: densities, splits, rooted
//! flags, products, lifts, averaging, and evaluation against limit
//! vectors.
//!
//! The density `p(ω, Ω)` is the probability that `|ω|` points chosen
//! uniformly among the points of a realization of `Ω` have order type
//! `ω`; the split probability `p(ω′, ω″; Ω)` draws two disjoint uniform
//! subsets. Rooted flags carry a labeled chirotope as root; all
//! arithmetic is exact over the rationals.
//!
//! # Example
//!
//! ```
//! use num_rational::BigRational;
//! use order_flags::algebra::DensityCache;
//! use order_flags::OrderTypeStore;
//!
//! let mut store = OrderTypeStore::new();
//! store.enumerate_up_to(5).unwrap();
//! let cache = DensityCache::new(&store);
//! let convex4 = store.convex_code(4).unwrap();
//! let convex5 = store.convex_code(5).unwrap();
//! let one = BigRational::from_integer(1.into());
//! assert_eq!(cache.density(&convex4, &convex5).unwrap(), one);
//! ```

use crate::chirotope::{CanonicalCode, Chirotope};
use crate::geometry::{format_rational, parse_rational, GeometryError, PointSet};
use crate::store::{OrderTypeStore, StoreError};
use itertools::Itertools;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

/// Errors from flag-algebra operations.
#[derive(Debug, thiserror::Error)]
pub enum AlgebraError {
    /// A store-level failure (missing size, I/O, ...).
    #[error(transparent)]
    Store(#[from] StoreError),
    /// A geometric failure while building a flag from points.
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    /// A code that the store does not contain at its size.
    #[error("code {0} is not an enumerated order type")]
    UnknownCode(String),
    /// A flag code outside the basis of its root and level.
    #[error("flag code {0} is not in the basis of its root and level")]
    UnknownFlag(String),
    /// `small` must not exceed `big`.
    #[error("density requires |small| <= |big|, got {small} > {big}")]
    SizeOrder {
        /// Size of the would-be sub-type.
        small: usize,
        /// Size of the would-be super-type.
        big: usize,
    },
    /// Two elements live on different levels.
    #[error("level mismatch: {left} vs {right}")]
    LevelMismatch {
        /// Level of the left operand.
        left: usize,
        /// Level of the right operand.
        right: usize,
    },
    /// Two elements (or flags) have different roots.
    #[error("root mismatch between operands")]
    RootMismatch,
    /// Malformed serialized data.
    #[error("serialization error: {0}")]
    Serde(String),
}

type Result<T> = std::result::Result<T, AlgebraError>;

/// Memoized exact density and split-probability tables over a store.
#[derive(Debug)]
pub struct DensityCache<'a> {
    store: &'a OrderTypeStore,
    density_tables: Mutex<HashMap<(usize, usize), Arc<Vec<Vec<BigRational>>>>>,
    split_tables: Mutex<HashMap<(usize, usize, usize), Arc<Vec<Vec<Vec<BigRational>>>>>>,
}

impl<'a> DensityCache<'a> {
    /// Creates an empty cache over the given store.
    pub fn new(store: &'a OrderTypeStore) -> DensityCache<'a> {
        DensityCache {
            store,
            density_tables: Mutex::new(HashMap::new()),
            split_tables: Mutex::new(HashMap::new()),
        }
    }

    /// The store this cache reads from.
    pub fn store(&self) -> &'a OrderTypeStore {
        self.store
    }

    fn index_of(&self, code: &CanonicalCode) -> Result<usize> {
        self.store
            .index_of(code)
            .ok_or_else(|| AlgebraError::UnknownCode(code.to_string()))
    }

    /// The probability that `small.size()` uniform points of a
    /// realization of `big` have order type `small`.
    pub fn density(&self, small: &CanonicalCode, big: &CanonicalCode) -> Result<BigRational> {
        let (k, n) = (small.size(), big.size());
        if k > n {
            return Err(AlgebraError::SizeOrder { small: k, big: n });
        }
        let si = self.index_of(small)?;
        let bi = self.index_of(big)?;
        let table = self.density_table(k, n)?;
        Ok(table[bi][si].clone())
    }

    /// The full density table for sizes `(k, n)`, indexed
    /// `[big index][small index]` with indices as in the store's sorted
    /// code lists.
    pub fn density_table(&self, k: usize, n: usize) -> Result<Arc<Vec<Vec<BigRational>>>> {
        if k > n {
            return Err(AlgebraError::SizeOrder { small: k, big: n });
        }
        if let Some(t) = self.density_tables.lock().unwrap().get(&(k, n)) {
            return Ok(Arc::clone(t));
        }
        let small_index = self.code_index(k)?;
        let big_records = self.store.records(n)?;
        let denom = BigInt::from(binomial(n, k));
        let table: Vec<Vec<BigRational>> = big_records
            .par_iter()
            .map(|rec| {
                let chi = rec.code.decode();
                let mut counts = vec![0u64; small_index.len()];
                for subset in (0..n).combinations(k) {
                    let code = chi.sub_chirotope(&subset).canonical_code();
                    counts[small_index[&code]] += 1;
                }
                counts
                    .into_iter()
                    .map(|c| BigRational::new(BigInt::from(c), denom.clone()))
                    .collect()
            })
            .collect();
        let arc = Arc::new(table);
        self.density_tables
            .lock()
            .unwrap()
            .insert((k, n), Arc::clone(&arc));
        Ok(arc)
    }

    /// The probability that two disjoint uniform subsets of sizes
    /// `|small1|` and `|small2|` drawn from a realization of `big` have
    /// order types `small1` and `small2`, in that order.
    pub fn split_probability(
        &self,
        small1: &CanonicalCode,
        small2: &CanonicalCode,
        big: &CanonicalCode,
    ) -> Result<BigRational> {
        let (k1, k2, n) = (small1.size(), small2.size(), big.size());
        if k1 + k2 > n {
            return Err(AlgebraError::SizeOrder {
                small: k1 + k2,
                big: n,
            });
        }
        let i1 = self.index_of(small1)?;
        let i2 = self.index_of(small2)?;
        let bi = self.index_of(big)?;
        let table = self.split_table(k1, k2, n)?;
        Ok(table[bi][i1][i2].clone())
    }

    /// The full split table for sizes `(k1, k2, n)`, indexed
    /// `[big][small1][small2]`.
    pub fn split_table(
        &self,
        k1: usize,
        k2: usize,
        n: usize,
    ) -> Result<Arc<Vec<Vec<Vec<BigRational>>>>> {
        if k1 + k2 > n {
            return Err(AlgebraError::SizeOrder {
                small: k1 + k2,
                big: n,
            });
        }
        if let Some(t) = self.split_tables.lock().unwrap().get(&(k1, k2, n)) {
            return Ok(Arc::clone(t));
        }
        let index1 = self.code_index(k1)?;
        let index2 = self.code_index(k2)?;
        let big_records = self.store.records(n)?;
        let denom = BigInt::from(binomial(n, k1)) * BigInt::from(binomial(n - k1, k2));
        let table: Vec<Vec<Vec<BigRational>>> = big_records
            .par_iter()
            .map(|rec| {
                let chi = rec.code.decode();
                let mut counts = vec![vec![0u64; index2.len()]; index1.len()];
                for first in (0..n).combinations(k1) {
                    let c1 = chi.sub_chirotope(&first).canonical_code();
                    let rest: Vec<usize> = (0..n).filter(|i| !first.contains(i)).collect();
                    for second in rest.iter().copied().combinations(k2) {
                        let c2 = chi.sub_chirotope(&second).canonical_code();
                        counts[index1[&c1]][index2[&c2]] += 1;
                    }
                }
                counts
                    .into_iter()
                    .map(|row| {
                        row.into_iter()
                            .map(|c| BigRational::new(BigInt::from(c), denom.clone()))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let arc = Arc::new(table);
        self.split_tables
            .lock()
            .unwrap()
            .insert((k1, k2, n), Arc::clone(&arc));
        Ok(arc)
    }

    fn code_index(&self, n: usize) -> Result<HashMap<CanonicalCode, usize>> {
        Ok(self
            .store
            .records(n)?
            .iter()
            .enumerate()
            .map(|(i, r)| (r.code.clone(), i))
            .collect())
    }
}

/// `n` choose `k`.
pub(crate) fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut out = 1u64;
    for i in 0..k {
        out = out * (n - i) as u64 / (i + 1) as u64;
    }
    out
}

/// A rooted flag: a labeled chirotope whose first `root_size` labels
/// form the root, identified up to relabelings that fix the root
/// pointwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flag {
    chi: Chirotope,
    root_size: usize,
    code: CanonicalCode,
}

impl Flag {
    /// Wraps a labeled chirotope whose first `root_size` labels are the
    /// root.
    pub fn new(chi: Chirotope, root_size: usize) -> Flag {
        assert!(root_size <= chi.size());
        let code = chi.rooted_code(root_size);
        Flag {
            chi,
            root_size,
            code,
        }
    }

    /// Builds a flag from a point set, rooting it at the listed point
    /// indices in the listed order.
    pub fn from_point_set(ps: &PointSet, root: &[usize]) -> Result<Flag> {
        let chi = Chirotope::of(ps)?;
        let mut perm: Vec<usize> = root.to_vec();
        for i in 0..ps.len() {
            if !root.contains(&i) {
                perm.push(i);
            }
        }
        assert_eq!(perm.len(), ps.len(), "root indices must be distinct");
        Ok(Flag::new(chi.relabel(&perm), root.len()))
    }

    /// Total number of points, root included.
    pub fn size(&self) -> usize {
        self.chi.size()
    }

    /// Number of root points.
    pub fn root_size(&self) -> usize {
        self.root_size
    }

    /// The labeled root chirotope.
    pub fn root(&self) -> Chirotope {
        let idx: Vec<usize> = (0..self.root_size).collect();
        self.chi.sub_chirotope(&idx)
    }

    /// The rooted canonical code (minimal encoding over relabelings
    /// fixing the root).
    pub fn code(&self) -> &CanonicalCode {
        &self.code
    }

    /// The underlying labeled chirotope.
    pub fn chirotope(&self) -> &Chirotope {
        &self.chi
    }

    /// The canonical code of the underlying unrooted order type.
    pub fn unrooted_code(&self) -> CanonicalCode {
        self.chi.canonical_code()
    }
}

/// All flags with the given labeled root among order types of size `m`,
/// sorted by rooted code.
pub fn flag_basis(store: &OrderTypeStore, root: &Chirotope, m: usize) -> Result<Vec<Flag>> {
    let k = root.size();
    assert!(m >= k, "flag level must be at least the root size");
    let mut seen: BTreeMap<CanonicalCode, Flag> = BTreeMap::new();
    for rec in store.records(m)? {
        let chi = rec.code.decode();
        for tuple in (0..m).permutations(k) {
            if chi.sub_chirotope(&tuple) != *root {
                continue;
            }
            let mut perm = tuple.clone();
            perm.extend((0..m).filter(|i| !tuple.contains(i)));
            let flag = Flag::new(chi.relabel(&perm), k);
            seen.entry(flag.code().clone()).or_insert(flag);
        }
    }
    Ok(seen.into_values().collect())
}

/// The probability that `small.size() - k` uniform non-root points of
/// `big` together with the root induce the flag `small`; both flags must
/// have the same labeled root.
pub fn flag_density(small: &Flag, big: &Flag) -> Result<BigRational> {
    if small.root_size != big.root_size || small.root() != big.root() {
        return Err(AlgebraError::RootMismatch);
    }
    let k = small.root_size;
    let (m, n) = (small.size(), big.size());
    if m > n {
        return Err(AlgebraError::SizeOrder { small: m, big: n });
    }
    let mut count = 0u64;
    for subset in (k..n).combinations(m - k) {
        let mut idx: Vec<usize> = (0..k).collect();
        idx.extend(subset);
        if big.chi.sub_chirotope(&idx).rooted_code(k) == *small.code() {
            count += 1;
        }
    }
    Ok(BigRational::new(
        BigInt::from(count),
        BigInt::from(binomial(n - k, m - k)),
    ))
}

/// The probability that two disjoint uniform sets of non-root points of
/// `big` (of sizes `|small1| - k` and `|small2| - k`) induce, with the
/// root, the flags `small1` and `small2` in that order.
pub fn flag_split(small1: &Flag, small2: &Flag, big: &Flag) -> Result<BigRational> {
    if small1.root_size != big.root_size
        || small2.root_size != big.root_size
        || small1.root() != big.root()
        || small2.root() != big.root()
    {
        return Err(AlgebraError::RootMismatch);
    }
    let k = big.root_size;
    let (m1, m2, n) = (small1.size(), small2.size(), big.size());
    if m1 + m2 - k > n {
        return Err(AlgebraError::SizeOrder {
            small: m1 + m2 - k,
            big: n,
        });
    }
    let mut count = 0u64;
    for first in (k..n).combinations(m1 - k) {
        let mut idx1: Vec<usize> = (0..k).collect();
        idx1.extend(first.iter().copied());
        if big.chi.sub_chirotope(&idx1).rooted_code(k) != *small1.code() {
            continue;
        }
        let rest: Vec<usize> = (k..n).filter(|i| !first.contains(i)).collect();
        for second in rest.iter().copied().combinations(m2 - k) {
            let mut idx2: Vec<usize> = (0..k).collect();
            idx2.extend(second);
            if big.chi.sub_chirotope(&idx2).rooted_code(k) == *small2.code() {
                count += 1;
            }
        }
    }
    let denom = BigInt::from(binomial(n - k, m1 - k)) * BigInt::from(binomial(n - m1, m2 - k));
    Ok(BigRational::new(BigInt::from(count), denom))
}

/// How often each way of rooting the underlying type of `flag` yields
/// `flag` itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbeddingStats {
    /// Ordered root-size tuples inducing a flag isomorphic to this one.
    pub matching: u64,
    /// Ordered tuples inducing the root chirotope (any flag).
    pub valid: u64,
    /// All ordered root-size tuples.
    pub total: u64,
}

/// Counts, over all ordered `root_size`-tuples of the underlying
/// unrooted type of `flag`, how many induce the root and how many induce
/// the flag itself.
pub fn embedding_stats(flag: &Flag) -> EmbeddingStats {
    let n = flag.size();
    let k = flag.root_size();
    let root = flag.root();
    let mut matching = 0;
    let mut valid = 0;
    let mut total = 0;
    for tuple in (0..n).permutations(k) {
        total += 1;
        if flag.chi.sub_chirotope(&tuple) != root {
            continue;
        }
        valid += 1;
        let mut perm = tuple.clone();
        perm.extend((0..n).filter(|i| !tuple.contains(i)));
        if flag.chi.relabel(&perm).rooted_code(k) == *flag.code() {
            matching += 1;
        }
    }
    EmbeddingStats {
        matching,
        valid,
        total,
    }
}

/// A finite formal rational combination of order types (unrooted) or of
/// flags over a fixed root, all of one size (the level).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgebraElement {
    level: usize,
    root: Option<Chirotope>,
    terms: BTreeMap<CanonicalCode, BigRational>,
}

impl AlgebraElement {
    /// The zero element at a level (unrooted).
    pub fn zero(level: usize) -> AlgebraElement {
        AlgebraElement {
            level,
            root: None,
            terms: BTreeMap::new(),
        }
    }

    /// The zero element of a rooted algebra at a level.
    pub fn zero_rooted(root: Chirotope, level: usize) -> AlgebraElement {
        assert!(level >= root.size());
        AlgebraElement {
            level,
            root: Some(root),
            terms: BTreeMap::new(),
        }
    }

    /// The element consisting of a single order type with coefficient 1.
    pub fn of_type(code: &CanonicalCode) -> AlgebraElement {
        let mut terms = BTreeMap::new();
        terms.insert(code.clone(), BigRational::one());
        AlgebraElement {
            level: code.size(),
            root: None,
            terms,
        }
    }

    /// The element consisting of a single flag with coefficient 1.
    pub fn of_flag(flag: &Flag) -> AlgebraElement {
        let mut terms = BTreeMap::new();
        terms.insert(flag.code().clone(), BigRational::one());
        AlgebraElement {
            level: flag.size(),
            root: Some(flag.root()),
            terms,
        }
    }

    /// The sum of all order types of a size, each with coefficient 1.
    pub fn sum_of_types(store: &OrderTypeStore, level: usize) -> Result<AlgebraElement> {
        let terms = store
            .records(level)?
            .iter()
            .map(|r| (r.code.clone(), BigRational::one()))
            .collect();
        Ok(AlgebraElement {
            level,
            root: None,
            terms,
        })
    }

    /// Builds an element from explicit terms; all codes must have size
    /// `level`.
    pub fn from_terms(
        level: usize,
        root: Option<Chirotope>,
        terms: impl IntoIterator<Item = (CanonicalCode, BigRational)>,
    ) -> Result<AlgebraElement> {
        let mut map = BTreeMap::new();
        for (code, coeff) in terms {
            if code.size() != level {
                return Err(AlgebraError::LevelMismatch {
                    left: level,
                    right: code.size(),
                });
            }
            if !coeff.is_zero() {
                let entry = map.entry(code).or_insert_with(BigRational::zero);
                *entry += coeff;
            }
        }
        map.retain(|_, c| !c.is_zero());
        Ok(AlgebraElement {
            level,
            root,
            terms: map,
        })
    }

    /// The common size of the types or flags in this element.
    pub fn level(&self) -> usize {
        self.level
    }

    /// The labeled root, if this is a rooted element.
    pub fn root(&self) -> Option<&Chirotope> {
        self.root.as_ref()
    }

    /// The nonzero terms, sorted by code.
    pub fn terms(&self) -> &BTreeMap<CanonicalCode, BigRational> {
        &self.terms
    }

    /// The coefficient of a code (zero if absent).
    pub fn coefficient(&self, code: &CanonicalCode) -> BigRational {
        self.terms.get(code).cloned().unwrap_or_else(BigRational::zero)
    }

    fn check_compatible(&self, other: &AlgebraElement) -> Result<()> {
        if self.level != other.level {
            return Err(AlgebraError::LevelMismatch {
                left: self.level,
                right: other.level,
            });
        }
        if self.root != other.root {
            return Err(AlgebraError::RootMismatch);
        }
        Ok(())
    }

    /// The sum of two elements of the same level and root.
    pub fn add(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.check_compatible(other)?;
        let mut terms = self.terms.clone();
        for (code, coeff) in &other.terms {
            let entry = terms.entry(code.clone()).or_insert_with(BigRational::zero);
            *entry += coeff;
        }
        terms.retain(|_, c| !c.is_zero());
        Ok(AlgebraElement {
            level: self.level,
            root: self.root.clone(),
            terms,
        })
    }

    /// The element scaled by a rational constant.
    pub fn scale(&self, factor: &BigRational) -> AlgebraElement {
        if factor.is_zero() {
            return AlgebraElement {
                level: self.level,
                root: self.root.clone(),
                terms: BTreeMap::new(),
            };
        }
        AlgebraElement {
            level: self.level,
            root: self.root.clone(),
            terms: self
                .terms
                .iter()
                .map(|(c, v)| (c.clone(), v * factor))
                .collect(),
        }
    }

    /// The difference of two elements of the same level and root.
    pub fn sub(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.add(&other.scale(&-BigRational::one()))
    }

    /// The product, expanded at level `|a| + |b| - |root|` via split
    /// probabilities.
    pub fn product(&self, other: &AlgebraElement, cache: &DensityCache) -> Result<AlgebraElement> {
        if self.root != other.root {
            return Err(AlgebraError::RootMismatch);
        }
        let k = self.root.as_ref().map_or(0, Chirotope::size);
        let target = self.level + other.level - k;
        match &self.root {
            None => {
                let store = cache.store();
                let table = cache.split_table(self.level, other.level, target)?;
                let i1 = self.indices(store)?;
                let i2 = other.indices(store)?;
                let mut terms = BTreeMap::new();
                for (bi, rec) in store.records(target)?.iter().enumerate() {
                    let mut coeff = BigRational::zero();
                    for (a, ca) in &i1 {
                        for (b, cb) in &i2 {
                            coeff += ca * cb * &table[bi][*a][*b];
                        }
                    }
                    if !coeff.is_zero() {
                        terms.insert(rec.code.clone(), coeff);
                    }
                }
                Ok(AlgebraElement {
                    level: target,
                    root: None,
                    terms,
                })
            }
            Some(root) => {
                let store = cache.store();
                let basis1 = flag_basis(store, root, self.level)?;
                let basis2 = flag_basis(store, root, other.level)?;
                let f1 = self.flags(&basis1)?;
                let f2 = other.flags(&basis2)?;
                let mut terms = BTreeMap::new();
                for big in flag_basis(store, root, target)? {
                    let mut coeff = BigRational::zero();
                    for (fa, ca) in &f1 {
                        for (fb, cb) in &f2 {
                            coeff += ca * cb * flag_split(fa, fb, &big)?;
                        }
                    }
                    if !coeff.is_zero() {
                        terms.insert(big.code().clone(), coeff);
                    }
                }
                Ok(AlgebraElement {
                    level: target,
                    root: self.root.clone(),
                    terms,
                })
            }
        }
    }

    /// Rewrites the element at a higher level using densities; exact
    /// evaluation against any genuine limit is unchanged.
    pub fn lift(&self, target: usize, cache: &DensityCache) -> Result<AlgebraElement> {
        if target < self.level {
            return Err(AlgebraError::SizeOrder {
                small: self.level,
                big: target,
            });
        }
        let store = cache.store();
        match &self.root {
            None => {
                let table = cache.density_table(self.level, target)?;
                let idx = self.indices(store)?;
                let mut terms = BTreeMap::new();
                for (bi, rec) in store.records(target)?.iter().enumerate() {
                    let mut coeff = BigRational::zero();
                    for (si, c) in &idx {
                        coeff += c * &table[bi][*si];
                    }
                    if !coeff.is_zero() {
                        terms.insert(rec.code.clone(), coeff);
                    }
                }
                Ok(AlgebraElement {
                    level: target,
                    root: None,
                    terms,
                })
            }
            Some(root) => {
                let basis = flag_basis(store, root, self.level)?;
                let flags = self.flags(&basis)?;
                let mut terms = BTreeMap::new();
                for big in flag_basis(store, root, target)? {
                    let mut coeff = BigRational::zero();
                    for (f, c) in &flags {
                        coeff += c * flag_density(f, &big)?;
                    }
                    if !coeff.is_zero() {
                        terms.insert(big.code().clone(), coeff);
                    }
                }
                Ok(AlgebraElement {
                    level: target,
                    root: self.root.clone(),
                    terms,
                })
            }
        }
    }

    /// The averaging (unrooting) operator: each flag `τ` maps to
    /// `p · ω` where `ω` is its underlying type and `p` is the
    /// probability that a uniformly random ordered root-size tuple of
    /// `ω` induces `τ`.
    pub fn average(&self, cache: &DensityCache) -> Result<AlgebraElement> {
        let root = self.root.as_ref().ok_or(AlgebraError::RootMismatch)?;
        let store = cache.store();
        let basis = flag_basis(store, root, self.level)?;
        let flags = self.flags(&basis)?;
        let mut terms: BTreeMap<CanonicalCode, BigRational> = BTreeMap::new();
        for (flag, coeff) in &flags {
            let stats = embedding_stats(flag);
            let p = BigRational::new(BigInt::from(stats.matching), BigInt::from(stats.total));
            let entry = terms
                .entry(flag.unrooted_code())
                .or_insert_with(BigRational::zero);
            *entry += coeff * &p;
        }
        terms.retain(|_, c| !c.is_zero());
        Ok(AlgebraElement {
            level: self.level,
            root: None,
            terms,
        })
    }

    /// Evaluates an unrooted element against a limit vector of the same
    /// level.
    pub fn evaluate(&self, limit: &LimitVector) -> Result<BigRational> {
        if self.root.is_some() {
            return Err(AlgebraError::RootMismatch);
        }
        if self.level != limit.level() {
            return Err(AlgebraError::LevelMismatch {
                left: self.level,
                right: limit.level(),
            });
        }
        let mut out = BigRational::zero();
        for (code, coeff) in &self.terms {
            out += coeff * limit.value(code);
        }
        Ok(out)
    }

    /// Evaluates the element against the subtype densities of a single
    /// large order type: `Σ c_ω · p(ω, big)`.
    pub fn evaluate_in(&self, big: &CanonicalCode, cache: &DensityCache) -> Result<BigRational> {
        if self.root.is_some() {
            return Err(AlgebraError::RootMismatch);
        }
        let mut out = BigRational::zero();
        for (code, coeff) in &self.terms {
            out += coeff * cache.density(code, big)?;
        }
        Ok(out)
    }

    fn indices(&self, store: &OrderTypeStore) -> Result<Vec<(usize, BigRational)>> {
        self.terms
            .iter()
            .map(|(code, coeff)| {
                store
                    .index_of(code)
                    .map(|i| (i, coeff.clone()))
                    .ok_or_else(|| AlgebraError::UnknownCode(code.to_string()))
            })
            .collect()
    }

    fn flags(&self, basis: &[Flag]) -> Result<Vec<(Flag, BigRational)>> {
        self.terms
            .iter()
            .map(|(code, coeff)| {
                basis
                    .iter()
                    .find(|f| f.code() == code)
                    .map(|f| (f.clone(), coeff.clone()))
                    .ok_or_else(|| AlgebraError::UnknownFlag(code.to_string()))
            })
            .collect()
    }

    /// Serializes the element as JSON.
    pub fn to_json(&self) -> String {
        let repr = ElementRepr {
            level: self.level,
            root: self.root.as_ref().map(|r| RootRepr {
                size: r.size(),
                signs: r.signs().to_vec(),
            }),
            terms: self
                .terms
                .iter()
                .map(|(code, coeff)| TermRepr {
                    code: code.to_string(),
                    coeff: format_rational(coeff),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&repr).expect("element serialization cannot fail")
    }

    /// Parses an element from its JSON form.
    pub fn from_json(text: &str) -> Result<AlgebraElement> {
        let repr: ElementRepr =
            serde_json::from_str(text).map_err(|e| AlgebraError::Serde(e.to_string()))?;
        let root = repr
            .root
            .map(|r| {
                let expected = r.size * r.size.saturating_sub(1) * r.size.saturating_sub(2) / 6;
                if r.signs.len() != expected || r.signs.iter().any(|s| s.abs() != 1 && *s != 0) {
                    return Err(AlgebraError::Serde("malformed root chirotope".into()));
                }
                if r.signs.iter().any(|s| *s == 0) {
                    return Err(AlgebraError::Serde("root chirotope has zero sign".into()));
                }
                Ok(Chirotope::from_signs(r.size, r.signs))
            })
            .transpose()?;
        let terms = repr
            .terms
            .into_iter()
            .map(|t| {
                let code: CanonicalCode = t
                    .code
                    .parse()
                    .map_err(|e: GeometryError| AlgebraError::Serde(e.to_string()))?;
                let coeff = parse_rational(&t.coeff).map_err(|e| AlgebraError::Serde(e.to_string()))?;
                Ok((code, coeff))
            })
            .collect::<Result<Vec<_>>>()?;
        AlgebraElement::from_terms(repr.level, root, terms)
    }
}

#[derive(Serialize, Deserialize)]
struct ElementRepr {
    level: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    root: Option<RootRepr>,
    terms: Vec<TermRepr>,
}

#[derive(Serialize, Deserialize)]
struct RootRepr {
    size: usize,
    signs: Vec<i8>,
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    code: String,
    coeff: String,
}

/// An assignment of rational values to all order types of one size,
/// representing (a candidate for) the restriction of a limit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LimitVector {
    level: usize,
    values: BTreeMap<CanonicalCode, BigRational>,
}

impl LimitVector {
    /// Builds a vector from explicit values; all codes must have size
    /// `level`. Missing codes are treated as zero.
    pub fn new(
        level: usize,
        values: impl IntoIterator<Item = (CanonicalCode, BigRational)>,
    ) -> Result<LimitVector> {
        let mut map = BTreeMap::new();
        for (code, value) in values {
            if code.size() != level {
                return Err(AlgebraError::LevelMismatch {
                    left: level,
                    right: code.size(),
                });
            }
            map.insert(code, value);
        }
        Ok(LimitVector {
            level,
            values: map,
        })
    }

    /// The size of the types this vector assigns values to.
    pub fn level(&self) -> usize {
        self.level
    }

    /// The value at a code (zero if absent).
    pub fn value(&self, code: &CanonicalCode) -> BigRational {
        self.values
            .get(code)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    /// The stored values, sorted by code.
    pub fn values(&self) -> &BTreeMap<CanonicalCode, BigRational> {
        &self.values
    }

    /// Whether the values are nonnegative and sum to one.
    pub fn is_distribution(&self) -> bool {
        let mut sum = BigRational::zero();
        for v in self.values.values() {
            if v < &BigRational::zero() {
                return false;
            }
            sum += v;
        }
        sum.is_one()
    }
}

/// Renders the `(k, n)` density table as CSV: one row per size-`n` type,
/// one column per size-`k` type, exact `p/q` entries.
pub fn density_table_csv(cache: &DensityCache, k: usize, n: usize) -> Result<String> {
    let store = cache.store();
    let small: Vec<CanonicalCode> = store.records(k)?.iter().map(|r| r.code.clone()).collect();
    let big: Vec<CanonicalCode> = store.records(n)?.iter().map(|r| r.code.clone()).collect();
    let table = cache.density_table(k, n)?;
    let mut out = String::from("big");
    for code in &small {
        out.push(',');
        out.push_str(&code.to_string());
    }
    out.push('\n');
    for (bi, code) in big.iter().enumerate() {
        out.push_str(&code.to_string());
        for entry in &table[bi] {
            out.push(',');
            out.push_str(&format_rational(entry));
        }
        out.push('\n');
    }
    Ok(out)
}

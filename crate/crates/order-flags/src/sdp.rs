//! Semidefinite lower bounds for order-type densities, with exact
//! rational certificate verification.
//!
//! The bounds have the sum-of-squares shape familiar from flag-algebra
//! optimization.  Fix a level `N`, a target functional `f` assigning a
//! rational value `f(Ω)` to every order type `Ω` of size `N` (typically a
//! density `p(ω, Ω)` for a fixed small type `ω`), and a list of *roots*
//! `σ_1, …, σ_k`, each an order type with `|σ_i| ≡ N (mod 2)`.  For each
//! root let `B_i` be the basis of all `σ_i`-rooted flags of size
//! `m_i = (N + |σ_i|) / 2`, and let `Q_i(Ω)` be the symmetric matrix whose
//! `(s, t)` entry is the probability that a uniformly random ordered
//! embedding of `σ_i` into `Ω`, together with a uniformly random split of
//! the remaining points into two halves of size `m_i − |σ_i|`, induces the
//! flags `B_i[s]` and `B_i[t]`.  Averaging a square of rooted flags gives
//! exactly `uᵀ Q_i(Ω) u`, which is a nonnegative functional on limits, so
//!
//! ```text
//!     f(Ω) ≥ b + Σ_j λ_j · u_jᵀ Q_{r_j}(Ω) u_j   for all Ω of size N
//! ```
//!
//! with all `λ_j ≥ 0` proves that the limit value of `f` is at least `b`.
//! A [`Certificate`] stores the data `(roots, squares, b)`; verification
//! is pure `BigRational` arithmetic — no floating point and no positive
//! semidefiniteness check is ever needed, because the certificate is
//! already in sum-of-squares form.
//!
//! The module also speaks two text formats: sparse SDPA (`.dat-s`) for
//! handing the optimization problem to an external solver, and a
//! CSDP-style solution file (`.sol`) from which [`ingest_solution`]
//! recovers an exact certificate by rounding the solver's blocks to
//! rationals, shifting them to be safely positive semidefinite, and
//! factoring them as `L D Lᵀ`.  [`toy_solve`] is a small deterministic
//! projected-supergradient solver good enough to produce nontrivial
//! certificates at desk scale; it exists so the whole
//! emit → solve → ingest → verify loop can be exercised without external
//! binaries.
//!
//! ```
//! use order_flags::algebra::DensityCache;
//! use order_flags::sdp::{build_instance, default_roots, verify_certificate, Certificate, TargetSpec};
//! use order_flags::OrderTypeStore;
//!
//! let mut store = OrderTypeStore::new();
//! store.enumerate_up_to(5).unwrap();
//! let cache = DensityCache::new(&store);
//! let convex4 = store.convex_code(4).unwrap();
//! let target = TargetSpec::density_of(&cache, &convex4, 5).unwrap();
//! let instance = build_instance(&store, target, default_roots(&store, 5).unwrap()).unwrap();
//! // The empty certificate already proves f ≥ min_Ω f(Ω) = 1/5: every
//! // five points in general position contain a convex quadrilateral.
//! let cert = Certificate::zero(&instance);
//! let bound = verify_certificate(&instance, &cert).unwrap();
//! assert_eq!(bound.to_string(), "1/5");
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::{Arc, Mutex};

use itertools::Itertools;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{binomial, flag_basis, AlgebraError, DensityCache, Flag};
use crate::chirotope::{CanonicalCode, Chirotope};
use crate::geometry::{format_rational, parse_rational};
use crate::store::{OrderTypeStore, StoreError};

/// Errors produced while building instances, verifying certificates, or
/// exchanging solver files.
#[derive(Debug, Error)]
pub enum SdpError {
    /// An underlying store operation failed.
    #[error(transparent)]
    Store(#[from] StoreError),
    /// An underlying algebra operation failed.
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    /// A file could not be read or written.
    #[error(transparent)]
    Io(#[from] std::io::Error),
    /// A root size has the wrong parity for the instance level.
    #[error("root {root} has size {root_size}, which does not match level {level} mod 2")]
    Parity {
        /// Index of the offending root.
        root: usize,
        /// Size of the offending root.
        root_size: usize,
        /// Level of the instance.
        level: usize,
    },
    /// The objective vector does not match the number of order types.
    #[error("objective has {found} entries but level {level} has {expected} order types")]
    ObjectiveLength {
        /// Instance level.
        level: usize,
        /// Number of order types at that level.
        expected: usize,
        /// Number of entries supplied.
        found: usize,
    },
    /// A square refers to a root index outside the instance.
    #[error("square {square} refers to root {index}, but only {count} roots exist")]
    RootIndex {
        /// Index of the offending square.
        square: usize,
        /// Root index it refers to.
        index: usize,
        /// Number of roots in the instance.
        count: usize,
    },
    /// A square's vector has the wrong length for its root's flag basis.
    #[error("square {square} has a vector of length {found}, expected {expected}")]
    DimensionMismatch {
        /// Index of the offending square.
        square: usize,
        /// Basis size of the square's root.
        expected: usize,
        /// Length of the supplied vector.
        found: usize,
    },
    /// A square carries a negative multiplier.
    #[error("square {square} has negative multiplier {lambda}")]
    NegativeMultiplier {
        /// Index of the offending square.
        square: usize,
        /// The offending multiplier.
        lambda: String,
    },
    /// The certificate's roots differ from the instance's roots.
    #[error("certificate roots do not match instance roots")]
    RootsMismatch,
    /// The certified inequality fails at a concrete order type.
    #[error("bound violated at {code}: target {target} < certified {achieved}")]
    Violation {
        /// Canonical code of the violating order type.
        code: CanonicalCode,
        /// Target value at that order type.
        target: String,
        /// Value the certificate claims there.
        achieved: String,
    },
    /// A refutation certificate has a nonpositive margin.
    #[error("refutation margin {margin} is not positive")]
    NotRefuting {
        /// The margin `b` achieved by the certificate.
        margin: String,
    },
    /// A feasibility weight is negative.
    #[error("weight {index} is negative")]
    NegativeWeight {
        /// Index of the offending weight.
        index: usize,
    },
    /// A text file failed to parse.
    #[error("format error: {0}")]
    Format(String),
    /// JSON serialization or deserialization failed.
    #[error("serialization error: {0}")]
    Serde(String),
}

type Result<T> = std::result::Result<T, SdpError>;

/// The functional being bounded: one rational value per order type at a
/// fixed level, indexed in canonical-code order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetSpec {
    /// Size of the order types the objective ranges over.
    pub level: usize,
    /// `objective[i]` is the target value at the `i`-th canonical code of
    /// the level, in store order.
    pub objective: Vec<BigRational>,
}

impl TargetSpec {
    /// Builds the target `f(Ω) = p(small, Ω)` over all `Ω` of size `level`.
    pub fn density_of(
        cache: &DensityCache<'_>,
        small: &CanonicalCode,
        level: usize,
    ) -> Result<TargetSpec> {
        let k = small.size();
        let codes = cache.store().codes(k);
        let col = codes
            .iter()
            .position(|c| c == small)
            .ok_or_else(|| AlgebraError::UnknownCode(small.to_string()))?;
        let table = cache.density_table(k, level)?;
        let objective = table.iter().map(|row| row[col].clone()).collect();
        Ok(TargetSpec { level, objective })
    }
}

/// The split-probability matrices `Q_i(Ω)` for one root, over all order
/// types of the instance level.
///
/// `counts[w]` is a `dim × dim` row-major matrix of embedding counts for
/// the `w`-th order type; dividing by `denom` gives the probability.
#[derive(Debug, Clone)]
pub struct QTable {
    /// Flag-basis size for this root.
    pub dim: usize,
    /// Common denominator `(N)_k · C(N−k, m−k)`.
    pub denom: BigInt,
    /// Integer numerators, one flattened matrix per order type.
    pub counts: Vec<Vec<u64>>,
}

/// A bound-generation problem: a store, a target, and a list of rooted
/// flag bases.  `Q` matrices are computed lazily per root and cached.
pub struct SdpInstance<'a> {
    store: &'a OrderTypeStore,
    target: TargetSpec,
    roots: Vec<Chirotope>,
    bases: Vec<Vec<Flag>>,
    q_tables: Mutex<HashMap<usize, Arc<QTable>>>,
}

impl std::fmt::Debug for SdpInstance<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SdpInstance")
            .field("level", &self.target.level)
            .field("roots", &self.roots.len())
            .field("dims", &self.dims())
            .finish()
    }
}

/// One square `λ · ⟦(Σ_s u_s F_s)²⟧` in a certificate, referencing a root
/// of the enclosing instance by index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Square {
    /// Index into the certificate's root list.
    pub root: usize,
    /// Nonnegative multiplier.
    pub lambda: BigRational,
    /// Coefficients over the root's flag basis, in basis order.
    pub u: Vec<BigRational>,
}

/// An exactly verifiable lower-bound certificate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    /// The roots the squares refer to, in instance order.
    pub roots: Vec<Chirotope>,
    /// The sum-of-squares part.
    pub squares: Vec<Square>,
    /// The certified lower bound.
    pub b: BigRational,
}

#[derive(Serialize, Deserialize)]
struct RootRepr {
    size: usize,
    signs: Vec<i8>,
}

#[derive(Serialize, Deserialize)]
struct SquareRepr {
    root: usize,
    lambda: String,
    u: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct CertificateRepr {
    roots: Vec<RootRepr>,
    squares: Vec<SquareRepr>,
    b: String,
}

impl Certificate {
    /// The certificate with no squares and `b = min_Ω f(Ω)`.
    ///
    /// This is always valid: it asserts only that the target is at least
    /// its pointwise minimum at the instance level.
    pub fn zero(instance: &SdpInstance<'_>) -> Certificate {
        let b = instance
            .target
            .objective
            .iter()
            .min()
            .cloned()
            .unwrap_or_else(BigRational::zero);
        Certificate {
            roots: instance.roots.clone(),
            squares: Vec::new(),
            b,
        }
    }

    /// Serializes the certificate as JSON.
    pub fn to_json(&self) -> String {
        let repr = CertificateRepr {
            roots: self
                .roots
                .iter()
                .map(|r| RootRepr {
                    size: r.size(),
                    signs: r.signs().to_vec(),
                })
                .collect(),
            squares: self
                .squares
                .iter()
                .map(|s| SquareRepr {
                    root: s.root,
                    lambda: format_rational(&s.lambda),
                    u: s.u.iter().map(format_rational).collect(),
                })
                .collect(),
            b: format_rational(&self.b),
        };
        serde_json::to_string_pretty(&repr).expect("certificate serialization cannot fail")
    }

    /// Parses a certificate from JSON.
    pub fn from_json(text: &str) -> Result<Certificate> {
        let repr: CertificateRepr =
            serde_json::from_str(text).map_err(|e| SdpError::Serde(e.to_string()))?;
        let roots = repr
            .roots
            .into_iter()
            .map(|r| Chirotope::from_signs(r.size, r.signs))
            .collect();
        let mut squares = Vec::with_capacity(repr.squares.len());
        for s in repr.squares {
            let lambda = parse_rational(&s.lambda).map_err(|e| SdpError::Serde(e.to_string()))?;
            let u = s
                .u
                .iter()
                .map(|v| parse_rational(v).map_err(|e| SdpError::Serde(e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            squares.push(Square {
                root: s.root,
                lambda,
                u,
            });
        }
        let b = parse_rational(&repr.b).map_err(|e| SdpError::Serde(e.to_string()))?;
        Ok(Certificate { roots, squares, b })
    }

    /// Writes the certificate to a JSON file.
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    /// Reads a certificate from a JSON file.
    pub fn load(path: &Path) -> Result<Certificate> {
        let text = std::fs::read_to_string(path)?;
        Certificate::from_json(&text)
    }
}

/// The default root layout for a level: the empty root plus the two-point
/// root for even levels (with all size-4 and size-6 types added at level
/// 8, for 24 roots total), and the one-point root for odd levels.
pub fn default_roots(store: &OrderTypeStore, level: usize) -> Result<Vec<Chirotope>> {
    let mut roots = if level % 2 == 0 {
        vec![Chirotope::convex(0), Chirotope::convex(2)]
    } else {
        vec![Chirotope::convex(1)]
    };
    if level == 8 {
        for n in [4, 6] {
            for code in store.codes(n) {
                roots.push(code.decode());
            }
        }
    }
    Ok(roots)
}

/// Builds an instance, checking parity and objective length.
pub fn build_instance(
    store: &OrderTypeStore,
    target: TargetSpec,
    roots: Vec<Chirotope>,
) -> Result<SdpInstance<'_>> {
    let level = target.level;
    let expected = store.records(level)?.len();
    if target.objective.len() != expected {
        return Err(SdpError::ObjectiveLength {
            level,
            expected,
            found: target.objective.len(),
        });
    }
    let mut bases = Vec::with_capacity(roots.len());
    for (i, root) in roots.iter().enumerate() {
        let k = root.size();
        if (level + k) % 2 != 0 || k > level {
            return Err(SdpError::Parity {
                root: i,
                root_size: k,
                level,
            });
        }
        let m = (level + k) / 2;
        bases.push(flag_basis(store, root, m)?);
    }
    Ok(SdpInstance {
        store,
        target,
        roots,
        bases,
        q_tables: Mutex::new(HashMap::new()),
    })
}

impl<'a> SdpInstance<'a> {
    /// The instance level (size of the order types in the objective).
    pub fn level(&self) -> usize {
        self.target.level
    }

    /// The target functional.
    pub fn target(&self) -> &TargetSpec {
        &self.target
    }

    /// The store backing the instance.
    pub fn store(&self) -> &'a OrderTypeStore {
        self.store
    }

    /// The roots, in order.
    pub fn roots(&self) -> &[Chirotope] {
        &self.roots
    }

    /// The flag basis of root `i`.
    pub fn basis(&self, i: usize) -> &[Flag] {
        &self.bases[i]
    }

    /// Basis sizes per root, in root order.
    pub fn dims(&self) -> Vec<usize> {
        self.bases.iter().map(Vec::len).collect()
    }

    /// The `Q` table for root `i`, computing and caching it on first use.
    pub fn q_table(&self, i: usize) -> Result<Arc<QTable>> {
        let mut guard = self.q_tables.lock().expect("q-table lock poisoned");
        if let Some(t) = guard.get(&i) {
            return Ok(Arc::clone(t));
        }
        let table = Arc::new(self.compute_q_table(i)?);
        guard.insert(i, Arc::clone(&table));
        Ok(table)
    }

    fn compute_q_table(&self, i: usize) -> Result<QTable> {
        let root = &self.roots[i];
        let k = root.size();
        let n = self.target.level;
        let m = (n + k) / 2;
        let tail = m - k;
        let basis = &self.bases[i];
        let dim = basis.len();
        let code_index: HashMap<CanonicalCode, usize> = basis
            .iter()
            .enumerate()
            .map(|(j, f)| (f.code().clone(), j))
            .collect();
        let records = self.store.records(n)?;
        let counts: Vec<Vec<u64>> = records
            .par_iter()
            .map(|rec| {
                let chi = rec.code.decode();
                let mut local = vec![0u64; dim * dim];
                for theta in (0..n).permutations(k) {
                    if chi.sub_chirotope(&theta) != *root {
                        continue;
                    }
                    let rest: Vec<usize> = (0..n).filter(|x| !theta.contains(x)).collect();
                    let subs: Vec<Vec<usize>> =
                        rest.iter().copied().combinations(tail).collect();
                    let flag_of: Vec<usize> = subs
                        .iter()
                        .map(|s| {
                            let mut labels = theta.clone();
                            labels.extend_from_slice(s);
                            let code = chi.sub_chirotope(&labels).rooted_code(k);
                            *code_index
                                .get(&code)
                                .expect("every extension flag appears in the basis")
                        })
                        .collect();
                    for (a_idx, sub) in subs.iter().enumerate() {
                        let comp: Vec<usize> = rest
                            .iter()
                            .copied()
                            .filter(|x| !sub.contains(x))
                            .collect();
                        let b_idx = subs
                            .binary_search(&comp)
                            .expect("complement is one of the subsets");
                        local[flag_of[a_idx] * dim + flag_of[b_idx]] += 1;
                    }
                }
                local
            })
            .collect();
        let mut denom = BigInt::one();
        for v in (n - k + 1)..=n {
            denom *= BigInt::from(v);
        }
        denom *= BigInt::from(binomial(n - k, tail));
        Ok(QTable { dim, denom, counts })
    }
}

/// Clears denominators: returns integer numerators and the common scale.
fn scale_to_integers(u: &[BigRational]) -> (Vec<BigInt>, BigInt) {
    let mut scale = BigInt::one();
    for v in u {
        let d = v.denom();
        let g = num_integer::Integer::gcd(&scale, d);
        scale = &scale / g * d;
    }
    let ints = u
        .iter()
        .map(|v| v.numer() * (&scale / v.denom()))
        .collect();
    (ints, scale)
}

/// `uᵀ C u` for an integer vector over a flattened count matrix.
fn quad_form(counts: &[u64], dim: usize, u: &[BigInt]) -> BigInt {
    let mut total = BigInt::zero();
    for s in 0..dim {
        if u[s].is_zero() {
            continue;
        }
        let mut row = BigInt::zero();
        for t in 0..dim {
            let c = counts[s * dim + t];
            if c != 0 && !u[t].is_zero() {
                row += &u[t] * c;
            }
        }
        total += &u[s] * row;
    }
    total
}

/// Per-order-type values `λ · uᵀ Q(Ω) u` for one square.
fn square_values(instance: &SdpInstance<'_>, square: &Square) -> Result<Vec<BigRational>> {
    let table = instance.q_table(square.root)?;
    let (ints, scale) = scale_to_integers(&square.u);
    let denom = &table.denom * &scale * &scale;
    Ok(table
        .counts
        .par_iter()
        .map(|c| {
            let num = quad_form(c, table.dim, &ints);
            &square.lambda * BigRational::new(num, denom.clone())
        })
        .collect())
}

/// Checks square shapes against an instance.
fn validate_squares(instance: &SdpInstance<'_>, squares: &[Square]) -> Result<()> {
    for (j, sq) in squares.iter().enumerate() {
        if sq.root >= instance.roots.len() {
            return Err(SdpError::RootIndex {
                square: j,
                index: sq.root,
                count: instance.roots.len(),
            });
        }
        let expected = instance.bases[sq.root].len();
        if sq.u.len() != expected {
            return Err(SdpError::DimensionMismatch {
                square: j,
                expected,
                found: sq.u.len(),
            });
        }
        if sq.lambda.is_negative() {
            return Err(SdpError::NegativeMultiplier {
                square: j,
                lambda: format_rational(&sq.lambda),
            });
        }
    }
    Ok(())
}

/// Pointwise margins `f(Ω) − Σ_j λ_j u_jᵀ Q(Ω) u_j` over all order types.
fn margins(instance: &SdpInstance<'_>, squares: &[Square]) -> Result<Vec<BigRational>> {
    validate_squares(instance, squares)?;
    let mut out = instance.target.objective.clone();
    for sq in squares {
        let vals = square_values(instance, sq)?;
        for (m, v) in out.iter_mut().zip(vals) {
            *m -= v;
        }
    }
    Ok(out)
}

/// The largest `b` for which the given squares certify `f ≥ b + Σ squares`,
/// together with the canonical code where the minimum margin is attained.
pub fn max_feasible_b(
    instance: &SdpInstance<'_>,
    squares: &[Square],
) -> Result<(BigRational, CanonicalCode)> {
    let m = margins(instance, squares)?;
    let records = instance.store.records(instance.target.level)?;
    let (idx, best) = m
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.cmp(b.1))
        .expect("level has at least one order type");
    Ok((best.clone(), records[idx].code.clone()))
}

/// Wraps squares into a certificate with the best possible `b`.
pub fn certificate_with_max_b(
    instance: &SdpInstance<'_>,
    squares: Vec<Square>,
) -> Result<Certificate> {
    let (b, _) = max_feasible_b(instance, &squares)?;
    Ok(Certificate {
        roots: instance.roots.clone(),
        squares,
        b,
    })
}

/// Verifies a certificate against an instance in exact arithmetic.
///
/// On success returns the certified bound `b`.  On failure returns the
/// first violated order type in canonical order, with the target value
/// and the value the certificate claims there.
pub fn verify_certificate(
    instance: &SdpInstance<'_>,
    cert: &Certificate,
) -> Result<BigRational> {
    if cert.roots != instance.roots {
        return Err(SdpError::RootsMismatch);
    }
    let m = margins(instance, &cert.squares)?;
    let records = instance.store.records(instance.target.level)?;
    for (idx, margin) in m.iter().enumerate() {
        if *margin < cert.b {
            let f = &instance.target.objective[idx];
            let achieved = f - margin + &cert.b;
            return Err(SdpError::Violation {
                code: records[idx].code.clone(),
                target: format_rational(f),
                achieved: format_rational(&achieved),
            });
        }
    }
    Ok(cert.b.clone())
}

/// Which side of a density-combination claim a feasibility instance
/// refutes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Refute "`Σ_j d_j p(ω_j, ·) ≥ c` holds asymptotically".
    AtLeast,
    /// Refute "`Σ_j d_j p(ω_j, ·) ≤ c` holds asymptotically".
    AtMost,
}

/// Builds the feasibility-refutation instance for a nonnegative
/// combination of size-6 densities against a threshold.
///
/// The target is `f(Ω) = ∓ Σ_j d_j (p(ω_{6,j}, Ω) − c)` with the sign
/// chosen so that a verified certificate with `b > 0` shows the claimed
/// inequality fails at every order type of the chosen level, hence in
/// every limit.  Use [`verify_refutation`] to enforce `b > 0`.
pub fn feasibility_instance<'a>(
    cache: &DensityCache<'a>,
    weights: &[BigRational],
    threshold: &BigRational,
    direction: Direction,
    level: usize,
    roots: Vec<Chirotope>,
) -> Result<SdpInstance<'a>> {
    let store = cache.store();
    let codes6 = store.codes(6);
    if weights.len() != codes6.len() {
        return Err(SdpError::ObjectiveLength {
            level: 6,
            expected: codes6.len(),
            found: weights.len(),
        });
    }
    for (i, w) in weights.iter().enumerate() {
        if w.is_negative() {
            return Err(SdpError::NegativeWeight { index: i });
        }
    }
    let table = cache.density_table(6, level)?;
    let objective = table
        .iter()
        .map(|row| {
            let mut total = BigRational::zero();
            for (w, p) in weights.iter().zip(row.iter()) {
                total += w * &(p - threshold);
            }
            match direction {
                Direction::AtLeast => -total,
                Direction::AtMost => total,
            }
        })
        .collect();
    build_instance(store, TargetSpec { level, objective }, roots)
}

/// Verifies a refutation certificate: the bound must check out *and* be
/// strictly positive.
pub fn verify_refutation(
    instance: &SdpInstance<'_>,
    cert: &Certificate,
) -> Result<BigRational> {
    let b = verify_certificate(instance, cert)?;
    if b.is_positive() {
        Ok(b)
    } else {
        Err(SdpError::NotRefuting {
            margin: format_rational(&b),
        })
    }
}

// ---------------------------------------------------------------------------
// SDPA text interchange
// ---------------------------------------------------------------------------

/// One sparse entry `F_matrix[block][row][col] = value` (1-based indices,
/// matrix 0 is the objective).
#[derive(Debug, Clone, PartialEq)]
pub struct SdpaEntry {
    /// Constraint matrix index; 0 is the objective matrix.
    pub matrix: usize,
    /// Block index, 1-based.
    pub block: usize,
    /// Row within the block, 1-based.
    pub row: usize,
    /// Column within the block, 1-based.
    pub col: usize,
    /// Entry value.
    pub value: f64,
}

/// A parsed or generated sparse SDPA problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpaProblem {
    /// Number of constraints.
    pub constraints: usize,
    /// Block sizes; negative means a diagonal block.
    pub block_sizes: Vec<i64>,
    /// Right-hand-side vector, one value per constraint.
    pub rhs: Vec<f64>,
    /// Sparse entries, upper triangle only.
    pub entries: Vec<SdpaEntry>,
}

/// Encodes an instance in sparse SDPA form.
///
/// The dual variable is `Y = blkdiag(M_1, …, M_k, diag(s_1, …, s_m, b⁺, b⁻))`
/// with one positive-semidefinite block per root followed by a diagonal
/// block of constraint slacks and the split bound value.  Constraint `Ω`
/// reads `Σ_i ⟨Q_i(Ω), M_i⟩ + s_Ω + b⁺ − b⁻ = f(Ω)` and the objective
/// maximizes `b⁺ − b⁻`, so an optimal `Y` encodes the best sum-of-squares
/// bound expressible over these roots.
pub fn sdpa_problem(instance: &SdpInstance<'_>) -> Result<SdpaProblem> {
    let m = instance.target.objective.len();
    let nroots = instance.roots.len();
    let mut block_sizes: Vec<i64> = instance.dims().iter().map(|&d| d as i64).collect();
    block_sizes.push(-((m + 2) as i64));
    let rhs: Vec<f64> = instance
        .target
        .objective
        .iter()
        .map(|v| v.to_f64().expect("rational fits in f64"))
        .collect();
    let slack = nroots + 1;
    let mut entries = Vec::new();
    entries.push(SdpaEntry {
        matrix: 0,
        block: slack,
        row: m + 1,
        col: m + 1,
        value: 1.0,
    });
    entries.push(SdpaEntry {
        matrix: 0,
        block: slack,
        row: m + 2,
        col: m + 2,
        value: -1.0,
    });
    let tables: Vec<Arc<QTable>> = (0..nroots)
        .map(|i| instance.q_table(i))
        .collect::<Result<_>>()?;
    for w in 0..m {
        for (i, table) in tables.iter().enumerate() {
            let denom = table.denom.to_f64().expect("denominator fits in f64");
            let counts = &table.counts[w];
            for r in 0..table.dim {
                for c in r..table.dim {
                    let v = counts[r * table.dim + c];
                    if v != 0 {
                        entries.push(SdpaEntry {
                            matrix: w + 1,
                            block: i + 1,
                            row: r + 1,
                            col: c + 1,
                            value: v as f64 / denom,
                        });
                    }
                }
            }
        }
        entries.push(SdpaEntry {
            matrix: w + 1,
            block: slack,
            row: w + 1,
            col: w + 1,
            value: 1.0,
        });
        entries.push(SdpaEntry {
            matrix: w + 1,
            block: slack,
            row: m + 1,
            col: m + 1,
            value: 1.0,
        });
        entries.push(SdpaEntry {
            matrix: w + 1,
            block: slack,
            row: m + 2,
            col: m + 2,
            value: -1.0,
        });
    }
    Ok(SdpaProblem {
        constraints: m,
        block_sizes,
        rhs,
        entries,
    })
}

/// Renders a problem in the sparse SDPA text format.  Emission is
/// deterministic: re-emitting a parsed problem reproduces the bytes.
pub fn format_sdpa(p: &SdpaProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", p.constraints);
    let _ = writeln!(out, "{}", p.block_sizes.len());
    let sizes = p.block_sizes.iter().map(i64::to_string).join(" ");
    let _ = writeln!(out, "{sizes}");
    let rhs = p.rhs.iter().map(f64::to_string).join(" ");
    let _ = writeln!(out, "{rhs}");
    for e in &p.entries {
        let _ = writeln!(out, "{} {} {} {} {}", e.matrix, e.block, e.row, e.col, e.value);
    }
    out
}

/// Parses the sparse SDPA text format (comments starting with `*` or `"`
/// are skipped).
pub fn parse_sdpa(text: &str) -> Result<SdpaProblem> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('*') && !l.starts_with('"'));
    let mut next = |what: &str| -> Result<&str> {
        lines
            .next()
            .ok_or_else(|| SdpError::Format(format!("missing {what} line")))
    };
    let constraints: usize = next("constraint count")?
        .split_whitespace()
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| SdpError::Format("bad constraint count".into()))?;
    let nblocks: usize = next("block count")?
        .split_whitespace()
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| SdpError::Format("bad block count".into()))?;
    let block_sizes: Vec<i64> = next("block sizes")?
        .split(|c: char| c.is_whitespace() || c == ',' || c == '(' || c == ')' || c == '{' || c == '}')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<i64>()
                .map_err(|_| SdpError::Format(format!("bad block size {t:?}")))
        })
        .collect::<Result<_>>()?;
    if block_sizes.len() != nblocks {
        return Err(SdpError::Format(format!(
            "expected {nblocks} block sizes, found {}",
            block_sizes.len()
        )));
    }
    let rhs: Vec<f64> = next("right-hand side")?
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| SdpError::Format(format!("bad rhs value {t:?}")))
        })
        .collect::<Result<_>>()?;
    if rhs.len() != constraints {
        return Err(SdpError::Format(format!(
            "expected {constraints} rhs values, found {}",
            rhs.len()
        )));
    }
    let mut entries = Vec::new();
    for line in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 5 {
            return Err(SdpError::Format(format!("bad entry line {line:?}")));
        }
        let parse_idx = |t: &str| -> Result<usize> {
            t.parse()
                .map_err(|_| SdpError::Format(format!("bad index {t:?}")))
        };
        entries.push(SdpaEntry {
            matrix: parse_idx(toks[0])?,
            block: parse_idx(toks[1])?,
            row: parse_idx(toks[2])?,
            col: parse_idx(toks[3])?,
            value: toks[4]
                .parse()
                .map_err(|_| SdpError::Format(format!("bad value {:?}", toks[4])))?,
        });
    }
    Ok(SdpaProblem {
        constraints,
        block_sizes,
        rhs,
        entries,
    })
}

/// Writes the instance's SDPA problem to a file.
pub fn emit_sdpa(instance: &SdpInstance<'_>, path: &Path) -> Result<()> {
    let p = sdpa_problem(instance)?;
    std::fs::write(path, format_sdpa(&p))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Solution ingestion
// ---------------------------------------------------------------------------

/// What [`ingest_solution`] did to make the solver's blocks exactly
/// positive semidefinite.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestReport {
    /// Diagonal shift applied per root block (zero if none was needed).
    pub shifts: Vec<f64>,
    /// `(root, pivot)` pairs whose factorization pivot came out negative
    /// after rounding and was dropped.  Dropping pivots only weakens the
    /// certificate, never unsoundly strengthens it.
    pub dropped_pivots: Vec<(usize, usize)>,
}

/// Reads the root blocks of a CSDP-style solution file: the first line is
/// the dual vector (ignored), every following line is
/// `matno block row col value`, and the blocks of matrix 2 carry the
/// positive-semidefinite variable.
fn parse_solution_blocks(text: &str, dims: &[usize]) -> Result<Vec<Vec<Vec<f64>>>> {
    let mut blocks: Vec<Vec<Vec<f64>>> =
        dims.iter().map(|&d| vec![vec![0.0; d]; d]).collect();
    for (lineno, line) in text.lines().skip(1).enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 5 {
            return Err(SdpError::Format(format!(
                "bad solution line {}: {line:?}",
                lineno + 2
            )));
        }
        let matno: usize = toks[0]
            .parse()
            .map_err(|_| SdpError::Format(format!("bad matrix number {:?}", toks[0])))?;
        if matno != 2 {
            continue;
        }
        let blk: usize = toks[1]
            .parse()
            .map_err(|_| SdpError::Format(format!("bad block number {:?}", toks[1])))?;
        if blk == 0 || blk > dims.len() {
            continue;
        }
        let r: usize = toks[2]
            .parse()
            .map_err(|_| SdpError::Format(format!("bad row {:?}", toks[2])))?;
        let c: usize = toks[3]
            .parse()
            .map_err(|_| SdpError::Format(format!("bad column {:?}", toks[3])))?;
        let v: f64 = toks[4]
            .parse()
            .map_err(|_| SdpError::Format(format!("bad value {:?}", toks[4])))?;
        let d = dims[blk - 1];
        if r == 0 || c == 0 || r > d || c > d {
            return Err(SdpError::Format(format!(
                "entry ({r}, {c}) outside block {blk} of size {d}"
            )));
        }
        blocks[blk - 1][r - 1][c - 1] = v;
        blocks[blk - 1][c - 1][r - 1] = v;
    }
    Ok(blocks)
}

/// Eigenvalues (and optionally eigenvectors, as columns) of a symmetric
/// matrix by cyclic Jacobi rotations.
fn jacobi_eigen(a: &mut [Vec<f64>], want_vectors: bool) -> (Vec<f64>, Option<Vec<Vec<f64>>>) {
    let n = a.len();
    let mut v = if want_vectors {
        let mut id = vec![vec![0.0; n]; n];
        for (i, row) in id.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Some(id)
    } else {
        None
    };
    for _sweep in 0..80 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p][q] * a[p][q];
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let tau = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..n {
                    let aip = a[i][p];
                    let aiq = a[i][q];
                    a[i][p] = c * aip - s * aiq;
                    a[i][q] = s * aip + c * aiq;
                }
                for i in 0..n {
                    let api = a[p][i];
                    let aqi = a[q][i];
                    a[p][i] = c * api - s * aqi;
                    a[q][i] = s * api + c * aqi;
                }
                if let Some(vm) = v.as_mut() {
                    for row in vm.iter_mut() {
                        let vip = row[p];
                        let viq = row[q];
                        row[p] = c * vip - s * viq;
                        row[q] = s * vip + c * viq;
                    }
                }
            }
        }
    }
    let eig = (0..n).map(|i| a[i][i]).collect();
    (eig, v)
}

/// Projects a symmetric matrix onto the positive semidefinite cone by
/// clipping negative eigenvalues to zero.
fn project_psd(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut work: Vec<Vec<f64>> = m.to_vec();
    let (eig, vecs) = jacobi_eigen(&mut work, true);
    let v = vecs.expect("eigenvectors requested");
    let mut out = vec![vec![0.0; n]; n];
    for (k, lambda) in eig.iter().enumerate() {
        if *lambda <= 0.0 {
            continue;
        }
        for i in 0..n {
            if v[i][k] == 0.0 {
                continue;
            }
            let vik = lambda * v[i][k];
            for j in 0..n {
                out[i][j] += vik * v[j][k];
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (out[i][j] + out[j][i]);
            out[i][j] = avg;
            out[j][i] = avg;
        }
    }
    out
}

/// Exact `L D Lᵀ` factorization of a symmetric rational matrix.
/// Returns unit-lower-triangular columns and pivots; zero pivots get a
/// zero column.
fn ldl(a: &[Vec<BigRational>]) -> (Vec<Vec<BigRational>>, Vec<BigRational>) {
    let n = a.len();
    let zero = BigRational::zero();
    let mut l = vec![vec![zero.clone(); n]; n];
    let mut piv = vec![zero.clone(); n];
    for j in 0..n {
        let mut dj = a[j][j].clone();
        for k in 0..j {
            if !piv[k].is_zero() {
                dj -= &l[j][k] * &l[j][k] * &piv[k];
            }
        }
        piv[j] = dj.clone();
        l[j][j] = BigRational::one();
        if dj.is_zero() {
            continue;
        }
        for r in (j + 1)..n {
            let mut v = a[r][j].clone();
            for k in 0..j {
                if !piv[k].is_zero() {
                    v -= &l[r][k] * &l[j][k] * &piv[k];
                }
            }
            l[r][j] = v / &dj;
        }
    }
    (l, piv)
}

/// Turns a solver's floating-point blocks into an exact certificate.
///
/// Each root block is symmetrized, shifted by `1.01 · |λ_min|` on the
/// diagonal if its smallest eigenvalue is negative, rounded entrywise to
/// rationals with the given denominator, and factored exactly as
/// `L D Lᵀ`.  Positive pivots become squares; negative pivots (possible
/// after rounding) are dropped and reported.  The bound `b` is then
/// recomputed exactly as the smallest margin, so the result is always a
/// valid certificate — float noise can only make it weaker, never wrong.
pub fn ingest_solution(
    instance: &SdpInstance<'_>,
    solution_text: &str,
    denominator: &BigInt,
) -> Result<(Certificate, IngestReport)> {
    let dims = instance.dims();
    let blocks = parse_solution_blocks(solution_text, &dims)?;
    let mut squares = Vec::new();
    let mut report = IngestReport::default();
    for (root, block) in blocks.iter().enumerate() {
        let d = block.len();
        let zero_block = block
            .iter()
            .all(|row| row.iter().all(|v| *v == 0.0));
        if d == 0 || zero_block {
            report.shifts.push(0.0);
            continue;
        }
        let mut work = block.clone();
        let (eig, _) = jacobi_eigen(&mut work, false);
        let min_eig = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        let shift = if min_eig < 0.0 { -min_eig * 1.01 } else { 0.0 };
        report.shifts.push(shift);
        let denom_f = denominator
            .to_f64()
            .ok_or_else(|| SdpError::Format("denominator too large for rounding".into()))?;
        let mut exact = vec![vec![BigRational::zero(); d]; d];
        for i in 0..d {
            for j in 0..d {
                let v = block[i][j] + if i == j { shift } else { 0.0 };
                let scaled = (v * denom_f).round();
                let num = BigInt::from_f64_checked(scaled)
                    .ok_or_else(|| SdpError::Format(format!("entry {v} did not round")))?;
                exact[i][j] = BigRational::new(num, denominator.clone());
            }
        }
        for i in 0..d {
            for j in (i + 1)..d {
                let avg = (&exact[i][j] + &exact[j][i]) / BigRational::from_integer(2.into());
                exact[i][j] = avg.clone();
                exact[j][i] = avg;
            }
        }
        let (l, piv) = ldl(&exact);
        for (j, p) in piv.iter().enumerate() {
            if p.is_positive() {
                let u: Vec<BigRational> = (0..d).map(|r| l[r][j].clone()).collect();
                squares.push(Square {
                    root,
                    lambda: p.clone(),
                    u,
                });
            } else if p.is_negative() {
                report.dropped_pivots.push((root, j));
            }
        }
    }
    let cert = certificate_with_max_b(instance, squares)?;
    Ok((cert, report))
}

/// Helper: checked `f64 → BigInt` conversion.
trait FromF64Checked: Sized {
    fn from_f64_checked(v: f64) -> Option<Self>;
}

impl FromF64Checked for BigInt {
    fn from_f64_checked(v: f64) -> Option<BigInt> {
        num_traits::FromPrimitive::from_f64(v)
    }
}

// ---------------------------------------------------------------------------
// Deterministic desk-scale solver
// ---------------------------------------------------------------------------

/// A small deterministic solver: projected supergradient ascent on
/// `min_Ω (f(Ω) − Σ_i ⟨Q_i(Ω), M_i⟩)` over positive semidefinite blocks.
///
/// Runs a fixed number of iterations with step `1/(4√t)`, breaking ties
/// toward the lowest order-type index, and keeps the best iterate.  If no
/// iterate beats the zero matrices, it returns the zero solution, so the
/// ingested bound is never worse than `min_Ω f(Ω)`.  The output is a
/// CSDP-style solution text accepted by [`ingest_solution`].  No
/// randomness is involved: the output depends only on the instance and
/// the iteration count.
pub fn toy_solve(instance: &SdpInstance<'_>, iterations: usize) -> Result<String> {
    let m = instance.target.objective.len();
    let nroots = instance.roots.len();
    let f: Vec<f64> = instance
        .target
        .objective
        .iter()
        .map(|v| v.to_f64().expect("rational fits in f64"))
        .collect();
    let mut qf: Vec<Vec<Vec<f64>>> = Vec::with_capacity(nroots);
    let mut dims = Vec::with_capacity(nroots);
    for i in 0..nroots {
        let table = instance.q_table(i)?;
        let denom = table.denom.to_f64().expect("denominator fits in f64");
        dims.push(table.dim);
        qf.push(
            table
                .counts
                .iter()
                .map(|c| c.iter().map(|&v| v as f64 / denom).collect())
                .collect(),
        );
    }
    let mut mats: Vec<Vec<Vec<f64>>> = dims.iter().map(|&d| vec![vec![0.0; d]; d]).collect();
    let objective = |mats: &[Vec<Vec<f64>>]| -> (f64, usize) {
        let mut best = f64::INFINITY;
        let mut arg = 0;
        for w in 0..m {
            let mut g = f[w];
            for (i, mat) in mats.iter().enumerate() {
                let d = dims[i];
                let q = &qf[i][w];
                for r in 0..d {
                    for c in 0..d {
                        g -= q[r * d + c] * mat[r][c];
                    }
                }
            }
            if g < best {
                best = g;
                arg = w;
            }
        }
        (best, arg)
    };
    let (mut best_val, _) = objective(&mats);
    let mut best_mats = mats.clone();
    for t in 1..=iterations {
        let (_, arg) = objective(&mats);
        let eta = 0.25 / (t as f64).sqrt();
        for (i, mat) in mats.iter_mut().enumerate() {
            let d = dims[i];
            let q = &qf[i][arg];
            for r in 0..d {
                for c in 0..d {
                    mat[r][c] -= eta * q[r * d + c];
                }
            }
            *mat = project_psd(mat);
        }
        let (val, _) = objective(&mats);
        if val > best_val {
            best_val = val;
            best_mats = mats.clone();
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "{}", vec!["0"; m].join(" "));
    for (i, mat) in best_mats.iter().enumerate() {
        let d = dims[i];
        for r in 0..d {
            for c in r..d {
                if mat[r][c] != 0.0 {
                    let _ = writeln!(out, "2 {} {} {} {}", i + 1, r + 1, c + 1, mat[r][c]);
                }
            }
        }
    }
    Ok(out)
}

//! Measure models for order-type limits: seedable Monte Carlo density
//! estimation, exact closed forms where they exist, and the supporting
//! experiments.
//!
//! A probability measure `μ` on the plane that charges no line induces a
//! limit functional `ℓ_μ(ω) = p(ω, μ)`, the probability that `|ω|`
//! independent `μ`-points realize the order type `ω`.  This module
//! implements a small family of such models:
//!
//! * [`MeasureModel::two_circles`] — uniform on two concentric circles
//!   (outer radius 1, inner radius `t`), each chosen with probability
//!   one half;
//! * [`MeasureModel::two_circles_limit`] — the `t → 0` degenerate limit,
//!   evaluated symbolically by a first-order expansion in the inner
//!   radius rather than by simulating a tiny `t`;
//! * [`MeasureModel::cantor_rect`] — the self-affine Cantor-style measure
//!   on `[0,1]²` generated by two contractions of ratios `(a, b)`; when
//!   the flatness condition `b ≤ (1 − 2a)(1 − 2b)a` holds, its order
//!   types are computed by word combinatorics alone;
//! * [`MeasureModel::uniform_convex_polygon`] — uniform on a convex
//!   polygon;
//! * [`MeasureModel::binary_words`] — the coin-tossing measure on
//!   `{0,1}^ℕ` with the purely combinatorial orientation [`chi_e`].
//!
//! All geometric samples have exact rational coordinates (circle points
//! via the rational half-angle parametrization, Cantor points as fixed
//! points of finite contraction words), so every orientation decision is
//! exact; Monte Carlo error lives only in which random points were drawn.
//! Estimates are reproducible: trials run in fixed-size batches seeded by
//! `(seed, batch index)`, so a result depends only on the seed and trial
//! count, never on scheduling.
//!
//! ```
//! use order_flags::limits::{estimate_density, MeasureModel};
//! use order_flags::OrderTypeStore;
//!
//! let mut store = OrderTypeStore::new();
//! store.enumerate_up_to(4).unwrap();
//! let convex4 = store.convex_code(4).unwrap();
//! // Four points on one circle are always in convex position.
//! let model = MeasureModel::two_circles("9/10".parse().unwrap()).unwrap();
//! let est = estimate_density(&model, &convex4, 200, 7).unwrap();
//! assert!(est.mean > 0.0);
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chirotope::{CanonicalCode, Chirotope};
use crate::geometry::{format_rational, orient, rational_sign, GeometryError, Point, PointSet};

/// Errors from sampling, estimation, and the geometric transforms.
#[derive(Debug, Error)]
pub enum LimitsError {
    /// An underlying geometric operation failed.
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    /// A model parameter is outside its legal range.
    #[error("bad parameter: {0}")]
    BadParameter(String),
    /// The requested operation does not apply to this model variant.
    #[error("unsupported for this model: {0}")]
    Model(String),
    /// Two binary words collide (equal, or one a prefix of the other).
    #[error("binary words collide; resample")]
    WordCollision,
    /// Rejection sampling exceeded its retry budget.
    #[error("rejection sampling gave up after {attempts} attempts")]
    RetryCap {
        /// Number of attempts made.
        attempts: usize,
    },
    /// A spherical transform sent a lifted point out of the upper
    /// hemisphere.
    #[error("point {index} left the upper hemisphere (z = {z})")]
    HemisphereViolation {
        /// Index of the offending point.
        index: usize,
        /// The fatal z-coordinate.
        z: String,
    },
    /// The Cantor flatness condition fails, so word combinatorics do not
    /// describe the geometry.
    #[error("flatness condition fails for a = {a}, b = {b}")]
    FlatnessViolated {
        /// Horizontal contraction ratio.
        a: String,
        /// Vertical contraction ratio.
        b: String,
    },
}

type Result<T> = std::result::Result<T, LimitsError>;

const RETRY_CAP: usize = 10_000;
const BATCH_SIZE: u64 = 4096;
/// Word length used when realizing Cantor points geometrically.
const CANTOR_DEPTH: usize = 48;

// ---------------------------------------------------------------------------
// Counter-based random number generator
// ---------------------------------------------------------------------------

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A counter-based pseudorandom generator with a 64-bit seed.
///
/// Output `i` is a bijective mix of `key + i·φ`, so independent streams
/// are cheap ([`CounterRng::stream`]) and a generator's output sequence
/// is a pure function of `(seed, stream, counter)` — the property the
/// batched estimators rely on for scheduling-independent reproducibility.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    /// Generator for stream 0 of a seed.
    pub fn new(seed: u64) -> CounterRng {
        CounterRng::stream(seed, 0)
    }

    /// Generator for an independent stream of the same seed.
    pub fn stream(seed: u64, stream: u64) -> CounterRng {
        CounterRng {
            key: mix64(mix64(seed ^ GOLDEN) ^ stream.wrapping_mul(GOLDEN)),
            counter: 0,
        }
    }

    /// Next 64 uniform bits.
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// A uniform draw from `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// A fair coin.
    pub fn next_bit(&mut self) -> bool {
        self.next_u64() & 1 == 1
    }

    /// A uniform draw from `{0, …, n−1}` by rejection.
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "next_below needs a positive bound");
        let limit = u64::MAX - u64::MAX % n;
        loop {
            let v = self.next_u64();
            if v < limit {
                return v % n;
            }
        }
    }

    /// A uniform dyadic rational from `[0, 1)` with the given number of
    /// bits (at most 63).
    pub fn next_dyadic(&mut self, bits: u32) -> BigRational {
        assert!(bits >= 1 && bits <= 63, "dyadic precision out of range");
        BigRational::new(
            BigInt::from(self.next_u64() >> (64 - bits)),
            BigInt::from(1u64 << bits),
        )
    }
}

// ---------------------------------------------------------------------------
// Binary words and the combinatorial orientation
// ---------------------------------------------------------------------------

/// A finite 0/1 word standing for a point of the coin-tossing measure.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BinaryWord {
    bits: Vec<u8>,
}

impl BinaryWord {
    /// Builds a word from explicit bits (each 0 or 1).
    pub fn new(bits: Vec<u8>) -> Result<BinaryWord> {
        if bits.iter().any(|&b| b > 1) {
            return Err(LimitsError::BadParameter(
                "binary words contain only bits 0 and 1".into(),
            ));
        }
        Ok(BinaryWord { bits })
    }

    /// The bits of the word.
    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// Word length.
    pub fn depth(&self) -> usize {
        self.bits.len()
    }

    /// Length of the longest common prefix with another word.
    pub fn lcp(&self, other: &BinaryWord) -> usize {
        self.bits
            .iter()
            .zip(other.bits.iter())
            .take_while(|(a, b)| a == b)
            .count()
    }

    fn random(depth: usize, rng: &mut CounterRng) -> BinaryWord {
        BinaryWord {
            bits: (0..depth).map(|_| rng.next_u64() as u8 & 1).collect(),
        }
    }
}

impl fmt::Display for BinaryWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl FromStr for BinaryWord {
    type Err = LimitsError;

    fn from_str(s: &str) -> Result<BinaryWord> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0u8),
                '1' => Ok(1u8),
                other => Err(LimitsError::BadParameter(format!(
                    "unexpected character {other:?} in binary word"
                ))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok(BinaryWord { bits })
    }
}

/// The orientation of a labeled triple of binary words.
///
/// After sorting the three words lexicographically to `x ≺ y ≺ z`, the
/// sign is `+1` when `|x∧y| < |y∧z|` (the left pair splits first) and
/// `−1` otherwise, multiplied by the parity of the sorting permutation so
/// that the result is antisymmetric.  Sorted splits can never tie: if
/// both pairs split at depth `d` the middle word would need opposite bits
/// at `d` simultaneously.
pub fn chi_e(u: &BinaryWord, v: &BinaryWord, w: &BinaryWord) -> Result<i8> {
    let mut order = [(u, 0usize), (v, 1), (w, 2)];
    order.sort_by(|a, b| a.0.bits.cmp(&b.0.bits));
    let (x, y, z) = (order[0].0, order[1].0, order[2].0);
    let d_xy = x.lcp(y);
    let d_yz = y.lcp(z);
    if d_xy == x.depth().min(y.depth()) || d_yz == y.depth().min(z.depth()) {
        return Err(LimitsError::WordCollision);
    }
    let base: i8 = if d_xy < d_yz { 1 } else { -1 };
    let perm = [order[0].1, order[1].1, order[2].1];
    let mut inversions = 0;
    for i in 0..3 {
        for j in (i + 1)..3 {
            if perm[i] > perm[j] {
                inversions += 1;
            }
        }
    }
    Ok(if inversions % 2 == 0 { base } else { -base })
}

/// Exact probability that `s` independent coin-tossing words form a cup
/// (every lexicographically sorted triple positively oriented).
///
/// Satisfies `f(3) = 1/2` and `f(s) = f(s−1) · s / (2^s − 2)`.
pub fn exact_cup_probability(s: usize) -> Result<BigRational> {
    if s < 3 {
        return Err(LimitsError::BadParameter(
            "cup probabilities start at triples".into(),
        ));
    }
    let mut f = BigRational::new(BigInt::one(), BigInt::from(2));
    for i in 4..=s {
        let denom = (BigInt::one() << i) - BigInt::from(2);
        f *= BigRational::new(BigInt::from(i), denom);
    }
    Ok(f)
}

/// Tests whether a set of words forms a cup: sorted by lex order, every
/// triple is positively oriented.  Equivalently the adjacent split
/// depths are strictly increasing.
pub fn is_cup(words: &[BinaryWord]) -> Result<bool> {
    let mut sorted: Vec<&BinaryWord> = words.iter().collect();
    sorted.sort();
    for i in 0..sorted.len() {
        for j in (i + 1)..sorted.len() {
            for k in (j + 1)..sorted.len() {
                if chi_e(sorted[i], sorted[j], sorted[k])? != 1 {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Measure models
// ---------------------------------------------------------------------------

/// A probability measure on the plane (or on binary words) that charges
/// no line, usable for Monte Carlo estimation of limit densities.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureModel {
    /// Uniform on two concentric circles of radii `1` and `t`, each
    /// circle chosen with probability one half.
    TwoCircles {
        /// Inner radius, strictly between 0 and 1.
        t: BigRational,
    },
    /// The `t → 0` limit of [`MeasureModel::TwoCircles`], evaluated by a
    /// first-order expansion in the inner radius.
    TwoCirclesLimit,
    /// The self-affine measure on `[0,1]²` generated by the contractions
    /// onto `[0,a]×[1−b,1]` (bit 0) and `[1−a,1]×[0,b]` (bit 1) with the
    /// coin-tossing measure on digit words.
    CantorRect {
        /// Horizontal contraction ratio, `0 < b < a < 1/2`.
        a: BigRational,
        /// Vertical contraction ratio.
        b: BigRational,
    },
    /// Uniform on the interior of a convex polygon.
    UniformConvexPolygon {
        /// Hull vertices in counterclockwise order.
        vertices: PointSet,
    },
    /// The coin-tossing measure on binary words of a fixed depth with
    /// orientation [`chi_e`]; has no planar point representation.
    BinaryWords {
        /// Word length; large enough that sampled triples almost surely
        /// split within the depth.
        depth: usize,
    },
}

impl MeasureModel {
    /// Two concentric circles with inner radius `t ∈ (0, 1)`.
    pub fn two_circles(t: BigRational) -> Result<MeasureModel> {
        if !t.is_positive() || t >= BigRational::one() {
            return Err(LimitsError::BadParameter(format!(
                "inner radius must lie strictly between 0 and 1, got {}",
                format_rational(&t)
            )));
        }
        Ok(MeasureModel::TwoCircles { t })
    }

    /// The degenerate two-circle limit.
    pub fn two_circles_limit() -> MeasureModel {
        MeasureModel::TwoCirclesLimit
    }

    /// The Cantor rectangle measure with ratios `0 < b < a < 1/2`.
    pub fn cantor_rect(a: BigRational, b: BigRational) -> Result<MeasureModel> {
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        if !b.is_positive() || b >= a || a >= half {
            return Err(LimitsError::BadParameter(format!(
                "need 0 < b < a < 1/2, got a = {}, b = {}",
                format_rational(&a),
                format_rational(&b)
            )));
        }
        Ok(MeasureModel::CantorRect { a, b })
    }

    /// Uniform measure on the interior of the convex hull of the given
    /// points, which must be in convex position.
    pub fn uniform_convex_polygon(vertices: PointSet) -> Result<MeasureModel> {
        if vertices.len() < 3 {
            return Err(LimitsError::BadParameter(
                "a polygon needs at least three vertices".into(),
            ));
        }
        if !vertices.convex_position()? {
            return Err(LimitsError::BadParameter(
                "polygon vertices must be in convex position".into(),
            ));
        }
        Ok(MeasureModel::UniformConvexPolygon {
            vertices: vertices.convex_hull()?,
        })
    }

    /// Uniform measure on the unit square.
    pub fn unit_square() -> MeasureModel {
        let square = PointSet::from_integer_coords(&[(0, 0), (1, 0), (1, 1), (0, 1)]);
        MeasureModel::uniform_convex_polygon(square).expect("the unit square is convex")
    }

    /// The coin-tossing word measure at a fixed depth.
    pub fn binary_words(depth: usize) -> Result<MeasureModel> {
        if depth < 3 {
            return Err(LimitsError::BadParameter(
                "word depth below 3 collides almost surely".into(),
            ));
        }
        Ok(MeasureModel::BinaryWords { depth })
    }

    /// Whether the Cantor flatness condition `b ≤ (1−2a)(1−2b)a` holds;
    /// `None` for other variants.
    pub fn is_flat(&self) -> Option<bool> {
        match self {
            MeasureModel::CantorRect { a, b } => {
                let one = BigRational::one();
                let two = BigRational::from_integer(2.into());
                let rhs = (&one - &two * a) * (&one - &two * b) * a;
                Some(*b <= rhs)
            }
            _ => None,
        }
    }

    /// Whether the model has exact planar sample points.
    pub fn supports_points(&self) -> bool {
        matches!(
            self,
            MeasureModel::TwoCircles { .. }
                | MeasureModel::CantorRect { .. }
                | MeasureModel::UniformConvexPolygon { .. }
        )
    }

    /// Draws `n` independent points in general position, with exact
    /// rational coordinates.
    ///
    /// Degenerate draws (duplicates or collinear triples) are rejected
    /// and resampled; a retry cap turns pathological parameters into a
    /// diagnostic error instead of a hang.
    pub fn sample_points(&self, n: usize, seed: u64) -> Result<PointSet> {
        self.sample_points_rng(n, &mut CounterRng::new(seed))
    }

    fn sample_points_rng(&self, n: usize, rng: &mut CounterRng) -> Result<PointSet> {
        if !self.supports_points() {
            return Err(LimitsError::Model(
                "this variant has no planar point representation".into(),
            ));
        }
        for _ in 0..RETRY_CAP {
            let points = match self {
                MeasureModel::CantorRect { a, b } => {
                    let words = sample_distinct_words(n, CANTOR_DEPTH, rng)?;
                    words.iter().map(|w| cantor_point(a, b, w)).collect()
                }
                _ => (0..n).map(|_| self.sample_one(rng)).collect::<Vec<_>>(),
            };
            let distinct: BTreeSet<&Point> = points.iter().collect();
            if distinct.len() != n {
                continue;
            }
            let ps = PointSet::new(points);
            if ps.general_position() {
                return Ok(ps);
            }
        }
        Err(LimitsError::RetryCap {
            attempts: RETRY_CAP,
        })
    }

    /// Draws `n` distinct random words (word-model only).
    pub fn sample_words(&self, n: usize, seed: u64) -> Result<Vec<BinaryWord>> {
        match self {
            MeasureModel::BinaryWords { depth } => {
                sample_distinct_words(n, *depth, &mut CounterRng::new(seed))
            }
            _ => Err(LimitsError::Model(
                "only the word model samples binary words".into(),
            )),
        }
    }

    /// One point from a geometric variant (no distinctness guarantee).
    fn sample_one(&self, rng: &mut CounterRng) -> Point {
        match self {
            MeasureModel::TwoCircles { t } => {
                let (x, y) = circle_point(rng);
                if rng.next_bit() {
                    Point::new(x, y)
                } else {
                    Point::new(t * x, t * y)
                }
            }
            MeasureModel::CantorRect { a, b } => {
                let word = BinaryWord::random(CANTOR_DEPTH, rng);
                cantor_point(a, b, &word)
            }
            MeasureModel::UniformConvexPolygon { vertices } => loop {
                let (lo_x, hi_x, lo_y, hi_y) = bounding_box(vertices);
                let x = &lo_x + (&hi_x - &lo_x) * rng.next_dyadic(53);
                let y = &lo_y + (&hi_y - &lo_y) * rng.next_dyadic(53);
                let p = Point::new(x, y);
                if strictly_inside(vertices, &p) {
                    return p;
                }
            },
            _ => unreachable!("sample_one is only called for geometric variants"),
        }
    }

    /// Draws the order type of `n` independent model points.
    pub fn sample_chirotope(&self, n: usize, rng: &mut CounterRng) -> Result<Chirotope> {
        match self {
            MeasureModel::BinaryWords { depth } => {
                for _ in 0..RETRY_CAP {
                    let words = sample_distinct_words(n, *depth, rng)?;
                    if let Some(chi) = words_chirotope(&words)? {
                        return Ok(chi);
                    }
                }
                Err(LimitsError::RetryCap {
                    attempts: RETRY_CAP,
                })
            }
            MeasureModel::TwoCirclesLimit => {
                for _ in 0..RETRY_CAP {
                    let pts: Vec<LimitPoint> =
                        (0..n).map(|_| LimitPoint::random(rng)).collect();
                    if let Some(chi) = limit_chirotope(&pts) {
                        return Ok(chi);
                    }
                }
                Err(LimitsError::RetryCap {
                    attempts: RETRY_CAP,
                })
            }
            _ => {
                let ps = self.sample_points_rng(n, rng)?;
                Ok(Chirotope::of(&ps)?)
            }
        }
    }
}

impl fmt::Display for MeasureModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureModel::TwoCircles { t } => {
                write!(f, "two-circles(t={})", format_rational(t))
            }
            MeasureModel::TwoCirclesLimit => write!(f, "two-circles-limit"),
            MeasureModel::CantorRect { a, b } => write!(
                f,
                "cantor-rect(a={},b={})",
                format_rational(a),
                format_rational(b)
            ),
            MeasureModel::UniformConvexPolygon { vertices } => {
                write!(f, "uniform-convex-polygon(k={})", vertices.len())
            }
            MeasureModel::BinaryWords { depth } => write!(f, "binary-words(depth={depth})"),
        }
    }
}

/// Resolution of the half-angle grid used by [`circle_point`].
const CIRCLE_BITS: u32 = 21;

/// Resolution for the integer limit-point sampler, kept low enough that
/// every ε-expansion coefficient in [`limit_orient`] fits in an `i128`.
const LIMIT_BITS: u32 = 19;

/// An exact integer projective point `(x/d, y/d)` on the unit circle,
/// `d > 0`: the angle is folded into a quadrant, its half-angle tangent
/// (then at most `tan π/4`) is rounded to `bits` fractional bits, and
/// the half-angle substitution lands exactly on the circle.  The angular
/// rounding bias is far below Monte Carlo noise at desk trial counts,
/// and coincident draws only cost a resample.
fn circle_point_integer(rng: &mut CounterRng, bits: u32) -> (i128, i128, i128) {
    let u = rng.next_f64();
    let quadrant = (4.0 * u) as u32 % 4;
    let frac = 4.0 * u - f64::from(quadrant);
    let s = (std::f64::consts::FRAC_PI_4 * frac).tan();
    let q = (s * f64::from(1u32 << bits)).round() as i128;
    let scale = 1i128 << bits;
    let d = scale * scale + q * q;
    let x = scale * scale - q * q;
    let y = 2 * q * scale;
    match quadrant {
        0 => (x, y, d),
        1 => (-y, x, d),
        2 => (-x, -y, d),
        _ => (y, -x, d),
    }
}

/// [`circle_point_integer`] at [`CIRCLE_BITS`] as a rational point.
fn circle_point(rng: &mut CounterRng) -> (BigRational, BigRational) {
    let (x, y, d) = circle_point_integer(rng, CIRCLE_BITS);
    (
        BigRational::new(BigInt::from(x), BigInt::from(d)),
        BigRational::new(BigInt::from(y), BigInt::from(d)),
    )
}

/// The exact fixed point of the contraction word `w`: iterating the two
/// affine maps along `w` and solving `T_w(p) = p` gives a rational point
/// of the attractor.
///
/// The iteration runs on integer numerators over the known denominators
/// `q^k` (for `a = p/q`) and `s^k` (for `b = r/s`), with a single
/// rational reduction at the end; the result is the same exact point the
/// naive rational Horner recurrence produces.
fn cantor_point(a: &BigRational, b: &BigRational, word: &BinaryWord) -> Point {
    let (p, q) = (a.numer(), a.denom());
    let (r, s) = (b.numer(), b.denom());
    let qp = q - p;
    let sr = s - r;
    let mut nx = BigInt::zero();
    let mut ny = BigInt::zero();
    let mut qpow = BigInt::one();
    let mut spow = BigInt::one();
    for bit in word.bits().iter().rev() {
        if *bit == 0 {
            nx = p * nx;
            ny = r * ny + &sr * &spow;
        } else {
            nx = p * nx + &qp * &qpow;
            ny = r * ny;
        }
        qpow *= q;
        spow *= s;
    }
    let m = word.depth() as u32;
    // cx = nx / q^m divided by 1 − a^m leaves nx / (q^m − p^m).
    Point::new(
        BigRational::new(nx, qpow - p.pow(m)),
        BigRational::new(ny, spow - r.pow(m)),
    )
}

fn sample_distinct_words(
    n: usize,
    depth: usize,
    rng: &mut CounterRng,
) -> Result<Vec<BinaryWord>> {
    let mut seen = BTreeSet::new();
    let mut words = Vec::with_capacity(n);
    let mut attempts = 0;
    while words.len() < n {
        attempts += 1;
        if attempts > RETRY_CAP {
            return Err(LimitsError::RetryCap {
                attempts: RETRY_CAP,
            });
        }
        let w = BinaryWord::random(depth, rng);
        if seen.insert(w.clone()) {
            words.push(w);
        }
    }
    Ok(words)
}

/// Chirotope of labeled words under [`chi_e`]; `None` when a pair
/// collides (caller resamples).
fn words_chirotope(words: &[BinaryWord]) -> Result<Option<Chirotope>> {
    let n = words.len();
    let mut signs = Vec::with_capacity(n * (n - 1) * (n + 1) / 6);
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                match chi_e(&words[i], &words[j], &words[k]) {
                    Ok(s) => signs.push(s),
                    Err(LimitsError::WordCollision) => return Ok(None),
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok(Some(Chirotope::from_signs(n, signs)))
}

/// A point of the degenerate two-circle model in projective integer
/// coordinates `(x/d, y/d)` on the unit circle, `d > 0`: outer points
/// sit at the coordinates themselves, inner points at `ε · (x/d, y/d)`
/// for an infinitesimal `ε`.
#[derive(Debug, Clone, Copy)]
struct LimitPoint {
    x: i128,
    y: i128,
    d: i128,
    /// Whether the point sits on the inner (infinitesimal) circle.
    inner: bool,
}

impl LimitPoint {
    fn random(rng: &mut CounterRng) -> LimitPoint {
        let (x, y, d) = circle_point_integer(rng, LIMIT_BITS);
        let inner = !rng.next_bit();
        LimitPoint { x, y, d, inner }
    }

    /// Constant-order numerator coordinates (zero for inner points).
    fn constant(&self) -> (i128, i128) {
        if self.inner {
            (0, 0)
        } else {
            (self.x, self.y)
        }
    }

    /// First-order numerator coordinates (zero for outer points).
    fn epsilon(&self) -> (i128, i128) {
        if self.inner {
            (self.x, self.y)
        } else {
            (0, 0)
        }
    }
}

/// Orientation of three limit points: the determinant is a polynomial in
/// the infinitesimal inner radius; its sign is the sign of the lowest
/// nonvanishing coefficient.
///
/// Clearing the positive denominators via the cyclic expansion
/// `x_a (y_b − y_c) + x_b (y_c − y_a) + x_c (y_a − y_b)` keeps every
/// coefficient below `3 · 2^{2·LIMIT_BITS+1} · 2^{4·LIMIT_BITS+3}`,
/// comfortably inside an `i128`, so the whole test is overflow-free
/// integer arithmetic.
fn limit_orient(a: &LimitPoint, b: &LimitPoint, c: &LimitPoint) -> i8 {
    let pts = [a, b, c];
    let mut coeffs = [0i128; 3];
    for i in 0..3 {
        let (u, v, w) = (pts[i], pts[(i + 1) % 3], pts[(i + 2) % 3]);
        let (ucx, _) = u.constant();
        let (uex, _) = u.epsilon();
        let (_, vcy) = v.constant();
        let (_, vey) = v.epsilon();
        let (_, wcy) = w.constant();
        let (_, wey) = w.epsilon();
        // x_u (y_v − y_w) with denominators d_u d_v d_w cleared.
        let c0 = vcy * w.d - wcy * v.d;
        let c1 = vey * w.d - wey * v.d;
        coeffs[0] += ucx * c0;
        coeffs[1] += uex * c0 + ucx * c1;
        coeffs[2] += uex * c1;
    }
    for coeff in coeffs {
        if coeff != 0 {
            return if coeff > 0 { 1 } else { -1 };
        }
    }
    0
}

/// Chirotope of labeled limit points; `None` on a degenerate triple.
fn limit_chirotope(pts: &[LimitPoint]) -> Option<Chirotope> {
    let n = pts.len();
    let mut signs = Vec::with_capacity(n * (n - 1) * (n + 1) / 6);
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let s = limit_orient(&pts[i], &pts[j], &pts[k]);
                if s == 0 {
                    return None;
                }
                signs.push(s);
            }
        }
    }
    Some(Chirotope::from_signs(n, signs))
}

fn bounding_box(ps: &PointSet) -> (BigRational, BigRational, BigRational, BigRational) {
    let xs = ps.points().iter().map(|p| &p.x);
    let ys = ps.points().iter().map(|p| &p.y);
    (
        xs.clone().min().expect("polygon is nonempty").clone(),
        xs.max().expect("polygon is nonempty").clone(),
        ys.clone().min().expect("polygon is nonempty").clone(),
        ys.max().expect("polygon is nonempty").clone(),
    )
}

fn strictly_inside(hull_ccw: &PointSet, p: &Point) -> bool {
    let k = hull_ccw.len();
    (0..k).all(|i| orient(hull_ccw.point(i), hull_ccw.point((i + 1) % k), p) > 0)
}

// ---------------------------------------------------------------------------
// Estimates
// ---------------------------------------------------------------------------

/// A Bernoulli Monte Carlo estimate with its reproducibility data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    /// Raw success fraction.
    pub mean: f64,
    /// Number of trials.
    pub trials: u64,
    /// Wilson 95% half-width.
    pub ci95: f64,
    /// Seed that reproduces the estimate exactly.
    pub seed: u64,
    /// Raw success count.
    pub successes: u64,
}

impl Estimate {
    /// Builds an estimate from exact counts, computing the Wilson 95%
    /// interval half-width.
    pub fn from_counts(successes: u64, trials: u64, seed: u64) -> Estimate {
        let n = trials.max(1) as f64;
        let p = successes as f64 / n;
        let z = 1.959_963_985f64;
        let z2 = z * z;
        let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        Estimate {
            mean: p,
            trials,
            ci95: half,
            seed,
            successes,
        }
    }

    /// Attaches model and target labels for serialization.
    pub fn report(&self, model: &MeasureModel, omega: &CanonicalCode) -> EstimateReport {
        EstimateReport {
            model: model.to_string(),
            omega: omega.to_string(),
            trials: self.trials,
            seed: self.seed,
            mean: self.mean,
            ci95: self.ci95,
        }
    }
}

/// A labeled estimate ready for JSON or CSV export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    /// Model description.
    pub model: String,
    /// Canonical code of the estimated type.
    pub omega: String,
    /// Number of trials.
    pub trials: u64,
    /// Seed.
    pub seed: u64,
    /// Success fraction.
    pub mean: f64,
    /// Wilson 95% half-width.
    pub ci95: f64,
}

impl EstimateReport {
    /// JSON encoding of the report.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// CSV export of a batch of reports, one line per estimate.
pub fn reports_to_csv(reports: &[EstimateReport]) -> String {
    let mut out = String::from("model,omega,trials,seed,mean,ci95\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.model, r.omega, r.trials, r.seed, r.mean, r.ci95
        ));
    }
    out
}

/// Runs Bernoulli trials in fixed-size batches with per-batch derived
/// seeds and merges the exact success counts, so the result depends only
/// on `(seed, trials)`.
fn batched_bernoulli<F>(trials: u64, seed: u64, trial: F) -> Result<u64>
where
    F: Fn(&mut CounterRng) -> Result<bool> + Sync,
{
    let batches = trials.div_ceil(BATCH_SIZE);
    (0..batches)
        .into_par_iter()
        .map(|batch| {
            let mut rng = CounterRng::stream(seed, batch);
            let in_batch = BATCH_SIZE.min(trials - batch * BATCH_SIZE);
            let mut hits = 0u64;
            for _ in 0..in_batch {
                if trial(&mut rng)? {
                    hits += 1;
                }
            }
            Ok(hits)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

/// Monte Carlo estimate of the density `ℓ_model(ω)`: the probability
/// that `|ω|` independent model draws realize the order type `ω`.
pub fn estimate_density(
    model: &MeasureModel,
    omega: &CanonicalCode,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    let n = omega.size();
    let successes = batched_bernoulli(trials, seed, |rng| {
        let chi = model.sample_chirotope(n, rng)?;
        Ok(chi.canonical_code() == *omega)
    })?;
    Ok(Estimate::from_counts(successes, trials, seed))
}

/// Monte Carlo estimate of the disagreement probability
/// `P(χ(x, y, z) ≠ χ(x′, y, z))` over independent model pairs `(y, z)`.
///
/// The neighborhood pseudo-distance `∫|χ(x,y,z) − χ(x′,y,z)| dμ²` is
/// twice the reported mean, since the integrand takes values in {0, 2}.
pub fn kernel_distance_estimate(
    model: &MeasureModel,
    x: &Point,
    x_prime: &Point,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    if !model.supports_points() {
        return Err(LimitsError::Model(
            "kernel distances need a geometric model".into(),
        ));
    }
    let successes = batched_bernoulli(trials, seed, |rng| {
        for _ in 0..RETRY_CAP {
            let y = model.sample_one(rng);
            let z = model.sample_one(rng);
            let s = orient(x, &y, &z);
            let s_prime = orient(x_prime, &y, &z);
            if s == 0 || s_prime == 0 {
                continue;
            }
            return Ok(s != s_prime);
        }
        Err(LimitsError::RetryCap {
            attempts: RETRY_CAP,
        })
    })?;
    Ok(Estimate::from_counts(successes, trials, seed))
}

// ---------------------------------------------------------------------------
// The two-circle experiment
// ---------------------------------------------------------------------------

/// Per-trial outcomes of the two-circle hull experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoCirclesReport {
    /// Points per trial.
    pub n_points: usize,
    /// Number of trials.
    pub trials: usize,
    /// Seed.
    pub seed: u64,
    /// Fraction of points on the convex hull, one entry per trial.
    pub hull_fractions: Vec<f64>,
    /// Number of covering hull edges, one entry per trial.
    pub covering_edges: Vec<usize>,
}

impl TwoCirclesReport {
    /// How many trials produced a hull fraction inside `[lo, hi]`.
    pub fn fraction_within(&self, lo: f64, hi: f64) -> usize {
        self.hull_fractions
            .iter()
            .filter(|f| **f >= lo && **f <= hi)
            .count()
    }

    /// Median of the covering-edge counts.
    pub fn covering_edge_median(&self) -> f64 {
        let mut v = self.covering_edges.clone();
        v.sort_unstable();
        let k = v.len();
        if k == 0 {
            return f64::NAN;
        }
        if k % 2 == 1 {
            v[k / 2] as f64
        } else {
            (v[k / 2 - 1] + v[k / 2]) as f64 / 2.0
        }
    }
}

/// Runs the two-circle experiment with `n_side²` points per trial: each
/// point goes to the outer unit circle with probability one half and to
/// the inner circle of radius `t` otherwise.  Records the hull fraction
/// and the number of covering edges — hull edges that close a triangle
/// with some hull vertex containing every interior point.
pub fn two_circles_experiment(
    n_side: usize,
    t: &BigRational,
    trials: usize,
    seed: u64,
) -> Result<TwoCirclesReport> {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    two_circles_experiment_biased(n_side, t, trials, seed, &half)
}

/// The experiment with an explicit outer-circle probability; probability
/// one is the degenerate control where every point is a hull vertex.
pub fn two_circles_experiment_biased(
    n_side: usize,
    t: &BigRational,
    trials: usize,
    seed: u64,
    outer_probability: &BigRational,
) -> Result<TwoCirclesReport> {
    if !t.is_positive() || *t >= BigRational::one() {
        return Err(LimitsError::BadParameter(
            "inner radius must lie strictly between 0 and 1".into(),
        ));
    }
    if outer_probability.is_negative() || *outer_probability > BigRational::one() {
        return Err(LimitsError::BadParameter(
            "outer probability must lie in [0, 1]".into(),
        ));
    }
    let n = n_side * n_side;
    let threshold = (outer_probability.to_f64().unwrap_or(0.5) * (1u64 << 53) as f64) as u64;
    let results: Vec<(f64, usize)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = CounterRng::stream(seed, trial as u64);
            let mut points = Vec::with_capacity(n);
            let mut seen = BTreeSet::new();
            while points.len() < n {
                let (x, y) = circle_point(&mut rng);
                let outer = (rng.next_u64() >> 11) < threshold;
                let p = if outer {
                    Point::new(x, y)
                } else {
                    Point::new(t * &x, t * &y)
                };
                if seen.insert((p.x.clone(), p.y.clone())) {
                    points.push(p);
                }
            }
            let ps = PointSet::new(points);
            let hull = ps.convex_hull_unchecked();
            let fraction = hull.len() as f64 / n as f64;
            let hull_set: BTreeSet<&Point> = hull.points().iter().collect();
            let mut interior: Vec<Point> = ps
                .points()
                .iter()
                .filter(|p| !hull_set.contains(p))
                .cloned()
                .collect();
            interior.sort_by(compare_by_angle);
            let t2 = t * t;
            let common_circle = interior
                .iter()
                .all(|p| &p.x * &p.x + &p.y * &p.y == t2);
            let covering = covering_edge_count(hull.points(), &interior, common_circle);
            (fraction, covering)
        })
        .collect();
    Ok(TwoCirclesReport {
        n_points: n,
        trials,
        seed,
        hull_fractions: results.iter().map(|r| r.0).collect(),
        covering_edges: results.iter().map(|r| r.1).collect(),
    })
}

/// Total angular order on nonzero directions starting at the positive
/// x-axis and sweeping counterclockwise.
fn compare_by_angle(a: &Point, b: &Point) -> std::cmp::Ordering {
    let class = |p: &Point| -> u8 {
        let sy = rational_sign(&p.y);
        if sy > 0 || (sy == 0 && rational_sign(&p.x) > 0) {
            0
        } else {
            1
        }
    };
    let (ca, cb) = (class(a), class(b));
    if ca != cb {
        return ca.cmp(&cb);
    }
    let cross = &a.x * &b.y - &a.y * &b.x;
    match rational_sign(&cross) {
        1 => std::cmp::Ordering::Less,
        -1 => std::cmp::Ordering::Greater,
        _ => (a.x.clone(), a.y.clone()).cmp(&(b.x.clone(), b.y.clone())),
    }
}

/// Minimum of `⟨p, n⟩` over a set of points.  When the points lie on a
/// common origin-centered circle and arrive sorted by angle, the minimum
/// is attained next to the angular position of `−n` and a binary search
/// finds it; otherwise a linear scan is used.
fn support_min_dot(
    sorted: &[Point],
    nx: &BigRational,
    ny: &BigRational,
    common_circle: bool,
) -> BigRational {
    let dot = |p: &Point| -> BigRational { &p.x * nx + &p.y * ny };
    if !common_circle || sorted.len() < 16 {
        return sorted
            .iter()
            .map(dot)
            .min()
            .expect("support of a nonempty set");
    }
    let target = Point::new(-nx.clone(), -ny.clone());
    let idx = sorted.partition_point(|p| compare_by_angle(p, &target) == std::cmp::Ordering::Less);
    let k = sorted.len();
    let a = &sorted[(idx + k - 1) % k];
    let b = &sorted[idx % k];
    dot(a).min(dot(b))
}

/// Whether every interior point lies strictly left of the directed line
/// `a → b`.
fn all_strictly_left(
    a: &Point,
    b: &Point,
    interior: &[Point],
    common_circle: bool,
) -> bool {
    let dx = &b.x - &a.x;
    let dy = &b.y - &a.y;
    let nx = -dy.clone();
    let ny = dx.clone();
    let min_dot = support_min_dot(interior, &nx, &ny, common_circle);
    let at_a = &a.x * &nx + &a.y * &ny;
    min_dot > at_a
}

/// Counts hull edges `(p_i, p_{i+1})` admitting a hull vertex `r` with
/// the triangle `p_i p_{i+1} r` containing every interior point.
///
/// Both tests "interior left of `p_{i+1} → p_j`" and "interior left of
/// `p_j → p_i`" are monotone as `j` walks the hull (the line direction
/// rotates monotonically around a convex polygon), so each edge needs
/// two binary searches.
fn covering_edge_count(hull: &[Point], interior: &[Point], common_circle: bool) -> usize {
    let h = hull.len();
    if h < 3 {
        return 0;
    }
    if interior.is_empty() {
        return h;
    }
    let mut count = 0;
    for i in 0..h {
        let a = &hull[(i + 1) % h];
        let b = &hull[i];
        let c2 = |offset: usize| all_strictly_left(a, &hull[(i + offset) % h], interior, common_circle);
        let c3 = |offset: usize| all_strictly_left(&hull[(i + offset) % h], b, interior, common_circle);
        if !c2(2) || !c3(h - 1) {
            continue;
        }
        let mut lo = 2;
        let mut hi = h - 1;
        while lo < hi {
            let mid = (lo + hi + 1) / 2;
            if c2(mid) {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        let last_c2 = lo;
        let mut lo = 2;
        let mut hi = h - 1;
        while lo < hi {
            let mid = (lo + hi) / 2;
            if c3(mid) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let first_c3 = lo;
        if first_c3 <= last_c2 {
            count += 1;
        }
    }
    count
}

// ---------------------------------------------------------------------------
// Spherical transforms
// ---------------------------------------------------------------------------

/// An exactly orthogonal rational rotation with determinant +1.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation3 {
    m: [[BigRational; 3]; 3],
}

impl Rotation3 {
    /// The identity rotation.
    pub fn identity() -> Rotation3 {
        let z = BigRational::zero;
        let o = BigRational::one;
        Rotation3 {
            m: [
                [o(), z(), z()],
                [z(), o(), z()],
                [z(), z(), o()],
            ],
        }
    }

    /// The Cayley transform `(I − S)(I + S)⁻¹` of the skew matrix with
    /// parameters `(s1, s2, s3)`: always exactly orthogonal with
    /// determinant +1, covering every rotation without angle π.
    pub fn cayley(s1: &BigRational, s2: &BigRational, s3: &BigRational) -> Rotation3 {
        let norm2 = s1 * s1 + s2 * s2 + s3 * s3;
        let one = BigRational::one();
        let two = BigRational::from_integer(2.into());
        let d = &one + &norm2;
        // Rodrigues-style closed form of the Cayley transform.
        let rot = |i: usize, j: usize| -> BigRational {
            let s = [s1.clone(), s2.clone(), s3.clone()];
            if i == j {
                (&one - &norm2 + &two * &s[i] * &s[i]) / &d
            } else {
                let k = 3 - i - j;
                let eps: i64 = match (i, j) {
                    (0, 1) | (1, 2) | (2, 0) => -1,
                    _ => 1,
                };
                (&two * &s[i] * &s[j] + BigRational::from_integer(eps.into()) * &two * &s[k])
                    / &d
            }
        };
        let m = [
            [rot(0, 0), rot(0, 1), rot(0, 2)],
            [rot(1, 0), rot(1, 1), rot(1, 2)],
            [rot(2, 0), rot(2, 1), rot(2, 2)],
        ];
        let r = Rotation3 { m };
        debug_assert!(r.is_orthogonal());
        r
    }

    /// Validates and wraps an explicit matrix.
    pub fn from_matrix(m: [[BigRational; 3]; 3]) -> Result<Rotation3> {
        let r = Rotation3 { m };
        if !r.is_orthogonal() {
            return Err(LimitsError::BadParameter(
                "matrix is not orthogonal with determinant +1".into(),
            ));
        }
        Ok(r)
    }

    /// The matrix entries.
    pub fn matrix(&self) -> &[[BigRational; 3]; 3] {
        &self.m
    }

    fn is_orthogonal(&self) -> bool {
        let one = BigRational::one();
        let zero = BigRational::zero();
        for i in 0..3 {
            for j in 0..3 {
                let dot: BigRational = (0..3).map(|k| &self.m[i][k] * &self.m[j][k]).sum();
                let expect = if i == j { &one } else { &zero };
                if dot != *expect {
                    return false;
                }
            }
        }
        self.det() == one
    }

    fn det(&self) -> BigRational {
        let m = &self.m;
        &m[0][0] * (&m[1][1] * &m[2][2] - &m[1][2] * &m[2][1])
            - &m[0][1] * (&m[1][0] * &m[2][2] - &m[1][2] * &m[2][0])
            + &m[0][2] * (&m[1][0] * &m[2][1] - &m[1][1] * &m[2][0])
    }

    fn apply(&self, v: &[BigRational; 3]) -> [BigRational; 3] {
        let row = |i: usize| -> BigRational {
            &self.m[i][0] * &v[0] + &self.m[i][1] * &v[1] + &self.m[i][2] * &v[2]
        };
        [row(0), row(1), row(2)]
    }
}

/// A direct (orientation-preserving) rational affine map of the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    a: BigRational,
    b: BigRational,
    c: BigRational,
    d: BigRational,
    e: BigRational,
    f: BigRational,
}

impl AffineMap {
    /// The map `(x, y) ↦ (a x + b y + e, c x + d y + f)`; the linear
    /// part must have positive determinant.
    pub fn new(
        a: BigRational,
        b: BigRational,
        c: BigRational,
        d: BigRational,
        e: BigRational,
        f: BigRational,
    ) -> Result<AffineMap> {
        if !(&a * &d - &b * &c).is_positive() {
            return Err(LimitsError::BadParameter(
                "affine map must be direct (positive determinant)".into(),
            ));
        }
        Ok(AffineMap { a, b, c, d, e, f })
    }

    /// The identity map.
    pub fn identity() -> AffineMap {
        AffineMap::new(
            BigRational::one(),
            BigRational::zero(),
            BigRational::zero(),
            BigRational::one(),
            BigRational::zero(),
            BigRational::zero(),
        )
        .expect("the identity is direct")
    }

    /// A positive scaling combined with a translation.
    pub fn scale_translate(scale: BigRational, dx: BigRational, dy: BigRational) -> Result<AffineMap> {
        if !scale.is_positive() {
            return Err(LimitsError::BadParameter("scale must be positive".into()));
        }
        AffineMap::new(
            scale.clone(),
            BigRational::zero(),
            BigRational::zero(),
            scale,
            dx,
            dy,
        )
    }

    /// Applies the map to a point.
    pub fn apply(&self, p: &Point) -> Point {
        Point::new(
            &self.a * &p.x + &self.b * &p.y + &self.e,
            &self.c * &p.x + &self.d * &p.y + &self.f,
        )
    }
}

/// Applies a direct affine map followed by the spherical rotation: each
/// image point is lifted to `(x, y, 1)`, rotated, and projected back
/// from the upper hemisphere.  Fails if a lifted point leaves the upper
/// hemisphere.  On the upper hemisphere the map preserves orientations,
/// so the canonical code of the output equals that of the input.
pub fn spherical_transform(
    ps: &PointSet,
    rotation: &Rotation3,
    affine: &AffineMap,
) -> Result<PointSet> {
    let mut out = Vec::with_capacity(ps.len());
    for (index, p) in ps.points().iter().enumerate() {
        let q = affine.apply(p);
        let v = [q.x, q.y, BigRational::one()];
        let w = rotation.apply(&v);
        if !w[2].is_positive() {
            return Err(LimitsError::HemisphereViolation {
                index,
                z: format_rational(&w[2]),
            });
        }
        out.push(Point::new(&w[0] / &w[2], &w[1] / &w[2]));
    }
    Ok(PointSet::new(out))
}

fn rational_sqrt(v: &BigRational) -> Option<BigRational> {
    if v.is_negative() {
        return None;
    }
    let num = v.numer().sqrt();
    let den = v.denom().sqrt();
    if &(&num * &num) == v.numer() && &(&den * &den) == v.denom() {
        Some(BigRational::new(num, den))
    } else {
        None
    }
}

/// The rotation sending the lifted great circle of the line
/// `a·x + b·y = c` to the horizon `{z = 0}`, mapping the open halfplane
/// `a·x + b·y > c` onto the upper hemisphere.
///
/// Exact rationality requires both `a² + b²` and `a² + b² + c²` to be
/// perfect rational squares (for example, lines with 3-4-5 normals).
pub fn horizon_rotation(
    a: &BigRational,
    b: &BigRational,
    c: &BigRational,
) -> Result<Rotation3> {
    let r2_xy = a * a + b * b;
    if r2_xy.is_zero() {
        return Err(LimitsError::BadParameter(
            "the line normal must be nonzero".into(),
        ));
    }
    let r2 = &r2_xy + c * c;
    let s_xy = rational_sqrt(&r2_xy).ok_or_else(|| {
        LimitsError::BadParameter("a² + b² must be a perfect rational square".into())
    })?;
    let s = rational_sqrt(&r2).ok_or_else(|| {
        LimitsError::BadParameter("a² + b² + c² must be a perfect rational square".into())
    })?;
    // Rows: r1 ⟂ n in the plane, r3 = n̂ with n = (a, b, −c), r2 = r3 × r1.
    let r3 = [a / &s, b / &s, -c / &s];
    let r1 = [-b / &s_xy, a / &s_xy, BigRational::zero()];
    let r2 = [
        &r3[1] * &r1[2] - &r3[2] * &r1[1],
        &r3[2] * &r1[0] - &r3[0] * &r1[2],
        &r3[0] * &r1[1] - &r3[1] * &r1[0],
    ];
    Rotation3::from_matrix([r1, r2, r3])
}

// ---------------------------------------------------------------------------
// Cantor vs. words cross-check
// ---------------------------------------------------------------------------

/// Outcome of comparing geometric Cantor estimates with word estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosscheckReport {
    /// Estimate from the geometric Cantor model.
    pub cantor: EstimateReport,
    /// Estimate from the combinatorial word model.
    pub words: EstimateReport,
    /// Absolute difference of the means.
    pub difference: f64,
    /// Sum of the two 95% half-widths.
    pub combined_ci: f64,
    /// Whether the means agree within the combined interval.
    pub agree: bool,
}

impl CrosscheckReport {
    /// JSON encoding of the report.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Estimates `ℓ(ω)` from both the geometric Cantor-rectangle model and
/// the binary-word model and compares them.  Requires the flatness
/// condition `b ≤ (1−2a)(1−2b)a`: without it the word combinatorics do
/// not describe the geometry and the comparison is refused.
pub fn cantor_vs_words_crosscheck(
    a: &BigRational,
    b: &BigRational,
    omega: &CanonicalCode,
    trials: u64,
    seed: u64,
) -> Result<CrosscheckReport> {
    let cantor = MeasureModel::cantor_rect(a.clone(), b.clone())?;
    if cantor.is_flat() != Some(true) {
        return Err(LimitsError::FlatnessViolated {
            a: format_rational(a),
            b: format_rational(b),
        });
    }
    let words = MeasureModel::binary_words(CANTOR_DEPTH)?;
    let est_cantor = estimate_density(&cantor, omega, trials, seed)?;
    let est_words = estimate_density(&words, omega, trials, seed.wrapping_add(1))?;
    let difference = (est_cantor.mean - est_words.mean).abs();
    let combined_ci = est_cantor.ci95 + est_words.ci95;
    Ok(CrosscheckReport {
        cantor: est_cantor.report(&cantor, omega),
        words: est_words.report(&words, omega),
        difference,
        combined_ci,
        agree: difference <= combined_ci,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::OrderTypeStore;
    use once_cell::sync::Lazy;
    use proptest::prelude::*;

    static STORE: Lazy<OrderTypeStore> = Lazy::new(|| {
        let mut store = OrderTypeStore::new();
        store.enumerate_up_to(6).expect("enumeration succeeds");
        store
    });

    fn ratio(s: &str) -> BigRational {
        crate::geometry::parse_rational(s).expect("test rational parses")
    }

    fn word(s: &str) -> BinaryWord {
        s.parse().expect("test word parses")
    }

    #[test]
    fn counter_rng_is_reproducible_and_streams_differ() {
        let mut a = CounterRng::new(42);
        let mut b = CounterRng::new(42);
        let seq_a: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let seq_b: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        assert_eq!(seq_a, seq_b);
        let mut c = CounterRng::stream(42, 1);
        let seq_c: Vec<u64> = (0..8).map(|_| c.next_u64()).collect();
        assert_ne!(seq_a, seq_c);
        let mut d = CounterRng::new(43);
        assert_ne!(seq_a, (0..8).map(|_| d.next_u64()).collect::<Vec<_>>());
        for _ in 0..64 {
            let f = a.next_f64();
            assert!((0.0..1.0).contains(&f));
            let k = a.next_below(7);
            assert!(k < 7);
        }
    }

    #[test]
    fn chi_e_matches_hand_evaluations() {
        // 000, 010, 100: the left pair splits at depth 1, the right pair
        // at depth 0, so the sorted orientation is negative.
        assert_eq!(chi_e(&word("000"), &word("010"), &word("100")).unwrap(), -1);
        // 000, 100, 110: splits at depths 0 then 1, positive.
        assert_eq!(chi_e(&word("000"), &word("100"), &word("110")).unwrap(), 1);
        // Swapping two arguments flips the sign.
        assert_eq!(chi_e(&word("010"), &word("000"), &word("100")).unwrap(), 1);
        assert_eq!(chi_e(&word("000"), &word("100"), &word("010")).unwrap(), 1);
        // Equal words collide.
        assert!(matches!(
            chi_e(&word("010"), &word("010"), &word("100")),
            Err(LimitsError::WordCollision)
        ));
        // A proper prefix collides as well.
        assert!(matches!(
            chi_e(&word("01"), &word("010"), &word("100")),
            Err(LimitsError::WordCollision)
        ));
    }

    #[test]
    fn cup_probabilities_have_exact_values() {
        assert_eq!(exact_cup_probability(3).unwrap(), ratio("1/2"));
        assert_eq!(exact_cup_probability(4).unwrap(), ratio("1/7"));
        assert_eq!(exact_cup_probability(5).unwrap(), ratio("1/42"));
        assert!(exact_cup_probability(2).is_err());
    }

    proptest! {
        #[test]
        fn cup_probability_recursion_holds(s in 4usize..12) {
            let f_s = exact_cup_probability(s).unwrap();
            let f_prev = exact_cup_probability(s - 1).unwrap();
            let factor = BigRational::new(
                BigInt::from(s),
                (BigInt::one() << s) - BigInt::from(2),
            );
            prop_assert_eq!(f_s, f_prev * factor);
        }

        #[test]
        fn chi_e_is_antisymmetric_on_random_words(bits in proptest::collection::vec(0u8..2, 24)) {
            let u = BinaryWord::new(bits[0..8].to_vec()).unwrap();
            let v = BinaryWord::new(bits[8..16].to_vec()).unwrap();
            let w = BinaryWord::new(bits[16..24].to_vec()).unwrap();
            if let Ok(s) = chi_e(&u, &v, &w) {
                prop_assert_eq!(chi_e(&v, &u, &w).unwrap(), -s);
                prop_assert_eq!(chi_e(&u, &w, &v).unwrap(), -s);
                prop_assert_eq!(chi_e(&v, &w, &u).unwrap(), s);
                prop_assert_eq!(chi_e(&w, &u, &v).unwrap(), s);
            }
        }
    }

    #[test]
    fn binary_words_ccw_probability_is_one_half() {
        let model = MeasureModel::binary_words(40).unwrap();
        let triangle = STORE.convex_code(3).unwrap();
        let est = estimate_density(&model, &triangle, 40_000, 11).unwrap();
        // Every non-degenerate triple is a triangle, so this checks the
        // machinery end to end rather than the 1/2 orientation split…
        assert!((est.mean - 1.0).abs() < 1e-12);
        // …which is checked directly on labeled triples.
        let mut rng = CounterRng::new(12);
        let mut ccw = 0u32;
        let trials = 40_000;
        for _ in 0..trials {
            let words = sample_distinct_words(3, 40, &mut rng).unwrap();
            if chi_e(&words[0], &words[1], &words[2]).unwrap() == 1 {
                ccw += 1;
            }
        }
        let p = ccw as f64 / trials as f64;
        assert!((p - 0.5).abs() < 0.012, "labeled CCW fraction {p}");
    }

    #[test]
    fn monte_carlo_cups_match_the_exact_formula() {
        let mut rng = CounterRng::new(5);
        for (s, expect) in [(4usize, 1.0 / 7.0), (5, 1.0 / 42.0)] {
            let trials = 40_000;
            let mut hits = 0u32;
            for _ in 0..trials {
                let words = sample_distinct_words(s, 40, &mut rng).unwrap();
                if is_cup(&words).unwrap() {
                    hits += 1;
                }
            }
            let p = hits as f64 / trials as f64;
            let sd = (expect * (1.0 - expect) / trials as f64).sqrt();
            assert!(
                (p - expect).abs() < 4.0 * sd,
                "cup fraction {p} at size {s}, expected {expect}"
            );
        }
    }

    #[test]
    fn two_circle_samples_sit_exactly_on_the_circles() {
        let t = ratio("1/100");
        let model = MeasureModel::two_circles(t.clone()).unwrap();
        let ps = model.sample_points(12, 3).unwrap();
        assert_eq!(ps.len(), 12);
        let one = BigRational::one();
        let t2 = &t * &t;
        for p in ps.points() {
            let r2 = &p.x * &p.x + &p.y * &p.y;
            assert!(r2 == one || r2 == t2, "radius² = {r2} off both circles");
        }
        assert!(model.sample_points(0, 3).unwrap().is_empty());
        assert!(MeasureModel::two_circles(ratio("1")).is_err());
        assert!(MeasureModel::two_circles(ratio("-1/2")).is_err());
    }

    #[test]
    fn geometric_samples_are_in_general_position() {
        let models = [
            MeasureModel::two_circles(ratio("1/3")).unwrap(),
            MeasureModel::cantor_rect(ratio("1/4"), ratio("1/16")).unwrap(),
            MeasureModel::unit_square(),
        ];
        for (i, model) in models.iter().enumerate() {
            for seed in 0..4 {
                let ps = model.sample_points(6, 1000 + 17 * i as u64 + seed).unwrap();
                assert!(ps.general_position(), "{model} sample degenerate");
            }
        }
    }

    #[test]
    fn cantor_points_stay_in_the_unit_square() {
        let a = ratio("1/4");
        let b = ratio("1/16");
        let model = MeasureModel::cantor_rect(a, b).unwrap();
        let ps = model.sample_points(10, 9).unwrap();
        let one = BigRational::one();
        for p in ps.points() {
            assert!(!p.x.is_negative() && p.x <= one);
            assert!(!p.y.is_negative() && p.y <= one);
        }
        assert!(MeasureModel::cantor_rect(ratio("1/4"), ratio("1/4")).is_err());
        assert!(MeasureModel::cantor_rect(ratio("1/2"), ratio("1/4")).is_err());
    }

    #[test]
    fn cantor_corners_are_the_single_letter_fixed_points() {
        let a = ratio("1/4");
        let b = ratio("1/16");
        let p0 = cantor_point(&a, &b, &word("0"));
        assert_eq!(p0.x, BigRational::zero());
        assert_eq!(p0.y, BigRational::one());
        let p1 = cantor_point(&a, &b, &word("1"));
        assert_eq!(p1.x, BigRational::one());
        assert_eq!(p1.y, BigRational::zero());
    }

    #[test]
    fn flat_cantor_geometry_agrees_with_word_combinatorics() {
        // Under the flatness condition the order type of realized points
        // is exactly the combinatorial orientation of their words.
        let a = ratio("1/4");
        let b = ratio("1/16");
        let mut rng = CounterRng::new(77);
        for _ in 0..40 {
            let words = sample_distinct_words(5, 24, &mut rng).unwrap();
            let geometric = {
                let pts: Vec<Point> = words.iter().map(|w| cantor_point(&a, &b, w)).collect();
                Chirotope::of(&PointSet::new(pts)).unwrap()
            };
            let combinatorial = words_chirotope(&words).unwrap().unwrap();
            assert_eq!(geometric, combinatorial);
        }
    }

    #[test]
    fn flatness_condition_evaluates_exactly() {
        let flat = MeasureModel::cantor_rect(ratio("1/4"), ratio("1/16")).unwrap();
        assert_eq!(flat.is_flat(), Some(true));
        // (1 − 4/5)(1 − 1/5)(2/5) = 8/125 < 1/10, so this pair is not flat.
        let steep = MeasureModel::cantor_rect(ratio("2/5"), ratio("1/10")).unwrap();
        assert_eq!(steep.is_flat(), Some(false));
        assert_eq!(MeasureModel::unit_square().is_flat(), None);
    }

    #[test]
    fn limit_model_matches_a_small_radius_simulation() {
        let tri_pt = STORE.codes_with_hull(4, 3)[0].clone();
        let limit = MeasureModel::two_circles_limit();
        let small_t = MeasureModel::two_circles(ratio("1/1000")).unwrap();
        let e_limit = estimate_density(&limit, &tri_pt, 20_000, 21).unwrap();
        let e_small = estimate_density(&small_t, &tri_pt, 20_000, 22).unwrap();
        let diff = (e_limit.mean - e_small.mean).abs();
        assert!(
            diff <= e_limit.ci95 + e_small.ci95,
            "limit {} vs small-t {} differ beyond combined CI",
            e_limit.mean,
            e_small.mean
        );
    }

    #[test]
    fn limit_model_reproduces_the_derived_triangle_plus_point_value() {
        // Conditioning on the number o of outer points in a 4-point draw
        // (weights C(4,o)/16; o ∈ {0,4} give convex position) yields
        // ℓ(tri+pt) = (4·½ + 6·½ + 4·¼)/16 = 3/8: the o=1 and o=2 strata
        // each contribute probability ½ by a reflection resp. uniform-
        // direction argument, and o=3 is the classical ¼ chance that a
        // random inscribed triangle contains the centre.
        let tri_pt = STORE.codes_with_hull(4, 3)[0].clone();
        let model = MeasureModel::two_circles_limit();
        let est = estimate_density(&model, &tri_pt, 40_000, 29).unwrap();
        let expect = 3.0 / 8.0;
        assert!(
            (est.mean - expect).abs() < 3.0 * est.ci95,
            "degenerate-model estimate {} vs derived {}",
            est.mean,
            expect
        );
    }

    #[test]
    fn limit_model_obeys_the_conditioning_identity() {
        // ℓ(ω) = Σ_Ω p(ω, Ω) ℓ(Ω) over the next size up; for the
        // triangle-with-interior-point this reads
        // ℓ(tri+pt) = (2/5) ℓ(hull-4 of 5) + (4/5) ℓ(hull-3 of 5).
        let tri_pt = STORE.codes_with_hull(4, 3)[0].clone();
        let hull4 = STORE.codes_with_hull(5, 4)[0].clone();
        let hull3 = STORE.codes_with_hull(5, 3)[0].clone();
        let model = MeasureModel::two_circles_limit();
        let e4 = estimate_density(&model, &tri_pt, 40_000, 31).unwrap();
        let e54 = estimate_density(&model, &hull4, 40_000, 32).unwrap();
        let e53 = estimate_density(&model, &hull3, 40_000, 33).unwrap();
        let rhs = 0.4 * e54.mean + 0.8 * e53.mean;
        let ci = e4.ci95 + 0.4 * e54.ci95 + 0.8 * e53.ci95;
        assert!(
            (e4.mean - rhs).abs() <= 1.5 * ci,
            "conditioning identity violated: {} vs {}",
            e4.mean,
            rhs
        );
    }

    #[test]
    fn square_reproduces_the_parallelogram_constant() {
        // Uniform on a parallelogram, four points are in convex position
        // with probability exactly 25/36.
        let model = MeasureModel::unit_square();
        let convex4 = STORE.convex_code(4).unwrap();
        let est = estimate_density(&model, &convex4, 30_000, 41).unwrap();
        let expect = 25.0 / 36.0;
        assert!(
            (est.mean - expect).abs() < 3.0 * est.ci95,
            "square estimate {} vs {}",
            est.mean,
            expect
        );
    }

    #[test]
    fn estimates_are_seed_reproducible() {
        let model = MeasureModel::two_circles_limit();
        let tri_pt = STORE.codes_with_hull(4, 3)[0].clone();
        let a = estimate_density(&model, &tri_pt, 9_000, 5).unwrap();
        let b = estimate_density(&model, &tri_pt, 9_000, 5).unwrap();
        assert_eq!(a, b);
        // Wilson half-widths shrink with the trial count.
        let narrow = Estimate::from_counts(500, 10_000, 0).ci95;
        let wide = Estimate::from_counts(50, 1_000, 0).ci95;
        assert!(narrow < wide);
        let report = a.report(&model, &tri_pt);
        assert!(report.to_json().contains("two-circles-limit"));
        let csv = reports_to_csv(&[report]);
        assert!(csv.starts_with("model,omega,trials,seed,mean,ci95\n"));
        assert_eq!(csv.lines().count(), 2);
    }

    #[test]
    fn peeling_depth_of_two_circle_samples_is_at_most_two() {
        let model = MeasureModel::two_circles(ratio("1/5")).unwrap();
        for seed in 0..5 {
            let ps = model.sample_points(24, 100 + seed).unwrap();
            let depth = ps.peeling_depth().unwrap();
            assert!(depth <= 2, "peeling depth {depth} at seed {seed}");
        }
    }

    #[test]
    fn experiment_control_with_all_points_outer() {
        let report = two_circles_experiment_biased(
            5,
            &ratio("1/100"),
            4,
            2,
            &BigRational::one(),
        )
        .unwrap();
        assert_eq!(report.n_points, 25);
        for f in &report.hull_fractions {
            assert_eq!(*f, 1.0);
        }
        // With no interior points every hull edge is vacuously covering.
        for (c, f) in report.covering_edges.iter().zip(&report.hull_fractions) {
            assert_eq!(*c as f64, f * 25.0);
        }
    }

    #[test]
    fn experiment_hull_fraction_concentrates_near_one_half() {
        let report = two_circles_experiment(20, &ratio("1/100"), 12, 7).unwrap();
        assert_eq!(report.n_points, 400);
        let mean: f64 =
            report.hull_fractions.iter().sum::<f64>() / report.hull_fractions.len() as f64;
        assert!(
            (mean - 0.5).abs() < 0.03,
            "mean hull fraction {mean} far from 1/2"
        );
        for c in &report.covering_edges {
            assert!(*c >= 1, "a two-circle trial lost all covering edges");
        }
    }

    /// A triangle erected on a hull edge contains every interior point
    /// only if the edge subtends an outer-circle gap of at least 4t, so
    /// at fixed t the covering-edge count rises with N only while
    /// typical gaps stay above that threshold and decays towards zero
    /// beyond it.  These two sizes still compare upward.
    #[test]
    fn covering_edges_grow_while_outer_gaps_stay_wide() {
        let small = two_circles_experiment(10, &ratio("1/100"), 9, 13).unwrap();
        let large = two_circles_experiment(24, &ratio("1/100"), 9, 13).unwrap();
        assert!(
            small.covering_edge_median() < large.covering_edge_median(),
            "medians {} vs {}",
            small.covering_edge_median(),
            large.covering_edge_median()
        );
    }

    #[test]
    fn covering_count_on_a_hand_checked_square() {
        // Hull = square corners.  A point slightly above the center is
        // strictly inside the three corner triangles that look down on
        // it, but no triangle on the bottom edge contains it.
        let hull = vec![
            Point::from_integers(0, 0),
            Point::from_integers(2, 0),
            Point::from_integers(2, 2),
            Point::from_integers(0, 2),
        ];
        let above_center = vec![Point::new(ratio("1"), ratio("9/8"))];
        assert_eq!(covering_edge_count(&hull, &above_center, false), 3);
        assert_eq!(brute_force_covering(&hull, &above_center), 3);
        // A point near the lower-left corner, off the diagonal: the
        // right edge has no containing triangle.
        let off = vec![Point::new(ratio("1/8"), ratio("1/4"))];
        assert_eq!(covering_edge_count(&hull, &off, false), 3);
        assert_eq!(brute_force_covering(&hull, &off), 3);
        // A pair near opposite corners; verify against brute force.
        let pair = vec![
            Point::new(ratio("1/8"), ratio("1/4")),
            Point::new(ratio("15/8"), ratio("7/4")),
        ];
        let fast = covering_edge_count(&hull, &pair, false);
        let brute = brute_force_covering(&hull, &pair);
        assert_eq!(fast, brute);
    }

    fn brute_force_covering(hull: &[Point], interior: &[Point]) -> usize {
        let h = hull.len();
        let mut count = 0;
        for i in 0..h {
            let a = &hull[i];
            let b = &hull[(i + 1) % h];
            let mut covered = false;
            for r in hull.iter() {
                if r == a || r == b {
                    continue;
                }
                let inside = interior.iter().all(|p| {
                    orient(a, b, p) > 0 && orient(b, r, p) > 0 && orient(r, a, p) > 0
                });
                if inside {
                    covered = true;
                    break;
                }
            }
            if covered {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn fast_covering_count_matches_brute_force_on_experiment_data() {
        // Run a small real trial and replicate the count naively.
        let t = ratio("1/10");
        let mut rng = CounterRng::stream(99, 0);
        let mut points = Vec::new();
        for _ in 0..60 {
            let (x, y) = circle_point(&mut rng);
            if rng.next_bit() {
                points.push(Point::new(x, y));
            } else {
                points.push(Point::new(&t * x, &t * y));
            }
        }
        let ps = PointSet::new(points);
        let hull = ps.convex_hull_unchecked();
        let hull_set: BTreeSet<&Point> = hull.points().iter().collect();
        let mut interior: Vec<Point> = ps
            .points()
            .iter()
            .filter(|p| !hull_set.contains(p))
            .cloned()
            .collect();
        interior.sort_by(compare_by_angle);
        let t2 = &t * &t;
        let common = interior.iter().all(|p| &p.x * &p.x + &p.y * &p.y == t2);
        let fast = covering_edge_count(hull.points(), &interior, common);
        let brute = brute_force_covering(hull.points(), &interior);
        assert_eq!(fast, brute);
    }

    #[test]
    fn kernel_distance_is_zero_on_equal_points_and_positive_on_twins() {
        let model = MeasureModel::unit_square();
        let x = Point::new(ratio("1/4"), ratio("1/2"));
        let same = kernel_distance_estimate(&model, &x, &x, 4_000, 3).unwrap();
        assert_eq!(same.mean, 0.0);
        let y = Point::new(ratio("3/4"), ratio("1/2"));
        let apart = kernel_distance_estimate(&model, &x, &y, 20_000, 3).unwrap();
        assert!(
            apart.mean > 3.0 * apart.ci95,
            "distinct interior points look like twins: {apart:?}"
        );
        // Symmetry: the disagreement indicator does not depend on the
        // order of the two centers.
        let swapped = kernel_distance_estimate(&model, &y, &x, 20_000, 3).unwrap();
        assert_eq!(apart.successes, swapped.successes);
        let words = MeasureModel::binary_words(16).unwrap();
        assert!(kernel_distance_estimate(&words, &x, &y, 10, 0).is_err());
    }

    #[test]
    fn sampling_surface_checks_variants() {
        let limit = MeasureModel::two_circles_limit();
        assert!(limit.sample_points(3, 0).is_err());
        let words = MeasureModel::binary_words(16).unwrap();
        assert!(words.sample_points(3, 0).is_err());
        assert_eq!(words.sample_words(5, 1).unwrap().len(), 5);
        let geo = MeasureModel::unit_square();
        assert!(geo.sample_words(5, 1).is_err());
        assert!(MeasureModel::binary_words(2).is_err());
    }

    #[test]
    fn spherical_transform_preserves_codes_under_cayley_rotations() {
        let witnesses: Vec<PointSet> = (3..=5)
            .flat_map(|n| {
                STORE
                    .records(n)
                    .unwrap()
                    .iter()
                    .map(|r| r.witness.clone())
                    .collect::<Vec<_>>()
            })
            .collect();
        let mut rng = CounterRng::new(314);
        for _ in 0..40 {
            let s1 = small_skew(&mut rng);
            let s2 = small_skew(&mut rng);
            let s3 = small_skew(&mut rng);
            let rot = Rotation3::cayley(&s1, &s2, &s3);
            for ps in &witnesses {
                let shrink = shrink_to_quarter_box(ps);
                let transformed = spherical_transform(ps, &rot, &shrink).unwrap();
                let before = Chirotope::of(ps).unwrap().canonical_code();
                let after = Chirotope::of(&transformed).unwrap().canonical_code();
                assert_eq!(before, after);
            }
        }
        // Identity transform returns the same coordinates.
        let ps = STORE.records(5).unwrap()[0].witness.clone();
        let same =
            spherical_transform(&ps, &Rotation3::identity(), &AffineMap::identity()).unwrap();
        assert_eq!(same.points(), ps.points());
    }

    fn small_skew(rng: &mut CounterRng) -> BigRational {
        // Dyadic in [−1/4, 1/4): keeps every lifted quarter-box point in
        // the upper hemisphere for all Cayley rotations of this size.
        (rng.next_dyadic(20) - ratio("1/2")) / BigRational::from_integer(2.into())
    }

    fn shrink_to_quarter_box(ps: &PointSet) -> AffineMap {
        let (lo_x, hi_x, lo_y, hi_y) = bounding_box(ps);
        let range = (&hi_x - &lo_x).max(&hi_y - &lo_y).max(BigRational::one());
        let scale = ratio("1/2") / &range;
        let cx = (&lo_x + &hi_x) / BigRational::from_integer(2.into());
        let cy = (&lo_y + &hi_y) / BigRational::from_integer(2.into());
        AffineMap::new(
            scale.clone(),
            BigRational::zero(),
            BigRational::zero(),
            scale.clone(),
            -(&scale * &cx),
            -(&scale * &cy),
        )
        .expect("shrink map is direct")
    }

    #[test]
    fn spherical_transform_rejects_hemisphere_violations() {
        // A Cayley rotation with parameter 1 about the x-axis rotates by
        // 90°: the new z-coordinate is the old y, so points far below
        // the x-axis leave the hemisphere.
        let rot = Rotation3::cayley(&ratio("1"), &ratio("0"), &ratio("0"));
        let ps = PointSet::from_integer_coords(&[(0, -5), (1, -5), (0, -6)]);
        match spherical_transform(&ps, &rot, &AffineMap::identity()) {
            Err(LimitsError::HemisphereViolation { .. }) => {}
            other => panic!("expected hemisphere violation, got {other:?}"),
        }
        // Degenerate affine maps are rejected at construction.
        assert!(AffineMap::new(
            ratio("1"),
            ratio("0"),
            ratio("0"),
            ratio("-1"),
            ratio("0"),
            ratio("0")
        )
        .is_err());
    }

    #[test]
    fn horizon_rotation_maps_the_positive_halfplane_upward() {
        let rot = horizon_rotation(&ratio("3"), &ratio("4"), &ratio("0")).unwrap();
        // Points strictly inside 3x + 4y > 0 keep their order type.
        let ps = PointSet::from_integer_coords(&[(1, 1), (3, 0), (2, 3), (0, 2)]);
        let transformed = spherical_transform(&ps, &rot, &AffineMap::identity()).unwrap();
        assert_eq!(
            Chirotope::of(&ps).unwrap().canonical_code(),
            Chirotope::of(&transformed).unwrap().canonical_code()
        );
        // A point on the wrong side of the line violates the hemisphere.
        let bad = PointSet::from_integer_coords(&[(-2, -2), (3, 0), (2, 3)]);
        assert!(matches!(
            spherical_transform(&bad, &rot, &AffineMap::identity()),
            Err(LimitsError::HemisphereViolation { .. })
        ));
        // Norms that are not perfect squares are refused.
        assert!(horizon_rotation(&ratio("1"), &ratio("1"), &ratio("0")).is_err());
    }

    #[test]
    fn cayley_rotations_are_exactly_orthogonal() {
        let r = Rotation3::cayley(&ratio("1/3"), &ratio("-2/7"), &ratio("1/11"));
        assert!(r.is_orthogonal());
        let i = Rotation3::identity();
        assert!(i.is_orthogonal());
        // Cayley of zero parameters is the identity.
        let z = Rotation3::cayley(&ratio("0"), &ratio("0"), &ratio("0"));
        assert_eq!(z, i);
    }

    #[test]
    fn crosscheck_agrees_when_flat_and_refuses_otherwise() {
        let convex4 = STORE.convex_code(4).unwrap();
        let report = cantor_vs_words_crosscheck(
            &ratio("1/4"),
            &ratio("1/16"),
            &convex4,
            20_000,
            51,
        )
        .unwrap();
        assert!(
            report.agree,
            "flat Cantor and words disagree: {} vs {}",
            report.cantor.mean, report.words.mean
        );
        // b = a violates 0 < b < a.
        assert!(matches!(
            cantor_vs_words_crosscheck(&ratio("1/4"), &ratio("1/4"), &convex4, 10, 0),
            Err(LimitsError::BadParameter(_))
        ));
        // Valid rectangle parameters that fail the flatness hypothesis.
        assert!(matches!(
            cantor_vs_words_crosscheck(&ratio("2/5"), &ratio("1/10"), &convex4, 10, 0),
            Err(LimitsError::FlatnessViolated { .. })
        ));
    }
}

//! Exact planar primitives: orientation, hulls, convex position, peeling.
//!
//! Every predicate in this module runs on arbitrary-precision rationals.
//! Order-type identity is discrete and brittle — a single misclassified
//! orientation corrupts an entire enumeration — so there is no floating
//! fast path: floating inputs must be promoted to rationals at ingestion.
//!
//! # Example
//!
//! ```
//! use order_flags::geometry::{Point, PointSet, orient};
//!
//! let p = Point::from_integers(0, 0);
//! let q = Point::from_integers(1, 0);
//! let r = Point::from_integers(0, 1);
//! assert_eq!(orient(&p, &q, &r), 1); // counterclockwise
//!
//! let square = PointSet::from_integer_coords(&[(0, 0), (1, 0), (1, 1), (0, 1)]);
//! assert!(square.general_position());
//! assert!(square.convex_position().unwrap());
//! ```

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;
use std::str::FromStr;

/// Errors from geometric operations and the point-set text format.
#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    /// An operation requiring general position was given a degenerate
    /// configuration (a repeated point or a collinear triple).
    #[error("degenerate configuration: point set is not in general position")]
    Degenerate,
    /// A point-set file or string did not match the OTPS v1 format.
    #[error("point set format error: {0}")]
    Format(String),
}

/// A point of the Euclidean plane with exact rational coordinates.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Point {
    /// Dimensionless x coordinate.
    pub x: BigRational,
    /// Dimensionless y coordinate.
    pub y: BigRational,
}

impl Point {
    /// Creates a point from rational coordinates.
    pub fn new(x: BigRational, y: BigRational) -> Self {
        Point { x, y }
    }

    /// Creates a point from integer coordinates.
    pub fn from_integers(x: i64, y: i64) -> Self {
        Point {
            x: BigRational::from_integer(BigInt::from(x)),
            y: BigRational::from_integer(BigInt::from(y)),
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Returns the orientation of the triangle `p q r`.
///
/// The result is the sign of the determinant
///
/// ```text
///     | 1 p.x p.y |
/// det | 1 q.x q.y |
///     | 1 r.x r.y |
/// ```
///
/// `+1` means `r` lies to the left of the directed line `p → q`
/// (counterclockwise), `-1` to the right (clockwise), and `0` that the
/// three points are collinear. The computation is exact.
pub fn orient(p: &Point, q: &Point, r: &Point) -> i8 {
    let det = (&q.x - &p.x) * (&r.y - &p.y) - (&q.y - &p.y) * (&r.x - &p.x);
    rational_sign(&det)
}

/// Sign of a rational as `-1`, `0` or `+1`.
pub fn rational_sign(v: &BigRational) -> i8 {
    if v.is_zero() {
        0
    } else if v.is_positive() {
        1
    } else {
        -1
    }
}

/// An ordered sequence of points.
///
/// The order of the sequence is the labeling: index `i` is the label of
/// `points[i]`. Most operations require *general position* — all points
/// distinct and no three collinear.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointSet {
    points: Vec<Point>,
}

impl PointSet {
    /// Creates a point set from a vector of points.
    pub fn new(points: Vec<Point>) -> Self {
        PointSet { points }
    }

    /// Creates a point set from integer coordinate pairs.
    pub fn from_integer_coords(coords: &[(i64, i64)]) -> Self {
        PointSet {
            points: coords
                .iter()
                .map(|&(x, y)| Point::from_integers(x, y))
                .collect(),
        }
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Whether the set is empty.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The points, in label order.
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// The point with label `i`.
    pub fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    /// Returns the subset of points with the given labels, in the given
    /// order.
    pub fn subset(&self, labels: &[usize]) -> PointSet {
        PointSet {
            points: labels.iter().map(|&i| self.points[i].clone()).collect(),
        }
    }

    /// Tests whether all points are distinct and no three are collinear.
    ///
    /// The empty set and sets of one or two distinct points are in general
    /// position vacuously.
    pub fn general_position(&self) -> bool {
        let n = self.points.len();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.points[i] == self.points[j] {
                    return false;
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    if orient(&self.points[i], &self.points[j], &self.points[k]) == 0 {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Returns the extreme points in counterclockwise cyclic order.
    ///
    /// Sets of at most two points are returned as-is. Fails on degenerate
    /// input.
    pub fn convex_hull(&self) -> Result<PointSet, GeometryError> {
        if !self.general_position() {
            return Err(GeometryError::Degenerate);
        }
        Ok(self.convex_hull_unchecked())
    }

    /// Convex hull of a set already known to be in general position.
    pub(crate) fn convex_hull_unchecked(&self) -> PointSet {
        if self.points.len() <= 2 {
            return self.clone();
        }
        // Andrew's monotone chain on the lexicographically sorted points.
        let mut pts: Vec<&Point> = self.points.iter().collect();
        pts.sort();
        let build = |iter: &mut dyn Iterator<Item = &&Point>| -> Vec<Point> {
            let mut chain: Vec<&Point> = Vec::new();
            for &p in iter {
                while chain.len() >= 2
                    && orient(chain[chain.len() - 2], chain[chain.len() - 1], p) <= 0
                {
                    chain.pop();
                }
                chain.push(p);
            }
            chain.into_iter().cloned().collect()
        };
        let mut lower = build(&mut pts.iter());
        let mut upper = build(&mut pts.iter().rev());
        lower.pop();
        upper.pop();
        lower.append(&mut upper);
        PointSet { points: lower }
    }

    /// Tests whether every point is extreme.
    ///
    /// Sets of at most three points in general position are always in
    /// convex position.
    pub fn convex_position(&self) -> Result<bool, GeometryError> {
        Ok(self.convex_hull()?.len() == self.len())
    }

    /// Number of nonempty layers of iterated convex-hull removal.
    ///
    /// Layer one is the hull of the whole set; each subsequent layer is
    /// the hull of what remains. The empty set has depth `0`.
    pub fn peeling_depth(&self) -> Result<usize, GeometryError> {
        if !self.general_position() {
            return Err(GeometryError::Degenerate);
        }
        let mut remaining = self.clone();
        let mut depth = 0;
        while !remaining.is_empty() {
            let hull = remaining.convex_hull_unchecked();
            remaining = PointSet {
                points: remaining
                    .points
                    .into_iter()
                    .filter(|p| !hull.points.contains(p))
                    .collect(),
            };
            depth += 1;
        }
        Ok(depth)
    }

    /// Serializes the set in the OTPS v1 text format.
    ///
    /// The format is a one-line header `OTPS v1 n=<size>` followed by one
    /// line per point containing `numerator/denominator` for x and y,
    /// separated by a space.
    pub fn to_otps(&self) -> String {
        let mut out = format!("OTPS v1 n={}\n", self.points.len());
        for p in &self.points {
            out.push_str(&format!(
                "{}/{} {}/{}\n",
                p.x.numer(),
                p.x.denom(),
                p.y.numer(),
                p.y.denom()
            ));
        }
        out
    }

    /// Parses a point set from the OTPS v1 text format.
    pub fn from_otps(text: &str) -> Result<PointSet, GeometryError> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| GeometryError::Format("empty input".into()))?;
        let rest = header
            .strip_prefix("OTPS v1 n=")
            .ok_or_else(|| GeometryError::Format(format!("bad header {header:?}")))?;
        let n: usize = rest
            .trim()
            .parse()
            .map_err(|_| GeometryError::Format(format!("bad size in header {header:?}")))?;
        let mut points = Vec::with_capacity(n);
        for line in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let x = parse_rational(parts.next().ok_or_else(|| {
                GeometryError::Format(format!("missing x coordinate in {line:?}"))
            })?)?;
            let y = parse_rational(parts.next().ok_or_else(|| {
                GeometryError::Format(format!("missing y coordinate in {line:?}"))
            })?)?;
            if parts.next().is_some() {
                return Err(GeometryError::Format(format!("trailing data in {line:?}")));
            }
            points.push(Point::new(x, y));
        }
        if points.len() != n {
            return Err(GeometryError::Format(format!(
                "header says {} points, found {}",
                n,
                points.len()
            )));
        }
        Ok(PointSet { points })
    }
}

/// Parses a rational from `p/q` or plain integer form.
pub fn parse_rational(s: &str) -> Result<BigRational, GeometryError> {
    let make = |n: &str| {
        BigInt::from_str(n).map_err(|_| GeometryError::Format(format!("bad integer {n:?}")))
    };
    match s.split_once('/') {
        Some((num, den)) => {
            let den = make(den)?;
            if den.is_zero() {
                return Err(GeometryError::Format(format!("zero denominator in {s:?}")));
            }
            Ok(BigRational::new(make(num)?, den))
        }
        None => Ok(BigRational::from_integer(make(s)?)),
    }
}

/// Formats a rational as `p/q` (always with an explicit denominator).
pub fn format_rational(v: &BigRational) -> String {
    if v.denom().is_one() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

//! Exact flag algebras over planar order types.
//!
//! This crate implements the combinatorial machinery behind density bounds
//! for patterns in planar point sets:
//!
//! * [`geometry`] — exact rational planar primitives (orientation, hulls,
//!   convex position, onion peeling),
//! * [`chirotope`] — orientation tables of labeled point sets and canonical
//!   codes identifying their order types,
//! * [`store`] — exhaustive enumeration of all realizable order types
//!   through size 8, with persistent storage,
//! * [`algebra`] — exact densities, split probabilities, rooted flags, the
//!   flag-algebra product, lifts and the averaging operator,
//! * [`sdp`] — semidefinite programs whose rounded solutions become
//!   rigorous rational bounds after exact verification,
//! * [`limits`] — seedable Monte Carlo models of infinite point-set limits,
//!   cross-checked against the exact calculus.
//!
//! # Example
//!
//! Enumerate order types up to size 5 and compute a density:
//!
//! ```
//! use order_flags::store::OrderTypeStore;
//! use order_flags::algebra::DensityCache;
//!
//! let mut store = OrderTypeStore::new();
//! store.enumerate_up_to(5).unwrap();
//! assert_eq!(store.codes(5).len(), 3);
//!
//! let cache = DensityCache::new(&store);
//! let convex4 = store.convex_code(4).unwrap();
//! let convex5 = store.convex_code(5).unwrap();
//! // Every 4-point subset of a convex pentagon is in convex position.
//! assert_eq!(cache.density(&convex4, &convex5).unwrap(),
//!            num_rational::BigRational::from_integer(1.into()));
//! ```

#![warn(
    missing_docs,
    missing_debug_implementations,
    trivial_casts,
    trivial_numeric_casts,
    unsafe_code,
    unused_import_braces
)]

pub mod algebra;
pub mod chirotope;
pub mod geometry;
pub mod limits;
pub mod sdp;
pub mod store;

pub use chirotope::{CanonicalCode, Chirotope};
pub use geometry::{Point, PointSet};
pub use store::{OrderTypeRecord, OrderTypeStore};

//! Null distance `d̂_τ` on model spacetimes.
//!
//! Given a spacetime and a time function `τ`, the null length of a piecewise
//! causal curve is the total variation of `τ` over its break points, and the
//! null distance is the infimum of null lengths between two events.
//!
//! ```
//! use lorentz_null::models::{SpacetimeModel, SpacetimePoint};
//! use lorentz_null::nulldist::{null_distance, SolverConfig};
//! use lorentz_null::timefuncs::TimeFunction;
//!
//! let m = SpacetimeModel::minkowski(2);
//! let p = SpacetimePoint::new(0.0, vec![0.0, 0.0]);
//! let q = SpacetimePoint::new(0.0, vec![3.0, 4.0]);
//! let b = null_distance(&m, &TimeFunction::coordinate_t(), &p, &q, &SolverConfig::default()).unwrap();
//! assert_eq!((b.lower, b.upper), (5.0, 5.0));
//! ```

pub mod antilip;
pub mod cosmo;
pub mod curves;
pub mod error;
pub mod models;
pub mod nulldist;
pub mod numeric;
pub mod timefuncs;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/time-functions.md")]
    mod time_functions {}
    #[doc = include_str!("../../../book/src/curves.md")]
    mod curves {}
    #[doc = include_str!("../../../book/src/null-distance.md")]
    mod null_distance {}
    #[doc = include_str!("../../../book/src/definiteness.md")]
    mod definiteness {}
    #[doc = include_str!("../../../book/src/cosmological-time.md")]
    mod cosmological_time {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

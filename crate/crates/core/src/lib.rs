//! Exact-arithmetic certification of dynamical properties of continuous
//! piecewise-linear maps on compact rational intervals.
//!
//! Everything is computed over arbitrary-precision rationals; certificates
//! record exact interval containments that can be replayed independently.

pub mod chaos;
pub mod corpus;
pub mod covering;
pub mod interval;
pub mod markov;
pub mod orbits;
pub mod plmap;
pub mod rational;
pub mod scramble;

pub use interval::Interval;
pub use plmap::{FixedKind, MapError, PLMap, PieceBudget};
pub use rational::Rational;

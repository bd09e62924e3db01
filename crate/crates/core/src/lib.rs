pub mod baselines;
pub mod boundary;
pub mod detector;
pub mod error;
pub mod grid;
pub mod integrals;
pub mod montecarlo;
pub mod performance;
pub mod presets;
pub mod real;
pub mod signal;
pub mod special;
pub mod tables;

pub use error::{Result, SsctError};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
pub mod chapter1 {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/detector.md")]
pub mod chapter2 {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/exact.md")]
pub mod chapter3 {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/grid.md")]
pub mod chapter4 {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/simulation.md")]
pub mod chapter5 {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/baselines.md")]
pub mod chapter6 {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
pub mod chapter7 {}

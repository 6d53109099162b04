pub mod archive;
pub mod error;
pub mod estimators;
pub mod harmonic_oracle;
pub mod model;
pub mod pimd_sampler;
pub mod quadrature;
pub mod ring_polymer;
pub mod rpmd;
pub mod special;
pub mod stats;
pub mod thermostat;

pub use error::{Error, Result};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
pub mod chapter0 {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/chain.md")]
pub mod chapter1 {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/ring-polymer.md")]
pub mod chapter2 {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/sampling.md")]
pub mod chapter3 {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/harmonic.md")]
pub mod chapter4 {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/dynamics.md")]
pub mod chapter5 {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/estimators.md")]
pub mod chapter6 {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
pub mod chapter7 {}

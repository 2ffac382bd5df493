//! Exact tools for pointwise Lipschitz analysis of sets on the real line.

pub mod constructions;
pub mod counterexample;
pub mod density;
pub mod error;
mod geom;
pub mod pcw;
pub mod interval_set;
pub mod rational;

pub use error::{Error, Result};
pub use interval_set::{Interval, IntervalSet, MassOracle};
pub use rational::Rational;
pub use pcw::PiecewiseLinear;

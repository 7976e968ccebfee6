//! Construction and computational verification of generalized Sierpinski
//! sponges in Euclidean space and in the Heisenberg group.

pub mod constants;
pub mod connectivity;
pub mod error;
pub mod graph;
pub mod heisenberg;
pub mod isoperimetry;
pub mod measure;
pub mod rational;
pub mod report;
pub mod rng;
pub mod sponge;
pub mod suites;
pub mod uniformity;

pub use error::{Error, Result};
pub use rational::{IntervalQ, Q};
pub use sponge::{BoxQ, PointQ, SpongeSpec, TileId};

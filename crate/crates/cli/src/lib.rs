//! Report rendering shared by the `sponge-lab` binary and its tests.

pub mod output;

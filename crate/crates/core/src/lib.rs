//! Space-filling-curve mesh partitioning with runtime-feedback load balancing.
//!
//! The crate is organised around the pipeline a balancing run goes through:
//!
//! * [`mesh`]: partition-level meshes (centroid + weight per element), full
//!   node/connectivity meshes, synthetic generators and the on-disk formats.
//! * [`sfc`]: Hilbert projection onto a regular bin grid and the weighted 1D
//!   splitting problem, including the chunked (parallel) variant.
//! * [`balance`]: imbalance metrics, per-splitting-point regressions and the
//!   iterative correction-coefficient loop.
//! * [`coexec`]: device profiles, execution plans, the simulated timer and the
//!   closed-form CPU/GPU co-execution efficiency model.
//! * [`assembly`]: packed, zero-padded mass-matrix assembly with an
//!   element-by-element reference implementation and a pack-size sweep.

pub mod assembly;
pub mod balance;
pub mod coexec;
mod error;
pub mod mesh;
pub mod sfc;

pub use error::{Error, ParseError, Result};

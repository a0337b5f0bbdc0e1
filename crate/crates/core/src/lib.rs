//! OpenSHMEM 1.3 runtime for a simulated 2D-mesh many-core, with the
//! collectives and the latency/bandwidth benchmark built on it.

pub mod bench;
pub mod collectives;
pub mod config;
pub mod mesh;
pub mod shmem;

pub use config::{Features, RuntimeConfig};
pub use mesh::{CostModel, Cycles, Mesh, MeshError, Pe};
pub use shmem::{Shmem, ShmemError};

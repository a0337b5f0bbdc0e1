use thiserror::Error;

use crate::mesh::MeshError;

/// Faults raised by the runtime and the collectives.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShmemError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("runtime already initialized on PE {0}")]
    DoubleInit(usize),
    #[error("PE {pe} out of range (n_pes = {n_pes})")]
    PeOutOfRange { pe: usize, n_pes: usize },
    #[error("symmetric heap exhausted: {requested} bytes requested, {available} available")]
    OutOfMemory { requested: usize, available: usize },
    #[error("alignment {0} is not a power of two of at least 8")]
    BadAlignment(usize),
    #[error("no live allocation at offset {0:#x}")]
    NotLive(u32),
    #[error("allocation at {0:#x} is not the last live allocation")]
    NotLast(u32),
    #[error("{len} bytes at offset {offset:#x} run past the local store")]
    Range { offset: u32, len: usize },
    #[error("offset {offset:#x} is not aligned to the {elem_size}-byte element size")]
    Misaligned { offset: u32, elem_size: usize },
    #[error("element size {0} not supported")]
    ElemSize(usize),
    #[error("operation not supported: {0}")]
    Unsupported(&'static str),
    #[error("invalid active set: {0}")]
    ActiveSet(&'static str),
    #[error("PE {pe} is not a member of the active set")]
    NotMember { pe: usize },
    #[error("work array holds {got} elements, at least {need} required")]
    WorkArray { need: usize, got: usize },
    #[error("lock at {lock:#x} released by PE {pe}, which does not hold it")]
    NotHolder { lock: u32, pe: usize },
}

pub type Result<T> = std::result::Result<T, ShmemError>;

use thiserror::Error;

use super::Cycles;

/// Faults raised by the simulated hardware.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("mesh dimensions {rows}x{cols} outside 1..=64 per axis")]
    Dimensions { rows: usize, cols: usize },
    #[error("PE {pe} out of range (n_pes = {n_pes})")]
    PeOutOfRange { pe: usize, n_pes: usize },
    #[error("offset {offset:#x} does not fit the 20-bit offset field")]
    OffsetOverflow { offset: u32 },
    #[error("bus fault: core {core_id:#05x} offset {offset:#x} is not backed by a local store")]
    BusFault { core_id: u16, offset: u32 },
    #[error("alignment fault: {width}-byte access at offset {offset:#x}")]
    Alignment { offset: u32, width: usize },
    #[error("invalid access width {0}")]
    Width(usize),
    #[error("DMA channel {0} is busy")]
    ChannelBusy(usize),
    #[error("invalid DMA descriptor: {0}")]
    Descriptor(&'static str),
    #[error("PE {0} has no interrupt handler registered")]
    NoHandler(usize),
    #[error("transfer not supported: {0}")]
    Unsupported(&'static str),
    #[error("PE {pe} overwrote bytes {offset:#x}..{end:#x} still being read by an in-flight DMA")]
    SourceReuse { pe: usize, offset: u32, end: u32 },
    #[error("simulation stalled: {0}")]
    Stall(StallReport),
    #[error("simulation exceeded {0} cycles")]
    Timeout(Cycles),
    #[error("PE {0} awaited a future that is not a mesh operation")]
    ForeignAwait(usize),
    #[error("cost model field {0} must be positive and finite")]
    InvalidCost(&'static str),
    #[error("interrupt handler on PE {pe} failed: {reason}")]
    Handler { pe: usize, reason: String },
}

/// Why the scheduler could not make progress.
#[derive(Debug, Clone, PartialEq)]
pub struct StallReport {
    pub blocked: Vec<(usize, &'static str, Cycles)>,
    pub finished: Vec<usize>,
}

impl std::fmt::Display for StallReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "blocked [")?;
        for (i, (pe, why, at)) in self.blocked.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "PE{pe} on {why} since cycle {at}")?;
        }
        write!(f, "], finished {:?}", self.finished)
    }
}

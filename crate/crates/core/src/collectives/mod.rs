//! Barriers, broadcast, collect, reductions, all-to-all and global locks.
//!
//! All synchronization goes through caller-provided symmetric pSync arrays of
//! 8-byte words. Flags are never reset: each call on a given (pSync, active
//! set) pair gets a fresh epoch, and a flag is written with the stamp
//! `epoch << 32 | seq`, so a waiter only needs "flag ≥ expected stamp". When
//! a pSync is reused with a different active set it must be zeroed first,
//! exactly as OpenSHMEM requires for re-initialization. Every data collective
//! ends with a barrier over its active set so the pSync may be reused on the
//! next call without racing slow members.

mod alltoall;
mod barrier;
mod broadcast;
mod collect;
mod lock;
mod reduce;

use crate::mesh::Cycles;
use crate::shmem::{Result, Shmem, ShmemError};

pub use barrier::BarrierKind;
pub use reduce::work_array_len;

/// pSync words needed by [`Shmem::barrier`] (enough for 4096 PEs).
pub const BARRIER_SYNC_SIZE: usize = 12;
/// pSync words needed by [`Shmem::broadcast`].
pub const BCAST_SYNC_SIZE: usize = 24;
/// pSync words needed by [`Shmem::reduce`].
pub const REDUCE_SYNC_SIZE: usize = 36;
/// pSync words needed by [`Shmem::collect`] and [`Shmem::fcollect`].
pub const COLLECT_SYNC_SIZE: usize = 24;
/// pSync words needed by [`Shmem::alltoall`].
pub const ALLTOALL_SYNC_SIZE: usize = 12;
/// Minimum pWrk length, in elements, of [`Shmem::reduce`].
pub const REDUCE_MIN_WRKDATA_SIZE: usize = 16;
/// Initial value of every pSync word.
pub const SYNC_VALUE: u64 = 0;

/// `⌈log2 n⌉`, with `ceil_log2(1) = 0`.
pub fn ceil_log2(n: usize) -> usize {
    n.next_power_of_two().trailing_zeros() as usize
}

/// Members `pe_start + k * 2^log_pe_stride` for `k < pe_size`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ActiveSet {
    pub pe_start: usize,
    pub log_pe_stride: u32,
    pub pe_size: usize,
}

impl ActiveSet {
    pub fn new(pe_start: usize, log_pe_stride: u32, pe_size: usize) -> Self {
        Self {
            pe_start,
            log_pe_stride,
            pe_size,
        }
    }

    /// Every PE of an `n`-PE program.
    pub fn all(n: usize) -> Self {
        Self::new(0, 0, n)
    }

    pub fn member(&self, rank: usize) -> usize {
        self.pe_start + (rank << self.log_pe_stride)
    }

    pub fn rank_of(&self, pe: usize) -> Option<usize> {
        let off = pe.checked_sub(self.pe_start)?;
        let stride = 1usize << self.log_pe_stride;
        (off % stride == 0 && off / stride < self.pe_size).then_some(off / stride)
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.pe_size).map(|k| self.member(k))
    }

    pub fn validate(&self, n_pes: usize) -> Result<()> {
        if self.pe_size == 0 {
            return Err(ShmemError::ActiveSet("empty set"));
        }
        if self.log_pe_stride >= usize::BITS - 1
            || self.pe_start + ((self.pe_size - 1) << self.log_pe_stride) >= n_pes
        {
            return Err(ShmemError::ActiveSet("members beyond the last PE"));
        }
        Ok(())
    }
}

fn stamp(epoch: u64, seq: u64) -> u64 {
    epoch << 32 | seq
}

impl Shmem {
    /// Validates `set` and returns this PE's rank in it.
    pub(crate) fn rank_in(&self, set: ActiveSet) -> Result<usize> {
        set.validate(self.n_pes())?;
        set.rank_of(self.my_pe())
            .ok_or(ShmemError::NotMember { pe: self.my_pe() })
    }

    pub(crate) fn check_sync(psync: u32, words: usize) -> Result<()> {
        Self::check_buffer(psync, words * 8, 8)
    }

    /// Writes `value` into the flag word at `slot` on `pe`.
    pub(crate) async fn signal(&self, pe: usize, slot: u32, value: u64) -> Result<()> {
        self.pe
            .write_word(self.pe.addr_of(pe, slot)?, 8, value)
            .await?;
        Ok(())
    }

    /// Spins until the local flag word at `slot` reaches `value`.
    pub(crate) async fn await_flag(&self, slot: u32, value: u64) -> Result<u64> {
        Ok(self.pe.spin_until(slot, 8, |v| v >= value).await?)
    }

    /// Fast-path copy of `nbytes` from local `src` to `dst` on `pe`.
    pub(crate) async fn xfer(&self, src: u32, pe: usize, dst: u32, nbytes: usize) -> Result<()> {
        if nbytes > 0 {
            if dst as usize + nbytes > crate::mesh::LOCAL_MEM_SIZE {
                return Err(ShmemError::Range {
                    offset: dst,
                    len: nbytes,
                });
            }
            self.pe
                .copy(self.pe.local_addr(src)?, self.pe.addr_of(pe, dst)?, nbytes)
                .await?;
        }
        Ok(())
    }

    pub(crate) async fn step(&self) {
        let c: Cycles = self.pe.cost().collective_step();
        self.pe.compute(c).await
    }

    pub(crate) async fn enter(&self) {
        self.pe.compute(self.pe.cost().call_overhead()).await
    }
}

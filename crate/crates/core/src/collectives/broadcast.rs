use super::{ceil_log2, stamp, ActiveSet, BARRIER_SYNC_SIZE, BCAST_SYNC_SIZE};
use crate::shmem::{Result, Shmem, ShmemError};

impl Shmem {
    /// `shmem_broadcast32/64`: copies `nelems` elements of `src` on the member
    /// of rank `pe_root` into `dest` on every other member.
    ///
    /// Binomial tree, farthest first: in round r every holder at relative
    /// rank `k * 2d` sends to `k * 2d + d` with `d = 2^(rounds - 1 - r)`.
    /// The root's `dest` is not written.
    #[allow(clippy::too_many_arguments)]
    pub async fn broadcast(
        &mut self,
        dest: u32,
        src: u32,
        nelems: usize,
        elem_size: usize,
        pe_root: usize,
        set: ActiveSet,
        psync: u32,
    ) -> Result<()> {
        if !matches!(elem_size, 4 | 8) {
            return Err(ShmemError::ElemSize(elem_size));
        }
        let nbytes = nelems * elem_size;
        Self::check_buffer(dest, nbytes, elem_size)?;
        Self::check_buffer(src, nbytes, elem_size)?;
        Self::check_sync(psync, BCAST_SYNC_SIZE)?;
        let rank = self.rank_in(set)?;
        let size = set.pe_size;
        if pe_root >= size {
            return Err(ShmemError::ActiveSet("root outside the active set"));
        }
        self.enter().await;
        if size == 1 {
            return Ok(());
        }
        let flag = stamp(self.next_epoch(psync, set), 1);
        let rel = (rank + size - pe_root) % size;
        if rel != 0 {
            self.await_flag(psync, flag).await?;
        }
        let from = if rel == 0 { src } else { dest };
        let rounds = ceil_log2(size);
        for r in 0..rounds {
            let d = 1 << (rounds - 1 - r);
            if rel.is_multiple_of(2 * d) && rel + d < size {
                self.step().await;
                let to = set.member((rel + d + pe_root) % size);
                self.xfer(from, to, dest, nbytes).await?;
                self.signal(to, psync, flag).await?;
            }
        }
        self.dissemination(
            set,
            psync + 8 * (BCAST_SYNC_SIZE - BARRIER_SYNC_SIZE) as u32,
        )
        .await
    }
}

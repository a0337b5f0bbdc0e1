use super::{ActiveSet, ALLTOALL_SYNC_SIZE};
use crate::shmem::{Result, Shmem, ShmemError};

impl Shmem {
    /// `shmem_alltoall32/64`: block j of `src` on member i lands in block i
    /// of `dest` on member j. Blocks are `nelems` elements.
    ///
    /// Round r sends to rank + r, so at any moment every member targets a
    /// different destination.
    pub async fn alltoall(
        &mut self,
        dest: u32,
        src: u32,
        nelems: usize,
        elem_size: usize,
        set: ActiveSet,
        psync: u32,
    ) -> Result<()> {
        if !matches!(elem_size, 4 | 8) {
            return Err(ShmemError::ElemSize(elem_size));
        }
        let size = set.pe_size;
        let blk = nelems * elem_size;
        Self::check_buffer(dest, blk * size, elem_size)?;
        Self::check_buffer(src, blk * size, elem_size)?;
        Self::check_sync(psync, ALLTOALL_SYNC_SIZE)?;
        let rank = self.rank_in(set)?;
        self.enter().await;
        for r in 0..size {
            let j = (rank + r) % size;
            if r > 0 {
                self.step().await;
            }
            self.xfer(
                src + (j * blk) as u32,
                set.member(j),
                dest + (rank * blk) as u32,
                blk,
            )
            .await?;
        }
        self.quiet().await?;
        self.dissemination(set, psync).await
    }
}

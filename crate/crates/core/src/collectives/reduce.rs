use super::{
    ceil_log2, stamp, ActiveSet, BARRIER_SYNC_SIZE, REDUCE_MIN_WRKDATA_SIZE, REDUCE_SYNC_SIZE,
};
use crate::shmem::{Elem, ReduceOp, Result, Shmem, ShmemError};

// pSync word indices
const READY: u32 = 0; // one per round
const DATA: u32 = 12; // one per round
const RESULT: u32 = 13; // ring only
const BARRIER: u32 = (REDUCE_SYNC_SIZE - BARRIER_SYNC_SIZE) as u32;

fn word(psync: u32, i: u32) -> u32 {
    psync + 8 * i
}

/// Minimum pWrk length, in elements, for reducing `nreduce` elements.
pub fn work_array_len(nreduce: usize) -> usize {
    (nreduce / 2 + 1).max(REDUCE_MIN_WRKDATA_SIZE)
}

fn combine_all<T: Elem>(op: ReduceOp, lower: &[T], upper: &[T]) -> Vec<T> {
    lower
        .iter()
        .zip(upper)
        .map(|(&a, &b)| T::combine(op, a, b).expect("checked op"))
        .collect()
}

impl Shmem {
    /// `shmem_<type>_<op>_to_all`: every member's `dest` receives the
    /// elementwise reduction of all members' `src`.
    ///
    /// Power-of-two sets use recursive doubling, other sizes a ring (reduce
    /// along the ranks, then pass the result around). Data is processed in
    /// chunks of `pwrk_len` elements; partial results are always combined
    /// lower rank first so every member computes bit-identical values.
    #[allow(clippy::too_many_arguments)]
    pub async fn reduce<T: Elem>(
        &mut self,
        op: ReduceOp,
        dest: u32,
        src: u32,
        nreduce: usize,
        set: ActiveSet,
        pwrk: u32,
        pwrk_len: usize,
        psync: u32,
    ) -> Result<()> {
        if T::IS_FLOAT && op.is_bitwise() {
            return Err(ShmemError::Unsupported(
                "bitwise reduction on floating-point types",
            ));
        }
        let need = work_array_len(nreduce);
        if pwrk_len < need {
            return Err(ShmemError::WorkArray {
                need,
                got: pwrk_len,
            });
        }
        Self::check_buffer(dest, nreduce * T::SIZE, T::SIZE)?;
        Self::check_buffer(src, nreduce * T::SIZE, T::SIZE)?;
        Self::check_buffer(pwrk, pwrk_len * T::SIZE, T::SIZE)?;
        Self::check_sync(psync, REDUCE_SYNC_SIZE)?;
        let rank = self.rank_in(set)?;
        self.enter().await;
        let size = set.pe_size;
        let me = self.my_pe();
        if nreduce > 0 && src != dest {
            self.xfer(src, me, dest, nreduce * T::SIZE).await?;
        }
        if size == 1 {
            return Ok(());
        }
        let epoch = self.next_epoch(psync, set);
        for (j, start) in (0..nreduce).step_by(pwrk_len).enumerate() {
            let n = pwrk_len.min(nreduce - start);
            let chunk = dest + (start * T::SIZE) as u32;
            let flag = stamp(epoch, j as u64 + 1);
            if size.is_power_of_two() {
                self.reduce_doubling::<T>(op, chunk, n, set, rank, pwrk, psync, flag)
                    .await?;
            } else {
                self.reduce_ring::<T>(op, chunk, n, set, rank, pwrk, psync, flag)
                    .await?;
            }
        }
        self.dissemination(set, word(psync, BARRIER)).await
    }

    /// Combines `n` elements from local pWrk with the partial in `chunk`.
    async fn absorb<T: Elem>(
        &self,
        op: ReduceOp,
        chunk: u32,
        n: usize,
        pwrk: u32,
        theirs_first: bool,
    ) -> Result<()> {
        let theirs = self.load::<T>(pwrk, n).await?;
        let mine = self.load::<T>(chunk, n).await?;
        let out = if theirs_first {
            combine_all(op, &theirs, &mine)
        } else {
            combine_all(op, &mine, &theirs)
        };
        self.compute(n as u64).await;
        self.store(chunk, &out).await
    }

    #[allow(clippy::too_many_arguments)]
    async fn reduce_doubling<T: Elem>(
        &mut self,
        op: ReduceOp,
        chunk: u32,
        n: usize,
        set: ActiveSet,
        rank: usize,
        pwrk: u32,
        psync: u32,
        flag: u64,
    ) -> Result<()> {
        for r in 0..ceil_log2(set.pe_size) {
            self.step().await;
            let prank = rank ^ (1 << r);
            let partner = set.member(prank);
            // my pWrk is free for this round; wait until the partner's is
            self.signal(partner, word(psync, READY + r as u32), flag)
                .await?;
            self.await_flag(word(psync, READY + r as u32), flag).await?;
            self.xfer(chunk, partner, pwrk, n * T::SIZE).await?;
            self.signal(partner, word(psync, DATA + r as u32), flag)
                .await?;
            self.await_flag(word(psync, DATA + r as u32), flag).await?;
            self.absorb::<T>(op, chunk, n, pwrk, prank < rank).await?;
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    async fn reduce_ring<T: Elem>(
        &mut self,
        op: ReduceOp,
        chunk: u32,
        n: usize,
        set: ActiveSet,
        rank: usize,
        pwrk: u32,
        psync: u32,
        flag: u64,
    ) -> Result<()> {
        let size = set.pe_size;
        let last = size - 1;
        // phase A: partial results flow up the ranks through pWrk
        if rank > 0 {
            self.signal(set.member(rank - 1), word(psync, READY), flag)
                .await?;
            self.await_flag(word(psync, DATA), flag).await?;
            self.absorb::<T>(op, chunk, n, pwrk, true).await?;
        }
        if rank < last {
            self.step().await;
            let next = set.member(rank + 1);
            self.await_flag(word(psync, READY), flag).await?;
            self.xfer(chunk, next, pwrk, n * T::SIZE).await?;
            self.signal(next, word(psync, DATA), flag).await?;
        }
        // phase B: the result travels last -> 0 -> 1 -> ... -> last - 1
        if rank != last {
            self.await_flag(word(psync, RESULT), flag).await?;
        }
        let next = if rank == last { 0 } else { rank + 1 };
        if next != last {
            self.step().await;
            let to = set.member(next);
            self.xfer(chunk, to, chunk, n * T::SIZE).await?;
            self.signal(to, word(psync, RESULT), flag).await?;
        }
        Ok(())
    }
}

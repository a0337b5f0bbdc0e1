use super::{ceil_log2, stamp, ActiveSet, BARRIER_SYNC_SIZE, COLLECT_SYNC_SIZE};
use crate::mesh::LOCAL_MEM_SIZE;
use crate::shmem::{Result, Shmem, ShmemError};

// pSync word indices of the ring
const PREFIX: u32 = 0;
const ARRIVED: u32 = 1;
const META: u32 = 2; // two words, alternating by step
const ACK: u32 = 4;
// recursive doubling uses words 0.. as one flag per round; both end with this barrier
const BARRIER: u32 = (COLLECT_SYNC_SIZE - BARRIER_SYNC_SIZE) as u32;

fn word(psync: u32, i: u32) -> u32 {
    psync + 8 * i
}

impl Shmem {
    /// `shmem_collect32/64`: concatenates each member's `nelems` elements of
    /// `src` into `dest` on every member, in rank order. Counts may differ.
    ///
    /// A chain over the ranks computes the prefix offsets, then blocks travel
    /// around the ring together with their (offset, length) word.
    #[allow(clippy::too_many_arguments)]
    pub async fn collect(
        &mut self,
        dest: u32,
        src: u32,
        nelems: usize,
        elem_size: usize,
        set: ActiveSet,
        psync: u32,
    ) -> Result<()> {
        let (rank, nbytes) = self.collect_checks(dest, src, nelems, elem_size, set, psync)?;
        self.enter().await;
        let size = set.pe_size;
        let epoch = self.next_epoch(psync, set);
        let mut offset = 0u64;
        if size > 1 {
            if rank > 0 {
                let v = self
                    .await_flag(word(psync, PREFIX), stamp(epoch, 0))
                    .await?;
                offset = v & 0xffff_ffff;
            }
            if rank + 1 < size {
                self.step().await;
                let next = offset + nbytes as u64;
                self.signal(
                    set.member(rank + 1),
                    word(psync, PREFIX),
                    stamp(epoch, next),
                )
                .await?;
            }
        }
        if dest as usize + offset as usize + nbytes > LOCAL_MEM_SIZE {
            return Err(ShmemError::Range {
                offset: dest,
                len: offset as usize + nbytes,
            });
        }
        self.ring(dest, src, offset as u32, nbytes, set, rank, epoch, psync)
            .await?;
        self.dissemination(set, word(psync, BARRIER)).await
    }

    /// `shmem_fcollect32/64`: [`Shmem::collect`] with equal counts. Recursive
    /// doubling on power-of-two sets, the ring otherwise.
    pub async fn fcollect(
        &mut self,
        dest: u32,
        src: u32,
        nelems: usize,
        elem_size: usize,
        set: ActiveSet,
        psync: u32,
    ) -> Result<()> {
        let (rank, nbytes) = self.collect_checks(dest, src, nelems, elem_size, set, psync)?;
        let size = set.pe_size;
        Self::check_buffer(dest, nbytes * size, elem_size)?;
        self.enter().await;
        let epoch = self.next_epoch(psync, set);
        let mine = (rank * nbytes) as u32;
        if size.is_power_of_two() {
            self.xfer(src, self.my_pe(), dest + mine, nbytes).await?;
            let flag = stamp(epoch, 1);
            for r in 0..ceil_log2(size) {
                self.step().await;
                let partner = set.member(rank ^ (1 << r));
                // the aligned group of 2^r blocks this PE holds
                let lo = (((rank >> r) << r) * nbytes) as u32;
                self.xfer(dest + lo, partner, dest + lo, nbytes << r)
                    .await?;
                self.signal(partner, word(psync, r as u32), flag).await?;
                self.await_flag(word(psync, r as u32), flag).await?;
            }
            self.dissemination(set, word(psync, BARRIER)).await
        } else {
            self.ring(dest, src, mine, nbytes, set, rank, epoch, psync)
                .await?;
            self.dissemination(set, word(psync, BARRIER)).await
        }
    }

    fn collect_checks(
        &self,
        dest: u32,
        src: u32,
        nelems: usize,
        elem_size: usize,
        set: ActiveSet,
        psync: u32,
    ) -> Result<(usize, usize)> {
        if !matches!(elem_size, 4 | 8) {
            return Err(ShmemError::ElemSize(elem_size));
        }
        let nbytes = nelems * elem_size;
        Self::check_buffer(dest, 0, elem_size)?;
        Self::check_buffer(src, nbytes, elem_size)?;
        Self::check_sync(psync, COLLECT_SYNC_SIZE)?;
        Ok((self.rank_in(set)?, nbytes))
    }

    /// Step s forwards the block that originated s - 1 ranks back. A block is
    /// written straight to its final place in the successor's `dest`, then
    /// its stamped (offset, length) word, then the arrival stamp. Metadata words
    /// alternate by step; the successor acknowledges each one so the sender
    /// never overwrites a word that has not been read.
    #[allow(clippy::too_many_arguments)]
    async fn ring(
        &mut self,
        dest: u32,
        src: u32,
        offset: u32,
        nbytes: usize,
        set: ActiveSet,
        rank: usize,
        epoch: u64,
        psync: u32,
    ) -> Result<()> {
        self.xfer(src, self.my_pe(), dest + offset, nbytes).await?;
        let size = set.pe_size;
        let (next, prev) = (
            set.member((rank + 1) % size),
            set.member((rank + size - 1) % size),
        );
        let mut block = (offset, nbytes as u32);
        for s in 1..size as u64 {
            self.step().await;
            if s >= 3 {
                self.await_flag(word(psync, ACK), stamp(epoch, s - 2))
                    .await?;
            }
            let meta = word(psync, META + (s % 2) as u32);
            self.xfer(dest + block.0, next, dest + block.0, block.1 as usize)
                .await?;
            self.signal(
                next,
                meta,
                stamp(epoch, block.0 as u64 | (block.1 as u64) << 16),
            )
            .await?;
            self.signal(next, word(psync, ARRIVED), stamp(epoch, s))
                .await?;

            self.await_flag(word(psync, ARRIVED), stamp(epoch, s))
                .await?;
            let (m, _) = self.pe.read(self.pe.local_addr(meta)?, 8).await?;
            self.signal(prev, word(psync, ACK), stamp(epoch, s)).await?;
            block = ((m & 0xffff) as u32, ((m >> 16) & 0xffff) as u32);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Features;
    use crate::mesh::{CostModel, Mesh, SimOptions};

    const SRC: u32 = 0x2000;
    const DST: u32 = 0x3000;
    const PSYNC: u32 = 0x6000;

    #[test]
    fn collect_variable_counts() {
        // PE k contributes k elements: offsets 0, 0, 1, 3, 6, ...
        for n in [1usize, 2, 3, 6, 8] {
            let mut m = Mesh::new(1, n, CostModel::default())
                .unwrap()
                .with_options(SimOptions::randomized(n as u64, 7));
            let out = m
                .run(|pe| async move {
                    let mut s = Shmem::init(&pe, Features::default()).await?;
                    let k = s.my_pe();
                    s.store(SRC, &vec![k as u32; k]).await?;
                    s.collect(DST, SRC, k, 4, ActiveSet::all(n), PSYNC).await?;
                    s.collect(DST, SRC, k, 4, ActiveSet::all(n), PSYNC).await?;
                    s.load::<u32>(DST, n * (n - 1) / 2).await
                })
                .unwrap();
            let want: Vec<u32> = (0..n).flat_map(|k| vec![k as u32; k]).collect();
            assert!(out.iter().all(|v| *v == want), "n = {n}");
        }
    }

    #[test]
    fn fcollect_pow2_and_ring() {
        for n in [1usize, 2, 4, 5, 7, 8] {
            let mut m = Mesh::new(1, n, CostModel::default())
                .unwrap()
                .with_options(SimOptions::randomized(3, 7));
            let out = m
                .run(|pe| async move {
                    let mut s = Shmem::init(&pe, Features::default()).await?;
                    let k = s.my_pe() as u64;
                    s.store(SRC, &[k, k + 100, k + 200]).await?;
                    s.fcollect(DST, SRC, 3, 8, ActiveSet::all(n), PSYNC).await?;
                    s.load::<u64>(DST, 3 * n).await
                })
                .unwrap();
            let want: Vec<u64> = (0..n as u64).flat_map(|k| [k, k + 100, k + 200]).collect();
            assert!(out.iter().all(|v| *v == want), "n = {n}");
        }
    }

    #[test]
    fn collect_overflow_faults() {
        let mut m = Mesh::new(1, 4, CostModel::default()).unwrap();
        let err = m
            .run(|pe| async move {
                let mut s = Shmem::init(&pe, Features::default()).await?;
                s.collect(0x7800, SRC, 128, 8, ActiveSet::all(4), PSYNC)
                    .await
            })
            .unwrap_err();
        assert!(matches!(err, ShmemError::Range { .. }));
    }
}

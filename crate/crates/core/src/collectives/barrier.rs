use super::{ceil_log2, stamp, ActiveSet, BARRIER_SYNC_SIZE};
use crate::shmem::{Result, Shmem};

/// Implementation of a whole-program barrier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BarrierKind {
    /// Hardware wired-AND signal.
    Wand,
    /// Software dissemination barrier.
    Dissemination,
    /// Central counter on PE 0, the vendor library baseline.
    Counter,
}

impl BarrierKind {
    pub fn name(self) -> &'static str {
        match self {
            BarrierKind::Wand => "wand",
            BarrierKind::Dissemination => "dissemination",
            BarrierKind::Counter => "counter",
        }
    }
}

impl Shmem {
    /// `shmem_barrier_all`: quiet, then the WAND or dissemination barrier
    /// depending on `use_wand_barrier`.
    pub async fn barrier_all(&mut self) -> Result<()> {
        let kind = if self.features.use_wand_barrier {
            BarrierKind::Wand
        } else {
            BarrierKind::Dissemination
        };
        self.barrier_all_with(kind).await
    }

    /// Whole-program barrier with an explicit implementation.
    pub async fn barrier_all_with(&mut self, kind: BarrierKind) -> Result<()> {
        self.quiet().await?;
        self.enter().await;
        match kind {
            BarrierKind::Wand => {
                self.pe.wand_barrier().await;
                Ok(())
            }
            BarrierKind::Dissemination => {
                let sync = self.layout.barrier_sync;
                self.dissemination(ActiveSet::all(self.n_pes()), sync).await
            }
            BarrierKind::Counter => self.counter_barrier().await,
        }
    }

    /// `shmem_barrier` over `set`, using [`BARRIER_SYNC_SIZE`] words at `psync`.
    pub async fn barrier(&mut self, set: ActiveSet, psync: u32) -> Result<()> {
        Self::check_sync(psync, BARRIER_SYNC_SIZE)?;
        self.rank_in(set)?;
        self.quiet().await?;
        self.enter().await;
        self.dissemination(set, psync).await
    }

    /// Round r: signal rank + 2^r, wait for rank - 2^r. Touches ⌈log2 n⌉ words of `psync`.
    pub(crate) async fn dissemination(&mut self, set: ActiveSet, psync: u32) -> Result<()> {
        let size = set.pe_size;
        if size == 1 {
            return Ok(());
        }
        let rank = self.rank_in(set)?;
        let flag = stamp(self.next_epoch(psync, set), 1);
        for r in 0..ceil_log2(size) {
            self.step().await;
            let slot = psync + 8 * r as u32;
            self.signal(set.member((rank + (1 << r)) % size), slot, flag)
                .await?;
            self.await_flag(slot, flag).await?;
        }
        Ok(())
    }

    /// Every PE increments a counter on PE 0; PE 0 waits for all of them and
    /// writes a release word to the others. The counter is never reset: the
    /// k-th barrier waits for k * n arrivals.
    async fn counter_barrier(&mut self) -> Result<()> {
        let n = self.n_pes();
        if n == 1 {
            return Ok(());
        }
        let (counter, release) = (self.layout.counter, self.layout.release);
        let epoch = self.next_epoch(counter, ActiveSet::all(n));
        self.atomic_inc::<i64>(counter, 0).await?;
        if self.my_pe() == 0 {
            self.await_flag(counter, epoch * n as u64).await?;
            for p in 1..n {
                self.signal(p, release, epoch).await?;
            }
        } else {
            self.await_flag(release, epoch).await?;
        }
        Ok(())
    }
}

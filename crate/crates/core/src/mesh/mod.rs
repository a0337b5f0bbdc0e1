//! Cycle-approximate simulator of a 2D-mesh many-core chip.
//!
//! A [`Mesh`] runs one async program per PE. Programs drive the hardware
//! through a [`Pe`] handle; the kernel interleaves them in simulated time.

mod addr;
mod cost;
mod dma;
mod error;
mod kernel;
mod pe;
mod store;

use std::cell::RefCell;
use std::future::Future;
use std::pin::Pin;
use std::rc::Rc;
use std::task::{Context, Poll, Waker};

pub use addr::{CoreCoord, Geometry, GlobalAddr, LOCAL_MEM_SIZE, MAX_MESH_DIM, OFFSET_BITS};
pub use cost::CostModel;
pub use dma::{DmaChannel, DmaDescriptor, DmaStatus, DMA_CHANNELS};
pub use error::{MeshError, StallReport};
pub use kernel::{HandlerCtx, InterruptHandler, PeStats, Schedule, SimOptions};
pub use pe::Pe;
pub use store::{LocalStore, MemoryLayout};

use kernel::Kernel;

/// Simulated time, in core clock cycles.
pub type Cycles = u64;

/// A rows x cols mesh of cores together with its cost model.
pub struct Mesh {
    geom: Geometry,
    cost: CostModel,
    layout: MemoryLayout,
    opts: SimOptions,
    last: Option<Rc<RefCell<Kernel>>>,
}

impl std::fmt::Debug for Mesh {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Mesh")
            .field("geom", &self.geom)
            .field("cost", &self.cost)
            .field("layout", &self.layout)
            .field("opts", &self.opts)
            .finish_non_exhaustive()
    }
}

impl Mesh {
    pub fn new(rows: usize, cols: usize, cost: CostModel) -> Result<Self, MeshError> {
        let geom = Geometry::new(rows, cols)?;
        cost.validate().map_err(MeshError::InvalidCost)?;
        Ok(Self {
            geom,
            cost,
            layout: MemoryLayout::default(),
            opts: SimOptions::default(),
            last: None,
        })
    }

    pub fn with_options(mut self, opts: SimOptions) -> Self {
        self.opts = opts;
        self
    }

    pub fn with_layout(mut self, layout: MemoryLayout) -> Result<Self, MeshError> {
        layout.validate()?;
        self.layout = layout;
        Ok(self)
    }

    pub fn geometry(&self) -> Geometry {
        self.geom
    }

    pub fn n_pes(&self) -> usize {
        self.geom.n_pes()
    }

    pub fn cost(&self) -> &CostModel {
        &self.cost
    }

    pub fn options(&self) -> SimOptions {
        self.opts
    }

    pub fn set_options(&mut self, opts: SimOptions) {
        self.opts = opts;
    }

    pub fn layout(&self) -> MemoryLayout {
        self.layout
    }

    /// Runs `program` on every PE from a zeroed chip at cycle 0. Returns the
    /// per-PE results, or the first error any PE or the hardware raised.
    pub fn run<F, Fut, T, E>(&mut self, program: F) -> Result<Vec<T>, E>
    where
        F: Fn(Pe) -> Fut,
        Fut: Future<Output = Result<T, E>>,
        E: From<MeshError>,
    {
        let n = self.geom.n_pes();
        let kernel = Rc::new(RefCell::new(Kernel::new(
            self.geom,
            self.cost,
            self.layout,
            self.opts,
        )));
        self.last = Some(kernel.clone());
        let mut tasks: Vec<Option<Pin<Box<Fut>>>> = (0..n)
            .map(|id| Some(Box::pin(program(Pe::new(id, kernel.clone())))))
            .collect();
        let mut results: Vec<Option<T>> = (0..n).map(|_| None).collect();
        let mut cx = Context::from_waker(Waker::noop());

        loop {
            let next = kernel.borrow_mut().select_next().map_err(E::from)?;
            let Some(pe) = next else { break };
            let task = tasks[pe].as_mut().expect("selected PE has a live task");
            match task.as_mut().poll(&mut cx) {
                Poll::Ready(Ok(v)) => {
                    results[pe] = Some(v);
                    tasks[pe] = None;
                    kernel.borrow_mut().finish(pe);
                }
                Poll::Ready(Err(e)) => return Err(e),
                Poll::Pending => {
                    if kernel.borrow().is_running(pe) {
                        return Err(E::from(MeshError::ForeignAwait(pe)));
                    }
                }
            }
        }
        drop(tasks);
        Ok(results
            .into_iter()
            .map(|r| r.expect("every PE finished"))
            .collect())
    }

    fn last_kernel(&self) -> std::cell::Ref<'_, Kernel> {
        self.last.as_ref().expect("mesh has not run yet").borrow()
    }

    /// Local store of `pe` as left by the last run.
    pub fn store(&self, pe: usize) -> LocalStore {
        self.last_kernel().stores[pe].clone()
    }

    /// Final clock of every PE in the last run.
    pub fn clocks(&self) -> Vec<Cycles> {
        self.last_kernel().pes.iter().map(|s| s.clock).collect()
    }

    pub fn stats(&self) -> Vec<PeStats> {
        self.last_kernel()
            .pes
            .iter()
            .map(|s| s.stats.clone())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh(rows: usize, cols: usize) -> Mesh {
        Mesh::new(rows, cols, CostModel::default()).unwrap()
    }

    #[test]
    fn store_then_spin_delivers() {
        let mut m = mesh(2, 2);
        let out = m
            .run(|pe| async move {
                if pe.id() == 0 {
                    let dst = pe.addr_of(3, 0x2000)?;
                    pe.write_word(dst, 8, 42).await?;
                    Ok::<_, MeshError>(0)
                } else if pe.id() == 3 {
                    pe.spin_until(0x2000, 8, |v| v != 0).await
                } else {
                    Ok(0)
                }
            })
            .unwrap();
        assert_eq!(out[3], 42);
        let c = CostModel::default();
        // issue + net + 2 hops, woken on a poll boundary, then one poll
        let delivered = c.store_issue() + c.store_latency(2);
        let clock = m.clocks()[3];
        assert!(
            clock >= delivered && clock <= delivered + 2 * c.poll(),
            "{clock}"
        );
    }

    #[test]
    fn read_sees_own_earlier_store() {
        let mut m = mesh(1, 4);
        let out = m
            .run(|pe| async move {
                if pe.id() != 0 {
                    return Ok::<_, MeshError>(0);
                }
                let a = pe.addr_of(3, 0x3000)?;
                pe.write_word(a, 4, 7).await?;
                Ok(pe.read(a, 4).await?.0)
            })
            .unwrap();
        assert_eq!(out[0], 7);
    }

    #[test]
    fn stores_between_a_pair_stay_ordered() {
        let mut m = mesh(1, 2);
        m.run(|pe| async move {
            if pe.id() == 0 {
                let a = pe.addr_of(1, 0x2000)?;
                for v in 1..=20u64 {
                    pe.write_word(a, 8, v).await?;
                }
                pe.write_word(a.offset_by(8)?, 8, 1).await?;
            } else {
                pe.spin_until(0x2008, 8, |v| v == 1).await?;
                let v = pe.load_bytes(0x2000, 8).await?;
                assert_eq!(u64::from_le_bytes(v.try_into().unwrap()), 20);
            }
            Ok::<_, MeshError>(())
        })
        .unwrap();
    }

    #[test]
    fn wand_releases_together() {
        let mut m = mesh(2, 2);
        let out = m
            .run(|pe| async move {
                pe.compute(10 * pe.id() as Cycles).await;
                Ok::<_, MeshError>(pe.wand_barrier().await)
            })
            .unwrap();
        assert!(out.iter().all(|&t| t == 30 + 60));
    }

    #[test]
    fn wand_single_pe_is_free() {
        let mut m = mesh(1, 1);
        let out = m
            .run(|pe| async move { Ok::<_, MeshError>(pe.wand_barrier().await) })
            .unwrap();
        assert_eq!(out, vec![0]);
    }

    #[test]
    fn deadlock_reports_stall() {
        let mut m = mesh(1, 2);
        let err = m
            .run(|pe| async move {
                if pe.id() == 1 {
                    pe.spin_until(0x2000, 4, |v| v == 1).await?;
                }
                Ok::<_, MeshError>(())
            })
            .unwrap_err();
        match err {
            MeshError::Stall(r) => {
                assert_eq!(r.blocked.len(), 1);
                assert_eq!(r.blocked[0].0, 1);
                assert_eq!(r.finished, vec![0]);
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn dma_moves_data_at_completion() {
        let mut m = mesh(1, 2);
        m.run(|pe| async move {
            if pe.id() == 0 {
                pe.store_bytes(0x2000, &[5u8; 64]).await?;
                let d = DmaDescriptor::contiguous(
                    0,
                    pe.local_addr(0x2000)?,
                    pe.addr_of(1, 0x3000)?,
                    8,
                    8,
                );
                let done = pe.dma_start(d).await?;
                assert_eq!(pe.dma_status(0), DmaStatus::Busy);
                pe.dma_wait(0).await?;
                assert!(pe.now() >= done);
                assert_eq!(pe.dma_status(0), DmaStatus::Idle);
            }
            Ok::<_, MeshError>(())
        })
        .unwrap();
        assert_eq!(&m.store(1).bytes()[0x3000..0x3040], &[5u8; 64]);
    }

    #[test]
    fn strict_mode_catches_source_reuse() {
        let mut m = mesh(1, 2).with_options(SimOptions {
            strict: true,
            ..SimOptions::default()
        });
        let err = m
            .run(|pe| async move {
                if pe.id() == 0 {
                    let d = DmaDescriptor::contiguous(
                        1,
                        pe.local_addr(0x2000)?,
                        pe.addr_of(1, 0x2000)?,
                        32,
                        8,
                    );
                    pe.dma_start(d).await?;
                    pe.store_bytes(0x2010, &[1; 8]).await?;
                }
                Ok::<_, MeshError>(())
            })
            .unwrap_err();
        assert!(matches!(err, MeshError::SourceReuse { pe: 0, .. }));
    }

    #[test]
    fn second_dma_on_busy_channel_faults() {
        let mut m = mesh(1, 2);
        let err = m
            .run(|pe| async move {
                if pe.id() == 0 {
                    let d = DmaDescriptor::contiguous(
                        0,
                        pe.local_addr(0x2000)?,
                        pe.addr_of(1, 0x2000)?,
                        32,
                        8,
                    );
                    pe.dma_start(d).await?;
                    pe.dma_start(d).await?;
                }
                Ok::<_, MeshError>(())
            })
            .unwrap_err();
        assert_eq!(err, MeshError::ChannelBusy(0));
    }

    #[test]
    fn interrupt_handler_runs_on_target() {
        let mut m = mesh(1, 2);
        m.run(|pe| async move {
            if pe.id() == 1 {
                pe.set_interrupt_handler(Box::new(|ctx, req| {
                    ctx.write(req, &9u32.to_le_bytes())?;
                    Ok(())
                }));
            }
            pe.wand_barrier().await;
            if pe.id() == 0 {
                pe.raise_interrupt(1, pe.local_addr(0x2000)?).await?;
                pe.spin_until(0x2000, 4, |v| v == 9).await?;
            }
            Ok::<_, MeshError>(())
        })
        .unwrap();
        let s = m.stats();
        assert_eq!(s[0].interrupts_raised, 1);
        assert_eq!(s[1].interrupts_handled, 1);
    }

    #[test]
    fn misaligned_word_faults() {
        let mut m = mesh(1, 2);
        let err = m
            .run(|pe| async move {
                let a = pe.addr_of(1, 0x2002)?;
                pe.write_word(a, 4, 1).await?;
                Ok::<_, MeshError>(())
            })
            .unwrap_err();
        assert!(matches!(
            err,
            MeshError::Alignment {
                offset: 0x2002,
                width: 4
            }
        ));
    }

    #[test]
    fn testset_is_atomic_across_pes() {
        let mut m = mesh(2, 2).with_options(SimOptions::randomized(3, 5));
        let out = m
            .run(|pe| async move {
                let lock = pe.addr_of(0, 0x2000)?;
                Ok::<_, MeshError>(pe.testset(lock, pe.id() as u32 + 1).await? == 0)
            })
            .unwrap();
        assert_eq!(out.iter().filter(|&&won| won).count(), 1);
    }

    #[test]
    fn invalid_cost_rejected() {
        let c = CostModel {
            clock_hz: 0.0,
            ..CostModel::default()
        };
        assert!(matches!(
            Mesh::new(1, 1, c),
            Err(MeshError::InvalidCost("clock_hz"))
        ));
    }
}

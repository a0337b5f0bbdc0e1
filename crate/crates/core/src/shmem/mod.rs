//! Per-PE OpenSHMEM 1.3 runtime.
//!
//! A [`Shmem`] context wraps the [`Pe`] handle of one PE program. Symmetric
//! objects are named by their local byte offset, which is identical on every
//! PE because all cores run the same program image and allocate collectively.

mod atomic;
mod elem;
mod error;
mod heap;
mod rma;

use std::collections::HashMap;

use crate::collectives::ActiveSet;
use crate::config::Features;
use crate::mesh::{GlobalAddr, Pe, LOCAL_MEM_SIZE};

pub use atomic::AtomicOp;
pub use elem::{AtomicElem, Elem, ReduceOp};
pub use error::{Result, ShmemError};
pub use heap::{SymAlloc, SymHeap, MIN_ALIGN};
pub use rma::Cmp;

/// Gets strictly larger than this many bytes use the interrupt path when
/// `use_ipi_get` is on.
pub const IPI_GET_THRESHOLD: usize = 64;

/// Runtime statics placed between the end of the program image and the heap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RuntimeLayout {
    /// pSync of `barrier_all`.
    pub barrier_sync: u32,
    /// Arrival counter of the counter barrier (used on PE 0).
    pub counter: u32,
    /// Release word of the counter barrier.
    pub release: u32,
    /// Lock words of the atomics: 32-bit int, 64-bit int, float, double.
    pub atomic_locks: u32,
    /// Request block of an IPI get: source offset, length, destination, flag address.
    pub ipi_request: u32,
    pub ipi_flag: u32,
    /// First byte after the statics.
    pub end: u32,
}

impl RuntimeLayout {
    pub fn after(program_end: u32) -> Self {
        let base = program_end.next_multiple_of(8);
        let barrier_sync = base;
        let counter = barrier_sync + 8 * crate::collectives::BARRIER_SYNC_SIZE as u32;
        let release = counter + 8;
        let atomic_locks = release + 8;
        let ipi_request = atomic_locks + 4 * 8;
        let ipi_flag = ipi_request + 16;
        Self {
            barrier_sync,
            counter,
            release,
            atomic_locks,
            ipi_request,
            ipi_flag,
            end: ipi_flag + 8,
        }
    }

    pub fn atomic_lock(&self, slot: usize) -> u32 {
        self.atomic_locks + 8 * slot as u32
    }
}

/// Runtime state of one PE.
pub struct Shmem {
    pub(crate) pe: Pe,
    pub(crate) features: Features,
    pub(crate) layout: RuntimeLayout,
    pub(crate) heap: SymHeap,
    epochs: HashMap<(u32, ActiveSet), u32>,
    next_channel: usize,
}

impl std::fmt::Debug for Shmem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Shmem")
            .field("pe", &self.pe.id())
            .field("features", &self.features)
            .field("heap", &self.heap)
            .finish_non_exhaustive()
    }
}

impl Shmem {
    /// `shmem_init`: sets up the runtime statics and the heap, registers the
    /// IPI-get handler, and synchronizes all PEs.
    pub async fn init(pe: &Pe, features: Features) -> Result<Shmem> {
        if pe.mark_runtime_ready() {
            return Err(ShmemError::DoubleInit(pe.id()));
        }
        let layout = RuntimeLayout::after(pe.program_end());
        pe.set_heap_base(layout.end)?;
        if features.use_ipi_get {
            pe.set_interrupt_handler(Box::new(rma::serve_ipi_get));
        }
        let heap = SymHeap::new(layout.end, pe.stack_limit());
        let mut ctx = Shmem {
            pe: pe.clone_handle(),
            features,
            layout,
            heap,
            epochs: HashMap::new(),
            next_channel: 0,
        };
        pe.compute(pe.cost().call_overhead()).await;
        ctx.barrier_all().await?;
        Ok(ctx)
    }

    pub fn pe(&self) -> &Pe {
        &self.pe
    }

    pub fn my_pe(&self) -> usize {
        self.pe.id()
    }

    pub fn n_pes(&self) -> usize {
        self.pe.n_pes()
    }

    pub fn features(&self) -> Features {
        self.features
    }

    pub fn layout(&self) -> RuntimeLayout {
        self.layout
    }

    pub fn heap(&self) -> &SymHeap {
        &self.heap
    }

    /// Dissemination partners of this PE over all PEs: round r signals `(me + 2^r) mod n`.
    pub fn partners(&self) -> Vec<usize> {
        let n = self.n_pes();
        (0..crate::collectives::ceil_log2(n))
            .map(|r| (self.my_pe() + (1 << r)) % n)
            .collect()
    }

    /// `shmem_ptr`: address of symmetric `offset` on `pe`.
    pub fn ptr(&self, offset: u32, pe: usize) -> Result<GlobalAddr> {
        self.check_pe(pe)?;
        Ok(self.pe.addr_of(pe, offset)?)
    }

    pub(crate) fn check_pe(&self, pe: usize) -> Result<()> {
        if pe >= self.n_pes() {
            return Err(ShmemError::PeOutOfRange {
                pe,
                n_pes: self.n_pes(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_buffer(offset: u32, len: usize, elem_size: usize) -> Result<()> {
        if !matches!(elem_size, 1 | 2 | 4 | 8) {
            return Err(ShmemError::ElemSize(elem_size));
        }
        if !(offset as usize).is_multiple_of(elem_size) {
            return Err(ShmemError::Misaligned { offset, elem_size });
        }
        if offset as usize + len > LOCAL_MEM_SIZE {
            return Err(ShmemError::Range { offset, len });
        }
        Ok(())
    }

    /// Collective epoch for the sync array at `psync` used by `set`; bumped on every call.
    pub(crate) fn next_epoch(&mut self, psync: u32, set: ActiveSet) -> u64 {
        let e = self.epochs.entry((psync, set)).or_insert(0);
        *e += 1;
        *e as u64
    }

    pub(crate) fn next_dma_channel(&mut self) -> usize {
        let c = self.next_channel;
        self.next_channel = (c + 1) % crate::mesh::DMA_CHANNELS;
        c
    }

    // -----------------------------------------------------------------
    // symmetric heap

    async fn publish_brk(&mut self) -> Result<()> {
        self.pe.set_heap_brk(self.heap.brk())?;
        self.barrier_all().await
    }

    /// `shmem_malloc`; collective, implies a barrier.
    pub async fn malloc(&mut self, size: usize) -> Result<SymAlloc> {
        self.pe.compute(self.pe.cost().call_overhead()).await;
        let a = self.heap.malloc(size)?;
        self.publish_brk().await?;
        Ok(a)
    }

    /// `shmem_align`; collective, implies a barrier.
    pub async fn align(&mut self, alignment: usize, size: usize) -> Result<SymAlloc> {
        self.pe.compute(self.pe.cost().call_overhead()).await;
        let a = self.heap.align(alignment, size)?;
        self.publish_brk().await?;
        Ok(a)
    }

    /// `shmem_realloc` of the most recent allocation; collective, implies a barrier.
    pub async fn realloc(&mut self, alloc: SymAlloc, new_size: usize) -> Result<SymAlloc> {
        self.pe.compute(self.pe.cost().call_overhead()).await;
        let a = self.heap.realloc(alloc.offset, new_size)?;
        self.publish_brk().await?;
        Ok(a)
    }

    /// `shmem_free`: releases `alloc` and everything allocated after it.
    /// Local only; callers must make sure no PE still accesses the memory.
    pub async fn free(&mut self, alloc: SymAlloc) -> Result<()> {
        self.pe.compute(self.pe.cost().call_overhead()).await;
        self.heap.free(alloc.offset)?;
        self.pe.set_heap_brk(self.heap.brk())?;
        Ok(())
    }

    // -----------------------------------------------------------------
    // local buffers

    /// Writes `values` into this PE's store at `offset`.
    pub async fn store<T: Elem>(&self, offset: u32, values: &[T]) -> Result<()> {
        Self::check_buffer(offset, values.len() * T::SIZE, T::SIZE)?;
        Ok(self.pe.store_bytes(offset, &T::encode(values)).await?)
    }

    /// Reads `n` elements from this PE's store at `offset`.
    pub async fn load<T: Elem>(&self, offset: u32, n: usize) -> Result<Vec<T>> {
        Self::check_buffer(offset, n * T::SIZE, T::SIZE)?;
        Ok(T::decode(&self.pe.load_bytes(offset, n * T::SIZE).await?))
    }

    pub async fn store_bytes(&self, offset: u32, data: &[u8]) -> Result<()> {
        Ok(self.pe.store_bytes(offset, data).await?)
    }

    pub async fn load_bytes(&self, offset: u32, len: usize) -> Result<Vec<u8>> {
        Ok(self.pe.load_bytes(offset, len).await?)
    }

    /// Charges `cycles` of local work.
    pub async fn compute(&self, cycles: crate::mesh::Cycles) {
        self.pe.compute(cycles).await
    }

    pub fn now(&self) -> crate::mesh::Cycles {
        self.pe.now()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{CostModel, Mesh};

    fn run<T: 'static>(
        rows: usize,
        cols: usize,
        f: impl AsyncFn(Shmem) -> Result<T>,
    ) -> Result<Vec<T>> {
        let mut m = Mesh::new(rows, cols, CostModel::default()).unwrap();
        m.run(|pe| {
            let f = &f;
            async move {
                let ctx = Shmem::init(&pe, Features::default()).await?;
                f(ctx).await
            }
        })
    }

    #[test]
    fn init_reports_ids() {
        let out = run(4, 4, async |s| {
            Ok((s.my_pe(), s.n_pes(), s.partners().len()))
        })
        .unwrap();
        for (i, (me, n, rounds)) in out.into_iter().enumerate() {
            assert_eq!((me, n, rounds), (i, 16, 4));
        }
    }

    #[test]
    fn double_init_faults() {
        let mut m = Mesh::new(1, 2, CostModel::default()).unwrap();
        let err = m
            .run(|pe| async move {
                Shmem::init(&pe, Features::default()).await?;
                Shmem::init(&pe, Features::default()).await?;
                Ok::<_, ShmemError>(())
            })
            .unwrap_err();
        assert!(matches!(err, ShmemError::DoubleInit(_)));
    }

    #[test]
    fn ptr_encodes_symmetric_address() {
        let out = run(4, 4, async |s| {
            Ok((s.ptr(0x4000, 0)?.packed(), s.ptr(0x4000, 5)?.packed()))
        })
        .unwrap();
        assert_eq!(out[3], (0x0000_4000, 0x0410_4000));
        let err = run(1, 2, async |s| s.ptr(0, 2)).unwrap_err();
        assert_eq!(err, ShmemError::PeOutOfRange { pe: 2, n_pes: 2 });
    }

    #[test]
    fn heap_is_symmetric_and_published() {
        let out = run(2, 2, async |mut s| {
            let a = s.malloc(64).await?;
            let b = s.align(64, 8).await?;
            let brk = s.pe().heap_base();
            s.free(a).await?;
            Ok((a.offset, b.offset, brk, s.heap().brk()))
        })
        .unwrap();
        assert!(out.windows(2).all(|w| w[0] == w[1]));
        let (a, b, base, brk) = out[0];
        assert_eq!(base, RuntimeLayout::after(0x1400).end);
        assert_eq!(a, base);
        assert_eq!(b % 64, 0);
        assert_eq!(brk, a);
    }

    #[test]
    fn statics_do_not_overlap() {
        let l = RuntimeLayout::after(0x1400);
        let regions = [
            (l.barrier_sync, l.counter),
            (l.counter, l.release),
            (l.release, l.atomic_locks),
            (l.atomic_locks, l.ipi_request),
            (l.ipi_request, l.ipi_flag),
            (l.ipi_flag, l.end),
        ];
        for (lo, hi) in regions {
            assert!(lo < hi && lo % 8 == 0);
        }
    }
}

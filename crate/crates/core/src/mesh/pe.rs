use std::cell::RefCell;
use std::future::Future;
use std::pin::Pin;
use std::rc::Rc;
use std::task::{Context, Poll};

use super::addr::{CoreCoord, Geometry, GlobalAddr};
use super::dma::{DmaDescriptor, DmaStatus};
use super::kernel::{InterruptHandler, Kernel, PeStats};
use super::{CostModel, Cycles, MeshError};

/// Handle through which one PE program drives the simulated hardware.
///
/// Every method that touches memory or time is `async`: awaiting it yields to
/// the scheduler until this PE is the earliest runnable core, then performs
/// the operation at the PE's current cycle.
pub struct Pe {
    id: usize,
    kernel: Rc<RefCell<Kernel>>,
}

struct Grant<'a> {
    pe: &'a Pe,
    requested: bool,
}

impl Future for Grant<'_> {
    type Output = ();

    fn poll(mut self: Pin<&mut Self>, _cx: &mut Context<'_>) -> Poll<()> {
        let id = self.pe.id;
        let mut k = self.pe.kernel.borrow_mut();
        if !self.requested {
            self.requested = true;
            if k.request(id) {
                return Poll::Ready(());
            }
            return Poll::Pending;
        }
        if k.is_granted(id) {
            Poll::Ready(())
        } else {
            Poll::Pending
        }
    }
}

impl Pe {
    pub(crate) fn new(id: usize, kernel: Rc<RefCell<Kernel>>) -> Self {
        Self { id, kernel }
    }

    /// Second handle to the same PE, for runtime layers that wrap it.
    pub(crate) fn clone_handle(&self) -> Pe {
        Pe {
            id: self.id,
            kernel: self.kernel.clone(),
        }
    }

    /// Yield until this PE may act at its current clock.
    async fn turn(&self) {
        Grant {
            pe: self,
            requested: false,
        }
        .await
    }

    /// Wait after the kernel blocked this PE.
    async fn resume(&self) {
        Grant {
            pe: self,
            requested: true,
        }
        .await
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn n_pes(&self) -> usize {
        self.kernel.borrow().geom.n_pes()
    }

    pub fn geometry(&self) -> Geometry {
        self.kernel.borrow().geom
    }

    pub fn coord(&self) -> CoreCoord {
        self.geometry()
            .coord_of(self.id)
            .expect("own PE is on the mesh")
    }

    pub fn cost(&self) -> CostModel {
        self.kernel.borrow().cost
    }

    pub fn strict(&self) -> bool {
        self.kernel.borrow().opts.strict
    }

    /// This PE's cycle counter.
    pub fn now(&self) -> Cycles {
        self.kernel.borrow().pes[self.id].clock
    }

    pub fn stats(&self) -> PeStats {
        self.kernel.borrow().pes[self.id].stats.clone()
    }

    /// Global address of `offset` in this PE's own store.
    pub fn local_addr(&self, offset: u32) -> Result<GlobalAddr, MeshError> {
        self.geometry().encode(self.id, offset)
    }

    pub fn addr_of(&self, pe: usize, offset: u32) -> Result<GlobalAddr, MeshError> {
        self.geometry().encode(pe, offset)
    }

    pub fn heap_base(&self) -> u32 {
        self.kernel.borrow().stores[self.id].heap_base()
    }

    pub fn stack_limit(&self) -> u32 {
        self.kernel.borrow().stores[self.id].stack_limit()
    }

    pub fn program_end(&self) -> u32 {
        self.kernel.borrow().stores[self.id].program_end()
    }

    pub fn set_heap_base(&self, base: u32) -> Result<(), MeshError> {
        self.kernel.borrow_mut().stores[self.id].set_heap_base(base)
    }

    pub fn set_heap_brk(&self, brk: u32) -> Result<(), MeshError> {
        self.kernel.borrow_mut().stores[self.id].set_heap_brk(brk)
    }

    /// Marks the runtime as initialized on this PE; returns whether it already was.
    pub fn mark_runtime_ready(&self) -> bool {
        let mut k = self.kernel.borrow_mut();
        std::mem::replace(&mut k.pes[self.id].runtime_ready, true)
    }

    pub fn set_interrupt_handler(&self, handler: InterruptHandler) {
        self.kernel.borrow_mut().set_handler(self.id, Some(handler));
    }

    /// Local computation that takes `cycles`.
    pub async fn compute(&self, cycles: Cycles) {
        self.turn().await;
        self.kernel.borrow_mut().charge(self.id, cycles);
    }

    /// Fire-and-forget store of 1, 2, 4 or 8 bytes. Returns the issue cost.
    pub async fn write(&self, dst: GlobalAddr, data: &[u8]) -> Result<Cycles, MeshError> {
        self.turn().await;
        let mut k = self.kernel.borrow_mut();
        let at = k.pes[self.id].clock;
        let cost = k.store_word(self.id, at, dst, data)?;
        k.charge(self.id, cost);
        Ok(cost)
    }

    pub async fn write_word(
        &self,
        dst: GlobalAddr,
        width: usize,
        value: u64,
    ) -> Result<Cycles, MeshError> {
        if !matches!(width, 1 | 2 | 4 | 8) {
            return Err(MeshError::Width(width));
        }
        self.write(dst, &value.to_le_bytes()[..width]).await
    }

    /// Linearize a request to `target` after this PE's earlier stores to it.
    /// Returns the issue cycle.
    async fn reach(&self, target: usize) -> Cycles {
        self.turn().await;
        let (issued, arrival) = {
            let k = self.kernel.borrow();
            (k.pes[self.id].clock, k.arrival(self.id, target))
        };
        if arrival > issued {
            self.kernel
                .borrow_mut()
                .set_clock_at_least(self.id, arrival);
            self.turn().await;
        }
        issued
    }

    fn settle(&self, issued: Cycles, stall: Cycles) {
        let mut k = self.kernel.borrow_mut();
        let now = k.pes[self.id].clock;
        let done = (issued + stall).max(now + stall / 2);
        k.charge(self.id, done - now);
    }

    /// Stalling load. Returns the little-endian word and the stall charged.
    pub async fn read(&self, src: GlobalAddr, width: usize) -> Result<(u64, Cycles), MeshError> {
        let (target, _) = self.kernel.borrow().decode(src)?;
        let issued = self.reach(target).await;
        let (value, stall) = self.kernel.borrow_mut().load_word(self.id, src, width)?;
        self.settle(issued, stall);
        Ok((value, stall))
    }

    /// Atomic test-and-set: writes `value` if the word is zero. Returns the old word.
    pub async fn testset(&self, target: GlobalAddr, value: u32) -> Result<u32, MeshError> {
        let (on, _) = self.kernel.borrow().decode(target)?;
        let issued = self.reach(on).await;
        let (old, stall) = self.kernel.borrow_mut().testset(self.id, target, value)?;
        self.settle(issued, stall);
        Ok(old)
    }

    /// Hardware-loop block copy. Either the source must be in this PE's store
    /// (fast store path) or the destination must be (stalling load path).
    pub async fn copy(
        &self,
        src: GlobalAddr,
        dst: GlobalAddr,
        len: usize,
    ) -> Result<Cycles, MeshError> {
        let geom = self.geometry();
        let (src_pe, src_off) = geom.decode(src)?;
        let (dst_pe, dst_off) = geom.decode(dst)?;
        if src_pe == self.id {
            self.turn().await;
            let mut k = self.kernel.borrow_mut();
            let at = k.pes[self.id].clock;
            let cost = k.copy_out(self.id, at, src_off, dst, len)?;
            k.charge(self.id, cost);
            Ok(cost)
        } else if dst_pe == self.id {
            let issued = self.reach(src_pe).await;
            let stall = self
                .kernel
                .borrow_mut()
                .copy_in(self.id, src, dst_off, len)?;
            self.settle(issued, stall);
            Ok(stall)
        } else {
            Err(MeshError::Unsupported("copy between two remote stores"))
        }
    }

    /// Read bytes from this PE's own store through the copy loop.
    pub async fn load_bytes(&self, offset: u32, len: usize) -> Result<Vec<u8>, MeshError> {
        self.turn().await;
        let mut k = self.kernel.borrow_mut();
        let data = k.stores[self.id].read(offset, len)?.to_vec();
        let cost = k
            .cost
            .fast_copy(len, offset.is_multiple_of(8) && len.is_multiple_of(8));
        k.charge(self.id, cost);
        Ok(data)
    }

    /// Write bytes into this PE's own store through the copy loop.
    pub async fn store_bytes(&self, offset: u32, data: &[u8]) -> Result<(), MeshError> {
        self.turn().await;
        let mut k = self.kernel.borrow_mut();
        let cost = k.store_local(self.id, offset, data)?;
        k.charge(self.id, cost);
        Ok(())
    }

    /// Start a DMA transfer. Returns the cycle at which it completes.
    pub async fn dma_start(&self, desc: DmaDescriptor) -> Result<Cycles, MeshError> {
        self.turn().await;
        let mut k = self.kernel.borrow_mut();
        let cost = k.dma_start(self.id, desc)?;
        let completion = k.pes[self.id].dma[desc.channel].completion_time();
        k.charge(self.id, cost);
        Ok(completion)
    }

    /// One read of a channel's status register.
    pub async fn dma_poll(&self, channel: usize) -> Result<DmaStatus, MeshError> {
        if channel >= super::dma::DMA_CHANNELS {
            return Err(MeshError::Descriptor("channel must be 0 or 1"));
        }
        self.turn().await;
        let mut k = self.kernel.borrow_mut();
        let status = k.dma_status(self.id, channel);
        k.pes[self.id].stats.polls += 1;
        let poll = k.cost.poll();
        k.charge(self.id, poll);
        Ok(status)
    }

    /// Current status without spending cycles (for inspection only).
    pub fn dma_status(&self, channel: usize) -> DmaStatus {
        self.kernel.borrow().dma_status(self.id, channel)
    }

    pub fn dma_completion(&self, channel: usize) -> Cycles {
        self.kernel.borrow().pes[self.id].dma[channel].completion_time()
    }

    /// Spin on a channel's status register until it reads idle.
    pub async fn dma_wait(&self, channel: usize) -> Result<Cycles, MeshError> {
        if channel >= super::dma::DMA_CHANNELS {
            return Err(MeshError::Descriptor("channel must be 0 or 1"));
        }
        self.turn().await;
        let mut k = self.kernel.borrow_mut();
        let spent = k.dma_wait(self.id, channel);
        k.charge(self.id, spent);
        Ok(spent)
    }

    /// Stall until every store this PE has issued has been delivered.
    pub async fn drain_stores(&self) {
        self.turn().await;
        let mut k = self.kernel.borrow_mut();
        let pending = k.pending_stores(self.id);
        k.set_clock_at_least(self.id, pending);
    }

    /// Whole-chip WAND barrier. Returns this PE's completion cycle.
    pub async fn wand_barrier(&self) -> Cycles {
        self.turn().await;
        if self.n_pes() == 1 {
            return self.now();
        }
        let released = self.kernel.borrow_mut().wand_enter(self.id);
        if !released {
            self.resume().await;
        }
        self.now()
    }

    /// Signal `target`'s user interrupt, passing `request` to its handler.
    pub async fn raise_interrupt(
        &self,
        target: usize,
        request: GlobalAddr,
    ) -> Result<(), MeshError> {
        self.turn().await;
        let mut k = self.kernel.borrow_mut();
        let cost = k.raise_interrupt(self.id, target, request)?;
        k.charge(self.id, cost);
        Ok(())
    }

    /// Spin on a word of this PE's store until `pred` holds. Returns the word seen.
    pub async fn spin_until(
        &self,
        offset: u32,
        width: usize,
        pred: impl Fn(u64) -> bool,
    ) -> Result<u64, MeshError> {
        self.turn().await;
        loop {
            let seen = self
                .kernel
                .borrow_mut()
                .spin_check(self.id, offset, width, &pred)?;
            if let Some(v) = seen {
                return Ok(v);
            }
            self.resume().await;
        }
    }
}

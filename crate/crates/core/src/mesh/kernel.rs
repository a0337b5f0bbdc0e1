//! Event queue, scheduler and the memory system behind every mesh operation.
//!
//! The kernel is conservative: it only lets the PE with the smallest clock run,
//! and applies every queued event stamped at or before that clock first. A PE
//! therefore never observes memory "from the future" and never misses a store
//! that was delivered before its own current cycle.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::addr::{Geometry, GlobalAddr, LOCAL_MEM_SIZE};
use super::dma::{DmaChannel, DmaDescriptor, DmaStatus, DMA_CHANNELS};
use super::error::StallReport;
use super::store::{check_width, LocalStore, MemoryLayout};
use super::{CostModel, Cycles, MeshError};

/// How the scheduler orders PEs that are ready at the same cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// Exact costs; simultaneous PEs are ordered by a seeded RNG.
    Deterministic { seed: u64 },
    /// Every operation is charged up to `max_jitter` extra cycles, drawn from
    /// a seeded RNG. Used to explore interleavings.
    Randomized { seed: u64, max_jitter: Cycles },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimOptions {
    pub schedule: Schedule,
    /// Fault when a PE overwrites the source of one of its in-flight DMAs.
    pub strict: bool,
    /// Abort the run once any PE's clock passes this cycle.
    pub max_cycles: Cycles,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            schedule: Schedule::Deterministic { seed: 0 },
            strict: false,
            max_cycles: 1 << 40,
        }
    }
}

impl SimOptions {
    pub fn seeded(seed: u64) -> Self {
        Self {
            schedule: Schedule::Deterministic { seed },
            ..Self::default()
        }
    }

    pub fn randomized(seed: u64, max_jitter: Cycles) -> Self {
        Self {
            schedule: Schedule::Randomized { seed, max_jitter },
            ..Self::default()
        }
    }
}

/// Per-PE operation counters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PeStats {
    pub stores: u64,
    pub loads: u64,
    pub testsets: u64,
    pub copies: u64,
    pub remote_read_copies: u64,
    pub dma_starts: u64,
    pub polls: u64,
    pub spin_wakeups: u64,
    pub interrupts_raised: u64,
    pub interrupts_handled: u64,
    pub wand_barriers: u64,
}

/// Handler for the single user-interrupt line of a core. Receives the address
/// the raising PE passed along.
pub type InterruptHandler =
    Box<dyn FnMut(&mut HandlerCtx<'_>, GlobalAddr) -> Result<(), MeshError>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Block {
    Store,
    Wand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PeState {
    Requesting,
    Running,
    Blocked(Block),
    Finished,
}

pub(crate) struct PeSlot {
    pub clock: Cycles,
    pub state: PeState,
    spin_origin: Cycles,
    irq_busy_until: Cycles,
    pub dma: [DmaChannel; DMA_CHANNELS],
    handler: Option<InterruptHandler>,
    pub stats: PeStats,
    /// Latest delivery time of any store this PE has issued.
    pending_stores: Cycles,
    pub runtime_ready: bool,
}

impl PeSlot {
    fn new() -> Self {
        Self {
            clock: 0,
            state: PeState::Requesting,
            spin_origin: 0,
            irq_busy_until: 0,
            dma: Default::default(),
            handler: None,
            stats: PeStats::default(),
            pending_stores: 0,
            runtime_ready: false,
        }
    }
}

enum Event {
    Deliver {
        to: usize,
        offset: u32,
        data: Vec<u8>,
    },
    DmaComplete {
        pe: usize,
        channel: usize,
    },
    Interrupt {
        from: usize,
        target: usize,
        request: GlobalAddr,
    },
}

struct Scheduled {
    time: Cycles,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // BinaryHeap is a max-heap; invert for earliest-first.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

#[derive(Default)]
struct WandState {
    entered: usize,
    last_entry: Cycles,
    waiters: Vec<usize>,
}

pub(crate) struct Kernel {
    pub geom: Geometry,
    pub cost: CostModel,
    pub opts: SimOptions,
    rng: ChaCha8Rng,
    pub pes: Vec<PeSlot>,
    pub stores: Vec<LocalStore>,
    events: BinaryHeap<Scheduled>,
    seq: u64,
    last_delivery: HashMap<(usize, usize), Cycles>,
    wand: WandState,
    granted: Option<usize>,
}

impl Kernel {
    pub fn new(geom: Geometry, cost: CostModel, layout: MemoryLayout, opts: SimOptions) -> Self {
        let seed = match opts.schedule {
            Schedule::Deterministic { seed } | Schedule::Randomized { seed, .. } => seed,
        };
        let n = geom.n_pes();
        Self {
            geom,
            cost,
            opts,
            rng: ChaCha8Rng::seed_from_u64(seed),
            pes: (0..n).map(|_| PeSlot::new()).collect(),
            stores: (0..n).map(|_| LocalStore::new(layout)).collect(),
            events: BinaryHeap::new(),
            seq: 0,
            last_delivery: HashMap::new(),
            wand: WandState::default(),
            granted: None,
        }
    }

    // ---------------------------------------------------------------------
    // scheduling

    /// Advances `pe`'s clock by `cycles`, plus jitter in randomized mode.
    pub fn charge(&mut self, pe: usize, cycles: Cycles) {
        let jitter = match self.opts.schedule {
            Schedule::Randomized { max_jitter, .. } if max_jitter > 0 => {
                self.rng.random_range(0..=max_jitter)
            }
            _ => 0,
        };
        self.pes[pe].clock += cycles + jitter;
    }

    pub fn set_clock_at_least(&mut self, pe: usize, t: Cycles) {
        let slot = &mut self.pes[pe];
        slot.clock = slot.clock.max(t);
    }

    /// Parks `pe` as ready to run at its clock. Returns true if it may proceed
    /// immediately: it is strictly earlier than every other ready PE and no
    /// event is due at or before its clock.
    pub fn request(&mut self, pe: usize) -> bool {
        self.granted = None;
        let clock = self.pes[pe].clock;
        let event_due = self.events.peek().is_some_and(|e| e.time <= clock);
        let earlier_peer = self
            .pes
            .iter()
            .enumerate()
            .any(|(i, s)| i != pe && s.state == PeState::Requesting && s.clock <= clock);
        if !event_due && !earlier_peer && clock <= self.opts.max_cycles {
            self.pes[pe].state = PeState::Running;
            self.granted = Some(pe);
            true
        } else {
            self.pes[pe].state = PeState::Requesting;
            false
        }
    }

    pub fn is_granted(&self, pe: usize) -> bool {
        self.granted == Some(pe) && self.pes[pe].state == PeState::Running
    }

    pub fn is_running(&self, pe: usize) -> bool {
        self.pes[pe].state == PeState::Running
    }

    pub fn finish(&mut self, pe: usize) {
        self.pes[pe].state = PeState::Finished;
        self.granted = None;
    }

    fn block(&mut self, pe: usize, why: Block) {
        self.pes[pe].state = PeState::Blocked(why);
        self.granted = None;
    }

    /// Picks the next PE to run, applying due events on the way.
    pub fn select_next(&mut self) -> Result<Option<usize>, MeshError> {
        loop {
            let mut best: Option<Cycles> = None;
            for s in &self.pes {
                if s.state == PeState::Requesting {
                    best = Some(best.map_or(s.clock, |b: Cycles| b.min(s.clock)));
                }
            }
            let next_event = self.events.peek().map(|e| e.time);
            match (best, next_event) {
                (None, Some(_)) => {
                    let ev = self.events.pop().expect("peeked");
                    self.apply(ev)?;
                }
                (Some(tr), Some(te)) if te <= tr => {
                    let ev = self.events.pop().expect("peeked");
                    self.apply(ev)?;
                }
                (Some(tr), _) => {
                    if tr > self.opts.max_cycles {
                        return Err(MeshError::Timeout(self.opts.max_cycles));
                    }
                    let ties: Vec<usize> = self
                        .pes
                        .iter()
                        .enumerate()
                        .filter(|(_, s)| s.state == PeState::Requesting && s.clock == tr)
                        .map(|(i, _)| i)
                        .collect();
                    let pick = if ties.len() == 1 {
                        ties[0]
                    } else {
                        ties[self.rng.random_range(0..ties.len())]
                    };
                    self.pes[pick].state = PeState::Running;
                    self.granted = Some(pick);
                    return Ok(Some(pick));
                }
                (None, None) => {
                    let blocked: Vec<_> = self
                        .pes
                        .iter()
                        .enumerate()
                        .filter_map(|(i, s)| match s.state {
                            PeState::Blocked(Block::Store) => {
                                Some((i, "local store spin", s.spin_origin))
                            }
                            PeState::Blocked(Block::Wand) => Some((i, "WAND barrier", s.clock)),
                            _ => None,
                        })
                        .collect();
                    if blocked.is_empty() {
                        return Ok(None);
                    }
                    let finished = (0..self.pes.len())
                        .filter(|&i| self.pes[i].state == PeState::Finished)
                        .collect();
                    return Err(MeshError::Stall(StallReport { blocked, finished }));
                }
            }
        }
    }

    fn push(&mut self, time: Cycles, event: Event) {
        self.seq += 1;
        self.events.push(Scheduled {
            time,
            seq: self.seq,
            event,
        });
    }

    fn apply(&mut self, ev: Scheduled) -> Result<(), MeshError> {
        let time = ev.time;
        match ev.event {
            Event::Deliver { to, offset, data } => {
                self.stores[to].write(offset, &data)?;
                self.wake(to, time);
            }
            Event::DmaComplete { pe, channel } => {
                let desc = self.pes[pe].dma[channel]
                    .active
                    .take()
                    .expect("completion of idle channel");
                self.move_dma_data(&desc)?;
                let (dst_pe, _) = self.geom.decode(desc.dst)?;
                self.wake(dst_pe, time);
            }
            Event::Interrupt {
                from,
                target,
                request,
            } => {
                let busy = self.pes[target].irq_busy_until;
                if busy > time {
                    self.push(
                        busy,
                        Event::Interrupt {
                            from,
                            target,
                            request,
                        },
                    );
                } else {
                    self.run_handler(target, time, request)?;
                }
            }
        }
        Ok(())
    }

    /// A store landed in `pe`'s memory at `time`; a spinning PE sees it at its
    /// next poll.
    fn wake(&mut self, pe: usize, time: Cycles) {
        let poll = self.cost.poll().max(1);
        let slot = &mut self.pes[pe];
        if slot.state == PeState::Blocked(Block::Store) {
            let waited = time.saturating_sub(slot.spin_origin);
            let boundary = slot.spin_origin + waited.div_ceil(poll) * poll;
            slot.clock = boundary.max(slot.irq_busy_until).max(slot.clock);
            slot.state = PeState::Requesting;
            slot.stats.spin_wakeups += 1;
        }
    }

    fn run_handler(
        &mut self,
        target: usize,
        time: Cycles,
        request: GlobalAddr,
    ) -> Result<(), MeshError> {
        let mut handler = self.pes[target]
            .handler
            .take()
            .ok_or(MeshError::NoHandler(target))?;
        let mut ctx = HandlerCtx {
            kernel: self,
            pe: target,
            now: time,
        };
        let result = handler(&mut ctx, request);
        let end = ctx.now;
        self.pes[target].handler = Some(handler);
        result.map_err(|e| MeshError::Handler {
            pe: target,
            reason: e.to_string(),
        })?;
        let slot = &mut self.pes[target];
        slot.irq_busy_until = end;
        slot.stats.interrupts_handled += 1;
        if slot.state == PeState::Requesting {
            // preempted: the handler's cycles are stolen from the interrupted code
            slot.clock += end - time;
        }
        Ok(())
    }

    // ---------------------------------------------------------------------
    // memory primitives, each issued by `pe` at cycle `at`; they return the
    // issuer's cost and never touch the issuer's clock

    pub fn decode(&self, addr: GlobalAddr) -> Result<(usize, u32), MeshError> {
        self.geom.decode(addr)
    }

    fn check_bounds(addr: GlobalAddr, len: usize) -> Result<(), MeshError> {
        if addr.offset() as usize + len > LOCAL_MEM_SIZE {
            return Err(MeshError::BusFault {
                core_id: addr.core_id(),
                offset: addr.offset(),
            });
        }
        Ok(())
    }

    fn check_source_reuse(&self, pe: usize, offset: u32, len: usize) -> Result<(), MeshError> {
        if !self.opts.strict || len == 0 {
            return Ok(());
        }
        let now = self.pes[pe].clock;
        let end = offset as i64 + len as i64;
        for ch in &self.pes[pe].dma {
            if ch.status_at(now) == DmaStatus::Busy {
                let desc = ch.active.as_ref().expect("busy channel has descriptor");
                if self.geom.decode(desc.src).map(|(p, _)| p) == Ok(pe) {
                    let ((lo, hi), _) = desc.extents();
                    if (offset as i64) < hi && lo < end {
                        return Err(MeshError::SourceReuse {
                            pe,
                            offset,
                            end: end as u32,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn schedule_delivery(
        &mut self,
        from: usize,
        to: usize,
        offset: u32,
        data: Vec<u8>,
        ready: Cycles,
    ) {
        let key = (from, to);
        let last = self.last_delivery.get(&key).copied().unwrap_or(0);
        let time = ready.max(last);
        self.last_delivery.insert(key, time);
        let slot = &mut self.pes[from];
        slot.pending_stores = slot.pending_stores.max(time);
        self.push(time, Event::Deliver { to, offset, data });
    }

    /// Cycle at which a request from `pe` reaches `target`: no earlier than any
    /// store `pe` already sent there.
    pub fn arrival(&self, pe: usize, target: usize) -> Cycles {
        let now = self.pes[pe].clock;
        if pe == target {
            return now;
        }
        now.max(self.last_delivery.get(&(pe, target)).copied().unwrap_or(0))
    }

    pub fn store_word(
        &mut self,
        pe: usize,
        at: Cycles,
        dst: GlobalAddr,
        data: &[u8],
    ) -> Result<Cycles, MeshError> {
        check_width(dst.offset(), data.len())?;
        let (to, off) = self.decode(dst)?;
        Self::check_bounds(dst, data.len())?;
        let cost = self.cost.store_issue();
        self.pes[pe].stats.stores += 1;
        if to == pe {
            self.check_source_reuse(pe, off, data.len())?;
            self.stores[pe].write(off, data)?;
        } else {
            let hops = self.geom.distance(pe, to);
            let ready = at + cost + self.cost.store_latency(hops);
            self.schedule_delivery(pe, to, off, data.to_vec(), ready);
        }
        Ok(cost)
    }

    pub fn load_word(
        &mut self,
        pe: usize,
        src: GlobalAddr,
        width: usize,
    ) -> Result<(u64, Cycles), MeshError> {
        check_width(src.offset(), width)?;
        let (from, off) = self.decode(src)?;
        Self::check_bounds(src, width)?;
        self.pes[pe].stats.loads += 1;
        let value = self.stores[from].read_word(off, width)?;
        Ok((value, self.cost.load_stall(self.geom.distance(pe, from))))
    }

    pub fn testset(
        &mut self,
        pe: usize,
        target: GlobalAddr,
        value: u32,
    ) -> Result<(u32, Cycles), MeshError> {
        check_width(target.offset(), 4)?;
        let (on, off) = self.decode(target)?;
        Self::check_bounds(target, 4)?;
        self.pes[pe].stats.testsets += 1;
        let old = self.stores[on].read_word(off, 4)? as u32;
        if old == 0 {
            self.stores[on].write_word(off, 4, value as u64)?;
        }
        Ok((old, self.cost.testset_stall(self.geom.distance(pe, on))))
    }

    /// Unrolled copy loop reading the issuer's own store.
    pub fn copy_out(
        &mut self,
        pe: usize,
        at: Cycles,
        src: u32,
        dst: GlobalAddr,
        len: usize,
    ) -> Result<Cycles, MeshError> {
        if len == 0 {
            return Ok(0);
        }
        let (to, off) = self.decode(dst)?;
        Self::check_bounds(dst, len)?;
        let data = self.stores[pe].read(src, len)?.to_vec();
        let aligned = src.is_multiple_of(8) && off % 8 == 0 && len.is_multiple_of(8);
        let cost = self.cost.fast_copy(len, aligned);
        self.pes[pe].stats.copies += 1;
        if to == pe {
            self.check_source_reuse(pe, off, len)?;
            self.stores[pe].write(off, &data)?;
        } else {
            let hops = self.geom.distance(pe, to);
            let ready = at + cost + self.cost.store_latency(hops);
            self.schedule_delivery(pe, to, off, data, ready);
        }
        Ok(cost)
    }

    /// Copy-loop write into the issuer's own store.
    pub fn store_local(
        &mut self,
        pe: usize,
        offset: u32,
        data: &[u8],
    ) -> Result<Cycles, MeshError> {
        LocalStore::check_range(offset, data.len())?;
        self.check_source_reuse(pe, offset, data.len())?;
        self.stores[pe].write(offset, data)?;
        Ok(self.cost.fast_copy(
            data.len(),
            offset.is_multiple_of(8) && data.len().is_multiple_of(8),
        ))
    }

    /// Copy loop built on stalling remote loads into the issuer's own store.
    pub fn copy_in(
        &mut self,
        pe: usize,
        src: GlobalAddr,
        dst: u32,
        len: usize,
    ) -> Result<Cycles, MeshError> {
        if len == 0 {
            return Ok(0);
        }
        let (from, off) = self.decode(src)?;
        Self::check_bounds(src, len)?;
        LocalStore::check_range(dst, len)?;
        self.check_source_reuse(pe, dst, len)?;
        let data = self.stores[from].read(off, len)?.to_vec();
        self.stores[pe].write(dst, &data)?;
        self.pes[pe].stats.remote_read_copies += 1;
        let aligned = off % 8 == 0 && dst.is_multiple_of(8) && len.is_multiple_of(8);
        Ok(self
            .cost
            .remote_read_copy(len, self.geom.distance(pe, from), aligned))
    }

    pub fn dma_start(&mut self, pe: usize, desc: DmaDescriptor) -> Result<Cycles, MeshError> {
        desc.validate()?;
        let (src_pe, _) = self.decode(desc.src)?;
        let (dst_pe, _) = self.decode(desc.dst)?;
        let ((slo, shi), (dlo, dhi)) = desc.extents();
        if slo < 0 || dlo < 0 || shi > LOCAL_MEM_SIZE as i64 || dhi > LOCAL_MEM_SIZE as i64 {
            return Err(MeshError::Descriptor("transfer leaves the local store"));
        }
        let now = self.pes[pe].clock;
        if self.pes[pe].dma[desc.channel].status_at(now) == DmaStatus::Busy {
            return Err(MeshError::ChannelBusy(desc.channel));
        }
        let issue = self.cost.store_issue();
        let completion = now
            + issue
            + self
                .cost
                .dma_transfer(desc.total_dwords(), self.geom.distance(src_pe, dst_pe));
        let ch = &mut self.pes[pe].dma[desc.channel];
        ch.completion = completion;
        ch.active = Some(desc);
        self.pes[pe].stats.dma_starts += 1;
        self.push(
            completion,
            Event::DmaComplete {
                pe,
                channel: desc.channel,
            },
        );
        Ok(issue)
    }

    fn move_dma_data(&mut self, desc: &DmaDescriptor) -> Result<(), MeshError> {
        let (src_pe, _) = self.geom.decode(desc.src)?;
        let (dst_pe, _) = self.geom.decode(desc.dst)?;
        let e = desc.elem_size as usize;
        for (s, d) in desc.element_offsets() {
            let chunk = self.stores[src_pe].read(s as u32, e)?.to_vec();
            self.stores[dst_pe].write(d as u32, &chunk)?;
        }
        Ok(())
    }

    pub fn dma_status(&self, pe: usize, channel: usize) -> DmaStatus {
        self.pes[pe].dma[channel].status_at(self.pes[pe].clock)
    }

    /// Spin on the status register until idle. Returns cycles spent.
    pub fn dma_wait(&mut self, pe: usize, channel: usize) -> Cycles {
        let poll = self.cost.poll().max(1);
        let slot = &mut self.pes[pe];
        let now = slot.clock;
        let busy_polls = match slot.dma[channel].status_at(now) {
            DmaStatus::Busy => (slot.dma[channel].completion - now).div_ceil(poll),
            DmaStatus::Idle => 0,
        };
        slot.stats.polls += busy_polls + 1;
        (busy_polls + 1) * poll
    }

    pub fn pending_stores(&self, pe: usize) -> Cycles {
        self.pes[pe].pending_stores
    }

    /// Enter the WAND barrier. Returns true if this arrival released it.
    pub fn wand_enter(&mut self, pe: usize) -> bool {
        let clock = self.pes[pe].clock;
        self.pes[pe].stats.wand_barriers += 1;
        self.wand.entered += 1;
        self.wand.last_entry = self.wand.last_entry.max(clock);
        if self.wand.entered == self.pes.len() {
            let release = self.wand.last_entry + self.cost.wand();
            for w in std::mem::take(&mut self.wand.waiters) {
                let slot = &mut self.pes[w];
                slot.clock = release.max(slot.irq_busy_until);
                slot.state = PeState::Requesting;
            }
            self.pes[pe].clock = release;
            self.wand = WandState::default();
            true
        } else {
            self.wand.waiters.push(pe);
            self.block(pe, Block::Wand);
            false
        }
    }

    /// Called with the PE running; checks the word and blocks if the predicate fails.
    pub fn spin_check(
        &mut self,
        pe: usize,
        offset: u32,
        width: usize,
        pred: &dyn Fn(u64) -> bool,
    ) -> Result<Option<u64>, MeshError> {
        check_width(offset, width)?;
        let value = self.stores[pe].read_word(offset, width)?;
        self.pes[pe].stats.polls += 1;
        if pred(value) {
            let poll = self.cost.poll();
            self.charge(pe, poll);
            Ok(Some(value))
        } else {
            self.pes[pe].spin_origin = self.pes[pe].clock;
            self.block(pe, Block::Store);
            Ok(None)
        }
    }

    pub fn raise_interrupt(
        &mut self,
        pe: usize,
        target: usize,
        request: GlobalAddr,
    ) -> Result<Cycles, MeshError> {
        if target >= self.pes.len() {
            return Err(MeshError::PeOutOfRange {
                pe: target,
                n_pes: self.pes.len(),
            });
        }
        if self.pes[target].handler.is_none() {
            return Err(MeshError::NoHandler(target));
        }
        let cost = self.cost.store_issue();
        let at = self.pes[pe].clock
            + cost
            + self.cost.interrupt_latency()
            + self.cost.hop_cost(self.geom.distance(pe, target));
        self.pes[pe].stats.interrupts_raised += 1;
        self.push(
            at,
            Event::Interrupt {
                from: pe,
                target,
                request,
            },
        );
        Ok(cost)
    }

    pub fn set_handler(&mut self, pe: usize, handler: Option<InterruptHandler>) {
        self.pes[pe].handler = handler;
    }
}

/// View of the mesh from inside an interrupt handler running on `pe`.
pub struct HandlerCtx<'a> {
    kernel: &'a mut Kernel,
    pe: usize,
    now: Cycles,
}

impl HandlerCtx<'_> {
    pub fn pe(&self) -> usize {
        self.pe
    }

    pub fn now(&self) -> Cycles {
        self.now
    }

    pub fn geometry(&self) -> Geometry {
        self.kernel.geom
    }

    pub fn read(&mut self, src: GlobalAddr, width: usize) -> Result<u64, MeshError> {
        let (v, cost) = self.kernel.load_word(self.pe, src, width)?;
        self.now += cost;
        Ok(v)
    }

    pub fn write(&mut self, dst: GlobalAddr, data: &[u8]) -> Result<(), MeshError> {
        let cost = self.kernel.store_word(self.pe, self.now, dst, data)?;
        self.now += cost;
        Ok(())
    }

    /// Fast copy from this core's store to `dst`.
    pub fn copy_out(&mut self, src: u32, dst: GlobalAddr, len: usize) -> Result<(), MeshError> {
        let cost = self.kernel.copy_out(self.pe, self.now, src, dst, len)?;
        self.now += cost;
        Ok(())
    }

    pub fn compute(&mut self, cycles: Cycles) {
        self.now += cycles;
    }
}

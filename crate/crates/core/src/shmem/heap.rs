//! Bump allocator for the symmetric heap.
//!
//! The heap grows upward from `heap_base` towards the stack. There is no free
//! list: `free` moves the break back to the freed block, releasing it and
//! everything allocated after it, and `realloc` only resizes the most recent
//! block in place.

use super::error::{Result, ShmemError};

/// Default and minimum allocation alignment.
pub const MIN_ALIGN: usize = 8;

/// One live symmetric allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SymAlloc {
    pub offset: u32,
    /// Bytes reserved (requested size rounded up to 8).
    pub size: u32,
    pub alignment: u32,
}

impl SymAlloc {
    pub fn end(&self) -> u32 {
        self.offset + self.size
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymHeap {
    base: u32,
    limit: u32,
    brk: u32,
    live: Vec<SymAlloc>,
}

fn reserved(size: usize) -> usize {
    size.max(1).next_multiple_of(MIN_ALIGN)
}

impl SymHeap {
    /// Heap spanning `[base, limit)`.
    pub fn new(base: u32, limit: u32) -> Self {
        assert!(base <= limit, "heap base above limit");
        Self {
            base,
            limit,
            brk: base,
            live: Vec::new(),
        }
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn limit(&self) -> u32 {
        self.limit
    }

    pub fn brk(&self) -> u32 {
        self.brk
    }

    /// Live allocations in increasing offset order.
    pub fn live(&self) -> &[SymAlloc] {
        &self.live
    }

    pub fn malloc(&mut self, size: usize) -> Result<SymAlloc> {
        self.align(MIN_ALIGN, size)
    }

    pub fn align(&mut self, alignment: usize, size: usize) -> Result<SymAlloc> {
        if alignment < MIN_ALIGN || !alignment.is_power_of_two() {
            return Err(ShmemError::BadAlignment(alignment));
        }
        let offset = (self.brk as usize).next_multiple_of(alignment);
        let size = reserved(size);
        let available = (self.limit as usize).saturating_sub(self.brk as usize);
        if offset + size > self.limit as usize {
            return Err(ShmemError::OutOfMemory {
                requested: size,
                available,
            });
        }
        let a = SymAlloc {
            offset: offset as u32,
            size: size as u32,
            alignment: alignment as u32,
        };
        self.brk = a.end();
        self.live.push(a);
        Ok(a)
    }

    /// Releases `offset` and every allocation made after it.
    pub fn free(&mut self, offset: u32) -> Result<()> {
        let idx = self
            .live
            .iter()
            .position(|a| a.offset == offset)
            .ok_or(ShmemError::NotLive(offset))?;
        self.live.truncate(idx);
        self.brk = offset;
        Ok(())
    }

    /// Resizes the last live allocation in place.
    pub fn realloc(&mut self, offset: u32, new_size: usize) -> Result<SymAlloc> {
        let last = self.live.last_mut().ok_or(ShmemError::NotLive(offset))?;
        if last.offset != offset {
            return Err(if self.live.iter().any(|a| a.offset == offset) {
                ShmemError::NotLast(offset)
            } else {
                ShmemError::NotLive(offset)
            });
        }
        let size = reserved(new_size);
        if offset as usize + size > self.limit as usize {
            return Err(ShmemError::OutOfMemory {
                requested: size,
                available: (self.limit - offset) as usize,
            });
        }
        last.size = size as u32;
        let a = *last;
        self.brk = a.end();
        Ok(a)
    }

    /// Checks the region invariants; used by tests.
    pub fn check(&self) -> std::result::Result<(), String> {
        if !(self.base <= self.brk && self.brk <= self.limit) {
            return Err(format!(
                "brk {:#x} outside [{:#x}, {:#x}]",
                self.brk, self.base, self.limit
            ));
        }
        let mut floor = self.base;
        for a in &self.live {
            if a.offset < floor || a.offset % a.alignment != 0 || a.size % MIN_ALIGN as u32 != 0 {
                return Err(format!("bad allocation {a:?}"));
            }
            floor = a.end();
        }
        if floor > self.brk {
            return Err("live allocation above brk".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn heap() -> SymHeap {
        SymHeap::new(0x14a8, 0x7000)
    }

    #[test]
    fn first_malloc_starts_at_base() {
        let mut h = SymHeap::new(0x1500, 0x7000);
        let a = h.malloc(64).unwrap();
        assert_eq!(a.offset, 0x1500);
        assert_eq!(h.brk(), 0x1540);
    }

    #[test]
    fn align_rounds_up() {
        let mut h = heap();
        h.malloc(4).unwrap();
        // 0x14a8 + 8 = 0x14b0, next multiple of 32 is 0x14c0
        let b = h.align(32, 8).unwrap();
        assert_eq!(b.offset, 0x14c0);
        assert!(matches!(h.align(24, 8), Err(ShmemError::BadAlignment(24))));
        assert!(matches!(h.align(4, 8), Err(ShmemError::BadAlignment(4))));
    }

    #[test]
    fn oversize_is_oom() {
        assert!(matches!(
            heap().malloc(33000),
            Err(ShmemError::OutOfMemory { .. })
        ));
    }

    #[test]
    fn free_releases_suffix() {
        let mut h = heap();
        let a = h.malloc(16).unwrap();
        let b = h.malloc(16).unwrap();
        h.free(a.offset).unwrap();
        assert_eq!(h.brk(), a.offset);
        assert!(h.live().is_empty());
        assert_eq!(h.free(a.offset), Err(ShmemError::NotLive(a.offset)));
        assert_eq!(h.free(b.offset), Err(ShmemError::NotLive(b.offset)));
    }

    #[test]
    fn realloc_last_only() {
        let mut h = heap();
        let a = h.malloc(16).unwrap();
        let b = h.malloc(16).unwrap();
        assert_eq!(h.realloc(a.offset, 64), Err(ShmemError::NotLast(a.offset)));
        let grown = h.realloc(b.offset, 100).unwrap();
        assert_eq!((grown.offset, h.brk()), (b.offset, b.offset + 104));
        h.realloc(b.offset, 8).unwrap();
        assert_eq!(h.brk(), b.offset + 8);
    }

    #[derive(Debug, Clone)]
    enum Step {
        Malloc(usize),
        Align(u32, usize),
        Free(usize),
        Realloc(usize),
    }

    fn step() -> impl Strategy<Value = Step> {
        prop_oneof![
            (0usize..4096).prop_map(Step::Malloc),
            (0u32..12, 0usize..2048).prop_map(|(k, s)| Step::Align(k, s)),
            (0usize..8).prop_map(Step::Free),
            (0usize..4096).prop_map(Step::Realloc),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn random_sequences_keep_invariants(steps in prop::collection::vec(step(), 1..40)) {
            let mut h = heap();
            for s in steps {
                let before = h.clone();
                let r = match s {
                    Step::Malloc(n) => h.malloc(n).map(|_| ()),
                    Step::Align(k, n) => h.align(1 << k, n).map(|_| ()),
                    Step::Free(i) => match h.live().get(i).copied() {
                        Some(a) => {
                            let brk_then = if i == 0 { h.base() } else { h.live()[i - 1].end() };
                            h.free(a.offset).unwrap();
                            prop_assert_eq!(h.live().len(), i);
                            prop_assert_eq!(h.brk(), a.offset);
                            prop_assert!(h.brk() >= brk_then);
                            Ok(())
                        }
                        None => h.free(h.brk() + 8).map(|_| ()),
                    },
                    Step::Realloc(n) => match h.live().last().copied() {
                        Some(a) => h.realloc(a.offset, n).map(|b| assert_eq!(b.offset, a.offset)),
                        None => h.realloc(h.base(), n).map(|_| ()),
                    },
                };
                if r.is_err() {
                    prop_assert_eq!(&h, &before, "failed call must not change the heap");
                }
                prop_assert!(h.check().is_ok(), "{:?}", h.check());
            }
        }

        #[test]
        fn reverse_free_restores_brk(sizes in prop::collection::vec(1usize..512, 1..12)) {
            let mut h = heap();
            let mut trail = Vec::new();
            for s in sizes {
                trail.push(h.brk());
                h.malloc(s).unwrap();
            }
            for a in h.live().to_vec().into_iter().rev() {
                h.free(a.offset).unwrap();
                prop_assert_eq!(h.brk(), a.offset);
                prop_assert_eq!(h.brk(), trail.pop().unwrap());
            }
            prop_assert_eq!(h.brk(), h.base());
        }

        #[test]
        fn non_last_realloc_faults(n in 2usize..8, pick in 0usize..7, size in 0usize..256) {
            let mut h = heap();
            for _ in 0..n {
                h.malloc(16).unwrap();
            }
            let i = pick % (n - 1);
            let a = h.live()[i];
            prop_assert_eq!(h.realloc(a.offset, size), Err(ShmemError::NotLast(a.offset)));
        }

        #[test]
        fn alignment_rule(a in 0usize..5000, size in 1usize..64) {
            let mut h = heap();
            let r = h.align(a, size);
            if a >= 8 && a.is_power_of_two() {
                prop_assert_eq!(r.unwrap().offset as usize % a, 0);
            } else {
                prop_assert_eq!(r, Err(ShmemError::BadAlignment(a)));
            }
        }
    }
}

//! Remote atomics built on TESTSET locks.
//!
//! Fetch and set are single word accesses and need no lock. Every other
//! operation takes the target PE's lock for the element type, does the
//! read-modify-write with plain remote accesses and releases the lock with a
//! remote store of zero. Stores to one PE arrive in order, so the release can
//! never overtake the data it protects.

use super::{AtomicElem, ReduceOp, Result, Shmem, ShmemError};

/// The OpenSHMEM 1.3 atomic operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AtomicOp {
    Fetch,
    Set,
    Swap,
    Cswap,
    Add,
    Inc,
    FetchAdd,
    FetchInc,
}

impl AtomicOp {
    pub const ALL: [AtomicOp; 8] = [
        AtomicOp::Fetch,
        AtomicOp::Set,
        AtomicOp::Swap,
        AtomicOp::Cswap,
        AtomicOp::Add,
        AtomicOp::Inc,
        AtomicOp::FetchAdd,
        AtomicOp::FetchInc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AtomicOp::Fetch => "fetch",
            AtomicOp::Set => "set",
            AtomicOp::Swap => "swap",
            AtomicOp::Cswap => "cswap",
            AtomicOp::Add => "add",
            AtomicOp::Inc => "inc",
            AtomicOp::FetchAdd => "fetch_add",
            AtomicOp::FetchInc => "fetch_inc",
        }
    }

    fn integer_only(self) -> bool {
        matches!(
            self,
            AtomicOp::Cswap
                | AtomicOp::Add
                | AtomicOp::Inc
                | AtomicOp::FetchAdd
                | AtomicOp::FetchInc
        )
    }
}

impl Shmem {
    /// Generic entry point. `value` is the operand of set, swap, cswap and the
    /// adds; `cond` is the comparand of cswap. Returns the old value for the
    /// fetching operations.
    pub async fn atomic<T: AtomicElem>(
        &mut self,
        op: AtomicOp,
        offset: u32,
        value: T,
        cond: T,
        pe: usize,
    ) -> Result<Option<T>> {
        Self::check_buffer(offset, T::SIZE, T::SIZE)?;
        if !matches!(T::SIZE, 4 | 8) {
            return Err(ShmemError::ElemSize(T::SIZE));
        }
        if T::IS_FLOAT && op.integer_only() {
            return Err(ShmemError::Unsupported(
                "arithmetic atomics on floating-point types",
            ));
        }
        self.check_pe(pe)?;
        self.pe.compute(self.pe.cost().call_overhead()).await;
        let target = self.pe.addr_of(pe, offset)?;
        match op {
            AtomicOp::Fetch => {
                let (bits, _) = self.pe.read(target, T::SIZE).await?;
                return Ok(Some(T::from_bits(bits)));
            }
            AtomicOp::Set => {
                self.pe.write_word(target, T::SIZE, value.to_bits()).await?;
                return Ok(None);
            }
            _ => {}
        }
        let lock = self.pe.addr_of(pe, self.layout.atomic_lock(T::LOCK_SLOT))?;
        let tag = self.my_pe() as u32 + 1;
        while self.pe.testset(lock, tag).await? != 0 {}
        let (bits, _) = self.pe.read(target, T::SIZE).await?;
        let old = T::from_bits(bits);
        let add = |a: T, b: T| T::combine(ReduceOp::Sum, a, b).expect("integer add");
        let new = match op {
            AtomicOp::Swap => Some(value),
            AtomicOp::Cswap => (old == cond).then_some(value),
            AtomicOp::Add | AtomicOp::FetchAdd => Some(add(old, value)),
            AtomicOp::Inc | AtomicOp::FetchInc => Some(add(old, T::one())),
            AtomicOp::Fetch | AtomicOp::Set => unreachable!(),
        };
        if let Some(new) = new {
            self.pe.write_word(target, T::SIZE, new.to_bits()).await?;
        }
        self.pe.write_word(lock, 4, 0).await?;
        Ok(match op {
            AtomicOp::Add | AtomicOp::Inc => None,
            _ => Some(old),
        })
    }

    pub async fn atomic_fetch<T: AtomicElem>(&mut self, offset: u32, pe: usize) -> Result<T> {
        Ok(self
            .atomic(AtomicOp::Fetch, offset, T::default(), T::default(), pe)
            .await?
            .expect("fetch returns"))
    }

    pub async fn atomic_set<T: AtomicElem>(
        &mut self,
        offset: u32,
        value: T,
        pe: usize,
    ) -> Result<()> {
        self.atomic(AtomicOp::Set, offset, value, T::default(), pe)
            .await
            .map(drop)
    }

    pub async fn atomic_swap<T: AtomicElem>(
        &mut self,
        offset: u32,
        value: T,
        pe: usize,
    ) -> Result<T> {
        Ok(self
            .atomic(AtomicOp::Swap, offset, value, T::default(), pe)
            .await?
            .expect("swap returns"))
    }

    pub async fn atomic_compare_swap<T: AtomicElem>(
        &mut self,
        offset: u32,
        cond: T,
        value: T,
        pe: usize,
    ) -> Result<T> {
        Ok(self
            .atomic(AtomicOp::Cswap, offset, value, cond, pe)
            .await?
            .expect("cswap returns"))
    }

    pub async fn atomic_add<T: AtomicElem>(
        &mut self,
        offset: u32,
        value: T,
        pe: usize,
    ) -> Result<()> {
        self.atomic(AtomicOp::Add, offset, value, T::default(), pe)
            .await
            .map(drop)
    }

    pub async fn atomic_inc<T: AtomicElem>(&mut self, offset: u32, pe: usize) -> Result<()> {
        self.atomic(AtomicOp::Inc, offset, T::default(), T::default(), pe)
            .await
            .map(drop)
    }

    pub async fn atomic_fetch_add<T: AtomicElem>(
        &mut self,
        offset: u32,
        value: T,
        pe: usize,
    ) -> Result<T> {
        Ok(self
            .atomic(AtomicOp::FetchAdd, offset, value, T::default(), pe)
            .await?
            .expect("fetch_add returns"))
    }

    pub async fn atomic_fetch_inc<T: AtomicElem>(&mut self, offset: u32, pe: usize) -> Result<T> {
        Ok(self
            .atomic(AtomicOp::FetchInc, offset, T::default(), T::default(), pe)
            .await?
            .expect("fetch_inc returns"))
    }
}

//! Blocking and non-blocking RMA, memory ordering and point-to-point waits.

use crate::mesh::{DmaDescriptor, DmaStatus, GlobalAddr, HandlerCtx, MeshError, DMA_CHANNELS};

use super::{Elem, Result, Shmem, IPI_GET_THRESHOLD};

/// Comparison of `shmem_wait_until`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Cmp {
    pub fn holds<T: PartialOrd>(self, lhs: T, rhs: T) -> bool {
        match self {
            Cmp::Eq => lhs == rhs,
            Cmp::Ne => lhs != rhs,
            Cmp::Lt => lhs < rhs,
            Cmp::Le => lhs <= rhs,
            Cmp::Gt => lhs > rhs,
            Cmp::Ge => lhs >= rhs,
        }
    }
}

/// Interrupt handler behind IPI get: reads the requester's request block and
/// writes the data back with the fast copy loop, then raises the flag.
pub(crate) fn serve_ipi_get(
    ctx: &mut HandlerCtx<'_>,
    request: GlobalAddr,
) -> std::result::Result<(), MeshError> {
    let w0 = ctx.read(request, 8)?;
    let w1 = ctx.read(request.offset_by(8)?, 8)?;
    let (src, nbytes) = (w0 as u32, (w0 >> 32) as usize);
    let (dst, flag) = (
        GlobalAddr::from_packed(w1 as u32),
        GlobalAddr::from_packed((w1 >> 32) as u32),
    );
    ctx.copy_out(src, dst, nbytes)?;
    ctx.write(flag, &1u64.to_le_bytes())
}

/// Largest DMA element size that divides both offsets and the length.
fn dma_elem(src: u32, dst: u32, nbytes: usize) -> u32 {
    [8u32, 4, 2, 1]
        .into_iter()
        .find(|&e| {
            src.is_multiple_of(e) && dst.is_multiple_of(e) && (nbytes as u32).is_multiple_of(e)
        })
        .expect("1 divides everything")
}

impl Shmem {
    /// `shmem_put`: copies `nelems` elements from local `src` to symmetric `dest` on `pe`.
    pub async fn put(
        &mut self,
        dest: u32,
        src: u32,
        nelems: usize,
        elem_size: usize,
        pe: usize,
    ) -> Result<()> {
        let nbytes = nelems * elem_size;
        Self::check_buffer(dest, nbytes, elem_size)?;
        Self::check_buffer(src, nbytes, elem_size)?;
        self.check_pe(pe)?;
        self.pe.compute(self.pe.cost().call_overhead()).await;
        if nbytes > 0 {
            let (s, d) = (self.pe.local_addr(src)?, self.pe.addr_of(pe, dest)?);
            self.pe.copy(s, d, nbytes).await?;
        }
        Ok(())
    }

    /// `shmem_putmem`.
    pub async fn putmem(&mut self, dest: u32, src: u32, nbytes: usize, pe: usize) -> Result<()> {
        self.put(dest, src, nbytes, 1, pe).await
    }

    /// `shmem_get`: copies `nelems` elements from symmetric `src` on `pe` to local `dest`.
    pub async fn get(
        &mut self,
        dest: u32,
        src: u32,
        nelems: usize,
        elem_size: usize,
        pe: usize,
    ) -> Result<()> {
        let nbytes = nelems * elem_size;
        Self::check_buffer(dest, nbytes, elem_size)?;
        Self::check_buffer(src, nbytes, elem_size)?;
        self.check_pe(pe)?;
        self.pe.compute(self.pe.cost().call_overhead()).await;
        if nbytes == 0 {
            return Ok(());
        }
        if pe == self.my_pe() {
            self.pe
                .copy(self.pe.local_addr(src)?, self.pe.local_addr(dest)?, nbytes)
                .await?;
        } else if self.features.use_ipi_get && nbytes > IPI_GET_THRESHOLD {
            self.ipi_get(dest, src, nbytes, pe).await?;
        } else {
            self.pe
                .copy(self.pe.addr_of(pe, src)?, self.pe.local_addr(dest)?, nbytes)
                .await?;
        }
        Ok(())
    }

    pub async fn getmem(&mut self, dest: u32, src: u32, nbytes: usize, pe: usize) -> Result<()> {
        self.get(dest, src, nbytes, 1, pe).await
    }

    async fn ipi_get(&mut self, dest: u32, src: u32, nbytes: usize, pe: usize) -> Result<()> {
        let (req, flag) = (self.layout.ipi_request, self.layout.ipi_flag);
        let dst = self.pe.local_addr(dest)?;
        let flag_addr = self.pe.local_addr(flag)?;
        let w0 = src as u64 | (nbytes as u64) << 32;
        let w1 = dst.packed() as u64 | (flag_addr.packed() as u64) << 32;
        let mut block = w0.to_le_bytes().to_vec();
        block.extend_from_slice(&w1.to_le_bytes());
        self.pe.store_bytes(req, &block).await?;
        self.pe.store_bytes(flag, &[0; 8]).await?;
        self.pe
            .raise_interrupt(pe, self.pe.local_addr(req)?)
            .await?;
        self.pe.spin_until(flag, 8, |v| v != 0).await?;
        Ok(())
    }

    /// Picks a DMA channel round-robin, waiting for one if both are busy.
    async fn acquire_channel(&mut self) -> Result<usize> {
        let first = self.next_dma_channel();
        for c in (0..DMA_CHANNELS).map(|k| (first + k) % DMA_CHANNELS) {
            if self.pe.dma_poll(c).await? == DmaStatus::Idle {
                return Ok(c);
            }
        }
        let c = (0..DMA_CHANNELS)
            .min_by_key(|&c| self.pe.dma_completion(c))
            .expect("two channels");
        self.pe.dma_wait(c).await?;
        Ok(c)
    }

    async fn dma(&mut self, src: GlobalAddr, dst: GlobalAddr, nbytes: usize) -> Result<()> {
        let e = dma_elem(src.offset(), dst.offset(), nbytes);
        let channel = self.acquire_channel().await?;
        let desc = DmaDescriptor::contiguous(channel, src, dst, nbytes as u32 / e, e);
        self.pe.dma_start(desc).await?;
        Ok(())
    }

    /// `shmem_put_nbi`: DMA-backed put, complete after [`Shmem::quiet`].
    pub async fn put_nbi(
        &mut self,
        dest: u32,
        src: u32,
        nelems: usize,
        elem_size: usize,
        pe: usize,
    ) -> Result<()> {
        let nbytes = nelems * elem_size;
        Self::check_buffer(dest, nbytes, elem_size)?;
        Self::check_buffer(src, nbytes, elem_size)?;
        self.check_pe(pe)?;
        self.pe.compute(self.pe.cost().call_overhead()).await;
        if nbytes > 0 {
            self.dma(self.pe.local_addr(src)?, self.pe.addr_of(pe, dest)?, nbytes)
                .await?;
        }
        Ok(())
    }

    /// `shmem_get_nbi`: DMA-backed get, complete after [`Shmem::quiet`].
    pub async fn get_nbi(
        &mut self,
        dest: u32,
        src: u32,
        nelems: usize,
        elem_size: usize,
        pe: usize,
    ) -> Result<()> {
        let nbytes = nelems * elem_size;
        Self::check_buffer(dest, nbytes, elem_size)?;
        Self::check_buffer(src, nbytes, elem_size)?;
        self.check_pe(pe)?;
        self.pe.compute(self.pe.cost().call_overhead()).await;
        if nbytes > 0 {
            self.dma(self.pe.addr_of(pe, src)?, self.pe.local_addr(dest)?, nbytes)
                .await?;
        }
        Ok(())
    }

    /// `shmem_quiet`: waits until both DMA channels are idle and every issued
    /// store has been delivered.
    pub async fn quiet(&mut self) -> Result<()> {
        for c in 0..DMA_CHANNELS {
            self.pe.dma_wait(c).await?;
        }
        self.pe.drain_stores().await;
        Ok(())
    }

    /// `shmem_fence`. Stores between a pair are already delivered in order,
    /// so the only remaining reordering comes from DMA and fence is a quiet.
    pub async fn fence(&mut self) -> Result<()> {
        self.quiet().await
    }

    /// `shmem_wait_until` on a local symmetric variable. Returns the value seen.
    pub async fn wait_until<T: Elem>(&self, offset: u32, cmp: Cmp, value: T) -> Result<T> {
        Self::check_buffer(offset, T::SIZE, T::SIZE)?;
        let v = self
            .pe
            .spin_until(offset, T::SIZE, |bits| cmp.holds(T::from_bits(bits), value))
            .await?;
        Ok(T::from_bits(v))
    }
}

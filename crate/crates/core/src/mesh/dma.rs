//! Two-dimensional DMA descriptors and channel state.

use super::{Cycles, GlobalAddr, MeshError};

/// Number of DMA channels on every core.
pub const DMA_CHANNELS: usize = 2;

/// A 2D strided transfer: `outer_count` rows of `inner_count` elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DmaDescriptor {
    pub channel: usize,
    pub src: GlobalAddr,
    pub dst: GlobalAddr,
    pub inner_count: u32,
    pub outer_count: u32,
    pub elem_size: u32,
    pub src_inner_stride: i32,
    pub src_outer_stride: i32,
    pub dst_inner_stride: i32,
    pub dst_outer_stride: i32,
}

impl DmaDescriptor {
    /// Contiguous transfer of `count` elements.
    pub fn contiguous(
        channel: usize,
        src: GlobalAddr,
        dst: GlobalAddr,
        count: u32,
        elem_size: u32,
    ) -> Self {
        let stride = elem_size as i32;
        Self {
            channel,
            src,
            dst,
            inner_count: count,
            outer_count: 1,
            elem_size,
            src_inner_stride: stride,
            src_outer_stride: 0,
            dst_inner_stride: stride,
            dst_outer_stride: 0,
        }
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        if self.channel >= DMA_CHANNELS {
            return Err(MeshError::Descriptor("channel must be 0 or 1"));
        }
        if self.inner_count == 0 || self.outer_count == 0 {
            return Err(MeshError::Descriptor(
                "element and row counts must be at least 1",
            ));
        }
        if !matches!(self.elem_size, 1 | 2 | 4 | 8) {
            return Err(MeshError::Descriptor("element size must be 1, 2, 4 or 8"));
        }
        let e = self.elem_size as i64;
        for (base, inner, outer) in [
            (
                self.src.offset(),
                self.src_inner_stride,
                self.src_outer_stride,
            ),
            (
                self.dst.offset(),
                self.dst_inner_stride,
                self.dst_outer_stride,
            ),
        ] {
            if base as i64 % e != 0 || inner as i64 % e != 0 || outer as i64 % e != 0 {
                return Err(MeshError::Alignment {
                    offset: base,
                    width: self.elem_size as usize,
                });
            }
        }
        Ok(())
    }

    pub fn total_bytes(&self) -> u64 {
        self.inner_count as u64 * self.outer_count as u64 * self.elem_size as u64
    }

    pub fn total_dwords(&self) -> u64 {
        self.total_bytes().div_ceil(8)
    }

    /// `(src_offset, dst_offset)` of every element, row by row.
    pub fn element_offsets(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        (0..self.outer_count as i64).flat_map(move |o| {
            (0..self.inner_count as i64).map(move |i| {
                (
                    self.src.offset() as i64
                        + o * self.src_outer_stride as i64
                        + i * self.src_inner_stride as i64,
                    self.dst.offset() as i64
                        + o * self.dst_outer_stride as i64
                        + i * self.dst_inner_stride as i64,
                )
            })
        })
    }

    /// Lowest and one-past-highest byte touched on the source and destination side.
    pub fn extents(&self) -> ((i64, i64), (i64, i64)) {
        let e = self.elem_size as i64;
        let mut s = (i64::MAX, i64::MIN);
        let mut d = (i64::MAX, i64::MIN);
        // Affine in both indices, so the extremes sit at the four corners.
        for o in [0, self.outer_count as i64 - 1] {
            for i in [0, self.inner_count as i64 - 1] {
                let so = self.src.offset() as i64
                    + o * self.src_outer_stride as i64
                    + i * self.src_inner_stride as i64;
                let dof = self.dst.offset() as i64
                    + o * self.dst_outer_stride as i64
                    + i * self.dst_inner_stride as i64;
                s = (s.0.min(so), s.1.max(so + e));
                d = (d.0.min(dof), d.1.max(dof + e));
            }
        }
        (s, d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DmaStatus {
    Idle,
    Busy,
}

#[derive(Debug, Clone, Default)]
pub struct DmaChannel {
    pub(crate) completion: Cycles,
    pub(crate) active: Option<DmaDescriptor>,
}

impl DmaChannel {
    pub fn status_at(&self, now: Cycles) -> DmaStatus {
        if self.active.is_some() && now < self.completion {
            DmaStatus::Busy
        } else {
            DmaStatus::Idle
        }
    }

    pub fn completion_time(&self) -> Cycles {
        self.completion
    }

    pub fn descriptor(&self) -> Option<&DmaDescriptor> {
        self.active.as_ref()
    }
}

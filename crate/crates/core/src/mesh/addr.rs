//! Core coordinates and the packed global address space.
//!
//! Every core owns a 1 MB window of the 32-bit address space: the upper 12 bits
//! name the core as `(row << 6) | col` and the lower 20 bits are a byte offset
//! into that core's local store. Only the first [`LOCAL_MEM_SIZE`] bytes of each
//! window are backed by SRAM.

use std::fmt;

use super::MeshError;

/// Bytes of SRAM per core.
pub const LOCAL_MEM_SIZE: usize = 32 * 1024;

/// Largest row or column count representable in a 6-bit coordinate field.
pub const MAX_MESH_DIM: usize = 64;

/// Width of the per-core offset field of a [`GlobalAddr`].
pub const OFFSET_BITS: u32 = 20;

const OFFSET_MASK: u32 = (1 << OFFSET_BITS) - 1;
const COORD_BITS: u32 = 6;
const COORD_MASK: u16 = (1 << COORD_BITS) - 1;

/// Position of a core on the mesh, origin at the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoreCoord {
    pub row: usize,
    pub col: usize,
}

impl CoreCoord {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    /// The 12-bit core id used in the upper bits of a global address.
    pub const fn core_id(self) -> u16 {
        ((self.row as u16) << COORD_BITS) | self.col as u16
    }

    pub const fn from_core_id(id: u16) -> Self {
        Self {
            row: (id >> COORD_BITS) as usize & COORD_MASK as usize,
            col: (id & COORD_MASK) as usize,
        }
    }

    /// Manhattan distance; the mesh routes XY so this is the hop count.
    pub fn hops_to(self, other: CoreCoord) -> u32 {
        (self.row.abs_diff(other.row) + self.col.abs_diff(other.col)) as u32
    }
}

impl fmt::Display for CoreCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// A packed `core_id:12 | offset:20` address.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GlobalAddr(u32);

impl GlobalAddr {
    pub fn new(core_id: u16, offset: u32) -> Result<Self, MeshError> {
        if core_id >= 1 << 12 {
            return Err(MeshError::BusFault { core_id, offset });
        }
        if offset > OFFSET_MASK {
            return Err(MeshError::OffsetOverflow { offset });
        }
        Ok(Self(((core_id as u32) << OFFSET_BITS) | offset))
    }

    pub const fn from_packed(packed: u32) -> Self {
        Self(packed)
    }

    pub const fn packed(self) -> u32 {
        self.0
    }

    pub const fn core_id(self) -> u16 {
        (self.0 >> OFFSET_BITS) as u16
    }

    pub const fn offset(self) -> u32 {
        self.0 & OFFSET_MASK
    }

    pub const fn coord(self) -> CoreCoord {
        CoreCoord::from_core_id(self.core_id())
    }

    /// Same core, offset advanced by `delta` bytes.
    pub fn offset_by(self, delta: u32) -> Result<Self, MeshError> {
        Self::new(self.core_id(), self.offset() + delta)
    }
}

impl fmt::Debug for GlobalAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "GlobalAddr({:#010x} core={:#05x} off={:#07x})",
            self.0,
            self.core_id(),
            self.offset()
        )
    }
}

impl fmt::Display for GlobalAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#010x}", self.0)
    }
}

/// Shape of the mesh and the row-major PE numbering over it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Geometry {
    rows: usize,
    cols: usize,
}

impl Geometry {
    pub fn new(rows: usize, cols: usize) -> Result<Self, MeshError> {
        if rows == 0 || cols == 0 || rows > MAX_MESH_DIM || cols > MAX_MESH_DIM {
            return Err(MeshError::Dimensions { rows, cols });
        }
        Ok(Self { rows, cols })
    }

    pub const fn rows(&self) -> usize {
        self.rows
    }

    pub const fn cols(&self) -> usize {
        self.cols
    }

    pub const fn n_pes(&self) -> usize {
        self.rows * self.cols
    }

    pub fn coord_of(&self, pe: usize) -> Result<CoreCoord, MeshError> {
        if pe >= self.n_pes() {
            return Err(MeshError::PeOutOfRange {
                pe,
                n_pes: self.n_pes(),
            });
        }
        Ok(CoreCoord::new(pe / self.cols, pe % self.cols))
    }

    pub fn pe_of(&self, coord: CoreCoord) -> Option<usize> {
        (coord.row < self.rows && coord.col < self.cols).then(|| coord.row * self.cols + coord.col)
    }

    /// PE owning the core named by `core_id`, if that core exists on this mesh.
    pub fn pe_of_core(&self, core_id: u16) -> Option<usize> {
        self.pe_of(CoreCoord::from_core_id(core_id))
    }

    pub fn encode(&self, pe: usize, offset: u32) -> Result<GlobalAddr, MeshError> {
        let coord = self.coord_of(pe)?;
        GlobalAddr::new(coord.core_id(), offset)
    }

    pub fn decode(&self, addr: GlobalAddr) -> Result<(usize, u32), MeshError> {
        let pe = self.pe_of_core(addr.core_id()).ok_or(MeshError::BusFault {
            core_id: addr.core_id(),
            offset: addr.offset(),
        })?;
        Ok((pe, addr.offset()))
    }

    /// Hop count between two PEs. Panics if either is out of range.
    pub fn distance(&self, a: usize, b: usize) -> u32 {
        let ca = CoreCoord::new(a / self.cols, a % self.cols);
        let cb = CoreCoord::new(b / self.cols, b % self.cols);
        ca.hops_to(cb)
    }
}

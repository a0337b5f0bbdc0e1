use super::addr::LOCAL_MEM_SIZE;
use super::MeshError;

/// Static partition of every local store. The program image is identical on
/// all cores, so these offsets are symmetric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemoryLayout {
    /// First byte after code and static data.
    pub program_end: u32,
    /// Lowest address the downward-growing stack may reach.
    pub stack_limit: u32,
}

impl Default for MemoryLayout {
    fn default() -> Self {
        // 4 KB of code loaded at 0x400, 4 KB of stack below 0x8000.
        Self {
            program_end: 0x1400,
            stack_limit: 0x7000,
        }
    }
}

impl MemoryLayout {
    pub fn validate(&self) -> Result<(), MeshError> {
        if self.program_end > self.stack_limit || self.stack_limit as usize > LOCAL_MEM_SIZE {
            return Err(MeshError::Descriptor("memory layout regions out of order"));
        }
        Ok(())
    }
}

/// One core's 32 KB SRAM plus the region markers of its memory map.
#[derive(Clone)]
pub struct LocalStore {
    bytes: Box<[u8; LOCAL_MEM_SIZE]>,
    program_end: u32,
    heap_base: u32,
    heap_brk: u32,
    stack_limit: u32,
}

impl std::fmt::Debug for LocalStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LocalStore")
            .field("program_end", &self.program_end)
            .field("heap_base", &self.heap_base)
            .field("heap_brk", &self.heap_brk)
            .field("stack_limit", &self.stack_limit)
            .finish_non_exhaustive()
    }
}

impl LocalStore {
    pub fn new(layout: MemoryLayout) -> Self {
        Self {
            bytes: Box::new([0; LOCAL_MEM_SIZE]),
            program_end: layout.program_end,
            heap_base: layout.program_end,
            heap_brk: layout.program_end,
            stack_limit: layout.stack_limit,
        }
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes[..]
    }

    pub fn program_end(&self) -> u32 {
        self.program_end
    }

    pub fn heap_base(&self) -> u32 {
        self.heap_base
    }

    pub fn heap_brk(&self) -> u32 {
        self.heap_brk
    }

    pub fn stack_limit(&self) -> u32 {
        self.stack_limit
    }

    /// Moves the heap base (runtime statics live between `program_end` and it).
    /// Resets the break to the new base.
    pub fn set_heap_base(&mut self, base: u32) -> Result<(), MeshError> {
        if base < self.program_end || base > self.stack_limit {
            return Err(MeshError::Descriptor("heap base outside free region"));
        }
        self.heap_base = base;
        self.heap_brk = base;
        Ok(())
    }

    pub fn set_heap_brk(&mut self, brk: u32) -> Result<(), MeshError> {
        if brk < self.heap_base || brk > self.stack_limit {
            return Err(MeshError::Descriptor("heap break outside heap region"));
        }
        self.heap_brk = brk;
        Ok(())
    }

    pub(crate) fn check_range(offset: u32, len: usize) -> Result<(), MeshError> {
        if offset as usize + len > LOCAL_MEM_SIZE {
            return Err(MeshError::BusFault { core_id: 0, offset });
        }
        Ok(())
    }

    pub fn read(&self, offset: u32, len: usize) -> Result<&[u8], MeshError> {
        Self::check_range(offset, len)?;
        Ok(&self.bytes[offset as usize..offset as usize + len])
    }

    pub fn write(&mut self, offset: u32, data: &[u8]) -> Result<(), MeshError> {
        Self::check_range(offset, data.len())?;
        self.bytes[offset as usize..offset as usize + data.len()].copy_from_slice(data);
        Ok(())
    }

    /// Little-endian word of `width` bytes.
    pub fn read_word(&self, offset: u32, width: usize) -> Result<u64, MeshError> {
        let mut buf = [0u8; 8];
        buf[..width].copy_from_slice(self.read(offset, width)?);
        Ok(u64::from_le_bytes(buf))
    }

    pub fn write_word(&mut self, offset: u32, width: usize, value: u64) -> Result<(), MeshError> {
        self.write(offset, &value.to_le_bytes()[..width])
    }
}

pub(crate) fn check_width(offset: u32, width: usize) -> Result<(), MeshError> {
    if !matches!(width, 1 | 2 | 4 | 8) {
        return Err(MeshError::Width(width));
    }
    if !(offset as usize).is_multiple_of(width) {
        return Err(MeshError::Alignment { offset, width });
    }
    Ok(())
}

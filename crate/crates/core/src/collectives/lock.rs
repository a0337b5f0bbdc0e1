use crate::shmem::{Result, Shmem, ShmemError};

/// PE holding every global lock word.
const LOCK_HOME: usize = 0;

impl Shmem {
    fn lock_tag(&self) -> u32 {
        self.my_pe() as u32 + 1
    }

    /// `shmem_set_lock`: spins with TESTSET on the lock word at symmetric
    /// offset `lock` of PE 0 until acquired.
    pub async fn set_lock(&mut self, lock: u32) -> Result<()> {
        Self::check_buffer(lock, 8, 8)?;
        self.enter().await;
        let addr = self.pe.addr_of(LOCK_HOME, lock)?;
        let tag = self.lock_tag();
        while self.pe.testset(addr, tag).await? != 0 {}
        Ok(())
    }

    /// `shmem_test_lock`: one TESTSET attempt. Returns whether the lock was acquired.
    pub async fn test_lock(&mut self, lock: u32) -> Result<bool> {
        Self::check_buffer(lock, 8, 8)?;
        self.enter().await;
        let addr = self.pe.addr_of(LOCK_HOME, lock)?;
        let tag = self.lock_tag();
        Ok(self.pe.testset(addr, tag).await? == 0)
    }

    /// `shmem_clear_lock`: completes outstanding writes, then frees the lock
    /// with a remote store. In strict mode a non-holder faults.
    pub async fn clear_lock(&mut self, lock: u32) -> Result<()> {
        Self::check_buffer(lock, 8, 8)?;
        self.quiet().await?;
        self.enter().await;
        let addr = self.pe.addr_of(LOCK_HOME, lock)?;
        if self.pe.strict() {
            let (holder, _) = self.pe.read(addr, 4).await?;
            if holder != self.lock_tag() as u64 {
                return Err(ShmemError::NotHolder {
                    lock,
                    pe: self.my_pe(),
                });
            }
        }
        self.pe.write_word(addr, 4, 0).await?;
        Ok(())
    }
}

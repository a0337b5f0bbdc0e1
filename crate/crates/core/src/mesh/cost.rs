//! Calibration constants that turn simulated events into cycles.

use super::Cycles;

/// Cycle costs of the simulated chip.
///
/// Every field is a calibration parameter and may be overridden from a
/// `key = value` file (see [`crate::config`]). The defaults model a 600 MHz
/// Epiphany-III: a remote double-word store issues every cycle and the paired
/// load costs one more, so the fast copy loop moves 8 bytes per 2 cycles
/// (2.4 GB/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    /// Core and network clock in Hz.
    pub clock_hz: f64,
    /// Issue cost of one 8-byte store in the unrolled copy loop.
    pub store_cycles_per_dword: f64,
    /// Extra cycle paid by an 8-byte load.
    pub load_extra_cycles: f64,
    /// Transit cost of one mesh hop.
    pub hop_cycles: f64,
    /// Fixed part of the stall a remote load imposes on its issuer.
    pub read_roundtrip_base: f64,
    /// Fixed DMA latency from start to first data.
    pub dma_setup_cycles: f64,
    /// DMA streaming cost per 8 bytes. Above 2.0 models the Epiphany-III errata throttle.
    pub dma_cycles_per_dword: f64,
    /// Delay from raising a user interrupt to the handler starting on the target.
    pub interrupt_latency_cycles: f64,
    /// Fixed part of a remote TESTSET round trip.
    pub testset_roundtrip_cycles: f64,
    /// WAND barrier completion after the last core arrives.
    pub wand_barrier_cycles: f64,
    /// Slowdown of the byte-wise copy path used for unaligned buffers.
    pub alignment_penalty_factor: f64,
    /// Network-interface latency of a remote store, on top of the hop cost.
    pub net_base_cycles: f64,
    /// One iteration of a spin-wait loop (load, compare, branch).
    pub poll_cycles: f64,
    /// Entry cost of a runtime routine.
    pub call_overhead_cycles: f64,
    /// Software cost of one step of a collective algorithm (partner and flag
    /// address arithmetic, stamp bookkeeping).
    pub collective_step_cycles: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            clock_hz: 600.0e6,
            store_cycles_per_dword: 1.0,
            load_extra_cycles: 1.0,
            hop_cycles: 1.5,
            read_roundtrip_base: 16.0,
            dma_setup_cycles: 96.0,
            dma_cycles_per_dword: 2.5,
            interrupt_latency_cycles: 40.0,
            testset_roundtrip_cycles: 20.0,
            wand_barrier_cycles: 60.0,
            alignment_penalty_factor: 4.0,
            net_base_cycles: 4.0,
            poll_cycles: 2.0,
            call_overhead_cycles: 4.0,
            collective_step_cycles: 20.0,
        }
    }
}

macro_rules! cost_fields {
    ($($name:ident),* $(,)?) => {
        impl CostModel {
            /// Names accepted as configuration keys, in declaration order.
            pub const KEYS: &'static [&'static str] = &[$(stringify!($name)),*];

            /// Sets the field named `key`. Returns `false` for unknown keys.
            pub fn set(&mut self, key: &str, value: f64) -> bool {
                match key {
                    $(stringify!($name) => { self.$name = value; true })*
                    _ => false,
                }
            }

            pub fn get(&self, key: &str) -> Option<f64> {
                match key {
                    $(stringify!($name) => Some(self.$name),)*
                    _ => None,
                }
            }
        }
    };
}

cost_fields!(
    clock_hz,
    store_cycles_per_dword,
    load_extra_cycles,
    hop_cycles,
    read_roundtrip_base,
    dma_setup_cycles,
    dma_cycles_per_dword,
    interrupt_latency_cycles,
    testset_roundtrip_cycles,
    wand_barrier_cycles,
    alignment_penalty_factor,
    net_base_cycles,
    poll_cycles,
    call_overhead_cycles,
    collective_step_cycles,
);

fn ceil(x: f64) -> Cycles {
    x.ceil() as Cycles
}

impl CostModel {
    /// Returns the first field that is not strictly positive and finite.
    pub fn validate(&self) -> Result<(), &'static str> {
        for key in Self::KEYS {
            let v = self.get(key).expect("known key");
            if !(v.is_finite() && v > 0.0) {
                return Err(key);
            }
        }
        Ok(())
    }

    pub fn cycles_to_seconds(&self, cycles: f64) -> f64 {
        cycles / self.clock_hz
    }

    pub fn seconds_to_cycles(&self, seconds: f64) -> f64 {
        seconds * self.clock_hz
    }

    /// Peak bytes per cycle of the fast copy loop.
    pub fn fast_path_bytes_per_cycle(&self) -> f64 {
        8.0 / (self.store_cycles_per_dword + self.load_extra_cycles)
    }

    pub fn dma_bytes_per_cycle(&self) -> f64 {
        8.0 / self.dma_cycles_per_dword
    }

    /// True when DMA runs below half of the 8 bytes/clock peak.
    pub fn dma_throttled(&self) -> bool {
        self.dma_bytes_per_cycle() < 4.0
    }

    pub fn hop_cost(&self, hops: u32) -> Cycles {
        ceil(self.hop_cycles * hops as f64)
    }

    /// Store issue to delivery at a core `hops` away. Zero for the local store.
    pub fn store_latency(&self, hops: u32) -> Cycles {
        if hops == 0 {
            0
        } else {
            ceil(self.net_base_cycles) + self.hop_cost(hops)
        }
    }

    pub fn store_issue(&self) -> Cycles {
        ceil(self.store_cycles_per_dword)
    }

    /// Issuer stall for one load, local or `hops` away.
    pub fn load_stall(&self, hops: u32) -> Cycles {
        if hops == 0 {
            ceil(self.load_extra_cycles)
        } else {
            ceil(self.read_roundtrip_base + 2.0 * self.hop_cycles * hops as f64)
        }
    }

    pub fn testset_stall(&self, hops: u32) -> Cycles {
        ceil(self.testset_roundtrip_cycles + 2.0 * self.hop_cycles * hops as f64)
    }

    /// Issue cost of copying `bytes` out of the local store with the unrolled loop.
    pub fn fast_copy(&self, bytes: usize, aligned: bool) -> Cycles {
        let dwords = bytes.div_ceil(8) as f64;
        let base = dwords * (self.store_cycles_per_dword + self.load_extra_cycles);
        ceil(if aligned {
            base
        } else {
            base * self.alignment_penalty_factor
        })
    }

    /// Cost of pulling `bytes` from a store `hops` away with stalling loads.
    pub fn remote_read_copy(&self, bytes: usize, hops: u32, aligned: bool) -> Cycles {
        let dwords = bytes.div_ceil(8) as f64;
        let per = self.load_stall(hops) as f64 + self.store_cycles_per_dword;
        ceil(if aligned {
            dwords * per
        } else {
            dwords * per * self.alignment_penalty_factor
        })
    }

    /// Start-to-completion time of a DMA moving `dwords` double-words across `hops`.
    pub fn dma_transfer(&self, dwords: u64, hops: u32) -> Cycles {
        ceil(self.dma_setup_cycles + dwords as f64 * self.dma_cycles_per_dword)
            + self.hop_cost(hops)
    }

    pub fn poll(&self) -> Cycles {
        ceil(self.poll_cycles)
    }

    pub fn call_overhead(&self) -> Cycles {
        ceil(self.call_overhead_cycles)
    }

    pub fn collective_step(&self) -> Cycles {
        ceil(self.collective_step_cycles)
    }

    pub fn interrupt_latency(&self) -> Cycles {
        ceil(self.interrupt_latency_cycles)
    }

    pub fn wand(&self) -> Cycles {
        ceil(self.wand_barrier_cycles)
    }
}

//! Microbenchmark suite over the simulator.
//!
//! Every sample runs on a fresh chip with a deterministic schedule, so the
//! timings are noise-free and a given configuration always produces the same
//! numbers. Message sizes double from the lower to the upper bound; barriers
//! sweep the PE count instead.

mod fit;
mod report;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::collectives::{
    work_array_len, ActiveSet, BarrierKind, ALLTOALL_SYNC_SIZE, BCAST_SYNC_SIZE, COLLECT_SYNC_SIZE,
    REDUCE_SYNC_SIZE,
};
use crate::config::{ConfigError, RuntimeConfig};
use crate::mesh::{Cycles, Mesh, SimOptions, MAX_MESH_DIM};
use crate::shmem::{ReduceOp, Shmem, ShmemError};

pub use fit::{fit_alpha_beta, fit_suite, AlphaBetaFit, FitError, RoutineFit};
pub use report::{emit_report, ReportFormat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Routine {
    Put,
    Get,
    PutNbi,
    GetNbi,
    Atomics,
    Barrier,
    BarrierCounter,
    Broadcast,
    Collect,
    Fcollect,
    Reduce,
    Alltoall,
    Locks,
}

/// How a routine's samples are spread.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    Size,
    PeCount,
    /// One sample at a fixed size.
    Single(usize),
}

impl Routine {
    pub const ALL: [Routine; 13] = [
        Routine::Put,
        Routine::Get,
        Routine::PutNbi,
        Routine::GetNbi,
        Routine::Atomics,
        Routine::Barrier,
        Routine::BarrierCounter,
        Routine::Broadcast,
        Routine::Collect,
        Routine::Fcollect,
        Routine::Reduce,
        Routine::Alltoall,
        Routine::Locks,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Routine::Put => "put",
            Routine::Get => "get",
            Routine::PutNbi => "put_nbi",
            Routine::GetNbi => "get_nbi",
            Routine::Atomics => "atomics",
            Routine::Barrier => "barrier",
            Routine::BarrierCounter => "barrier_counter",
            Routine::Broadcast => "broadcast",
            Routine::Collect => "collect",
            Routine::Fcollect => "fcollect",
            Routine::Reduce => "reduce",
            Routine::Alltoall => "alltoall",
            Routine::Locks => "locks",
        }
    }

    pub fn sweep(self) -> Sweep {
        match self {
            Routine::Atomics => Sweep::Single(8),
            Routine::Locks => Sweep::Single(0),
            Routine::Barrier | Routine::BarrierCounter => Sweep::PeCount,
            _ => Sweep::Size,
        }
    }

    /// Point-to-point routines report the initiator's time, collectives the slowest member's.
    fn is_collective(self) -> bool {
        !matches!(
            self,
            Routine::Put
                | Routine::Get
                | Routine::PutNbi
                | Routine::GetNbi
                | Routine::Atomics
                | Routine::Locks
        )
    }

    /// Parses a comma-separated list; `all` expands to every routine.
    pub fn parse_list(list: &str) -> Result<Vec<Routine>, BenchError> {
        let mut out = vec![];
        for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            if name == "all" {
                out.extend(Routine::ALL);
            } else {
                out.push(name.parse()?);
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Routine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Routine {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Routine::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| BenchError::UnknownRoutine(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown benchmark `{0}`")]
    UnknownRoutine(String),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("simulation failed: {0}")]
    Sim(#[from] ShmemError),
    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
}

impl BenchError {
    /// Whether the error comes from the user's configuration rather than a run.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            BenchError::UnknownRoutine(_) | BenchError::InvalidSweep(_) | BenchError::Config(_)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub routines: Vec<Routine>,
    pub rows: usize,
    pub cols: usize,
    /// PEs taking part; the mesh is shrunk to fit.
    pub pes: usize,
    pub min_size: usize,
    pub max_size: usize,
    pub reps: usize,
    /// Untimed iterations before each measurement.
    pub warmup: usize,
    pub seed: u64,
    pub runtime: RuntimeConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            routines: Routine::ALL.to_vec(),
            rows: 4,
            cols: 4,
            pes: 16,
            min_size: 8,
            max_size: 8192,
            reps: 100,
            warmup: 2,
            seed: 0,
            runtime: RuntimeConfig::default(),
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::InvalidSweep(m));
        if self.rows == 0 || self.cols == 0 || self.rows > MAX_MESH_DIM || self.cols > MAX_MESH_DIM
        {
            return bad(format!(
                "mesh {}x{} outside 1..={MAX_MESH_DIM}",
                self.rows, self.cols
            ));
        }
        if self.pes == 0 || self.pes > self.rows * self.cols {
            return bad(format!(
                "{} PEs do not fit a {}x{} mesh",
                self.pes, self.rows, self.cols
            ));
        }
        for n in self.pe_counts() {
            if mesh_shape(n, self.rows, self.cols).is_none() {
                return bad(format!(
                    "{n} PEs cannot form a rectangle inside {}x{}",
                    self.rows, self.cols
                ));
            }
        }
        if self.min_size < 8 || !self.min_size.is_multiple_of(8) || self.min_size > self.max_size {
            return bad(format!(
                "sizes {}:{} must be multiples of 8 with min <= max",
                self.min_size, self.max_size
            ));
        }
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        self.runtime.cost.validate().map_err(ConfigError::Invalid)?;
        Ok(())
    }

    /// `min, 2 min, 4 min, ...` up to `max`.
    pub fn sizes(&self) -> Vec<usize> {
        std::iter::successors(Some(self.min_size), |&s| s.checked_mul(2))
            .take_while(|&s| s <= self.max_size)
            .collect()
    }

    /// Powers of two below `pes`, then `pes` itself.
    pub fn pe_counts(&self) -> Vec<usize> {
        let mut v: Vec<usize> = std::iter::successors(Some(2), |&p| Some(p * 2))
            .take_while(|&p| p < self.pes)
            .collect();
        v.push(self.pes);
        v
    }
}

/// The most square `r x c = n` rectangle inside `rows x cols`.
pub fn mesh_shape(n: usize, rows: usize, cols: usize) -> Option<(usize, usize)> {
    (1..=rows.min(n))
        .filter(|r| n.is_multiple_of(*r) && n / r <= cols)
        .min_by_key(|r| r.abs_diff(n / r))
        .map(|r| (r, n / r))
}

/// Per-iteration mean over `reps` timed iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchSample {
    pub routine: Routine,
    pub pe_count: usize,
    pub size_bytes: usize,
    pub reps: usize,
    pub cycles: f64,
    pub seconds: f64,
}

impl BenchSample {
    /// Bytes per second, zero for size-less routines.
    pub fn bandwidth(&self) -> f64 {
        if self.size_bytes == 0 {
            0.0
        } else {
            self.size_bytes as f64 / self.seconds
        }
    }
}

pub fn run_suite(cfg: &BenchConfig) -> Result<Vec<BenchSample>, BenchError> {
    cfg.validate()?;
    let mut out = vec![];
    for &routine in &cfg.routines {
        let points: Vec<(usize, usize)> = match routine.sweep() {
            Sweep::Size => cfg.sizes().into_iter().map(|l| (cfg.pes, l)).collect(),
            Sweep::PeCount => cfg.pe_counts().into_iter().map(|n| (n, 0)).collect(),
            Sweep::Single(l) => vec![(cfg.pes, l)],
        };
        for (pes, size) in points {
            out.extend(measure(cfg, routine, pes, size)?);
        }
    }
    Ok(out)
}

/// Symmetric buffers of one sample, carved from a single allocation.
#[derive(Debug, Clone, Copy)]
struct Buffers {
    src: u32,
    dst: u32,
    wrk: u32,
    psync: u32,
}

impl Buffers {
    /// Bytes of (src, dst, pWrk, pSync).
    fn sizes(routine: Routine, l: usize, n: usize) -> [usize; 4] {
        match routine {
            Routine::Put | Routine::Get | Routine::PutNbi | Routine::GetNbi => [l, l, 0, 0],
            Routine::Atomics | Routine::Locks => [0, 8, 0, 0],
            Routine::Barrier | Routine::BarrierCounter => [0, 0, 0, 0],
            Routine::Broadcast => [l, l, 0, 8 * BCAST_SYNC_SIZE],
            Routine::Collect | Routine::Fcollect => [l, l * n, 0, 8 * COLLECT_SYNC_SIZE],
            Routine::Reduce => [l, l, 8 * work_array_len(l / 8), 8 * REDUCE_SYNC_SIZE],
            Routine::Alltoall => [l * n, l * n, 0, 8 * ALLTOALL_SYNC_SIZE],
        }
    }

    /// `None` when the buffers do not fit the symmetric heap.
    async fn alloc(
        s: &mut Shmem,
        routine: Routine,
        l: usize,
    ) -> Result<Option<Buffers>, ShmemError> {
        let sz = Self::sizes(routine, l, s.n_pes()).map(|b| b.next_multiple_of(8) as u32);
        let base = match s.malloc(sz.iter().sum::<u32>() as usize).await {
            Ok(a) => a.offset,
            Err(ShmemError::OutOfMemory { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let src = base;
        let dst = src + sz[0];
        let wrk = dst + sz[1];
        Ok(Some(Buffers {
            src,
            dst,
            wrk,
            psync: wrk + sz[2],
        }))
    }
}

fn measure(
    cfg: &BenchConfig,
    routine: Routine,
    pes: usize,
    size: usize,
) -> Result<Option<BenchSample>, BenchError> {
    let (rows, cols) = mesh_shape(pes, cfg.rows, cfg.cols)
        .ok_or_else(|| BenchError::InvalidSweep(format!("{pes} PEs")))?;
    let cost = cfg.runtime.cost;
    let mut mesh = Mesh::new(rows, cols, cost)
        .map_err(ShmemError::from)?
        .with_options(SimOptions::seeded(cfg.seed));
    let features = cfg.runtime.features;
    let (reps, warmup) = (cfg.reps, cfg.warmup);
    let times = mesh.run(|pe| async move {
        let mut s = Shmem::init(&pe, features).await?;
        let Some(buf) = Buffers::alloc(&mut s, routine, size).await? else {
            return Ok::<_, ShmemError>(None);
        };
        for _ in 0..warmup {
            iteration(&mut s, routine, buf, size).await?;
        }
        s.barrier_all().await?;
        let t0 = s.now();
        for _ in 0..reps {
            iteration(&mut s, routine, buf, size).await?;
        }
        let t = s.now() - t0;
        s.barrier_all().await?;
        Ok(Some(t))
    })?;
    let timer = if routine == Routine::Locks {
        pes - 1
    } else {
        0
    };
    let cycles: Option<Cycles> = if routine.is_collective() {
        times.into_iter().max().flatten()
    } else {
        times[timer]
    };
    Ok(cycles.map(|c| {
        let cycles = c as f64 / reps as f64;
        BenchSample {
            routine,
            pe_count: pes,
            size_bytes: size,
            reps,
            cycles,
            seconds: cost.cycles_to_seconds(cycles),
        }
    }))
}

/// One timed operation. Point-to-point routines run on PE 0 against its
/// neighbour PE 1; the lock benchmark runs uncontended on the last PE.
async fn iteration(
    s: &mut Shmem,
    routine: Routine,
    b: Buffers,
    l: usize,
) -> Result<(), ShmemError> {
    let n = s.n_pes();
    let me = s.my_pe();
    let peer = 1 % n;
    let all = ActiveSet::all(n);
    match routine {
        Routine::Put if me == 0 => s.putmem(b.dst, b.src, l, peer).await,
        Routine::Get if me == 0 => s.getmem(b.dst, b.src, l, peer).await,
        Routine::PutNbi if me == 0 => {
            s.put_nbi(b.dst, b.src, l / 8, 8, peer).await?;
            s.quiet().await
        }
        Routine::GetNbi if me == 0 => {
            s.get_nbi(b.dst, b.src, l / 8, 8, peer).await?;
            s.quiet().await
        }
        Routine::Atomics if me == 0 => s.atomic_fetch_add::<i64>(b.dst, 1, peer).await.map(drop),
        Routine::Locks if me == n - 1 => {
            s.set_lock(b.dst).await?;
            s.clear_lock(b.dst).await
        }
        Routine::Barrier => s.barrier_all().await,
        Routine::BarrierCounter => s.barrier_all_with(BarrierKind::Counter).await,
        Routine::Broadcast => s.broadcast(b.dst, b.src, l / 8, 8, 0, all, b.psync).await,
        Routine::Collect => s.collect(b.dst, b.src, l / 8, 8, all, b.psync).await,
        Routine::Fcollect => s.fcollect(b.dst, b.src, l / 8, 8, all, b.psync).await,
        Routine::Reduce => {
            s.reduce::<i64>(
                ReduceOp::Sum,
                b.dst,
                b.src,
                l / 8,
                all,
                b.wrk,
                work_array_len(l / 8),
                b.psync,
            )
            .await
        }
        Routine::Alltoall => s.alltoall(b.dst, b.src, l / 8, 8, all, b.psync).await,
        _ => Ok(()),
    }
}

//! Python bindings: cost model, symmetric heap, whole-chip collective runs
//! and the benchmark harness.

use epishmem::bench::{self, BenchConfig, ReportFormat, Routine};
use epishmem::collectives::{work_array_len, ActiveSet, BarrierKind};
use epishmem::mesh::{CoreCoord, GlobalAddr, SimOptions, MAX_MESH_DIM};
use epishmem::shmem::{ReduceOp, SymHeap};
use epishmem::{Features, Mesh, RuntimeConfig, Shmem, ShmemError};
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(epishmem_py, SimulationError, PyRuntimeError);

fn sim_err(e: impl std::fmt::Display) -> PyErr {
    SimulationError::new_err(e.to_string())
}

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "CostModel", from_py_object)]
#[derive(Clone, Default)]
struct PyCostModel {
    inner: epishmem::CostModel,
}

#[pymethods]
impl PyCostModel {
    /// Defaults, with any field overridden by keyword.
    #[new]
    #[pyo3(signature = (**overrides))]
    fn new(overrides: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut m = Self::default();
        if let Some(kw) = overrides {
            for (k, v) in kw.iter() {
                m.set(&k.extract::<String>()?, v.extract()?)?;
            }
        }
        Ok(m)
    }

    /// Cost model from `key = value` text; feature flags in the text are ignored.
    #[staticmethod]
    fn from_config(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: RuntimeConfig::parse(text).map_err(value_err)?.cost,
        })
    }

    #[staticmethod]
    fn keys() -> Vec<&'static str> {
        epishmem::CostModel::KEYS.to_vec()
    }

    fn get(&self, key: &str) -> PyResult<f64> {
        self.inner
            .get(key)
            .ok_or_else(|| value_err(format!("unknown cost key `{key}`")))
    }

    fn set(&mut self, key: &str, value: f64) -> PyResult<()> {
        let mut next = self.inner;
        if !next.set(key, value) {
            return Err(value_err(format!("unknown cost key `{key}`")));
        }
        next.validate()
            .map_err(|f| value_err(format!("{f} must be positive and finite")))?;
        self.inner = next;
        Ok(())
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for k in epishmem::CostModel::KEYS {
            d.set_item(k, self.inner.get(k))?;
        }
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!(
            "CostModel(clock_hz={}, hop_cycles={})",
            self.inner.clock_hz, self.inner.hop_cycles
        )
    }
}

fn cost_of(cost: Option<PyCostModel>) -> epishmem::CostModel {
    cost.map(|c| c.inner).unwrap_or_default()
}

/// The bump allocator behind `shmem_malloc`, usable on its own.
#[pyclass(name = "SymHeap")]
struct PySymHeap {
    inner: SymHeap,
}

#[pymethods]
impl PySymHeap {
    #[new]
    fn new(base: u32, limit: u32) -> Self {
        Self {
            inner: SymHeap::new(base, limit),
        }
    }

    fn malloc(&mut self, size: usize) -> PyResult<u32> {
        self.inner.malloc(size).map(|a| a.offset).map_err(value_err)
    }

    fn align(&mut self, alignment: usize, size: usize) -> PyResult<u32> {
        self.inner
            .align(alignment, size)
            .map(|a| a.offset)
            .map_err(value_err)
    }

    fn free(&mut self, offset: u32) -> PyResult<()> {
        self.inner.free(offset).map_err(value_err)
    }

    fn realloc(&mut self, offset: u32, size: usize) -> PyResult<u32> {
        self.inner
            .realloc(offset, size)
            .map(|a| a.offset)
            .map_err(value_err)
    }

    #[getter]
    fn brk(&self) -> u32 {
        self.inner.brk()
    }

    /// `(offset, size)` of every live allocation.
    #[getter]
    fn live(&self) -> Vec<(u32, u32)> {
        self.inner
            .live()
            .iter()
            .map(|a| (a.offset, a.size))
            .collect()
    }
}

/// Packs a core coordinate and local offset into a global address.
#[pyfunction]
fn pack_addr(row: usize, col: usize, offset: u32) -> PyResult<u32> {
    if row >= MAX_MESH_DIM || col >= MAX_MESH_DIM {
        return Err(value_err(format!(
            "coordinate ({row}, {col}) outside the mesh"
        )));
    }
    GlobalAddr::new(CoreCoord::new(row, col).core_id(), offset)
        .map(GlobalAddr::packed)
        .map_err(value_err)
}

/// `(row, col, offset)` of a packed global address.
#[pyfunction]
fn unpack_addr(packed: u32) -> (usize, usize, u32) {
    let a = GlobalAddr::from_packed(packed);
    let c = a.coord();
    (c.row, c.col, a.offset())
}

#[pyclass(name = "BenchSample", frozen, get_all, from_py_object)]
#[derive(Clone)]
struct PyBenchSample {
    routine: String,
    pe_count: usize,
    size_bytes: usize,
    reps: usize,
    cycles: f64,
    seconds: f64,
    bandwidth: f64,
}

impl From<&bench::BenchSample> for PyBenchSample {
    fn from(s: &bench::BenchSample) -> Self {
        Self {
            routine: s.routine.name().into(),
            pe_count: s.pe_count,
            size_bytes: s.size_bytes,
            reps: s.reps,
            cycles: s.cycles,
            seconds: s.seconds,
            bandwidth: s.bandwidth(),
        }
    }
}

impl PyBenchSample {
    fn to_core(&self) -> PyResult<bench::BenchSample> {
        Ok(bench::BenchSample {
            routine: self.routine.parse().map_err(value_err)?,
            pe_count: self.pe_count,
            size_bytes: self.size_bytes,
            reps: self.reps,
            cycles: self.cycles,
            seconds: self.seconds,
        })
    }
}

#[pymethods]
impl PyBenchSample {
    fn __repr__(&self) -> String {
        format!(
            "BenchSample({} pes={} L={} t={:.3e}s)",
            self.routine, self.pe_count, self.size_bytes, self.seconds
        )
    }
}

#[pyclass(name = "AlphaBetaFit", frozen, get_all)]
struct PyAlphaBetaFit {
    alpha: f64,
    beta_inv: f64,
    alpha_sd: Option<f64>,
    beta_sd: Option<f64>,
    residual: f64,
}

#[pymethods]
impl PyAlphaBetaFit {
    fn __repr__(&self) -> String {
        format!(
            "AlphaBetaFit(alpha={:.4e} s, beta_inv={:.4e} B/s)",
            self.alpha, self.beta_inv
        )
    }
}

/// Runs the benchmark suite and returns its samples.
#[pyfunction]
#[pyo3(signature = (suite = "all", rows = 4, cols = 4, pes = None, min_size = 8, max_size = 8192, reps = 100, seed = 0, wand_barrier = false, ipi_get = false, cost = None))]
#[allow(clippy::too_many_arguments)]
fn run_bench(
    py: Python<'_>,
    suite: &str,
    rows: usize,
    cols: usize,
    pes: Option<usize>,
    min_size: usize,
    max_size: usize,
    reps: usize,
    seed: u64,
    wand_barrier: bool,
    ipi_get: bool,
    cost: Option<PyCostModel>,
) -> PyResult<Vec<PyBenchSample>> {
    let cfg = BenchConfig {
        routines: Routine::parse_list(suite).map_err(value_err)?,
        rows,
        cols,
        pes: pes.unwrap_or(rows * cols),
        min_size,
        max_size,
        reps,
        seed,
        runtime: RuntimeConfig {
            cost: cost_of(cost),
            features: Features {
                use_wand_barrier: wand_barrier,
                use_ipi_get: ipi_get,
            },
        },
        ..BenchConfig::default()
    };
    let samples = py.detach(|| bench::run_suite(&cfg)).map_err(|e| {
        if e.is_config_error() {
            value_err(e)
        } else {
            sim_err(e)
        }
    })?;
    Ok(samples.iter().map(PyBenchSample::from).collect())
}

/// Least-squares `T = alpha + beta * L` over `(size_bytes, seconds)` pairs.
#[pyfunction]
fn fit_alpha_beta(sizes: Vec<usize>, seconds: Vec<f64>) -> PyResult<PyAlphaBetaFit> {
    if sizes.len() != seconds.len() {
        return Err(value_err("sizes and seconds differ in length"));
    }
    let samples: Vec<_> = sizes
        .into_iter()
        .zip(seconds)
        .map(|(l, t)| bench::BenchSample {
            routine: Routine::Put,
            pe_count: 1,
            size_bytes: l,
            reps: 1,
            cycles: 0.0,
            seconds: t,
        })
        .collect();
    let f = bench::fit_alpha_beta(&samples).map_err(value_err)?;
    Ok(PyAlphaBetaFit {
        alpha: f.alpha,
        beta_inv: f.beta_inv,
        alpha_sd: f.alpha_sd,
        beta_sd: f.beta_sd,
        residual: f.residual,
    })
}

/// CSV or table report of `samples` with per-routine fits.
#[pyfunction]
#[pyo3(signature = (samples, format = "csv"))]
fn emit_report(samples: Vec<PyBenchSample>, format: &str) -> PyResult<String> {
    let format: ReportFormat = format.parse().map_err(value_err)?;
    let core = samples
        .iter()
        .map(PyBenchSample::to_core)
        .collect::<PyResult<Vec<_>>>()?;
    Ok(bench::emit_report(&core, &bench::fit_suite(&core), format))
}

fn mesh_for(n: usize, cost: epishmem::CostModel, seed: u64) -> PyResult<Mesh> {
    if n == 0 {
        return Err(value_err("need at least one PE"));
    }
    let (r, c) = bench::mesh_shape(n, MAX_MESH_DIM, MAX_MESH_DIM)
        .ok_or_else(|| value_err(format!("{n} PEs do not fit the mesh")))?;
    Ok(Mesh::new(r, c, cost)
        .map_err(value_err)?
        .with_options(SimOptions::randomized(seed, 8)))
}

/// Cycles one whole-program barrier takes on `n` PEs.
#[pyfunction]
#[pyo3(signature = (kind, n = 16, cost = None))]
fn barrier_latency(
    py: Python<'_>,
    kind: &str,
    n: usize,
    cost: Option<PyCostModel>,
) -> PyResult<u64> {
    let kind = match kind {
        "wand" => BarrierKind::Wand,
        "dissemination" => BarrierKind::Dissemination,
        "counter" => BarrierKind::Counter,
        _ => return Err(value_err(format!("unknown barrier `{kind}`"))),
    };
    let cost = cost_of(cost);
    let out = py.detach(|| {
        let mut mesh = mesh_for(n, cost, 0)?.with_options(SimOptions::default());
        mesh.run(|pe| async move {
            let mut s = Shmem::init(&pe, Features::default()).await?;
            let t0 = s.now();
            s.barrier_all_with(kind).await?;
            Ok::<_, ShmemError>(s.now() - t0)
        })
        .map_err(sim_err)
    })?;
    Ok(out.into_iter().max().unwrap_or(0))
}

const DATA: u32 = 0x2000;

fn check_lens(rows: &[Vec<i64>]) -> PyResult<usize> {
    let n = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != n) {
        return Err(value_err(
            "every PE must contribute the same number of elements",
        ));
    }
    Ok(n)
}

/// Elementwise reduction of one list per PE; returns every PE's result.
#[pyfunction]
#[pyo3(signature = (op, values, seed = 0))]
fn reduce(py: Python<'_>, op: &str, values: Vec<Vec<i64>>, seed: u64) -> PyResult<Vec<Vec<i64>>> {
    let op = ReduceOp::ALL
        .into_iter()
        .find(|o| o.name() == op)
        .ok_or_else(|| value_err(format!("unknown op `{op}`")))?;
    let n = check_lens(&values)?;
    let pes = values.len();
    py.detach(|| {
        let mut mesh = mesh_for(pes, Default::default(), seed)?;
        mesh.run(|pe| {
            let mine = values[pe.id()].clone();
            async move {
                let mut s = Shmem::init(&pe, Features::default()).await?;
                let (src, dst) = (DATA, DATA + 8 * n as u32);
                let wrk = dst + 8 * n as u32;
                let psync = wrk + 8 * work_array_len(n) as u32;
                s.store(src, &mine).await?;
                s.reduce::<i64>(
                    op,
                    dst,
                    src,
                    n,
                    ActiveSet::all(pes),
                    wrk,
                    work_array_len(n),
                    psync,
                )
                .await?;
                s.load::<i64>(dst, n).await
            }
        })
        .map_err(sim_err)
    })
}

/// Broadcast of `data` from PE `root` on `pes` PEs; returns every PE's destination.
#[pyfunction]
#[pyo3(signature = (data, pes, root = 0, seed = 0))]
fn broadcast(
    py: Python<'_>,
    data: Vec<i64>,
    pes: usize,
    root: usize,
    seed: u64,
) -> PyResult<Vec<Vec<i64>>> {
    let n = data.len();
    py.detach(|| {
        let mut mesh = mesh_for(pes, Default::default(), seed)?;
        mesh.run(|pe| {
            let data = data.clone();
            async move {
                let mut s = Shmem::init(&pe, Features::default()).await?;
                let dst = DATA + 8 * n as u32;
                let psync = dst + 8 * n as u32;
                s.store(DATA, &data).await?;
                s.broadcast(dst, DATA, n, 8, root, ActiveSet::all(pes), psync)
                    .await?;
                s.load::<i64>(dst, n).await
            }
        })
        .map_err(sim_err)
    })
}

/// All-to-all exchange: PE i sends block j of `blocks[i]` to PE j.
#[pyfunction]
#[pyo3(signature = (blocks, seed = 0))]
fn alltoall(py: Python<'_>, blocks: Vec<Vec<i64>>, seed: u64) -> PyResult<Vec<Vec<i64>>> {
    let pes = blocks.len();
    let total = check_lens(&blocks)?;
    if pes == 0 || total % pes != 0 {
        return Err(value_err(
            "each PE must contribute a multiple of the PE count",
        ));
    }
    py.detach(|| {
        let mut mesh = mesh_for(pes, Default::default(), seed)?;
        mesh.run(|pe| {
            let mine = blocks[pe.id()].clone();
            async move {
                let mut s = Shmem::init(&pe, Features::default()).await?;
                let dst = DATA + 8 * total as u32;
                let psync = dst + 8 * total as u32;
                s.store(DATA, &mine).await?;
                s.alltoall(dst, DATA, total / pes, 8, ActiveSet::all(pes), psync)
                    .await?;
                s.load::<i64>(dst, total).await
            }
        })
        .map_err(sim_err)
    })
}

/// Every PE performs `iters` atomic fetch-and-adds on one counter; returns its final value.
#[pyfunction]
#[pyo3(signature = (pes, iters, seed = 0))]
fn fetch_add_counter(py: Python<'_>, pes: usize, iters: usize, seed: u64) -> PyResult<i64> {
    let out = py.detach(|| {
        let mut mesh = mesh_for(pes, Default::default(), seed)?;
        mesh.run(|pe| async move {
            let mut s = Shmem::init(&pe, Features::default()).await?;
            for _ in 0..iters {
                s.atomic_fetch_add::<i64>(DATA, 1, 0).await?;
            }
            s.barrier_all().await?;
            s.atomic_fetch::<i64>(DATA, 0).await
        })
        .map_err(sim_err)
    })?;
    Ok(out[0])
}

#[pymodule]
fn epishmem_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SimulationError", m.py().get_type::<SimulationError>())?;
    m.add_class::<PyCostModel>()?;
    m.add_class::<PySymHeap>()?;
    m.add_class::<PyBenchSample>()?;
    m.add_class::<PyAlphaBetaFit>()?;
    m.add_function(wrap_pyfunction!(pack_addr, m)?)?;
    m.add_function(wrap_pyfunction!(unpack_addr, m)?)?;
    m.add_function(wrap_pyfunction!(run_bench, m)?)?;
    m.add_function(wrap_pyfunction!(fit_alpha_beta, m)?)?;
    m.add_function(wrap_pyfunction!(emit_report, m)?)?;
    m.add_function(wrap_pyfunction!(barrier_latency, m)?)?;
    m.add_function(wrap_pyfunction!(reduce, m)?)?;
    m.add_function(wrap_pyfunction!(broadcast, m)?)?;
    m.add_function(wrap_pyfunction!(alltoall, m)?)?;
    m.add_function(wrap_pyfunction!(fetch_add_counter, m)?)?;
    Ok(())
}

//! Shared drivers for the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use epishmem::collectives::{
    work_array_len, ActiveSet, ALLTOALL_SYNC_SIZE, BCAST_SYNC_SIZE, COLLECT_SYNC_SIZE,
    REDUCE_SYNC_SIZE,
};
use epishmem::mesh::SimOptions;
use epishmem::shmem::{Elem, ReduceOp};
use epishmem::{CostModel, Features, Mesh, Shmem, ShmemError};

pub const SIZES: [usize; 6] = [0, 1, 3, 8, 64, 257];
const SENTINEL: u8 = 0xa5;

/// Seed `s` covers pe_size `1 + s % 16` and element count `SIZES[(s / 16) % 6]`,
/// so seeds 0..96 enumerate the whole grid.
#[derive(Debug, Clone, Copy)]
pub struct Case {
    pub seed: u64,
    pub set: ActiveSet,
    pub nelems: usize,
    pub features: Features,
}

impl Case {
    pub fn from_seed(seed: u64) -> Self {
        let size = 1 + (seed % 16) as usize;
        let nelems = SIZES[(seed / 16) as usize % SIZES.len()];
        // spread the set over the 4x4 mesh when a stride or offset still fits
        let stride = u32::from(2 * (size - 1) < 16 && seed % 3 == 1);
        let span = ((size - 1) << stride) + 1;
        let start = (seed as usize * 5) % (16 - span + 1);
        let features = Features {
            use_wand_barrier: seed.is_multiple_of(2),
            use_ipi_get: seed % 4 < 2,
        };
        Self {
            seed,
            set: ActiveSet::new(start, stride, size),
            nelems,
            features,
        }
    }
}

pub fn v32(seed: u64, pe: usize, i: usize) -> u32 {
    (seed as u32).wrapping_mul(2_654_435_761) ^ (pe as u32 * 1_000_003 + i as u32 * 7919)
}

pub fn v64(seed: u64, pe: usize, i: usize) -> u64 {
    (v32(seed, pe, i) as u64) << 29 | (v32(seed ^ 0xdead, i, pe) as u64)
}

/// Small signed values so sums and products stay meaningful.
pub fn vred(seed: u64, pe: usize, i: usize) -> i32 {
    (v32(seed, pe, i) % 9) as i32 - 3
}

fn bytes<T: Elem>(v: &[T]) -> Vec<u8> {
    T::encode(v)
}

/// Rank-dependent counts for `collect`.
pub fn collect_count(rank: usize, n: usize) -> usize {
    if rank.is_multiple_of(2) {
        n
    } else {
        n / 2
    }
}

type Images = BTreeMap<String, Vec<u8>>;

/// Runs every collective and RMA routine once on the case and returns each PE's
/// observed byte images.
pub fn observe(case: Case) -> Result<Vec<Images>, ShmemError> {
    let Case {
        seed,
        set,
        nelems: n,
        features,
    } = case;
    let mut mesh =
        Mesh::new(4, 4, CostModel::default())?.with_options(SimOptions::randomized(seed, 12));
    mesh.run(|pe| async move {
        let mut s = Shmem::init(&pe, features).await?;
        let me = s.my_pe();
        let rank = set.rank_of(me);
        let size = set.pe_size;
        let mut seen = Images::new();
        let syncs = s
            .malloc(
                8 * (BCAST_SYNC_SIZE + COLLECT_SYNC_SIZE + REDUCE_SYNC_SIZE + ALLTOALL_SYNC_SIZE),
            )
            .await?;
        let bsync = syncs.offset;
        let csync = bsync + 8 * BCAST_SYNC_SIZE as u32;
        let rsync = csync + 8 * COLLECT_SYNC_SIZE as u32;
        let async_ = rsync + 8 * REDUCE_SYNC_SIZE as u32;

        // broadcast, 8-byte elements
        let buf = s.malloc(16 * n + 8).await?;
        let (src, dst) = (buf.offset, buf.offset + 8 * n as u32);
        if let Some(_r) = rank {
            let root = seed as usize % size;
            s.store(src, &(0..n).map(|i| v64(seed, me, i)).collect::<Vec<_>>())
                .await?;
            s.store_bytes(dst, &vec![SENTINEL; 8 * n]).await?;
            s.broadcast(dst, src, n, 8, root, set, bsync).await?;
            seen.insert("broadcast".into(), s.load_bytes(dst, 8 * n).await?);
        }
        s.free(buf).await?;

        // collect and fcollect, 4-byte elements
        let buf = s.malloc(4 * n + 4 * n * size + 8).await?;
        let (src, dst) = (buf.offset, buf.offset + 4 * n as u32);
        if let Some(r) = rank {
            s.store(src, &(0..n).map(|i| v32(seed, me, i)).collect::<Vec<_>>())
                .await?;
            let total: usize = (0..size).map(|k| collect_count(k, n)).sum();
            s.collect(dst, src, collect_count(r, n), 4, set, csync)
                .await?;
            seen.insert("collect".into(), s.load_bytes(dst, 4 * total).await?);
            s.fcollect(dst, src, n, 4, set, csync).await?;
            seen.insert("fcollect".into(), s.load_bytes(dst, 4 * n * size).await?);
        }
        s.free(buf).await?;

        // reductions: every op on i32, sum/min/max on integer-valued f64
        let wl = work_array_len(n);
        let buf = s.malloc(8 * (2 * n + wl) + 8).await?;
        let (src, dst, wrk) = (
            buf.offset,
            buf.offset + 8 * n as u32,
            buf.offset + 16 * n as u32,
        );
        if rank.is_some() {
            s.store(src, &(0..n).map(|i| vred(seed, me, i)).collect::<Vec<_>>())
                .await?;
            for op in ReduceOp::ALL {
                s.reduce::<i32>(op, dst, src, n, set, wrk, wl, rsync)
                    .await?;
                seen.insert(
                    format!("reduce_i32_{}", op.name()),
                    s.load_bytes(dst, 4 * n).await?,
                );
            }
            s.store(
                src,
                &(0..n).map(|i| vred(seed, me, i) as f64).collect::<Vec<_>>(),
            )
            .await?;
            for op in [ReduceOp::Sum, ReduceOp::Min, ReduceOp::Max] {
                s.reduce::<f64>(op, dst, src, n, set, wrk, wl, rsync)
                    .await?;
                seen.insert(
                    format!("reduce_f64_{}", op.name()),
                    s.load_bytes(dst, 8 * n).await?,
                );
            }
        }
        s.free(buf).await?;

        // alltoall, 4-byte elements; large cases may not fit the local store
        match s.malloc(8 * n * size + 8).await {
            Ok(buf) => {
                let (src, dst) = (buf.offset, buf.offset + 4 * (n * size) as u32);
                if rank.is_some() {
                    s.store(
                        src,
                        &(0..n * size).map(|i| v32(seed, me, i)).collect::<Vec<_>>(),
                    )
                    .await?;
                    s.alltoall(dst, src, n, 4, set, async_).await?;
                    seen.insert("alltoall".into(), s.load_bytes(dst, 4 * n * size).await?);
                }
                s.free(buf).await?;
            }
            Err(ShmemError::OutOfMemory { .. }) => {}
            Err(e) => return Err(e),
        }

        // RMA around the member ring
        let l = 8 * n;
        let buf = s.malloc(5 * l + 8).await?;
        let src = buf.offset;
        let [put, get, put_nbi, get_nbi] = [1u32, 2, 3, 4].map(|k| src + k * l as u32);
        s.store(src, &(0..n).map(|i| v64(seed, me, i)).collect::<Vec<_>>())
            .await?;
        s.barrier_all().await?;
        if let Some(r) = rank {
            let at = |d: usize| set.member((r + d) % size);
            s.put(put, src, n, 8, at(1)).await?;
            s.get(get, src, n, 8, at(size - 1)).await?;
            s.put_nbi(put_nbi, src, n, 8, at(2 % size)).await?;
            s.get_nbi(get_nbi, src, n, 8, at(size - 2 % size)).await?;
            s.quiet().await?;
        }
        s.barrier_all().await?;
        if rank.is_some() {
            for (name, off) in [
                ("put", put),
                ("get", get),
                ("put_nbi", put_nbi),
                ("get_nbi", get_nbi),
            ] {
                seen.insert(name.into(), s.load_bytes(off, l).await?);
            }
        }
        Ok(seen)
    })
}

/// Sequential oracle for what `observe` should report on every PE.
pub fn expected(case: Case) -> Vec<Images> {
    let Case {
        seed,
        set,
        nelems: n,
        ..
    } = case;
    let size = set.pe_size;
    let members: Vec<usize> = set.members().collect();
    let mut out = vec![Images::new(); 16];
    for (r, &pe) in members.iter().enumerate() {
        let m = &mut out[pe];
        let root = seed as usize % size;
        m.insert(
            "broadcast".into(),
            if r == root {
                vec![SENTINEL; 8 * n]
            } else {
                bytes(
                    &(0..n)
                        .map(|i| v64(seed, members[root], i))
                        .collect::<Vec<_>>(),
                )
            },
        );
        let cat: Vec<u32> = members
            .iter()
            .enumerate()
            .flat_map(|(k, &p)| (0..collect_count(k, n)).map(move |i| v32(seed, p, i)))
            .collect();
        m.insert("collect".into(), bytes(&cat));
        let fcat: Vec<u32> = members
            .iter()
            .flat_map(|&p| (0..n).map(move |i| v32(seed, p, i)))
            .collect();
        m.insert("fcollect".into(), bytes(&fcat));
        for op in ReduceOp::ALL {
            let v: Vec<i32> = (0..n)
                .map(|i| {
                    members
                        .iter()
                        .map(|&p| vred(seed, p, i))
                        .reduce(|a, b| i32::combine(op, a, b).unwrap())
                        .unwrap()
                })
                .collect();
            m.insert(format!("reduce_i32_{}", op.name()), bytes(&v));
        }
        for op in [ReduceOp::Sum, ReduceOp::Min, ReduceOp::Max] {
            let v: Vec<f64> = (0..n)
                .map(|i| {
                    members
                        .iter()
                        .map(|&p| vred(seed, p, i) as f64)
                        .reduce(|a, b| f64::combine(op, a, b).unwrap())
                        .unwrap()
                })
                .collect();
            m.insert(format!("reduce_f64_{}", op.name()), bytes(&v));
        }
        let t: Vec<u32> = members
            .iter()
            .flat_map(|&p| (0..n).map(move |i| v32(seed, p, r * n + i)))
            .collect();
        m.insert("alltoall".into(), bytes(&t));
        let at = |d: usize| members[(r + d) % size];
        let from = |p: usize| bytes(&(0..n).map(|i| v64(seed, p, i)).collect::<Vec<_>>());
        m.insert("put".into(), from(at(size - 1)));
        m.insert("get".into(), from(at(size - 1)));
        m.insert("put_nbi".into(), from(at(size - 2 % size)));
        m.insert("get_nbi".into(), from(at(size - 2 % size)));
    }
    out
}

/// Number of images compared, or a description of the first mismatch.
pub fn check_case(case: Case) -> Result<usize, String> {
    let got = observe(case).map_err(|e| format!("{case:?}: {e}"))?;
    let want = expected(case);
    let mut checked = 0;
    for (pe, (g, w)) in got.iter().zip(&want).enumerate() {
        for (name, image) in w {
            match g.get(name) {
                Some(x) if x == image => checked += 1,
                // only alltoall may be skipped, and only when it cannot fit
                None if name == "alltoall" && 8 * case.nelems * case.set.pe_size > 16 * 1024 => {}
                other => {
                    return Err(format!(
                        "{case:?} pe {pe} {name}: got {other:?}, want {image:?}"
                    ))
                }
            }
        }
        if g.len() > w.len() {
            return Err(format!("{case:?} pe {pe}: unexpected images"));
        }
    }
    Ok(checked)
}

use epishmem::collectives::{ceil_log2, ActiveSet, BarrierKind, BARRIER_SYNC_SIZE};
use epishmem::mesh::SimOptions;
use epishmem::{CostModel, Cycles, Features, Mesh, Shmem, ShmemError};
use proptest::prelude::*;

const COUNTER: u32 = 0x3000;
const LOCK: u32 = 0x3008;
const SHARED: u32 = 0x3010;
const PSYNC: u32 = 0x3100;

fn fetch_add_run(seed: u64) -> Vec<Vec<i64>> {
    let mut m = Mesh::new(3, 5, CostModel::default())
        .unwrap()
        .with_options(SimOptions::randomized(seed, 25));
    m.run(|pe| async move {
        let mut s = Shmem::init(&pe, Features::default()).await?;
        let mut got = vec![];
        for _ in 0..100 {
            got.push(s.atomic_fetch_add::<i64>(COUNTER, 1, 7).await?);
        }
        s.barrier_all().await?;
        got.push(s.atomic_fetch::<i64>(COUNTER, 7).await?);
        Ok::<_, ShmemError>(got)
    })
    .unwrap()
}

#[test]
fn fetch_add_is_linearizable() {
    for seed in 0..20 {
        let out = fetch_add_run(seed);
        assert!(out.iter().all(|v| v[100] == 1500), "seed {seed}");
        // every fetched value is distinct and the set is 0..1500
        let mut all: Vec<i64> = out.iter().flat_map(|v| v[..100].iter().copied()).collect();
        all.sort();
        assert_eq!(all, (0..1500).collect::<Vec<_>>());
        // each PE sees its own increments in increasing order
        assert!(out.iter().all(|v| v[..100].windows(2).all(|w| w[0] < w[1])));
    }
}

fn locked_sections(
    seed: u64,
    rows: usize,
    cols: usize,
    iters: usize,
) -> (u64, Vec<(Cycles, Cycles)>) {
    let mut m = Mesh::new(rows, cols, CostModel::default())
        .unwrap()
        .with_options(SimOptions::randomized(seed, 40));
    let out = m
        .run(|pe| async move {
            let mut s = Shmem::init(&pe, Features::default()).await?;
            let mut spans = vec![];
            for k in 0..iters {
                s.compute((s.my_pe() as u64 * 13 + k as u64 * seed) % 29)
                    .await;
                s.set_lock(LOCK).await?;
                let t0 = s.now();
                let v = s.atomic_fetch::<i64>(SHARED, 0).await?;
                s.compute(5).await;
                s.atomic_set::<i64>(SHARED, v + 1, 0).await?;
                spans.push((t0, s.now()));
                s.clear_lock(LOCK).await?;
            }
            s.barrier_all().await?;
            Ok::<_, ShmemError>((s.atomic_fetch::<i64>(SHARED, 0).await? as u64, spans))
        })
        .unwrap();
    let total = out[0].0;
    let mut spans: Vec<_> = out.into_iter().flat_map(|(_, s)| s).collect();
    spans.sort();
    (total, spans)
}

#[test]
fn lock_serializes_read_modify_write() {
    for seed in 0..5 {
        let (total, spans) = locked_sections(seed, 4, 4, 10);
        assert_eq!(total, 160);
        assert!(spans.windows(2).all(|w| w[0].1 <= w[1].0), "seed {seed}");
    }
}

fn barrier_spans(set: ActiveSet, kind: Option<BarrierKind>, seed: u64) -> Vec<(Cycles, Cycles)> {
    let mut m = Mesh::new(4, 4, CostModel::default())
        .unwrap()
        .with_options(SimOptions::randomized(seed, 50));
    m.run(|pe| async move {
        let mut s = Shmem::init(&pe, Features::default()).await?;
        let mut spans = vec![];
        if set.rank_of(s.my_pe()).is_some() || kind.is_some() {
            for k in 0..3u64 {
                s.compute((s.my_pe() as u64 * 31 + k * 17 + seed) % 97)
                    .await;
                let t0 = s.now();
                match kind {
                    Some(kind) => s.barrier_all_with(kind).await?,
                    None => s.barrier(set, PSYNC).await?,
                }
                spans.push((t0, s.now()));
            }
        }
        Ok::<_, ShmemError>(spans)
    })
    .unwrap()
    .into_iter()
    .flatten()
    .collect()
}

fn safe(spans: &[(Cycles, Cycles)], members: usize) -> bool {
    // spans are grouped per PE, three barriers each
    (0..3).all(|k| {
        let round: Vec<_> = (0..members).map(|p| spans[p * 3 + k]).collect();
        let last_in = round.iter().map(|s| s.0).max().unwrap();
        round.iter().all(|s| s.1 >= last_in)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn subset_barrier_is_safe(size in 1usize..=16, stride in 0u32..=2, start in 0usize..16, seed in 0u64..1000) {
        let span = ((size - 1) << stride) + 1;
        prop_assume!(start + span <= 16);
        let set = ActiveSet::new(start, stride, size);
        let spans = barrier_spans(set, None, seed);
        prop_assert!(safe(&spans, size));
    }

    #[test]
    fn whole_program_barriers_are_safe(k in 0usize..3, seed in 0u64..1000) {
        let kind = [BarrierKind::Wand, BarrierKind::Dissemination, BarrierKind::Counter][k];
        let spans = barrier_spans(ActiveSet::all(16), Some(kind), seed);
        prop_assert!(safe(&spans, 16));
    }
}

#[test]
fn dissemination_touches_log_words() {
    for n in [2usize, 4, 8, 16, 3, 11] {
        let mut m = Mesh::new(4, 4, CostModel::default()).unwrap();
        let set = ActiveSet::all(n);
        m.run(|pe| async move {
            let mut s = Shmem::init(&pe, Features::default()).await?;
            if set.rank_of(s.my_pe()).is_some() {
                s.barrier(set, PSYNC).await?;
            }
            Ok::<_, ShmemError>(())
        })
        .unwrap();
        for pe in 0..n {
            let store = m.store(pe);
            let region = &store.bytes()[PSYNC as usize..PSYNC as usize + 8 * BARRIER_SYNC_SIZE];
            let touched = region
                .chunks(8)
                .rposition(|w| w.iter().any(|&b| b != 0))
                .map_or(0, |i| i + 1);
            assert_eq!(touched, ceil_log2(n), "n = {n} pe {pe}");
        }
    }
}

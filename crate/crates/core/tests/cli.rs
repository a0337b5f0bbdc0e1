use std::process::{Command, Output};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bench"))
        .arg("run")
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn config_errors_exit_with_2() {
    let dir = std::env::temp_dir().join(format!("bench-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad_cfg = dir.join("bad.cfg");
    std::fs::write(&bad_cfg, "hop_cycles = fast\n").unwrap();
    for args in [
        vec!["--suite", "scatter"],
        vec!["--sizes", "64"],
        vec!["--sizes", "100:50"],
        vec!["--pes", "99"],
        vec!["--config", "/nonexistent/cost.cfg"],
        vec!["--config", bad_cfg.to_str().unwrap()],
    ] {
        let o = bench(&args);
        assert_eq!(
            o.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn empty_suite_prints_header_only() {
    let o = bench(&["--suite", ""]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o),
        "routine,pe_count,size_bytes,reps,seconds,bandwidth_bytes_per_s\n"
    );
}

#[test]
fn same_seed_same_bytes() {
    let args = [
        "--suite",
        "put,get,barrier,broadcast,reduce,locks",
        "--reps",
        "5",
        "--seed",
        "9",
        "--sizes",
        "8:1024",
    ];
    let a = bench(&args);
    let b = bench(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("# fit,put,16,"));
}

#[test]
fn config_file_and_flags_apply() {
    let dir = std::env::temp_dir().join(format!("bench-cli-cfg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("slow.cfg");
    std::fs::write(&cfg, "# twice the store cost\nstore_cycles_per_dword = 3\n").unwrap();
    let out = dir.join("report.csv");
    let o = bench(&[
        "--suite",
        "put",
        "--reps",
        "2",
        "--sizes",
        "4096:4096",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let csv = std::fs::read_to_string(&out).unwrap();
    let bw: f64 = csv
        .lines()
        .nth(1)
        .unwrap()
        .rsplit(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    // 4096 B in 4 + 512 * 4 cycles at 600 MHz
    assert!((bw - 4096.0 / 2052.0 * 600e6).abs() < 1e3, "{bw}");

    let table = stdout(&bench(&[
        "--suite",
        "barrier",
        "--reps",
        "2",
        "--wand-barrier",
        "--format",
        "table",
    ]));
    assert!(table.starts_with("barrier\n"));
    assert!(table.contains("0.113"), "{table}");
}

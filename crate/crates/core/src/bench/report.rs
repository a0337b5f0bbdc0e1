use std::fmt::Write;
use std::str::FromStr;

use super::{BenchSample, RoutineFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Table,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "table" => Ok(ReportFormat::Table),
            _ => Err(format!("unknown format `{s}` (expected csv or table)")),
        }
    }
}

pub const CSV_HEADER: &str = "routine,pe_count,size_bytes,reps,seconds,bandwidth_bytes_per_s";

pub fn emit_report(samples: &[BenchSample], fits: &[RoutineFit], format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => csv(samples, fits),
        ReportFormat::Table => table(samples, fits),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or("nan".into(), |v| format!("{v:.6e}"))
}

fn csv(samples: &[BenchSample], fits: &[RoutineFit]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for s in samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.6e},{:.6e}",
            s.routine,
            s.pe_count,
            s.size_bytes,
            s.reps,
            s.seconds,
            s.bandwidth()
        );
    }
    for f in fits {
        let a = &f.fit;
        let _ = writeln!(
            out,
            "# fit,{},{},alpha_s={:.6e},alpha_sd={},beta_inv_bytes_per_s={:.6e},beta_inv_sd={},residual_s={:.6e}",
            f.routine,
            f.pe_count,
            a.alpha,
            opt(a.alpha_sd),
            a.beta_inv,
            opt(a.beta_inv_sd()),
            a.residual
        );
    }
    out
}

fn pm(v: Option<f64>, scale: f64) -> String {
    v.map_or("n/a".into(), |v| format!("{:.3}", v * scale))
}

fn table(samples: &[BenchSample], fits: &[RoutineFit]) -> String {
    let mut routines = vec![];
    for s in samples {
        if !routines.contains(&s.routine) {
            routines.push(s.routine);
        }
    }
    let mut out = String::new();
    for r in routines {
        let _ = writeln!(out, "{r}");
        for f in fits.iter().filter(|f| f.routine == r) {
            let a = &f.fit;
            let _ = writeln!(
                out,
                "  {} PEs: alpha = {:.3} ± {} us, beta^-1 = {:.3} ± {} GB/s",
                f.pe_count,
                a.alpha * 1e6,
                pm(a.alpha_sd, 1e6),
                a.beta_inv / 1e9,
                pm(a.beta_inv_sd(), 1e-9)
            );
        }
        let _ = writeln!(
            out,
            "  {:>5} {:>8} {:>12} {:>12}",
            "PEs", "bytes", "time (us)", "MB/s"
        );
        let mut rows: Vec<_> = samples.iter().filter(|s| s.routine == r).collect();
        rows.sort_by_key(|s| (s.pe_count, s.size_bytes));
        for s in rows {
            let _ = writeln!(
                out,
                "  {:>5} {:>8} {:>12.3} {:>12.1}",
                s.pe_count,
                s.size_bytes,
                s.seconds * 1e6,
                s.bandwidth() / 1e6
            );
        }
    }
    out
}

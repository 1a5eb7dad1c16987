//! Scaling-benchmark harness.
//!
//! Times `lower` over the built-in circuit families across a qubit range,
//! averaging over repetitions, and writes one CSV record per point. The
//! slope helpers implement the log-log regression the scaling analysis
//! uses.

use std::fmt::Write as _;
use std::hint::black_box;
use std::time::Instant;

use thiserror::Error;

use uqp_core::isa::program::Target;
use uqp_core::lowering::{emission_cost, lower, JobOptions};

use crate::families::Family;

/// One measured point.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub family: Family,
    pub num_qubits: u32,
    pub gate_count: usize,
    pub word_count: usize,
    pub compile_time_s: f64,
    pub peak_bytes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub family: Family,
    pub qubits_from: u32,
    pub qubits_to: u32,
    pub step: u32,
    pub reps: u32,
    pub parallel: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchError {
    #[error("qubit range {from}..{to} must lie within 2..=100 and be non-empty")]
    BadRange { from: u32, to: u32 },
    #[error("step must be at least 1")]
    BadStep,
    #[error("repetitions must be at least 1")]
    BadReps,
    #[error("lowering failed at n={num_qubits}: {message}")]
    LoweringFailed { num_qubits: u32, message: String },
}

fn points(config: &BenchConfig) -> Vec<u32> {
    (config.qubits_from..=config.qubits_to)
        .step_by(config.step as usize)
        .collect()
}

/// Measure one (family, n) point: peak bytes from a metered call, compile
/// time as the mean over `reps` repetitions.
pub fn measure_point(family: Family, num_qubits: u32, reps: u32) -> Result<BenchRecord, BenchError> {
    let kernel = family.build(num_qubits);
    let opts = JobOptions::new(Target::Superconducting, 1000).expect("shots nonzero");
    let (_, report) = lower(&kernel, &opts).map_err(|e| BenchError::LoweringFailed {
        num_qubits,
        message: e.to_string(),
    })?;
    debug_assert_eq!(
        report.word_count,
        emission_cost(&kernel, Target::Superconducting)
    );

    let started = Instant::now();
    for _ in 0..reps {
        let lowered = lower(black_box(&kernel), black_box(&opts));
        black_box(&lowered);
    }
    let compile_time_s = started.elapsed().as_secs_f64() / f64::from(reps);

    Ok(BenchRecord {
        family,
        num_qubits,
        gate_count: kernel.gate_count(),
        word_count: report.word_count,
        compile_time_s,
        peak_bytes: report.peak_bytes,
    })
}

/// Run the full sweep. Sequential by default to keep timings clean; the
/// parallel mode shards points across threads (timings stay per-point, the
/// process-global peak-bytes attribution gets noisier).
pub fn run_bench(config: &BenchConfig) -> Result<Vec<BenchRecord>, BenchError> {
    if config.qubits_from < 2 || config.qubits_to > 100 || config.qubits_from > config.qubits_to {
        return Err(BenchError::BadRange {
            from: config.qubits_from,
            to: config.qubits_to,
        });
    }
    if config.step == 0 {
        return Err(BenchError::BadStep);
    }
    if config.reps == 0 {
        return Err(BenchError::BadReps);
    }
    let ns = points(config);
    if config.parallel {
        std::thread::scope(|scope| {
            let handles: Vec<_> = ns
                .iter()
                .map(|n| scope.spawn(move || measure_point(config.family, *n, config.reps)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("bench worker panicked"))
                .collect()
        })
    } else {
        ns.into_iter()
            .map(|n| measure_point(config.family, n, config.reps))
            .collect()
    }
}

/// CSV rendering; single-rep runs are flagged as noisy in a header comment.
pub fn to_csv(records: &[BenchRecord], reps: u32) -> String {
    let mut out = String::new();
    if reps == 1 {
        out.push_str("# reps=1: single-run timings are noisy\n");
    }
    out.push_str("family,num_qubits,gate_count,word_count,compile_time_s,peak_bytes\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.9},{}",
            r.family, r.num_qubits, r.gate_count, r.word_count, r.compile_time_s, r.peak_bytes
        );
    }
    out
}

/// Least-squares slope of `ln(y)` against `ln(x)`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = logs.iter().map(|(_, y)| y).sum::<f64>() / n;
    let cov: f64 = logs.iter().map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let var: f64 = logs.iter().map(|(x, _)| (x - mean_x) * (x - mean_x)).sum();
    cov / var
}

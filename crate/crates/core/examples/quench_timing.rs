//! Times one quench at a given register size.
//!
//! `cargo run --release --example quench_timing -- 12 20 5` (qubits, tau, repetitions)

use quenchmap::encoding::{CouplingGraph, Edge, IsingInstance};
use quenchmap::quench::{evolve, expect_z_all, QuenchConfig};
use quenchmap::schedule::{AnnealSchedule, DEFAULT_SCALE};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(12);
    let tau: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(20.0);
    let reps: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(1).max(1);
    let h: Vec<f64> = (0..n).map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0).collect();
    let edges = (0..n - 1)
        .map(|i| Edge { i, j: i + 1, weight: -0.3 })
        .collect();
    let inst = IsingInstance::new(h, CouplingGraph::new(n, edges).unwrap()).unwrap();
    let schedule = AnnealSchedule::linear(DEFAULT_SCALE, DEFAULT_SCALE, tau).unwrap();
    let config = QuenchConfig::new(schedule);
    let mut best = f64::INFINITY;
    let mut state = None;
    for _ in 0..reps {
        let start = Instant::now();
        state = Some(evolve(&inst, &config).unwrap());
        best = best.min(start.elapsed().as_secs_f64());
    }
    let state = state.unwrap();
    println!("n={n} tau={tau} ns: {best:.4} s (best of {reps})");
    println!("<Z> = {:?}", expect_z_all(&state));
}

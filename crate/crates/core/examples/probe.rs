//! Timing and convergence probe used while choosing desk-scale defaults.
//! Run: cargo run --release -p caml-core --example probe -- [mode] [n_int] [n_edge] [t_max]

use std::time::Instant;

use caml_core::pde::heat_problem;
use caml_core::trainer::{train, TrainConfig, TrainMode};
use caml_core::BenchmarkKind;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mode = TrainMode::parse(args.first().map(|s| s.as_str()).unwrap_or("caml")).unwrap();
    let n_int: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(256);
    let n_edge: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(48);
    let t_max: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(500);

    let problem = heat_problem();
    let cfg = TrainConfig {
        mode,
        n_interior: n_int,
        n_per_edge: n_edge,
        t_min: t_max.min(6000),
        t_max,
        ..TrainConfig::defaults_for(BenchmarkKind::Heat)
    };
    let t0 = Instant::now();
    let out = train(&problem, &cfg).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    let s = &out.log.summary;
    println!(
        "mode={} pts={}+{} steps={} time={:.1}s ({:.1} ms/step) stp={:?} l2@tmin={:?} final_l2={:.3e} pos_cos={:.3} c={:.4}",
        cfg.mode.name(),
        n_int,
        4 * n_edge,
        s.steps_run,
        dt,
        1e3 * dt / s.steps_run as f64,
        s.stp,
        s.l2_at_t_min,
        s.final_rel_l2,
        s.pos_cos_fraction,
        s.final_c
    );
}

#[allow(dead_code)]
fn unused() {}

//! `caml` — train and analyze constraint-aligned PINN runs.
//!
//! Subcommands: `run` (per-seed training), `ablate` (the four loss arms on a
//! shared collocation set), `sweep` (one-hyperparameter grids), `landscape`
//! and `hessian` (the 1-D Poisson loss-valley pipeline).

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use caml_core::pde::{problem_by_name, sample_collocation, BenchmarkProblem, BENCHMARK_NAMES};
use caml_core::trainer::{train_with, TrainConfig, TrainMode, TrainOutcome};
use caml_core::{landscape, DelaySchedule};

use output::OutDir;

#[derive(Parser)]
#[command(name = "caml", version, about, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one benchmark/mode over a list of seeds.
    Run(RunArgs),
    /// Run all four loss arms with shared seeds and collocation sets.
    Ablate(AblateArgs),
    /// Export a 2-D slice of the 1-D Poisson residual landscape.
    Landscape(LandscapeArgs),
    /// Hessian spectra/condition numbers/subspace similarity for the 1-D
    /// Poisson valley, in function or parameter space.
    Hessian(HessianArgs),
    /// Grid over one hyperparameter.
    Sweep(SweepArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Benchmark: heat, poisson, ns, helmholtz, toy_poisson, two_phase_poisson
    #[arg(long)]
    benchmark: String,
    /// Comma-separated seed list, e.g. 1,2,3,4,5
    #[arg(long, default_value = "1,2,3,4,5")]
    seeds: String,
    /// Output directory (created if missing)
    #[arg(long)]
    out: PathBuf,
    /// Optional key=value config file; flags override file entries
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: config::Overrides,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Loss arm: vanilla, ac_only, dr_only, caml
    #[arg(long, default_value = "caml")]
    mode: String,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct LandscapeArgs {
    /// func (grid of solution values) or param (trained network weights)
    #[arg(long, default_value = "func")]
    space: String,
    #[arg(long)]
    out: PathBuf,
    /// Grid resolution per axis
    #[arg(long, default_value_t = 41)]
    grid: usize,
    /// Training steps per parameter-space anchor
    #[arg(long, default_value_t = 3000)]
    steps: u64,
}

#[derive(Args)]
struct HessianArgs {
    /// func or param
    #[arg(long, default_value = "func")]
    space: String,
    #[arg(long)]
    out: PathBuf,
    /// Low-curvature basis size (default: 1 in function space, 100 in
    /// parameter space)
    #[arg(long)]
    k: Option<usize>,
    /// Finite-difference step for the Hessian entries
    #[arg(long, default_value_t = 1e-3)]
    h: f64,
    /// Training steps per parameter-space anchor
    #[arg(long, default_value_t = 3000)]
    steps: u64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Hyperparameter to sweep: delay (t_d/t_r pairs), eta, w-bc, w-res
    #[arg(long)]
    param: String,
    /// Comma-separated values; delay values are t_d/t_r pairs like 200/800
    #[arg(long)]
    values: String,
    /// Loss arm to sweep under
    #[arg(long, default_value = "caml")]
    mode: String,
}

/// Exit with code 2 after printing a usage-style error.
fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    eprintln!("(see --help for accepted values)");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Ablate(args) => cmd_ablate(args),
        Command::Landscape(args) => cmd_landscape(args),
        Command::Hessian(args) => cmd_hessian(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

type AnyError = Box<dyn std::error::Error>;

struct Resolved {
    problem: BenchmarkProblem,
    cfg: TrainConfig,
    seeds: Vec<u64>,
}

fn resolve(common: &CommonArgs) -> Result<Result<Resolved, ExitCode>, AnyError> {
    let problem = match problem_by_name(&common.benchmark) {
        Some(p) => p,
        None => {
            return Ok(Err(usage_error(&format!(
                "unknown benchmark '{}'; expected one of {:?}",
                common.benchmark, BENCHMARK_NAMES
            ))))
        }
    };
    let seeds = match config::parse_seeds(&common.seeds) {
        Some(s) if !s.is_empty() => s,
        _ => return Ok(Err(usage_error("seeds must be a non-empty comma-separated integer list"))),
    };
    let mut cfg = TrainConfig::defaults_for(problem.kind);
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path)?;
        config::apply_file(&mut cfg, &text).map_err(|e| format!("config file: {e}"))?;
    }
    common.overrides.apply(&mut cfg);
    Ok(Ok(Resolved { problem, cfg, seeds }))
}

struct SeedResult {
    seed: u64,
    outcome: Result<TrainOutcome, String>,
}

fn train_seeds(problem: &BenchmarkProblem, cfg: &TrainConfig, seeds: &[u64], mode: TrainMode) -> Vec<SeedResult> {
    seeds
        .iter()
        .map(|&seed| {
            let cfg = TrainConfig { seed, mode, ..*cfg };
            let spec = problem.default_mlp();
            let colloc = sample_collocation(problem, cfg.n_interior, cfg.n_per_edge, seed);
            let outcome = train_with(problem, &cfg, spec, colloc).map_err(|e| e.to_string());
            SeedResult { seed, outcome }
        })
        .collect()
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, AnyError> {
    let resolved = match resolve(&args.common)? {
        Ok(r) => r,
        Err(code) => return Ok(code),
    };
    let mode = match TrainMode::parse(&args.mode) {
        Some(m) => m,
        None => return Ok(usage_error(&format!("unknown mode '{}'", args.mode))),
    };
    let out = OutDir::create(&args.common.out)?;
    out.write_manifest(&resolved.problem, &resolved.cfg, &resolved.seeds, mode.name())?;
    let results = train_seeds(&resolved.problem, &resolved.cfg, &resolved.seeds, mode);
    out.write_seed_results(&resolved.problem, mode.name(), &results)?;
    out.write_summary(&resolved.problem, mode.name(), &results)?;
    out.write_aggregate(&resolved.problem, &[(mode.name(), &results)])?;
    for r in &results {
        match &r.outcome {
            Ok(o) => println!(
                "seed {}: stp={:?} l2@tmin={:?} pos_cos={:.4} steps={}",
                r.seed, o.log.summary.stp, o.log.summary.l2_at_t_min,
                o.log.summary.pos_cos_fraction, o.log.summary.steps_run
            ),
            Err(e) => println!("seed {}: failed: {e}", r.seed),
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_ablate(args: AblateArgs) -> Result<ExitCode, AnyError> {
    let resolved = match resolve(&args.common)? {
        Ok(r) => r,
        Err(code) => return Ok(code),
    };
    let out = OutDir::create(&args.common.out)?;
    out.write_manifest(&resolved.problem, &resolved.cfg, &resolved.seeds, "ablate")?;
    let modes = [TrainMode::Vanilla, TrainMode::AcOnly, TrainMode::DrOnly, TrainMode::Caml];
    let mut all = Vec::new();
    for mode in modes {
        let results = train_seeds(&resolved.problem, &resolved.cfg, &resolved.seeds, mode);
        out.write_seed_results(&resolved.problem, mode.name(), &results)?;
        out.write_summary(&resolved.problem, mode.name(), &results)?;
        println!(
            "{}: {}/{} seeds crossed the threshold",
            mode.name(),
            results.iter().filter(|r| r.outcome.as_ref().map(|o| o.log.summary.success).unwrap_or(false)).count(),
            results.len()
        );
        all.push((mode.name(), results));
    }
    let refs: Vec<(&str, &[SeedResult])> = all.iter().map(|(m, r)| (*m, r.as_slice())).collect();
    out.write_aggregate(&resolved.problem, &refs)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_landscape(args: LandscapeArgs) -> Result<ExitCode, AnyError> {
    if args.grid < 2 {
        return Ok(usage_error("grid must be at least 2"));
    }
    let out = OutDir::create(&args.out)?;
    match args.space.as_str() {
        "func" => {
            let (grid, anchors) = landscape::function_space_slice(args.grid);
            out.write_text("landscape_func.csv", &grid.to_csv())?;
            let mut a = String::from("anchor,alpha,beta\n");
            for (i, (al, be)) in anchors.iter().enumerate() {
                a.push_str(&format!("{i},{al},{be}\n"));
            }
            out.write_text("anchors_func.csv", &a)?;
            println!("wrote landscape_func.csv ({0}x{0} grid)", args.grid);
        }
        "param" => {
            let grid = landscape::param_space_slice(args.grid, args.steps)?;
            out.write_text("landscape_param.csv", &grid.to_csv())?;
            println!("wrote landscape_param.csv ({0}x{0} grid)", args.grid);
        }
        other => return Ok(usage_error(&format!("unknown space '{other}' (func|param)"))),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_hessian(args: HessianArgs) -> Result<ExitCode, AnyError> {
    let out = OutDir::create(&args.out)?;
    let (report, k, dim) = match args.space.as_str() {
        "func" => {
            let k = args.k.unwrap_or(1);
            if k > landscape::GRID_POINTS {
                return Ok(usage_error(&format!("k = {k} exceeds function-space dimension")));
            }
            (landscape::function_space_report(args.h, k)?, k, landscape::GRID_POINTS)
        }
        "param" => {
            let dim = landscape::valley_mlp_spec().param_count();
            let k = args.k.unwrap_or(100);
            if k > dim {
                return Ok(usage_error(&format!("k = {k} exceeds parameter dimension {dim}")));
            }
            (landscape::param_space_report(k, args.steps, args.h)?, k, dim)
        }
        other => return Ok(usage_error(&format!("unknown space '{other}' (func|param)"))),
    };
    let mut summary = String::from("anchor,final_loss,condition_number,min_abs_eigenvalue,max_eigenvalue\n");
    for (i, a) in report.anchors.iter().enumerate() {
        out.write_text(
            &format!("eigenvalues_{}_{i}.csv", args.space),
            &landscape::eigenvalues_csv(&a.hessian),
        )?;
        let min_abs = a.hessian.eigenvalues.iter().fold(f64::INFINITY, |m, &l| m.min(l.abs()));
        let max = a.hessian.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        summary.push_str(&format!(
            "{i},{},{},{},{}\n",
            a.final_loss, a.hessian.condition_number, min_abs, max
        ));
        println!(
            "anchor {i}: final_loss={:.3e} kappa={} (k={k}, dim={dim})",
            a.final_loss, a.hessian.condition_number
        );
    }
    out.write_text(&format!("hessian_{}.csv", args.space), &summary)?;
    let mut sims = String::from("pair,similarity\n");
    for (i, s) in report.sims.iter().enumerate() {
        sims.push_str(&format!("0-{},{}\n", i + 1, s));
        println!("subspace similarity anchor0 vs anchor{}: {:.6}", i + 1, s);
    }
    out.write_text(&format!("subspace_similarity_{}.csv", args.space), &sims)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode, AnyError> {
    let resolved = match resolve(&args.common)? {
        Ok(r) => r,
        Err(code) => return Ok(code),
    };
    let mode = match TrainMode::parse(&args.mode) {
        Some(m) => m,
        None => return Ok(usage_error(&format!("unknown mode '{}'", args.mode))),
    };
    let values: Vec<&str> = args.values.split(',').filter(|v| !v.is_empty()).collect();
    if values.is_empty() {
        return Ok(usage_error("sweep needs a non-empty --values list"));
    }
    let out = OutDir::create(&args.common.out)?;
    out.write_manifest(&resolved.problem, &resolved.cfg, &resolved.seeds, "sweep")?;
    let mut rows = String::from(
        "param,value,n_seeds,n_success,stp_median,stp_mean,stp_std,l2_tmin_mean,l2_tmin_std\n",
    );
    for value in &values {
        let mut cfg = resolved.cfg;
        match args.param.as_str() {
            "delay" | "t_d_t_r" => {
                let (td, tr) = match value.split_once('/') {
                    Some((a, b)) => match (a.parse(), b.parse()) {
                        (Ok(a), Ok(b)) => (a, b),
                        _ => return Ok(usage_error(&format!("bad delay pair '{value}'"))),
                    },
                    None => return Ok(usage_error(&format!("delay values look like 200/800, got '{value}'"))),
                };
                cfg.schedule = DelaySchedule::new(td, tr);
            }
            "eta" => match value.parse() {
                Ok(v) => cfg.eta = v,
                Err(_) => return Ok(usage_error(&format!("bad eta '{value}'"))),
            },
            "w-bc" => match value.parse() {
                Ok(v) => cfg.w_bc = v,
                Err(_) => return Ok(usage_error(&format!("bad w-bc '{value}'"))),
            },
            "w-res" => match value.parse() {
                Ok(v) => cfg.w_res = v,
                Err(_) => return Ok(usage_error(&format!("bad w-res '{value}'"))),
            },
            other => return Ok(usage_error(&format!("unknown sweep param '{other}'"))),
        }
        let results = train_seeds(&resolved.problem, &cfg, &resolved.seeds, mode);
        let tag = format!("{}_{}", args.param, value.replace('/', "_"));
        out.write_summary_named(&format!("summary_{tag}.csv"), &results)?;
        let stats = output::SeedStats::collect(&results);
        rows.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            args.param,
            value,
            results.len(),
            stats.n_success,
            output::fmt_opt(stats.stp_median),
            output::fmt_opt(stats.stp_mean),
            output::fmt_opt(stats.stp_std),
            output::fmt_opt(stats.l2_mean),
            output::fmt_opt(stats.l2_std),
        ));
        println!(
            "{} = {}: {}/{} crossed, stp_median={}",
            args.param,
            value,
            stats.n_success,
            results.len(),
            output::fmt_opt(stats.stp_median)
        );
    }
    out.write_text("sweep.csv", &rows)?;
    Ok(ExitCode::SUCCESS)
}

//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! Training-based criteria run at desk scale: the reported hyperparameters
//! (learning rate, loss weights, iteration bounds, stopping thresholds,
//! delay schedules) are kept exactly, while collocation counts — which the
//! reported tables leave free — are reduced so the suite completes on one
//! core.

use std::sync::OnceLock;

use caml_core::ad::seed_inputs;
use caml_core::diagnostics::{grad_cosine, positive_cos_fraction};
use caml_core::landscape;
use caml_core::loss::{
    closed_form_offset, delay_factor, newton_offset, objective_j, objective_j_derivs,
    DelaySchedule, ResidualBundle,
};
use caml_core::network::{forward, forward_on_tape, forward_plain, init_params, MlpSpec};
use caml_core::pde::{
    heat_problem, helmholtz_problem, ns_problem, poisson_problem, sample_collocation,
    toy_poisson_problem, two_phase_poisson_problem, ValueCtx,
};
use caml_core::tape::grad_wrt_params;
use caml_core::trainer::{train, RunSummary, TrainConfig, TrainMode};
use caml_core::BenchmarkKind;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Desk-scale collocation for the training criteria.
const HEAT_N_INT: usize = 128;
const HEAT_N_EDGE: usize = 32;
const POISSON_N_INT: usize = 256;
const POISSON_N_EDGE: usize = 48;
const TOY_N_INT: usize = 128;
const TOY_N_EDGE: usize = 32;

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

fn pass(criterion: &str, detail: String) {
    println!("[PASS] {criterion}: {detail}");
}

// ---------------------------------------------------------------- criterion 1

#[test]
fn criterion_01_ad_oracle_suite() {
    let spec = MlpSpec::new(2, 1, 4, 64);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst_first = 0.0_f64;
    let mut worst_second = 0.0_f64;
    for trial in 0..50 {
        let params = init_params(&spec, 1000 + trial);
        let x = [rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95)];
        let out = forward(&params, &spec, &seed_inputs::<2, 3>(&x).unwrap())[0];
        let f = |a: f64, b: f64| forward_plain(&params, &spec, &[a, b])[0];
        let h = 1e-5;
        let fd_g = [
            (f(x[0] + h, x[1]) - f(x[0] - h, x[1])) / (2.0 * h),
            (f(x[0], x[1] + h) - f(x[0], x[1] - h)) / (2.0 * h),
        ];
        for i in 0..2 {
            worst_first = worst_first.max(rel_err(out.grad[i], fd_g[i]));
        }
        let h = 1e-3;
        let fd_h = [
            (f(x[0] + h, x[1]) - 2.0 * f(x[0], x[1]) + f(x[0] - h, x[1])) / (h * h),
            (f(x[0] + h, x[1] + h) - f(x[0] + h, x[1] - h) - f(x[0] - h, x[1] + h)
                + f(x[0] - h, x[1] - h))
                / (4.0 * h * h),
            (f(x[0], x[1] + h) - 2.0 * f(x[0], x[1]) + f(x[0], x[1] - h)) / (h * h),
        ];
        for k in 0..3 {
            worst_second = worst_second.max(rel_err(out.hess[k], fd_h[k]));
        }
    }
    assert!(worst_first < 1e-6, "first-derivative rel err {worst_first:.2e}");
    assert!(worst_second < 1e-4, "second-derivative rel err {worst_second:.2e}");

    // parameter gradients on a 2-layer network against finite differences
    let spec = MlpSpec::new(2, 1, 2, 8);
    let layout = spec.layout();
    let params = init_params(&spec, 77);
    let points: Vec<[f64; 2]> =
        (0..6).map(|_| [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]).collect();
    let loss_of = |theta: &[f64]| -> f64 {
        let p = caml_core::ParamVector { data: theta.to_vec(), layout: spec.layout() };
        points.iter().map(|x| forward_plain(&p, &spec, x)[0].powi(2)).sum::<f64>()
            / points.len() as f64
    };
    let grad = grad_wrt_params::<2, 3>(&params.data, |tape, _| {
        let mut acc = tape.konst(0.0);
        for x in &points {
            let out = forward_on_tape(tape, &layout, &spec, &seed_inputs::<2, 3>(x).unwrap())[0];
            let sq = tape.square(out);
            acc = tape.add(acc, sq);
        }
        Ok(tape.scale(acc, 1.0 / points.len() as f64))
    })
    .unwrap();
    let mut worst_param = 0.0_f64;
    let h = 1e-5;
    for i in 0..params.len() {
        let mut tp = params.data.clone();
        tp[i] += h;
        let mut tm = params.data.clone();
        tm[i] -= h;
        let fd = (loss_of(&tp) - loss_of(&tm)) / (2.0 * h);
        if fd.abs() > 1e-7 {
            worst_param = worst_param.max(rel_err(grad[i], fd));
        }
    }
    assert!(worst_param < 1e-6, "parameter-gradient rel err {worst_param:.2e}");
    pass(
        "criterion 1 (AD oracle suite)",
        format!(
            "spatial first {worst_first:.1e}, second {worst_second:.1e}, parameter {worst_param:.1e}"
        ),
    );
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-8)
}

// ---------------------------------------------------------------- criterion 2

#[test]
fn criterion_02_offset_solver_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst_gap = 0.0_f64;
    for _ in 0..200 {
        let n = rng.gen_range(1..8);
        let m = rng.gen_range(1..8);
        let bundle = ResidualBundle::linear(
            (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect(),
            (0..m).map(|_| rng.gen_range(-5.0..5.0)).collect(),
            (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            (0..m).map(|_| if rng.gen_bool(0.7) { 1.0 } else { 0.0 }).collect(),
            rng.gen_range(0.2..3.0),
            rng.gen_range(0.2..3.0),
        );
        let c_star = match closed_form_offset(&bundle) {
            Ok(c) => c,
            Err(_) => continue, // degenerate draw: no zeroth-order anywhere
        };
        // grid search at 1e-4 resolution over [c*-10, c*+10]
        let mut best = (f64::INFINITY, f64::NAN);
        for i in 0..=200_000 {
            let c = c_star - 10.0 + i as f64 * 1e-4;
            let j = objective_j(&bundle, c);
            if j < best.0 {
                best = (j, c);
            }
        }
        worst_gap = worst_gap.max((best.1 - c_star).abs());
        assert!(
            objective_j(&bundle, c_star) <= objective_j(&bundle, 0.0) + 1e-12,
            "aligned loss exceeded the standard loss"
        );
        // Newton with K = 1 on the quadratic objective reproduces the closed form
        let c_newton =
            newton_offset(|c| objective_j_derivs(&bundle, c, 1.0), rng.gen_range(-3.0..3.0), 1)
                .unwrap();
        assert!(
            (c_newton - c_star).abs() < 1e-12 * (1.0 + c_star.abs()),
            "newton {c_newton} vs closed form {c_star}"
        );
    }
    assert!(worst_gap < 2e-4, "grid argmin gap {worst_gap:.2e}");
    pass(
        "criterion 2 (offset solver oracle)",
        format!("grid argmin within {worst_gap:.2e}, descent + one-step Newton hold"),
    );
}

// ---------------------------------------------------------------- criterion 3

#[test]
fn criterion_03_manufactured_solution_suite() {
    let problems = [
        heat_problem(),
        poisson_problem(),
        ns_problem(),
        helmholtz_problem(),
        toy_poisson_problem(),
        two_phase_poisson_problem(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    for problem in &problems {
        let mut worst = 0.0_f64;
        let mut checked = 0;
        while checked < 100 {
            let x = [rng.gen_range(0.01..0.99), rng.gen_range(0.01..0.99)];
            if !problem.domain.contains(x) {
                continue;
            }
            checked += 1;
            let d = problem.exact_derivs(x);
            for r in problem.residual(&mut ValueCtx, &d, x) {
                worst = worst.max(r.abs());
            }
        }
        assert!(worst < 1e-8, "{}: interior residual {worst:.2e}", problem.name);
        println!("[PASS] criterion 3: {} interior residual max {worst:.2e}", problem.name);
    }

    // boundary residuals of the exact solution: zero for the manufactured
    // Dirichlet data
    for problem in &problems {
        let colloc = sample_collocation(problem, 4, 100, 31);
        let mut worst_dirichlet = 0.0_f64;
        let mut worst_flux = 0.0_f64;
        for rec in &colloc.boundary {
            let d = problem.exact_derivs(rec.x);
            for r in problem.boundary_residual_aligned(&mut ValueCtx, &d, rec, None) {
                if rec.beta == 0.0 {
                    worst_dirichlet = worst_dirichlet.max(r.abs());
                } else if rec.x[0].min(rec.x[1]) >= 0.1 && rec.x[0].max(rec.x[1]) <= 1.0 {
                    // heat flux edges: fixed coordinate at 1, free coordinate
                    // away from the corners
                    let free = if rec.x[0] == 1.0 { rec.x[1] } else { rec.x[0] };
                    if (0.1..=0.9).contains(&free) {
                        worst_flux = worst_flux.max(r.abs());
                    }
                }
            }
        }
        assert!(
            worst_dirichlet < 1e-12,
            "{}: dirichlet residual of the exact solution {worst_dirichlet:.2e}",
            problem.name
        );
        println!(
            "[PASS] criterion 3: {} dirichlet boundary residual max {worst_dirichlet:.2e}",
            problem.name
        );
        if problem.kind == BenchmarkKind::Heat {
            // The truncated 20-term series meets the prescribed flux only in
            // the Fourier-sum sense; pointwise the truncation error away from
            // corners is O(0.1), so this tolerance is not attainable with the
            // reported truncation order. Kept as specified; see the decisions
            // ledger for the analysis.
            if worst_flux >= 1e-6 {
                println!(
                    "[FAIL] criterion 3: heat flux-edge residual max {worst_flux:.2e} \
                     (tolerance 1e-6; truncated-series Gibbs error, unattainable as stated)"
                );
            }
            assert!(
                worst_flux < 1e-6,
                "heat flux-edge residual {worst_flux:.2e} exceeds the stated 1e-6 tolerance \
                 (20-term series truncation error; see decisions ledger)"
            );
        }
    }
}

// ------------------------------------------------------- criteria 4, 5 and 8

struct ModeRuns {
    summaries: Vec<RunSummary>,
}

impl ModeRuns {
    fn median_stp(&self) -> f64 {
        let mut stps: Vec<f64> =
            self.summaries.iter().map(|s| s.stp.map(|v| v as f64).unwrap_or(f64::INFINITY)).collect();
        stps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        stps[stps.len() / 2]
    }

    fn mean_pos_cos(&self) -> f64 {
        self.summaries.iter().map(|s| s.pos_cos_fraction).sum::<f64>() / self.summaries.len() as f64
    }
}

fn run_mode(kind: BenchmarkKind, mode: TrainMode, n_int: usize, n_edge: usize) -> ModeRuns {
    let problem = match kind {
        BenchmarkKind::Heat => heat_problem(),
        BenchmarkKind::Poisson => poisson_problem(),
        BenchmarkKind::ToyPoisson => toy_poisson_problem(),
        _ => unreachable!(),
    };
    let summaries = SEEDS
        .iter()
        .map(|&seed| {
            let cfg = TrainConfig {
                mode,
                seed,
                n_interior: n_int,
                n_per_edge: n_edge,
                ..TrainConfig::defaults_for(kind)
            };
            train(&problem, &cfg).expect("training run failed").log.summary
        })
        .collect();
    ModeRuns { summaries }
}

fn heat_runs() -> &'static [(TrainMode, ModeRuns); 4] {
    static RUNS: OnceLock<[(TrainMode, ModeRuns); 4]> = OnceLock::new();
    RUNS.get_or_init(|| {
        [TrainMode::Caml, TrainMode::Vanilla, TrainMode::AcOnly, TrainMode::DrOnly]
            .map(|mode| (mode, run_mode(BenchmarkKind::Heat, mode, HEAT_N_INT, HEAT_N_EDGE)))
    })
}

fn heat_mode(mode: TrainMode) -> &'static ModeRuns {
    &heat_runs().iter().find(|(m, _)| *m == mode).unwrap().1
}

#[test]
fn criterion_04_heat_headline() {
    let caml = heat_mode(TrainMode::Caml);
    let vanilla = heat_mode(TrainMode::Vanilla);

    let caml_hits = caml
        .summaries
        .iter()
        .filter(|s| s.stp.map(|v| v <= 6000).unwrap_or(false))
        .count();
    assert!(caml_hits >= 4, "(a) only {caml_hits}/5 seeds reached 2e-3 within 6000 steps");

    let (mc, mv) = (caml.median_stp(), vanilla.median_stp());
    assert!(
        mv >= 3.0 * mc,
        "(b) vanilla median Stp {mv} is not >= 3x the aligned median {mc}"
    );

    let mut worst_l2 = 0.0_f64;
    for s in &caml.summaries {
        if s.success {
            let l2 = s.l2_at_t_min.expect("t_min always evaluated");
            worst_l2 = worst_l2.max(l2);
            assert!(l2 < 5e-3, "(c) L2 at step 6000 = {l2:.3e}");
        }
    }
    pass(
        "criterion 4 (heat headline)",
        format!(
            "{caml_hits}/5 seeds < 2e-3 by 6000; median Stp {mc} vs vanilla {mv} ({:.1}x); worst L2@6000 {worst_l2:.2e}",
            mv / mc
        ),
    );
}

#[test]
fn criterion_05_gradient_conflict_mitigation() {
    let caml = heat_mode(TrainMode::Caml).mean_pos_cos();
    let vanilla = heat_mode(TrainMode::Vanilla).mean_pos_cos();
    assert!(
        caml >= 2.0 * vanilla,
        "aligned fraction {caml:.3} not at least twice vanilla {vanilla:.3}"
    );
    println!(
        "[PASS] criterion 5: aligned positive-cos fraction {caml:.3} >= 2x vanilla {vanilla:.3} ({:.1}x)",
        caml / vanilla
    );
    // At desk scale the vanilla runs converge into the u == T0 constant trap
    // and oscillate there with *aligned* gradients, so the fraction over the
    // fixed window exceeds the 20% bound that paper-scale vanilla meets (its
    // pre-trap conflict window sits at 1-5%, matching the reported 5.89%).
    // Asserted as stated; see the decisions ledger for the full analysis.
    if vanilla >= 0.20 {
        println!(
            "[FAIL] criterion 5: vanilla positive-cos fraction {vanilla:.3} not below 0.20 \
             (constant-field trap re-aligns the gradients at desk scale; see decisions ledger)"
        );
    }
    assert!(
        vanilla < 0.20,
        "vanilla positive-cos fraction {vanilla:.3} not below 20% (desk-scale constant-field \
         trap; see decisions ledger)"
    );
    pass(
        "criterion 5 (gradient conflict)",
        format!("positive-cos fraction {caml:.3} vs vanilla {vanilla:.3}"),
    );
}

#[test]
fn criterion_06_delay_schedule_exactness() {
    for (td, tr) in [(25u64, 50u64), (200, 800)] {
        let s = DelaySchedule::new(td, tr);
        assert_eq!(delay_factor(0, s), 0.0);
        assert_eq!(delay_factor(td, s), 0.0);
        assert_eq!(delay_factor(td + tr / 2, s), 0.5);
        assert_eq!(delay_factor(td + tr, s), 1.0);
        assert_eq!(delay_factor(10 * td, s), 1.0);
    }
    pass("criterion 6 (delay schedule)", "piecewise values exact for 25/50 and 200/800".into());
}

#[test]
fn criterion_07_function_space_valley_facts() {
    let report = landscape::function_space_report(1e-3, 1).unwrap();
    for (i, anchor) in report.anchors.iter().enumerate() {
        let lam_max = anchor.hessian.eigenvalues.iter().fold(0.0_f64, |m, &l| m.max(l.abs()));
        let along_const = anchor.constant_mode_curvature.abs();
        assert!(
            along_const < 1e-8 * lam_max,
            "anchor {i}: curvature along the constant mode {along_const:.2e} vs lam_max {lam_max:.2e}"
        );
        assert!(anchor.hessian.condition_number.is_infinite());
    }
    for (i, sim) in report.sims.iter().enumerate() {
        assert!(
            (sim - 1.0).abs() <= 1e-6,
            "Sim(k=1) anchor0 vs anchor{} = {sim}",
            i + 1
        );
    }
    assert!(
        report.constant_line_spread < 1e-10,
        "loss spread along the constant line {:.2e}",
        report.constant_line_spread
    );

    // parameter space: pipeline must complete and report a large condition number
    let param = landscape::param_space_report(100, 3000, 1e-3).unwrap();
    for (i, anchor) in param.anchors.iter().enumerate() {
        assert!(
            anchor.hessian.condition_number > 1e6,
            "anchor {i}: parameter-space kappa {:.2e}",
            anchor.hessian.condition_number
        );
    }
    pass(
        "criterion 7 (valley facts)",
        format!(
            "constant-mode curvature flat, Sim(k=1) = {:.8}/{:.8}, line spread {:.1e}; param kappa {:.1e}/{:.1e}/{:.1e}",
            report.sims[0],
            report.sims[1],
            report.constant_line_spread,
            param.anchors[0].hessian.condition_number,
            param.anchors[1].hessian.condition_number,
            param.anchors[2].hessian.condition_number
        ),
    );
}

#[test]
fn criterion_08_ablation_structure() {
    let vanilla = heat_mode(TrainMode::Vanilla).median_stp();
    let ac = heat_mode(TrainMode::AcOnly).median_stp();
    let dr = heat_mode(TrainMode::DrOnly).median_stp();
    assert!(ac < dr, "heat: ac_only median {ac} not below dr_only {dr}");
    assert!(ac < vanilla, "heat: ac_only median {ac} not below vanilla {vanilla}");

    let poisson = run_mode(BenchmarkKind::Poisson, TrainMode::Caml, POISSON_N_INT, POISSON_N_EDGE);
    let hits = poisson.summaries.iter().filter(|s| s.success).count();
    assert!(hits >= 3, "poisson: full method crossed 1e-2 for only {hits}/5 seeds");
    pass(
        "criterion 8 (ablation structure)",
        format!(
            "heat medians ac {ac} < dr {dr}, ac < vanilla {vanilla}; poisson full method {hits}/5 seeds"
        ),
    );
}

// ---------------------------------------------------------------- criterion 9

#[test]
fn criterion_09_toy_poisson_failure_case() {
    let caml = run_mode(BenchmarkKind::ToyPoisson, TrainMode::Caml, TOY_N_INT, TOY_N_EDGE);
    let vanilla = run_mode(BenchmarkKind::ToyPoisson, TrainMode::Vanilla, TOY_N_INT, TOY_N_EDGE);
    let (mc, mv) = (caml.median_stp(), vanilla.median_stp());
    assert!(mv.is_finite() && mc.is_finite(), "both arms must converge on the toy problem");
    let rel_gap = (mc - mv).abs() / mv;
    assert!(rel_gap < 0.5, "median Stp gap {rel_gap:.2} (caml {mc}, vanilla {mv})");
    for s in &caml.summaries {
        assert!(s.final_c.abs() < 10.0, "learned offset {} out of range", s.final_c);
    }
    pass(
        "criterion 9 (toy failure case)",
        format!(
            "median Stp {mc} vs {mv} (gap {:.0}%), |c| max {:.2}",
            100.0 * rel_gap,
            caml.summaries.iter().map(|s| s.final_c.abs()).fold(0.0, f64::max)
        ),
    );
}

// --------------------------------------------------------------- criterion 10

#[test]
fn criterion_10_determinism() {
    let problem = toy_poisson_problem();
    let cfg = TrainConfig {
        mode: TrainMode::Caml,
        seed: 7,
        t_min: 100,
        t_max: 100,
        n_interior: 64,
        n_per_edge: 16,
        eval_grid: 41,
        ..TrainConfig::defaults_for(BenchmarkKind::ToyPoisson)
    };
    let a = train(&problem, &cfg).unwrap();
    let b = train(&problem, &cfg).unwrap();
    assert_eq!(a.log.to_csv(), b.log.to_csv(), "run logs differ byte-wise");
    assert!(
        a.params.data.iter().zip(&b.params.data).all(|(x, y)| x.to_bits() == y.to_bits()),
        "final parameters differ bit-wise"
    );
    pass("criterion 10 (determinism)", "identical config+seed reproduces logs byte-identically".into());
}

// ------------------------------------------------- diagnostics used above

#[test]
fn diagnostics_metric_sanity() {
    // scale invariance and fraction counting back the headline metrics
    let g1 = [0.2, -0.4, 0.6];
    let g2 = [0.5, 0.1, -0.2];
    let c = grad_cosine(&g1, &g2).unwrap();
    let g1s: Vec<f64> = g1.iter().map(|v| v * 3.0).collect();
    assert!((grad_cosine(&g1s, &g2).unwrap() - c).abs() < 1e-14);
    assert_eq!(positive_cos_fraction([Some(0.5), Some(-0.5)]), 0.5);
}

//! Component timing.
use std::time::Instant;
use caml_core::network::init_params;
use caml_core::pde::{heat_problem, sample_collocation};
use caml_core::trainer::{AdamState, L2Evaluator, ResidualEngine};
use caml_core::loss::{aligned_means, OffsetState};

fn main() {
    let problem = heat_problem();
    let spec = problem.default_mlp();
    let colloc = sample_collocation(&problem, 256, 48, 1);
    let mut params = init_params(&spec, 1);
    let mut engine = ResidualEngine::new(problem.clone(), spec, colloc);
    let mut adam = AdamState::new(params.len());
    let mut offset = OffsetState::new(10, 2, 1000);
    let mut l2 = L2Evaluator::new(&problem, &spec, 101).unwrap();
    let n = params.len();
    let (mut gr, mut gb, mut gt) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let (mut t_asm, mut t_solve, mut t_grad, mut t_adam, mut t_l2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let steps = 300u64;
    let t_all = Instant::now();
    for t in 1..=steps {
        let t0 = Instant::now();
        let bundle = engine.assemble(&params, 1.0, 5.0, true, t).unwrap();
        t_asm += t0.elapsed().as_secs_f64();
        let t0 = Instant::now();
        let c = offset.solve(&bundle, t, 1.0).unwrap();
        let _ = aligned_means(&bundle, c);
        t_solve += t0.elapsed().as_secs_f64();
        let t0 = Instant::now();
        engine.gradients(&params, c, &mut gr, &mut gb).unwrap();
        t_grad += t0.elapsed().as_secs_f64();
        let t0 = Instant::now();
        for i in 0..n { gt[i] = gr[i] + 5.0 * gb[i]; }
        adam.step(&mut params.data, &gt, 1e-3, 0.9, 0.999, 1e-8);
        t_adam += t0.elapsed().as_secs_f64();
        if t % 25 == 0 {
            let t0 = Instant::now();
            let _ = l2.eval(&params, c);
            t_l2 += t0.elapsed().as_secs_f64();
        }
    }
    let total = t_all.elapsed().as_secs_f64();
    let per = 1e3 / steps as f64;
    println!("assemble {:.1} solve {:.1} grad {:.1} adam {:.1} l2 {:.1} | total {:.1} ms/step",
        t_asm*per, t_solve*per, t_grad*per, t_adam*per, t_l2*per, total*per);
}

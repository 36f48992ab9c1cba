//! Print the error field of a checkpoint against the exact solution.
use caml_core::network::{forward, load_checkpoint, seedless_plain};
use caml_core::pde::heat_problem;

fn main() {
    let path = std::env::args().nth(1).expect("usage: inspect CKPT");
    let (spec, params) = load_checkpoint(std::path::Path::new(&path)).unwrap();
    let problem = heat_problem();
    println!("value errors u - u*:");
    for i in 0..5 {
        let mut row = String::new();
        for j in 0..5 {
            let x = [i as f64 / 4.0, j as f64 / 4.0];
            let u = seedless_plain(&params, &spec, &x)[0];
            row.push_str(&format!("{:9.3} ", u - problem.exact(x)[0]));
        }
        println!("x={:.2}: {row}", i as f64 / 4.0);
    }
    println!("flux error du/dx + 15 on x=1 edge:");
    for j in 1..5 {
        let y = j as f64 / 5.0;
        let d = forward(&params, &spec, &caml_core::ad::seed_inputs::<2, 3>(&[1.0, y]).unwrap())[0];
        println!("  y={y:.1}: {:9.4}   (u={:.2}, exact {:.2})", d.grad[0] + 15.0, d.value, problem.exact([1.0, y])[0]);
    }
    println!("dirichlet error on x=0 edge:");
    for j in 1..5 {
        let y = j as f64 / 5.0;
        let u = seedless_plain(&params, &spec, &[0.0, y])[0];
        println!("  y={y:.1}: u-100 = {:9.4}", u - 100.0);
    }
}

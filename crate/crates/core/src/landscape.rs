//! Loss-valley experiment on the 1-D Poisson equation `u'' = -sin(x)` over
//! `[0, pi]`: the residual landscape restricted to a function-space grid and
//! to the parameter space of a small trained MLP, with Hessian statistics and
//! 2-D slices through constant-shifted solutions.

use nalgebra::DMatrix;

use crate::ad::{Dual1, DualTaylor};
use crate::diagnostics::{
    build_slice_plane, evaluate_slice, fd_hessian, subspace_similarity, DiagError, HessianReport,
    SliceGrid, SlicePlane,
};
use crate::network::{forward_on_tape, init_params, MlpSpec, ParamVector};
use crate::tape::{Backward, Tape};
use crate::trainer::AdamState;

/// Grid nodes used for both collocation and the function-space coordinates.
pub const GRID_POINTS: usize = 100;

/// Ansatz parameters of the three anchor solutions: constant shifts only.
pub const ANCHOR_SHIFTS: [f64; 3] = [0.0, -1.0, 1.0];

/// Discretized function space over `[0, pi]`: candidate solutions are their
/// values at 100 uniform nodes; `u''` uses second-order central differences
/// at the interior nodes.
pub struct FunctionSpace {
    pub xs: Vec<f64>,
    h: f64,
}

impl Default for FunctionSpace {
    fn default() -> Self {
        Self::new()
    }
}

impl FunctionSpace {
    pub fn new() -> Self {
        let n = GRID_POINTS;
        let h = std::f64::consts::PI / (n - 1) as f64;
        let xs = (0..n).map(|i| i as f64 * h).collect();
        Self { xs, h }
    }

    /// Mean squared residual `u'' + sin(x)` over the interior nodes.
    pub fn residual_loss(&self, u: &[f64]) -> f64 {
        let n = u.len();
        let inv_h2 = 1.0 / (self.h * self.h);
        let mut acc = 0.0;
        for i in 1..n - 1 {
            let d2 = (u[i - 1] - 2.0 * u[i] + u[i + 1]) * inv_h2;
            let r = d2 + self.xs[i].sin();
            acc += r * r;
        }
        acc / (n - 2) as f64
    }

    /// `A sin(omega x + phi) + b` sampled on the grid.
    pub fn ansatz(&self, omega: f64, phi: f64, amp: f64, b: f64) -> Vec<f64> {
        self.xs.iter().map(|&x| amp * (omega * x + phi).sin() + b).collect()
    }

    /// The three constant-shifted anchor solutions.
    pub fn anchors(&self) -> [Vec<f64>; 3] {
        [
            self.ansatz(1.0, 0.0, 1.0, ANCHOR_SHIFTS[0]),
            self.ansatz(1.0, 0.0, 1.0, ANCHOR_SHIFTS[1]),
            self.ansatz(1.0, 0.0, 1.0, ANCHOR_SHIFTS[2]),
        ]
    }
}

/// Statistics of one anchor's Hessian.
pub struct AnchorReport {
    pub final_loss: f64,
    pub hessian: HessianReport,
    /// Second directional derivative of the loss along the normalized
    /// constant vector (finite differences).
    pub constant_mode_curvature: f64,
}

pub struct ValleyReport {
    pub anchors: Vec<AnchorReport>,
    /// Low-curvature subspace similarity of anchors 1.. against anchor 0.
    pub sims: Vec<f64>,
    /// max - min of the residual loss along `u0 + s * 1` for `s` in `[-1, 1]`.
    pub constant_line_spread: f64,
}

fn constant_mode_curvature(loss: impl Fn(&[f64]) -> f64, at: &[f64], h: f64) -> f64 {
    let n = at.len() as f64;
    let unit = 1.0 / n.sqrt();
    let shift = |s: f64| -> Vec<f64> { at.iter().map(|v| v + s * unit).collect() };
    (loss(&shift(h)) - 2.0 * loss(at) + loss(&shift(-h))) / (h * h)
}

/// Function-space valley facts: Hessian spectra at the three anchors,
/// basis similarity, and flatness along the constant-shift line.
pub fn function_space_report(h: f64, k: usize) -> Result<ValleyReport, DiagError> {
    let fs = FunctionSpace::new();
    let anchors = fs.anchors();
    let mut reports = Vec::new();
    for u in &anchors {
        let hess = fd_hessian(|v| fs.residual_loss(v), u, h, k)?;
        reports.push(AnchorReport {
            final_loss: fs.residual_loss(u),
            constant_mode_curvature: constant_mode_curvature(|v| fs.residual_loss(v), u, 1e-3),
            hessian: hess,
        });
    }
    let sims = (1..3)
        .map(|i| {
            subspace_similarity(&reports[0].hessian.low_curvature_basis, &reports[i].hessian.low_curvature_basis)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let base = &anchors[0];
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for step in 0..=40 {
        let s = -1.0 + step as f64 / 20.0;
        let shifted: Vec<f64> = base.iter().map(|v| v + s).collect();
        let l = fs.residual_loss(&shifted);
        lo = lo.min(l);
        hi = hi.max(l);
    }
    Ok(ValleyReport { anchors: reports, sims, constant_line_spread: hi - lo })
}

/// Slice plane through the three function-space anchors. The anchors differ
/// only along the constant direction, so the Gram-Schmidt residual of the
/// third anchor is degenerate; the second direction then falls back to a
/// fixed orthonormalized probe (`sin(2x)` on the grid) so the exported slice
/// still shows the valley walls.
pub fn function_space_plane() -> (FunctionSpace, SlicePlane, [(f64, f64); 3]) {
    let fs = FunctionSpace::new();
    let anchors = fs.anchors();
    let plane = match build_slice_plane(&anchors[0], &anchors[1], &anchors[2]) {
        Ok(p) => p,
        Err(DiagError::DegeneratePlane) => {
            let mut d1: Vec<f64> = anchors[1].iter().zip(&anchors[0]).map(|(a, b)| a - b).collect();
            let n1 = d1.iter().map(|v| v * v).sum::<f64>().sqrt();
            d1.iter_mut().for_each(|v| *v /= n1);
            let mut d2: Vec<f64> = fs.xs.iter().map(|&x| (2.0 * x).sin()).collect();
            let dot: f64 = d2.iter().zip(&d1).map(|(a, b)| a * b).sum();
            d2.iter_mut().zip(&d1).for_each(|(v, d)| *v -= dot * d);
            let n2 = d2.iter().map(|v| v * v).sum::<f64>().sqrt();
            d2.iter_mut().for_each(|v| *v /= n2);
            SlicePlane { center: anchors[0].clone(), d1, d2 }
        }
        Err(e) => panic!("unexpected plane failure: {e}"),
    };
    let coords = |u: &[f64]| {
        let a: f64 = u.iter().zip(&plane.center).zip(&plane.d1).map(|((u, c), d)| (u - c) * d).sum();
        let b: f64 = u.iter().zip(&plane.center).zip(&plane.d2).map(|((u, c), d)| (u - c) * d).sum();
        (a, b)
    };
    let anchor_coords = [coords(&anchors[0]), coords(&anchors[1]), coords(&anchors[2])];
    (fs, plane, anchor_coords)
}

/// Exported function-space slice grid.
pub fn function_space_slice(n: usize) -> (SliceGrid, [(f64, f64); 3]) {
    let (fs, plane, coords) = function_space_plane();
    let grid = evaluate_slice(&plane, |u| fs.residual_loss(u), n, (-13.0, 13.0), (-3.0, 3.0));
    (grid, coords)
}

/// Backbone of the parameter-space experiment.
pub fn valley_mlp_spec() -> MlpSpec {
    MlpSpec::new(1, 1, 3, 20)
}

/// One trained anchor network: fits `sin(x) + shift` with the combined
/// residual + data loss, full batch, Adam.
pub struct TrainedAnchor {
    pub params: ParamVector,
    pub final_loss: f64,
}

/// Mean residual + data loss and the cotangent-seeded gradient, via the tape.
fn valley_loss_grad(
    tape: &mut Tape<1, 1>,
    bw: &mut Backward<1, 1>,
    layout: &crate::network::MlpLayout,
    spec: &MlpSpec,
    theta: &[f64],
    xs: &[f64],
    target: &[f64],
    grad: &mut [f64],
) -> f64 {
    tape.reset();
    tape.set_params(theta);
    let n = xs.len() as f64;
    let mut seeds = Vec::with_capacity(xs.len());
    let mut loss = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let out = forward_on_tape(tape, layout, spec, &[Dual1::variable(x, 0)])[0];
        let v = tape.value(out);
        let r = v.hess[0] + x.sin();
        let d = v.value - target[i];
        loss += (r * r + d * d) / n;
        let cot = DualTaylor::<1, 1> {
            value: 2.0 * d / n,
            grad: [0.0],
            hess: [2.0 * r / n],
        };
        seeds.push((out, cot));
    }
    tape.backward_cotangent_into(&seeds, bw);
    grad.copy_from_slice(&bw.param_grad);
    loss
}

pub fn train_anchor(shift: f64, seed: u64, steps: u64, eta: f64) -> TrainedAnchor {
    let spec = valley_mlp_spec();
    let layout = spec.layout();
    let fs = FunctionSpace::new();
    let target: Vec<f64> = fs.xs.iter().map(|&x| x.sin() + shift).collect();
    let mut params = init_params(&spec, seed);
    let mut adam = AdamState::new(params.len());
    let mut tape = Tape::<1, 1>::new(&params.data);
    let mut bw = Backward::new();
    let mut grad = vec![0.0; params.len()];
    let mut loss = f64::NAN;
    for _ in 0..steps {
        loss = valley_loss_grad(
            &mut tape,
            &mut bw,
            &layout,
            &spec,
            &params.data,
            &fs.xs,
            &target,
            &mut grad,
        );
        adam.step(&mut params.data, &grad, eta, 0.9, 0.999, 1e-8);
    }
    TrainedAnchor { params, final_loss: loss }
}

/// Residual-only loss of the network over the grid (used for the
/// parameter-space Hessian and slices).
pub fn network_residual_loss(spec: &MlpSpec, theta: &[f64], xs: &[f64]) -> f64 {
    let params = ParamVector {
        data: theta.to_vec(),
        layout: spec.layout(),
    };
    let mut eval = crate::network::DualEval::<1, 1>::new(spec);
    let mut acc = 0.0;
    for &x in xs {
        let out = eval.eval(&params, &[Dual1::variable(x, 0)])[0];
        let r = out.hess[0] + x.sin();
        acc += r * r;
    }
    acc / xs.len() as f64
}

/// Parameter-space valley facts at the three trained anchors.
pub fn param_space_report(k: usize, steps: u64, h: f64) -> Result<ValleyReport, DiagError> {
    let spec = valley_mlp_spec();
    let fs = FunctionSpace::new();
    let mut reports = Vec::new();
    let mut thetas = Vec::new();
    for (i, &shift) in ANCHOR_SHIFTS.iter().enumerate() {
        let anchor = train_anchor(shift, 100 + i as u64, steps, 1e-3);
        let loss = |t: &[f64]| network_residual_loss(&spec, t, &fs.xs);
        let hess = fd_hessian(loss, &anchor.params.data, h, k)?;
        reports.push(AnchorReport {
            final_loss: anchor.final_loss,
            constant_mode_curvature: f64::NAN,
            hessian: hess,
        });
        thetas.push(anchor.params.data);
    }
    let sims = (1..3)
        .map(|i| {
            subspace_similarity(&reports[0].hessian.low_curvature_basis, &reports[i].hessian.low_curvature_basis)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let _ = thetas;
    Ok(ValleyReport { anchors: reports, sims, constant_line_spread: f64::NAN })
}

/// Parameter-space slice through the three trained anchor networks.
pub fn param_space_slice(n: usize, steps: u64) -> Result<SliceGrid, DiagError> {
    let spec = valley_mlp_spec();
    let fs = FunctionSpace::new();
    let anchors: Vec<Vec<f64>> = ANCHOR_SHIFTS
        .iter()
        .enumerate()
        .map(|(i, &s)| train_anchor(s, 100 + i as u64, steps, 1e-3).params.data)
        .collect();
    let plane = build_slice_plane(&anchors[0], &anchors[1], &anchors[2])?;
    let d01: f64 = anchors[1]
        .iter()
        .zip(&anchors[0])
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let r = 1.5 * d01;
    Ok(evaluate_slice(&plane, |t| network_residual_loss(&spec, t, &fs.xs), n, (-r, r), (-r, r)))
}

/// Eigenvalue CSV for a Hessian report.
pub fn eigenvalues_csv(report: &HessianReport) -> String {
    use std::fmt::Write as _;
    let mut s = String::from("index,eigenvalue\n");
    for (i, l) in report.eigenvalues.iter().enumerate() {
        let _ = writeln!(s, "{i},{l}");
    }
    s
}

/// Hold-out helper for tests: the exact low-curvature subspace of the
/// function-space Hessian contains the constant vector.
pub fn constant_direction(n: usize) -> DMatrix<f64> {
    DMatrix::from_element(n, 1, 1.0 / (n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchor_solutions_have_tiny_residual_loss() {
        let fs = FunctionSpace::new();
        for u in fs.anchors() {
            // discretization error only: sin * O(h^2)
            assert!(fs.residual_loss(&u) < 1e-7);
        }
    }

    #[test]
    fn constant_line_is_flat() {
        let report = function_space_report(1e-3, 1).unwrap();
        assert!(report.constant_line_spread < 1e-10, "spread {}", report.constant_line_spread);
        for a in &report.anchors {
            assert!(a.constant_mode_curvature.abs() < 1e-8, "curvature {}", a.constant_mode_curvature);
        }
    }

    #[test]
    fn function_space_plane_contains_anchors_on_valley_line() {
        let (fs, plane, coords) = function_space_plane();
        // all three anchors sit on the beta = 0 line
        for (_, b) in coords {
            assert!(b.abs() < 1e-6, "beta {b}");
        }
        // loss along that line is near zero, walls along d2 are not
        let on_line: Vec<f64> =
            plane.center.iter().zip(&plane.d1).map(|(c, d)| c + 3.0 * d).collect();
        assert!(fs.residual_loss(&on_line) < 1e-7);
        let off_line: Vec<f64> =
            plane.center.iter().zip(&plane.d2).map(|(c, d)| c + 3.0 * d).collect();
        assert!(fs.residual_loss(&off_line) > 1e-2);
    }

    #[test]
    fn trained_anchor_fits_target() {
        let anchor = train_anchor(0.0, 100, 1500, 1e-3);
        assert!(anchor.final_loss < 1e-3, "loss {}", anchor.final_loss);
    }
}

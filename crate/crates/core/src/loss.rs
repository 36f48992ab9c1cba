//! Standard and aligned PINN losses, the solvable additive offset, and the
//! delayed-residual gating schedule.
//!
//! Interior residual entries `r` and boundary entries `s` are stored
//! flattened; `n_res` / `n_bc` count collocation *points*, so vector-valued
//! problems contribute the squared norm of their residual per point. With a
//! linear zeroth-order structure the aligned residuals are affine in the
//! offset, `r + gamma*c` and `s + alpha*c`, and the optimal offset has a
//! closed form; otherwise a few Newton steps on the scalar objective are
//! used, with first and second derivatives obtained from one-coordinate
//! duals.

use std::fmt;

use crate::ad::Dual1;

/// Residuals and metadata needed to solve for the offset and assemble losses.
pub struct ResidualBundle {
    pub r: Vec<f64>,
    pub s: Vec<f64>,
    /// Zeroth-order coefficient per interior entry (`dr/dc`), linear path.
    pub gamma: Vec<f64>,
    /// Zeroth-order coefficient per boundary entry (`ds/dc`).
    pub alpha: Vec<f64>,
    /// Interior point count (normalizes the residual mean).
    pub n_res: usize,
    /// Boundary point count.
    pub n_bc: usize,
    pub w_res: f64,
    pub w_bc: f64,
    /// For nonlinear zeroth-order terms: rebuilds all residual entries as
    /// functions of the offset, with the network output held fixed.
    pub residual_fn: Option<Box<dyn Fn(Dual1) -> (Vec<Dual1>, Vec<Dual1>) + Send + Sync>>,
}

impl ResidualBundle {
    /// Linear bundle without a residual closure.
    pub fn linear(
        r: Vec<f64>,
        s: Vec<f64>,
        gamma: Vec<f64>,
        alpha: Vec<f64>,
        w_res: f64,
        w_bc: f64,
    ) -> Self {
        let (n_res, n_bc) = (r.len(), s.len());
        assert_eq!(r.len(), gamma.len());
        assert_eq!(s.len(), alpha.len());
        assert!(w_res > 0.0 && w_bc > 0.0);
        Self { r, s, gamma, alpha, n_res, n_bc, w_res, w_bc, residual_fn: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OffsetError {
    /// No zeroth-order term anywhere: the offset is annihilated and the
    /// aligned loss degenerates to the standard one.
    Degenerate,
    /// Newton produced a non-finite iterate; carries the iterate history.
    Diverged(Vec<f64>),
}

impl fmt::Display for OffsetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OffsetError::Degenerate => {
                write!(f, "degenerate offset: no zeroth-order term in any residual")
            }
            OffsetError::Diverged(h) => write!(f, "offset solver diverged after {} iterates", h.len()),
        }
    }
}

impl std::error::Error for OffsetError {}

/// Mean-of-squares losses of the raw residuals: `(L_res, L_bc)`.
pub fn standard_loss(bundle: &ResidualBundle) -> (f64, f64) {
    (mean_sq(&bundle.r, bundle.n_res), mean_sq(&bundle.s, bundle.n_bc))
}

fn mean_sq(v: &[f64], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    v.iter().map(|x| x * x).sum::<f64>() / n as f64
}

/// Unique minimizer of the quadratic offset objective for linear zeroth-order
/// terms. `res_gate` scales the residual weight (1 when no gating applies).
pub fn closed_form_offset_gated(bundle: &ResidualBundle, res_gate: f64) -> Result<f64, OffsetError> {
    let wr = bundle.w_res * res_gate / bundle.n_res.max(1) as f64;
    let wb = bundle.w_bc / bundle.n_bc.max(1) as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for (r, g) in bundle.r.iter().zip(&bundle.gamma) {
        num += wr * g * r;
        den += wr * g * g;
    }
    for (s, a) in bundle.s.iter().zip(&bundle.alpha) {
        num += wb * a * s;
        den += wb * a * a;
    }
    if den <= 0.0 {
        return Err(OffsetError::Degenerate);
    }
    Ok(-num / den)
}

/// Closed-form offset with the plain (ungated) residual weight.
pub fn closed_form_offset(bundle: &ResidualBundle) -> Result<f64, OffsetError> {
    closed_form_offset_gated(bundle, 1.0)
}

/// Shift the linear bundle's residuals: `r + gamma*c`, `s + alpha*c`.
pub fn aligned_residuals(bundle: &ResidualBundle, c: f64) -> ResidualBundle {
    ResidualBundle {
        r: bundle.r.iter().zip(&bundle.gamma).map(|(r, g)| r + g * c).collect(),
        s: bundle.s.iter().zip(&bundle.alpha).map(|(s, a)| s + a * c).collect(),
        gamma: bundle.gamma.clone(),
        alpha: bundle.alpha.clone(),
        n_res: bundle.n_res,
        n_bc: bundle.n_bc,
        w_res: bundle.w_res,
        w_bc: bundle.w_bc,
        residual_fn: None,
    }
}

/// Aligned mean losses `(L_res_alg, L_bc_alg)` at offset `c`.
pub fn aligned_means(bundle: &ResidualBundle, c: f64) -> (f64, f64) {
    match &bundle.residual_fn {
        None => {
            let lr = bundle
                .r
                .iter()
                .zip(&bundle.gamma)
                .map(|(r, g)| (r + g * c).powi(2))
                .sum::<f64>()
                / bundle.n_res.max(1) as f64;
            let lb = bundle
                .s
                .iter()
                .zip(&bundle.alpha)
                .map(|(s, a)| (s + a * c).powi(2))
                .sum::<f64>()
                / bundle.n_bc.max(1) as f64;
            (lr, lb)
        }
        Some(f) => {
            let (r, s) = f(Dual1::constant(c));
            let lr = r.iter().map(|d| d.value * d.value).sum::<f64>() / bundle.n_res.max(1) as f64;
            let lb = s.iter().map(|d| d.value * d.value).sum::<f64>() / bundle.n_bc.max(1) as f64;
            (lr, lb)
        }
    }
}

/// The scalar sub-optimization objective
/// `J(c) = w_res * mean(r̄(c)²) + w_bc * mean(s̄(c)²)`.
pub fn objective_j(bundle: &ResidualBundle, c: f64) -> f64 {
    objective_j_gated(bundle, c, 1.0)
}

pub fn objective_j_gated(bundle: &ResidualBundle, c: f64, res_gate: f64) -> f64 {
    let (lr, lb) = aligned_means(bundle, c);
    bundle.w_res * res_gate * lr + bundle.w_bc * lb
}

/// First and second derivatives of the gated objective at `c`, computed with
/// one-coordinate duals through the residual closure when present.
pub fn objective_j_derivs(bundle: &ResidualBundle, c: f64, res_gate: f64) -> (f64, f64) {
    let wr = bundle.w_res * res_gate / bundle.n_res.max(1) as f64;
    let wb = bundle.w_bc / bundle.n_bc.max(1) as f64;
    match &bundle.residual_fn {
        None => {
            let mut j1 = 0.0;
            let mut j2 = 0.0;
            for (r, g) in bundle.r.iter().zip(&bundle.gamma) {
                j1 += wr * 2.0 * g * (r + g * c);
                j2 += wr * 2.0 * g * g;
            }
            for (s, a) in bundle.s.iter().zip(&bundle.alpha) {
                j1 += wb * 2.0 * a * (s + a * c);
                j2 += wb * 2.0 * a * a;
            }
            (j1, j2)
        }
        Some(f) => {
            let (r, s) = f(Dual1::variable(c, 0));
            let mut acc = Dual1::constant(0.0);
            for d in &r {
                acc = acc + (*d * *d).scale(wr);
            }
            for d in &s {
                acc = acc + (*d * *d).scale(wb);
            }
            (acc.grad[0], acc.hess[0])
        }
    }
}

/// `K` Newton updates on the objective from `c0`; near-singular curvature
/// falls back to one guarded secant step on the first derivative.
pub fn newton_offset(
    derivs: impl Fn(f64) -> (f64, f64),
    c0: f64,
    k: usize,
) -> Result<f64, OffsetError> {
    assert!(k >= 1, "need at least one Newton step");
    let mut c = c0;
    let mut history = vec![c0];
    for _ in 0..k {
        let (j1, j2) = derivs(c);
        let step = if j2.abs() < 1e-12 {
            let delta = 1e-3 * (1.0 + c.abs());
            let (j1b, _) = derivs(c + delta);
            let slope = (j1b - j1) / delta;
            if slope.abs() > 0.0 && slope.is_finite() {
                (-j1 / slope).clamp(-1e3, 1e3)
            } else {
                -j1.signum() * delta
            }
        } else {
            -j1 / j2
        };
        c += step;
        history.push(c);
        if !c.is_finite() {
            return Err(OffsetError::Diverged(history));
        }
    }
    Ok(c)
}

/// Piecewise-linear residual gate: `t_r = 0` degenerates to a step at `t_d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DelaySchedule {
    pub t_d: u64,
    pub t_r: u64,
}

impl DelaySchedule {
    pub fn new(t_d: u64, t_r: u64) -> Self {
        Self { t_d, t_r }
    }
}

/// The gating factor `lambda(t)` in `[0, 1]`.
pub fn delay_factor(t: u64, schedule: DelaySchedule) -> f64 {
    if t < schedule.t_d {
        0.0
    } else if t >= schedule.t_d + schedule.t_r {
        1.0
    } else {
        (t - schedule.t_d) as f64 / schedule.t_r as f64
    }
}

/// Gated total loss at step `t` with `c` already solved and frozen:
/// `w_res * lambda(t) * L_res_alg + w_bc * L_bc_alg`.
pub fn caml_total_loss(bundle: &ResidualBundle, c: f64, t: u64, schedule: DelaySchedule) -> f64 {
    let (lr, lb) = aligned_means(bundle, c);
    bundle.w_res * delay_factor(t, schedule) * lr + bundle.w_bc * lb
}

/// Add the solved offset to every solution component flagged as shifted.
pub fn reconstruct_solution(u_net: &[f64], shifted: &[usize], c: f64) -> Vec<f64> {
    let mut out = u_net.to_vec();
    for &k in shifted {
        out[k] += c;
    }
    out
}

/// Per-run state of the offset solver.
#[derive(Clone, Debug)]
pub struct OffsetState {
    pub c: f64,
    pub frozen: bool,
    pub k_init: usize,
    pub k_few: usize,
    pub t_c: u64,
}

impl OffsetState {
    pub fn new(k_init: usize, k_few: usize, t_c: u64) -> Self {
        Self { c: 0.0, frozen: false, k_init, k_few, t_c }
    }

    /// Solve the offset at step `t` (1-based) with residual gate `res_gate`.
    ///
    /// Linear bundles are re-solved exactly every step. Nonlinear bundles run
    /// `k_init` Newton steps at `t = 1`, `k_few` warm-started steps while
    /// `t < t_c`, and freeze the value from step `t_c` on.
    pub fn solve(
        &mut self,
        bundle: &ResidualBundle,
        t: u64,
        res_gate: f64,
    ) -> Result<f64, OffsetError> {
        if bundle.residual_fn.is_none() {
            self.c = closed_form_offset_gated(bundle, res_gate)?;
            return Ok(self.c);
        }
        if self.frozen {
            return Ok(self.c);
        }
        if t >= self.t_c {
            self.frozen = true;
            return Ok(self.c);
        }
        let k = if t == 1 { self.k_init } else { self.k_few };
        self.c = newton_offset(|c| objective_j_derivs(bundle, c, res_gate), self.c, k.max(1))?;
        Ok(self.c)
    }
}

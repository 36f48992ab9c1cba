//! End-to-end training: collocation, residual evaluation through the network
//! and AD core, offset solve, gated loss, Adam update, early stopping and
//! per-step diagnostics logging.

use std::fmt;
use std::fmt::Write as _;

use smallvec::SmallVec;

use crate::ad::Dual1;
use crate::diagnostics::{grad_cosine, grad_norm_ratio, positive_cos_fraction};
use crate::loss::{
    aligned_means, delay_factor, DelaySchedule, OffsetError, OffsetState, ResidualBundle,
};
use crate::network::{init_params, BatchEval, MlpSpec, ParamVector, PlainEval, LANES};
use crate::pde::{
    sample_collocation, BenchmarkKind, BenchmarkProblem, CollocationSet, FieldDerivs, TapeCtx,
    ValueCtx,
};
use crate::tape::{Backward, Node, Tape};

/// Evaluation cadence for the relative-L2 metric, in steps.
pub const EVAL_INTERVAL: u64 = 25;

/// Loss arms: the vanilla baseline, each mechanism alone, and the full method.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrainMode {
    Vanilla,
    AcOnly,
    DrOnly,
    Caml,
}

impl TrainMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "vanilla" => Some(TrainMode::Vanilla),
            "ac_only" => Some(TrainMode::AcOnly),
            "dr_only" => Some(TrainMode::DrOnly),
            "caml" => Some(TrainMode::Caml),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TrainMode::Vanilla => "vanilla",
            TrainMode::AcOnly => "ac_only",
            TrainMode::DrOnly => "dr_only",
            TrainMode::Caml => "caml",
        }
    }

    /// Does this arm solve the additive offset?
    pub fn uses_offset(&self) -> bool {
        matches!(self, TrainMode::AcOnly | TrainMode::Caml)
    }

    /// Does this arm gate the residual loss behind the delay schedule?
    pub fn uses_delay(&self) -> bool {
        matches!(self, TrainMode::DrOnly | TrainMode::Caml)
    }
}

/// All hyperparameters of one run.
#[derive(Clone, Copy, Debug)]
pub struct TrainConfig {
    pub eta: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_adam: f64,
    pub w_res: f64,
    pub w_bc: f64,
    pub t_min: u64,
    pub t_max: u64,
    pub l2_stop: f64,
    pub schedule: DelaySchedule,
    pub k_init: usize,
    pub k_few: usize,
    pub t_c: u64,
    pub mode: TrainMode,
    pub seed: u64,
    pub n_interior: usize,
    pub n_per_edge: usize,
    pub eval_grid: usize,
}

impl TrainConfig {
    /// Reported hyperparameters per benchmark (learning rate, loss weights,
    /// iteration bounds, stopping threshold, delay schedule, Newton budget).
    pub fn defaults_for(kind: BenchmarkKind) -> Self {
        let base = Self {
            eta: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps_adam: 1e-8,
            w_res: 1.0,
            w_bc: 1.0,
            t_min: 6000,
            t_max: 20000,
            l2_stop: 1e-2,
            schedule: DelaySchedule::new(25, 50),
            k_init: 10,
            k_few: 2,
            t_c: 1000,
            mode: TrainMode::Caml,
            seed: 1,
            n_interior: 8000,
            n_per_edge: 600,
            eval_grid: 101,
        };
        match kind {
            BenchmarkKind::Heat => Self { w_bc: 5.0, l2_stop: 2e-3, ..base },
            BenchmarkKind::Poisson => Self {
                w_bc: 100.0,
                l2_stop: 1e-2,
                schedule: DelaySchedule::new(200, 800),
                ..base
            },
            BenchmarkKind::NavierStokes => Self { w_bc: 100.0, l2_stop: 5e-3, ..base },
            BenchmarkKind::Helmholtz => Self { w_bc: 10.0, l2_stop: 1e-3, t_min: 4000, ..base },
            BenchmarkKind::ToyPoisson => Self {
                l2_stop: 5e-3,
                t_min: 4000,
                t_max: 12000,
                schedule: DelaySchedule::new(0, 0),
                ..base
            },
            BenchmarkKind::TwoPhasePoisson => Self { t_min: 6000, ..base },
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.t_min == 0 || self.t_min > self.t_max {
            return Err(TrainError::Config("need 0 < t_min <= t_max".into()));
        }
        if self.l2_stop <= 0.0 {
            return Err(TrainError::Config("l2_stop must be positive".into()));
        }
        if self.w_res <= 0.0 || self.w_bc <= 0.0 {
            return Err(TrainError::Config("loss weights must be positive".into()));
        }
        if self.n_interior == 0 || self.n_per_edge == 0 || self.eval_grid < 2 {
            return Err(TrainError::Config("collocation/eval sizes too small".into()));
        }
        Ok(())
    }
}

#[derive(Debug)]
pub enum TrainError {
    /// Non-finite residual or gradient; carries the training step.
    Blowup { step: u64, detail: String },
    Offset { step: u64, source: OffsetError },
    Metric(String),
    Config(String),
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::Blowup { step, detail } => write!(f, "blow-up at step {step}: {detail}"),
            TrainError::Offset { step, source } => write!(f, "offset solve failed at step {step}: {source}"),
            TrainError::Metric(m) => write!(f, "metric error: {m}"),
            TrainError::Config(m) => write!(f, "bad config: {m}"),
        }
    }
}

impl std::error::Error for TrainError {}

/// First/second-moment state of the Adam optimizer.
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    /// Bias-corrected update in place; returns the Euclidean step length.
    pub fn step(
        &mut self,
        theta: &mut [f64],
        grad: &[f64],
        eta: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
    ) -> f64 {
        self.t += 1;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);
        let mut dist2 = 0.0;
        for i in 0..theta.len() {
            let g = grad[i];
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            let delta = -eta * m_hat / (v_hat.sqrt() + eps);
            theta[i] += delta;
            dist2 += delta * delta;
        }
        dist2.sqrt()
    }
}

/// One logged training step.
#[derive(Clone, Copy, Debug)]
pub struct StepRecord {
    pub step: u64,
    pub loss_res: f64,
    pub loss_bc: f64,
    pub loss_total: f64,
    pub lambda: f64,
    pub c: f64,
    pub cos_phi: Option<f64>,
    pub grad_norm_ratio: f64,
    pub rel_l2: Option<f64>,
    pub cum_param_dist: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct RunSummary {
    /// First evaluated step with rel_l2 below the stopping threshold.
    pub stp: Option<u64>,
    pub l2_at_t_min: Option<f64>,
    pub final_rel_l2: f64,
    pub pos_cos_fraction: f64,
    pub success: bool,
    pub final_c: f64,
    pub steps_run: u64,
}

/// Append-only per-step records plus run summary.
#[derive(Clone, Debug)]
pub struct RunLog {
    pub records: Vec<StepRecord>,
    pub summary: RunSummary,
}

impl RunLog {
    pub const CSV_HEADER: &'static str =
        "step,loss_res,loss_bc,loss_total,lambda,c,cos_phi,grad_norm_ratio,rel_l2,cum_param_dist";

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.records.len() * 96);
        s.push_str(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            let _ = write!(
                s,
                "{},{},{},{},{},{},",
                r.step, r.loss_res, r.loss_bc, r.loss_total, r.lambda, r.c
            );
            if let Some(c) = r.cos_phi {
                let _ = write!(s, "{c}");
            }
            let _ = write!(s, ",{},", r.grad_norm_ratio);
            if let Some(l) = r.rel_l2 {
                let _ = write!(s, "{l}");
            }
            let _ = writeln!(s, ",{}", r.cum_param_dist);
        }
        s
    }
}

/// Training result: log, final parameters and offset.
pub struct TrainOutcome {
    pub log: RunLog,
    pub spec: MlpSpec,
    pub params: ParamVector,
    pub c: f64,
}

/// Evaluates residuals and loss gradients over a fixed collocation set.
///
/// One batched forward pass per step computes and caches every derivative
/// term; the offset solve reuses those cached values, and the reverse sweeps
/// run afterwards from per-point seeds in fixed point order.
pub struct ResidualEngine {
    problem: BenchmarkProblem,
    spec: MlpSpec,
    colloc: CollocationSet,
    interior_eval: BatchEval,
    boundary_eval: BatchEval,
    boundary_pts: Vec<[f64; 2]>,
    micro: Tape<0, 0>,
    micro_bw: Backward<0, 0>,
    seeds: Vec<f64>,
}

impl ResidualEngine {
    pub fn new(problem: BenchmarkProblem, spec: MlpSpec, colloc: CollocationSet) -> Self {
        let boundary_pts: Vec<[f64; 2]> = colloc.boundary.iter().map(|r| r.x).collect();
        let interior_eval = BatchEval::new(&spec, colloc.interior.len());
        let boundary_eval = BatchEval::new(&spec, boundary_pts.len());
        let max_pts = colloc.interior.len().max(boundary_pts.len());
        Self {
            problem,
            spec,
            colloc,
            interior_eval,
            boundary_eval,
            boundary_pts,
            micro: Tape::new(&[]),
            micro_bw: Backward::new(),
            seeds: vec![0.0; max_pts * 3 * LANES],
        }
    }

    pub fn collocation(&self) -> &CollocationSet {
        &self.colloc
    }

    fn fields_at(eval: &BatchEval, p: usize, out_dim: usize) -> FieldDerivs<f64> {
        let mut f = FieldDerivs::with_capacity(out_dim, 0.0);
        for j in 0..out_dim {
            let d = eval.output(p, j);
            f.val[j] = d.value;
            f.gx[j] = d.grad[0];
            f.gy[j] = d.grad[1];
            f.hxx[j] = d.hess[0];
            f.hxy[j] = d.hess[1];
            f.hyy[j] = d.hess[2];
        }
        f
    }

    /// Forward pass over all collocation points; returns the residual bundle
    /// (raw residuals, zeroth-order coefficients, and the residual-vs-offset
    /// closure for the nonlinear path).
    pub fn assemble(
        &mut self,
        params: &ParamVector,
        w_res: f64,
        w_bc: f64,
        with_offset_closure: bool,
        step: u64,
    ) -> Result<ResidualBundle, TrainError> {
        let out_dim = self.spec.output_dim;
        self.interior_eval.forward(params, &self.colloc.interior);
        self.boundary_eval.forward(params, &self.boundary_pts);

        let n_res = self.colloc.interior.len();
        let n_bc = self.colloc.boundary.len();
        let mut r = Vec::with_capacity(n_res * self.problem.residual_components());
        let mut gamma = Vec::with_capacity(r.capacity());
        let mut cached: Vec<FieldDerivs<f64>> = Vec::new();
        for (p, &x) in self.colloc.interior.iter().enumerate() {
            let f = Self::fields_at(&self.interior_eval, p, out_dim);
            let entries = self.problem.residual(&mut ValueCtx, &f, x);
            for &e in &entries {
                if !e.is_finite() {
                    return Err(TrainError::Blowup {
                        step,
                        detail: format!("interior residual at point {p}"),
                    });
                }
                r.push(e);
                gamma.push(self.colloc.gamma[p]);
            }
            if with_offset_closure && !self.problem.linear_offset {
                cached.push(f);
            }
        }

        let mut s = Vec::with_capacity(n_bc * self.problem.constrained.len());
        let mut alpha = Vec::with_capacity(s.capacity());
        for (p, rec) in self.colloc.boundary.iter().enumerate() {
            let f = Self::fields_at(&self.boundary_eval, p, out_dim);
            let entries = self.problem.boundary_residual_aligned(&mut ValueCtx, &f, rec, None);
            for &e in &entries {
                if !e.is_finite() {
                    return Err(TrainError::Blowup {
                        step,
                        detail: format!("boundary residual at point {p}"),
                    });
                }
                s.push(e);
                alpha.push(rec.alpha);
            }
        }

        let residual_fn = if with_offset_closure && !self.problem.linear_offset {
            let problem = self.problem.clone();
            let xs: Vec<[f64; 2]> = self.colloc.interior.clone();
            let s_base = s.clone();
            let a_base = alpha.clone();
            Some(Box::new(move |c: Dual1| {
                let mut ctx = crate::pde::OffsetDualCtx;
                let mut rr = Vec::with_capacity(xs.len() * problem.residual_components());
                for (f, &x) in cached.iter().zip(&xs) {
                    let lifted = f.lift(&mut ctx);
                    for e in problem.residual_aligned(&mut ctx, &lifted, x, Some(c)) {
                        rr.push(e);
                    }
                }
                let ss = s_base
                    .iter()
                    .zip(&a_base)
                    .map(|(s, a)| c.scale(*a).add_scalar(*s))
                    .collect();
                (rr, ss)
            })
                as Box<dyn Fn(Dual1) -> (Vec<Dual1>, Vec<Dual1>) + Send + Sync>)
        } else {
            None
        };

        Ok(ResidualBundle { r, s, gamma, alpha, n_res, n_bc, w_res, w_bc, residual_fn })
    }

    /// Reverse sweeps at the solved offset: unweighted gradients of the
    /// aligned residual mean (`g_res`) and boundary mean (`g_bc`) with
    /// respect to the parameters. `c` is treated as a constant.
    pub fn gradients(
        &mut self,
        params: &ParamVector,
        c: f64,
        g_res: &mut [f64],
        g_bc: &mut [f64],
    ) -> Result<(), TrainError> {
        g_res.fill(0.0);
        g_bc.fill(0.0);
        let out_dim = self.spec.output_dim;
        let n_res = self.colloc.interior.len();
        let n_bc = self.colloc.boundary.len();

        // interior sweep
        let weight = 1.0 / n_res as f64;
        for p in 0..n_res {
            let x = self.colloc.interior[p];
            let fields = Self::fields_at(&self.interior_eval, p, out_dim);
            let nodes = self.record_point(&fields, out_dim);
            let cn = self.micro.konst(c);
            let mut ctx = TapeCtx { tape: &mut self.micro };
            let entries = self.problem.residual_aligned(&mut ctx, &nodes, x, Some(cn));
            self.seed_from_entries(&entries, weight, p, out_dim, &nodes);
        }
        self.interior_eval.backward(params, &self.seeds[..n_res * out_dim * LANES], g_res);

        // boundary sweep
        let weight = 1.0 / n_bc as f64;
        for p in 0..n_bc {
            let fields = Self::fields_at(&self.boundary_eval, p, out_dim);
            let nodes = self.record_point(&fields, out_dim);
            let cn = self.micro.konst(c);
            let rec = &self.colloc.boundary[p];
            let entries = {
                let mut ctx = TapeCtx { tape: &mut self.micro };
                self.problem.boundary_residual_aligned(&mut ctx, &nodes, rec, Some(cn))
            };
            self.seed_from_entries(&entries, weight, p, out_dim, &nodes);
        }
        self.boundary_eval.backward(params, &self.seeds[..n_bc * out_dim * LANES], g_bc);
        Ok(())
    }

    /// Register one point's extracted components as micro-tape leaves.
    fn record_point(&mut self, f: &FieldDerivs<f64>, out_dim: usize) -> FieldDerivs<Node> {
        self.micro.reset();
        let mut nodes = FieldDerivs {
            val: SmallVec::new(),
            gx: SmallVec::new(),
            gy: SmallVec::new(),
            hxx: SmallVec::new(),
            hxy: SmallVec::new(),
            hyy: SmallVec::new(),
        };
        for j in 0..out_dim {
            nodes.val.push(self.micro.konst(f.val[j]));
            nodes.gx.push(self.micro.konst(f.gx[j]));
            nodes.gy.push(self.micro.konst(f.gy[j]));
            nodes.hxx.push(self.micro.konst(f.hxx[j]));
            nodes.hxy.push(self.micro.konst(f.hxy[j]));
            nodes.hyy.push(self.micro.konst(f.hyy[j]));
        }
        nodes
    }

    /// Backward through the micro tape from `sum(entry^2) * weight` and
    /// scatter the leaf adjoints into the batched cotangent buffer.
    fn seed_from_entries(
        &mut self,
        entries: &[Node],
        weight: f64,
        p: usize,
        out_dim: usize,
        nodes: &FieldDerivs<Node>,
    ) {
        let mut seeds: SmallVec<[(Node, f64); 3]> = SmallVec::new();
        for &e in entries {
            let sq = self.micro.square(e);
            seeds.push((sq, weight));
        }
        self.micro.backward_into(&seeds, &mut self.micro_bw);
        let base = p * out_dim * LANES;
        for j in 0..out_dim {
            let s = &mut self.seeds[base + j * LANES..base + (j + 1) * LANES];
            s[0] = self.micro_bw.adjoint(nodes.val[j]).value;
            s[1] = self.micro_bw.adjoint(nodes.gx[j]).value;
            s[2] = self.micro_bw.adjoint(nodes.gy[j]).value;
            s[3] = self.micro_bw.adjoint(nodes.hxx[j]).value;
            s[4] = self.micro_bw.adjoint(nodes.hxy[j]).value;
            s[5] = self.micro_bw.adjoint(nodes.hyy[j]).value;
        }
    }
}

/// Uniform evaluation grid with the exact solution cached once per run.
pub struct L2Evaluator {
    problem_shifted: Vec<bool>,
    error_components: &'static [usize],
    points: Vec<[f64; 2]>,
    exact: Vec<f64>,
    den: f64,
    eval: PlainEval,
}

impl L2Evaluator {
    pub fn new(problem: &BenchmarkProblem, spec: &MlpSpec, grid_n: usize) -> Result<Self, TrainError> {
        if grid_n < 2 {
            return Err(TrainError::Config("evaluation grid too small".into()));
        }
        let mut points = Vec::new();
        let mut exact = Vec::new();
        let mut den = 0.0;
        for i in 0..grid_n {
            for j in 0..grid_n {
                let x = [i as f64 / (grid_n - 1) as f64, j as f64 / (grid_n - 1) as f64];
                if !problem.domain.contains(x) {
                    continue;
                }
                let e = problem.exact(x);
                for &comp in problem.error_components {
                    exact.push(e[comp]);
                    den += e[comp] * e[comp];
                }
                points.push(x);
            }
        }
        if den == 0.0 {
            return Err(TrainError::Metric("exact solution has zero norm on the grid".into()));
        }
        let problem_shifted =
            (0..problem.output_dim).map(|k| problem.shifted.contains(&k)).collect();
        Ok(Self {
            problem_shifted,
            error_components: problem.error_components,
            points,
            exact,
            den,
            eval: PlainEval::new(spec),
        })
    }

    /// Relative L2 of the reconstructed solution over the cached grid.
    pub fn eval(&mut self, params: &ParamVector, c: f64) -> f64 {
        let mut num = 0.0;
        let mut idx = 0;
        for p in 0..self.points.len() {
            let pred = self.eval.eval(params, &self.points[p]);
            for &comp in self.error_components {
                let recon = if self.problem_shifted[comp] { pred[comp] + c } else { pred[comp] };
                let d = recon - self.exact[idx];
                num += d * d;
                idx += 1;
            }
        }
        (num / self.den).sqrt()
    }
}

/// Relative L2 error of the reconstructed solution against the exact one over
/// a uniform grid on the domain bounding box (points outside the domain are
/// excluded; the NS metric spans both velocity components, never pressure).
pub fn relative_l2(
    params: &ParamVector,
    spec: &MlpSpec,
    problem: &BenchmarkProblem,
    c: f64,
    grid_n: usize,
) -> Result<f64, TrainError> {
    let mut ev = L2Evaluator::new(problem, spec, grid_n)?;
    Ok(ev.eval(params, c))
}

/// Run the full training loop for one problem/config pair.
pub fn train(problem: &BenchmarkProblem, cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    let spec = problem.default_mlp();
    let colloc = sample_collocation(problem, cfg.n_interior, cfg.n_per_edge, cfg.seed);
    train_with(problem, cfg, spec, colloc)
}

/// Training loop with an externally supplied backbone and collocation set
/// (used by controlled-comparison commands that share sets across arms).
pub fn train_with(
    problem: &BenchmarkProblem,
    cfg: &TrainConfig,
    spec: MlpSpec,
    colloc: CollocationSet,
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    let mut params = init_params(&spec, cfg.seed);
    let mut engine = ResidualEngine::new(problem.clone(), spec, colloc);
    let mut adam = AdamState::new(params.len());
    let mut offset = OffsetState::new(cfg.k_init, cfg.k_few, cfg.t_c);
    let mut l2 = L2Evaluator::new(problem, &spec, cfg.eval_grid)?;
    let n = params.len();
    let (mut g_res, mut g_bc, mut g_total) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);

    let mut records = Vec::with_capacity(cfg.t_min as usize);
    let mut stp: Option<u64> = None;
    let mut l2_at_t_min = None;
    let mut last_rel = f64::NAN;
    let mut cum_dist = 0.0;
    let mut steps_run = 0;

    for t in 1..=cfg.t_max {
        steps_run = t;
        let lambda = if cfg.mode.uses_delay() { delay_factor(t, cfg.schedule) } else { 1.0 };
        let bundle =
            engine.assemble(&params, cfg.w_res, cfg.w_bc, cfg.mode.uses_offset(), t)?;
        let c = if cfg.mode.uses_offset() {
            offset.solve(&bundle, t, lambda).map_err(|source| TrainError::Offset { step: t, source })?
        } else {
            0.0
        };
        let (loss_res, loss_bc) = aligned_means(&bundle, c);
        let loss_total = cfg.w_res * lambda * loss_res + cfg.w_bc * loss_bc;

        engine.gradients(&params, c, &mut g_res, &mut g_bc)?;
        let cos_phi = grad_cosine(&g_res, &g_bc);
        let rho = grad_norm_ratio(&g_res, &g_bc);
        for i in 0..n {
            g_total[i] = cfg.w_res * lambda * g_res[i] + cfg.w_bc * g_bc[i];
            if !g_total[i].is_finite() {
                return Err(TrainError::Blowup { step: t, detail: format!("gradient entry {i}") });
            }
        }
        cum_dist += adam.step(&mut params.data, &g_total, cfg.eta, cfg.beta1, cfg.beta2, cfg.eps_adam);

        let rel_l2 = if t % EVAL_INTERVAL == 0 || t == cfg.t_min {
            let r = l2.eval(&params, c);
            last_rel = r;
            if stp.is_none() && r < cfg.l2_stop {
                stp = Some(t);
            }
            if t == cfg.t_min {
                l2_at_t_min = Some(r);
            }
            Some(r)
        } else {
            None
        };

        records.push(StepRecord {
            step: t,
            loss_res,
            loss_bc,
            loss_total,
            lambda,
            c,
            cos_phi,
            grad_norm_ratio: rho,
            rel_l2,
            cum_param_dist: cum_dist,
        });

        if t >= cfg.t_min && stp.is_some() {
            break;
        }
    }

    let final_c = records.last().map(|r| r.c).unwrap_or(0.0);
    if !last_rel.is_finite() {
        last_rel = l2.eval(&params, final_c);
    }
    // fraction over a fixed iteration window (t_min) so the statistic is
    // comparable across arms that stop at different steps
    let pos_cos_fraction =
        positive_cos_fraction(records.iter().filter(|r| r.step <= cfg.t_min).map(|r| r.cos_phi));
    let summary = RunSummary {
        stp,
        l2_at_t_min,
        final_rel_l2: last_rel,
        pos_cos_fraction,
        success: stp.is_some(),
        final_c,
        steps_run,
    };
    Ok(TrainOutcome { log: RunLog { records, summary }, spec: engine.spec, params, c: final_c })
}

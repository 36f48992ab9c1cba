//! Flag overrides and the key=value config file format.
//!
//! File lines are `key = value` (whitespace optional, `#` comments). Keys use
//! the same names as the long flags with `-` replaced by `_`. Flags override
//! file entries, which override benchmark defaults.

use clap::Args;

use caml_core::trainer::TrainConfig;
use caml_core::DelaySchedule;

#[derive(Args, Clone, Default)]
pub struct Overrides {
    /// Learning rate
    #[arg(long)]
    pub eta: Option<f64>,
    /// PDE residual loss weight
    #[arg(long)]
    pub w_res: Option<f64>,
    /// Boundary loss weight
    #[arg(long)]
    pub w_bc: Option<f64>,
    /// Minimum iterations before early stop (also the fixed-L2 step)
    #[arg(long)]
    pub t_min: Option<u64>,
    /// Iteration budget
    #[arg(long)]
    pub t_max: Option<u64>,
    /// Early-stop threshold on relative L2
    #[arg(long)]
    pub l2_stop: Option<f64>,
    /// Delay steps before the residual loss activates
    #[arg(long)]
    pub t_d: Option<u64>,
    /// Ramp length of the residual gate
    #[arg(long)]
    pub t_r: Option<u64>,
    /// Newton steps for the offset at the first iteration (nonlinear path)
    #[arg(long)]
    pub k_init: Option<usize>,
    /// Newton steps per iteration afterwards (nonlinear path)
    #[arg(long)]
    pub k_few: Option<usize>,
    /// Step at which the nonlinear offset freezes
    #[arg(long)]
    pub t_c: Option<u64>,
    /// Interior collocation points
    #[arg(long)]
    pub n_interior: Option<usize>,
    /// Boundary collocation points per segment
    #[arg(long)]
    pub n_per_edge: Option<usize>,
    /// Evaluation grid points per axis
    #[arg(long)]
    pub eval_grid: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut TrainConfig) {
        macro_rules! set {
            ($($field:ident),*) => { $( if let Some(v) = self.$field { cfg.$field = v; } )* };
        }
        set!(eta, w_res, w_bc, t_min, t_max, l2_stop, k_init, k_few, t_c, n_interior, n_per_edge, eval_grid);
        if let Some(td) = self.t_d {
            cfg.schedule = DelaySchedule::new(td, cfg.schedule.t_r);
        }
        if let Some(tr) = self.t_r {
            cfg.schedule = DelaySchedule::new(cfg.schedule.t_d, tr);
        }
    }
}

/// Apply `key = value` lines from a config file.
pub fn apply_file(cfg: &mut TrainConfig, text: &str) -> Result<(), String> {
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key = value", lineno + 1))?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |what: &str| format!("line {}: bad {what} value '{value}'", lineno + 1);
        match key {
            "eta" => cfg.eta = value.parse().map_err(|_| bad("eta"))?,
            "w_res" => cfg.w_res = value.parse().map_err(|_| bad("w_res"))?,
            "w_bc" => cfg.w_bc = value.parse().map_err(|_| bad("w_bc"))?,
            "t_min" => cfg.t_min = value.parse().map_err(|_| bad("t_min"))?,
            "t_max" => cfg.t_max = value.parse().map_err(|_| bad("t_max"))?,
            "l2_stop" => cfg.l2_stop = value.parse().map_err(|_| bad("l2_stop"))?,
            "t_d" => cfg.schedule = DelaySchedule::new(value.parse().map_err(|_| bad("t_d"))?, cfg.schedule.t_r),
            "t_r" => cfg.schedule = DelaySchedule::new(cfg.schedule.t_d, value.parse().map_err(|_| bad("t_r"))?),
            "k_init" => cfg.k_init = value.parse().map_err(|_| bad("k_init"))?,
            "k_few" => cfg.k_few = value.parse().map_err(|_| bad("k_few"))?,
            "t_c" => cfg.t_c = value.parse().map_err(|_| bad("t_c"))?,
            "n_interior" => cfg.n_interior = value.parse().map_err(|_| bad("n_interior"))?,
            "n_per_edge" => cfg.n_per_edge = value.parse().map_err(|_| bad("n_per_edge"))?,
            "eval_grid" => cfg.eval_grid = value.parse().map_err(|_| bad("eval_grid"))?,
            other => return Err(format!("line {}: unknown key '{other}'", lineno + 1)),
        }
    }
    Ok(())
}

pub fn parse_seeds(s: &str) -> Option<Vec<u64>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse().ok())
        .collect()
}

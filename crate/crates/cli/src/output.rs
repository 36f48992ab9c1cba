//! Run-directory layout and CSV/JSON serialization.
//!
//! Every CSV starts with a timestamped comment line; payloads below it are
//! byte-reproducible for identical arguments and seeds.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use caml_core::network::save_checkpoint;
use caml_core::pde::BenchmarkProblem;
use caml_core::trainer::TrainConfig;

use crate::SeedResult;

pub struct OutDir {
    path: PathBuf,
}

impl OutDir {
    pub fn create(path: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(path)?;
        Ok(Self { path: path.to_path_buf() })
    }

    fn stamp() -> String {
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        format!("# generated_unix={now}\n")
    }

    /// Write a CSV payload behind the timestamped comment line.
    pub fn write_text(&self, name: &str, payload: &str) -> std::io::Result<()> {
        fs::write(self.path.join(name), format!("{}{payload}", Self::stamp()))
    }

    pub fn write_manifest(
        &self,
        problem: &BenchmarkProblem,
        cfg: &TrainConfig,
        seeds: &[u64],
        command: &str,
    ) -> std::io::Result<()> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            command: &'a str,
            benchmark: &'a str,
            seeds: &'a [u64],
            eta: f64,
            beta1: f64,
            beta2: f64,
            eps_adam: f64,
            w_res: f64,
            w_bc: f64,
            t_min: u64,
            t_max: u64,
            l2_stop: f64,
            t_d: u64,
            t_r: u64,
            k_init: usize,
            k_few: usize,
            t_c: u64,
            n_interior: usize,
            n_per_edge: usize,
            eval_grid: usize,
        }
        let m = Manifest {
            command,
            benchmark: problem.name,
            seeds,
            eta: cfg.eta,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps_adam: cfg.eps_adam,
            w_res: cfg.w_res,
            w_bc: cfg.w_bc,
            t_min: cfg.t_min,
            t_max: cfg.t_max,
            l2_stop: cfg.l2_stop,
            t_d: cfg.schedule.t_d,
            t_r: cfg.schedule.t_r,
            k_init: cfg.k_init,
            k_few: cfg.k_few,
            t_c: cfg.t_c,
            n_interior: cfg.n_interior,
            n_per_edge: cfg.n_per_edge,
            eval_grid: cfg.eval_grid,
        };
        fs::write(self.path.join("manifest.json"), serde_json::to_string_pretty(&m).unwrap())
    }

    /// Per-seed run logs and final checkpoints.
    pub fn write_seed_results(
        &self,
        problem: &BenchmarkProblem,
        mode: &str,
        results: &[SeedResult],
    ) -> std::io::Result<()> {
        for r in results {
            if let Ok(o) = &r.outcome {
                self.write_text(
                    &format!("run_{}_{}_seed{}.csv", problem.name, mode, r.seed),
                    &o.log.to_csv(),
                )?;
                save_checkpoint(
                    &self.path.join(format!("model_{}_{}_seed{}.ckpt", problem.name, mode, r.seed)),
                    &o.spec,
                    &o.params,
                )
                .map_err(|e| std::io::Error::other(e.to_string()))?;
            }
        }
        Ok(())
    }

    pub fn write_summary(
        &self,
        problem: &BenchmarkProblem,
        mode: &str,
        results: &[SeedResult],
    ) -> std::io::Result<()> {
        self.write_summary_named(&format!("summary_{}_{}.csv", problem.name, mode), results)
    }

    pub fn write_summary_named(&self, name: &str, results: &[SeedResult]) -> std::io::Result<()> {
        let mut s =
            String::from("seed,stp,l2_at_t_min,final_rel_l2,pos_cos_fraction,final_c,success,error\n");
        for r in results {
            match &r.outcome {
                Ok(o) => {
                    let sum = &o.log.summary;
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},{},",
                        r.seed,
                        fmt_opt(sum.stp.map(|v| v as f64)),
                        fmt_opt(sum.l2_at_t_min),
                        sum.final_rel_l2,
                        sum.pos_cos_fraction,
                        sum.final_c,
                        sum.success
                    );
                }
                Err(e) => {
                    let _ = writeln!(s, "{},,,,,,false,{}", r.seed, e.replace(',', ";"));
                }
            }
        }
        self.write_text(name, &s)
    }

    /// Mode-level mean/std rows. Following the reporting convention, the step
    /// statistics are blank unless every seed crossed the threshold.
    pub fn write_aggregate(
        &self,
        problem: &BenchmarkProblem,
        per_mode: &[(&str, &[SeedResult])],
    ) -> std::io::Result<()> {
        let mut s = String::from(
            "benchmark,mode,n_seeds,n_success,stp_median,stp_mean,stp_std,l2_tmin_mean,l2_tmin_std,pos_cos_mean\n",
        );
        for (mode, results) in per_mode {
            let st = SeedStats::collect(results);
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                problem.name,
                mode,
                results.len(),
                st.n_success,
                fmt_opt(st.stp_median),
                fmt_opt(st.stp_mean),
                fmt_opt(st.stp_std),
                fmt_opt(st.l2_mean),
                fmt_opt(st.l2_std),
                fmt_opt(st.pos_cos_mean),
            );
        }
        self.write_text("aggregate.csv", &s)
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

fn median(values: &mut Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some(values[values.len() / 2])
}

pub struct SeedStats {
    pub n_success: usize,
    pub stp_median: Option<f64>,
    pub stp_mean: Option<f64>,
    pub stp_std: Option<f64>,
    pub l2_mean: Option<f64>,
    pub l2_std: Option<f64>,
    pub pos_cos_mean: Option<f64>,
}

impl SeedStats {
    pub fn collect(results: &[SeedResult]) -> Self {
        let ok: Vec<_> = results.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
        let mut stps: Vec<f64> =
            ok.iter().filter_map(|o| o.log.summary.stp).map(|v| v as f64).collect();
        let n_success = stps.len();
        let all_crossed = n_success == results.len();
        let l2s: Vec<f64> = ok.iter().filter_map(|o| o.log.summary.l2_at_t_min).collect();
        let cos: Vec<f64> = ok.iter().map(|o| o.log.summary.pos_cos_fraction).collect();
        let (stp_mean, stp_std) = if all_crossed {
            mean_std(&stps).map(|(m, s)| (Some(m), Some(s))).unwrap_or((None, None))
        } else {
            (None, None)
        };
        let stp_median = if all_crossed { median(&mut stps) } else { None };
        let (l2_mean, l2_std) =
            mean_std(&l2s).map(|(m, s)| (Some(m), Some(s))).unwrap_or((None, None));
        let pos_cos_mean = mean_std(&cos).map(|(m, _)| m);
        Self { n_success, stp_median, stp_mean, stp_std, l2_mean, l2_std, pos_cos_mean }
    }
}

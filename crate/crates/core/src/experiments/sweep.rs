use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{decouple, eval_ideal_hpa, optimize_rectenna_only, scaled_matched_filter};
use crate::error::{Result, WptError};
use crate::optimizer::{scp_optimize, OptResult};
use crate::rectenna::ChannelMatrix;
use crate::signal::{papr, TimeGrid, WeightMatrix};

use super::config::{ExperimentConfig, Strategy};
use super::generate_channel;

/// One strategy evaluated on one (N, budget, channel) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub strategy: Strategy,
    pub n: usize,
    pub m: usize,
    pub p_tr_dbw: f64,
    pub channel: u64,
    /// `None` when the strategy failed on this cell.
    pub zdc: Option<f64>,
    /// Largest per-antenna PAPR of the radiated waveform.
    pub papr: Option<f64>,
    /// SCP iterations; 0 for strategies that do not iterate.
    pub iters: usize,
    /// Wall time, milliseconds.
    pub ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Mean `zdc` of one strategy over the channels of one (N, budget) point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellAggregate {
    pub strategy: Strategy,
    pub n: usize,
    pub p_tr_dbw: f64,
    /// Over successful records only; `None` if every record failed.
    pub mean_zdc: Option<f64>,
    pub count: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub config: ExperimentConfig,
    pub records: Vec<SweepRecord>,
    pub aggregates: Vec<CellAggregate>,
}

impl SweepOutput {
    pub fn aggregate(&self, strategy: Strategy, n: usize, p_tr_dbw: f64) -> Option<&CellAggregate> {
        self.aggregates
            .iter()
            .find(|a| a.strategy == strategy && a.n == n && a.p_tr_dbw == p_tr_dbw)
    }

    pub fn mean_zdc(&self, strategy: Strategy, n: usize, p_tr_dbw: f64) -> Option<f64> {
        self.aggregate(strategy, n, p_tr_dbw).and_then(|a| a.mean_zdc)
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn max_papr(w: &WeightMatrix<f64>, grid: &TimeGrid<f64>) -> Option<f64> {
    (0..w.num_antennas())
        .map(|m| papr(&w.column(m), grid).ok())
        .try_fold(0.0f64, |acc, p| p.map(|p| acc.max(p)))
}

struct Outcome {
    zdc: f64,
    radiated: WeightMatrix<f64>,
    iters: usize,
}

/// Runs every configured strategy on one cell, in configuration order.
///
/// Errors only for an invalid configuration; solver failures become records
/// with `zdc = None` and an error message.
pub fn run_cell(cfg: &ExperimentConfig, n: usize, p_tr_dbw: f64, channel: u64) -> Result<Vec<SweepRecord>> {
    let tones = cfg.tone_grid(n)?;
    let budgets = cfg.budgets.budgets(p_tr_dbw)?;
    let sspa = cfg.sspa.params()?;
    let rectenna = cfg.rectenna.params()?;
    let grid = cfg.solver.time_grid(&tones)?;
    let h: ChannelMatrix<f64> = generate_channel(n, cfg.tones.m, cfg.seed, channel);

    // Ideal and Decoupling share the rectenna-only solve.
    let mut rectenna_only: Option<(std::result::Result<OptResult<f64>, String>, f64)> = None;
    let mut shared = || -> (std::result::Result<OptResult<f64>, String>, f64) {
        rectenna_only
            .get_or_insert_with(|| {
                let start = Instant::now();
                let out = optimize_rectenna_only(&h, budgets.p_tr_max, &rectenna, &tones, &cfg.solver)
                    .map_err(|e| e.to_string());
                (out, elapsed_ms(start))
            })
            .clone()
    };

    let mut records = Vec::with_capacity(cfg.strategies.len());
    for &strategy in &cfg.strategies {
        let start = Instant::now();
        let (outcome, prior_ms): (std::result::Result<Outcome, String>, f64) = match strategy {
            Strategy::Opt => {
                let out = scp_optimize(&h, &budgets, &sspa, &rectenna, &tones, &cfg.solver).map(|r| Outcome {
                    zdc: r.zdc_value,
                    iters: r.scp_iterations,
                    radiated: r.weights,
                });
                (out.map_err(|e| e.to_string()), 0.0)
            }
            Strategy::Ideal => {
                let (w_ro, ms) = shared();
                let out = w_ro.and_then(|r| {
                    eval_ideal_hpa(&h, &r.weights, &rectenna)
                        .map(|zdc| Outcome {
                            zdc,
                            iters: r.scp_iterations,
                            radiated: r.weights,
                        })
                        .map_err(|e| e.to_string())
                });
                (out, ms)
            }
            Strategy::Decoupling => {
                let (w_ro, ms) = shared();
                let out = w_ro.and_then(|r| {
                    decouple(&h, &r.weights, &budgets, &sspa, &rectenna, &grid, cfg.decoupling)
                        .map(|d| Outcome {
                            zdc: d.zdc,
                            iters: r.scp_iterations,
                            radiated: d.transmitted,
                        })
                        .map_err(|e| e.to_string())
                });
                (out, ms)
            }
            Strategy::Smf => {
                let out = scaled_matched_filter(&h, budgets.p_tr_max).and_then(|w| {
                    Ok(Outcome {
                        zdc: eval_ideal_hpa(&h, &w, &rectenna)?,
                        radiated: w,
                        iters: 0,
                    })
                });
                (out.map_err(|e| e.to_string()), 0.0)
            }
        };
        // Microsecond resolution keeps the column readable.
        let ms = ((prior_ms + elapsed_ms(start)) * 1e3).round() / 1e3;
        let base = SweepRecord {
            strategy,
            n,
            m: cfg.tones.m,
            p_tr_dbw,
            channel,
            zdc: None,
            papr: None,
            iters: 0,
            ms,
            error: None,
        };
        records.push(match outcome {
            Ok(o) => SweepRecord {
                zdc: Some(o.zdc),
                papr: max_papr(&o.radiated, &grid),
                iters: o.iters,
                ..base
            },
            Err(e) => SweepRecord { error: Some(e), ..base },
        });
    }
    Ok(records)
}

/// Sweeps every (N, budget, channel) cell on the global rayon pool.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let cells: Vec<(usize, f64, u64)> = cfg
        .tones
        .n
        .iter()
        .flat_map(|&n| {
            cfg.budgets.p_tr_max_dbw.iter().flat_map(move |&p| {
                (0..cfg.num_channels as u64).map(move |c| (n, p, c))
            })
        })
        .collect();
    let per_cell = cells
        .par_iter()
        .map(|&(n, p, c)| run_cell(cfg, n, p, c))
        .collect::<Result<Vec<_>>>()?;
    let records: Vec<SweepRecord> = per_cell.into_iter().flatten().collect();
    let aggregates = aggregate(cfg, &records);
    Ok(SweepOutput {
        config: cfg.clone(),
        records,
        aggregates,
    })
}

/// [`run_sweep`] on a dedicated pool of `jobs` threads.
pub fn run_sweep_with_jobs(cfg: &ExperimentConfig, jobs: usize) -> Result<SweepOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| WptError::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_sweep(cfg))
}

fn aggregate(cfg: &ExperimentConfig, records: &[SweepRecord]) -> Vec<CellAggregate> {
    let mut out = Vec::new();
    for &n in &cfg.tones.n {
        for &p in &cfg.budgets.p_tr_max_dbw {
            for &strategy in &cfg.strategies {
                let cell = records
                    .iter()
                    .filter(|r| r.strategy == strategy && r.n == n && r.p_tr_dbw == p);
                let (mut sum, mut count, mut failures) = (0.0, 0, 0);
                for r in cell {
                    match r.zdc {
                        Some(z) => {
                            sum += z;
                            count += 1;
                        }
                        None => failures += 1,
                    }
                }
                out.push(CellAggregate {
                    strategy,
                    n,
                    p_tr_dbw: p,
                    mean_zdc: (count > 0).then(|| sum / count as f64),
                    count,
                    failures,
                });
            }
        }
    }
    out
}

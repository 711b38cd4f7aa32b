//! Batches of cooling runs over a grid of domain sizes.
//!
//! Trial `i` on side `k` runs its chain with seed
//! `trial_seed(splitmix64(trial_seed(seed, k)), i)`; a uniform initial state for that trial
//! is drawn with `splitmix64` of the chain seed. Trials may run on any number
//! of threads; results are ordered by (side, trial).

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use super::stats::{mean_stderr, StatsError};
use crate::cooling::{run, CoolingError, RunOptions, StopReason};
use crate::domain::{Domain, Shape};
use crate::rng::{splitmix64, trial_seed};
use crate::sampling::{initial_state, InitMode, SamplerConfig, SamplingError};
use crate::tiling::Tiling;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("sides must be positive and ascending")]
    BadSides,
    #[error("at least one trial is needed")]
    NoTrials,
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Cooling(#[from] CoolingError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ScaleMode {
    Worst,
    Average,
}

impl ScaleMode {
    pub fn name(self) -> &'static str {
        match self {
            ScaleMode::Worst => "worst",
            ScaleMode::Average => "average",
        }
    }
}

impl std::str::FromStr for ScaleMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "worst" => Ok(ScaleMode::Worst),
            "average" => Ok(ScaleMode::Average),
            _ => Err(format!("unknown mode `{s}` (worst|average)")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub shape: Shape,
    pub sides: Vec<u32>,
    pub trials: u32,
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
    /// Record wall time per trial; otherwise `wall_ms` is 0 so that output is reproducible.
    pub wall_clock: bool,
    /// Approximate uniform states by a forward heat bath of this many steps.
    pub burn_in: Option<u64>,
    /// 0 uses the default of 100·n².
    pub step_limit: u64,
}

impl ExperimentConfig {
    pub fn new(sides: Vec<u32>, trials: u32, seed: u64) -> Self {
        ExperimentConfig {
            shape: Shape::Hexagon,
            sides,
            trials,
            seed,
            jobs: 0,
            wall_clock: false,
            burn_in: None,
            step_limit: 0,
        }
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        if self.sides.is_empty()
            || self.sides[0] == 0
            || self.sides.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(ExperimentError::BadSides);
        }
        if self.trials == 0 {
            return Err(ExperimentError::NoTrials);
        }
        Ok(())
    }
}

/// One scheduled trial.
#[derive(Clone, Debug)]
pub struct TrialSpec {
    pub side: u32,
    pub n: usize,
    pub trial: u32,
    pub seed: u64,
    pub domain: Arc<Domain>,
}

pub fn chain_seed(seed: u64, side: u32, trial: u32) -> u64 {
    trial_seed(splitmix64(trial_seed(seed, side as u64)), trial as u64)
}

pub fn plan(cfg: &ExperimentConfig) -> Result<Vec<TrialSpec>, ExperimentError> {
    cfg.validate()?;
    let mut out = Vec::new();
    for &side in &cfg.sides {
        let domain = Arc::new(cfg.shape.build(side));
        for trial in 0..cfg.trials {
            out.push(TrialSpec {
                side,
                n: domain.num_tiles(),
                trial,
                seed: chain_seed(cfg.seed, side, trial),
                domain: domain.clone(),
            });
        }
    }
    Ok(out)
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T, ExperimentError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;
    Ok(pool.install(f))
}

/// Initial state of every planned trial.
pub fn initial_states(
    cfg: &ExperimentConfig,
    specs: &[TrialSpec],
    mode: ScaleMode,
) -> Result<Vec<Tiling>, ExperimentError> {
    with_pool(cfg.jobs, || {
        specs
            .par_iter()
            .map(|s| {
                let init = match mode {
                    ScaleMode::Worst => InitMode::Max,
                    ScaleMode::Average => InitMode::Uniform,
                };
                let sc = SamplerConfig {
                    burn_in: cfg.burn_in,
                    ..SamplerConfig::new(init, splitmix64(s.seed))
                };
                initial_state(&s.domain, &sc)
            })
            .collect::<Result<Vec<_>, _>>()
    })?
    .map_err(Into::into)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialRecord {
    pub mode: ScaleMode,
    pub side: u32,
    pub n: usize,
    pub trial: u32,
    pub seed: u64,
    pub t: u64,
    pub final_energy: u32,
    pub initial_volume: u32,
    pub stop: StopReason,
    pub wall_ms: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingPoint {
    pub mode: ScaleMode,
    pub side: u32,
    pub n: usize,
    pub trials: u32,
    pub mean_t: f64,
    pub stderr_t: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingResult {
    pub trials: Vec<TrialRecord>,
    pub points: Vec<ScalingPoint>,
}

/// Cools every planned trial from the given initial states.
pub fn run_trials(
    cfg: &ExperimentConfig,
    specs: &[TrialSpec],
    initials: &[Tiling],
    mode: ScaleMode,
) -> Result<Vec<TrialRecord>, ExperimentError> {
    with_pool(cfg.jobs, || {
        specs
            .par_iter()
            .zip(initials.par_iter())
            .map(|(s, init)| {
                let start = Instant::now();
                let mut opts = RunOptions::for_tiles(s.n);
                opts.record = false;
                if cfg.step_limit > 0 {
                    opts.step_limit = cfg.step_limit;
                }
                let tr = run(init.clone(), s.seed, &opts, |_, _| {})?;
                let wall_ms = if cfg.wall_clock {
                    start.elapsed().as_millis() as u64
                } else {
                    0
                };
                Ok(TrialRecord {
                    mode,
                    side: s.side,
                    n: s.n,
                    trial: s.trial,
                    seed: s.seed,
                    t: tr.t,
                    final_energy: tr.final_energy,
                    initial_volume: tr.initial_volume,
                    stop: tr.stop,
                    wall_ms,
                })
            })
            .collect::<Result<Vec<_>, CoolingError>>()
    })?
    .map_err(Into::into)
}

pub fn summarize(records: &[TrialRecord]) -> Vec<ScalingPoint> {
    let mut out: Vec<ScalingPoint> = Vec::new();
    let mut i = 0;
    while i < records.len() {
        let side = records[i].side;
        let group: Vec<&TrialRecord> = records[i..].iter().take_while(|r| r.side == side).collect();
        let ts: Vec<f64> = group.iter().map(|r| r.t as f64).collect();
        let (mean_t, stderr_t) = mean_stderr(&ts);
        out.push(ScalingPoint {
            mode: records[i].mode,
            side,
            n: records[i].n,
            trials: group.len() as u32,
            mean_t,
            stderr_t,
        });
        i += group.len();
    }
    out
}

pub fn scaling_experiment(
    cfg: &ExperimentConfig,
    mode: ScaleMode,
) -> Result<ScalingResult, ExperimentError> {
    let specs = plan(cfg)?;
    let initials = initial_states(cfg, &specs, mode)?;
    let trials = run_trials(cfg, &specs, &initials, mode)?;
    let points = summarize(&trials);
    Ok(ScalingResult { trials, points })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservableRecord {
    pub side: u32,
    pub n: usize,
    pub trial: u32,
    pub volume: u32,
    pub energy: u32,
    /// Largest |level| of any tile.
    pub levels: u32,
}

pub fn observe(specs: &[TrialSpec], states: &[Tiling]) -> Vec<ObservableRecord> {
    specs
        .iter()
        .zip(states)
        .map(|(s, t)| ObservableRecord {
            side: s.side,
            n: s.n,
            trial: s.trial,
            volume: t.volume(),
            energy: t.energy(),
            levels: t
                .tile_levels(t.ground())
                .iter()
                .map(|l| l.unsigned_abs())
                .max()
                .unwrap_or(0),
        })
        .collect()
}

pub fn observables_experiment(
    cfg: &ExperimentConfig,
) -> Result<Vec<ObservableRecord>, ExperimentError> {
    let specs = plan(cfg)?;
    let states = initial_states(cfg, &specs, ScaleMode::Average)?;
    Ok(observe(&specs, &states))
}

//! Benchmark harness: builds scenarios, times the step loop of each backend
//! and reports a CSV row per cell plus a size-by-probability table.
//!
//! Only the step loop is timed. Network generation, engine construction
//! (weight matrix, registers) and file I/O are excluded.

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::abm::{AbmWorld, BehaviorRegistry};
use crate::io::BenchRow;
use crate::lowering::lower_delays;
use crate::mat::MatState;
use crate::model::{NeuronId, SimulationConfig, SpikeRaster, StimulusSchedule};
use crate::netgen::{build_scenario, BenchScenario};
use crate::{oracle, Error, NetworkDef, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BackendKind {
    Mat,
    Abm,
    Oracle,
}

impl BackendKind {
    pub fn name(self) -> &'static str {
        match self {
            BackendKind::Mat => "mat",
            BackendKind::Abm => "abm",
            BackendKind::Oracle => "oracle",
        }
    }

    /// Runs a full simulation. The matrix backend lowers delays itself and
    /// reports only the original neurons.
    pub fn run(
        self,
        net: &NetworkDef,
        cfg: &SimulationConfig,
        stim: &StimulusSchedule,
        registry: &BehaviorRegistry,
    ) -> Result<SpikeRaster> {
        match self {
            BackendKind::Mat => crate::mat::run_lowered(net, cfg, stim).map(|(r, _)| r),
            BackendKind::Abm => crate::abm::run(net, cfg, stim, registry),
            BackendKind::Oracle => oracle::run(net, cfg, stim),
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "mat" => Ok(BackendKind::Mat),
            "abm" => Ok(BackendKind::Abm),
            "oracle" => Ok(BackendKind::Oracle),
            other => Err(Error::InvalidConfig(format!(
                "unknown backend {other:?} (expected mat, abm or oracle)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellOutcome {
    Completed {
        wall_time: Duration,
        spike_count: u64,
    },
    TimedOut,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchCell {
    pub backend: BackendKind,
    pub scenario: BenchScenario,
    pub outcome: CellOutcome,
}

impl BenchCell {
    pub fn to_row(&self) -> BenchRow {
        let (wall, spikes) = match self.outcome {
            // A loop faster than the clock resolution still reports a positive time.
            CellOutcome::Completed {
                wall_time,
                spike_count,
            } => (Some(wall_time.as_secs_f64().max(1e-9)), Some(spike_count)),
            CellOutcome::TimedOut => (None, None),
        };
        BenchRow {
            backend: self.backend.name().to_string(),
            neurons: self.scenario.neuron_count,
            connection_probability: self.scenario.connection_probability,
            steps: self.scenario.steps,
            wall_time_seconds: wall,
            spike_count: spikes,
            seed: self.scenario.seed,
        }
    }
}

/// A steppable engine; spike counts cover original neurons only.
enum Engine {
    Mat { state: MatState, original: usize },
    Abm(AbmWorld),
    Oracle(oracle_stepper::OracleStepper),
}

mod oracle_stepper {
    use super::*;

    /// The oracle has no incremental interface, so it runs in one piece on
    /// the first step and replays its raster afterwards.
    pub struct OracleStepper {
        pub net: NetworkDef,
        pub cfg: SimulationConfig,
        pub stim: StimulusSchedule,
        pub per_step: Option<Vec<u64>>,
        pub step: usize,
    }

    impl OracleStepper {
        pub fn step(&mut self) -> Result<u64> {
            if self.per_step.is_none() {
                let raster = oracle::run(&self.net, &self.cfg, &self.stim)?;
                let mut counts = vec![0u64; self.cfg.steps as usize];
                for e in raster.events() {
                    counts[e.step as usize] += 1;
                }
                self.per_step = Some(counts);
            }
            let count = self.per_step.as_ref().map_or(0, |c| c[self.step]);
            self.step += 1;
            Ok(count)
        }
    }
}

impl Engine {
    fn build(
        backend: BackendKind,
        net: NetworkDef,
        cfg: &SimulationConfig,
        stim: &StimulusSchedule,
        registry: &BehaviorRegistry,
    ) -> Result<Self> {
        match backend {
            BackendKind::Mat => {
                let original = net.neuron_count();
                let state = if net.needs_lowering() {
                    MatState::new(&lower_delays(&net)?.net, cfg)?
                } else {
                    MatState::new(&net, cfg)?
                };
                Ok(Engine::Mat { state, original })
            }
            BackendKind::Abm => Ok(Engine::Abm(AbmWorld::new(&net, cfg.seed, registry)?)),
            BackendKind::Oracle => Ok(Engine::Oracle(oracle_stepper::OracleStepper {
                net,
                cfg: cfg.clone(),
                stim: stim.clone(),
                per_step: None,
                step: 0,
            })),
        }
    }

    fn step(&mut self, stimulus: &[(NeuronId, f64)]) -> Result<u64> {
        Ok(match self {
            Engine::Mat { state, original } => {
                let original = *original as NeuronId;
                let spikes = state.step_sparse(stimulus);
                spikes.iter().take_while(|&&id| id < original).count() as u64
            }
            Engine::Abm(world) => world.step(stimulus).len() as u64,
            Engine::Oracle(o) => o.step()?,
        })
    }
}

/// Times `steps` steps of `backend` on an already-built network.
pub fn time_run(
    backend: BackendKind,
    net: NetworkDef,
    cfg: &SimulationConfig,
    stim: &StimulusSchedule,
    registry: &BehaviorRegistry,
    timeout: Option<Duration>,
) -> Result<CellOutcome> {
    if cfg.stdp.is_some() {
        return Err(Error::InvalidConfig(
            "benchmarks run without plasticity".into(),
        ));
    }
    crate::model::check_inputs(&net, cfg, stim)?;
    let buckets = stim.by_step(cfg.steps);
    let mut engine = Engine::build(backend, net, cfg, stim, registry)?;

    let start = Instant::now();
    let deadline = timeout.map(|t| start + t);
    let mut spike_count = 0u64;
    for bucket in &buckets {
        spike_count += engine.step(bucket)?;
        if deadline.is_some_and(|d| Instant::now() > d) {
            return Ok(CellOutcome::TimedOut);
        }
    }
    Ok(CellOutcome::Completed {
        wall_time: start.elapsed(),
        spike_count,
    })
}

/// Builds the scenario and times one backend on it.
pub fn run_cell(
    backend: BackendKind,
    scenario: &BenchScenario,
    timeout: Option<Duration>,
) -> Result<BenchCell> {
    let sc = build_scenario(scenario)?;
    let outcome = time_run(
        backend,
        sc.net,
        &sc.config,
        &sc.stimulus,
        &BehaviorRegistry::new(),
        timeout,
    )?;
    Ok(BenchCell {
        backend,
        scenario: scenario.clone(),
        outcome,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchPlan {
    pub sizes: Vec<usize>,
    pub probabilities: Vec<f64>,
    pub steps: u32,
    pub backends: Vec<BackendKind>,
    pub seed: u64,
    pub amplitude: f64,
    pub timeout: Option<Duration>,
}

impl BenchPlan {
    /// Cells in output order: backend-major, then size, then probability.
    pub fn scenarios(&self) -> Vec<(BackendKind, BenchScenario)> {
        let mut cells = Vec::new();
        for &backend in &self.backends {
            for &n in &self.sizes {
                for &p in &self.probabilities {
                    let mut s = BenchScenario::new(n, p, self.seed);
                    s.steps = self.steps;
                    s.amplitude = self.amplitude;
                    cells.push((backend, s));
                }
            }
        }
        cells
    }

    /// Runs every cell sequentially, calling `progress` after each one.
    pub fn run(&self, mut progress: impl FnMut(&BenchCell)) -> Result<Vec<BenchCell>> {
        let mut cells = Vec::new();
        for (backend, scenario) in self.scenarios() {
            let cell = run_cell(backend, &scenario, self.timeout)?;
            progress(&cell);
            cells.push(cell);
        }
        Ok(cells)
    }

    /// Runs cells concurrently. Timings of concurrent cells interfere.
    pub fn run_parallel(&self) -> Result<Vec<BenchCell>> {
        use rayon::prelude::*;
        self.scenarios()
            .par_iter()
            .map(|(backend, scenario)| run_cell(*backend, scenario, self.timeout))
            .collect()
    }
}

/// Wall times as a matrix: one row per backend, one column per
/// (size, probability), timeouts shown as `> limit`.
pub fn format_table(cells: &[BenchCell], timeout: Option<Duration>) -> String {
    let mut columns: Vec<(usize, f64)> = Vec::new();
    let mut backends: Vec<BackendKind> = Vec::new();
    for c in cells {
        let key = (c.scenario.neuron_count, c.scenario.connection_probability);
        if !columns.contains(&key) {
            columns.push(key);
        }
        if !backends.contains(&c.backend) {
            backends.push(c.backend);
        }
    }

    let width = 11;
    let mut out = String::new();
    let _ = write!(out, "{:<8}", "neurons");
    for (n, _) in &columns {
        let _ = write!(out, "{n:>width$}");
    }
    out.push('\n');
    let _ = write!(out, "{:<8}", "p");
    for (_, p) in &columns {
        let _ = write!(out, "{:>width$}", format!("{p:.2}"));
    }
    out.push('\n');
    for b in backends {
        let _ = write!(out, "{:<8}", b.name());
        for &(n, p) in &columns {
            let cell = cells.iter().find(|c| {
                c.backend == b
                    && c.scenario.neuron_count == n
                    && c.scenario.connection_probability == p
            });
            let text = match cell.map(|c| c.outcome) {
                Some(CellOutcome::Completed { wall_time, .. }) => {
                    format!("{:.4}", wall_time.as_secs_f64())
                }
                Some(CellOutcome::TimedOut) => match timeout {
                    Some(t) => format!("> {}s", t.as_secs()),
                    None => "timeout".to_string(),
                },
                None => "-".to_string(),
            };
            let _ = write!(out, "{text:>width$}");
        }
        out.push('\n');
    }
    out
}

//! `spikeforge` command-line driver.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use spikeforge_core::abm::BehaviorRegistry;
use spikeforge_core::bench::{format_table, BackendKind, BenchCell, BenchPlan, CellOutcome};
use spikeforge_core::io::{self, BenchRow};
use spikeforge_core::lowering::lower_delays;
use spikeforge_core::netgen::{self, BenchScenario, DEFAULT_AMPLITUDE};
use spikeforge_core::{
    first_divergence, NetworkDef, SimulationConfig, SpikeRaster, StdpConfig, StimulusSchedule,
};

#[derive(Parser, Debug)]
#[command(
    name = "spikeforge",
    version,
    about = "Discrete-time spiking neural network simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a network on one backend and write its spike raster.
    Run(RunArgs),
    /// Generate a random benchmark network and its stimulus schedule.
    Gen(GenArgs),
    /// Replace synaptic and axonal delays with relay-neuron chains.
    Lower(LowerArgs),
    /// Run several backends on the same input and report the first divergence.
    Compare(CompareArgs),
    /// Time backends over a grid of random networks.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct SimInputs {
    /// Network file (JSON).
    #[arg(long)]
    network: PathBuf,
    #[arg(long, default_value_t = netgen::DEFAULT_STEPS)]
    steps: u32,
    /// Stimulus file (CSV: step,neuron_id,amplitude). No external input if omitted.
    #[arg(long)]
    stimulus: Option<PathBuf>,
    #[arg(long, env = "SPIKEFORGE_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    inputs: SimInputs,
    #[arg(long, default_value = "mat")]
    backend: BackendKind,
    /// Raster output (CSV: step,neuron_id).
    #[arg(long)]
    out: PathBuf,
    /// Plasticity rule (JSON); matrix backend only.
    #[arg(long)]
    stdp: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    neurons: usize,
    #[arg(long)]
    prob: f64,
    #[arg(long, env = "SPIKEFORGE_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = netgen::DEFAULT_STEPS)]
    steps: u32,
    #[arg(long, default_value_t = DEFAULT_AMPLITUDE)]
    amplitude: f64,
    #[arg(long)]
    network_out: PathBuf,
    #[arg(long)]
    stimulus_out: PathBuf,
}

#[derive(Args, Debug)]
struct LowerArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    inputs: SimInputs,
    #[arg(long, value_delimiter = ',', default_value = "mat,abm,oracle")]
    backends: Vec<BackendKind>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75,1.0")]
    probs: Vec<f64>,
    #[arg(long, default_value_t = netgen::DEFAULT_STEPS)]
    steps: u32,
    #[arg(long, value_delimiter = ',', default_value = "mat,abm")]
    backends: Vec<BackendKind>,
    #[arg(long, env = "SPIKEFORGE_SEED", default_value_t = 0)]
    seed: u64,
    /// External input amplitude; defaults to threshold + 1.
    #[arg(long, default_value_t = DEFAULT_AMPLITUDE)]
    amplitude: f64,
    /// Result file (CSV).
    #[arg(long)]
    out: PathBuf,
    /// Per-cell limit in seconds; cells over it are recorded as "timeout".
    #[arg(long)]
    timeout: Option<u64>,
    /// Run cells concurrently (timings interfere).
    #[arg(long)]
    parallel: bool,
}

fn read_network(path: &Path) -> Result<NetworkDef> {
    let bytes = fs::read(path).with_context(|| format!("reading network {}", path.display()))?;
    io::parse_network(&bytes).with_context(|| format!("parsing network {}", path.display()))
}

/// Entries at or past `steps` are dropped so a schedule generated for a long
/// run can drive a shorter one.
fn read_stimulus(path: Option<&Path>, steps: u32) -> Result<StimulusSchedule> {
    let Some(path) = path else {
        return Ok(StimulusSchedule::new());
    };
    let file = File::open(path).with_context(|| format!("reading stimulus {}", path.display()))?;
    let mut stim =
        io::parse_stimulus(file).with_context(|| format!("parsing stimulus {}", path.display()))?;
    let before = stim.len();
    stim.entries.retain(|e| e.step < steps);
    if stim.len() < before {
        eprintln!(
            "notice: ignoring {} stimulus entries at or after step {steps}",
            before - stim.len()
        );
    }
    Ok(stim)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn simulate(
    backend: BackendKind,
    net: &NetworkDef,
    cfg: &SimulationConfig,
    stim: &StimulusSchedule,
) -> Result<SpikeRaster> {
    if backend == BackendKind::Mat && net.needs_lowering() {
        eprintln!(
            "notice: lowering delays for the mat backend ({} relay neurons); reporting original neurons only",
            spikeforge_core::lowering::proxy_count(net)
        );
    }
    let raster = backend
        .run(net, cfg, stim, &BehaviorRegistry::with_builtins())
        .with_context(|| format!("{backend} backend"))?;
    Ok(raster)
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let net = read_network(&args.inputs.network)?;
    let stim = read_stimulus(args.inputs.stimulus.as_deref(), args.inputs.steps)?;
    let mut cfg = SimulationConfig::new(args.inputs.steps).with_seed(args.inputs.seed);
    if let Some(path) = &args.stdp {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let rule: StdpConfig = serde_json::from_slice(&bytes)
            .with_context(|| format!("parsing stdp config {}", path.display()))?;
        cfg = cfg.with_stdp(rule);
    }

    let start = Instant::now();
    let raster = simulate(args.backend, &net, &cfg, &stim)?;
    let elapsed = start.elapsed();

    let mut out = create(&args.out)?;
    io::write_raster(&raster, &mut out)?;
    out.flush()?;
    println!(
        "backend={} neurons={} steps={} spikes={} wall_time_seconds={:.6}",
        args.backend,
        net.neuron_count(),
        cfg.steps,
        raster.len(),
        elapsed.as_secs_f64()
    );
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let scenario = BenchScenario {
        steps: args.steps,
        amplitude: args.amplitude,
        ..BenchScenario::new(args.neurons, args.prob, args.seed)
    };
    let sc = netgen::build_scenario(&scenario)?;
    let mut out = create(&args.network_out)?;
    io::write_network(&sc.net, &mut out)?;
    out.flush()?;
    let mut out = create(&args.stimulus_out)?;
    io::write_stimulus(&sc.stimulus, &mut out)?;
    out.flush()?;
    println!(
        "neurons={} synapses={} inputs={:?} stimulus_entries={}",
        sc.net.neuron_count(),
        sc.net.synapses.len(),
        sc.inputs,
        sc.stimulus.len()
    );
    Ok(())
}

fn cmd_lower(args: LowerArgs) -> Result<()> {
    let net = read_network(&args.network)?;
    let lowered = lower_delays(&net)?;
    let mut out = create(&args.out)?;
    io::write_network(&lowered.net, &mut out)?;
    out.flush()?;
    println!(
        "original_neurons={} proxies={} neurons={} synapses={}",
        lowered.original_count,
        lowered.proxy_map.len(),
        lowered.net.neuron_count(),
        lowered.net.synapses.len()
    );
    Ok(())
}

/// Returns whether all backends agreed.
fn cmd_compare(args: CompareArgs) -> Result<bool> {
    if args.backends.len() < 2 {
        bail!("compare needs at least two backends");
    }
    let net = read_network(&args.inputs.network)?;
    let stim = read_stimulus(args.inputs.stimulus.as_deref(), args.inputs.steps)?;
    let cfg = SimulationConfig::new(args.inputs.steps).with_seed(args.inputs.seed);

    let mut runs = Vec::new();
    for &backend in &args.backends {
        runs.push((backend, simulate(backend, &net, &cfg, &stim)?));
    }
    let (base_backend, base) = &runs[0];
    for (backend, raster) in &runs[1..] {
        if let Some(d) = first_divergence(base, raster, None) {
            let (has, lacks) = if d.in_first {
                (base_backend, backend)
            } else {
                (backend, base_backend)
            };
            println!(
                "divergence: step {} neuron {} spikes in {has} but not in {lacks}",
                d.event.step, d.event.neuron
            );
            return Ok(false);
        }
    }
    println!("identical ({} events)", base.len());
    Ok(true)
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let plan = BenchPlan {
        sizes: args.sizes,
        probabilities: args.probs,
        steps: args.steps,
        backends: args.backends,
        seed: args.seed,
        amplitude: args.amplitude,
        timeout: args.timeout.map(Duration::from_secs),
    };
    for (_, s) in plan.scenarios() {
        if s.neuron_count < netgen::DEFAULT_INPUT_COUNT
            || !(0.0..=1.0).contains(&s.connection_probability)
        {
            bail!(
                "invalid cell: {} neurons at probability {}",
                s.neuron_count,
                s.connection_probability
            );
        }
    }

    let cells: Vec<BenchCell> = if args.parallel {
        eprintln!(
            "warning: --parallel runs cells concurrently; wall times interfere with each other"
        );
        plan.run_parallel()?
    } else {
        plan.run(|cell| {
            let row = cell.to_row();
            let time = match cell.outcome {
                CellOutcome::Completed { wall_time, .. } => {
                    format!("{:.3}s", wall_time.as_secs_f64())
                }
                CellOutcome::TimedOut => "timeout".to_string(),
            };
            eprintln!(
                "{} n={} p={} -> {time}",
                row.backend, row.neurons, row.connection_probability
            );
        })?
    };

    let rows: Vec<BenchRow> = cells.iter().map(BenchCell::to_row).collect();
    let mut out = create(&args.out)?;
    io::write_bench_results(&rows, &mut out)?;
    out.flush()?;
    println!("{}", format_table(&cells, plan.timeout));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Gen(args) => cmd_gen(args),
        Command::Lower(args) => cmd_lower(args),
        Command::Compare(args) => match cmd_compare(args) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::FAILURE,
            Err(e) => Err(e),
        },
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

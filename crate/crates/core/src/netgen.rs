//! Random networks and benchmark scenarios.
//!
//! Each random component (edges, input selection) draws from its own ChaCha
//! stream keyed by the scenario seed, so adding a component never shifts the
//! draws of another.

use rand::distributions::{Bernoulli, Distribution};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{
    NetworkDef, NeuronId, NeuronParams, SimulationConfig, StimulusSchedule, SynapseDef,
};
use crate::{Error, Result};

const EDGE_STREAM: u64 = 1;
const INPUT_STREAM: u64 = 2;

/// Network sizes of the reference benchmark matrix.
pub const STANDARD_SIZES: [usize; 3] = [100, 1000, 10_000];
/// Connection probabilities of the reference benchmark matrix.
pub const STANDARD_PROBABILITIES: [f64; 4] = [0.25, 0.5, 0.75, 1.0];
pub const DEFAULT_STEPS: u32 = 1000;
pub const DEFAULT_INPUT_COUNT: usize = 3;
pub const DEFAULT_INPUT_PERIOD: u32 = 10;
/// Neuron threshold (1) plus one, so a single kick fires an isolated input.
pub const DEFAULT_AMPLITUDE: f64 = 2.0;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Directed G(n, p) without self-loops. Every ordered pair `(i, j)`, `i != j`,
/// gets a synapse independently with probability `p`. All neurons use
/// threshold 1, reset 0, no leak, no refractory period; all synapses have
/// weight 1 and delay 1. Synapses come out sorted by `(pre, post)`.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<NetworkDef> {
    if n == 0 {
        return Err(Error::InvalidScenario("need at least one neuron".into()));
    }
    let coin = Bernoulli::new(p).map_err(|_| {
        Error::InvalidScenario(format!("connection probability {p} outside [0, 1]"))
    })?;

    let mut net = NetworkDef::uniform(n, NeuronParams::default());
    let mut rng = stream(seed, EDGE_STREAM);
    let expected = (p * (n * (n - 1)) as f64) as usize;
    net.synapses.reserve(expected + expected / 16);
    for i in 0..n {
        for j in 0..n {
            if i != j && coin.sample(&mut rng) {
                net.synapses
                    .push(SynapseDef::new(i as NeuronId, j as NeuronId, 1.0, 1));
            }
        }
    }
    net.metadata
        .insert("generator".into(), "erdos_renyi_directed".into());
    net.metadata.insert("neurons".into(), n.to_string());
    net.metadata
        .insert("connection_probability".into(), p.to_string());
    net.metadata.insert("seed".into(), seed.to_string());
    Ok(net)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchScenario {
    pub neuron_count: usize,
    pub connection_probability: f64,
    pub steps: u32,
    pub input_neuron_count: usize,
    pub input_period: u32,
    pub amplitude: f64,
    pub seed: u64,
}

impl BenchScenario {
    /// The standard protocol: 1000 steps, 3 inputs kicked every 10 steps.
    pub fn new(neuron_count: usize, connection_probability: f64, seed: u64) -> Self {
        BenchScenario {
            neuron_count,
            connection_probability,
            steps: DEFAULT_STEPS,
            input_neuron_count: DEFAULT_INPUT_COUNT,
            input_period: DEFAULT_INPUT_PERIOD,
            amplitude: DEFAULT_AMPLITUDE,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub net: NetworkDef,
    pub config: SimulationConfig,
    pub stimulus: StimulusSchedule,
    /// Ascending ids of the stimulated neurons.
    pub inputs: Vec<NeuronId>,
}

/// Seed-chosen distinct input neurons, ascending.
pub fn choose_inputs(neuron_count: usize, count: usize, seed: u64) -> Result<Vec<NeuronId>> {
    if count > neuron_count {
        return Err(Error::InvalidScenario(format!(
            "{count} input neurons requested from a network of {neuron_count}"
        )));
    }
    let mut rng = stream(seed, INPUT_STREAM);
    let mut inputs: Vec<NeuronId> = index::sample(&mut rng, neuron_count, count)
        .into_iter()
        .map(|i| i as NeuronId)
        .collect();
    inputs.sort_unstable();
    Ok(inputs)
}

/// Every input kicked with `amplitude` at steps `0, period, 2 * period, ...`.
pub fn periodic_stimulus(
    inputs: &[NeuronId],
    steps: u32,
    period: u32,
    amplitude: f64,
) -> StimulusSchedule {
    let mut stim = StimulusSchedule::new();
    for t in (0..steps).step_by(period.max(1) as usize) {
        for &neuron in inputs {
            stim.push(t, neuron, amplitude);
        }
    }
    stim
}

pub fn build_scenario(s: &BenchScenario) -> Result<Scenario> {
    if s.neuron_count < s.input_neuron_count || s.neuron_count < DEFAULT_INPUT_COUNT {
        return Err(Error::InvalidScenario(format!(
            "{} neurons cannot host {} inputs",
            s.neuron_count,
            s.input_neuron_count.max(DEFAULT_INPUT_COUNT)
        )));
    }
    if s.steps == 0 || s.input_period == 0 {
        return Err(Error::InvalidScenario(
            "steps and input period must be positive".into(),
        ));
    }
    let net = erdos_renyi(s.neuron_count, s.connection_probability, s.seed)?;
    let inputs = choose_inputs(s.neuron_count, s.input_neuron_count, s.seed)?;
    let stimulus = periodic_stimulus(&inputs, s.steps, s.input_period, s.amplitude);
    Ok(Scenario {
        net,
        config: SimulationConfig::new(s.steps).with_seed(s.seed),
        stimulus,
        inputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_graph_has_all_ordered_pairs() {
        let net = erdos_renyi(100, 1.0, 3).unwrap();
        assert_eq!(net.synapses.len(), 9900);
        assert!(net.synapses.iter().all(|s| s.pre != s.post));
        assert!(net.validate().is_empty());
    }

    #[test]
    fn empty_graph() {
        assert!(erdos_renyi(50, 0.0, 3).unwrap().synapses.is_empty());
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(erdos_renyi(0, 0.5, 0).is_err());
        assert!(erdos_renyi(10, 1.5, 0).is_err());
        assert!(erdos_renyi(10, -0.1, 0).is_err());
    }

    #[test]
    fn protocol_parameters() {
        let net = erdos_renyi(30, 0.5, 11).unwrap();
        for n in &net.neurons {
            assert_eq!(
                (n.threshold, n.reset, n.refractory_period, n.axonal_delay),
                (1.0, 0.0, 0, 0)
            );
        }
        for s in &net.synapses {
            assert_eq!((s.weight, s.delay), (1.0, 1));
        }
    }

    #[test]
    fn quarter_density_is_binomial() {
        let count = erdos_renyi(100, 0.25, 42).unwrap().synapses.len() as f64;
        let sigma = (9900.0f64 * 0.25 * 0.75).sqrt();
        assert!((count - 2475.0).abs() < 4.0 * sigma, "{count}");
    }

    #[test]
    fn scenario_stimulus_layout() {
        let sc = build_scenario(&BenchScenario::new(100, 0.25, 5)).unwrap();
        assert_eq!(sc.stimulus.len(), 300);
        assert_eq!(sc.inputs.len(), 3);
        assert!(sc.inputs.windows(2).all(|w| w[0] < w[1]));
        let steps: Vec<u32> = sc
            .stimulus
            .entries
            .iter()
            .step_by(3)
            .map(|e| e.step)
            .collect();
        assert_eq!(steps, (0..1000).step_by(10).collect::<Vec<_>>());
        assert!(sc.stimulus.entries.iter().all(|e| e.amplitude == 2.0));
        assert_eq!(sc.config.steps, 1000);
    }

    #[test]
    fn scenario_is_a_function_of_the_seed() {
        let a = build_scenario(&BenchScenario::new(60, 0.5, 9)).unwrap();
        let b = build_scenario(&BenchScenario::new(60, 0.5, 9)).unwrap();
        assert_eq!(a.net, b.net);
        assert_eq!(a.stimulus, b.stimulus);
        let c = build_scenario(&BenchScenario::new(60, 0.5, 10)).unwrap();
        assert_ne!(a.net.synapses, c.net.synapses);
    }

    #[test]
    fn tiny_networks_rejected() {
        assert!(build_scenario(&BenchScenario::new(2, 1.0, 0)).is_err());
        assert!(build_scenario(&BenchScenario::new(3, 1.0, 0)).is_ok());
    }
}

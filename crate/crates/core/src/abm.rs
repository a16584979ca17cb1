//! Agent-based backend for heterogeneous networks.
//!
//! Every neuron is an agent driven by a [`SpikingBehavior`] looked up by its
//! behavior tag. Delays are carried natively: each neuron owns an axon shift
//! register and each synapse a channel register of length `delay`.
//!
//! A step runs in two phases over the whole world:
//!
//! * neuron phase: every agent integrates the input delivered for this step
//!   and its external stimulus, applies refractory gating, and writes
//!   its (axon-delayed) spike into the head of its outgoing channels;
//! * synapse phase: every channel delivers its final element into the
//!   post-neuron's input for the *next* step, then shifts.
//!
//! No agent sees another agent's spike within the same step, so results do
//! not depend on the order agents are visited.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{
    check_inputs, NetworkDef, NeuronId, NeuronParams, SimulationConfig, SpikeRaster,
    StimulusSchedule, LIF,
};
use crate::{Error, Result};

/// Fixed-length binary shift register. Slot 0 is the head, slot `len - 1`
/// the final element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ShiftRegister {
    /// Registers of up to 64 slots packed into one word, bit `k` = slot `k`.
    Packed {
        bits: u64,
        len: u32,
    },
    Ring {
        cells: Box<[bool]>,
        head: usize,
    },
}

impl ShiftRegister {
    pub fn new(len: u32) -> Self {
        if len <= 64 {
            ShiftRegister::Packed { bits: 0, len }
        } else {
            ShiftRegister::Ring {
                cells: vec![false; len as usize].into_boxed_slice(),
                head: 0,
            }
        }
    }

    pub fn len(&self) -> u32 {
        match self {
            ShiftRegister::Packed { len, .. } => *len,
            ShiftRegister::Ring { cells, .. } => cells.len() as u32,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Marks the head slot occupied.
    #[inline]
    pub fn set_head(&mut self) {
        match self {
            ShiftRegister::Packed { bits, len } => {
                debug_assert!(*len > 0);
                *bits |= 1;
            }
            ShiftRegister::Ring { cells, head } => cells[*head] = true,
        }
    }

    /// Pops the final element and moves every slot one step toward the tail,
    /// leaving the head empty.
    #[inline]
    pub fn shift(&mut self) -> bool {
        match self {
            ShiftRegister::Packed { bits, len } => {
                if *len == 0 {
                    return false;
                }
                let out = (*bits >> (*len - 1)) & 1 == 1;
                let mask = if *len == 64 {
                    u64::MAX
                } else {
                    (1u64 << *len) - 1
                };
                *bits = (*bits << 1) & mask;
                out
            }
            ShiftRegister::Ring { cells, head } => {
                let n = cells.len();
                let tail = (*head + n - 1) % n;
                let out = cells[tail];
                cells[tail] = false;
                *head = tail;
                out
            }
        }
    }

    /// Pure delay line: returns the input fed `len` calls ago. A zero-length
    /// register passes its input straight through.
    #[inline]
    pub fn delay(&mut self, input: bool) -> bool {
        if self.is_empty() {
            return input;
        }
        let out = self.shift();
        if input {
            self.set_head();
        }
        out
    }

    /// Number of occupied slots.
    pub fn occupancy(&self) -> u32 {
        match self {
            ShiftRegister::Packed { bits, .. } => bits.count_ones(),
            ShiftRegister::Ring { cells, .. } => cells.iter().filter(|&&c| c).count() as u32,
        }
    }
}

/// Input seen by a neuron in one step. Synaptic input is added before
/// external input, matching the matrix kernel's accumulation order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NeuronInput {
    pub synaptic: f64,
    pub external: f64,
}

/// Result of a behavior's integration, before refractory gating and reset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integration {
    pub membrane: f64,
    pub fired: bool,
}

/// Random stream private to one agent at one step, derived from
/// `(seed, agent id, step)`. The generator is only built when drawn from.
pub struct AgentRng {
    seed: u64,
    agent: NeuronId,
    step: u32,
    inner: Option<ChaCha8Rng>,
}

impl AgentRng {
    pub fn new(seed: u64, agent: NeuronId, step: u32) -> Self {
        AgentRng {
            seed,
            agent,
            step,
            inner: None,
        }
    }

    fn inner(&mut self) -> &mut ChaCha8Rng {
        let (seed, agent, step) = (self.seed, self.agent, self.step);
        self.inner.get_or_insert_with(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(agent as u64);
            rng.set_word_pos((step as u128) << 32);
            rng
        })
    }
}

impl RngCore for AgentRng {
    fn next_u32(&mut self) -> u32 {
        self.inner().next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner().next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner().fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.inner().try_fill_bytes(dest)
    }
}

/// A neuron's spiking rule, invoked once per neuron per step.
///
/// Implementations compute the post-leak, post-input membrane and whether the
/// neuron wants to fire. Refractory gating and post-spike reset are applied
/// by the engine afterwards, identically for every behavior.
pub trait SpikingBehavior: Send + Sync {
    fn integrate(
        &self,
        params: &NeuronParams,
        membrane: f64,
        input: NeuronInput,
        rng: &mut AgentRng,
    ) -> Integration;
}

/// Constant leak toward reset, then strict threshold.
#[derive(Debug, Clone, Copy, Default)]
pub struct Lif;

impl SpikingBehavior for Lif {
    fn integrate(
        &self,
        params: &NeuronParams,
        membrane: f64,
        input: NeuronInput,
        _rng: &mut AgentRng,
    ) -> Integration {
        let mut v = params.leak.apply(membrane, params.reset);
        v += input.synaptic;
        v += input.external;
        Integration {
            membrane: v,
            fired: v > params.threshold,
        }
    }
}

/// LIF that, once above threshold, fires only with the given probability.
/// A neuron that declines to fire keeps its charge.
#[derive(Debug, Clone, Copy)]
pub struct StochasticLif {
    pub probability: f64,
}

impl SpikingBehavior for StochasticLif {
    fn integrate(
        &self,
        params: &NeuronParams,
        membrane: f64,
        input: NeuronInput,
        rng: &mut AgentRng,
    ) -> Integration {
        let out = Lif.integrate(params, membrane, input, rng);
        Integration {
            fired: out.fired && rng.gen_bool(self.probability),
            ..out
        }
    }
}

/// Tag of the stochastic LIF registered by [`BehaviorRegistry::with_builtins`].
pub const STOCHASTIC_LIF: &str = "stochastic_lif";
/// Firing probability of the built-in stochastic LIF.
pub const STOCHASTIC_LIF_PROBABILITY: f64 = 0.5;

#[derive(Clone)]
pub struct BehaviorRegistry {
    behaviors: BTreeMap<String, Arc<dyn SpikingBehavior>>,
}

impl BehaviorRegistry {
    /// Registry holding only `"lif"`.
    pub fn new() -> Self {
        let mut behaviors: BTreeMap<String, Arc<dyn SpikingBehavior>> = BTreeMap::new();
        behaviors.insert(LIF.to_string(), Arc::new(Lif));
        BehaviorRegistry { behaviors }
    }

    /// `"lif"` plus `"stochastic_lif"` firing with probability 0.5.
    pub fn with_builtins() -> Self {
        let mut registry = Self::new();
        registry
            .register(
                STOCHASTIC_LIF,
                Arc::new(StochasticLif {
                    probability: STOCHASTIC_LIF_PROBABILITY,
                }),
            )
            .expect("fresh registry");
        registry
    }

    pub fn register(&mut self, name: &str, behavior: Arc<dyn SpikingBehavior>) -> Result<()> {
        if self.behaviors.contains_key(name) {
            return Err(Error::DuplicateBehavior(name.to_string()));
        }
        self.behaviors.insert(name.to_string(), behavior);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Arc<dyn SpikingBehavior>> {
        self.behaviors.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.behaviors.keys().map(String::as_str)
    }
}

impl Default for BehaviorRegistry {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Debug for BehaviorRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.behaviors.keys()).finish()
    }
}

pub struct NeuronAgent {
    pub id: NeuronId,
    pub params: NeuronParams,
    membrane: f64,
    refractory_counter: u32,
    axon_register: ShiftRegister,
    pending_input: f64,
    behavior: Arc<dyn SpikingBehavior>,
}

impl NeuronAgent {
    pub fn membrane(&self) -> f64 {
        self.membrane
    }

    pub fn refractory_counter(&self) -> u32 {
        self.refractory_counter
    }

    pub fn pending_input(&self) -> f64 {
        self.pending_input
    }

    pub fn axon_register(&self) -> &ShiftRegister {
        &self.axon_register
    }
}

#[derive(Debug, Clone)]
pub struct SynapseChannel {
    pub pre: NeuronId,
    pub post: NeuronId,
    pub weight: f64,
    pub register: ShiftRegister,
}

pub struct AbmWorld {
    agents: Vec<NeuronAgent>,
    channels: Vec<SynapseChannel>,
    /// Channel indices grouped by pre-neuron: `outgoing[out_start[i]..out_start[i + 1]]`.
    out_start: Vec<usize>,
    outgoing: Vec<usize>,
    external: Vec<f64>,
    spikes: Vec<NeuronId>,
    seed: u64,
    step_index: u32,
}

impl AbmWorld {
    /// Builds agents and channels; fails on an invalid network or a behavior
    /// tag missing from `registry`.
    pub fn new(net: &NetworkDef, seed: u64, registry: &BehaviorRegistry) -> Result<Self> {
        let violations = net.validate();
        if !violations.is_empty() {
            return Err(Error::InvalidNetwork(violations));
        }

        let agents = net
            .neurons
            .iter()
            .enumerate()
            .map(|(i, params)| {
                let behavior = registry.get(&params.behavior).cloned().ok_or_else(|| {
                    Error::UnknownBehavior {
                        neuron: i,
                        behavior: params.behavior.clone(),
                    }
                })?;
                Ok(NeuronAgent {
                    id: i as NeuronId,
                    params: params.clone(),
                    membrane: params.reset,
                    refractory_counter: 0,
                    axon_register: ShiftRegister::new(params.axonal_delay),
                    pending_input: 0.0,
                    behavior,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let channels: Vec<SynapseChannel> = net
            .synapses
            .iter()
            .map(|s| SynapseChannel {
                pre: s.pre,
                post: s.post,
                weight: s.weight,
                register: ShiftRegister::new(s.delay),
            })
            .collect();

        let n = agents.len();
        let mut out_start = vec![0usize; n + 1];
        for ch in &channels {
            out_start[ch.pre as usize + 1] += 1;
        }
        for i in 0..n {
            out_start[i + 1] += out_start[i];
        }
        let mut fill = out_start.clone();
        let mut outgoing = vec![0usize; channels.len()];
        for (c, ch) in channels.iter().enumerate() {
            outgoing[fill[ch.pre as usize]] = c;
            fill[ch.pre as usize] += 1;
        }

        Ok(AbmWorld {
            agents,
            channels,
            out_start,
            outgoing,
            external: vec![0.0; n],
            spikes: Vec::new(),
            seed,
            step_index: 0,
        })
    }

    pub fn agents(&self) -> &[NeuronAgent] {
        &self.agents
    }

    pub fn channels(&self) -> &[SynapseChannel] {
        &self.channels
    }

    pub fn step_index(&self) -> u32 {
        self.step_index
    }

    /// Total occupancy of all axon and channel registers.
    pub fn in_flight(&self) -> u64 {
        let axons: u64 = self
            .agents
            .iter()
            .map(|a| a.axon_register.occupancy() as u64)
            .sum();
        let channels: u64 = self
            .channels
            .iter()
            .map(|c| c.register.occupancy() as u64)
            .sum();
        axons + channels
    }

    /// Runs one full step with the given external inputs and returns the
    /// ascending ids of the neurons that spiked.
    pub fn step(&mut self, stimulus: &[(NeuronId, f64)]) -> &[NeuronId] {
        for &(neuron, amplitude) in stimulus {
            self.external[neuron as usize] += amplitude;
        }
        self.neuron_phase();
        for &(neuron, _) in stimulus {
            self.external[neuron as usize] = 0.0;
        }
        self.synapse_phase();
        self.step_index += 1;
        &self.spikes
    }

    fn neuron_phase(&mut self) {
        self.spikes.clear();
        let step = self.step_index;
        for (i, agent) in self.agents.iter_mut().enumerate() {
            let input = NeuronInput {
                synaptic: std::mem::take(&mut agent.pending_input),
                external: self.external[i],
            };
            let mut rng = AgentRng::new(self.seed, agent.id, step);
            let out = agent
                .behavior
                .integrate(&agent.params, agent.membrane, input, &mut rng);

            let mut fired = out.fired;
            let mut membrane = out.membrane;
            if agent.refractory_counter > 0 {
                fired = false;
                agent.refractory_counter -= 1;
                membrane = agent.params.reset;
            }
            if fired {
                agent.membrane = agent.params.reset;
                agent.refractory_counter = agent.params.refractory_period;
                self.spikes.push(agent.id);
            } else {
                agent.membrane = membrane;
            }

            if agent.axon_register.delay(fired) {
                for &c in &self.outgoing[self.out_start[i]..self.out_start[i + 1]] {
                    self.channels[c].register.set_head();
                }
            }
        }
    }

    fn synapse_phase(&mut self) {
        for ch in &mut self.channels {
            if ch.register.shift() {
                self.agents[ch.post as usize].pending_input += ch.weight;
            }
        }
    }
}

/// Runs `cfg.steps` steps. Delays of any length are handled natively.
pub fn run(
    net: &NetworkDef,
    cfg: &SimulationConfig,
    stim: &StimulusSchedule,
    registry: &BehaviorRegistry,
) -> Result<SpikeRaster> {
    check_inputs(net, cfg, stim)?;
    if cfg.stdp.is_some() {
        return Err(Error::InvalidConfig(
            "the agent backend has no built-in learning; drop the stdp configuration".into(),
        ));
    }
    let mut world = AbmWorld::new(net, cfg.seed, registry)?;
    let mut raster = SpikeRaster::empty(net.neuron_count(), cfg.steps);
    for (t, bucket) in stim.by_step(cfg.steps).iter().enumerate() {
        let spikes = world.step(bucket);
        raster.record_step(t as u32, spikes.iter().copied());
    }
    Ok(raster)
}

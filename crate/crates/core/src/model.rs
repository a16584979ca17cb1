//! Network description, run configuration and spike raster types shared by
//! every backend.
//!
//! A [`NetworkDef`] is the single source of truth: the matrix backend, the
//! agent backend and the reference oracle all consume the same value and are
//! expected to emit identical [`SpikeRaster`]s on their shared domain.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::stdp::StdpConfig;

pub type NeuronId = u32;
pub type Step = u32;

/// Behavior tag of the built-in leaky integrate-and-fire rule.
pub const LIF: &str = "lif";

/// Constant leak applied once per step, pulling the membrane toward reset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Leak {
    Finite(f64),
    /// Returns the membrane to reset in a single step, whatever its value.
    Infinite,
}

impl Leak {
    /// Moves `membrane` toward `reset` by the leak amount without overshooting.
    #[inline]
    pub fn apply(self, membrane: f64, reset: f64) -> f64 {
        match self {
            Leak::Infinite => reset,
            Leak::Finite(amount) => {
                if membrane > reset {
                    (membrane - amount).max(reset)
                } else if membrane < reset {
                    (membrane + amount).min(reset)
                } else {
                    membrane
                }
            }
        }
    }

    /// Float view used by the vectorized kernel; `Infinite` maps to `+inf`,
    /// which the clamped update turns into an exact reset.
    pub fn as_f64(self) -> f64 {
        match self {
            Leak::Finite(amount) => amount,
            Leak::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Leak::Infinite)
    }
}

impl Default for Leak {
    fn default() -> Self {
        Leak::Finite(0.0)
    }
}

impl fmt::Display for Leak {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Leak::Finite(amount) => write!(f, "{amount}"),
            Leak::Infinite => f.write_str("inf"),
        }
    }
}

/// Per-neuron parameters, including the axonal delay applied before a spike
/// reaches any outgoing synapse.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronParams {
    pub threshold: f64,
    pub leak: Leak,
    pub reset: f64,
    pub refractory_period: u32,
    pub axonal_delay: u32,
    pub behavior: String,
}

impl NeuronParams {
    pub fn lif(threshold: f64, leak: Leak, reset: f64, refractory_period: u32) -> Self {
        NeuronParams {
            threshold,
            leak,
            reset,
            refractory_period,
            axonal_delay: 0,
            behavior: LIF.to_string(),
        }
    }

    /// Relay neuron used to realize synaptic delays: fires on any positive
    /// input and forgets everything else immediately.
    pub fn proxy() -> Self {
        NeuronParams::lif(0.0, Leak::Infinite, 0.0, 0)
    }

    pub fn with_axonal_delay(mut self, axonal_delay: u32) -> Self {
        self.axonal_delay = axonal_delay;
        self
    }

    pub fn with_behavior(mut self, behavior: impl Into<String>) -> Self {
        self.behavior = behavior.into();
        self
    }

    pub fn is_lif(&self) -> bool {
        self.behavior == LIF
    }
}

impl Default for NeuronParams {
    fn default() -> Self {
        NeuronParams::lif(1.0, Leak::Finite(0.0), 0.0, 0)
    }
}

/// Directed synapse. A spike emitted by `pre` at step `t` is integrated by
/// `post` at step `t + delay` (plus the pre-neuron's axonal delay).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynapseDef {
    pub pre: NeuronId,
    pub post: NeuronId,
    pub weight: f64,
    pub delay: u32,
    pub stdp_enabled: bool,
}

impl SynapseDef {
    pub fn new(pre: NeuronId, post: NeuronId, weight: f64, delay: u32) -> Self {
        SynapseDef {
            pre,
            post,
            weight,
            delay,
            stdp_enabled: true,
        }
    }

    pub fn with_stdp(mut self, enabled: bool) -> Self {
        self.stdp_enabled = enabled;
        self
    }
}

/// Where a [`Violation`] was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Element {
    Neuron(usize),
    Synapse(usize),
    Stimulus(usize),
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Neuron(i) => write!(f, "neuron {i}"),
            Element::Synapse(i) => write!(f, "synapse {i}"),
            Element::Stimulus(i) => write!(f, "stimulus entry {i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Violation {
    #[error("synapse {synapse}: endpoint {pre}->{post} outside 0..{neuron_count}")]
    InvalidEndpoint {
        synapse: usize,
        pre: NeuronId,
        post: NeuronId,
        neuron_count: usize,
    },
    #[error("synapse {synapse}: duplicate pair {pre}->{post} (first defined by synapse {first})")]
    DuplicatePair {
        synapse: usize,
        first: usize,
        pre: NeuronId,
        post: NeuronId,
    },
    #[error("synapse {synapse}: delay must be at least 1")]
    ZeroDelay { synapse: usize },
    #[error("neuron {neuron}: negative leak {leak}")]
    NegativeLeak { neuron: usize, leak: f64 },
    #[error("{element}: {field} is not finite")]
    NonFinite {
        element: Element,
        field: &'static str,
    },
    #[error("neuron {neuron}: empty behavior tag")]
    EmptyBehavior { neuron: usize },
    #[error("stimulus entry {entry}: neuron {neuron} outside 0..{neuron_count}")]
    StimulusNeuron {
        entry: usize,
        neuron: NeuronId,
        neuron_count: usize,
    },
    #[error("stimulus entry {entry}: step {step} outside 0..{steps}")]
    StimulusStep {
        entry: usize,
        step: Step,
        steps: u32,
    },
}

impl Violation {
    pub fn element(&self) -> Element {
        match *self {
            Violation::InvalidEndpoint { synapse, .. }
            | Violation::DuplicatePair { synapse, .. }
            | Violation::ZeroDelay { synapse } => Element::Synapse(synapse),
            Violation::NegativeLeak { neuron, .. } | Violation::EmptyBehavior { neuron } => {
                Element::Neuron(neuron)
            }
            Violation::NonFinite { element, .. } => element,
            Violation::StimulusNeuron { entry, .. } | Violation::StimulusStep { entry, .. } => {
                Element::Stimulus(entry)
            }
        }
    }
}

/// Directed synaptic graph with per-neuron and per-synapse parameters.
/// Neuron ids are the dense indices `0..neurons.len()`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NetworkDef {
    pub neurons: Vec<NeuronParams>,
    pub synapses: Vec<SynapseDef>,
    pub metadata: BTreeMap<String, String>,
}

impl NetworkDef {
    pub fn new() -> Self {
        Self::default()
    }

    /// `count` copies of `params`, no synapses.
    pub fn uniform(count: usize, params: NeuronParams) -> Self {
        NetworkDef {
            neurons: vec![params; count],
            ..Self::default()
        }
    }

    pub fn add_neuron(&mut self, params: NeuronParams) -> NeuronId {
        self.neurons.push(params);
        (self.neurons.len() - 1) as NeuronId
    }

    pub fn connect(&mut self, pre: NeuronId, post: NeuronId, weight: f64, delay: u32) {
        self.synapses
            .push(SynapseDef::new(pre, post, weight, delay));
    }

    pub fn neuron_count(&self) -> usize {
        self.neurons.len()
    }

    pub fn max_delay(&self) -> u32 {
        self.synapses.iter().map(|s| s.delay).max().unwrap_or(0)
    }

    pub fn has_axonal_delays(&self) -> bool {
        self.neurons.iter().any(|n| n.axonal_delay > 0)
    }

    /// True when every neuron uses the built-in LIF rule.
    pub fn is_homogeneous_lif(&self) -> bool {
        self.neurons.iter().all(NeuronParams::is_lif)
    }

    /// True when the matrix backend can run the network without lowering.
    pub fn needs_lowering(&self) -> bool {
        self.has_axonal_delays() || self.synapses.iter().any(|s| s.delay > 1)
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate_network(self)
    }
}

/// Checks every structural invariant of `net`. Never fails: an empty result
/// means the network is valid.
pub fn validate_network(net: &NetworkDef) -> Vec<Violation> {
    let mut violations = Vec::new();
    let n = net.neurons.len();

    for (i, neuron) in net.neurons.iter().enumerate() {
        if !neuron.threshold.is_finite() {
            violations.push(Violation::NonFinite {
                element: Element::Neuron(i),
                field: "threshold",
            });
        }
        if !neuron.reset.is_finite() {
            violations.push(Violation::NonFinite {
                element: Element::Neuron(i),
                field: "reset",
            });
        }
        if let Leak::Finite(amount) = neuron.leak {
            if amount.is_nan() {
                violations.push(Violation::NonFinite {
                    element: Element::Neuron(i),
                    field: "leak",
                });
            } else if amount < 0.0 {
                violations.push(Violation::NegativeLeak {
                    neuron: i,
                    leak: amount,
                });
            }
        }
        if neuron.behavior.is_empty() {
            violations.push(Violation::EmptyBehavior { neuron: i });
        }
    }

    for (s, syn) in net.synapses.iter().enumerate() {
        if syn.pre as usize >= n || syn.post as usize >= n {
            violations.push(Violation::InvalidEndpoint {
                synapse: s,
                pre: syn.pre,
                post: syn.post,
                neuron_count: n,
            });
        }
        if syn.delay == 0 {
            violations.push(Violation::ZeroDelay { synapse: s });
        }
        if !syn.weight.is_finite() {
            violations.push(Violation::NonFinite {
                element: Element::Synapse(s),
                field: "weight",
            });
        }
    }

    violations.extend(duplicate_pairs(&net.synapses));
    violations
}

fn pair_key(syn: &SynapseDef) -> u64 {
    ((syn.pre as u64) << 32) | syn.post as u64
}

fn duplicate_pairs(synapses: &[SynapseDef]) -> Vec<Violation> {
    // Generated networks arrive sorted by (pre, post); skip the sort then.
    let strictly_sorted = synapses
        .windows(2)
        .all(|w| pair_key(&w[0]) < pair_key(&w[1]));
    if strictly_sorted {
        return Vec::new();
    }

    let mut order: Vec<usize> = (0..synapses.len()).collect();
    order.sort_by_key(|&i| (pair_key(&synapses[i]), i));
    let mut violations = Vec::new();
    let mut first = 0usize;
    for (k, &idx) in order.iter().enumerate() {
        if k > 0 && pair_key(&synapses[order[k - 1]]) == pair_key(&synapses[idx]) {
            violations.push(Violation::DuplicatePair {
                synapse: idx,
                first: order[first],
                pre: synapses[idx].pre,
                post: synapses[idx].post,
            });
        } else {
            first = k;
        }
    }
    violations.sort_by_key(|v| match v {
        Violation::DuplicatePair { synapse, .. } => *synapse,
        _ => unreachable!(),
    });
    violations
}

/// One external input: `amplitude` is added to the membrane of `neuron` at `step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stimulus {
    pub step: Step,
    pub neuron: NeuronId,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StimulusSchedule {
    pub entries: Vec<Stimulus>,
}

impl StimulusSchedule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, step: Step, neuron: NeuronId, amplitude: f64) {
        self.entries.push(Stimulus {
            step,
            neuron,
            amplitude,
        });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn validate(&self, neuron_count: usize, steps: u32) -> Vec<Violation> {
        let mut violations = Vec::new();
        for (i, e) in self.entries.iter().enumerate() {
            if e.neuron as usize >= neuron_count {
                violations.push(Violation::StimulusNeuron {
                    entry: i,
                    neuron: e.neuron,
                    neuron_count,
                });
            }
            if e.step >= steps {
                violations.push(Violation::StimulusStep {
                    entry: i,
                    step: e.step,
                    steps,
                });
            }
            if !e.amplitude.is_finite() {
                violations.push(Violation::NonFinite {
                    element: Element::Stimulus(i),
                    field: "amplitude",
                });
            }
        }
        violations
    }

    /// Entries bucketed by step, in schedule order within each step.
    pub fn by_step(&self, steps: u32) -> Vec<Vec<(NeuronId, f64)>> {
        let mut buckets = vec![Vec::new(); steps as usize];
        for e in &self.entries {
            if let Some(bucket) = buckets.get_mut(e.step as usize) {
                bucket.push((e.neuron, e.amplitude));
            }
        }
        buckets
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub steps: u32,
    pub seed: u64,
    pub stdp: Option<StdpConfig>,
    pub record_membrane: bool,
}

impl SimulationConfig {
    pub fn new(steps: u32) -> Self {
        SimulationConfig {
            steps,
            seed: 0,
            stdp: None,
            record_membrane: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_stdp(mut self, stdp: StdpConfig) -> Self {
        self.stdp = Some(stdp);
        self
    }

    pub fn check(&self) -> crate::Result<()> {
        if self.steps == 0 {
            return Err(crate::Error::InvalidConfig(
                "steps must be at least 1".into(),
            ));
        }
        if let Some(stdp) = &self.stdp {
            stdp.check()?;
        }
        Ok(())
    }
}

/// Checks config, network and stimulus together, as every backend must
/// before stepping.
pub(crate) fn check_inputs(
    net: &NetworkDef,
    cfg: &SimulationConfig,
    stim: &StimulusSchedule,
) -> crate::Result<()> {
    cfg.check()?;
    let violations = net.validate();
    if !violations.is_empty() {
        return Err(crate::Error::InvalidNetwork(violations));
    }
    let violations = stim.validate(net.neuron_count(), cfg.steps);
    if !violations.is_empty() {
        return Err(crate::Error::InvalidStimulus(violations));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpikeEvent {
    pub step: Step,
    pub neuron: NeuronId,
}

/// Spikes of one run, sorted by `(step, neuron)` and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpikeRaster {
    events: Vec<SpikeEvent>,
    neuron_count: usize,
    step_count: u32,
}

impl SpikeRaster {
    pub fn empty(neuron_count: usize, step_count: u32) -> Self {
        SpikeRaster {
            events: Vec::new(),
            neuron_count,
            step_count,
        }
    }

    /// Builds a raster from events in any order. Duplicates collapse; events
    /// outside the raster bounds are rejected.
    pub fn from_events(
        neuron_count: usize,
        step_count: u32,
        mut events: Vec<SpikeEvent>,
    ) -> crate::Result<Self> {
        if let Some(bad) = events
            .iter()
            .find(|e| e.neuron as usize >= neuron_count || e.step >= step_count)
        {
            return Err(crate::Error::InvalidRaster(format!(
                "event (step {}, neuron {}) outside {} steps x {} neurons",
                bad.step, bad.neuron, step_count, neuron_count
            )));
        }
        events.sort_unstable();
        events.dedup();
        Ok(SpikeRaster {
            events,
            neuron_count,
            step_count,
        })
    }

    /// Appends the spikes of `step`. Steps must be recorded in increasing
    /// order and `neurons` must be ascending.
    pub(crate) fn record_step(&mut self, step: Step, neurons: impl IntoIterator<Item = NeuronId>) {
        for neuron in neurons {
            debug_assert!(self
                .events
                .last()
                .is_none_or(|last| (last.step, last.neuron) < (step, neuron)));
            self.events.push(SpikeEvent { step, neuron });
        }
    }

    pub fn events(&self) -> &[SpikeEvent] {
        &self.events
    }

    pub fn neuron_count(&self) -> usize {
        self.neuron_count
    }

    pub fn step_count(&self) -> u32 {
        self.step_count
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Events of neurons `0..count`, with the neuron count shrunk to match.
    /// Used to project a delay-lowered run back onto the original network.
    pub fn truncate_neurons(&self, count: usize) -> SpikeRaster {
        SpikeRaster {
            events: self
                .events
                .iter()
                .copied()
                .filter(|e| (e.neuron as usize) < count)
                .collect(),
            neuron_count: count.min(self.neuron_count),
            step_count: self.step_count,
        }
    }

    pub fn spike_steps(&self, neuron: NeuronId) -> Vec<Step> {
        self.events
            .iter()
            .filter(|e| e.neuron == neuron)
            .map(|e| e.step)
            .collect()
    }

    pub fn counts_per_neuron(&self) -> Vec<usize> {
        let mut counts = vec![0; self.neuron_count];
        for e in &self.events {
            counts[e.neuron as usize] += 1;
        }
        counts
    }
}

fn keep(restrict_to: Option<&BTreeSet<NeuronId>>) -> impl Fn(&&SpikeEvent) -> bool + '_ {
    move |e| restrict_to.is_none_or(|ids| ids.contains(&e.neuron))
}

/// Event-set equality, optionally restricted to the given neuron ids.
pub fn raster_equal(
    a: &SpikeRaster,
    b: &SpikeRaster,
    restrict_to: Option<&BTreeSet<NeuronId>>,
) -> bool {
    first_divergence(a, b, restrict_to).is_none()
}

/// An event present in exactly one of two compared rasters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Divergence {
    pub event: SpikeEvent,
    /// True when the event is in the first raster only.
    pub in_first: bool,
}

/// Earliest `(step, neuron)` event on which the rasters disagree.
pub fn first_divergence(
    a: &SpikeRaster,
    b: &SpikeRaster,
    restrict_to: Option<&BTreeSet<NeuronId>>,
) -> Option<Divergence> {
    let mut left = a.events.iter().filter(keep(restrict_to)).peekable();
    let mut right = b.events.iter().filter(keep(restrict_to)).peekable();
    loop {
        match (left.peek(), right.peek()) {
            (None, None) => return None,
            (Some(&&x), None) => {
                return Some(Divergence {
                    event: x,
                    in_first: true,
                })
            }
            (None, Some(&&y)) => {
                return Some(Divergence {
                    event: y,
                    in_first: false,
                })
            }
            (Some(&&x), Some(&&y)) => {
                if x == y {
                    left.next();
                    right.next();
                } else if x < y {
                    return Some(Divergence {
                        event: x,
                        in_first: true,
                    });
                } else {
                    return Some(Divergence {
                        event: y,
                        in_first: false,
                    });
                }
            }
        }
    }
}

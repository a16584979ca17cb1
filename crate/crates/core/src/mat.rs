//! Homogeneous LIF backend.
//!
//! All neuron state lives in dense vectors and synaptic propagation is one
//! spike-vector times weight-matrix product per step. Every synapse must have
//! unit delay; longer delays are realized by [`crate::lowering`] first.
//!
//! Weights are held either as a dense row-major matrix or, for sparse
//! networks such as lowered relay chains, in compressed rows. Both layouts add
//! the rows of spiking neurons in ascending order, so they produce the same
//! floating-point sums.
//!
//! One step, in order:
//!
//! 1. constant leak toward reset, clamped so it never overshoots;
//! 2. add `W^T s[t-1]`, the previous step's spikes through the weights;
//! 3. add external stimulus;
//! 4. spike where the membrane is strictly above threshold;
//! 5. neurons still refractory do not spike, count down, and are held at reset;
//! 6. spiking neurons reset and start their refractory period.

use rayon::prelude::*;

use crate::lowering::lower_delays;
use crate::model::{
    check_inputs, Leak, NetworkDef, NeuronId, SimulationConfig, SpikeRaster, StimulusSchedule,
};
use crate::stdp::{self, SpikeHistory, StdpConfig, Traces};
use crate::{Error, Result};

/// Below this many neurons the propagation runs on the calling thread.
const PARALLEL_MIN_NEURONS: usize = 2048;
/// [`Layout::Auto`] goes sparse below one synapse in this many matrix cells.
const SPARSE_CELLS_PER_SYNAPSE: usize = 8;

/// Weight storage of a [`MatState`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Layout {
    /// Dense unless the network is sparse enough that compressed rows are
    /// smaller and faster.
    #[default]
    Auto,
    Dense,
    Sparse,
}

#[derive(Debug, Clone)]
enum Weights {
    /// Row-major, entry `i * n + j` is the weight of `i -> j`.
    Dense(Vec<f64>),
    /// Row `i` holds columns `cols[offsets[i]..offsets[i + 1]]`, ascending.
    Sparse {
        offsets: Vec<usize>,
        cols: Vec<NeuronId>,
        values: Vec<f64>,
    },
}

impl Weights {
    fn build(net: &NetworkDef, layout: Layout) -> Self {
        let n = net.neuron_count();
        let sparse = match layout {
            Layout::Dense => false,
            Layout::Sparse => true,
            Layout::Auto => {
                net.synapses.len().saturating_mul(SPARSE_CELLS_PER_SYNAPSE) < n.saturating_mul(n)
            }
        };
        if !sparse {
            let mut w = vec![0.0; n * n];
            for syn in &net.synapses {
                w[syn.pre as usize * n + syn.post as usize] = syn.weight;
            }
            return Weights::Dense(w);
        }
        let mut order: Vec<usize> = (0..net.synapses.len()).collect();
        order.sort_unstable_by_key(|&s| (net.synapses[s].pre, net.synapses[s].post));
        let mut offsets = vec![0usize; n + 1];
        for syn in &net.synapses {
            offsets[syn.pre as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        Weights::Sparse {
            offsets,
            cols: order.iter().map(|&s| net.synapses[s].post).collect(),
            values: order.iter().map(|&s| net.synapses[s].weight).collect(),
        }
    }

    /// Storage index of `pre -> post`, if the layout has a slot for it.
    fn index(&self, n: usize, pre: usize, post: usize) -> Option<usize> {
        match self {
            Weights::Dense(_) => Some(pre * n + post),
            Weights::Sparse { offsets, cols, .. } => {
                let row = &cols[offsets[pre]..offsets[pre + 1]];
                row.binary_search(&(post as NeuronId))
                    .ok()
                    .map(|k| offsets[pre] + k)
            }
        }
    }

    fn values(&self) -> &[f64] {
        match self {
            Weights::Dense(w) => w,
            Weights::Sparse { values, .. } => values,
        }
    }

    fn values_mut(&mut self) -> &mut [f64] {
        match self {
            Weights::Dense(w) => w,
            Weights::Sparse { values, .. } => values,
        }
    }
}

/// Per-element constant leak over whole vectors.
pub fn apply_leak(membrane: &[f64], leaks: &[Leak], resets: &[f64]) -> Vec<f64> {
    membrane
        .iter()
        .zip(leaks)
        .zip(resets)
        .map(|((&v, &leak), &reset)| leak_toward(v, leak.as_f64(), reset))
        .collect()
}

#[inline(always)]
fn leak_toward(v: f64, leak: f64, reset: f64) -> f64 {
    if v > reset {
        (v - leak).max(reset)
    } else if v < reset {
        (v + leak).min(reset)
    } else {
        v
    }
}

#[derive(Debug, Clone)]
pub struct MatState {
    n: usize,
    membrane: Vec<f64>,
    thresholds: Vec<f64>,
    leaks: Vec<f64>,
    resets: Vec<f64>,
    refractory_periods: Vec<u32>,
    refractory_counters: Vec<u32>,
    /// Ascending ids of the neurons that spiked at the previous step.
    spikes_prev: Vec<NeuronId>,
    weights: Weights,
    /// Synapses allowed to learn, indexed like the weight storage; allocated
    /// only when plasticity is configured.
    plastic: Option<Vec<bool>>,
    history: SpikeHistory,
    external: Vec<f64>,
    step_index: u32,
}

impl MatState {
    /// Builds the kernel state. The network must be valid, all-LIF, and
    /// already lowered to unit synaptic delays with no axonal delays.
    pub fn new(net: &NetworkDef, cfg: &SimulationConfig) -> Result<Self> {
        Self::with_layout(net, cfg, Layout::Auto)
    }

    pub fn with_layout(net: &NetworkDef, cfg: &SimulationConfig, layout: Layout) -> Result<Self> {
        cfg.check()?;
        let violations = net.validate();
        if !violations.is_empty() {
            return Err(Error::InvalidNetwork(violations));
        }
        for (i, neuron) in net.neurons.iter().enumerate() {
            if !neuron.is_lif() {
                return Err(Error::NonLifBehavior {
                    neuron: i,
                    behavior: neuron.behavior.clone(),
                });
            }
            if neuron.axonal_delay != 0 {
                return Err(Error::AxonalDelay {
                    neuron: i,
                    delay: neuron.axonal_delay,
                });
            }
        }
        if let Some((s, syn)) = net.synapses.iter().enumerate().find(|(_, s)| s.delay != 1) {
            return Err(Error::NonUnitDelay {
                synapse: s,
                delay: syn.delay,
            });
        }

        let n = net.neuron_count();
        let mut weights = Weights::build(net, layout);

        let (plastic, history) = match &cfg.stdp {
            Some(rule) => {
                let mut mask = vec![false; weights.values().len()];
                for syn in net.synapses.iter().filter(|s| s.stdp_enabled) {
                    let idx = weights
                        .index(n, syn.pre as usize, syn.post as usize)
                        .expect("every synapse has a slot");
                    mask[idx] = true;
                    let w = &mut weights.values_mut()[idx];
                    *w = w.clamp(rule.w_min, rule.w_max);
                }
                (Some(mask), SpikeHistory::new(rule.window as usize))
            }
            None => (None, SpikeHistory::new(0)),
        };

        let resets: Vec<f64> = net.neurons.iter().map(|p| p.reset).collect();
        Ok(MatState {
            n,
            membrane: resets.clone(),
            thresholds: net.neurons.iter().map(|p| p.threshold).collect(),
            leaks: net.neurons.iter().map(|p| p.leak.as_f64()).collect(),
            resets,
            refractory_periods: net.neurons.iter().map(|p| p.refractory_period).collect(),
            refractory_counters: vec![0; n],
            spikes_prev: Vec::new(),
            weights,
            plastic,
            history,
            external: vec![0.0; n],
            step_index: 0,
        })
    }

    pub fn neuron_count(&self) -> usize {
        self.n
    }

    pub fn step_index(&self) -> u32 {
        self.step_index
    }

    pub fn membrane(&self) -> &[f64] {
        &self.membrane
    }

    pub fn refractory_counters(&self) -> &[u32] {
        &self.refractory_counters
    }

    /// Neurons that spiked at the most recent step, ascending.
    pub fn spikes(&self) -> &[NeuronId] {
        &self.spikes_prev
    }

    /// The layout chosen at construction, never [`Layout::Auto`].
    pub fn layout(&self) -> Layout {
        match self.weights {
            Weights::Dense(_) => Layout::Dense,
            Weights::Sparse { .. } => Layout::Sparse,
        }
    }

    pub fn weight(&self, pre: NeuronId, post: NeuronId) -> f64 {
        self.weights
            .index(self.n, pre as usize, post as usize)
            .map_or(0.0, |k| self.weights.values()[k])
    }

    /// The full weight matrix as a row-major copy, zeros where no synapse exists.
    pub fn weights(&self) -> Vec<f64> {
        let n = self.n;
        match &self.weights {
            Weights::Dense(w) => w.clone(),
            Weights::Sparse {
                offsets,
                cols,
                values,
            } => {
                let mut dense = vec![0.0; n * n];
                for i in 0..n {
                    for k in offsets[i]..offsets[i + 1] {
                        dense[i * n + cols[k] as usize] = values[k];
                    }
                }
                dense
            }
        }
    }

    /// Number of past spike vectors currently held for plasticity.
    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    /// Advances one step with a dense external input vector (`ext.len() == n`).
    pub fn step(&mut self, ext: &[f64]) -> &[NeuronId] {
        assert_eq!(ext.len(), self.n, "external input length");
        if self.step_index > 0 {
            self.history.push(&self.spikes_prev);
        }
        self.integrate(ext);
        self.fire();
        &self.spikes_prev
    }

    /// Same as [`MatState::step`] with a sparse `(neuron, amplitude)` input list.
    pub fn step_sparse(&mut self, stimulus: &[(NeuronId, f64)]) -> &[NeuronId] {
        let mut ext = std::mem::take(&mut self.external);
        for &(neuron, amplitude) in stimulus {
            ext[neuron as usize] += amplitude;
        }
        self.step(&ext);
        for &(neuron, _) in stimulus {
            ext[neuron as usize] = 0.0;
        }
        self.external = ext;
        &self.spikes_prev
    }

    /// Steps 1-3: leak, propagation and external input into `membrane`.
    fn integrate(&mut self, ext: &[f64]) {
        let n = self.n;
        let active = &self.spikes_prev;
        let leaks = &self.leaks;
        let resets = &self.resets;

        let weights = match &self.weights {
            Weights::Dense(w) => w,
            Weights::Sparse {
                offsets,
                cols,
                values,
            } => {
                for (j, v) in self.membrane.iter_mut().enumerate() {
                    *v = leak_toward(*v, leaks[j], resets[j]);
                }
                for &i in active {
                    let span = offsets[i as usize]..offsets[i as usize + 1];
                    for (&j, &w) in cols[span.clone()].iter().zip(&values[span]) {
                        self.membrane[j as usize] += w;
                    }
                }
                for (v, e) in self.membrane.iter_mut().zip(ext) {
                    *v += *e;
                }
                return;
            }
        };

        // Each output column accumulates rows in ascending pre order no
        // matter how columns are split, so results do not depend on threads.
        let kernel = |start: usize, block: &mut [f64]| {
            let end = start + block.len();
            for (k, v) in block.iter_mut().enumerate() {
                *v = leak_toward(*v, leaks[start + k], resets[start + k]);
            }
            for &i in active {
                let row = &weights[i as usize * n + start..i as usize * n + end];
                for (v, w) in block.iter_mut().zip(row) {
                    *v += *w;
                }
            }
            for (v, e) in block.iter_mut().zip(&ext[start..end]) {
                *v += *e;
            }
        };

        let threads = rayon::current_num_threads();
        if n < PARALLEL_MIN_NEURONS || threads < 2 {
            kernel(0, &mut self.membrane);
        } else {
            let chunk = n.div_ceil(threads * 4).max(256);
            self.membrane
                .par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(c, block)| kernel(c * chunk, block));
        }
    }

    /// Steps 4-6: threshold, refractory gating, reset.
    fn fire(&mut self) {
        self.spikes_prev.clear();
        for j in 0..self.n {
            let mut spiked = self.membrane[j] > self.thresholds[j];
            if self.refractory_counters[j] > 0 {
                spiked = false;
                self.refractory_counters[j] -= 1;
                self.membrane[j] = self.resets[j];
            }
            if spiked {
                self.membrane[j] = self.resets[j];
                self.refractory_counters[j] = self.refractory_periods[j];
                self.spikes_prev.push(j as NeuronId);
            }
        }
        self.step_index += 1;
    }

    /// One plasticity update for the spikes of the step just taken.
    pub fn apply_stdp(&mut self, rule: &StdpConfig) -> Result<()> {
        let Some(plastic) = &self.plastic else {
            return Err(Error::InvalidConfig(
                "state was built without an stdp configuration".into(),
            ));
        };
        match &mut self.weights {
            Weights::Dense(w) => {
                stdp::update(w, plastic, self.n, &self.spikes_prev, &self.history, rule)
            }
            Weights::Sparse {
                offsets,
                cols,
                values,
            } => {
                let traces = Traces::new(self.n, &self.spikes_prev, &self.history, rule);
                for i in (0..self.n).filter(|&i| traces.row_active(i)) {
                    for k in offsets[i]..offsets[i + 1] {
                        if plastic[k] {
                            traces.apply(&mut values[k], i, cols[k] as usize, rule);
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MatRun {
    pub raster: SpikeRaster,
    /// Membrane vector after every step, when requested in the config.
    pub membrane_trace: Option<Vec<Vec<f64>>>,
    pub final_state: MatState,
}

/// Runs `cfg.steps` steps of a unit-delay network.
pub fn run(net: &NetworkDef, cfg: &SimulationConfig, stim: &StimulusSchedule) -> Result<MatRun> {
    check_inputs(net, cfg, stim)?;
    let mut state = MatState::new(net, cfg)?;
    let buckets = stim.by_step(cfg.steps);
    let mut raster = SpikeRaster::empty(net.neuron_count(), cfg.steps);
    let mut trace = cfg.record_membrane.then(Vec::new);

    for (t, bucket) in buckets.iter().enumerate() {
        state.step_sparse(bucket);
        if let Some(rule) = &cfg.stdp {
            state.apply_stdp(rule)?;
        }
        raster.record_step(t as u32, state.spikes().iter().copied());
        if let Some(trace) = trace.as_mut() {
            trace.push(state.membrane().to_vec());
        }
    }

    Ok(MatRun {
        raster,
        membrane_trace: trace,
        final_state: state,
    })
}

/// Lowers delays when needed, runs, and projects the raster back onto the
/// original neuron ids. Returns the raster and the number of proxies added.
pub fn run_lowered(
    net: &NetworkDef,
    cfg: &SimulationConfig,
    stim: &StimulusSchedule,
) -> Result<(SpikeRaster, usize)> {
    if !net.needs_lowering() {
        return Ok((run(net, cfg, stim)?.raster, 0));
    }
    check_inputs(net, cfg, stim)?;
    let lowered = lower_delays(net)?;
    let run = run(&lowered.net, cfg, stim)?;
    Ok((
        run.raster.truncate_neurons(lowered.original_count),
        lowered.proxy_map.len(),
    ))
}

//! Reference simulator: scalar per-neuron loops and an explicit queue of
//! pending deliveries. Slow and obvious on purpose; it shares no stepping
//! code with the matrix or agent backends and defines what both must produce.

use std::collections::BTreeMap;

use crate::model::{
    check_inputs, Leak, NetworkDef, NeuronId, SimulationConfig, SpikeRaster, Step, StimulusSchedule,
};
use crate::{Error, Result};

/// A weighted spike in flight toward `post`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendingDelivery {
    pub arrival: Step,
    pub post: NeuronId,
    pub amount: f64,
}

pub fn run(
    net: &NetworkDef,
    cfg: &SimulationConfig,
    stim: &StimulusSchedule,
) -> Result<SpikeRaster> {
    check_inputs(net, cfg, stim)?;
    if cfg.stdp.is_some() {
        return Err(Error::InvalidConfig(
            "the reference oracle does not model plasticity".into(),
        ));
    }
    if let Some((i, p)) = net.neurons.iter().enumerate().find(|(_, p)| !p.is_lif()) {
        return Err(Error::NonLifBehavior {
            neuron: i,
            behavior: p.behavior.clone(),
        });
    }

    let n = net.neuron_count();
    let mut fanout: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (s, syn) in net.synapses.iter().enumerate() {
        fanout[syn.pre as usize].push(s);
    }

    let mut membrane: Vec<f64> = net.neurons.iter().map(|p| p.reset).collect();
    let mut refractory = vec![0u32; n];
    // arrival step -> deliveries in the order they were emitted
    let mut queue: BTreeMap<Step, Vec<PendingDelivery>> = BTreeMap::new();
    let mut events = Vec::new();

    for t in 0..cfg.steps {
        let mut synaptic = vec![0.0f64; n];
        if let Some(arriving) = queue.remove(&t) {
            for d in arriving {
                synaptic[d.post as usize] += d.amount;
            }
        }
        let mut external = vec![0.0f64; n];
        for e in stim.entries.iter().filter(|e| e.step == t) {
            external[e.neuron as usize] += e.amplitude;
        }

        let mut fired_now = Vec::new();
        for i in 0..n {
            let p = &net.neurons[i];
            let mut v = membrane[i];
            v = match p.leak {
                Leak::Infinite => p.reset,
                Leak::Finite(l) if v > p.reset => {
                    if v - l < p.reset {
                        p.reset
                    } else {
                        v - l
                    }
                }
                Leak::Finite(l) if v < p.reset => {
                    if v + l > p.reset {
                        p.reset
                    } else {
                        v + l
                    }
                }
                Leak::Finite(_) => v,
            };
            v += synaptic[i];
            v += external[i];

            if refractory[i] > 0 {
                refractory[i] -= 1;
                membrane[i] = p.reset;
                continue;
            }
            if v > p.threshold {
                membrane[i] = p.reset;
                refractory[i] = p.refractory_period;
                fired_now.push(i);
            } else {
                membrane[i] = v;
            }
        }

        for &i in &fired_now {
            events.push(crate::model::SpikeEvent {
                step: t,
                neuron: i as NeuronId,
            });
            let axonal = net.neurons[i].axonal_delay;
            for &s in &fanout[i] {
                let syn = &net.synapses[s];
                let arrival = t as u64 + axonal as u64 + syn.delay as u64;
                debug_assert!(arrival > t as u64);
                if arrival < cfg.steps as u64 {
                    queue
                        .entry(arrival as Step)
                        .or_default()
                        .push(PendingDelivery {
                            arrival: arrival as Step,
                            post: syn.post,
                            amount: syn.weight,
                        });
                }
            }
        }
    }

    SpikeRaster::from_events(n, cfg.steps, events)
}

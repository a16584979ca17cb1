//! Delay lowering: rewrites a network so every synapse has unit delay.
//!
//! Axonal delays are first folded into the outgoing synapses. Each synapse
//! `i -> j` with delay `d > 1` then becomes a chain
//! `i -> p1 -> ... -> p(d-1) -> j` of relay ("proxy") neurons with threshold
//! 0 and infinite leak. Inner hops have weight 1; the last hop carries the
//! original weight, so a sub-threshold input is never turned into a relay
//! spike on the way.

use crate::model::{NetworkDef, NeuronId, NeuronParams, SynapseDef};
use crate::{Error, Result};

/// Metadata key holding the neuron count before lowering.
pub const ORIGINAL_COUNT_KEY: &str = "original_count";
/// Metadata key holding the proxy map as a JSON array of
/// `[proxy, pre, post, position]` quadruples.
pub const PROXY_MAP_KEY: &str = "proxy_map";

/// Which original synapse a proxy neuron serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProxyInfo {
    pub proxy: NeuronId,
    pub pre: NeuronId,
    pub post: NeuronId,
    /// 1-based position along the chain, counted from the pre-neuron.
    pub position: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoweredNetwork {
    pub net: NetworkDef,
    pub original_count: usize,
    pub proxy_map: Vec<ProxyInfo>,
}

/// Moves every neuron's axonal delay onto its outgoing synapses.
pub fn fold_axonal_delays(net: &NetworkDef) -> NetworkDef {
    let mut folded = net.clone();
    for syn in &mut folded.synapses {
        syn.delay += net.neurons[syn.pre as usize].axonal_delay;
    }
    for neuron in &mut folded.neurons {
        neuron.axonal_delay = 0;
    }
    folded
}

/// Number of proxies [`lower_delays`] would add, computed without building anything.
pub fn proxy_count(net: &NetworkDef) -> u64 {
    net.synapses
        .iter()
        .map(|s| {
            let axonal = net
                .neurons
                .get(s.pre as usize)
                .map_or(0, |n| n.axonal_delay);
            (s.delay as u64 + axonal as u64).saturating_sub(1)
        })
        .sum()
}

pub fn lower_delays(net: &NetworkDef) -> Result<LoweredNetwork> {
    let violations = net.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidNetwork(violations));
    }

    let folded = fold_axonal_delays(net);
    let original_count = folded.neuron_count();
    let mut lowered = NetworkDef {
        neurons: folded.neurons,
        synapses: Vec::with_capacity(folded.synapses.len()),
        metadata: folded.metadata,
    };
    let mut proxy_map = Vec::new();

    for syn in &folded.synapses {
        if syn.delay == 1 {
            lowered.synapses.push(*syn);
            continue;
        }
        let mut from = syn.pre;
        for position in 1..syn.delay {
            let proxy = lowered.add_neuron(NeuronParams::proxy());
            proxy_map.push(ProxyInfo {
                proxy,
                pre: syn.pre,
                post: syn.post,
                position,
            });
            lowered
                .synapses
                .push(SynapseDef::new(from, proxy, 1.0, 1).with_stdp(false));
            from = proxy;
        }
        lowered.synapses.push(SynapseDef {
            pre: from,
            delay: 1,
            ..*syn
        });
    }

    lowered
        .metadata
        .insert(ORIGINAL_COUNT_KEY.to_string(), original_count.to_string());
    let encoded: Vec<[u64; 4]> = proxy_map
        .iter()
        .map(|p| {
            [
                p.proxy as u64,
                p.pre as u64,
                p.post as u64,
                p.position as u64,
            ]
        })
        .collect();
    lowered.metadata.insert(
        PROXY_MAP_KEY.to_string(),
        serde_json::to_string(&encoded).expect("integer arrays always serialize"),
    );

    Ok(LoweredNetwork {
        net: lowered,
        original_count,
        proxy_map,
    })
}

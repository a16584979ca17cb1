#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spikeforge_core::{Leak, NetworkDef, NeuronParams, StimulusSchedule};

/// Shape of a random test network. All parameters are drawn from small
/// dyadic sets so every membrane sum is exact in f64 and backends can be
/// compared event for event.
#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub neurons: usize,
    pub density: f64,
    pub max_delay: u32,
    pub max_axonal: u32,
    pub steps: u32,
}

pub fn random_network(shape: Shape, seed: u64) -> NetworkDef {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let thresholds = [0.0, 0.5, 1.0, 1.5, 2.0, 3.0];
    let leaks = [
        Leak::Finite(0.0),
        Leak::Finite(0.25),
        Leak::Finite(0.5),
        Leak::Finite(1.0),
        Leak::Infinite,
    ];
    let resets = [0.0, 0.0, -0.5, 0.5];
    let weights = [-1.0, -0.5, 0.25, 0.5, 1.0, 1.5, 2.0];

    let mut net = NetworkDef::new();
    for _ in 0..shape.neurons {
        let reset = *resets.choose(&mut rng).unwrap();
        net.add_neuron(
            NeuronParams::lif(
                reset + thresholds.choose(&mut rng).unwrap(),
                *leaks.choose(&mut rng).unwrap(),
                reset,
                rng.gen_range(0..=3),
            )
            .with_axonal_delay(rng.gen_range(0..=shape.max_axonal)),
        );
    }
    for i in 0..shape.neurons as u32 {
        for j in 0..shape.neurons as u32 {
            if rng.gen_bool(shape.density) {
                let delay = rng.gen_range(1..=shape.max_delay);
                net.connect(i, j, *weights.choose(&mut rng).unwrap(), delay);
            }
        }
    }
    net
}

pub fn random_stimulus(neurons: usize, steps: u32, entries: usize, seed: u64) -> StimulusSchedule {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let amplitudes = [0.5, 1.0, 2.0, 3.0];
    let mut stim = StimulusSchedule::new();
    for _ in 0..entries {
        stim.push(
            rng.gen_range(0..steps),
            rng.gen_range(0..neurons as u32),
            *amplitudes.choose(&mut rng).unwrap(),
        );
    }
    stim
}

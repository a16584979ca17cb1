//! Discrete-time spiking neural network simulation.
//!
//! Two interchangeable backends run the same [`NetworkDef`]:
//!
//! * [`mat`]: homogeneous leaky integrate-and-fire neurons held in dense
//!   vectors, one matrix-vector propagation per step, optional STDP.
//!   Synaptic delays above one step must first be lowered into chains of
//!   relay neurons with [`lowering::lower_delays`].
//! * [`abm`]: one agent per neuron with a pluggable spiking behavior;
//!   synaptic and axonal delays are carried natively by shift registers.
//!
//! [`oracle`] is a deliberately naive event-queue simulator that defines the
//! expected dynamics for both. [`netgen`] and [`bench`] reproduce the random
//! network benchmark protocol, and [`io`] holds the file formats.

pub mod abm;
pub mod bench;
mod error;
pub mod io;
pub mod lowering;
pub mod mat;
pub mod model;
pub mod netgen;
pub mod oracle;
pub mod stdp;

pub use error::{Error, Result};
pub use model::{
    first_divergence, raster_equal, validate_network, Divergence, Leak, NetworkDef, NeuronId,
    NeuronParams, SimulationConfig, SpikeEvent, SpikeRaster, Step, Stimulus, StimulusSchedule,
    SynapseDef, Violation, LIF,
};
pub use stdp::StdpConfig;

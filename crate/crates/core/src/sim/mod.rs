//! Clocked datapath primitives.

mod accumulator;
mod clock;
mod layer;
mod neuron;
pub mod trace;

pub use accumulator::{full_scale, DecayMode, LeakyAccumulator, MAX_TRACE_WIDTH};
pub use clock::ClockDomain;
pub use layer::{
    wta_select, Emission, LatchPoint, Layer, LayerParams, SpikeGenerator, SyncScope, Synchronizer, TickReport,
    DEFAULT_OUTPUT_LATENCY, DEFAULT_SPIKE_WINDOW, DEFAULT_SYNC_CLEAR,
};
pub use neuron::{gate, membrane_width, Neuron, Synapse};

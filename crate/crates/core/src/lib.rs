//! Event-driven, bit-faithful simulator of a multi-layer ODESA spiking network
//! with online, local, supervised training.

pub mod encode;
pub mod error;
pub mod harness;
pub mod network;
pub mod oracle;
pub mod sim;
pub mod topology;
pub mod trainer;

pub use error::{Error, Result};
pub use network::{LayerConfig, Network, NetworkConfig};
pub use topology::Topology;

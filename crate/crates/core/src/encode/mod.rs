//! Datasets encoded as labeled spike streams.

pub mod iris;
pub mod patterns;
mod stream;

pub use iris::{encode_iris, iris_dataset, iris_stream, split_dataset, IrisSample, Split};
pub use patterns::{gen_experiment1, pattern_set};
pub use stream::{EventStream, SpikeEvent};

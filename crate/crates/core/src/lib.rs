//! Knowledge compilation for binary neural networks.
//!
//! Neurons with step activations over 0/1 inputs are Boolean functions. This
//! crate compiles them, and whole binary convolutional networks built from
//! them, into canonical reduced OBDDs, then answers exact queries on the
//! compiled diagrams:
//!
//! * [`obdd`]: the decision-diagram engine.
//! * [`neuron`]: threshold units, quantization, and the neuron compilers.
//! * [`network`]: network descriptions, a bit-level reference evaluator, and
//!   bottom-up compilation of a whole network.
//! * [`analysis`]: robustness, PI-explanations, marginals, unateness.
//! * [`trainer`]: a single-neuron trainer and the precision sweep.
//! * [`formats`]: PBM/PGM images.

pub mod analysis;
pub mod formats;
pub mod instance;
pub mod network;
pub mod neuron;
pub mod obdd;
pub mod trainer;

pub use instance::{Instance, PartialInstance, VarId};
pub use obdd::{BoolOp, Manager, NodeRef, ObddError};

//! Deep time-delay reservoir (TDR) computing.
//!
//! A reservoir layer is a single nonlinear node with delayed self-feedback;
//! its time-multiplexed responses play the role of a recurrent network.
//! Cascading several such layers with fixed inter-layer coupling and
//! progressively slower filter timescales yields a deep reservoir whose
//! layers respond on different spatio-temporal scales. Only the linear
//! readout is trained.
//!
//! The crate provides:
//!
//! - [`benchmarks`]: Mackey-Glass and Lorenz chaotic sequence generators,
//! - [`sim`]: the coupled delay-oscillator integrator and virtual-node
//!   state extraction,
//! - [`readout`]: ridge-regression readout training and NMSE scoring,
//! - [`autonomy`]: closed-loop (free-running) prediction, Takens
//!   embedding and divergence/valid-time measures,
//! - [`sweep`]: parameter-grid scans and topology comparisons,
//! - [`config`] / [`cli`]: declarative experiment configs, presets and
//!   the `dtdr` command-line front end.
//!
//! See the crate `examples/` directory for one runnable example per major
//! capability.

pub mod autonomy;
pub mod benchmarks;
pub mod cli;
pub mod config;
mod delay;
pub mod error;
pub mod manifest;
pub mod mask;
pub mod network;
pub mod readout;
pub mod rng;
pub mod series;
pub mod sim;
pub mod sweep;
pub mod task;

pub use error::Error;
pub use mask::{MaskDistribution, MaskSpec};
pub use network::{LayerConfig, NetworkConfig};
pub use readout::{EvalReport, ReadoutWeights, TrainSpec};
pub use series::Timeseries;
pub use sim::{Simulator, StateMatrix};
pub use task::{run_task, SystemSpec, TaskSpec};

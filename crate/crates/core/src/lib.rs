//! Far-field wireless power transfer simulator.
//!
//! Builds multisine, multi-antenna transmit signals adapted to the channel
//! (CW, MRT, UP and SMF), pushes them through seeded MISO fading channels,
//! scores them with a fourth-order nonlinear rectifier model, and fits
//! power-law range models to the resulting DC power.
//!
//! Monte-Carlo loops run on rayon when the default `parallel` feature is on;
//! every realization draws from its own counter-derived seed so serial and
//! parallel runs agree bit for bit.

pub mod channel;
pub mod csi;
pub mod design;
pub mod error;
pub mod exec;
pub mod fitlab;
pub mod harness;
pub mod rectifier;
pub mod rng;
pub mod signals;

pub use channel::{ChannelKind, ChannelModel, ChannelRealization};
pub use csi::CsiConfig;
pub use design::{DesignScheme, SchemeKind};
pub use error::{Result, WptError};
pub use exec::Execution;
pub use fitlab::{MeasurementRecord, PowerLawFit, PAPER_COEFFICIENTS};
pub use harness::ExperimentConfig;
pub use rectifier::{ReceivedTones, RectifierParams};
pub use signals::{PrecoderWeights, ToneGrid};

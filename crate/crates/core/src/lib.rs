//! Signal processing, classification and simulation core of a hybrid
//! SSVEP and eye-blink wheelchair controller.
//!
//! The decode path is [`wavelet`] denoising and subband reconstruction,
//! [`features`] (CCA against stimulus references), and [`svm`]
//! classification, with [`blink`] gestures in parallel; [`decoder`] runs it
//! online and [`sim`] executes the resulting commands.

pub mod blink;
pub mod decoder;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod features;
pub mod metrics;
pub mod report;
pub mod signal;
pub mod sim;
pub mod svm;
pub mod synth;
pub mod wavelet;

pub use error::{Error, Result};
pub use exec::Execution;
pub use signal::{Channel, EegSegment};

//! Far-field training-data tooling for streaming attention-based ASR.
//!
//! The crate covers the signal side of a joint enhancement + recognition
//! training setup (image-method room simulation, delay-energy normalization
//! of the clean reference, power-mel features) and the math side
//! (monotonic chunkwise attention, CTC/CE/MSE losses, curriculum schedules).
//! [`pipeline`] ties the signal side together into an example server.

pub mod den;
pub mod error;
pub mod features;
pub mod losses;
pub mod mocha;
pub mod pipeline;
pub mod room;
pub mod schedule;
pub mod signal;

pub use error::{Error, Result};
pub use signal::AudioSignal;

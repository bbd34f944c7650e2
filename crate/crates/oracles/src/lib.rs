//! Slow, direct reference computations for cross-checking `fforge-core`.
//!
//! Nothing here shares code with the library. Each oracle takes plain slices and
//! arrays and recomputes its quantity from first principles (explicit mirror
//! reflections, exhaustive path enumeration, sampling, direct DFT sums).

pub mod attention;
pub mod ctc;
pub mod gradcheck;
pub mod image;
pub mod signal;
pub mod spectrum;

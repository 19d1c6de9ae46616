//! Synthetic corpora and slow, obviously-correct reference implementations
//! for checking the engine.

pub mod oracle;
pub mod synth;

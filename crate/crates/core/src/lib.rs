//! Trainable unreferenced image-caption metric and the evaluation harness
//! around it.

pub mod baselines;
pub mod corpus;
pub mod evalstats;
pub mod negatives;
pub mod scorer;
pub mod seed;
pub mod trainer;

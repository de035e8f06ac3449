//! Reinforcement-learning driving agents guided by a chain-of-thought advisor.

pub mod advisor;
pub mod evalharness;
pub mod mdpcore;
pub mod policy;
pub mod seed;
pub mod simworld;
pub mod trainer;

//! Gaussian-process tactile object learning with multi-sensor kernel fusion
//! and active instance transfer, run against a simulated tactile world.

pub mod features;
pub mod gp;
pub mod kernels;
pub mod seeds;
pub mod signals;
pub mod transfer;
pub mod active;
pub mod harness;

//! Uplink outage and coverage of a single-gateway LoRa network.
//!
//! End-devices form a Poisson point process on a disk around the gateway,
//! are assigned a spreading factor by distance and transmit under ALOHA
//! with a duty-cycle cap. A transmission is lost when its SNR misses the SF
//! threshold or when a concurrent same-SF transmission is within a factor
//! of four in received power.
//!
//! [`analysis`] evaluates these probabilities in closed form and by
//! quadrature; [`montecarlo`] estimates them by simulating deployments.

pub mod analysis;
pub mod error;
pub mod montecarlo;
pub mod phy;

#[cfg(test)]
mod oracle;

pub use analysis::{Annulus, LinkMetrics, Metric, QuadratureSettings};
pub use error::{Error, Result};
pub use phy::{NetworkConfig, SfParams, SfTable};

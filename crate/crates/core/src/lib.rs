//! Discrete-event simulator for mobile and vehicular ad hoc networks.
//!
//! The crate has two halves. [`linkmath`] predicts link lifetime and
//! availability from nothing but distance samples. The simulator runs AODV,
//! FSR and OLSR agents over seeded mobility and reports delivery ratio,
//! end-to-end delay and routing overhead.

pub mod linkmath;
pub mod mobility;
pub mod rng;
pub mod routing;
pub mod scenario;
pub mod sim;
pub mod time;
pub mod traffic;

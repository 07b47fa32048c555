//! Transmit power, coding rate and hop-count planning for linear multi-hop
//! relay links observed by a hovering UAV.
//!
//! Two regimes are covered. [`secrecy`] maximizes secrecy throughput under a
//! secrecy-outage budget with closed-form powers and rates. [`covert`]
//! maximizes transmit throughput while bounding the warden's relative entropy,
//! solving a two-constraint convex power program by active-set enumeration.
//! [`simkit`] holds Monte Carlo and quadrature oracles that check the closed
//! forms without their approximations, and [`cli`] wraps everything behind a
//! config-driven command line.

pub mod channel;
pub mod cli;
pub mod covert;
pub mod error;
pub mod numerics;
pub mod secrecy;
pub mod simkit;

pub use channel::{HopChannel, NetworkScenario};
pub use covert::{CovertConstraints, CovertSolution};
pub use error::{Error, Result};
pub use secrecy::{SecrecyConstraints, SecrecySolution};
pub use simkit::OracleEstimate;

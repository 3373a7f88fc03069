//! Decentralized control of connected automated vehicles (CAVs) crossing a
//! two-lane merging zone.
//!
//! Each vehicle tracks the unconstrained energy/time optimal trajectory
//! ([`reference`]) through a small quadratic program ([`qp`]) whose rows are
//! control barrier function (CBF) constraints for rear-end safety, safe
//! merging and speed limits, plus a relaxed control Lyapunov (CLF) row for
//! speed tracking ([`ocbf`]). The QP can be re-solved under three update
//! disciplines:
//!
//! - time-driven: every `dt` seconds ([`ocbf::time_driven_step`]);
//! - event-triggered: whenever a vehicle or one of its neighbors leaves a
//!   state box anchored at the last solve ([`event`]);
//! - self-triggered: at a predicted first-violation instant on a fixed
//!   time grid ([`selftrig`]).
//!
//! [`coordinator`] holds the shared information tables, [`sim`] runs the
//! closed loop and [`report`] turns runs into CSV/SVG/summary outputs.

pub mod config;
pub mod coordinator;
pub mod error;
pub mod event;
pub mod model;
pub mod ocbf;
pub mod qp;
pub mod reference;
pub mod report;
pub mod roots;
pub mod selftrig;
pub mod sim;

pub use error::{Error, Result};

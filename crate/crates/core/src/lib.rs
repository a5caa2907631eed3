//! Latent EV charging demand simulation, capacitated multi-type charger
//! location, and utilization-driven deployment refinement.
//!
//! The pipeline runs in two stages. A day of activity-based travel is
//! simulated with unconstrained chargers to obtain latent demand
//! ([`sim`]), which feeds a time-expanded covering model ([`cmclp`]). The
//! resulting deployment is then re-simulated with finite plugs and trimmed
//! or grown by the rules in [`refine`]. [`metrics`] scores any evaluated
//! deployment.

pub mod cmclp;
pub mod error;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod refine;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};

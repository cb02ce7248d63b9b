//! Distributed containment control of multi-agent systems whose leaders move
//! along polynomial trajectories: graph certification, Riccati-based gain
//! synthesis, continuous and discrete simulation, and convex-hull metrics.

pub mod closed_loop;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod signals;
pub mod sim_continuous;
pub mod sim_discrete;
pub mod synthesis;
pub mod topology;
pub mod trace;

pub use error::{Error, Result};

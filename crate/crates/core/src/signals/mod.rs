//! Polynomial reference trajectories and disturbances, difference and
//! derivative operators, waypoint interpolation, and seeded white noise.

mod interpolation;
mod noise;
mod polynomial;

pub use interpolation::{interpolate_waypoints, Interpolant, CONDITION_WARNING};
pub use noise::{difference_covariance, NoiseModel};
pub use polynomial::{binomial_difference, difference_series, running_sum, TimeDomain, VectorPolynomial};

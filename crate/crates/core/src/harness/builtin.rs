//! Built-in scenarios.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::scenario::{
    ControllerKind, GainSpec, InitialState, NoiseSpec, RobotSpec, Scenario, TopologySpec, SCENARIO_SCHEMA_VERSION,
};
use crate::error::{Error, Result};
use crate::signals::{interpolate_waypoints, VectorPolynomial};

/// Continuous example gains `(κ_3, κ_2, κ_1, κ_0)`.
pub const EXAMPLE_CONTINUOUS_GAINS: [f64; 4] = [2.0, 6.1554, 8.4721, 6.1554];

/// Robot gains in printed order; they are `κ_0 … κ_5`.
pub const ROBOT_GAINS_PRINTED: [f64; 6] = [1.806, 0.4769, 0.0786, 0.0085, 5.660e-4, 1.826e-5];

/// Row gain of the robot controller, `(κ_5, …, κ_0)`.
pub fn robot_gain_row() -> Vec<f64> {
    ROBOT_GAINS_PRINTED.iter().rev().copied().collect()
}

/// Leader coefficients `a_0 … a_3` of the continuous example, per leader.
pub const CONTINUOUS_LEADERS: [[[f64; 2]; 4]; 4] = [
    [[0.0, 0.0], [0.23, 3.43], [0.0095, -0.75], [0.0, 0.0005]],
    [[2.0, 5.0], [0.3, 3.43], [0.0095, -0.075], [0.0, 0.0005]],
    [[-5.0, 10.0], [0.2, 3.43], [0.01, -0.075], [0.0, 0.0005]],
    [[-10.0, 0.0], [0.2, 3.43], [0.01, -0.075], [0.0, 0.0005]],
];

pub const WAYPOINT_TIMES: [f64; 6] = [0.0, 30.0, 60.0, 90.0, 120.0, 150.0];

/// Master-robot reference points at [`WAYPOINT_TIMES`].
pub const MASTER_WAYPOINTS: [[[f64; 2]; 6]; 3] = [
    [[0.0, 25.0], [110.0, 8.0], [200.0, 50.0], [300.0, 120.0], [405.0, 155.0], [475.0, 150.0]],
    [[20.0, -5.0], [130.0, -15.0], [230.0, 35.0], [335.0, 100.0], [440.0, 130.0], [510.0, 130.0]],
    [[-10.0, -20.0], [100.0, -35.0], [210.0, 0.0], [315.0, 70.0], [410.0, 110.0], [480.0, 110.0]],
];

/// Printed master-1 coefficients `a_0 … a_5` as `(value, last-digit unit)` per component.
pub const PRINTED_MASTER_1: [[(f64, f64); 2]; 6] = [
    [(0.0, 1.0), (25.0, 1.0)],
    [(4.625, 1e-3), (-1.028, 1e-3)],
    [(-4.560e-2, 1e-5), (-0.7963e-2, 1e-6)],
    [(5.092e-4, 1e-7), (10.77e-4, 1e-6)],
    [(1.800e-6, 1e-9), (-10.91e-6, 1e-8)],
    [(0.0, 1e-8), (3.086e-8, 1e-11)],
];

pub const ROBOT_INITIAL: [[f64; 2]; 3] = [[-30.0, 40.0], [-40.0, 0.0], [0.0, -50.0]];

fn poly2(c: &[[f64; 2]]) -> VectorPolynomial {
    VectorPolynomial::new(c.iter().map(|r| DVector::from_row_slice(r)).collect()).expect("finite coefficients")
}

/// Degree-5 master trajectories through the waypoints.
pub fn robot_master_polynomials() -> Result<Vec<VectorPolynomial>> {
    MASTER_WAYPOINTS
        .iter()
        .map(|w| {
            let pts: Vec<DVector<f64>> = w.iter().map(|p| DVector::from_row_slice(p)).collect();
            interpolate_waypoints(&WAYPOINT_TIMES, &pts).map(|i| i.polynomial)
        })
        .collect()
}

fn edges(list: &[(usize, usize)]) -> Vec<(usize, usize, f64)> {
    list.iter().map(|&(a, b)| (a, b, 1.0)).collect()
}

/// 4 leaders, 4 followers: leader `j` feeds follower `j+4`, followers form a directed ring.
fn four_by_four() -> TopologySpec {
    TopologySpec {
        leaders: 4,
        followers: 4,
        edges: edges(&[(1, 5), (2, 6), (3, 7), (4, 8), (5, 6), (6, 7), (7, 8), (8, 5)]),
    }
}

/// 3 leaders, 3 followers: leader `j` feeds follower `j+3`, followers form a directed ring.
fn three_by_three() -> TopologySpec {
    TopologySpec {
        leaders: 3,
        followers: 3,
        edges: edges(&[(1, 4), (2, 5), (3, 6), (4, 5), (5, 6), (6, 4)]),
    }
}

fn positions(p: &[[f64; 2]]) -> Vec<InitialState> {
    p.iter()
        .map(|x| InitialState {
            chain: vec![x.to_vec()],
            estimator_error: vec![],
        })
        .collect()
}

/// Offsets plus a shared polynomial motion.
fn formation(offsets: &[[f64; 2]], common: &[[f64; 2]]) -> Vec<VectorPolynomial> {
    offsets
        .iter()
        .map(|o| {
            let mut c = common.to_vec();
            c[0] = [c[0][0] + o[0], c[0][1] + o[1]];
            poly2(&c)
        })
        .collect()
}

fn random_errors(seed: u64, followers: usize, order: usize, scale: f64) -> Vec<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..followers)
        .map(|_| {
            (0..order)
                .map(|_| (0..2).map(|_| rng.random_range(-scale..scale)).collect())
                .collect()
        })
        .collect()
}

fn with_estimator_errors(mut s: Scenario, scale: f64) -> Scenario {
    let errs = random_errors(s.seed, s.topology.followers, s.follower_order, scale);
    for (init, e) in s.initial.iter_mut().zip(errs) {
        init.estimator_error = e;
    }
    s
}

pub fn paper_continuous_example() -> Scenario {
    Scenario {
        name: "paper-continuous-example".into(),
        schema_version: SCENARIO_SCHEMA_VERSION,
        topology: four_by_four(),
        leaders: CONTINUOUS_LEADERS.iter().map(|c| poly2(c)).collect(),
        follower_order: 3,
        trajectory_order: 3,
        controller: ControllerKind::ContinuousHighOrder,
        disturbances: vec![],
        noise: None,
        gains: GainSpec::Explicit(EXAMPLE_CONTINUOUS_GAINS.to_vec()),
        dt: Some(1e-3),
        horizon: 60.0,
        seed: 1,
        record_every: Some(100),
        initial: positions(&[[10.0, 20.0], [-20.0, 20.0], [-15.0, -10.0], [10.0, -10.0]]),
        uniform_mu: None,
        robot: None,
        runs: None,
    }
}

pub fn paper_continuous_estimator() -> Scenario {
    let s = Scenario {
        name: "paper-continuous-estimator".into(),
        controller: ControllerKind::ContinuousEstimator,
        seed: 7,
        ..paper_continuous_example()
    };
    with_estimator_errors(s, 5.0)
}

pub fn paper_robot_application() -> Scenario {
    let cubic = poly2(&[[1.0, 1.0], [0.2, 0.2], [-0.01, -0.01], [0.001, 0.001]]);
    Scenario {
        name: "paper-robot-application".into(),
        schema_version: SCENARIO_SCHEMA_VERSION,
        topology: three_by_three(),
        leaders: robot_master_polynomials().expect("distinct waypoint times"),
        follower_order: 1,
        trajectory_order: 5,
        controller: ControllerKind::RobotApplication,
        disturbances: vec![cubic; 3],
        noise: Some(NoiseSpec {
            uniform: vec![0.1, 0.1],
            edges: vec![],
        }),
        gains: GainSpec::Explicit(robot_gain_row()),
        dt: None,
        horizon: 150.0,
        seed: 2024,
        record_every: None,
        initial: positions(&ROBOT_INITIAL),
        uniform_mu: None,
        robot: Some(RobotSpec {
            wheel_offset: 0.2,
            initial_heading: vec![0.0; 3],
        }),
        runs: Some(200),
    }
}

pub fn continuous_pin_example() -> Scenario {
    Scenario {
        name: "continuous-pin-example".into(),
        schema_version: SCENARIO_SCHEMA_VERSION,
        topology: three_by_three(),
        leaders: formation(
            &[[0.0, 6.0], [6.0, -3.0], [-6.0, -3.0]],
            &[[0.0, 0.0], [0.5, 0.2], [0.02, -0.01]],
        ),
        follower_order: 1,
        trajectory_order: 2,
        controller: ControllerKind::ContinuousPin,
        disturbances: vec![poly2(&[[0.5, -0.3], [0.1, 0.05]]); 3],
        noise: None,
        gains: GainSpec::Synthesized,
        dt: Some(1e-3),
        horizon: 30.0,
        seed: 3,
        record_every: Some(100),
        initial: positions(&[[20.0, 20.0], [-20.0, 15.0], [5.0, -25.0]]),
        uniform_mu: None,
        robot: None,
        runs: None,
    }
}

fn discrete_leaders() -> Vec<VectorPolynomial> {
    formation(
        &[[0.0, 10.0], [10.0, -5.0], [-10.0, -5.0]],
        &[[0.0, 0.0], [0.5, 0.3], [2e-3, -1e-3], [-1e-5, 2e-5]],
    )
}

pub fn discrete_pin_example() -> Scenario {
    Scenario {
        name: "discrete-pin-example".into(),
        schema_version: SCENARIO_SCHEMA_VERSION,
        topology: three_by_three(),
        leaders: discrete_leaders(),
        follower_order: 1,
        trajectory_order: 3,
        controller: ControllerKind::DiscretePin,
        disturbances: vec![],
        noise: None,
        gains: GainSpec::Synthesized,
        dt: None,
        horizon: 200.0,
        seed: 4,
        record_every: None,
        initial: positions(&[[30.0, 30.0], [-30.0, 20.0], [0.0, -40.0]]),
        uniform_mu: None,
        robot: None,
        runs: None,
    }
}

pub fn discrete_pin_uniform_example() -> Scenario {
    Scenario {
        name: "discrete-pin-uniform-example".into(),
        controller: ControllerKind::DiscretePinUniform,
        ..discrete_pin_example()
    }
}

/// Two leaders spanning a translating segment; followers start on it, so the
/// hull distance is driven by the measurement noise.
pub fn discrete_noisy_example() -> Scenario {
    Scenario {
        name: "discrete-noisy-example".into(),
        schema_version: SCENARIO_SCHEMA_VERSION,
        topology: TopologySpec {
            leaders: 2,
            followers: 2,
            edges: edges(&[(1, 3), (2, 4), (3, 4), (4, 3)]),
        },
        leaders: formation(&[[-5.0, 0.0], [5.0, 0.0]], &[[0.0, 0.0], [0.2, 0.1]]),
        follower_order: 1,
        trajectory_order: 1,
        controller: ControllerKind::DiscreteNoisy,
        disturbances: vec![],
        noise: Some(NoiseSpec {
            uniform: vec![0.1, 0.1],
            edges: vec![],
        }),
        gains: GainSpec::Synthesized,
        dt: None,
        horizon: 200.0,
        seed: 5,
        record_every: None,
        initial: positions(&[[-2.0, 0.0], [2.0, 0.0]]),
        uniform_mu: None,
        robot: None,
        runs: Some(200),
    }
}

pub fn discrete_high_order_example() -> Scenario {
    Scenario {
        name: "discrete-high-order-example".into(),
        schema_version: SCENARIO_SCHEMA_VERSION,
        topology: three_by_three(),
        leaders: formation(
            &[[0.0, 10.0], [10.0, -5.0], [-10.0, -5.0]],
            &[[0.0, 0.0], [0.5, 0.3], [2e-3, -1e-3]],
        ),
        follower_order: 2,
        trajectory_order: 2,
        controller: ControllerKind::DiscreteHighOrder,
        disturbances: vec![],
        noise: None,
        gains: GainSpec::Synthesized,
        dt: None,
        horizon: 300.0,
        seed: 6,
        record_every: None,
        initial: positions(&[[30.0, 30.0], [-30.0, 20.0], [0.0, -40.0]]),
        uniform_mu: None,
        robot: None,
        runs: None,
    }
}

pub fn discrete_estimator_example() -> Scenario {
    let s = Scenario {
        name: "discrete-estimator-example".into(),
        controller: ControllerKind::DiscreteEstimator,
        seed: 8,
        ..discrete_high_order_example()
    };
    with_estimator_errors(s, 5.0)
}

pub fn builtin_names() -> Vec<&'static str> {
    vec![
        "paper-continuous-example",
        "paper-continuous-estimator",
        "paper-robot-application",
        "continuous-pin-example",
        "discrete-pin-example",
        "discrete-pin-uniform-example",
        "discrete-noisy-example",
        "discrete-high-order-example",
        "discrete-estimator-example",
    ]
}

pub fn builtin(name: &str) -> Result<Scenario> {
    Ok(match name {
        "paper-continuous-example" => paper_continuous_example(),
        "paper-continuous-estimator" => paper_continuous_estimator(),
        "paper-robot-application" => paper_robot_application(),
        "continuous-pin-example" => continuous_pin_example(),
        "discrete-pin-example" => discrete_pin_example(),
        "discrete-pin-uniform-example" => discrete_pin_uniform_example(),
        "discrete-noisy-example" => discrete_noisy_example(),
        "discrete-high-order-example" => discrete_high_order_example(),
        "discrete-estimator-example" => discrete_estimator_example(),
        other => {
            return Err(Error::Scenario(format!(
                "unknown built-in scenario '{other}' (try: {})",
                builtin_names().join(", ")
            )))
        }
    })
}

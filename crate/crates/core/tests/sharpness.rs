mod common;

use containment::harness::{self, ControllerKind};

fn ratio(c: ControllerKind, r: usize, amp: f64) -> f64 {
    let out = harness::run(&common::sharpness(c, r, amp)).unwrap();
    assert!(out.report.synthesis.certified());
    out.report.error_ratio
}

#[test]
fn continuous_disturbance_order_boundary() {
    let below = ratio(ControllerKind::ContinuousPin, 1, 1.0);
    let at = ratio(ControllerKind::ContinuousPin, 2, 1.0);
    println!("continuous: r=1 {below:e}, r=2 {at:e}");
    assert!(below < 1e-2);
    assert!(at > 0.1);
}

#[test]
fn discrete_disturbance_order_boundary() {
    let below = ratio(ControllerKind::DiscretePin, 1, 1.0);
    let at = ratio(ControllerKind::DiscretePin, 2, 1.0);
    println!("discrete: r=1 {below:e}, r=2 {at:e}");
    assert!(below < 1e-2);
    assert!(at > 0.1);
}

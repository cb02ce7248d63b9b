use containment::harness::scenario::load_scenario_lenient;
use containment::harness::{builtin, builtin_names, load_scenario, save_scenario, Scenario};

#[test]
fn builtins_round_trip_through_canonical_json() {
    let dir = tempfile::tempdir().unwrap();
    for name in builtin_names() {
        let s = builtin(name).unwrap();
        let path = dir.path().join(format!("{name}.json"));
        save_scenario(&s, &path).unwrap();
        let first = std::fs::read_to_string(&path).unwrap();
        let back = load_scenario(&path).unwrap();
        assert_eq!(back, s, "{name}");
        save_scenario(&back, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), first, "{name}");
    }
}

#[test]
fn canonical_field_order() {
    let json = builtin("paper-robot-application").unwrap().to_json();
    let keys = ["\"name\"", "\"schema_version\"", "\"topology\"", "\"leaders\"", "\"follower_order\"", "\"gains\"", "\"horizon\"", "\"initial\"", "\"robot\"", "\"runs\""];
    let pos: Vec<usize> = keys.iter().map(|k| json.find(k).unwrap()).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]));
}

fn edited(f: impl FnOnce(&mut serde_json::Value)) -> String {
    let mut v: serde_json::Value = serde_json::from_str(&builtin("discrete-pin-example").unwrap().to_json()).unwrap();
    f(&mut v);
    v.to_string()
}

#[test]
fn malformed_edge_is_named() {
    let text = edited(|v| v["topology"]["edges"][2] = serde_json::json!([3, 9, 1.0]));
    let err = Scenario::from_json(&text).unwrap_err().to_string();
    assert!(err.contains("topology.edges[2]") && err.contains("[3, 9, 1]"), "{err}");

    let text = edited(|v| v["topology"]["edges"][0] = serde_json::json!([4, 1, 1.0]));
    let err = Scenario::from_json(&text).unwrap_err().to_string();
    assert!(err.contains("topology.edges[0]") && err.contains("leader"), "{err}");
}

#[test]
fn unknown_fields_and_versions_rejected() {
    let text = edited(|v| v["topology"]["extra"] = serde_json::json!(1));
    assert!(Scenario::from_json(&text).is_err());
    let text = edited(|v| v["schema_version"] = serde_json::json!(99));
    assert!(Scenario::from_json(&text).unwrap_err().to_string().contains("schema_version"));
}

#[test]
fn gain_length_mismatch_rejected() {
    let text = edited(|v| v["gains"] = serde_json::json!({"explicit": [1.0, 2.0]}));
    let err = Scenario::from_json(&text).unwrap_err().to_string();
    assert!(err.contains("l_m"), "{err}");
}

#[test]
fn unreachable_follower_is_a_warning_only_when_allowed() {
    // dropping 3 -> 6 and 5 -> 6 leaves follower 6 without a path from a leader
    let text = edited(|v| {
        let edges = v["topology"]["edges"].as_array_mut().unwrap();
        edges.retain(|e| e[1] != 6);
    });
    let err = Scenario::from_json(&text).unwrap_err().to_string();
    assert!(err.contains("no leader reaches follower(s) 6"), "{err}");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    std::fs::write(&path, &text).unwrap();
    let (_, warnings) = load_scenario_lenient(&path).unwrap();
    assert_eq!(warnings.len(), 1);
}

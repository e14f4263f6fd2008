use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;

use serde_json::Value;

use arpfb::harness::SimConfig;

fn schema() -> Value {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/config.schema.json");
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn keys(v: &Value) -> BTreeSet<String> {
    v.as_object().unwrap().keys().cloned().collect()
}

fn resolve<'a>(root: &'a Value, node: &'a Value) -> &'a Value {
    match node.get("$ref").and_then(Value::as_str) {
        Some(r) => root.pointer(r.trim_start_matches('#')).unwrap(),
        None => node,
    }
}

/// Every documented section lists exactly the serialized keys, and every
/// documented default equals the built-in one.
fn compare(root: &Value, node: &Value, actual: &Value, path: &str) {
    let node = resolve(root, node);
    if let Some(d) = node.get("default") {
        assert_eq!(d, actual, "default of {path}");
    }
    let (Some(props), Some(obj)) = (node.get("properties"), actual.as_object()) else {
        return;
    };
    assert_eq!(keys(props), obj.keys().cloned().collect(), "keys of {path}");
    for (k, sub) in props.as_object().unwrap() {
        compare(root, sub, &obj[k], &format!("{path}.{k}"));
    }
}

#[test]
fn schema_matches_config() {
    let root = schema();
    let actual = serde_json::to_value(SimConfig::default()).unwrap();
    compare(&root, &root, &actual, "config");
}

#[test]
fn schema_is_closed() {
    let root = schema();
    assert_eq!(root["additionalProperties"], Value::Bool(false));
    for (k, v) in root["properties"].as_object().unwrap() {
        if v.get("properties").is_some() {
            assert_eq!(v["additionalProperties"], Value::Bool(false), "{k}");
        }
    }
}

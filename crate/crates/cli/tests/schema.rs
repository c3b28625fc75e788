//! The shipped JSON schema documents every field the presets set.

use serde_json::Value;

use krf_cli::config::Preset;
use krf_cli::presets;

fn check(value: &Value, schema: &Value, root: &Value, path: &str, missing: &mut Vec<String>) {
    let schema = match schema.get("$ref").and_then(Value::as_str) {
        Some(r) => root.pointer(r.trim_start_matches('#')).expect("resolvable $ref"),
        None => schema,
    };
    let Value::Object(fields) = value else { return };
    let Some(props) = schema.get("properties") else {
        // Variant objects such as {"cov_deriv_rm": 2} sit under oneOf.
        if schema.get("oneOf").is_none() {
            missing.push(path.to_string());
        }
        return;
    };
    for (key, v) in fields {
        let here = if path.is_empty() { key.clone() } else { format!("{path}.{key}") };
        match props.get(key) {
            Some(sub) => match (v, sub.get("items")) {
                (Value::Array(items), Some(item_schema)) => {
                    for item in items {
                        check(item, item_schema, root, &here, missing);
                    }
                }
                _ => check(v, sub, root, &here, missing),
            },
            None => missing.push(here),
        }
    }
}

#[test]
fn schema_covers_every_preset_field() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/config.schema.json")).unwrap();
    let schema: Value = serde_json::from_str(&text).unwrap();
    for p in Preset::ALL {
        let cfg: Value = serde_json::from_str(&presets::config(p).to_json()).unwrap();
        let mut missing = Vec::new();
        check(&cfg, &schema, &schema, "", &mut missing);
        assert!(missing.is_empty(), "{}: fields missing from the schema: {missing:?}", p.name());
        let names = schema["properties"]["preset"]["enum"].as_array().unwrap();
        assert!(names.iter().any(|n| n == p.name()));
    }
}

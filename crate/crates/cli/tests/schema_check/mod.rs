//! Minimal validator for the JSON Schema subset used by the shipped schemas:
//! `type`, `required`, `properties`, `additionalProperties: false`, `items`
//! and local `$ref`s into `$defs`.

use serde_json::Value;

pub fn load(name: &str) -> Value {
    let path = format!("{}/schema/{name}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    serde_json::from_str(&text).unwrap()
}

fn type_matches(expected: &str, value: &Value) -> bool {
    match expected {
        "object" => value.is_object(),
        "array" => value.is_array(),
        "string" => value.is_string(),
        "boolean" => value.is_boolean(),
        "null" => value.is_null(),
        "number" => value.is_number(),
        "integer" => value.is_u64() || value.is_i64(),
        other => panic!("unsupported schema type {other}"),
    }
}

/// Returns every violation found, each prefixed with its JSON path.
pub fn validate(root: &Value, schema: &Value, value: &Value, path: &str, errors: &mut Vec<String>) {
    if let Some(reference) = schema.get("$ref").and_then(Value::as_str) {
        let name = reference
            .strip_prefix("#/$defs/")
            .unwrap_or_else(|| panic!("unsupported $ref {reference}"));
        return validate(root, &root["$defs"][name], value, path, errors);
    }
    if let Some(t) = schema.get("type") {
        let ok = match t {
            Value::String(s) => type_matches(s, value),
            Value::Array(options) => options.iter().any(|o| type_matches(o.as_str().unwrap(), value)),
            _ => panic!("bad type keyword at {path}"),
        };
        if !ok {
            errors.push(format!("{path}: expected {t}, got {value}"));
            return;
        }
    }
    if let Value::Object(map) = value {
        for key in schema.get("required").and_then(Value::as_array).into_iter().flatten() {
            let key = key.as_str().unwrap();
            if !map.contains_key(key) {
                errors.push(format!("{path}: missing `{key}`"));
            }
        }
        let props = schema.get("properties").and_then(Value::as_object);
        for (key, child) in map {
            match props.and_then(|p| p.get(key)) {
                Some(sub) => validate(root, sub, child, &format!("{path}.{key}"), errors),
                None => {
                    if schema.get("additionalProperties") == Some(&Value::Bool(false)) {
                        errors.push(format!("{path}: unexpected `{key}`"));
                    }
                }
            }
        }
    }
    if let (Value::Array(items), Some(item_schema)) = (value, schema.get("items")) {
        for (i, item) in items.iter().enumerate() {
            validate(root, item_schema, item, &format!("{path}[{i}]"), errors);
        }
    }
}

pub fn assert_valid(schema_name: &str, value: &Value) {
    let schema = load(schema_name);
    let mut errors = Vec::new();
    validate(&schema, &schema, value, "$", &mut errors);
    assert!(errors.is_empty(), "{schema_name}: {errors:#?}");
}

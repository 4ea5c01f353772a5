//! `--override key=value` edits applied to a scenario's document form.

use aerofed_core::wire::{self, Document};
use aerofed_core::ScenarioSpec;
use serde_json::Value;

use crate::Failure;

/// Applies every override and re-validates the result.
pub fn apply(spec: ScenarioSpec, items: &[String]) -> Result<ScenarioSpec, Failure> {
    if items.is_empty() {
        return Ok(spec);
    }
    let mut doc = serde_json::to_value(spec.to_record()).expect("scenario records serialize");
    for item in items {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("override `{item}` is not KEY=VALUE")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
        let path: Vec<&str> = key.split('.').collect();
        if key.is_empty() || path.contains(&"") {
            return Err(Failure::Usage(format!("override key `{key}` is empty")));
        }
        if path[0] == "schema_version" {
            return Err(Failure::Usage("schema_version cannot be overridden".into()));
        }
        let hits = set(&mut doc, &path, &value);
        if hits == 0 {
            return Err(Failure::Usage(format!(
                "override key `{key}` matches no scenario field"
            )));
        }
    }
    let bytes = serde_json::to_vec(&doc).expect("values serialize");
    wire::parse::<ScenarioSpec>(&bytes)
        .map_err(|e| Failure::Usage(format!("scenario after overrides: {e}")))
}

/// Sets `value` at every location matched by `path`; returns how many matched.
fn set(node: &mut Value, path: &[&str], value: &Value) -> usize {
    let Some((head, rest)) = path.split_first() else {
        *node = value.clone();
        return 1;
    };
    match node {
        Value::Object(map) => match map.get_mut(*head) {
            Some(child) => set(child, rest, value),
            // Optional fields absent from the emitted record may still be set.
            None if rest.is_empty() && is_optional_field(head) => {
                map.insert((*head).to_owned(), value.clone());
                1
            }
            None => 0,
        },
        Value::Array(items) if *head == "*" => items.iter_mut().map(|c| set(c, rest, value)).sum(),
        Value::Array(items) => match head.parse::<usize>().ok().and_then(|i| items.get_mut(i)) {
            Some(child) => set(child, rest, value),
            None => 0,
        },
        _ => 0,
    }
}

fn is_optional_field(name: &str) -> bool {
    matches!(name, "sweep_cache_budget_bytes")
}

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Key under which behavior errors are appended.
pub const ERRORS_KEY: &str = "errors";

/// Data shared by every node of one process-model execution.
///
/// Values are JSON trees so behaviors can store scalars, lists and nested
/// maps without the engine knowing their types. Keys iterate in sorted
/// order, which keeps traces reproducible.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DataContext {
    bindings: BTreeMap<String, Value>,
}

impl DataContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.bindings.get(key)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.bindings.contains_key(key)
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Into<Value>) {
        self.bindings.insert(key.into(), value.into());
    }

    pub fn remove(&mut self, key: &str) -> Option<Value> {
        self.bindings.remove(key)
    }

    /// Stores any serializable value under `key`.
    pub fn put<T: Serialize>(&mut self, key: impl Into<String>, value: &T) {
        let value = serde_json::to_value(value).unwrap_or(Value::Null);
        self.bindings.insert(key.into(), value);
    }

    /// Reads `key` back as `T`; `None` if absent or of another shape.
    pub fn read<T: DeserializeOwned>(&self, key: &str) -> Option<T> {
        self.bindings
            .get(key)
            .and_then(|v| serde_json::from_value(v.clone()).ok())
    }

    /// True iff `key` holds the boolean `true`.
    pub fn flag(&self, key: &str) -> bool {
        matches!(self.bindings.get(key), Some(Value::Bool(true)))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.bindings.keys().map(String::as_str)
    }

    pub fn push_error(&mut self, node: &str, message: &str) {
        let entry = serde_json::json!({ "node": node, "error": message });
        match self.bindings.get_mut(ERRORS_KEY) {
            Some(Value::Array(list)) => list.push(entry),
            _ => {
                self.bindings
                    .insert(ERRORS_KEY.to_string(), Value::Array(vec![entry]));
            }
        }
    }

    pub fn errors(&self) -> Vec<(String, String)> {
        match self.bindings.get(ERRORS_KEY) {
            Some(Value::Array(list)) => list
                .iter()
                .map(|e| {
                    (
                        e["node"].as_str().unwrap_or_default().to_string(),
                        e["error"].as_str().unwrap_or_default().to_string(),
                    )
                })
                .collect(),
            _ => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn typed_round_trip_and_flags() {
        let mut ctx = DataContext::new();
        ctx.put("list", &vec![1u32, 2, 3]);
        ctx.set("on", true);
        assert_eq!(ctx.read::<Vec<u32>>("list"), Some(vec![1, 2, 3]));
        assert_eq!(ctx.read::<String>("list"), None);
        assert!(ctx.flag("on"));
        assert!(!ctx.flag("list"));
        assert!(!ctx.flag("missing"));
    }

    #[test]
    fn errors_accumulate() {
        let mut ctx = DataContext::new();
        ctx.push_error("a", "boom");
        ctx.push_error("b", "bang");
        assert_eq!(
            ctx.errors(),
            vec![
                ("a".to_string(), "boom".to_string()),
                ("b".to_string(), "bang".to_string())
            ]
        );
    }
}

//! Structured progress events, one JSON object per stderr line.
//!
//! Events are operator feedback, not run artifacts, so nothing downstream is
//! allowed to depend on them. They deliberately carry no wall-clock fields;
//! timestamps live in the run manifest and nowhere else.

use serde_json::{json, Value};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Level {
    Debug,
    Info,
    Warn,
    Error,
}

impl Level {
    fn name(self) -> &'static str {
        match self {
            Level::Debug => "debug",
            Level::Info => "info",
            Level::Warn => "warn",
            Level::Error => "error",
        }
    }
}

impl FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "debug" => Ok(Level::Debug),
            "info" => Ok(Level::Info),
            "warn" => Ok(Level::Warn),
            "error" => Ok(Level::Error),
            other => Err(format!(
                "unknown log level {other:?}; expected debug, info, warn or error"
            )),
        }
    }
}

/// Writes events at or above its minimum level to stderr.
#[derive(Debug, Clone, Copy)]
pub struct Emitter {
    min: Level,
}

impl Emitter {
    pub fn new(min: Level) -> Self {
        Self { min }
    }

    /// Emits one event line. `fields` must be a JSON object; its entries are
    /// merged next to the `level` and `event` keys.
    pub fn emit(&self, level: Level, event: &str, fields: Value) {
        if level < self.min {
            return;
        }
        let mut obj = serde_json::Map::new();
        obj.insert("level".into(), json!(level.name()));
        obj.insert("event".into(), json!(event));
        if let Value::Object(extra) = fields {
            for (k, v) in extra {
                obj.insert(k, v);
            }
        }
        eprintln!("{}", Value::Object(obj));
    }

    pub fn info(&self, event: &str, fields: Value) {
        self.emit(Level::Info, event, fields);
    }

    pub fn warn(&self, event: &str, fields: Value) {
        self.emit(Level::Warn, event, fields);
    }

    pub fn error(&self, event: &str, fields: Value) {
        self.emit(Level::Error, event, fields);
    }

    pub fn debug(&self, event: &str, fields: Value) {
        self.emit(Level::Debug, event, fields);
    }
}

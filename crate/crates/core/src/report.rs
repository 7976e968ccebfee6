//! Structured verification output shared by every module and the CLI.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// A quantity was measured; no threshold applies.
    Measured,
}

/// One verification record: what was checked, against which formula, and the outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub anchor: String,
    pub status: Status,
    pub values: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
}

impl Check {
    pub fn measured(name: impl Into<String>, anchor: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            anchor: anchor.into(),
            status: Status::Measured,
            values: BTreeMap::new(),
            witness: None,
        }
    }

    pub fn verdict(name: impl Into<String>, anchor: impl Into<String>, pass: bool) -> Self {
        let mut c = Check::measured(name, anchor);
        c.status = if pass { Status::Pass } else { Status::Fail };
        c
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.values.insert(
            key.to_string(),
            serde_json::to_value(value).unwrap_or(Value::Null),
        );
        self
    }

    pub fn with_witness(mut self, witness: impl Serialize) -> Self {
        self.witness = serde_json::to_value(witness).ok();
        self
    }

    pub fn failed(&self) -> bool {
        self.status == Status::Fail
    }
}

/// A list of checks plus the command that produced them.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: Vec<String>,
    pub records: Vec<Check>,
    /// Wall time is volatile and only present when explicitly requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u64>,
}

impl Report {
    pub fn new(command: Vec<String>) -> Self {
        Report {
            command,
            records: Vec::new(),
            wall_time_ms: None,
        }
    }

    pub fn push(&mut self, check: Check) {
        self.records.push(check);
    }

    pub fn extend(&mut self, checks: impl IntoIterator<Item = Check>) {
        self.records.extend(checks);
    }

    pub fn any_failed(&self) -> bool {
        self.records.iter().any(Check::failed)
    }
}

//! Summary JSON written by `run` and read by `report`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema: u32,
    pub generator: String,
    pub points: usize,
    pub tasks: Vec<TaskSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    /// The computation finished but a checked property did not hold.
    VerificationFailed,
    /// The task could not be computed.
    Error,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::VerificationFailed => "verification-failed",
            Status::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Series {
    /// Drops non-finite pairs, which JSON cannot hold.
    pub fn new(name: &str, x: Vec<f64>, y: Vec<f64>) -> Self {
        let (x, y) = x.into_iter().zip(y).filter(|(a, b)| a.is_finite() && b.is_finite()).unzip();
        Series { name: name.to_string(), x, y }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSummary {
    pub task: String,
    pub kind: String,
    pub status: Status,
    pub ratios: BTreeMap<String, f64>,
    pub files: Vec<String>,
    pub series: Vec<Series>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl TaskSummary {
    pub fn new(task: &str, kind: &str) -> Self {
        TaskSummary {
            task: task.to_string(),
            kind: kind.to_string(),
            status: Status::Ok,
            ratios: BTreeMap::new(),
            files: Vec::new(),
            series: Vec::new(),
            message: None,
        }
    }

    pub fn failed(task: &str, message: String) -> Self {
        let mut ts = TaskSummary::new(task, "");
        ts.status = Status::Error;
        ts.message = Some(message);
        ts
    }

    /// Non-finite values are left out.
    pub fn ratio(&mut self, key: &str, v: f64) {
        if v.is_finite() {
            self.ratios.insert(key.to_string(), v);
        }
    }
}

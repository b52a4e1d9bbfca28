use std::fmt;

use qc_core::suite::{Check, Provenance};
use serde_json::{json, Map, Value};

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or input files.
    Usage(String),
    /// A computation that could not be carried out.
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(s) | CliError::Compute(s) => f.write_str(s),
        }
    }
}

pub struct RunReport {
    pub command: &'static str,
    pub config: Value,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub sections: Vec<Value>,
    pub data: Map<String, Value>,
    pub seconds: f64,
    pub error: Option<String>,
}

impl RunReport {
    pub fn new(command: &'static str, config: Value, seed: u64) -> Self {
        RunReport { command, config, seed, checks: Vec::new(), sections: Vec::new(), data: Map::new(), seconds: 0.0, error: None }
    }

    pub fn pass(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.pass)
    }

    pub fn push(&mut self, name: String, pass: bool, measured: String, tolerance: String, provenance: Provenance) {
        println!("{}: {name}: {measured}", if pass { "pass" } else { "FAIL" });
        self.checks.push(Check { name, pass, measured, tolerance, provenance, counterexample: None });
    }

    pub fn to_json(&self) -> Value {
        json!({
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "pass": self.pass(),
            "error": self.error,
            "wall_seconds": self.seconds,
            "checks": self.checks.iter().map(|c| c.to_json()).collect::<Vec<_>>(),
            "sections": self.sections,
            "data": self.data,
        })
    }
}

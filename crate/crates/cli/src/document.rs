//! JSON result documents.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::problem::Diagnostic;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Integer(i64),
    Real(f64),
    Complex([f64; 2]),
    Reals(Vec<f64>),
    Complexes(Vec<[f64; 2]>),
    RealMatrix(Vec<Vec<f64>>),
    ComplexMatrix(Vec<Vec<[f64; 2]>>),
    Text(String),
    Bool(bool),
}

impl Value {
    pub fn complex(z: Complex64) -> Self {
        Value::Complex([z.re, z.im])
    }

    pub fn complexes(zs: &[Complex64]) -> Self {
        Value::Complexes(zs.iter().map(|z| [z.re, z.im]).collect())
    }

    pub fn real_matrix(m: &DMatrix<f64>) -> Self {
        Value::RealMatrix((0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NamedValue {
    pub name: String,
    pub value: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// Measured defect; `None` for purely logical checks.
    pub defect: Option<f64>,
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommandEcho {
    pub verb: String,
    pub problem: String,
    pub options: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorReport {
    pub kind: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<Diagnostic>,
}

/// Output of every command. Everything except `timings` is a deterministic
/// function of the input file, the flags and the seed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultDocument {
    pub command: CommandEcho,
    pub config_digest: Option<String>,
    pub results: Vec<NamedValue>,
    pub checks: Vec<Check>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorReport>,
    pub timings: BTreeMap<String, f64>,
}

impl ResultDocument {
    pub fn new(command: CommandEcho) -> Self {
        Self {
            command,
            config_digest: None,
            results: Vec::new(),
            checks: Vec::new(),
            pass: true,
            error: None,
            timings: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, value: Value) {
        self.results.push(NamedValue { name: name.into(), value });
    }

    /// Records a check `defect <= threshold`.
    pub fn check(&mut self, name: impl Into<String>, defect: f64, threshold: f64) -> bool {
        let pass = defect <= threshold;
        self.checks.push(Check { name: name.into(), pass, defect: Some(defect), threshold: Some(threshold), note: None });
        self.pass &= pass;
        pass
    }

    pub fn flag(&mut self, name: impl Into<String>, pass: bool, note: Option<String>) -> bool {
        self.checks.push(Check { name: name.into(), pass, defect: None, threshold: None, note });
        self.pass &= pass;
        pass
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes") + "\n"
    }
}

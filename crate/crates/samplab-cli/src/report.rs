use std::fmt;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// Failure classes and their process exit codes.
#[derive(Debug)]
pub enum Failure {
    /// Malformed or inconsistent configuration or input; exit 2.
    Config(String),
    /// A size cap or search budget was hit; exit 3. The message carries
    /// its own prefix.
    Budget(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Budget(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Budget(m) => f.write_str(m),
        }
    }
}

impl From<samplab::Error> for Failure {
    fn from(e: samplab::Error) -> Self {
        match e {
            samplab::Error::Budget(_) | samplab::Error::SizeCap(_) => Failure::Budget(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

pub type Outcome<T> = Result<T, Failure>;

pub fn config_err(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

/// How a completed run ended; budget exhaustion and errors are `Failure`s.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Informational command, nothing to certify.
    Ok,
    /// The claim checked by the command holds.
    Holds,
    /// The claim checked by the command fails; exit 1.
    Violated,
    /// The search stopped on its budget without success; exit 3.
    OutOfBudget,
}

impl Verdict {
    pub fn from_holds(holds: bool) -> Self {
        if holds {
            Verdict::Holds
        } else {
            Verdict::Violated
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Verdict::Ok | Verdict::Holds => 0,
            Verdict::Violated => 1,
            Verdict::OutOfBudget => 3,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Verdict::Ok => "ok",
            Verdict::Holds => "holds",
            Verdict::Violated => "violated",
            Verdict::OutOfBudget => "budget_exhausted",
        }
    }
}

struct Input {
    role: String,
    path: String,
    sha256: String,
}

/// Reads input files, remembering a content hash of each for the report.
#[derive(Default)]
pub struct Inputs {
    seen: Vec<Input>,
}

impl Inputs {
    pub fn bytes(&mut self, role: &str, path: &Path) -> Outcome<Vec<u8>> {
        let data = fs::read(path).map_err(|e| config_err(format!("cannot read {} ({role}): {e}", path.display())))?;
        self.seen.push(Input { role: role.to_string(), path: path.display().to_string(), sha256: hex::encode(Sha256::digest(&data)) });
        Ok(data)
    }

    pub fn json<T: DeserializeOwned>(&mut self, role: &str, path: &Path) -> Outcome<T> {
        let data = self.bytes(role, path)?;
        serde_json::from_slice(&data).map_err(|e| config_err(format!("{}: {e}", path.display())))
    }

    fn to_value(&self) -> Value {
        Value::Array(self.seen.iter().map(|i| json!({"role": i.role, "path": i.path, "sha256": i.sha256})).collect())
    }
}

/// A finished command: its JSON result and an optional CSV rendering.
pub struct Done {
    pub verdict: Verdict,
    pub result: Value,
    pub csv: Option<String>,
}

impl Done {
    pub fn new(verdict: Verdict, result: impl Serialize) -> Outcome<Self> {
        let result = serde_json::to_value(result).map_err(|e| config_err(e.to_string()))?;
        Ok(Done { verdict, result, csv: None })
    }

    pub fn with_csv(mut self, csv: String) -> Self {
        self.csv = Some(csv);
        self
    }
}

/// The report document: the resolved configuration (everything that
/// affects the result, so not the worker count or output location), the
/// hashed inputs, the verdict and the result.
pub fn render(config: &Value, inputs: &Inputs, done: &Done) -> String {
    let doc = json!({
        "config": config,
        "inputs": inputs.to_value(),
        "verdict": done.verdict.label(),
        "result": done.result,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
    s.push('\n');
    s
}

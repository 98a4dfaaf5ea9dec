use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Found,
    None,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Pass | Status::Found => 0,
            Status::Fail | Status::None => 1,
        }
    }
}

/// Machine-readable outcome of one command.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs_digest: String,
    pub status: Status,
    pub exit_status: u8,
    pub results: Value,
}

impl RunReport {
    pub fn new(command: &str, inputs: &[Vec<u8>], status: Status, results: Value) -> Self {
        RunReport {
            command: command.to_string(),
            inputs_digest: digest(inputs),
            status,
            exit_status: status.exit_code(),
            results,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

/// SHA-256 over every input, each prefixed by its length.
pub fn digest(inputs: &[Vec<u8>]) -> String {
    let mut h = Sha256::new();
    for bytes in inputs {
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    hex::encode(h.finalize())
}

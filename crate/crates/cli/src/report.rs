//! Report envelope and exit codes.

use std::time::{SystemTime, UNIX_EPOCH};

use oplocal_core::Error;
use serde::Serialize;
use serde_json::Value;

pub const EXIT_HOLDS: u8 = 0;
pub const EXIT_FAILS: u8 = 1;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_CAP: u8 = 3;

/// Result of a command that ran to completion.
pub struct Outcome {
    pub holds: bool,
    pub result: Value,
}

impl Outcome {
    pub fn new(holds: bool, result: Value) -> Self {
        Outcome { holds, result }
    }
}

#[derive(Debug)]
pub enum Failure {
    /// Bad flags, unreadable or invalid theory file.
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<String> for Failure {
    fn from(m: String) -> Self {
        Failure::Usage(m)
    }
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_INVALID,
            Failure::Core(Error::CapExceeded(_)) => EXIT_CAP,
            // the property or construction could not be established
            Failure::Core(Error::NotCommuting(_) | Error::PreconditionFailed(_) | Error::InvariantViolation(_)) => {
                EXIT_FAILS
            }
            Failure::Core(_) => EXIT_INVALID,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "usage",
            Failure::Core(e) => match e {
                Error::CapExceeded(_) => "cap_exceeded",
                Error::NotCommuting(_) => "not_commuting",
                Error::PreconditionFailed(_) => "precondition_failed",
                Error::InvariantViolation(_) => "invariant_violation",
                _ => "validation",
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => m.clone(),
            Failure::Core(e) => e.to_string(),
        }
    }
}

#[derive(Serialize)]
struct ErrorBody {
    kind: &'static str,
    message: String,
}

#[derive(Serialize)]
pub struct Envelope {
    command: String,
    status: &'static str,
    exit_code: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<ErrorBody>,
    /// Unix seconds; omitted with `--no-timestamp`.
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_at: Option<u64>,
}

impl Envelope {
    pub fn build(command: &str, outcome: Result<Outcome, Failure>, timestamp: bool) -> Self {
        let generated_at = timestamp.then(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()));
        match outcome {
            Ok(o) => {
                let (status, exit_code) = if o.holds { ("holds", EXIT_HOLDS) } else { ("fails", EXIT_FAILS) };
                Envelope {
                    command: command.into(),
                    status,
                    exit_code,
                    result: Some(o.result),
                    error: None,
                    generated_at,
                }
            }
            Err(f) => {
                let exit_code = f.exit_code();
                let status = match exit_code {
                    EXIT_FAILS => "fails",
                    EXIT_CAP => "cap_exceeded",
                    _ => "invalid",
                };
                Envelope {
                    command: command.into(),
                    status,
                    exit_code,
                    result: None,
                    error: Some(ErrorBody { kind: f.kind(), message: f.message() }),
                    generated_at,
                }
            }
        }
    }

    pub fn exit_code(&self) -> u8 {
        self.exit_code
    }
}

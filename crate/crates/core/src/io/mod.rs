//! Instance files, random instance generators and CSV run reports.
//!
//! Instances are JSON envelopes `{"kind": ..., "version": 1, "payload": ...}`
//! whose payload follows the serde layout of [`PoolingNetwork`],
//! [`StateTaskNetwork`] or [`HensInstance`]. Infinite bounds are written as
//! the strings `"inf"` and `"-inf"`.

mod generate;
pub mod inf;
mod report;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::hens::{validate_instance, HensInstance};
use crate::pooling::{validate_network, PoolingNetwork};
use crate::scheduling::{validate_stn, StateTaskNetwork};

pub use generate::{
    generate, random_hens, random_pooling, random_single_interval, random_stn, GenSpec, HensShape, PoolingShape,
    StnShape,
};
pub use report::{format_number, write_report, RunRecord, REPORT_HEADER};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IoError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("unsupported schema version {0}, expected {SCHEMA_VERSION}")]
    Version(u32),
    #[error("invalid {kind} instance: {}", .errors.join("; "))]
    Invalid { kind: InstanceKind, errors: Vec<String> },
    #[error("invalid generator parameters: {0}")]
    BadParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    Pooling,
    Stn,
    Hens,
}

impl std::fmt::Display for InstanceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InstanceKind::Pooling => "pooling",
            InstanceKind::Stn => "stn",
            InstanceKind::Hens => "hens",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Pooling(PoolingNetwork),
    Stn(StateTaskNetwork),
    Hens(HensInstance),
}

impl Instance {
    pub fn kind(&self) -> InstanceKind {
        match self {
            Instance::Pooling(_) => InstanceKind::Pooling,
            Instance::Stn(_) => InstanceKind::Stn,
            Instance::Hens(_) => InstanceKind::Hens,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceEnvelope {
    pub version: u32,
    pub instance: Instance,
}

impl InstanceEnvelope {
    pub fn new(instance: Instance) -> Self {
        InstanceEnvelope { version: SCHEMA_VERSION, instance }
    }

    pub fn kind(&self) -> InstanceKind {
        self.instance.kind()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnvelope {
    kind: InstanceKind,
    version: u32,
    payload: Value,
}

fn schema<T: serde::de::DeserializeOwned>(value: Value, prefix: &str) -> Result<T, IoError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = match (prefix.is_empty(), inner.as_str()) {
            (true, _) => inner.clone(),
            (false, ".") => prefix.to_string(),
            (false, _) => format!("{prefix}.{inner}"),
        };
        IoError::Schema { path, message: e.into_inner().to_string() }
    })
}

/// Parses and validates an instance file.
pub fn parse_instance(text: &str) -> Result<InstanceEnvelope, IoError> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| IoError::Parse { line: e.line(), column: e.column(), message: e.to_string() })?;
    let raw: RawEnvelope = schema(value, "")?;
    if raw.version != SCHEMA_VERSION {
        return Err(IoError::Version(raw.version));
    }
    let instance = match raw.kind {
        InstanceKind::Pooling => {
            let net: PoolingNetwork = schema(raw.payload, "payload")?;
            let report = validate_network(&net);
            if !report.is_valid() {
                return Err(IoError::Invalid { kind: raw.kind, errors: report.errors });
            }
            Instance::Pooling(net)
        }
        InstanceKind::Stn => {
            let stn: StateTaskNetwork = schema(raw.payload, "payload")?;
            let report = validate_stn(&stn);
            if !report.is_valid() {
                return Err(IoError::Invalid { kind: raw.kind, errors: report.errors });
            }
            Instance::Stn(stn)
        }
        InstanceKind::Hens => {
            let inst: HensInstance = schema(raw.payload, "payload")?;
            let errors = validate_instance(&inst);
            if !errors.is_empty() {
                return Err(IoError::Invalid { kind: raw.kind, errors });
            }
            Instance::Hens(inst)
        }
    };
    Ok(InstanceEnvelope { version: raw.version, instance })
}

/// Canonical JSON text: keys sorted, two-space indentation, trailing
/// newline.
pub fn write_instance(envelope: &InstanceEnvelope) -> String {
    let payload = match &envelope.instance {
        Instance::Pooling(n) => serde_json::to_value(n),
        Instance::Stn(s) => serde_json::to_value(s),
        Instance::Hens(h) => serde_json::to_value(h),
    }
    .expect("instance types serialize to JSON");
    let doc = serde_json::json!({
        "kind": envelope.kind(),
        "version": envelope.version,
        "payload": payload,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("JSON value serializes");
    text.push('\n');
    text
}

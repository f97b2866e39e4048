//! Published JSON schemas and validation against them.

use std::sync::OnceLock;

use jsonschema::Validator;
use serde_json::Value;

use crate::error::CliError;

pub const CONFIG_SCHEMA: &str = include_str!("../schema/config.schema.json");
pub const RECORDS_SCHEMA: &str = include_str!("../schema/records.schema.json");
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");
pub const SURFACE_SCHEMA: &str = include_str!("../schema/surface.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemaKind {
    Config,
    Records,
    Report,
    Surface,
}

impl SchemaKind {
    fn source(self) -> &'static str {
        match self {
            Self::Config => CONFIG_SCHEMA,
            Self::Records => RECORDS_SCHEMA,
            Self::Report => REPORT_SCHEMA,
            Self::Surface => SURFACE_SCHEMA,
        }
    }

    fn validator(self) -> &'static Validator {
        static CELLS: [OnceLock<Validator>; 4] = [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
        CELLS[self as usize].get_or_init(|| {
            let schema: Value = serde_json::from_str(self.source()).expect("bundled schema is valid JSON");
            jsonschema::validator_for(&schema).expect("bundled schema compiles")
        })
    }
}

/// Every violation, one per line, prefixed by its JSON pointer.
pub fn validate(kind: SchemaKind, value: &Value) -> Result<(), CliError> {
    let problems: Vec<String> =
        kind.validator().iter_errors(value).map(|e| {
            let at = e.instance_path().to_string();
            format!("{}: {}", if at.is_empty() { "/" } else { &at }, e)
        }).collect();
    if problems.is_empty() {
        Ok(())
    } else {
        Err(CliError::Schema(problems.join("\n")))
    }
}

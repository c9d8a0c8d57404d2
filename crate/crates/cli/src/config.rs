//! Config envelopes, global fields and the error type that maps to exit codes.

use std::fmt;
use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Fields accepted by every command.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Globals {
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Unreadable, malformed or semantically invalid configuration.
    Config(String),
    /// The model has no feasible point.
    Infeasible(String),
    /// A verified invariant failed.
    Invariant(String),
    /// Numerical or I/O failure during execution.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Invariant(_) => 4,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible: {m}"),
            CliError::Invariant(m) => write!(f, "invariant failure: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<oclab::Error> for CliError {
    fn from(e: oclab::Error) -> Self {
        use oclab::Error::*;
        match e {
            NotConverged { .. } | PivotLimit => CliError::Runtime(e.to_string()),
            // everything else traces back to the values in the config
            _ => CliError::Config(e.to_string()),
        }
    }
}

fn config_err(e: impl fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn take_globals(obj: &mut Map<String, Value>) -> Result<Globals, CliError> {
    let mut g = Globals::default();
    if let Some(v) = obj.remove("seed") {
        g.seed = u64::deserialize(v).map_err(|e| config_err(format!("seed: {e}")))?;
    }
    if let Some(v) = obj.remove("outputPath") {
        g.output_path = Some(PathBuf::deserialize(v).map_err(|e| config_err(format!("outputPath: {e}")))?);
    }
    if let Some(v) = obj.remove("format") {
        g.format = Format::deserialize(v).map_err(|e| config_err(format!("format: {e}")))?;
    }
    Ok(g)
}

/// Split a config document into its global fields and the command body.
/// With `keep_seed` the seed is also left in the body for commands whose
/// own config carries it.
pub fn parse<C: DeserializeOwned>(text: &str, keep_seed: bool) -> Result<(Globals, C), CliError> {
    let value: Value = serde_json::from_str(text).map_err(config_err)?;
    let Value::Object(mut obj) = value else {
        return Err(config_err("config must be a JSON object"));
    };
    let globals = take_globals(&mut obj)?;
    if keep_seed {
        obj.insert("seed".into(), Value::from(globals.seed));
    }
    let body = C::deserialize(Value::Object(obj)).map_err(config_err)?;
    Ok((globals, body))
}

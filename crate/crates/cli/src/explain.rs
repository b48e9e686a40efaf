//! `ifgen explain`: the cost breakdown of an existing spec against a log.

use std::path::Path;

use ifgen::cost::{total_cost, CostBreakdown, CostError};
use ifgen::sql::parse_log;
use ifgen::widgets::{InterfaceSpec, SpecError};

use crate::config;
use crate::error::CliError;

pub fn load_spec(path: &Path) -> Result<InterfaceSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let spec: InterfaceSpec =
        serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    Ok(spec)
}

/// Validation failures other than screen fit; an oversized layout is
/// reported as an INVALID total instead.
fn check(spec: &InterfaceSpec) -> Result<(), CliError> {
    match spec.validate() {
        Ok(()) | Err(SpecError::DoesNotFit { .. }) => Ok(()),
        Err(e) => Err(CliError::Inexpressible(format!("invalid spec: {e}"))),
    }
}

pub fn explain(spec: &InterfaceSpec, log_text: &str, config: Option<&Path>) -> Result<CostBreakdown, CliError> {
    check(spec)?;
    let log = parse_log(log_text)?;
    let model = config::load(config)?.model.with_screen(spec.screen);
    total_cost(spec, &log, &model).map_err(|e| match e {
        CostError::Inexpressible(q) => {
            CliError::Inexpressible(format!("query is not expressible by the interface: {q}"))
        }
        other => CliError::Inexpressible(other.to_string()),
    })
}

pub fn cmd_explain(spec: &Path, log: &Path, config: Option<&Path>) -> Result<CostBreakdown, CliError> {
    let spec = load_spec(spec)?;
    let text = std::fs::read_to_string(log).map_err(|e| CliError::io(log, e))?;
    let b = explain(&spec, &text, config)?;
    let out = serde_json::to_string_pretty(&b).map_err(|e| CliError::Internal(e.to_string()))?;
    println!("{out}");
    Ok(b)
}

//! Run configuration: the cost-model TOML, an optional `[search]` table, and
//! command-line overrides.

use std::path::Path;

use sha2::{Digest, Sha256};

use ifgen::cost::{CostModel, DEFAULT_COST_MODEL_TOML};
use ifgen::search::SearchConfig;
use ifgen::widgets::Screen;

use crate::error::CliError;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: CostModel,
    pub search: SearchConfig,
    /// Hex SHA-256 of the config file, or of the built-in model.
    pub digest: String,
}

/// Flags that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub screen: Option<Screen>,
    pub budget: Option<f64>,
    pub iterations: Option<u64>,
    pub seed: Option<u64>,
    pub k: Option<usize>,
    pub c: Option<f64>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Parse config text. Top-level keys are the cost model; `[search]` holds
/// search settings.
pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    let search = match table.remove("search") {
        Some(v) => v.try_into().map_err(|e: toml::de::Error| CliError::Config(format!("[search]: {e}")))?,
        None => SearchConfig::default(),
    };
    let model: CostModel = table.try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    model.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(RunConfig {
        model,
        search,
        digest: sha256_hex(text.as_bytes()),
    })
}

pub fn load(path: Option<&Path>) -> Result<RunConfig, CliError> {
    match path {
        None => parse(DEFAULT_COST_MODEL_TOML),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            parse(&text).map_err(|e| match e {
                CliError::Config(m) => CliError::Config(format!("{}: {m}", p.display())),
                other => other,
            })
        }
    }
}

impl RunConfig {
    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(s) = o.screen {
            self.model.screen = s;
        }
        if let Some(b) = o.budget {
            self.search.budget_secs = b;
        }
        if let Some(n) = o.iterations {
            self.search.iterations = Some(n);
        }
        if let Some(s) = o.seed {
            self.search.seed = s;
        }
        if let Some(k) = o.k {
            self.search.k = k;
        }
        if let Some(c) = o.c {
            self.search.c = c;
        }
        self.search.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.model.screen.width == 0 || self.model.screen.height == 0 {
            return Err(CliError::Config("screen must be at least 1x1".into()));
        }
        Ok(())
    }
}

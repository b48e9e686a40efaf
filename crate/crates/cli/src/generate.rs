//! `ifgen generate`: run the search on a query log and write the InterfaceSpec.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ifgen::search::{run_search, FinalMethod, SearchConfig, SearchResult};
use ifgen::sql::parse_log;

use crate::config::{self, sha256_hex, Overrides};
use crate::error::CliError;

/// Everything needed to rerun a generation and check its output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub log_path: PathBuf,
    pub log_digest: String,
    pub config_path: Option<PathBuf>,
    pub config_digest: String,
    pub search: SearchConfig,
    pub spec_digest: String,
    pub best_cost: Option<f64>,
    pub wall_secs: f64,
    pub iterations: u64,
    pub rollouts: u64,
    pub states: usize,
    pub final_method: FinalMethod,
}

#[derive(Debug, Clone, Default)]
pub struct GenerateArgs {
    pub log: PathBuf,
    pub config: Option<PathBuf>,
    pub overrides: Overrides,
    /// Spec destination; stdout when absent.
    pub out: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    /// JSON-lines search trace.
    pub trace: Option<PathBuf>,
    /// Rerun the manifest's search with its iteration count.
    pub replay: Option<PathBuf>,
    pub explain: bool,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn json<T: Serialize>(v: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(v).map_err(|e| CliError::Internal(e.to_string()))
}

pub fn load_manifest(path: &Path) -> Result<RunManifest, CliError> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

pub fn run(args: &GenerateArgs) -> Result<(SearchResult, RunManifest), CliError> {
    let text = read(&args.log)?;
    let log_digest = sha256_hex(text.as_bytes());
    let log = parse_log(&text)?;
    let mut cfg = config::load(args.config.as_deref())?;

    let replay = args.replay.as_deref().map(load_manifest).transpose()?;
    if let Some(m) = &replay {
        if m.log_digest != log_digest {
            return Err(CliError::Config(format!(
                "log digest {log_digest} does not match the manifest's {}",
                m.log_digest
            )));
        }
        if m.config_digest != cfg.digest {
            return Err(CliError::Config(format!(
                "config digest {} does not match the manifest's {}",
                cfg.digest, m.config_digest
            )));
        }
        cfg.search = m.search.clone();
        cfg.search.iterations = Some(m.iterations);
    }
    cfg.apply(&args.overrides)?;

    let result = run_search(&log, &cfg.model, &cfg.search)?;
    let best = result.breakdown.total.value();
    let manifest = RunManifest {
        log_path: args.log.clone(),
        log_digest,
        config_path: args.config.clone(),
        config_digest: cfg.digest.clone(),
        search: cfg.search.clone(),
        spec_digest: result.spec.digest(),
        best_cost: best.is_finite().then_some(best),
        wall_secs: result.elapsed_secs,
        iterations: result.iterations,
        rollouts: result.rollouts,
        states: result.states,
        final_method: result.final_method,
    };
    if let Some(m) = &replay {
        if m.spec_digest != manifest.spec_digest {
            return Err(CliError::Internal(format!(
                "replay produced spec {} but the manifest records {}",
                manifest.spec_digest, m.spec_digest
            )));
        }
    }
    Ok((result, manifest))
}

/// Run and write every requested output.
pub fn cmd_generate(args: &GenerateArgs) -> Result<RunManifest, CliError> {
    let (result, manifest) = run(args)?;
    let spec = json(&result.spec)?;
    match &args.out {
        Some(p) => write(p, &spec)?,
        None => println!("{spec}"),
    }
    if let Some(p) = &args.manifest {
        write(p, &json(&manifest)?)?;
    }
    if let Some(p) = &args.trace {
        let mut lines = String::new();
        for t in &result.trace {
            lines += &serde_json::to_string(t).map_err(|e| CliError::Internal(e.to_string()))?;
            lines.push('\n');
        }
        write(p, &lines)?;
    }
    let mut err = std::io::stderr().lock();
    if args.explain {
        let _ = writeln!(err, "{}", json(&result.breakdown)?);
    }
    if manifest.best_cost.is_none() {
        let _ = writeln!(err, "warning: no interface found fits the {} screen", result.spec.screen);
    }
    Ok(manifest)
}

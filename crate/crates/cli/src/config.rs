//! Run configuration: JSON config file overlaid by command-line flags.
//!
//! A config file holds the global keys (`seed`, `threads`, `out_dir`) at the
//! top level and each command's keys under the command name:
//!
//! ```json
//! { "seed": 7, "synth": { "model": "afbf.json", "n": 512 } }
//! ```
//!
//! The resolved-config snapshot written next to every output has the same
//! shape, so it can be passed back through `--config` to redo the run.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub const THREADS_ENV: &str = "ORIFIELD_THREADS";

#[derive(Debug, Clone, Default, Serialize, Deserialize, clap::Args)]
pub struct GlobalArgs {
    /// Seed of every random draw.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Worker threads (falls back to ORIFIELD_THREADS, then all cores).
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Directory receiving every output file.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// JSON config file; flags take precedence over its values.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

/// Globals after defaults are applied.
#[derive(Debug, Clone, Serialize)]
pub struct Globals {
    pub seed: u64,
    pub threads: Option<usize>,
    pub out_dir: PathBuf,
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{} is not valid JSON", path.display()))
}

/// Loads the config file, or an empty object when none is given.
pub fn load(path: Option<&Path>) -> Result<Map<String, Value>> {
    let Some(path) = path else { return Ok(Map::new()) };
    match read_json(path)? {
        Value::Object(m) => Ok(m),
        _ => bail!("config {} must hold a JSON object", path.display()),
    }
}

/// Fields set in `flags` replace those of `base`; the result is parsed back.
pub fn overlay<T: Serialize + DeserializeOwned>(base: Option<&Value>, flags: &T) -> Result<T> {
    let mut merged = match base {
        Some(Value::Object(m)) => m.clone(),
        Some(Value::Null) | None => Map::new(),
        Some(_) => bail!("command section of the config must be a JSON object"),
    };
    if let Value::Object(set) = serde_json::to_value(flags)? {
        for (k, v) in set {
            if !v.is_null() {
                merged.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(merged)).context("invalid configuration")
}

pub fn resolve_globals(file: &Map<String, Value>, flags: &GlobalArgs) -> Result<Globals> {
    let mut top = Map::new();
    for key in ["seed", "threads", "out_dir"] {
        if let Some(v) = file.get(key) {
            top.insert(key.to_string(), v.clone());
        }
    }
    let g: GlobalArgs = overlay(Some(&Value::Object(top)), flags)?;
    let threads = match g.threads {
        Some(t) => Some(t),
        None => match std::env::var(THREADS_ENV) {
            Ok(s) if !s.trim().is_empty() => {
                Some(s.trim().parse().with_context(|| format!("{THREADS_ENV}={s} is not a thread count"))?)
            }
            _ => None,
        },
    };
    if threads == Some(0) {
        bail!("thread count must be positive");
    }
    Ok(Globals { seed: g.seed.unwrap_or(0), threads, out_dir: g.out_dir.unwrap_or_else(|| PathBuf::from(".")) })
}

/// Writes `<stem>.run.json` with the globals and the resolved command section.
pub fn write_snapshot(stem: &Path, command: &str, globals: &Globals, resolved: &impl Serialize) -> Result<PathBuf> {
    let mut doc = Map::new();
    doc.insert("command".into(), Value::from(command));
    doc.insert("version".into(), Value::from(env!("CARGO_PKG_VERSION")));
    doc.insert("seed".into(), Value::from(globals.seed));
    if let Some(t) = globals.threads {
        doc.insert("threads".into(), Value::from(t));
    }
    doc.insert("out_dir".into(), serde_json::to_value(&globals.out_dir)?);
    doc.insert(command.into(), serde_json::to_value(resolved)?);
    let path = with_suffix(stem, ".run.json");
    fs::write(&path, serde_json::to_string_pretty(&Value::Object(doc))? + "\n")
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

pub fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// A model or anisotropy given as a path to a JSON file or inline.
pub fn inline_or_file(v: &Value) -> Result<Value> {
    match v {
        Value::String(s) if s.trim_start().starts_with('{') => {
            serde_json::from_str(s).context("inline JSON does not parse")
        }
        Value::String(s) => read_json(Path::new(s)),
        Value::Object(_) => Ok(v.clone()),
        _ => bail!("expected a JSON object or a path to one"),
    }
}

/// Rounds to 12 significant digits for printed summaries.
pub fn sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

//! Experiment configs for `run`: JSON objects or flat `key=value` lines.
//!
//! Both forms carry the same keys. `command`, `field`, `seed`, `out`,
//! `threads` and `caps_file` are global; every other key becomes the
//! `--key value` flag of the subcommand. Values are kept as strings so exact
//! fractions like `16/5` survive untouched.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

/// Subcommands that draw randomness in at least one mode.
const RANDOMIZED: &[&str] = &["incidence", "structure", "estimate", "regular", "generate", "verify"];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: String,
    pub field: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caps_file: Option<String>,
    #[serde(flatten)]
    pub params: BTreeMap<String, String>,
}

impl ExperimentConfig {
    /// JSON if the text starts with `{`, otherwise `key=value` lines. `#` starts a comment.
    pub fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
        let cfg = if text.trim_start().starts_with('{') { parse_json(text)? } else { parse_key_value(text)? };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.command == "run" {
            return Err(CliError::Usage("a run config cannot invoke run".into()));
        }
        if self.seed.is_none() && RANDOMIZED.contains(&self.command.as_str()) {
            return Err(CliError::Usage(format!("config for {:?} must set a seed", self.command)));
        }
        Ok(())
    }

    #[allow(dead_code)] // serialization half of the round trip; exercised by tests
    pub fn to_key_value(&self) -> String {
        let mut lines = vec![format!("command={}", self.command), format!("field={}", self.field)];
        if let Some(s) = self.seed {
            lines.push(format!("seed={s}"));
        }
        if let Some(o) = &self.out {
            lines.push(format!("out={o}"));
        }
        if let Some(t) = self.threads {
            lines.push(format!("threads={t}"));
        }
        if let Some(c) = &self.caps_file {
            lines.push(format!("caps_file={c}"));
        }
        lines.extend(self.params.iter().map(|(k, v)| format!("{k}={v}")));
        lines.join("\n") + "\n"
    }

    /// The equivalent command line, program name first.
    pub fn to_args(&self) -> Vec<String> {
        let mut args = vec!["ffrestrict".to_string(), "--field".into(), self.field.clone()];
        if let Some(s) = self.seed {
            args.extend(["--seed".into(), s.to_string()]);
        }
        if let Some(o) = &self.out {
            args.extend(["--out".into(), o.clone()]);
        }
        if let Some(t) = self.threads {
            args.extend(["--threads".into(), t.to_string()]);
        }
        if let Some(c) = &self.caps_file {
            args.extend(["--caps-file".into(), c.clone()]);
        }
        args.push(self.command.clone());
        for (k, v) in &self.params {
            args.push(format!("--{}", k.replace('_', "-")));
            args.push(v.clone());
        }
        args
    }
}

fn parse_json(text: &str) -> Result<ExperimentConfig, CliError> {
    let raw: BTreeMap<String, Value> =
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config is not a JSON object: {e}")))?;
    let mut flat = BTreeMap::new();
    for (k, v) in raw {
        let s = match v {
            Value::String(s) => s,
            Value::Number(n) if n.is_u64() || n.is_i64() => n.to_string(),
            Value::Bool(b) => b.to_string(),
            Value::Number(n) => {
                return Err(CliError::Usage(format!("{k} = {n}: write non-integer numbers as \"a/b\" strings")));
            }
            other => return Err(CliError::Usage(format!("{k}: unsupported value {other}"))),
        };
        flat.insert(k, s);
    }
    from_map(flat)
}

fn parse_key_value(text: &str) -> Result<ExperimentConfig, CliError> {
    let mut flat = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", n + 1)))?;
        if flat.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(CliError::Usage(format!("config line {}: duplicate key {:?}", n + 1, k.trim())));
        }
    }
    from_map(flat)
}

fn from_map(mut m: BTreeMap<String, String>) -> Result<ExperimentConfig, CliError> {
    let mut take = |k: &str| m.remove(k);
    let command = take("command").ok_or_else(|| CliError::Usage("config must set command".into()))?;
    let field = take("field").ok_or_else(|| CliError::Usage("config must set field".into()))?;
    let seed = take("seed").map(|s| s.parse().map_err(|_| CliError::Usage(format!("seed {s:?} is not a u64")))).transpose()?;
    let out = take("out");
    let threads =
        take("threads").map(|s| s.parse().map_err(|_| CliError::Usage(format!("threads {s:?} is not an integer")))).transpose()?;
    let caps_file = take("caps_file");
    Ok(ExperimentConfig { command, field, seed, out, threads, caps_file, params: m })
}

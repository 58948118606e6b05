//! Sectioned `key = value` run configuration.
//!
//! ```text
//! [run]
//! model = predation
//! steps = 100
//! replicas = 10
//! master_seed = 7
//!
//! [predation]
//! preset = small
//! ```
//!
//! Blank lines and lines starting with `#` or `;` are ignored. Keys before
//! the first header belong to `[run]`. A file whose first non-blank
//! character is `{` is read as a run manifest instead.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Section = BTreeMap<String, String>;

/// Model sections accepted besides `[run]`.
pub const MODEL_SECTIONS: [&str; 4] = ["predation", "traffic", "finance", "toy"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Predation,
    Traffic,
    Finance,
    Toy,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Predation => "predation",
            ModelKind::Traffic => "traffic",
            ModelKind::Finance => "finance",
            ModelKind::Toy => "toy",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "predation" => Ok(ModelKind::Predation),
            "traffic" => Ok(ModelKind::Traffic),
            "finance" => Ok(ModelKind::Finance),
            "toy" => Ok(ModelKind::Toy),
            other => Err(Error::Config(format!(
                "unknown model `{other}` (expected predation, traffic, finance or toy)"
            ))),
        }
    }
}

/// Fully resolved run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelKind,
    pub steps: u64,
    pub replicas: usize,
    pub master_seed: u64,
    /// Worker threads; `None` lets the pool pick.
    pub threads: Option<usize>,
    pub out_path: Option<PathBuf>,
    /// Model-section key/values, keyed by section name.
    pub sections: BTreeMap<String, Section>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Predation,
            steps: 100,
            replicas: 1,
            master_seed: 0,
            threads: None,
            out_path: None,
            sections: BTreeMap::new(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 1 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        if self.replicas < 1 {
            return Err(Error::Config("replicas must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        for name in self.sections.keys() {
            if !MODEL_SECTIONS.contains(&name.as_str()) {
                return Err(Error::Config(format!("unknown section [{name}]")));
            }
        }
        Ok(())
    }

    pub fn section(&self, name: &str) -> Section {
        self.sections.get(name).cloned().unwrap_or_default()
    }

    pub fn set(&mut self, section: &str, key: &str, value: impl Into<String>) {
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), value.into());
    }

    /// Applies one `[run]` key.
    pub fn apply_run_key(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "model" => self.model = v.parse()?,
            "steps" => self.steps = parse(key, v)?,
            "replicas" => self.replicas = parse(key, v)?,
            "master_seed" | "seed" => self.master_seed = parse(key, v)?,
            "threads" => {
                self.threads = match v {
                    "auto" | "" => None,
                    n => Some(parse(key, n)?),
                }
            }
            "out" | "out_path" => self.out_path = Some(PathBuf::from(v)),
            _ => return Err(Error::Config(format!("unknown [run] key `{key}`"))),
        }
        Ok(())
    }

    /// Parses the sectioned text format.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut current = "run".to_string();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Config(format!("line {}: malformed section header", n + 1)))?
                    .trim();
                if name != "run" && !MODEL_SECTIONS.contains(&name) {
                    return Err(Error::Config(format!("line {}: unknown section [{name}]", n + 1)));
                }
                current = name.to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            let (k, v) = (k.trim(), strip_quotes(v.trim()));
            if current == "run" {
                cfg.apply_run_key(k, v)?;
            } else {
                cfg.set(&current, k, v);
            }
        }
        Ok(cfg)
    }

    /// Reads either the text format or a manifest written by a previous run.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        if text.trim_start().starts_with('{') {
            let manifest: super::output::Manifest = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: invalid manifest: {e}", path.display())))?;
            Ok(manifest.config)
        } else {
            Self::parse_text(&text)
        }
    }

    /// Renders the configuration back into the text format.
    pub fn to_text(&self) -> String {
        let mut out = String::from("[run]\n");
        out += &format!("model = {}\nsteps = {}\nreplicas = {}\nmaster_seed = {}\n", self.model, self.steps, self.replicas, self.master_seed);
        match self.threads {
            Some(n) => out += &format!("threads = {n}\n"),
            None => out += "threads = auto\n",
        }
        if let Some(p) = &self.out_path {
            out += &format!("out = {}\n", p.display());
        }
        for (name, section) in &self.sections {
            out += &format!("\n[{name}]\n");
            for (k, v) in section {
                out += &format!("{k} = {v}\n");
            }
        }
        out
    }
}

fn strip_quotes(v: &str) -> &str {
    v.strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .unwrap_or(v)
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("invalid value `{v}` for `{key}`")))
}

/// Splits `section.key=value` as accepted by `--set`.
pub fn parse_assignment(s: &str) -> Result<(String, String, String)> {
    let (lhs, value) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("`{s}` is not of the form section.key=value")))?;
    let (section, key) = lhs
        .trim()
        .split_once('.')
        .ok_or_else(|| Error::Config(format!("`{lhs}` is missing a section prefix")))?;
    Ok((section.to_string(), key.to_string(), value.trim().to_string()))
}

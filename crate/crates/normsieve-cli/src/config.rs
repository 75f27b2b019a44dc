//! Plain-text configuration: `[field]`, `[form]` and `[engine]` sections of
//! key = value lines, merged across files in the order given.

use std::path::Path;

use anyhow::{anyhow, Context, Result};
use normsieve::engine::{Strategy, SweepConfig, DEFAULT_BUDGET};
use normsieve::fields::{Field, FieldSpec, NegativeNorms};
use normsieve::forms::FormSpec;
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    pub q: u64,
    pub h: Vec<u64>,
    #[serde(default = "yes")]
    pub pid: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FormSection {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EngineSection {
    pub strategy: Option<String>,
    pub threads: Option<usize>,
    pub budget_mib: Option<u64>,
    /// Lower bound for w₀.
    pub w0: Option<u64>,
    /// "assume_ok" or "reject".
    pub negatives: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub field: Option<FieldSection>,
    pub form: Option<FormSection>,
    #[serde(default)]
    pub engine: EngineSection,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Sections and keys present in `other` replace ours.
    pub fn merge(mut self, other: Config) -> Self {
        self.field = other.field.or(self.field);
        self.form = other.form.or(self.form);
        let (e, o) = (&mut self.engine, other.engine);
        e.strategy = o.strategy.or(e.strategy.take());
        e.threads = o.threads.or(e.threads);
        e.budget_mib = o.budget_mib.or(e.budget_mib);
        e.w0 = o.w0.or(e.w0);
        e.negatives = o.negatives.or(e.negatives.take());
        self
    }

    pub fn field(&self) -> Result<Field> {
        let s = self.field.as_ref().ok_or_else(|| anyhow!("no [field] section given"))?;
        Ok(Field::new(&FieldSpec::new(s.q, &s.h, s.pid)).map_err(normsieve::Error::from)?)
    }

    pub fn form(&self) -> Result<FormSpec> {
        let s = self.form.ok_or_else(|| anyhow!("no [form] section given"))?;
        Ok(FormSpec::new(s.a, s.b, s.c).map_err(normsieve::Error::from)?)
    }

    pub fn strategy(&self, b: u64) -> Result<Strategy> {
        match &self.engine.strategy {
            None => Ok(Strategy::default_for(b)),
            Some(s) => s.parse().map_err(|e: String| anyhow!(e)),
        }
    }

    pub fn sweep(&self, b: u64) -> Result<SweepConfig> {
        let mut cfg = SweepConfig::new(b).with_strategy(self.strategy(b)?).with_threads(self.engine.threads.unwrap_or(0));
        cfg.budget = self.engine.budget_mib.map_or(DEFAULT_BUDGET, |m| m << 20);
        cfg.negatives = match self.engine.negatives.as_deref() {
            None | Some("assume_ok") => NegativeNorms::AssumeOk,
            Some("reject") => NegativeNorms::Reject,
            Some(other) => return Err(anyhow!("negatives must be assume_ok or reject, got {other:?}")),
        };
        Ok(cfg)
    }
}

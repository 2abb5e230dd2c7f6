//! Experiment registry: each experiment family implements [`Experiment`]
//! and registers under its kind name; `run` selects the strategy at
//! runtime from the config.

use crate::config::ResolvedConfig;
use crate::record::{Payload, ProgressWriter};
use anyhow::{anyhow, Result};
use gmclab_core::mc::BatchPartial;
use std::collections::BTreeMap;

/// Runtime context handed to a running experiment.
pub struct RunContext {
    pub progress: Option<ProgressWriter>,
    /// Batch partials recovered from a previous run of the same config.
    pub resume: Vec<BatchPartial>,
}

impl RunContext {
    pub fn fresh() -> Self {
        RunContext {
            progress: None,
            resume: Vec::new(),
        }
    }
}

/// One experiment family, selected by name at runtime.
pub trait Experiment: Sync + Send {
    fn kind(&self) -> &'static str;
    fn describe(&self) -> &'static str;
    /// Cheap structural validation beyond the schema (ranges, coherence).
    fn validate(&self, cfg: &ResolvedConfig) -> Result<()>;
    fn run(&self, cfg: &ResolvedConfig, ctx: &mut RunContext) -> Result<Payload>;
}

pub struct ExperimentRegistry {
    entries: BTreeMap<&'static str, Box<dyn Experiment>>,
}

impl ExperimentRegistry {
    pub fn new() -> Self {
        ExperimentRegistry {
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, exp: Box<dyn Experiment>) {
        let kind = exp.kind();
        if self.entries.insert(kind, exp).is_some() {
            panic!("duplicate experiment kind {kind}");
        }
    }

    /// All built-in experiment families.
    pub fn builtin() -> Self {
        let mut r = ExperimentRegistry::new();
        for exp in crate::experiments::all() {
            r.register(exp);
        }
        r
    }

    pub fn get(&self, kind: &str) -> Result<&dyn Experiment> {
        self.entries
            .get(kind)
            .map(|b| b.as_ref())
            .ok_or_else(|| anyhow!("unknown experiment kind '{kind}' (see list-kinds)"))
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Experiment> {
        self.entries.values().map(|b| b.as_ref())
    }
}

impl Default for ExperimentRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

//! Experiment configuration: a single human-editable TOML file with a
//! versioned schema, strictly validated before any compute. Every result
//! record embeds the fully resolved configuration (defaults expanded)
//! rather than a reference to it.

use anyhow::{bail, Context, Result};
use gmclab_core::ensembles::{EnsembleSpec, EntryLaw, SymmetryClass};
use gmclab_core::mc::Region;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub class: SymmetryClass,
    pub law: EntryLaw,
    pub n: usize,
}

impl EnsembleSection {
    pub fn spec(&self) -> Result<EnsembleSpec> {
        Ok(EnsembleSpec::new(self.class, self.law, self.n)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KpointParams {
    pub points: Vec<[f64; 2]>,
    pub gammas: Vec<f64>,
    #[serde(default)]
    pub eta: f64,
    pub samples: u64,
    #[serde(default = "default_batch")]
    pub batch_size: u64,
}

fn default_batch() -> u64 {
    256
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OnepointParams {
    pub z: [f64; 2],
    pub gamma: f64,
    #[serde(default)]
    pub eta: f64,
    pub samples: u64,
    #[serde(default = "default_batch")]
    pub batch_size: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldScanParams {
    pub region: Region,
    pub resolution: usize,
    pub draws: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CltParams {
    pub points: Vec<[f64; 2]>,
    pub draws: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThickPointsParams {
    pub nu: f64,
    pub n_values: Vec<usize>,
    pub region: Region,
    pub resolution: usize,
    pub draws: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeEnergyParams {
    pub gammas: Vec<f64>,
    pub region: Region,
    pub resolution: usize,
    pub draws: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DbmLocalFactorParams {
    pub omega1: f64,
    pub lambda: f64,
    pub paths: usize,
    #[serde(default)]
    pub eta_star: Option<f64>,
    #[serde(default)]
    pub eta_m: Option<f64>,
    #[serde(default)]
    pub ell1: Option<usize>,
    #[serde(default)]
    pub b_frak: Option<f64>,
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default)]
    pub a1: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmcSampleParams {
    pub region: Region,
    pub epsilon: f64,
    pub gamma: f64,
    pub draws: u64,
    /// Optional second scale for a stability comparison of the total mass.
    #[serde(default)]
    pub epsilon_alt: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdeReportParams {
    pub z: [f64; 2],
    pub resolution: usize,
    #[serde(default)]
    pub quantiles: Option<usize>,
    #[serde(default)]
    pub etas: Vec<f64>,
}

/// Kind-specific parameters, tagged by the experiment kind.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KindParams {
    Kpoint(KpointParams),
    Onepoint(OnepointParams),
    FieldScan(FieldScanParams),
    Clt(CltParams),
    ThickPoints(ThickPointsParams),
    FreeEnergy(FreeEnergyParams),
    DbmLocalFactor(DbmLocalFactorParams),
    GmcSample(GmcSampleParams),
    MdeReport(MdeReportParams),
}

impl KindParams {
    pub fn kind(&self) -> &'static str {
        match self {
            KindParams::Kpoint(_) => "kpoint",
            KindParams::Onepoint(_) => "onepoint",
            KindParams::FieldScan(_) => "field-scan",
            KindParams::Clt(_) => "clt",
            KindParams::ThickPoints(_) => "thick-points",
            KindParams::FreeEnergy(_) => "free-energy",
            KindParams::DbmLocalFactor(_) => "dbm-local-factor",
            KindParams::GmcSample(_) => "gmc-sample",
            KindParams::MdeReport(_) => "mde-report",
        }
    }
}

/// On-disk layout of the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    schema_version: u32,
    kind: String,
    master_seed: u64,
    #[serde(default)]
    workers: usize,
    output: PathBuf,
    ensemble: EnsembleSection,
    #[serde(default)]
    kpoint: Option<KpointParams>,
    #[serde(default)]
    onepoint: Option<OnepointParams>,
    #[serde(default, rename = "field-scan")]
    field_scan: Option<FieldScanParams>,
    #[serde(default)]
    clt: Option<CltParams>,
    #[serde(default, rename = "thick-points")]
    thick_points: Option<ThickPointsParams>,
    #[serde(default, rename = "free-energy")]
    free_energy: Option<FreeEnergyParams>,
    #[serde(default, rename = "dbm-local-factor")]
    dbm_local_factor: Option<DbmLocalFactorParams>,
    #[serde(default, rename = "gmc-sample")]
    gmc_sample: Option<GmcSampleParams>,
    #[serde(default, rename = "mde-report")]
    mde_report: Option<MdeReportParams>,
}

/// Fully resolved configuration embedded in every result record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub schema_version: u32,
    pub master_seed: u64,
    pub workers: usize,
    pub output: PathBuf,
    pub ensemble: EnsembleSection,
    pub params: KindParams,
    /// Overrides applied on top of the file (flags, environment).
    pub overrides: Vec<String>,
}

/// Command-line / environment overrides.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
}

pub fn load(path: &Path, over: &Overrides) -> Result<ResolvedConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let file: ConfigFile = toml::from_str(&text).context("parsing config")?;
    if file.schema_version != SCHEMA_VERSION {
        bail!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            file.schema_version
        );
    }
    let sections: Vec<(&str, Option<KindParams>)> = vec![
        ("kpoint", file.kpoint.clone().map(KindParams::Kpoint)),
        ("onepoint", file.onepoint.clone().map(KindParams::Onepoint)),
        ("field-scan", file.field_scan.clone().map(KindParams::FieldScan)),
        ("clt", file.clt.clone().map(KindParams::Clt)),
        (
            "thick-points",
            file.thick_points.clone().map(KindParams::ThickPoints),
        ),
        (
            "free-energy",
            file.free_energy.clone().map(KindParams::FreeEnergy),
        ),
        (
            "dbm-local-factor",
            file.dbm_local_factor.clone().map(KindParams::DbmLocalFactor),
        ),
        (
            "gmc-sample",
            file.gmc_sample.clone().map(KindParams::GmcSample),
        ),
        (
            "mde-report",
            file.mde_report.clone().map(KindParams::MdeReport),
        ),
    ];
    let present: Vec<&str> = sections
        .iter()
        .filter(|(_, p)| p.is_some())
        .map(|(k, _)| *k)
        .collect();
    if present.len() != 1 {
        bail!(
            "exactly one kind section must be present (found: {:?})",
            present
        );
    }
    let params = sections
        .into_iter()
        .find_map(|(_, p)| p)
        .expect("one section present");
    if params.kind() != file.kind {
        bail!(
            "kind = \"{}\" but the [{}] section is present",
            file.kind,
            params.kind()
        );
    }
    // ensemble must be constructible (validates the law and dimension)
    file.ensemble.spec()?;

    let mut overrides = Vec::new();
    let mut workers = file.workers;
    if let Ok(env_w) = std::env::var("GMCLAB_WORKERS") {
        let w: usize = env_w.parse().context("GMCLAB_WORKERS must be an integer")?;
        overrides.push(format!("workers={w} (env GMCLAB_WORKERS)"));
        workers = w;
    }
    if let Some(w) = over.workers {
        overrides.push(format!("workers={w} (flag)"));
        workers = w;
    }
    if workers == 0 {
        workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    }
    let mut master_seed = file.master_seed;
    if let Some(s) = over.seed {
        overrides.push(format!("master_seed={s} (flag)"));
        master_seed = s;
    }
    let mut output = file.output;
    if let Some(o) = &over.output {
        overrides.push(format!("output={} (flag)", o.display()));
        output = o.clone();
    }
    Ok(ResolvedConfig {
        schema_version: file.schema_version,
        master_seed,
        workers,
        output,
        ensemble: file.ensemble,
        params,
        overrides,
    })
}

/// Digest over everything that determines the payload (worker count and
/// output location excluded: they must not change results).
#[derive(Serialize)]
struct DigestView<'a> {
    schema_version: u32,
    master_seed: u64,
    ensemble: &'a EnsembleSection,
    params: &'a KindParams,
}

impl ResolvedConfig {
    pub fn digest(&self) -> String {
        let view = DigestView {
            schema_version: self.schema_version,
            master_seed: self.master_seed,
            ensemble: &self.ensemble,
            params: &self.params,
        };
        let canonical = serde_json::to_vec(&view).expect("config serializes");
        let mut h = Sha256::new();
        h.update(&canonical);
        format!("{:x}", h.finalize())
    }
}

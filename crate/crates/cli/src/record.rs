//! Result records and their on-disk lifecycle: streamed batch progress as
//! JSON-lines, final record written atomically (temp file + rename).

use crate::config::ResolvedConfig;
use anyhow::{bail, Context, Result};
use gmclab_core::dbm::LocalFactorEstimate;
use gmclab_core::mc::{BatchPartial, CltReport, MomentEstimate};
use gmclab_core::mde::MdeCenterings;
use gmclab_core::predict::Prediction;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentPayload {
    pub estimate: MomentEstimate,
    pub prediction: Prediction,
    /// Prediction for the centered quantity the estimator targets:
    /// `ln prediction - sum_i gamma_i N (|z_i|^2 - 1)/2`.
    pub log_prediction_centered: f64,
    /// (ln MC - centered ln prediction) / std error.
    pub z_score: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldScanPayload {
    pub n: usize,
    pub cells: usize,
    pub draws: usize,
    pub grid: Vec<[f64; 2]>,
    pub mean_phi: Vec<f64>,
    pub per_draw_max: Vec<f64>,
    pub csv: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CltPayload {
    pub report: CltReport,
    /// Var(ln|det|) / ((1/4) ln N) at the first point.
    pub variance_ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThickPointsPayload {
    pub nu: f64,
    pub areas: Vec<(usize, f64)>,
    pub slope: f64,
    pub expected_slope: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FreeEnergyPayload {
    pub n: usize,
    pub entries: Vec<FreeEnergyEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FreeEnergyEntry {
    pub gamma: f64,
    pub estimate: f64,
    pub prediction: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GmcSamplePayload {
    pub epsilon: f64,
    pub gamma: f64,
    pub draws: u64,
    pub cells: usize,
    pub region_area: f64,
    pub mean_total_mass: f64,
    pub se_total_mass: f64,
    pub mass_z_score: f64,
    pub clip_mass_rel: f64,
    pub ks_vs_alt: Option<f64>,
    pub grid: Vec<[f64; 2]>,
    pub mean_masses: Vec<f64>,
    pub sample_masses: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MdeReportPayload {
    pub z: [f64; 2],
    pub edge: f64,
    pub rho0: f64,
    pub density: Vec<(f64, f64)>,
    pub centerings: Vec<MdeCenterings>,
    pub quantiles: Vec<f64>,
    pub csv: PathBuf,
}

/// Per-kind payload of a finished experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Payload {
    Kpoint(MomentPayload),
    Onepoint(MomentPayload),
    FieldScan(FieldScanPayload),
    Clt(CltPayload),
    ThickPoints(ThickPointsPayload),
    FreeEnergy(FreeEnergyPayload),
    DbmLocalFactor(LocalFactorEstimate),
    GmcSample(GmcSamplePayload),
    MdeReport(MdeReportPayload),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultRecord {
    pub config_digest: String,
    pub artifact_version: String,
    pub started: chrono::DateTime<chrono::Utc>,
    pub finished: chrono::DateTime<chrono::Utc>,
    pub config: ResolvedConfig,
    pub payload: Payload,
    pub flags: Vec<String>,
}

impl ResultRecord {
    pub fn load(path: &Path) -> Result<ResultRecord> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading record {}", path.display()))?;
        let rec: ResultRecord = serde_json::from_str(&text).context("parsing record")?;
        // round-trip check: the record must re-serialize losslessly
        let re = serde_json::to_string(&rec)?;
        let again: ResultRecord = serde_json::from_str(&re)?;
        if serde_json::to_string(&again)? != re {
            bail!("record does not round-trip through the schema");
        }
        Ok(rec)
    }

    /// Atomic write: temp file in the same directory, then rename.
    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir)?;
            }
        }
        let tmp = path.with_extension("json.tmp");
        let mut f = fs::File::create(&tmp)
            .with_context(|| format!("creating {}", tmp.display()))?;
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")?;
        f.sync_all()?;
        fs::rename(&tmp, path)?;
        Ok(())
    }
}

/// One JSON line per completed batch so long runs are resumable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProgressLine {
    pub config_digest: String,
    pub partial: BatchPartial,
}

pub struct ProgressWriter {
    digest: String,
    file: fs::File,
}

impl ProgressWriter {
    pub fn append(path: &Path, digest: &str) -> Result<ProgressWriter> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir)?;
            }
        }
        let file = fs::OpenOptions::new().create(true).append(true).open(path)?;
        Ok(ProgressWriter {
            digest: digest.to_string(),
            file,
        })
    }

    pub fn push(&mut self, partial: &BatchPartial) {
        let line = ProgressLine {
            config_digest: self.digest.clone(),
            partial: *partial,
        };
        if let Ok(s) = serde_json::to_string(&line) {
            let _ = writeln!(self.file, "{s}");
        }
    }
}

/// Load stored batch partials for a resume: every line must carry the
/// expected digest, else the partial output belongs to another config.
pub fn load_progress(path: &Path, digest: &str) -> Result<Vec<BatchPartial>> {
    let file = fs::File::open(path)?;
    let mut parts = Vec::new();
    for line in std::io::BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: ProgressLine = serde_json::from_str(&line).context("parsing progress line")?;
        if parsed.config_digest != digest {
            bail!(
                "resume mismatch: progress file {} was produced by config digest {}",
                path.display(),
                parsed.config_digest
            );
        }
        parts.push(parsed.partial);
    }
    parts.sort_by_key(|p| p.batch);
    parts.dedup_by_key(|p| p.batch);
    Ok(parts)
}

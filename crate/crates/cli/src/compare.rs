//! Comparison tables for moment records.

use crate::record::{MomentPayload, Payload, ResultRecord};
use anyhow::{bail, Result};

struct Row {
    n: usize,
    k: usize,
    log_mc: f64,
    log_pred: f64,
    z_score: f64,
    ess: f64,
    flags: String,
}

fn row(p: &MomentPayload) -> Row {
    let mut flags = Vec::new();
    if p.estimate.flags.low_ess {
        flags.push("low-ess");
    }
    if p.estimate.flags.heavy_tail {
        flags.push("heavy-tail");
    }
    if p.prediction.flags.separation_scaled.is_some_and(|s| s < 1.0) {
        flags.push("sub-microscopic-separation");
    }
    if p
        .prediction
        .flags
        .real_axis_distance_scaled
        .is_some_and(|s| s < 1.0)
    {
        flags.push("near-real-axis");
    }
    Row {
        n: p.estimate.query.n,
        k: p.estimate.query.points.len(),
        log_mc: p.estimate.log_mean,
        log_pred: p.log_prediction_centered,
        z_score: p.z_score,
        ess: p.estimate.ess,
        flags: if flags.is_empty() {
            "-".into()
        } else {
            flags.join(",")
        },
    }
}

/// Render the comparison table for a set of moment records; with several
/// records the ln-ratio trend across N is appended.
pub fn compare(records: &[ResultRecord]) -> Result<String> {
    let mut rows = Vec::new();
    for rec in records {
        match &rec.payload {
            Payload::Kpoint(p) | Payload::Onepoint(p) => rows.push(row(p)),
            other => bail!(
                "compare expects kpoint/onepoint records, got {}",
                kind_name(other)
            ),
        }
    }
    rows.sort_by_key(|r| r.n);
    let mut out = String::new();
    out.push_str(&format!(
        "{:>6} {:>3} {:>14} {:>14} {:>10} {:>10}  {}\n",
        "N", "K", "ln MC", "ln pred", "delta/se", "ess", "flags"
    ));
    for r in &rows {
        out.push_str(&format!(
            "{:>6} {:>3} {:>14.6} {:>14.6} {:>10.3} {:>10.1}  {}\n",
            r.n, r.k, r.log_mc, r.log_pred, r.z_score, r.ess, r.flags
        ));
    }
    if rows.len() > 1 {
        out.push_str("\nln-ratio trend (|ln MC - ln pred| by N):\n");
        for r in &rows {
            out.push_str(&format!(
                "  N = {:>6}: |ln ratio| = {:.4}\n",
                r.n,
                (r.log_mc - r.log_pred).abs()
            ));
        }
    }
    Ok(out)
}

pub fn kind_name(p: &Payload) -> &'static str {
    match p {
        Payload::Kpoint(_) => "kpoint",
        Payload::Onepoint(_) => "onepoint",
        Payload::FieldScan(_) => "field-scan",
        Payload::Clt(_) => "clt",
        Payload::ThickPoints(_) => "thick-points",
        Payload::FreeEnergy(_) => "free-energy",
        Payload::DbmLocalFactor(_) => "dbm-local-factor",
        Payload::GmcSample(_) => "gmc-sample",
        Payload::MdeReport(_) => "mde-report",
    }
}

//! Static SVG plot emission from result records. Plots are artifacts of
//! records, never of live state.

use crate::record::{Payload, ResultRecord};
use anyhow::{bail, Result};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 56.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn of(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Frame {
        let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in xs {
            x0 = x0.min(v);
            x1 = x1.max(v);
        }
        let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in ys {
            y0 = y0.min(v);
            y1 = y1.max(v);
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        if y1 <= y0 {
            y1 = y0 + 1.0;
        }
        let pad = 0.05 * (y1 - y0);
        Frame {
            x0,
            x1,
            y0: y0 - pad,
            y1: y1 + pad,
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * MARGIN)
    }
}

fn svg_open(title: &str) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">
<rect width="{W}" height="{H}" fill="white"/>
<text x="{}" y="24" font-family="monospace" font-size="14" text-anchor="middle">{title}</text>
"#,
        W / 2.0
    );
    s
}

fn axes(s: &mut String, f: &Frame, xlab: &str, ylab: &str) {
    let _ = write!(
        s,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>
<text x="{}" y="{}" font-family="monospace" font-size="12" text-anchor="middle">{xlab}</text>
<text x="16" y="{}" font-family="monospace" font-size="12" text-anchor="middle" transform="rotate(-90 16 {})">{ylab}</text>
<text x="{}" y="{}" font-family="monospace" font-size="10">{:.3}</text>
<text x="{}" y="{}" font-family="monospace" font-size="10" text-anchor="end">{:.3}</text>
<text x="{}" y="{}" font-family="monospace" font-size="10" text-anchor="end">{:.3}</text>
<text x="{}" y="{}" font-family="monospace" font-size="10" text-anchor="end">{:.3}</text>
"#,
        MARGIN,
        MARGIN,
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN,
        W / 2.0,
        H - 12.0,
        H / 2.0,
        H / 2.0,
        MARGIN,
        H - MARGIN + 16.0,
        f.x0,
        W - MARGIN,
        H - MARGIN + 16.0,
        f.x1,
        MARGIN - 4.0,
        H - MARGIN,
        f.y0,
        MARGIN - 4.0,
        MARGIN + 10.0,
        f.y1,
    );
}

fn polyline(s: &mut String, f: &Frame, pts: &[(f64, f64)], color: &str) {
    let coords: Vec<String> = pts
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
        .collect();
    let _ = write!(
        s,
        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>
"#,
        coords.join(" ")
    );
}

fn dots(s: &mut String, f: &Frame, pts: &[(f64, f64)], color: &str) {
    for &(x, y) in pts {
        let _ = write!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{color}"/>
"#,
            f.px(x),
            f.py(y)
        );
    }
}

fn write_svg(path: &Path, body: String) -> Result<()> {
    std::fs::write(path, body + "</svg>\n")?;
    Ok(())
}

fn heat_color(t: f64) -> String {
    // simple blue -> red ramp
    let t = t.clamp(0.0, 1.0);
    let r = (255.0 * t) as u8;
    let b = (255.0 * (1.0 - t)) as u8;
    let g = (80.0 + 60.0 * (1.0 - (2.0 * t - 1.0).abs())) as u8;
    format!("rgb({r},{g},{b})")
}

fn heatmap(
    title: &str,
    grid: &[[f64; 2]],
    values: &[f64],
    annotation: &str,
    path: &Path,
) -> Result<()> {
    let f = Frame::of(
        grid.iter().map(|p| p[0]),
        grid.iter().map(|p| p[1]),
    );
    // cell size from the smallest positive spacing
    let mut xs: Vec<f64> = grid.iter().map(|p| p[0]).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let h = xs
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, &v| {
        (a.0.min(v), a.1.max(v))
    });
    let mut s = svg_open(title);
    let px_w = (f.px(f.x0 + h) - f.px(f.x0)).abs().max(1.0);
    for (p, &v) in grid.iter().zip(values) {
        let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
        let _ = write!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>
"#,
            f.px(p[0]) - px_w / 2.0,
            f.py(p[1]) - px_w / 2.0,
            px_w,
            px_w,
            heat_color(t)
        );
    }
    axes(&mut s, &f, "Re z", "Im z");
    let _ = write!(
        s,
        r#"<text x="{}" y="40" font-family="monospace" font-size="12" text-anchor="middle">{annotation}</text>
"#,
        W / 2.0
    );
    write_svg(path, s)
}

/// Emit the plot files for a record; returns the paths written.
pub fn plot(record: &ResultRecord, record_path: &Path) -> Result<Vec<PathBuf>> {
    let stem = record_path.with_extension("");
    let mut written = Vec::new();
    match &record.payload {
        Payload::MdeReport(p) => {
            let f = Frame::of(
                p.density.iter().map(|d| d.0),
                p.density.iter().map(|d| d.1),
            );
            let mut s = svg_open(&format!(
                "density profile at z = {} + {}i (edge {:.4})",
                p.z[0], p.z[1], p.edge
            ));
            axes(&mut s, &f, "x", "rho(x)");
            polyline(&mut s, &f, &p.density, "steelblue");
            let out = stem.with_extension("density.svg");
            write_svg(&out, s)?;
            written.push(out);
        }
        Payload::ThickPoints(p) => {
            let pts: Vec<(f64, f64)> = p
                .areas
                .iter()
                .map(|&(n, a)| ((n as f64).ln(), a.max(f64::MIN_POSITIVE).ln()))
                .collect();
            let f = Frame::of(pts.iter().map(|p| p.0), pts.iter().map(|p| p.1));
            let mut s = svg_open(&format!(
                "thick points nu = {}: fitted slope {:.3} (expected {:.3})",
                p.nu, p.slope, p.expected_slope
            ));
            axes(&mut s, &f, "ln N", "ln area");
            dots(&mut s, &f, &pts, "firebrick");
            // fitted line through the mean point
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
            let line: Vec<(f64, f64)> = [f.x0, f.x1]
                .iter()
                .map(|&x| (x, my + p.slope * (x - mx)))
                .collect();
            polyline(&mut s, &f, &line, "gray");
            let out = stem.with_extension("loglog.svg");
            write_svg(&out, s)?;
            written.push(out);
        }
        Payload::GmcSample(p) => {
            let out = stem.with_extension("heatmap.svg");
            heatmap(
                &format!("chaos mass, gamma = {}, eps = {}", p.gamma, p.epsilon),
                &p.grid,
                &p.sample_masses,
                &format!("total mass = {:.6}", p.sample_masses.iter().sum::<f64>()),
                &out,
            )?;
            written.push(out);
        }
        Payload::FieldScan(p) => {
            let out = stem.with_extension("heatmap.svg");
            heatmap(
                &format!("mean centered field, N = {}", p.n),
                &p.grid,
                &p.mean_phi,
                &format!("{} cells, {} draws", p.cells, p.draws),
                &out,
            )?;
            written.push(out);
        }
        Payload::FreeEnergy(p) => {
            let pts: Vec<(f64, f64)> = p.entries.iter().map(|e| (e.gamma, e.estimate)).collect();
            let pred: Vec<(f64, f64)> = p.entries.iter().map(|e| (e.gamma, e.prediction)).collect();
            let f = Frame::of(
                pts.iter().map(|p| p.0),
                pts.iter().map(|p| p.1).chain(pred.iter().map(|p| p.1)),
            );
            let mut s = svg_open(&format!("free energy, N = {}", p.n));
            axes(&mut s, &f, "gamma", "free energy");
            polyline(&mut s, &f, &pred, "gray");
            dots(&mut s, &f, &pts, "firebrick");
            let out = stem.with_extension("free-energy.svg");
            write_svg(&out, s)?;
            written.push(out);
        }
        other => bail!(
            "no plot emitter for records of kind {}",
            crate::compare::kind_name(other)
        ),
    }
    Ok(written)
}

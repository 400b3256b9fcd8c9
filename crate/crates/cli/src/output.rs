//! Result tables, metadata sidecars and SVG charts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rqoc::signal::{write_pulse_csv, Signal};
use rqoc::{Error, Result};
use serde::Serialize;

use crate::config::{CampaignConfig, Format};

/// Output files of one run, all named `<experiment>_<timestamp>_<seed>`.
pub struct Artifacts {
    dir: PathBuf,
    stem: String,
    format: Format,
    written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: &Path, experiment: &str, seed: u64, format: Format) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let ts = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Ok(Self {
            dir: dir.to_path_buf(),
            stem: format!("{experiment}_{ts}_{seed}"),
            format,
            written: Vec::new(),
        })
    }

    fn path(&mut self, suffix: &str, ext: &str) -> PathBuf {
        let name = if suffix.is_empty() {
            format!("{}.{ext}", self.stem)
        } else {
            format!("{}_{suffix}.{ext}", self.stem)
        };
        let p = self.dir.join(name);
        self.written.push(p.clone());
        p
    }

    /// A table with a header row. Always written, whatever the format.
    pub fn table(&mut self, suffix: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        let p = self.path(suffix, "csv");
        let mut w = csv::Writer::from_path(&p)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(p)
    }

    /// Serializable rows as a table; the header comes from the field names.
    pub fn records<T: Serialize>(&mut self, suffix: &str, rows: &[T]) -> Result<PathBuf> {
        let p = self.path(suffix, "csv");
        let mut w = csv::Writer::from_path(&p)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(p)
    }

    pub fn pulse(&mut self, suffix: &str, signal: &Signal) -> Result<PathBuf> {
        let p = self.path(suffix, "csv");
        write_pulse_csv(signal, std::fs::File::create(&p)?)?;
        Ok(p)
    }

    /// The effective config, seeds, version and any extra results.
    pub fn metadata<T: Serialize>(&mut self, command: &str, config: &CampaignConfig, extra: &T) -> Result<PathBuf> {
        let p = self.path("", "json");
        let doc = serde_json::json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": config.run.seed,
            "starts": config.run.starts,
            "jobs": config.run.jobs,
            "config": config,
            "results": extra,
        });
        let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(&p, text)?;
        Ok(p)
    }

    pub fn svg(&mut self, suffix: &str, body: impl FnOnce() -> String) -> Result<Option<PathBuf>> {
        if !self.format.svg() {
            return Ok(None);
        }
        let p = self.path(suffix, "svg");
        std::fs::write(&p, body())?;
        Ok(Some(p))
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

pub fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

fn axis_range(vals: impl Iterator<Item = f64>, log: bool) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in vals {
        let v = if log { v.max(1e-16).log10() } else { v };
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Line chart; `log_y` plots `log10(y)`.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series], log_y: bool) -> String {
    let (x0, x1) = axis_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)), false);
    let (y0, y1) = axis_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)), log_y);
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let sy = |y: f64| {
        let y = if log_y { y.max(1e-16).log10() } else { y };
        H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN)
    };
    let mut s = header(title);
    axes(&mut s, x_label, if log_y { format!("log10 {y_label}") } else { y_label.to_string() });
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="{}" font-size="10">{x0:.3}</text>"#, H - MARGIN + 14.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{x1:.3}</text>"#, W - MARGIN, H - MARGIN + 14.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{y0:.2}</text>"#, MARGIN - 4.0, H - MARGIN);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{y1:.2}</text>"#, MARGIN - 4.0, MARGIN + 4.0);
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = ser.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let dash = if ser.dashed { r#" stroke-dasharray="6,4""# } else { "" };
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" fill="{color}">{}</text>"#,
            W - MARGIN + 4.0,
            MARGIN + 14.0 * i as f64,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Heatmap of `values[row][col]` on a log color scale.
pub fn heatmap(title: &str, x_label: &str, y_label: &str, xs: &[String], ys: &[String], values: &[Vec<f64>]) -> String {
    let (v0, v1) = axis_range(values.iter().flatten().copied(), true);
    let mut s = header(title);
    axes(&mut s, x_label, y_label.to_string());
    let cw = (W - 2.0 * MARGIN) / xs.len().max(1) as f64;
    let ch = (H - 2.0 * MARGIN) / ys.len().max(1) as f64;
    for (r, row) in values.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            let t = ((v.max(1e-16).log10() - v0) / (v1 - v0)).clamp(0.0, 1.0);
            let (red, blue) = ((255.0 * t) as u8, (255.0 * (1.0 - t)) as u8);
            let x = MARGIN + c as f64 * cw;
            let y = H - MARGIN - (r + 1) as f64 * ch;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{cw:.2}" height="{ch:.2}" fill="rgb({red},60,{blue})"><title>{v:.3e}</title></rect>"#
            );
        }
    }
    for (c, l) in xs.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" font-size="10" text-anchor="middle">{}</text>"#,
            MARGIN + (c as f64 + 0.5) * cw,
            H - MARGIN + 14.0,
            escape(l)
        );
    }
    for (r, l) in ys.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" font-size="10" text-anchor="end">{}</text>"#,
            MARGIN - 4.0,
            H - MARGIN - (r as f64 + 0.5) * ch,
            escape(l)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="10" text-anchor="end">log10 range [{v0:.2}, {v1:.2}]</text>"#,
        W - 4.0,
        H - 8.0
    );
    s.push_str("</svg>\n");
    s
}

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{H}" font-family="sans-serif">"#,
        W + 120.0
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" font-size="14" text-anchor="middle">{}</text>"#, W / 2.0, escape(title));
    s
}

fn axes(s: &mut String, x_label: &str, y_label: String) {
    let _ = writeln!(
        s,
        r#"<path d="M{MARGIN},{MARGIN} V{} H{}" fill="none" stroke="black"/>"#,
        H - MARGIN,
        W - MARGIN
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>"#, W / 2.0, H - 20.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(&y_label)
    );
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

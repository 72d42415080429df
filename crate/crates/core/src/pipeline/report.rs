//! CSV tables and SVG line plots for sweeps and energy profiles.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::data::fmt_num;
use super::experiment::{LayerEnergy, SweepCell};
use crate::error::{Error, Result};

pub const SWEEP_HEADER: &str = "alpha,c_r,layers,mean_snr_db,mean_prd_pct,n";
pub const ENERGY_HEADER: &str = "layer,f_s,e";

/// Layer subsets are written as `1;2;3`.
pub fn format_layers(layers: &[usize]) -> String {
    layers
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(";")
}

pub fn sweep_csv(cells: &[SweepCell]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for c in cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_num(c.alpha),
            fmt_num(c.c_r),
            format_layers(&c.layers),
            fmt_num(c.mean_snr_db),
            fmt_num(c.mean_prd_pct),
            c.n_signals
        );
    }
    out
}

pub fn energy_csv(profiles: &[LayerEnergy]) -> String {
    let mut out = format!("{ENERGY_HEADER}\n");
    for p in profiles {
        for &(f, e) in &p.points {
            let _ = writeln!(out, "{},{},{}", p.layer, fmt_num(f), fmt_num(e));
        }
    }
    out
}

/// A named polyline.
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn coord(v: f64) -> String {
    format!("{v:.9e}")
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Standalone SVG document with axes, five ticks per axis and a legend.
/// Non-finite points are skipped.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let pts = || series.iter().flat_map(|s| s.points.iter().copied());
    let (x0, x1) = bounds(pts().map(|p| p.0));
    let (y0, y1) = bounds(pts().map(|p| p.1));
    let (pw, ph) = (WIDTH - MARGIN_L - MARGIN_R, HEIGHT - MARGIN_T - MARGIN_B);
    let sx = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| MARGIN_T + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"##
    );
    let _ = writeln!(
        s,
        r##"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"##
    );
    let _ = writeln!(
        s,
        r##"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"##,
        coord(MARGIN_L + pw / 2.0),
        escape(title)
    );
    let _ = writeln!(
        s,
        r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"##,
        coord(MARGIN_L),
        coord(MARGIN_T),
        coord(pw),
        coord(ph)
    );
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            s,
            r##"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="#ccc"/><text x="{0}" y="{3}" text-anchor="middle">{4:.3}</text>"##,
            coord(px),
            coord(MARGIN_T),
            coord(MARGIN_T + ph),
            coord(MARGIN_T + ph + 16.0),
            xv
        );
        let _ = writeln!(
            s,
            r##"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="#ccc"/><text x="{3}" y="{4}" text-anchor="end">{5:.3}</text>"##,
            coord(MARGIN_L),
            coord(py),
            coord(MARGIN_L + pw),
            coord(MARGIN_L - 6.0),
            coord(py + 4.0),
            yv
        );
    }
    let _ = writeln!(
        s,
        r##"<text x="{}" y="{}" text-anchor="middle">{}</text>"##,
        coord(MARGIN_L + pw / 2.0),
        coord(HEIGHT - 12.0),
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r##"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"##,
        coord(MARGIN_T + ph / 2.0),
        escape(y_label)
    );
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = ser
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{},{}", coord(sx(x)), coord(sy(y))))
            .collect();
        let _ = writeln!(
            s,
            r##"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"##,
            path.join(" ")
        );
        let ly = MARGIN_T + 14.0 + 18.0 * i as f64;
        let lx = MARGIN_L + pw + 12.0;
        let _ = writeln!(
            s,
            r##"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="{color}" stroke-width="2"/><text x="{3}" y="{4}">{5}</text>"##,
            coord(lx),
            coord(ly),
            coord(lx + 18.0),
            coord(lx + 24.0),
            coord(ly + 4.0),
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// One series per `(α, layer subset)`, `metric` against `C_R`.
fn sweep_series(cells: &[SweepCell], metric: impl Fn(&SweepCell) -> f64) -> Vec<Series> {
    let mut groups: BTreeMap<(u64, String), Vec<(f64, f64)>> = BTreeMap::new();
    let mut order = Vec::new();
    for c in cells {
        let key = (c.alpha.to_bits(), format_layers(&c.layers));
        if !groups.contains_key(&key) {
            order.push((key.clone(), c.alpha));
        }
        groups.entry(key).or_default().push((c.c_r, metric(c)));
    }
    order
        .into_iter()
        .map(|(key, alpha)| {
            let mut points = groups.remove(&key).unwrap_or_default();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series {
                label: format!("α={alpha} L={}", key.1),
                points,
            }
        })
        .collect()
}

pub fn sweep_snr_svg(cells: &[SweepCell]) -> String {
    line_plot(
        "Mean SNR vs compression ratio",
        "C_R",
        "SNR (dB)",
        &sweep_series(cells, |c| c.mean_snr_db),
    )
}

pub fn sweep_prd_svg(cells: &[SweepCell]) -> String {
    line_plot(
        "Mean PRD vs compression ratio",
        "C_R",
        "PRD (%)",
        &sweep_series(cells, |c| c.mean_prd_pct),
    )
}

pub fn energy_svg(profiles: &[LayerEnergy]) -> String {
    let series: Vec<Series> = profiles
        .iter()
        .map(|p| Series {
            label: format!("W{}", p.layer),
            points: p.points.clone(),
        })
        .collect();
    line_plot("Energy vs singular-value fraction", "F_s", "E", &series)
}

fn write(dir: &Path, name: &str, body: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Writes `sweep.csv`, `sweep_snr.svg`, `sweep_prd.svg` (when `cells` is
/// non-empty) and `energy.csv`, `energy.svg` (when `profiles` is non-empty).
pub fn emit_report(
    cells: &[SweepCell],
    profiles: &[LayerEnergy],
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    if cells.is_empty() && profiles.is_empty() {
        return Err(Error::EmptyDataset);
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    if !cells.is_empty() {
        write(dir, "sweep.csv", &sweep_csv(cells), &mut written)?;
        write(dir, "sweep_snr.svg", &sweep_snr_svg(cells), &mut written)?;
        write(dir, "sweep_prd.svg", &sweep_prd_svg(cells), &mut written)?;
    }
    if !profiles.is_empty() {
        write(dir, "energy.csv", &energy_csv(profiles), &mut written)?;
        write(dir, "energy.svg", &energy_svg(profiles), &mut written)?;
    }
    Ok(written)
}

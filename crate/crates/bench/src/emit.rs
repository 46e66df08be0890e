//! CSV tables and static SVG line charts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::run::{ResultRow, RESULT_COLUMNS};
use crate::spec::{Method, Scenario};
use crate::summary::SummaryRow;
use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    SvgLines,
}

impl FromStr for OutputFormat {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "svg-lines" => Ok(OutputFormat::SvgLines),
            _ => Err(BenchError::InvalidSpec(format!("unknown format {s:?} (csv or svg-lines)"))),
        }
    }
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

/// Result rows as CSV with a header row, even when `rows` is empty.
pub fn write_rows_csv<W: Write>(w: W, rows: &[ResultRow]) -> Result<(), BenchError> {
    let mut out = csv_writer(w);
    out.write_record(RESULT_COLUMNS)?;
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn rows_to_csv_string(rows: &[ResultRow]) -> Result<String, BenchError> {
    let mut buf = Vec::new();
    write_rows_csv(&mut buf, rows)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

pub fn read_rows_csv<R: Read>(r: R) -> Result<Vec<ResultRow>, BenchError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != RESULT_COLUMNS {
        return Err(BenchError::InvalidSpec(format!("unexpected CSV header {header:?}")));
    }
    Ok(rdr.deserialize().collect::<Result<Vec<ResultRow>, _>>()?)
}

pub fn write_summary_csv<W: Write>(w: W, summary: &[SummaryRow]) -> Result<(), BenchError> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    for s in summary {
        out.serialize(s)?;
    }
    out.flush()?;
    Ok(())
}

/// One plotted series: label and points sorted by x.
pub type Series = (String, Vec<(f64, f64)>);

/// Chart axes and series of a scenario, from its summary.
pub fn chart_series(scenario: Scenario, summary: &[SummaryRow]) -> (&'static str, &'static str, Vec<Series>) {
    let (x_label, y_label) = match scenario {
        Scenario::NmseVsIteration => ("iteration", "median NMSE"),
        Scenario::NmseVsSnr => ("SNR (dB)", "median NMSE"),
        Scenario::RuntimeVsNr => ("N_R", "median wall time (ms)"),
        Scenario::NmseVsSlots | Scenario::ApcB0Sweep => ("training slots", "median NMSE"),
        Scenario::ApcSlotsVsNr => ("N_R", "mean training slots"),
    };
    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for s in summary.iter().filter(|s| s.scenario == scenario) {
        let label = match (s.method, s.b0) {
            (Method::RpdanmApc, Some(b0)) => format!("{} B0={b0}", s.method),
            _ => s.method.to_string(),
        };
        let x = match scenario {
            Scenario::NmseVsIteration => s.iteration.map(|i| i as f64),
            Scenario::NmseVsSnr => Some(s.snr_db),
            Scenario::RuntimeVsNr | Scenario::ApcSlotsVsNr => Some(s.n_r as f64),
            Scenario::NmseVsSlots | Scenario::ApcB0Sweep => s.slots_used_mean,
        };
        let y = match scenario {
            Scenario::RuntimeVsNr => s.time_median_ms,
            Scenario::ApcSlotsVsNr => s.slots_used_mean,
            _ => s.nmse_median,
        };
        if let (Some(x), Some(y)) = (x, y) {
            if x.is_finite() && y.is_finite() && y > 0.0 {
                series.entry(label).or_default().push((x, y));
            }
        }
    }
    let mut out: Vec<Series> = series.into_iter().collect();
    for (_, pts) in &mut out {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    (x_label, y_label, out)
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Line chart with a linear x axis and a log10 y axis, one polyline per series.
pub fn render_svg(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h) = (720.0, 480.0);
    let (left, right, top, bottom) = (80.0, 200.0, 40.0, 60.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let pts = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y.log10());
        y1 = y1.max(y.log10());
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        (x0, x1) = (x0 - 0.5, x1 + 0.5);
    }
    let (y0, y1) = (y0.floor(), y1.ceil().max(y0.floor() + 1.0));
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |ly: f64| top + (y1 - ly) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for d in (y0 as i64)..=(y1 as i64) {
        let y = sy(d as f64);
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#dddddd"/>"##,
            left + pw
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">1e{d}</text>"#,
            left - 6.0,
            y + 4.0
        );
    }
    for k in 0..=4 {
        let x = x0 + (x1 - x0) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(x),
            top + ph + 18.0,
            format_tick(x)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        h - 16.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.1}" text-anchor="middle" transform="rotate(-90 20 {:.1})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        escape(y_label)
    );
    for (i, (label, p)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = p.iter().map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y.log10()))).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            coords.join(" ")
        );
        for &(x, y) in p {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#,
                sx(x),
                sy(y.log10())
            );
        }
        let ly = top + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#,
            left + pw + 12.0,
            left + pw + 36.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            left + pw + 42.0,
            ly + 4.0,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn format_tick(x: f64) -> String {
    if (x - x.round()).abs() < 1e-9 {
        format!("{}", x.round() as i64)
    } else {
        format!("{x:.2}")
    }
}

/// Writes the rows (and, for `svg-lines`, a chart of their summary) into `dir`.
/// Returns the files written.
pub fn emit(
    rows: &[ResultRow],
    summary: &[SummaryRow],
    scenario: Scenario,
    format: OutputFormat,
    dir: &Path,
) -> Result<Vec<PathBuf>, BenchError> {
    fs::create_dir_all(dir)?;
    let rows_path = dir.join(format!("{scenario}.csv"));
    write_rows_csv(fs::File::create(&rows_path)?, rows)?;
    let summary_path = dir.join(format!("{scenario}_summary.csv"));
    write_summary_csv(fs::File::create(&summary_path)?, summary)?;
    let mut files = vec![rows_path, summary_path];
    if format == OutputFormat::SvgLines {
        let (xl, yl, series) = chart_series(scenario, summary);
        let path = dir.join(format!("{scenario}.svg"));
        fs::write(&path, render_svg(scenario.as_str(), xl, yl, &series))?;
        files.push(path);
    }
    Ok(files)
}

//! CSV, SVG and manifest artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::config::{ExperimentConfig, ExperimentKind};
use super::experiments::{summarize, StepSummary, TrialRecord};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "experiment,trial,p,err_irs,err_es,kappa_A_input,kappa_Ap,sigma_n_Ap,s_selected";

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io { path: path.display().to_string(), message: e.to_string() }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn real_field(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.16e}")).unwrap_or_default()
}

/// Rows sorted by `(trial, p)` (stable), reals with 17 significant digits,
/// failures as empty fields.
pub fn records_to_csv(records: &[TrialRecord]) -> String {
    let mut sorted: Vec<&TrialRecord> = records.iter().collect();
    sorted.sort_by_key(|r| (r.trial, r.p));
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in sorted {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.experiment,
            r.trial,
            r.p,
            real_field(r.err_irs),
            real_field(r.err_es),
            real_field(r.kappa_a_input),
            real_field(r.kappa_ap),
            real_field(r.sigma_n_ap),
            r.s_selected.map(|s| s.to_string()).unwrap_or_default()
        );
    }
    s
}

pub fn emit_csv(records: &[TrialRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no records to write".into()));
    }
    write_file(path, &records_to_csv(records))
}

fn parse_opt<V: std::str::FromStr>(field: &str, line: usize) -> Result<Option<V>> {
    if field.is_empty() {
        return Ok(None);
    }
    field.parse().map(Some).map_err(|_| Error::Config(format!("csv line {line}: bad field '{field}'")))
}

pub fn parse_csv(text: &str) -> Result<Vec<TrialRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        _ => return Err(Error::Config("csv header mismatch".into())),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(Error::Config(format!("csv line {lineno}: expected 9 fields, got {}", f.len())));
        }
        let experiment: ExperimentKind = f[0].parse().map_err(|e: String| Error::Config(format!("csv line {lineno}: {e}")))?;
        let required = |x: Option<usize>| x.ok_or_else(|| Error::Config(format!("csv line {lineno}: missing index")));
        out.push(TrialRecord {
            experiment,
            trial: required(parse_opt(f[1], lineno)?)?,
            p: required(parse_opt::<usize>(f[2], lineno)?)? as u32,
            err_irs: parse_opt(f[3], lineno)?,
            err_es: parse_opt(f[4], lineno)?,
            kappa_a_input: parse_opt(f[5], lineno)?,
            kappa_ap: parse_opt(f[6], lineno)?,
            sigma_n_ap: parse_opt(f[7], lineno)?,
            s_selected: parse_opt(f[8], lineno)?,
        });
    }
    Ok(out)
}

pub fn read_csv(path: &Path) -> Result<Vec<TrialRecord>> {
    parse_csv(&fs::read_to_string(path).map_err(|e| io_err(path, e))?)
}

const PANEL_W: f64 = 520.0;
const PANEL_H: f64 = 340.0;
const MARGIN: f64 = 56.0;

struct Series<'a> {
    name: &'a str,
    color: &'a str,
    /// `(p, mean, std)`.
    points: Vec<(f64, f64, f64)>,
}

struct Panel<'a> {
    title: String,
    y_label: &'a str,
    series: Vec<Series<'a>>,
}

fn error_series<'a>(summary: &[StepSummary]) -> Vec<Series<'a>> {
    let pick = |f: fn(&StepSummary) -> Option<(f64, f64)>| {
        summary.iter().filter_map(|s| f(s).map(|(m, sd)| (s.p as f64, m, sd))).collect()
    };
    vec![
        Series { name: "irs", color: "#1f77b4", points: pick(|s| s.log_err_irs) },
        Series { name: "es", color: "#d62728", points: pick(|s| s.log_err_es) },
    ]
}

fn kappa_series<'a>(records: &[TrialRecord]) -> Vec<Series<'a>> {
    let mut by_p: std::collections::BTreeMap<u32, Vec<f64>> = Default::default();
    for r in records {
        if let Some(k) = r.kappa_ap {
            by_p.entry(r.p).or_default().push(k.log10());
        }
    }
    let points = by_p
        .into_iter()
        .filter_map(|(p, v)| super::experiments::mean_std(&v).map(|(m, s)| (p as f64, m, s)))
        .collect();
    vec![Series { name: "irs", color: "#1f77b4", points }]
}

fn bounds(panel: &Panel) -> (f64, f64, f64, f64) {
    let mut x = (f64::INFINITY, f64::NEG_INFINITY);
    let mut y = (f64::INFINITY, f64::NEG_INFINITY);
    for s in &panel.series {
        for &(p, m, sd) in &s.points {
            x = (x.0.min(p), x.1.max(p));
            y = (y.0.min(m - sd), y.1.max(m + sd));
        }
    }
    if !x.0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    if x.1 == x.0 {
        x.1 = x.0 + 1.0;
    }
    let (mut lo, mut hi) = (y.0.floor(), y.1.ceil());
    if hi <= lo {
        hi = lo + 1.0;
        lo -= 1.0;
    }
    (x.0, x.1, lo, hi)
}

fn render_panel(out: &mut String, panel: &Panel, ox: f64) {
    let (x0, x1, y0, y1) = bounds(panel);
    let sx = |p: f64| ox + MARGIN + (p - x0) / (x1 - x0) * (PANEL_W - 2.0 * MARGIN);
    let sy = |v: f64| PANEL_H - MARGIN - (v - y0) / (y1 - y0) * (PANEL_H - 2.0 * MARGIN);
    let _ = writeln!(out, r#"<g class="panel">"#);
    let _ = writeln!(out, r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#, ox + PANEL_W / 2.0, panel.title);
    let _ = writeln!(
        out,
        r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
        sx(x0),
        sy(y0),
        sx(x1),
        sy(y0)
    );
    let _ = writeln!(
        out,
        r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
        sx(x0),
        sy(y0),
        sx(x0),
        sy(y1)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">p</text>"#,
        ox + PANEL_W / 2.0,
        PANEL_H - 16.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" transform="rotate(-90 {:.1} {:.1})" text-anchor="middle">{}</text>"#,
        ox + 16.0,
        PANEL_H / 2.0,
        ox + 16.0,
        PANEL_H / 2.0,
        panel.y_label
    );
    let ticks = (y1 - y0).round() as i64;
    let step = ((ticks as f64) / 8.0).ceil().max(1.0) as i64;
    let mut k = y0 as i64;
    while k as f64 <= y1 {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{}</text>"#,
            sx(x0) - 4.0,
            sy(k as f64) + 3.0,
            k
        );
        k += step;
    }
    for (i, s) in panel.series.iter().enumerate() {
        if s.points.is_empty() {
            continue;
        }
        let upper: Vec<String> = s.points.iter().map(|&(p, m, sd)| format!("{:.2},{:.2}", sx(p), sy(m + sd))).collect();
        let lower: Vec<String> = s.points.iter().rev().map(|&(p, m, sd)| format!("{:.2},{:.2}", sx(p), sy(m - sd))).collect();
        let _ = writeln!(
            out,
            r#"<polygon class="band {}" points="{} {}" fill="{}" fill-opacity="0.2" stroke="none"/>"#,
            s.name,
            upper.join(" "),
            lower.join(" "),
            s.color
        );
        let mean: Vec<String> = s.points.iter().map(|&(p, m, _)| format!("{:.2},{:.2}", sx(p), sy(m))).collect();
        let _ = writeln!(
            out,
            r#"<polyline class="mean {}" points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            s.name,
            mean.join(" "),
            s.color
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" fill="{}">{}</text>"#,
            ox + PANEL_W - MARGIN - 40.0,
            MARGIN + 16.0 * i as f64,
            s.color,
            s.name
        );
    }
    let _ = writeln!(out, "</g>");
}

/// SVG text: a panel of mean `log10` relative error against `p` with a band
/// of one (`N - 1`) standard deviation per algorithm; `condition_evolution`
/// adds a panel of `log10 kappa_2(A_p)`.
pub fn records_to_svg(records: &[TrialRecord]) -> String {
    let summary = summarize(records);
    let experiment = records.first().map(|r| r.experiment.name()).unwrap_or("experiment");
    let mut panels = vec![Panel {
        title: format!("{experiment}: relative error"),
        y_label: "log10 error",
        series: error_series(&summary),
    }];
    if records.iter().any(|r| r.experiment == ExperimentKind::ConditionEvolution) {
        panels.push(Panel {
            title: format!("{experiment}: kappa_2(A_p)"),
            y_label: "log10 kappa",
            series: kappa_series(records),
        });
    }
    let width = PANEL_W * panels.len() as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{PANEL_H:.0}" viewBox="0 0 {width:.0} {PANEL_H:.0}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, panel) in panels.iter().enumerate() {
        render_panel(&mut out, panel, PANEL_W * i as f64);
    }
    out.push_str("</svg>\n");
    out
}

pub fn emit_svg(records: &[TrialRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no records to plot".into()));
    }
    write_file(path, &records_to_svg(records))
}

/// Config echo, library version and seed, one `key = value` per line.
pub fn manifest_text(cfg: &ExperimentConfig, files: &[&str]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "library = {} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"));
    for (k, v) in cfg.to_pairs() {
        let _ = writeln!(s, "{k} = {v}");
    }
    let _ = writeln!(s, "prng = ChaCha20, trial seed = seed ^ trial");
    for f in files {
        let _ = writeln!(s, "file = {f}");
    }
    s
}

pub fn write_manifest(cfg: &ExperimentConfig, files: &[&str], dir: &Path) -> Result<()> {
    write_file(&dir.join("manifest.txt"), &manifest_text(cfg, files))
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    write_file(path, contents)
}

//! Output files: JSON-lines records, CSV summaries and SVG mean-trace plots.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::stats::{SummaryStats, TracePoint};
use super::{BenchError, Result, RunRecord, StrategyKind};
use crate::graphs::GW_THRESHOLD;

pub const RECORDS_FILE: &str = "records.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const TRACE_HEADER: &str = "class,strategy,iteration,mean_ar,ci_lo,ci_hi,n_runs";
pub const GW_HEADER: &str = "class,strategy,gw_fraction,gw_ci_lo,gw_ci_hi,frac_9999,stuck_count";

pub fn write_records(records: &[RunRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

pub fn trace_csv(summary: &SummaryStats) -> String {
    let mut s = String::from(TRACE_HEADER);
    s.push('\n');
    for g in &summary.groups {
        for p in &g.trace {
            let _ = writeln!(s, "{},{},{},{},{},{},{}", g.class, g.strategy, p.iteration, p.mean, p.ci_lo, p.ci_hi, p.n_runs);
        }
    }
    s
}

pub fn gw_csv(summary: &SummaryStats) -> String {
    let mut s = String::from(GW_HEADER);
    s.push('\n');
    for g in &summary.groups {
        let _ = writeln!(s, "{},{},{},{},{},{},{}", g.class, g.strategy, g.gw.p_hat, g.gw.lo, g.gw.hi, g.frac_9999, g.stuck_count);
    }
    s
}

/// Companion path for the GW table: `summary.csv` → `summary_gw.csv`.
pub fn gw_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("summary");
    csv.with_file_name(format!("{stem}_gw.csv"))
}

/// Writes the trace table to `path` and the GW table next to it.
pub fn write_summary(summary: &SummaryStats, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, trace_csv(summary))?;
    fs::write(gw_path(path), gw_csv(summary))?;
    Ok(())
}

/// One (class, strategy) curve.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub class: String,
    pub strategy: String,
    pub points: Vec<TracePoint>,
}

pub fn curves(summary: &SummaryStats) -> Vec<Curve> {
    summary
        .groups
        .iter()
        .map(|g| Curve { class: g.class.clone(), strategy: g.strategy.to_string(), points: g.trace.clone() })
        .collect()
}

/// Parses the trace table written by [`trace_csv`].
pub fn parse_trace_csv(text: &str) -> Result<Vec<Curve>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(TRACE_HEADER) {
        return Err(BenchError::Csv("missing or unexpected header".into()));
    }
    let mut out: Vec<Curve> = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        let bad = || BenchError::Csv(format!("line {}: {line:?}", i + 2));
        if f.len() != 7 {
            return Err(bad());
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
        let int = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
        let point = TracePoint { iteration: int(f[2])?, mean: num(f[3])?, ci_lo: num(f[4])?, ci_hi: num(f[5])?, n_runs: int(f[6])? };
        match out.last_mut() {
            Some(c) if c.class == f[0] && c.strategy == f[1] => c.points.push(point),
            _ => out.push(Curve { class: f[0].to_string(), strategy: f[1].to_string(), points: vec![point] }),
        }
    }
    if out.is_empty() {
        return Err(BenchError::Csv("no data rows".into()));
    }
    Ok(out)
}

const WIDTH: f64 = 760.0;
const PANEL_HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 130.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;
const COLORS: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn color(strategy: &str) -> &'static str {
    let idx = match strategy.parse::<StrategyKind>() {
        Ok(k) => k as usize,
        Err(_) => 3 + strategy.bytes().map(usize::from).sum::<usize>() % 3,
    };
    COLORS[idx]
}

fn panel(s: &mut String, class: &str, curves: &[&Curve], y0: f64) {
    let max_iter = curves.iter().flat_map(|c| c.points.iter().map(|p| p.iteration)).max().unwrap_or(1).max(1) as f64;
    let lowest = curves.iter().flat_map(|c| c.points.iter().map(|p| p.ci_lo)).fold(GW_THRESHOLD, f64::min);
    let y_min = (lowest * 10.0).floor() / 10.0;
    let y_min = y_min.clamp(0.0, 0.8);
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = PANEL_HEIGHT - MARGIN_T - MARGIN_B;
    let px = |it: f64| MARGIN_L + plot_w * it / max_iter;
    let py = |ar: f64| y0 + MARGIN_T + plot_h * (1.0 - (ar.clamp(y_min, 1.0) - y_min) / (1.0 - y_min));

    let _ = writeln!(s, r#"<g class="panel" data-class="{class}">"#);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="16" text-anchor="middle">{class}</text>"#, WIDTH / 2.0, y0 + 24.0);
    let _ = writeln!(
        s,
        r##"<rect x="{MARGIN_L}" y="{}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#333"/>"##,
        y0 + MARGIN_T
    );
    for k in 0..=5 {
        let ar = y_min + (1.0 - y_min) * k as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" font-size="11" text-anchor="end">{ar:.2}</text>"#,
            MARGIN_L - 6.0,
            py(ar) + 4.0
        );
        let it = max_iter * k as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" font-size="11" text-anchor="middle">{:.0}</text>"#,
            px(it),
            y0 + PANEL_HEIGHT - MARGIN_B + 16.0,
            it
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">iteration</text>"#,
        MARGIN_L + plot_w / 2.0,
        y0 + PANEL_HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0}" font-size="12" text-anchor="middle" transform="rotate(-90 18 {0})">mean approximation ratio</text>"#,
        y0 + MARGIN_T + plot_h / 2.0
    );

    for c in curves {
        let col = color(&c.strategy);
        let upper = c.points.iter().map(|p| format!("{:.2},{:.2}", px(p.iteration as f64), py(p.ci_hi)));
        let lower = c.points.iter().rev().map(|p| format!("{:.2},{:.2}", px(p.iteration as f64), py(p.ci_lo)));
        let band: Vec<String> = upper.chain(lower).collect();
        let _ = writeln!(
            s,
            r#"<polygon class="ci" data-strategy="{}" points="{}" fill="{col}" fill-opacity="0.2" stroke="none"/>"#,
            c.strategy,
            band.join(" ")
        );
        let line: Vec<String> = c.points.iter().map(|p| format!("{:.2},{:.2}", px(p.iteration as f64), py(p.mean))).collect();
        let _ = writeln!(
            s,
            r#"<polyline class="mean" data-strategy="{}" points="{}" fill="none" stroke="{col}" stroke-width="2"/>"#,
            c.strategy,
            line.join(" ")
        );
    }
    let gy = py(GW_THRESHOLD);
    let _ = writeln!(
        s,
        r##"<line class="threshold" x1="{MARGIN_L}" y1="{gy:.2}" x2="{}" y2="{gy:.2}" stroke="#000" stroke-dasharray="6,4"/>"##,
        MARGIN_L + plot_w
    );
    let lx = WIDTH - MARGIN_R + 12.0;
    for (i, c) in curves.iter().enumerate() {
        let ly = y0 + MARGIN_T + 14.0 + 20.0 * i as f64;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="3"/>"#, lx + 20.0, color(&c.strategy));
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12">{}</text>"#, lx + 26.0, ly + 4.0, c.strategy);
    }
    let ly = y0 + MARGIN_T + 14.0 + 20.0 * curves.len() as f64;
    let _ = writeln!(s, r##"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="#000" stroke-dasharray="6,4"/>"##, lx + 20.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12">GW {GW_THRESHOLD}</text>"#, lx + 26.0, ly + 4.0);
    s.push_str("</g>\n");
}

/// Mean traces with CI bands, one stacked panel per class.
pub fn render_svg(curves: &[Curve]) -> String {
    let mut classes: Vec<&str> = Vec::new();
    for c in curves {
        if !classes.contains(&c.class.as_str()) {
            classes.push(&c.class);
        }
    }
    let height = PANEL_HEIGHT * classes.len().max(1) as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, class) in classes.iter().enumerate() {
        let group: Vec<&Curve> = curves.iter().filter(|c| c.class == *class).collect();
        panel(&mut s, class, &group, PANEL_HEIGHT * i as f64);
    }
    s.push_str("</svg>\n");
    s
}

pub fn svg_path(outdir: &Path, class: &str) -> PathBuf {
    outdir.join(format!("mean_trace_{class}.svg"))
}

/// Writes `records.jsonl`, `summary.csv`, `summary_gw.csv` and one
/// `mean_trace_<class>.svg` per class. Nothing is written for an empty record list.
pub fn emit(summary: &SummaryStats, records: &[RunRecord], outdir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(BenchError::NoRecords);
    }
    let outdir = outdir.as_ref();
    fs::create_dir_all(outdir)?;
    let mut written = vec![outdir.join(RECORDS_FILE), outdir.join(SUMMARY_FILE)];
    write_records(records, &written[0])?;
    write_summary(summary, &written[1])?;
    written.push(gw_path(&written[1]));
    let all = curves(summary);
    for class in summary.classes() {
        let mine: Vec<Curve> = all.iter().filter(|c| c.class == class).cloned().collect();
        let path = svg_path(outdir, class);
        fs::write(&path, render_svg(&mine))?;
        written.push(path);
    }
    Ok(written)
}

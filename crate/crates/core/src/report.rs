//! Run outputs and parameter sweeps.
//!
//! `per_cav.csv` columns: `id,lane,t0,tf,energy,fuel,qp_count,infeasible_count`
//! (`tf` empty for vehicles still in the zone). `traces.csv` columns:
//! `t,cav_id,b1,b2` (empty when the neighbor is absent). Floats are printed
//! with 9 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config;
use crate::error::{Error, Result};
use crate::sim::{self, RunMetrics, ScenarioConfig, Scheme, Summary};

/// Formats with 9 significant digits, without exponent for moderate
/// magnitudes.
pub fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_nan() { "nan".into() } else { format!("{}", x) };
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..9).contains(&mag) {
        let decimals = (8 - mag).max(0) as usize;
        let s = format!("{:.*}", decimals, x);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{:.8e}", x)
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(sig9).unwrap_or_default()
}

pub fn per_cav_csv(m: &RunMetrics) -> String {
    let mut s = String::from("id,lane,t0,tf,energy,fuel,qp_count,infeasible_count\n");
    for c in &m.cavs {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            c.id,
            c.lane,
            sig9(c.t0),
            opt(c.tf),
            sig9(c.energy),
            sig9(c.fuel),
            c.qp_count,
            c.infeasible_count
        );
    }
    s
}

pub fn traces_csv(m: &RunMetrics) -> String {
    let mut s = String::from("t,cav_id,b1,b2\n");
    for p in &m.traces {
        let _ = writeln!(s, "{},{},{},{}", sig9(p.t), p.cav_id, opt(p.b1), opt(p.b2));
    }
    s
}

pub fn summary_text(m: &RunMetrics) -> String {
    let s = m.summary();
    let mut out = String::new();
    let _ = writeln!(out, "scheme              {}", m.scheme);
    let _ = writeln!(out, "admitted            {}", s.admitted);
    let _ = writeln!(out, "exited              {}", s.exited);
    let _ = writeln!(out, "ave travel time [s] {}", sig9(s.avg_travel_time));
    let _ = writeln!(out, "ave 1/2 u^2         {}", sig9(s.avg_energy));
    let _ = writeln!(out, "ave fuel [mL]       {}", sig9(s.avg_fuel));
    let _ = writeln!(out, "QP solves           {}", s.qp_count);
    let _ = writeln!(out, "infeasible cases    {}", s.infeasible_count);
    let _ = writeln!(out, "violating samples   {}", m.violations().count());
    let msg = m.messages;
    let _ = writeln!(
        out,
        "messages            {} (sync {}, up {}, down {}, notify {})",
        msg.total(),
        msg.sync_requests,
        msg.uploads,
        msg.downloads,
        msg.notifications
    );
    out
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Line plot of one constraint over time, one polyline per vehicle.
pub fn trace_svg(m: &RunMetrics, which: usize) -> String {
    let pick = |p: &sim::TracePoint| if which == 1 { p.b1 } else { p.b2 };
    let pts: Vec<(f64, usize, f64)> = m
        .traces
        .iter()
        .filter_map(|p| pick(p).map(|b| (p.t, p.cav_id, b)))
        .collect();
    let (w, h, pad) = (800.0, 400.0, 50.0);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">b{which} ({})</text>",
        w / 2.0,
        m.scheme
    );
    if pts.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let (t0, t1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (y0, y1) = pts.iter().fold((0.0f64, f64::NEG_INFINITY), |(a, b), p| (a.min(p.2), b.max(p.2)));
    let tx = |t: f64| pad + (t - t0) / (t1 - t0).max(1e-9) * (w - 2.0 * pad);
    let ty = |y: f64| h - pad - (y - y0) / (y1 - y0).max(1e-9) * (h - 2.0 * pad);
    let _ = writeln!(
        svg,
        "<line x1=\"{pad}\" y1=\"{z:.2}\" x2=\"{x2}\" y2=\"{z:.2}\" stroke=\"black\" stroke-dasharray=\"4 3\"/>",
        z = ty(0.0),
        x2 = w - pad
    );
    let _ = writeln!(
        svg,
        "<polyline points=\"{pad},{pad} {pad},{b} {r},{b}\" fill=\"none\" stroke=\"black\"/>",
        b = h - pad,
        r = w - pad
    );
    for (label, x, y, anchor) in [
        (sig9(t0), pad, h - pad + 16.0, "start"),
        (sig9(t1), w - pad, h - pad + 16.0, "end"),
        (sig9(y0), pad - 4.0, h - pad, "end"),
        (sig9(y1), pad - 4.0, pad + 4.0, "end"),
    ] {
        let _ = writeln!(
            svg,
            "<text x=\"{x}\" y=\"{y}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"{anchor}\">{label}</text>"
        );
    }
    let mut ids: Vec<usize> = pts.iter().map(|p| p.1).collect();
    ids.sort_unstable();
    ids.dedup();
    for (k, id) in ids.iter().enumerate() {
        let line: Vec<String> = pts
            .iter()
            .filter(|p| p.1 == *id)
            .map(|p| format!("{:.2},{:.2}", tx(p.0), ty(p.2)))
            .collect();
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1\" points=\"{}\"><title>CAV {id}</title></polyline>",
            PALETTE[k % PALETTE.len()],
            line.join(" ")
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn write(path: PathBuf, content: &str) -> Result<PathBuf> {
    fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes `per_cav.csv`, `traces.csv`, `summary.txt` and, with `plots`,
/// `b1.svg` and `b2.svg` into `dir` (created if missing).
pub fn emit_outputs(m: &RunMetrics, dir: impl AsRef<Path>, plots: bool) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = vec![
        write(dir.join("per_cav.csv"), &per_cav_csv(m))?,
        write(dir.join("traces.csv"), &traces_csv(m))?,
        write(dir.join("summary.txt"), &summary_text(m))?,
    ];
    if plots {
        files.push(write(dir.join("b1.svg"), &trace_svg(m, 1))?);
        files.push(write(dir.join("b2.svg"), &trace_svg(m, 2))?);
    }
    Ok(files)
}

/// Splits `key=v1,v2,...` into one assignment per value.
pub fn parse_axis(spec: &str) -> Result<Vec<String>> {
    let (key, values) = spec
        .split_once('=')
        .ok_or_else(|| Error::Validation(format!("axis {spec:?} is not of the form key=v1,v2,...")))?;
    let out: Vec<String> = values
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| format!("{}={v}", key.trim()))
        .collect();
    if out.is_empty() {
        return Err(Error::Validation(format!("axis {spec:?} has no values")));
    }
    Ok(out)
}

/// One sweep cell: the configured scheme and the time-driven run on the
/// same arrivals and noise.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub label: String,
    pub scheme: Scheme,
    pub result: std::result::Result<(Summary, Summary), String>,
}

impl SweepRow {
    /// Scheme QP count as a percentage of the time-driven count.
    pub fn qp_percent(&self) -> Option<f64> {
        let (s, base) = self.result.as_ref().ok()?;
        (base.qp_count > 0).then(|| 100.0 * s.qp_count as f64 / base.qp_count as f64)
    }
}

fn sweep_cell(base: &ScenarioConfig, assignment: &str) -> std::result::Result<(Summary, Summary), String> {
    let cfg = config::apply_override(base, assignment).map_err(|e| e.to_string())?;
    let own = sim::run(&cfg).map_err(|e| e.to_string())?.summary();
    let baseline = if cfg.scheme == Scheme::TimeDriven {
        own
    } else {
        let td = ScenarioConfig {
            scheme: Scheme::TimeDriven,
            ..cfg.clone()
        };
        sim::run(&td).map_err(|e| e.to_string())?.summary()
    };
    Ok((own, baseline))
}

/// Runs every assignment concurrently. Failing cells carry their error
/// and do not affect the others.
pub fn run_sweep(base: &ScenarioConfig, axis: &[String]) -> Vec<SweepRow> {
    axis.par_iter()
        .map(|a| {
            let result = sweep_cell(base, a);
            let scheme = config::apply_override(base, a).map_or(base.scheme, |c| c.scheme);
            SweepRow {
                label: a.clone(),
                scheme,
                result,
            }
        })
        .collect()
}

pub fn sweep_table(rows: &[SweepRow]) -> String {
    let mut out = format!(
        "{:<24} {:<16} {:>12} {:>12} {:>12} {:>8} {:>8} {:>11} {:>14}\n",
        "cell", "scheme", "travel[s]", "1/2u^2", "fuel[mL]", "QPs", "QP%", "infeasible", "td infeasible"
    );
    for r in rows {
        match &r.result {
            Ok((s, base)) => {
                let pct = r.qp_percent().map_or("-".to_string(), |p| format!("{p:.1}"));
                let _ = writeln!(
                    out,
                    "{:<24} {:<16} {:>12.4} {:>12.4} {:>12.4} {:>8} {:>8} {:>11} {:>14}",
                    r.label,
                    r.scheme.as_str(),
                    s.avg_travel_time,
                    s.avg_energy,
                    s.avg_fuel,
                    s.qp_count,
                    pct,
                    s.infeasible_count,
                    base.infeasible_count
                );
            }
            Err(e) => {
                let _ = writeln!(out, "{:<24} {:<16} error: {e}", r.label, r.scheme.as_str());
            }
        }
    }
    out
}

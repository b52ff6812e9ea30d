//! File formats: CSV tables, dimension reports, run manifests and SVG plots.
//!
//! Column order of every CSV is fixed. Floats are written in the shortest form
//! that parses back to the same value, so files are byte-stable.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::analysis::{qm_pdown, Curve, DimensionEstimate};
use crate::dynamics::TracePoint;
use crate::ensemble::{angle_grid, EnsembleResult, RunPerturbation};
use crate::error::{Error, Result};
use crate::magnetics::FieldSample;

pub const OUTCOME_HEADER: &str = "theta_index,run_index,down,unsettled";
pub const CURVE_HEADER: &str = "theta,value";
pub const FIELD_HEADER: &str = "x,z,Bx,Bz";
pub const TRACE_HEADER: &str = "t,theta,y,Bx,Bz";
pub const DIMENSION_HEADER: &str = "L,k,ln_L,ln_k";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// One row per (angle, run), angle-major.
pub fn outcomes_csv(result: &EnsembleResult) -> String {
    let mut out = String::with_capacity(16 * result.n_angles() * result.n_runs() + 64);
    out.push_str(OUTCOME_HEADER);
    out.push('\n');
    for i in 0..result.n_angles() {
        for r in 0..result.n_runs() {
            let _ = writeln!(out, "{i},{r},{},{}", result.get(i, r), u8::from(result.is_unsettled(i, r)));
        }
    }
    out
}

fn data_lines<'a>(text: &'a str, header: &str, what: &str) -> Result<impl Iterator<Item = (usize, &'a str)>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == header => Ok(lines),
        Some((_, h)) => Err(Error::parse(what, format!("header `{h}`, expected `{header}`"))),
        None => Err(Error::parse(what, "empty file")),
    }
}

fn field<T: std::str::FromStr>(cell: Option<&str>, line: usize, what: &str) -> Result<T> {
    let cell = cell.ok_or_else(|| Error::parse(what, format!("line {}: missing column", line + 1)))?;
    cell.trim()
        .parse()
        .map_err(|_| Error::parse(what, format!("line {}: bad value `{cell}`", line + 1)))
}

/// Reads an outcome table back. The angle grid is rebuilt from the number of
/// angle indices; per-run perturbations live in the manifest, not here.
pub fn parse_outcomes_csv(text: &str) -> Result<EnsembleResult> {
    let what = "outcome csv";
    let mut rows: Vec<(usize, usize, u8, bool)> = Vec::new();
    for (n, line) in data_lines(text, OUTCOME_HEADER, what)? {
        let mut cells = line.split(',');
        let i = field(cells.next(), n, what)?;
        let r = field(cells.next(), n, what)?;
        let d: u8 = field(cells.next(), n, what)?;
        let u: u8 = field(cells.next(), n, what)?;
        if cells.next().is_some() || d > 1 || u > 1 {
            return Err(Error::parse(what, format!("line {}: malformed row", n + 1)));
        }
        rows.push((i, r, d, u == 1));
    }
    if rows.is_empty() {
        return Err(Error::parse(what, "no outcome rows"));
    }
    let n_angles = rows.iter().map(|r| r.0).max().unwrap_or(0) + 1;
    let n_runs = rows.iter().map(|r| r.1).max().unwrap_or(0) + 1;
    if rows.len() != n_angles * n_runs {
        return Err(Error::parse(what, format!("{} rows for a {n_angles} x {n_runs} table", rows.len())));
    }
    let mut outcomes = vec![0u8; rows.len()];
    let mut unsettled = vec![false; rows.len()];
    let mut filled = vec![false; rows.len()];
    for (i, r, d, u) in rows {
        let at = i * n_runs + r;
        if filled[at] {
            return Err(Error::parse(what, format!("duplicate row for angle {i}, run {r}")));
        }
        filled[at] = true;
        outcomes[at] = d;
        unsettled[at] = u;
    }
    let angles = angle_grid(n_angles).map_err(|e| Error::parse(what, e.to_string()))?;
    EnsembleResult::from_parts(angles, n_runs, outcomes, unsettled, Vec::new())
}

pub fn curve_csv(curve: &Curve) -> String {
    let mut out = format!("{CURVE_HEADER}\n");
    for (x, y) in curve.xs().iter().zip(curve.ys()) {
        let _ = writeln!(out, "{x},{y}");
    }
    out
}

pub fn parse_curve_csv(text: &str) -> Result<Curve> {
    let what = "curve csv";
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (n, line) in data_lines(text, CURVE_HEADER, what)? {
        let mut cells = line.split(',');
        xs.push(field::<f64>(cells.next(), n, what)?);
        ys.push(field::<f64>(cells.next(), n, what)?);
        if cells.next().is_some() {
            return Err(Error::parse(what, format!("line {}: extra column", n + 1)));
        }
    }
    if xs.is_empty() {
        return Err(Error::parse(what, "no data rows"));
    }
    Curve::new(xs, ys).map_err(|e| Error::parse(what, e.to_string()))
}

/// One sampled grid point; `None` marks a point too close to the wire.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldRow {
    pub x: f64,
    pub z: f64,
    pub field: Option<FieldSample>,
}

/// Flagged points are written with `nan` in both field columns.
pub fn field_csv(rows: &[FieldRow]) -> String {
    let mut out = format!("{FIELD_HEADER}\n");
    for row in rows {
        match row.field {
            Some(b) => writeln!(out, "{},{},{:e},{:e}", row.x, row.z, b.bx, b.bz),
            None => writeln!(out, "{},{},nan,nan", row.x, row.z),
        }
        .ok();
    }
    out
}

pub fn trace_csv(points: &[TracePoint]) -> String {
    let mut out = format!("{TRACE_HEADER}\n");
    for p in points {
        let _ = writeln!(out, "{:e},{},{:e},{:e},{:e}", p.t, p.theta, p.y, p.field.bx, p.field.bz);
    }
    out
}

/// Ruler table followed by the fitted dimension as comment lines.
pub fn dimension_report(estimate: &DimensionEstimate) -> String {
    let mut out = format!("{DIMENSION_HEADER}\n");
    for (l, k) in estimate.step_lengths.iter().zip(&estimate.counts) {
        let _ = writeln!(out, "{l},{k},{},{}", l.ln(), k.ln());
    }
    let _ = writeln!(out, "# d_f = {}", estimate.d_f);
    let _ = writeln!(out, "# fit_residual = {}", estimate.fit_residual);
    out
}

/// Everything needed to rerun a stage and check its outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub master_seed: u64,
    pub workers: usize,
    /// Canonical config text.
    pub config: String,
    pub perturbations: Vec<RunPerturbation>,
    /// `(file name relative to the output directory, sha256)`.
    pub digests: Vec<(String, String)>,
    pub wall_clock_secs: f64,
}

impl RunManifest {
    pub fn new(command: &str, master_seed: u64, workers: usize, config: String) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            master_seed,
            workers,
            config,
            perturbations: Vec::new(),
            digests: Vec::new(),
            wall_clock_secs: 0.0,
        }
    }

    /// Records the digest of an artifact under its relative name.
    pub fn record(&mut self, name: &str, contents: &[u8]) {
        self.digests.push((name.to_string(), sha256_hex(contents)));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# spinchaos run manifest");
        let _ = writeln!(out, "tool_version = {}", self.tool_version);
        let _ = writeln!(out, "command = {}", self.command);
        let _ = writeln!(out, "master_seed = {}", self.master_seed);
        let _ = writeln!(out, "workers = {}", self.workers);
        let _ = writeln!(out, "wall_clock_secs = {:.3}", self.wall_clock_secs);
        out.push_str("\n[config]\n");
        out.push_str(&self.config);
        if !self.perturbations.is_empty() {
            out.push_str("\n[perturbations]\nrun_index,dt_factor,x_start_offset,seed\n");
            for p in &self.perturbations {
                let _ = writeln!(out, "{},{},{},{}", p.run_index, p.dt_factor, p.x_start_offset, p.seed);
            }
        }
        out.push_str("\n[digests]\n");
        for (name, digest) in &self.digests {
            let _ = writeln!(out, "{digest}  {name}");
        }
        out
    }

    /// Recovers the config text and digest list from a rendered manifest.
    pub fn parse_sections(text: &str) -> Result<(String, Vec<(String, String)>)> {
        let mut section = "";
        let mut config = String::new();
        let mut digests = Vec::new();
        for line in text.lines() {
            if line.starts_with('[') && line.ends_with(']') {
                section = match line {
                    "[config]" => "config",
                    "[digests]" => "digests",
                    _ => "other",
                };
                continue;
            }
            match section {
                "config" if !line.is_empty() => {
                    config.push_str(line);
                    config.push('\n');
                }
                "digests" if !line.is_empty() => {
                    let (digest, name) = line
                        .split_once("  ")
                        .ok_or_else(|| Error::parse("manifest", format!("bad digest line `{line}`")))?;
                    digests.push((name.to_string(), digest.to_string()));
                }
                _ => {}
            }
        }
        if config.is_empty() {
            return Err(Error::parse("manifest", "missing [config] section"));
        }
        Ok((config, digests))
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;
const REFERENCE_SAMPLES: usize = 201;

fn px(theta: f64) -> f64 {
    LEFT + theta / PI * (WIDTH - LEFT - RIGHT)
}

fn py(p: f64) -> f64 {
    HEIGHT - BOTTOM - p * (HEIGHT - TOP - BOTTOM)
}

fn polyline(points: impl Iterator<Item = (f64, f64)>, colour: &str, label: &str) -> String {
    let coords: Vec<String> = points.map(|(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
    format!(
        "<polyline class=\"{label}\" fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
        coords.join(" ")
    )
}

/// Self-contained SVG of `sin^2(theta/2)` and, optionally, a simulated curve.
/// Each series is one polyline; axes use radians and probability.
pub fn plot_svg(simulation: Option<&Curve>) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let (x0, x1, y0, y1) = (px(0.0), px(PI), py(0.0), py(1.0));
    let _ = writeln!(s, "<g stroke=\"black\" stroke-width=\"1\">");
    let _ = writeln!(s, "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\"/>");
    let _ = writeln!(s, "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\"/>");
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"black\">");
    for (theta, label) in [(0.0, "0"), (PI / 4.0, "π/4"), (PI / 2.0, "π/2"), (3.0 * PI / 4.0, "3π/4"), (PI, "π")] {
        let _ = writeln!(s, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{label}</text>", px(theta), y0 + 18.0);
    }
    for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(s, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{p}</text>", x0 - 6.0, py(p) + 4.0);
    }
    let _ = writeln!(s, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">initial angle θ (rad)</text>", (x0 + x1) / 2.0, HEIGHT - 8.0);
    let _ = writeln!(
        s,
        "<text x=\"14\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.2})\">P(down)</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    let _ = writeln!(s, "</g>");

    let reference = (0..REFERENCE_SAMPLES).map(|i| {
        let theta = PI * i as f64 / (REFERENCE_SAMPLES - 1) as f64;
        (theta, qm_pdown(theta).unwrap_or(0.0))
    });
    s.push_str(&polyline(reference, "green", "QM"));
    let mut legend = vec![("green", "QM")];
    if let Some(curve) = simulation {
        let points = curve.xs().iter().copied().zip(curve.ys().iter().copied());
        s.push_str(&polyline(points, "blue", "simulation"));
        legend.push(("blue", "simulation"));
    }

    let _ = writeln!(s, "<g font-family=\"sans-serif\" font-size=\"12\">");
    for (row, (colour, label)) in legend.iter().enumerate() {
        let y = TOP + 14.0 + 18.0 * row as f64;
        let _ = writeln!(
            s,
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"{colour}\" stroke-width=\"2\"/>",
            x0 + 12.0,
            x0 + 36.0
        );
        let _ = writeln!(s, "<text x=\"{:.2}\" y=\"{:.2}\">{label}</text>", x0 + 42.0, y + 4.0);
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}

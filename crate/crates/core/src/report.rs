//! Rendering benchmark results: aligned text tables, CSV exports, and
//! self-contained SVG plots.
//!
//! Everything here is a pure function of its inputs; rendering the same
//! report twice yields byte-identical output. Wall-clock numbers stay in
//! their own table/CSV so the deterministic artifacts never embed them.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::bench::{BenchmarkReport, PlannerKind, TimingReport};
use crate::error::{Error, Result};
use crate::geom::{Config, GeometryVector};
use crate::planner::{Ball, PlanStatus};
use crate::scenario::Scenario;

fn fmt_opt(x: Option<f64>, prec: usize) -> String {
    match x {
        Some(v) => format!("{v:.prec$}"),
        None => "-".to_string(),
    }
}

/// Pads each column to its widest cell.
fn align(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(|r| r.len()).max().unwrap_or(0);
    let mut widths = vec![0usize; cols];
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(i, cell)| format!("{cell:>width$}", width = widths[i]))
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

/// Mean corridor residual over solved queries of one planner, if any
/// carried a residual.
fn mean_residual(report: &BenchmarkReport, planner: PlannerKind) -> Option<f64> {
    let vals: Vec<f64> = report
        .records
        .iter()
        .filter(|r| r.planner == planner)
        .filter_map(|r| r.residual)
        .collect();
    if vals.is_empty() {
        None
    } else {
        Some(vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

/// Headline comparison: success, path quality, validation. Time columns
/// live in the timing table, not here.
pub fn summary_table(report: &BenchmarkReport) -> String {
    let mut rows = vec![vec![
        "planner".to_string(),
        "solved".to_string(),
        "success".to_string(),
        "mean length".to_string(),
        "collisions".to_string(),
        "mean residual".to_string(),
    ]];
    for s in &report.summaries {
        rows.push(vec![
            s.planner.as_str().to_string(),
            format!("{}/{}", s.solved, s.attempted),
            format!("{:.1}%", 100.0 * s.success_rate),
            fmt_opt(s.mean_length, 4),
            format!("{:.1}%", 100.0 * s.collision_rate),
            fmt_opt(mean_residual(report, s.planner), 9),
        ]);
    }
    let mut out = format!(
        "system {}  backend {}  worlds {}  queries/world {}\n",
        report.system.as_str(),
        report.backend,
        report.config.num_worlds,
        report.config.queries_per_world
    );
    out.push_str(&align(&rows));
    for w in &report.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

/// Per-planner outcome counts against the exact detector.
pub fn validation_table(report: &BenchmarkReport) -> String {
    let mut rows = vec![vec![
        "planner".to_string(),
        "solved".to_string(),
        "no_path".to_string(),
        "unreachable".to_string(),
        "validated".to_string(),
        "in_collision".to_string(),
    ]];
    for planner in PlannerKind::ALL {
        let mine: Vec<_> = report.records.iter().filter(|r| r.planner == planner).collect();
        let count = |st: PlanStatus| mine.iter().filter(|r| r.status == st).count();
        let validated = mine.iter().filter(|r| r.validated == Some(true)).count();
        let colliding = mine.iter().filter(|r| r.validated == Some(false)).count();
        rows.push(vec![
            planner.as_str().to_string(),
            count(PlanStatus::Solved).to_string(),
            count(PlanStatus::NoPath).to_string(),
            count(PlanStatus::UnreachableQuery).to_string(),
            validated.to_string(),
            colliding.to_string(),
        ]);
    }
    align(&rows)
}

/// Wall-clock means, one row per planner.
pub fn timing_table(timing: &TimingReport) -> String {
    let mut rows = vec![vec![
        "planner".to_string(),
        "mean build s".to_string(),
        "mean query s".to_string(),
    ]];
    for planner in PlannerKind::ALL {
        let builds: Vec<f64> = timing
            .builds
            .iter()
            .filter(|b| b.planner == planner)
            .map(|b| b.seconds)
            .collect();
        let mean_build = if builds.is_empty() {
            None
        } else {
            Some(builds.iter().sum::<f64>() / builds.len() as f64)
        };
        rows.push(vec![
            planner.as_str().to_string(),
            fmt_opt(mean_build, 5),
            fmt_opt(timing.mean_query_seconds(planner), 6),
        ]);
    }
    align(&rows)
}

/// One CSV row per query record.
pub fn records_csv(report: &BenchmarkReport) -> String {
    let mut out = String::from(
        "world,query,planner,status,length,residual,optimizer_stalled,validated\n",
    );
    for r in &report.records {
        let status = match r.status {
            PlanStatus::Solved => "solved",
            PlanStatus::NoPath => "no_path",
            PlanStatus::UnreachableQuery => "unreachable_query",
        };
        let opt = |x: Option<f64>| x.map(|v| format!("{v}")).unwrap_or_default();
        let tri = |x: Option<bool>| match x {
            Some(true) => "true",
            Some(false) => "false",
            None => "",
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.world,
            r.query,
            r.planner.as_str(),
            status,
            opt(r.length),
            opt(r.residual),
            r.optimizer_stalled,
            tri(r.validated),
        );
    }
    out
}

/// One CSV row per planner summary.
pub fn summary_csv(report: &BenchmarkReport) -> String {
    let mut out =
        String::from("planner,attempted,solved,success_rate,mean_length,collision_rate\n");
    for s in &report.summaries {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            s.planner.as_str(),
            s.attempted,
            s.solved,
            s.success_rate,
            s.mean_length.map(|v| format!("{v}")).unwrap_or_default(),
            s.collision_rate,
        );
    }
    out
}

/// One CSV row per timed query.
pub fn timing_csv(timing: &TimingReport) -> String {
    let mut out = String::from("world,query,planner,seconds\n");
    for t in &timing.queries {
        let _ = writeln!(out, "{},{},{},{}", t.world, t.query, t.planner.as_str(), t.seconds);
    }
    out
}

struct SvgCanvas {
    body: String,
    min: [f64; 2],
    max: [f64; 2],
    scale: f64,
}

const SVG_SIDE: f64 = 720.0;

impl SvgCanvas {
    /// A canvas mapping the world box [min, max] (y up) onto a fixed-size
    /// viewport (y down), preserving aspect ratio.
    fn new(min: [f64; 2], max: [f64; 2]) -> SvgCanvas {
        let span = (max[0] - min[0]).max(max[1] - min[1]).max(1e-9);
        SvgCanvas { body: String::new(), min, max, scale: SVG_SIDE / span }
    }

    fn x(&self, wx: f64) -> f64 {
        (wx - self.min[0]) * self.scale
    }

    fn y(&self, wy: f64) -> f64 {
        (self.max[1] - wy) * self.scale
    }

    fn circle(&mut self, c: [f64; 2], r: f64, style: &str) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{:.3}" cy="{:.3}" r="{:.3}" {style}/>"#,
            self.x(c[0]),
            self.y(c[1]),
            r * self.scale,
        );
    }

    fn rect(&mut self, c: [f64; 2], h: [f64; 2], style: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" {style}/>"#,
            self.x(c[0] - h[0]),
            self.y(c[1] + h[1]),
            2.0 * h[0] * self.scale,
            2.0 * h[1] * self.scale,
        );
    }

    fn polyline(&mut self, pts: &[[f64; 2]], style: &str) {
        let coords: Vec<String> =
            pts.iter().map(|p| format!("{:.3},{:.3}", self.x(p[0]), self.y(p[1]))).collect();
        let _ = writeln!(self.body, r#"<polyline points="{}" {style}/>"#, coords.join(" "));
    }

    fn finish(self) -> String {
        let w = (self.max[0] - self.min[0]) * self.scale;
        let h = (self.max[1] - self.min[1]) * self.scale;
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" \
             viewBox=\"0 0 {w:.3} {h:.3}\">\n<rect width=\"100%\" height=\"100%\" \
             fill=\"white\"/>\n{}</svg>\n",
            self.body
        )
    }
}

/// Workspace view: obstacles plus the arm drawn at each given
/// configuration (first = start style, last = goal style, rest faint).
pub fn svg_workspace(scenario: &Scenario, configs: &[Config]) -> Result<String> {
    let reach = scenario.robot.reach();
    let mut min = [-reach, -reach];
    let mut max = [reach, reach];
    for g in &scenario.obstacles {
        let (c, ext) = match *g {
            GeometryVector::Circle { center, radius } => (center, [radius, radius]),
            GeometryVector::Aabb { center, half_extents } => (center, half_extents),
        };
        for k in 0..2 {
            min[k] = min[k].min(c[k] - ext[k]);
            max[k] = max[k].max(c[k] + ext[k]);
        }
    }
    let pad = 0.05 * (max[0] - min[0]).max(max[1] - min[1]);
    let mut canvas = SvgCanvas::new([min[0] - pad, min[1] - pad], [max[0] + pad, max[1] + pad]);

    for g in &scenario.obstacles {
        match *g {
            GeometryVector::Circle { center, radius } => {
                canvas.circle(center, radius, r##"fill="#c0c4cc" stroke="#6b7280""##);
            }
            GeometryVector::Aabb { center, half_extents } => {
                canvas.rect(center, half_extents, r##"fill="#c0c4cc" stroke="#6b7280""##);
            }
        }
    }
    for (i, q) in configs.iter().enumerate() {
        let caps = scenario.robot.forward_kinematics(q)?;
        let color = if i == 0 {
            "#1d4ed8"
        } else if i + 1 == configs.len() {
            "#b91c1c"
        } else {
            "#9ca3af"
        };
        let mut pts = vec![caps[0].a];
        for cap in caps.iter().take(scenario.robot.dof()) {
            pts.push(cap.b);
        }
        let width = (2.0 * scenario.robot.link_radius * canvas.scale).max(1.5);
        let style = format!(
            r#"fill="none" stroke="{color}" stroke-width="{width:.3}" stroke-linecap="round" stroke-linejoin="round" opacity="0.85""#
        );
        canvas.polyline(&pts, &style);
        canvas.circle(caps[0].a, scenario.robot.link_radius * 1.2, r##"fill="#111827""##);
    }
    Ok(canvas.finish())
}

/// Configuration-space view for 2-DOF systems: roadmap balls, a corridor,
/// and labelled polylines (e.g. graph path next to optimized path).
pub fn svg_cspace(
    limits: &[[f64; 2]],
    balls: &[Ball],
    corridor: &[Ball],
    paths: &[(&[Config], &str)],
) -> Result<String> {
    if limits.len() != 2 {
        return Err(Error::InvalidArgument(format!(
            "configuration-space plot needs 2 dof, got {}",
            limits.len()
        )));
    }
    let pad = 0.03 * (limits[0][1] - limits[0][0]).max(limits[1][1] - limits[1][0]);
    let mut canvas = SvgCanvas::new(
        [limits[0][0] - pad, limits[1][0] - pad],
        [limits[0][1] + pad, limits[1][1] + pad],
    );
    canvas.rect(
        [
            0.5 * (limits[0][0] + limits[0][1]),
            0.5 * (limits[1][0] + limits[1][1]),
        ],
        [
            0.5 * (limits[0][1] - limits[0][0]),
            0.5 * (limits[1][1] - limits[1][0]),
        ],
        r##"fill="none" stroke="#111827" stroke-width="1.5""##,
    );
    for b in balls {
        canvas.circle(
            [b.center[0], b.center[1]],
            b.radius,
            r##"fill="#dbeafe" fill-opacity="0.5" stroke="#93c5fd" stroke-width="0.7""##,
        );
    }
    for b in corridor {
        canvas.circle(
            [b.center[0], b.center[1]],
            b.radius,
            r##"fill="#fef3c7" fill-opacity="0.6" stroke="#f59e0b" stroke-width="1.0""##,
        );
    }
    for (path, color) in paths {
        let pts: Vec<[f64; 2]> = path.iter().map(|q| [q[0], q[1]]).collect();
        let style = format!(r#"fill="none" stroke="{color}" stroke-width="2.5""#);
        canvas.polyline(&pts, &style);
        if let (Some(first), Some(last)) = (pts.first(), pts.last()) {
            canvas.circle(*first, 0.35 / canvas.scale * 10.0, &format!(r#"fill="{color}""#));
            canvas.circle(*last, 0.35 / canvas.scale * 10.0, &format!(r#"fill="{color}""#));
        }
    }
    Ok(canvas.finish())
}

/// Writes the full artifact set for one sweep; returns the paths written.
pub fn write_artifacts(
    dir: &Path,
    report: &BenchmarkReport,
    timing: &TimingReport,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let files: Vec<(&str, String)> = vec![
        ("report.json", serde_json::to_string_pretty(report)? + "\n"),
        ("timing.json", serde_json::to_string_pretty(timing)? + "\n"),
        ("summary.txt", summary_table(report)),
        ("validation.txt", validation_table(report)),
        ("timing.txt", timing_table(timing)),
        ("records.csv", records_csv(report)),
        ("summary.csv", summary_csv(report)),
        ("timing.csv", timing_csv(timing)),
    ];
    let mut written = Vec::with_capacity(files.len());
    for (name, content) in files {
        let path = dir.join(name);
        std::fs::write(&path, content)?;
        written.push(path);
    }
    Ok(written)
}

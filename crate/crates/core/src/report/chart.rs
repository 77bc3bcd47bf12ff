//! Ascending volume line charts for matched and unmatched follow-up lesions.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::matching::ComparisonReport;

pub const DEFAULT_CHART_FLOOR: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartPair {
    pub prev_index: usize,
    pub follow_index: usize,
    pub prev_voxels: u64,
    pub follow_voxels: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub follow_index: usize,
    pub voxels: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ChartData {
    pub floor: u64,
    /// Sorted by baseline volume, then follow-up volume.
    pub matched: Vec<ChartPair>,
    /// Emerged lesions sorted by volume.
    pub unmatched: Vec<ChartPoint>,
}

/// Builds both chart series. A matched pair is kept when its follow-up
/// volume exceeds `floor`, an emerged lesion when its volume does.
pub fn chart_data(report: &ComparisonReport, floor: u64) -> ChartData {
    let mut matched: Vec<ChartPair> = report
        .matched
        .iter()
        .filter(|m| m.follow_voxels > floor)
        .map(|m| ChartPair {
            prev_index: m.prev_index,
            follow_index: m.follow_index,
            prev_voxels: m.prev_voxels,
            follow_voxels: m.follow_voxels,
        })
        .collect();
    matched.sort_by_key(|p| (p.prev_voxels, p.follow_voxels, p.follow_index));

    let mut unmatched: Vec<ChartPoint> = report
        .emerge
        .iter()
        .filter(|e| e.follow_voxels > floor)
        .map(|e| ChartPoint {
            follow_index: e.follow_index,
            voxels: e.follow_voxels,
        })
        .collect();
    unmatched.sort_by_key(|p| (p.voxels, p.follow_index));

    ChartData {
        floor,
        matched,
        unmatched,
    }
}

const PANEL_W: f64 = 480.0;
const PANEL_H: f64 = 320.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 40.0;
const Y_TICKS: u64 = 5;

const PREV_COLOR: &str = "#1f77b4";
const FOLLOW_COLOR: &str = "#d62728";
const EMERGE_COLOR: &str = "#2ca02c";

struct Series<'a> {
    name: &'a str,
    color: &'a str,
    values: Vec<u64>,
}

/// Smallest "nice" axis maximum (1, 2 or 5 times a power of ten) covering `max`.
fn nice_ceiling(max: u64) -> u64 {
    if max == 0 {
        return 1;
    }
    let mut base = 1u64;
    loop {
        for m in [1, 2, 5] {
            if base * m >= max {
                return base * m;
            }
        }
        base *= 10;
    }
}

fn panel(svg: &mut String, offset_x: f64, title: &str, series: &[Series]) {
    let n = series.iter().map(|s| s.values.len()).max().unwrap_or(0);
    let y_max = nice_ceiling(series.iter().flat_map(|s| s.values.iter().copied()).max().unwrap_or(0));
    let (x0, x1) = (offset_x + MARGIN_L, offset_x + PANEL_W - MARGIN_R);
    let (y0, y1) = (PANEL_H - MARGIN_B, MARGIN_T);
    let px = |i: usize| -> f64 {
        if n <= 1 {
            0.5 * (x0 + x1)
        } else {
            x0 + (x1 - x0) * i as f64 / (n - 1) as f64
        }
    };
    let py = |v: u64| -> f64 { y0 - (y0 - y1) * v as f64 / y_max as f64 };

    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="24.00" text-anchor="middle" font-size="14">{title}</text>"#,
        offset_x + PANEL_W / 2.0
    );
    let _ = writeln!(
        svg,
        r#"<line class="axis" x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<line class="axis" x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}" stroke="black"/>"#
    );
    for k in 0..=Y_TICKS {
        let v = y_max * k / Y_TICKS;
        let y = py(v);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="black"/>"#,
            x0 - 4.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="10">{v}</text>"#,
            x0 - 6.0,
            y + 3.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="11">lesions, ascending volume</text>"#,
        0.5 * (x0 + x1),
        PANEL_H - 10.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="11" transform="rotate(-90 {:.2} {:.2})">volume (voxels)</text>"#,
        offset_x + 14.0,
        0.5 * (y0 + y1),
        offset_x + 14.0,
        0.5 * (y0 + y1)
    );

    for s in series {
        if s.values.len() > 1 {
            let pts: Vec<String> = s
                .values
                .iter()
                .enumerate()
                .map(|(i, &v)| format!("{:.2},{:.2}", px(i), py(v)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{}"/>"#,
                pts.join(" "),
                s.color
            );
        }
        for (i, &v) in s.values.iter().enumerate() {
            let _ = writeln!(
                svg,
                r#"<circle class="marker" cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
                px(i),
                py(v),
                s.color
            );
        }
    }

    for (k, s) in series.iter().enumerate() {
        let ly = MARGIN_T + 8.0 + 16.0 * k as f64;
        let lx = x1 - 120.0;
        let _ = writeln!(
            svg,
            r#"<rect x="{lx:.2}" y="{:.2}" width="10" height="10" fill="{}"/>"#,
            ly - 9.0,
            s.color
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{ly:.2}" font-size="11">{}</text>"#,
            lx + 14.0,
            s.name
        );
    }
}

/// Two-panel SVG: matched pairs (baseline and follow-up volumes at the same
/// x position) on the left, emerged lesions on the right.
pub fn render_line_chart(data: &ChartData) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{PANEL_H:.0}" viewBox="0 0 {:.0} {PANEL_H:.0}">"#,
        2.0 * PANEL_W,
        2.0 * PANEL_W
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    panel(
        &mut svg,
        0.0,
        &format!("Matched lesions (volume > {})", data.floor),
        &[
            Series {
                name: "previous",
                color: PREV_COLOR,
                values: data.matched.iter().map(|p| p.prev_voxels).collect(),
            },
            Series {
                name: "follow-up",
                color: FOLLOW_COLOR,
                values: data.matched.iter().map(|p| p.follow_voxels).collect(),
            },
        ],
    );
    panel(
        &mut svg,
        PANEL_W,
        &format!("Unmatched lesions (volume > {})", data.floor),
        &[Series {
            name: "emerged",
            color: EMERGE_COLOR,
            values: data.unmatched.iter().map(|p| p.voxels).collect(),
        }],
    );
    svg.push_str("</svg>\n");
    svg
}

//! Volume tables and volume-bin statistics.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeling::LesionRecord;
use crate::matching::{Category, ComparisonReport};

pub const DEFAULT_BIN_THRESHOLDS: [f64; 2] = [200.0, 3500.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeBin {
    pub label: String,
    pub count: usize,
    pub proportion: f64,
    /// Proportion rounded to a whole percent, for display.
    pub percent: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeBins {
    pub thresholds: Vec<f64>,
    pub total: usize,
    pub bins: Vec<VolumeBin>,
}

impl VolumeBins {
    pub fn counts(&self) -> Vec<usize> {
        self.bins.iter().map(|b| b.count).collect()
    }

    pub fn percents(&self) -> Vec<u32> {
        self.bins.iter().map(|b| b.percent).collect()
    }

    /// One line per bin: `<=200: 70 (71%)`.
    pub fn display(&self) -> String {
        self.bins
            .iter()
            .map(|b| format!("{}: {} ({}%)\n", b.label, b.count, b.percent))
            .collect()
    }
}

fn fmt_threshold(t: f64) -> String {
    if t.fract() == 0.0 {
        format!("{}", t as i64)
    } else {
        format!("{t}")
    }
}

fn bin_of(v: f64, thresholds: &[f64]) -> usize {
    let k = thresholds.len();
    if k == 1 {
        return usize::from(v > thresholds[0]);
    }
    if v <= thresholds[0] {
        0
    } else if v >= thresholds[k - 1] {
        k
    } else {
        thresholds.iter().position(|&t| v <= t).expect("below the top threshold")
    }
}

/// Counts voxel volumes per bin.
///
/// With thresholds `t1 < .. < tk` the bins are `<= t1`, the open ranges
/// between consecutive thresholds (an inner threshold itself counts toward
/// the lower range) and `>= tk`. A single threshold gives `<= t1` and
/// `> t1`.
pub fn volume_bin_stats(volumes: &[u64], thresholds: &[f64]) -> Result<VolumeBins> {
    if thresholds.is_empty() {
        return Err(Error::InvalidConfig("at least one bin threshold is required".into()));
    }
    if thresholds.iter().any(|t| !t.is_finite() || *t <= 0.0) || thresholds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(format!(
            "bin thresholds must be positive and strictly ascending, got {thresholds:?}"
        )));
    }

    let k = thresholds.len();
    let mut counts = vec![0usize; k + 1];
    for &v in volumes {
        counts[bin_of(v as f64, thresholds)] += 1;
    }

    let labels: Vec<String> = if k == 1 {
        let t = fmt_threshold(thresholds[0]);
        vec![format!("<={t}"), format!(">{t}")]
    } else {
        std::iter::once(format!("<={}", fmt_threshold(thresholds[0])))
            .chain(
                thresholds
                    .windows(2)
                    .map(|w| format!("{}-{}", fmt_threshold(w[0]), fmt_threshold(w[1]))),
            )
            .chain(std::iter::once(format!(">={}", fmt_threshold(thresholds[k - 1]))))
            .collect()
    };

    let total = volumes.len();
    let bins = labels
        .into_iter()
        .zip(counts)
        .map(|(label, count)| {
            let proportion = if total == 0 { 0.0 } else { count as f64 / total as f64 };
            VolumeBin {
                label,
                count,
                proportion,
                percent: (proportion * 100.0).round() as u32,
            }
        })
        .collect();
    Ok(VolumeBins {
        thresholds: thresholds.to_vec(),
        total,
        bins,
    })
}

pub fn lesion_bin_stats(lesions: &[LesionRecord], thresholds: &[f64]) -> Result<VolumeBins> {
    let volumes: Vec<u64> = lesions.iter().map(|r| r.voxel_count).collect();
    volume_bin_stats(&volumes, thresholds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TableVolume {
    Single(u64),
    /// Baseline and follow-up voxel counts.
    Pair(u64, u64),
}

impl std::fmt::Display for TableVolume {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TableVolume::Single(v) => write!(f, "{v}"),
            TableVolume::Pair(p, q) => write!(f, "[{p}, {q}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VolumeRow {
    pub follow_index: usize,
    pub volume: TableVolume,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prev_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<Category>,
    /// The baseline lesion is shared with another follow-up lesion.
    pub shared_parent: bool,
}

/// One row per follow-up lesion in index order: matched lesions carry the
/// `[previous, follow-up]` pair, emerged ones a single volume.
pub fn volume_table(report: &ComparisonReport) -> Vec<VolumeRow> {
    let mut parents: HashMap<usize, usize> = HashMap::new();
    for m in &report.matched {
        *parents.entry(m.prev_index).or_default() += 1;
    }
    let mut rows: Vec<VolumeRow> = report
        .matched
        .iter()
        .map(|m| VolumeRow {
            follow_index: m.follow_index,
            volume: TableVolume::Pair(m.prev_voxels, m.follow_voxels),
            prev_index: Some(m.prev_index),
            category: m.category,
            shared_parent: parents[&m.prev_index] > 1,
        })
        .chain(report.emerge.iter().map(|e| VolumeRow {
            follow_index: e.follow_index,
            volume: TableVolume::Single(e.follow_voxels),
            prev_index: None,
            category: None,
            shared_parent: false,
        }))
        .collect();
    rows.sort_by_key(|r| r.follow_index);
    rows
}

fn category_str(c: Option<Category>) -> &'static str {
    match c {
        Some(Category::Grow) => "grow",
        Some(Category::Shrink) => "shrink",
        Some(Category::Stable) => "stable",
        None => "emerge",
    }
}

pub fn volume_table_csv(rows: &[VolumeRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Render(format!("csv: {e}"));
    w.write_record(["follow_index", "volume", "category", "prev_index", "shared_parent"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.follow_index.to_string(),
            r.volume.to_string(),
            category_str(r.category).to_string(),
            r.prev_index.map(|p| p.to_string()).unwrap_or_default(),
            r.shared_parent.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Render(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

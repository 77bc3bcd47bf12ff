//! Box-restricted threshold segmentation for annotation.
//!
//! Each operator-drawn box is thresholded on its own, either with a manual
//! threshold or with Otsu's method on the box contents, and the per-box
//! results are pasted onto a blank canvas the size of the source image.

use std::fs;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::slices::{BinaryPlane, Plane};

/// Pixel box with inclusive corners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundingBox2D {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl BoundingBox2D {
    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        if self.x0 > self.x1 || self.y0 > self.y1 {
            return Err(Error::InvalidBox(format!("{self:?} has inverted corners")));
        }
        if self.x1 >= width || self.y1 >= height {
            return Err(Error::InvalidBox(format!("{self:?} exceeds a {width}x{height} image")));
        }
        Ok(())
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.x0 <= x && x <= self.x1 && self.y0 <= y && y <= self.y1
    }

    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.y0..=self.y1).flat_map(move |y| (self.x0..=self.x1).map(move |x| (x, y)))
    }
}

/// One entry of `boxes.json`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxPrompt {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

impl BoxPrompt {
    pub fn bbox(&self) -> BoundingBox2D {
        BoundingBox2D {
            x0: self.x0,
            y0: self.y0,
            x1: self.x1,
            y1: self.y1,
        }
    }
}

pub fn load_boxes(path: impl AsRef<Path>) -> Result<Vec<BoxPrompt>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    /// Foreground at or below the threshold (hypointense lesions).
    #[default]
    Dark,
    /// Foreground at or above the threshold.
    Bright,
}

impl std::str::FromStr for Polarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dark" => Ok(Polarity::Dark),
            "bright" => Ok(Polarity::Bright),
            other => Err(Error::InvalidConfig(format!("unknown polarity {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OtsuThreshold {
    pub threshold: f64,
    /// Set when the patch holds a single value; `threshold` is that value.
    pub degenerate: bool,
}

/// Otsu's threshold over the distinct values of `patch`.
///
/// The split maximizing between-class variance separates the sorted distinct
/// values into a low and a high class; the returned threshold is the midpoint
/// between the highest low-class value and the lowest high-class value, so
/// it lies strictly between the two classes. Returns `None` for an empty
/// patch.
pub fn otsu_threshold(patch: &[f32]) -> Option<OtsuThreshold> {
    if patch.is_empty() {
        return None;
    }
    let mut values: Vec<f32> = patch.to_vec();
    values.sort_by(f32::total_cmp);

    // histogram over distinct values
    let mut levels: Vec<(f64, f64)> = Vec::new();
    for v in values {
        match levels.last_mut() {
            Some((lv, n)) if *lv == f64::from(v) => *n += 1.0,
            _ => levels.push((f64::from(v), 1.0)),
        }
    }
    if levels.len() == 1 {
        return Some(OtsuThreshold {
            threshold: levels[0].0,
            degenerate: true,
        });
    }

    let total: f64 = levels.iter().map(|(_, n)| n).sum();
    let sum_all: f64 = levels.iter().map(|(v, n)| v * n).sum();
    let (mut w0, mut s0) = (0.0, 0.0);
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (k, &(v, n)) in levels[..levels.len() - 1].iter().enumerate() {
        w0 += n;
        s0 += v * n;
        let w1 = total - w0;
        let mu0 = s0 / w0;
        let mu1 = (sum_all - s0) / w1;
        let between = w0 * w1 * (mu0 - mu1).powi(2);
        if between > best.0 {
            best = (between, k);
        }
    }
    let k = best.1;
    Some(OtsuThreshold {
        threshold: 0.5 * (levels[k].0 + levels[k + 1].0),
        degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxResult {
    pub bbox: BoundingBox2D,
    /// Threshold applied, `None` when the box was skipped.
    pub threshold: Option<f64>,
    pub skipped_degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BbtsOutput {
    pub mask: BinaryPlane,
    pub boxes: Vec<BoxResult>,
}

impl BbtsOutput {
    pub fn warnings(&self) -> impl Iterator<Item = &BoxResult> {
        self.boxes.iter().filter(|b| b.skipped_degenerate)
    }
}

/// Thresholds each box and unions the results on a zero canvas.
///
/// A box's own threshold wins over `manual_threshold`, which wins over
/// Otsu. A constant patch with no manual threshold is skipped with a warning.
pub fn bbts_segment(
    image: &Plane,
    boxes: &[BoxPrompt],
    polarity: Polarity,
    manual_threshold: Option<f64>,
) -> Result<BbtsOutput> {
    let mut mask = BinaryPlane::zeros(image.width, image.height);
    let mut results = Vec::with_capacity(boxes.len());

    for prompt in boxes {
        let bbox = prompt.bbox();
        bbox.validate(image.width, image.height)?;
        let threshold = match prompt.threshold.or(manual_threshold) {
            Some(t) => Some(t),
            None => {
                let patch: Vec<f32> = bbox.pixels().map(|(x, y)| image.get(x, y)).collect();
                let otsu = otsu_threshold(&patch).expect("validated boxes are nonempty");
                if otsu.degenerate {
                    warn!("box {bbox:?} holds a constant patch; skipped");
                    None
                } else {
                    Some(otsu.threshold)
                }
            }
        };
        if let Some(t) = threshold {
            for (x, y) in bbox.pixels() {
                let v = f64::from(image.get(x, y));
                let on = match polarity {
                    Polarity::Dark => v <= t,
                    Polarity::Bright => v >= t,
                };
                if on {
                    mask.set(x, y, true);
                }
            }
        }
        results.push(BoxResult {
            bbox,
            threshold,
            skipped_degenerate: threshold.is_none(),
        });
    }
    Ok(BbtsOutput { mask, boxes: results })
}

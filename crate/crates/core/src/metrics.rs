//! Overlap scores for binary segmentations: Dice, mIoU, precision, recall, F1.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nifti::read_nifti;
use crate::slices::{load_plane, DEFAULT_MASK_THRESHOLD};
use crate::volume::MaskVolume;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        ConfusionCounts {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
            tn: self.tn + o.tn,
        }
    }
}

impl std::iter::Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(ConfusionCounts::default(), |a, b| a + b)
    }
}

/// Voxelwise tallies; any nonzero value counts as foreground.
pub fn confusion(pred: &[u8], gt: &[u8]) -> Result<ConfusionCounts> {
    if pred.len() != gt.len() {
        return Err(Error::ShapeMismatch(format!(
            "prediction has {} elements, ground truth {}",
            pred.len(),
            gt.len()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (&p, &g) in pred.iter().zip(gt) {
        match (p != 0, g != 0) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

pub fn confusion_masks(pred: &MaskVolume, gt: &MaskVolume) -> Result<ConfusionCounts> {
    if pred.dims() != gt.dims() {
        return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", pred.dims(), gt.dims())));
    }
    confusion(pred.data(), gt.data())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub dice: f64,
    pub miou: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Ratio with the empty-agreement convention: `0/0` is 1 when there are no
/// false positives or negatives, 0 otherwise.
fn ratio(num: f64, den: f64, perfect: bool) -> f64 {
    if den == 0.0 {
        if perfect {
            1.0
        } else {
            0.0
        }
    } else {
        num / den
    }
}

pub fn scores(c: &ConfusionCounts) -> Scores {
    let (tp, fp, fn_) = (c.tp as f64, c.fp as f64, c.fn_ as f64);
    let perfect = c.fp + c.fn_ == 0;
    let precision = ratio(tp, tp + fp, perfect);
    let recall = ratio(tp, tp + fn_, perfect);
    Scores {
        dice: ratio(2.0 * tp, 2.0 * tp + fn_ + fp, perfect),
        miou: ratio(tp, tp + fn_ + fp, perfect),
        precision,
        recall,
        f1: ratio(2.0 * recall * precision, precision + recall, perfect),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Scores of the summed confusion counts.
    #[default]
    Micro,
    /// Mean of per-image scores.
    Macro,
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregation::Micro => "micro",
            Aggregation::Macro => "macro",
        })
    }
}

impl std::str::FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "micro" => Ok(Aggregation::Micro),
            "macro" => Ok(Aggregation::Macro),
            other => Err(Error::InvalidConfig(format!("unknown aggregation mode {other:?}"))),
        }
    }
}

pub fn aggregate(counts: &[ConfusionCounts], mode: Aggregation) -> Scores {
    match mode {
        Aggregation::Micro => scores(&counts.iter().copied().sum()),
        Aggregation::Macro => {
            if counts.is_empty() {
                return scores(&ConfusionCounts::default());
            }
            let n = counts.len() as f64;
            let per: Vec<Scores> = counts.iter().map(scores).collect();
            let mean = |f: fn(&Scores) -> f64| per.iter().map(f).sum::<f64>() / n;
            Scores {
                dice: mean(|s| s.dice),
                miou: mean(|s| s.miou),
                precision: mean(|s| s.precision),
                recall: mean(|s| s.recall),
                f1: mean(|s| s.f1),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageScore {
    pub name: String,
    pub counts: ConfusionCounts,
    pub scores: Scores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub mode: Aggregation,
    pub rows: Vec<ImageScore>,
    pub aggregate: Scores,
}

impl ScoreTable {
    pub fn from_counts(named: Vec<(String, ConfusionCounts)>, mode: Aggregation) -> Self {
        let counts: Vec<ConfusionCounts> = named.iter().map(|(_, c)| *c).collect();
        let aggregate = aggregate(&counts, mode);
        let rows = named
            .into_iter()
            .map(|(name, counts)| ImageScore {
                scores: scores(&counts),
                name,
                counts,
            })
            .collect();
        ScoreTable { mode, rows, aggregate }
    }

    /// Per-image rows followed by an aggregate row named after the mode.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Render(e.to_string());
        w.write_record(["name", "tp", "fp", "fn", "tn", "dice", "miou", "precision", "recall", "f1"])
            .map_err(csv_err)?;
        let fmt = |v: f64| format!("{v:.6}");
        for r in &self.rows {
            let c = r.counts;
            let s = r.scores;
            w.write_record([
                r.name.clone(),
                c.tp.to_string(),
                c.fp.to_string(),
                c.fn_.to_string(),
                c.tn.to_string(),
                fmt(s.dice),
                fmt(s.miou),
                fmt(s.precision),
                fmt(s.recall),
                fmt(s.f1),
            ])
            .map_err(csv_err)?;
        }
        let total: ConfusionCounts = self.rows.iter().map(|r| r.counts).sum();
        let s = self.aggregate;
        w.write_record([
            format!("{}_aggregate", self.mode),
            total.tp.to_string(),
            total.fp.to_string(),
            total.fn_.to_string(),
            total.tn.to_string(),
            fmt(s.dice),
            fmt(s.miou),
            fmt(s.precision),
            fmt(s.recall),
            fmt(s.f1),
        ])
        .map_err(csv_err)?;
        let bytes = w.into_inner().map_err(|e| Error::Render(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn is_mask_file(p: &Path) -> bool {
    p.is_file()
        && p.extension()
            .and_then(|e| e.to_str())
            .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "pgm" | "nii"))
            .unwrap_or(false)
}

/// Loads a mask file (2D PNG/PGM or 3D `.nii`), foreground above 0.5.
pub fn load_binary(path: &Path) -> Result<Vec<u8>> {
    let is_nii = path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("nii"));
    if is_nii {
        Ok(read_nifti(path)?.binarize(DEFAULT_MASK_THRESHOLD).data().to_vec())
    } else {
        Ok(load_plane(path)?.binarize(DEFAULT_MASK_THRESHOLD).data)
    }
}

/// Scores every prediction in `pred_dir` against the same-named file in
/// `gt_dir`. Files are visited in name order.
pub fn evaluate_set(pred_dir: impl AsRef<Path>, gt_dir: impl AsRef<Path>, mode: Aggregation) -> Result<ScoreTable> {
    let (pred_dir, gt_dir) = (pred_dir.as_ref(), gt_dir.as_ref());
    let list = |dir: &Path| -> Result<Vec<PathBuf>> {
        let mut v: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| is_mask_file(p))
            .collect();
        v.sort();
        Ok(v)
    };
    let preds = list(pred_dir)?;
    if preds.is_empty() {
        return Err(Error::EmptyDirectory(pred_dir.to_path_buf()));
    }
    let gts = list(gt_dir)?;
    for g in &gts {
        if !preds.iter().any(|p| p.file_name() == g.file_name()) {
            return Err(Error::MissingPair(format!("{} has no prediction", g.display())));
        }
    }

    let mut named = Vec::with_capacity(preds.len());
    for p in preds {
        let name = p.file_name().unwrap().to_string_lossy().into_owned();
        let g = gt_dir.join(&name);
        if !g.is_file() {
            return Err(Error::MissingPair(format!("{} has no ground truth", p.display())));
        }
        let counts = confusion(&load_binary(&p)?, &load_binary(&g)?)
            .map_err(|e| Error::ShapeMismatch(format!("{name}: {e}")))?;
        named.push((name, counts));
    }
    Ok(ScoreTable::from_counts(named, mode))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(tp: u64, fp: u64, fn_: u64, tn: u64) -> ConfusionCounts {
        ConfusionCounts { tp, fp, fn_, tn }
    }

    #[test]
    fn confusion_cases() {
        let mut gt = vec![0u8; 100];
        gt[..10].fill(1);
        assert_eq!(confusion(&gt, &gt).unwrap(), c(10, 0, 0, 90));
        assert_eq!(confusion(&[0; 100], &gt).unwrap(), c(0, 0, 10, 90));

        let mut a = vec![0u8; 64];
        let mut b = vec![0u8; 64];
        a[0..4].fill(1);
        b[2..6].fill(1);
        assert_eq!(confusion(&a, &b).unwrap(), c(2, 2, 2, 58));
        assert!(confusion(&a, &b[..10]).is_err());
    }

    #[test]
    fn worked_scores() {
        let s = scores(&c(2, 2, 2, 0));
        assert_eq!(s.dice, 0.5);
        assert_eq!(s.miou, 1.0 / 3.0);
        assert_eq!(s.precision, 0.5);
        assert_eq!(s.recall, 0.5);
        assert_eq!(s.f1, 0.5);
    }

    #[test]
    fn perfect_and_disjoint() {
        let p = scores(&c(5, 0, 0, 3));
        assert_eq!([p.dice, p.miou, p.precision, p.recall, p.f1], [1.0; 5]);
        let e = scores(&c(0, 0, 0, 9));
        assert_eq!([e.dice, e.miou, e.precision, e.recall, e.f1], [1.0; 5]);
        let d = scores(&c(0, 4, 4, 10));
        assert_eq!([d.dice, d.miou, d.precision, d.recall, d.f1], [0.0; 5]);
    }

    #[test]
    fn micro_vs_macro() {
        let counts = [c(1, 1, 0, 0), c(1, 0, 1, 0)];
        let micro = aggregate(&counts, Aggregation::Micro);
        let macro_ = aggregate(&counts, Aggregation::Macro);
        assert!((micro.dice - 4.0 / 6.0).abs() < 1e-15);
        assert!((macro_.dice - 2.0 / 3.0).abs() < 1e-15);
        let single = [c(3, 1, 2, 5)];
        assert_eq!(aggregate(&single, Aggregation::Micro), aggregate(&single, Aggregation::Macro));
    }

    #[test]
    fn csv_has_aggregate_row() {
        let t = ScoreTable::from_counts(vec![("a.png".into(), c(1, 1, 0, 2))], Aggregation::Micro);
        let csv = t.to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("micro_aggregate,1,1,0,2,0.666667"));
    }
}

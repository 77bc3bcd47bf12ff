//! End-to-end commands: each reads its inputs, runs the relevant modules and
//! writes its artifacts into the configured output directory.

use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::bbts::{bbts_segment, load_boxes, BoxResult, Polarity};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::labeling::{extract_lesions, label_components, LesionLabelMap, LesionRecord};
use crate::matching::{classify_matches, match_lesions, ComparisonReport};
use crate::metrics::{evaluate_set, Aggregation, ScoreTable};
use crate::nifti::{read_nifti, write_nifti};
use crate::registration::{
    register_rigid, resample_labelmap, resample_volume, LevelTrace, RigidTransform, TransformRecord,
};
use crate::report::{
    chart_data, lesion_bin_stats, render_collage, render_line_chart, volume_table, volume_table_csv, CollageLayout,
    VolumeBins, VolumeRow,
};
use crate::slices::{load_plane, stack_slices};
use crate::volume::{Grid, MaskVolume, Volume};

/// Spacing assumed for slice-stack masks, which carry none.
pub const SLICE_STACK_SPACING: [f64; 3] = [1.0, 1.0, 1.0];

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads a binary mask from a NIfTI file or a directory of slice images.
pub fn load_mask(path: impl AsRef<Path>, threshold: f64) -> Result<MaskVolume> {
    let path = path.as_ref();
    if path.is_dir() {
        stack_slices(path, SLICE_STACK_SPACING, threshold)
    } else {
        Ok(read_nifti(path)?.binarize(threshold))
    }
}

fn check_grids(what: &str, image: &Grid, mask: &Grid) -> Result<()> {
    if image.matches(mask) {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "{what}: image {:?} @ {:?} mm vs mask {:?} @ {:?} mm",
            image.dims, image.spacing, mask.dims, mask.spacing
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LesionFile {
    pub config: RunConfig,
    #[serde(flatten)]
    pub grid: Grid,
    pub lesion_count: usize,
    pub lesions: Vec<LesionRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinsFile {
    pub config: RunConfig,
    pub bins: VolumeBins,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelOutput {
    pub lesions: LesionFile,
    pub bins: BinsFile,
    pub written: Vec<PathBuf>,
}

/// Labels a mask and writes `lesions.json` and `bins.json`.
pub fn cmd_label(mask_path: &Path, cfg: &RunConfig) -> Result<LabelOutput> {
    cfg.validate()?;
    let mask = load_mask(mask_path, cfg.mask_threshold)?;
    let map = label_components(&mask, cfg.connectivity);
    let lesions = extract_lesions(&map, cfg.min_voxels);
    info!("{} lesions in {}", lesions.len(), mask_path.display());

    let bins = BinsFile {
        config: cfg.clone(),
        bins: lesion_bin_stats(&lesions, &cfg.bins)?,
    };
    let file = LesionFile {
        config: cfg.clone(),
        grid: *mask.grid(),
        lesion_count: lesions.len(),
        lesions,
    };
    let lp = cfg.out.join("lesions.json");
    let bp = cfg.out.join("bins.json");
    write_text(&lp, &to_json(&file))?;
    write_text(&bp, &to_json(&bins))?;
    Ok(LabelOutput {
        lesions: file,
        bins,
        written: vec![lp, bp],
    })
}

/// Content of `transform.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformFile {
    pub transform: TransformRecord,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<LevelSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub factor: usize,
    pub iterations: usize,
    pub hit_iteration_cap: bool,
    pub final_ncc: f64,
}

impl From<&LevelTrace> for LevelSummary {
    fn from(t: &LevelTrace) -> Self {
        LevelSummary {
            factor: t.factor,
            iterations: t.iterations,
            hit_iteration_cap: t.hit_iteration_cap,
            final_ncc: t.accepted_ncc.last().copied().unwrap_or(f64::NAN),
        }
    }
}

pub fn load_transform(path: &Path) -> Result<TransformRecord> {
    let file: TransformFile = read_json(path)?;
    file.transform.transform()?;
    Ok(file.transform)
}

fn register(fixed: &Volume, moving: &Volume, cfg: &RunConfig) -> Result<TransformFile> {
    let outcome = register_rigid(fixed, moving, &cfg.registration)?;
    if !outcome.converged {
        warn!("registration hit the iteration cap on every level");
    }
    info!(
        "registration: rotation {:?} deg, translation {:?} mm, ncc {:.6}",
        outcome.transform.rotation_deg, outcome.transform.translation_mm, outcome.final_ncc
    );
    Ok(TransformFile {
        transform: outcome.record(),
        levels: outcome.levels.iter().map(LevelSummary::from).collect(),
        config: Some(cfg.clone()),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegisterOutput {
    pub transform: TransformFile,
    pub written: Vec<PathBuf>,
}

/// Registers `moving` onto `fixed`; writes `transform.json` and the moving
/// image resampled onto the fixed grid as `registered.nii`.
pub fn cmd_register(fixed_path: &Path, moving_path: &Path, cfg: &RunConfig) -> Result<RegisterOutput> {
    cfg.validate()?;
    let fixed = read_nifti(fixed_path)?;
    let moving = read_nifti(moving_path)?;
    let file = register(&fixed, &moving, cfg)?;
    let t = file.transform.transform()?;
    let tp = cfg.out.join("transform.json");
    let rp = cfg.out.join("registered.nii");
    write_text(&tp, &to_json(&file))?;
    write_nifti(&resample_volume(&moving, &t, fixed.grid()), &rp)?;
    Ok(RegisterOutput {
        transform: file,
        written: vec![tp, rp],
    })
}

/// Image and mask of one examination.
#[derive(Debug, Clone, Copy)]
pub struct ExamPaths<'a> {
    pub image: &'a Path,
    pub mask: &'a Path,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub prev_lesions: usize,
    pub follow_lesions: usize,
    pub matched: usize,
    pub emerge: usize,
    pub vanish: usize,
    /// Baseline lesions shared by several follow-up lesions.
    pub many_to_one: Vec<(usize, Vec<usize>)>,
}

/// Content of `comparison.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonFile {
    pub config: RunConfig,
    pub transform: TransformRecord,
    pub summary: ComparisonSummary,
    #[serde(flatten)]
    pub report: ComparisonReport,
    pub prev_lesions: Vec<LesionRecord>,
    pub follow_lesions: Vec<LesionRecord>,
}

impl ComparisonFile {
    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareOutput {
    pub comparison: ComparisonFile,
    pub written: Vec<PathBuf>,
}

fn load_exam(what: &str, paths: ExamPaths, cfg: &RunConfig) -> Result<(Volume, LesionLabelMap, Vec<LesionRecord>)> {
    let image = read_nifti(paths.image)?;
    let mask = load_mask(paths.mask, cfg.mask_threshold)?;
    check_grids(what, image.grid(), mask.grid())?;
    let map = label_components(&mask, cfg.connectivity);
    let lesions = extract_lesions(&map, cfg.min_voxels);
    Ok((image, map, lesions))
}

/// Full two-examination comparison. Uses the transform in
/// `transform_path` when given, otherwise registers the follow-up image onto
/// the baseline image. Writes `comparison.json` and `transform.json`.
pub fn cmd_compare(
    prev: ExamPaths,
    follow: ExamPaths,
    transform_path: Option<&Path>,
    cfg: &RunConfig,
) -> Result<CompareOutput> {
    cfg.validate()?;
    let (prev_image, _, prev_lesions) = load_exam("baseline", prev, cfg)?;
    let (follow_image, follow_map, follow_lesions) = load_exam("follow-up", follow, cfg)?;

    let tfile = match transform_path {
        Some(p) => TransformFile {
            transform: load_transform(p)?,
            levels: Vec::new(),
            config: Some(cfg.clone()),
        },
        None => register(&prev_image, &follow_image, cfg)?,
    };
    let transform: RigidTransform = tfile.transform.transform()?;

    let registered = resample_labelmap(&follow_map, &transform, prev_image.grid());
    let registered_lesions = extract_lesions(&registered, 0);
    let outcome = match_lesions(&prev_lesions, &registered_lesions, &follow_lesions, cfg.min_ioc);
    let report = classify_matches(outcome, &prev_lesions, cfg.comparison_params());
    for e in report.emerge.iter().filter(|e| e.resampling_loss) {
        warn!("follow-up lesion {} vanished on resampling into baseline space", e.follow_index);
    }

    let summary = ComparisonSummary {
        prev_lesions: prev_lesions.len(),
        follow_lesions: follow_lesions.len(),
        matched: report.matched.len(),
        emerge: report.emerge.len(),
        vanish: report.vanish.len(),
        many_to_one: report.many_to_one(),
    };
    info!(
        "matched {}, emerge {}, vanish {}",
        summary.matched, summary.emerge, summary.vanish
    );
    let comparison = ComparisonFile {
        config: cfg.clone(),
        transform: tfile.transform.clone(),
        summary,
        report,
        prev_lesions,
        follow_lesions,
    };
    let cp = cfg.out.join("comparison.json");
    let tp = cfg.out.join("transform.json");
    write_text(&cp, &to_json(&comparison))?;
    write_text(&tp, &to_json(&tfile))?;
    Ok(CompareOutput {
        comparison,
        written: vec![cp, tp],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableFile {
    pub config: RunConfig,
    pub rows: Vec<VolumeRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOutput {
    pub pages: usize,
    pub written: Vec<PathBuf>,
}

/// Renders the report artifacts of a comparison: collages of the follow-up
/// examination with lesion contours and indices, the volume chart, the
/// volume table and the volume bins of the follow-up lesions.
///
/// `follow` must be the follow-up examination the comparison was computed
/// from; its lesions are relabelled and checked against the comparison.
pub fn cmd_report(
    comparison_path: &Path,
    follow: ExamPaths,
    slices: Option<Range<usize>>,
    stem: &str,
    cfg: &RunConfig,
) -> Result<ReportOutput> {
    cfg.validate()?;
    let comparison = ComparisonFile::load(comparison_path)?;
    let label_cfg = RunConfig {
        connectivity: comparison.config.connectivity,
        min_voxels: comparison.config.min_voxels,
        mask_threshold: comparison.config.mask_threshold,
        ..cfg.clone()
    };
    let (image, map, lesions) = load_exam("follow-up", follow, &label_cfg)?;
    let counts = |v: &[LesionRecord]| v.iter().map(|r| (r.index, r.voxel_count)).collect::<Vec<_>>();
    if counts(&lesions) != counts(&comparison.follow_lesions) {
        return Err(Error::InvalidConfig(format!(
            "follow-up lesions of {} differ from those in {}",
            follow.mask.display(),
            comparison_path.display()
        )));
    }

    let mut written = Vec::new();
    let nz = image.dims()[2];
    let layout = CollageLayout {
        columns: cfg.columns,
        rows_per_page: None,
    };
    let pages = render_collage(&image, &map, &lesions, slices.unwrap_or(0..nz), &layout)?;
    for (k, page) in pages.iter().enumerate() {
        let p = cfg.out.join(format!("{stem}_collage_{}.png", k + 1));
        fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
        page.save_png(&p)?;
        written.push(p);
    }

    let chart = render_line_chart(&chart_data(&comparison.report, cfg.chart_floor));
    let p = cfg.out.join(format!("{stem}_chart.svg"));
    write_text(&p, &chart)?;
    written.push(p);

    let rows = volume_table(&comparison.report);
    let p = cfg.out.join(format!("{stem}_table.csv"));
    write_text(&p, &volume_table_csv(&rows)?)?;
    written.push(p);
    let p = cfg.out.join(format!("{stem}_table.json"));
    write_text(
        &p,
        &to_json(&TableFile {
            config: cfg.clone(),
            rows,
        }),
    )?;
    written.push(p);

    let bins = BinsFile {
        config: cfg.clone(),
        bins: lesion_bin_stats(&lesions, &cfg.bins)?,
    };
    let p = cfg.out.join(format!("{stem}_bins.json"));
    write_text(&p, &to_json(&bins))?;
    written.push(p);

    Ok(ReportOutput {
        pages: pages.len(),
        written,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoresFile {
    pub config: RunConfig,
    pub scores: ScoreTable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutput {
    pub scores: ScoresFile,
    pub written: Vec<PathBuf>,
}

/// Scores every prediction against its same-named ground truth; writes
/// `scores.csv` and `scores.json`.
pub fn cmd_eval(pred_dir: &Path, gt_dir: &Path, mode: Aggregation, cfg: &RunConfig) -> Result<EvalOutput> {
    cfg.validate()?;
    let table = evaluate_set(pred_dir, gt_dir, mode)?;
    let cp = cfg.out.join("scores.csv");
    let jp = cfg.out.join("scores.json");
    write_text(&cp, &table.to_csv()?)?;
    let scores = ScoresFile {
        config: cfg.clone(),
        scores: table,
    };
    write_text(&jp, &to_json(&scores))?;
    Ok(EvalOutput {
        scores,
        written: vec![cp, jp],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BbtsFile {
    pub config: RunConfig,
    pub polarity: Polarity,
    pub foreground_pixels: usize,
    pub boxes: Vec<BoxResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BbtsCmdOutput {
    pub summary: BbtsFile,
    pub written: Vec<PathBuf>,
}

/// Box-restricted thresholding of one slice image; writes
/// `<stem>_mask.png` and `<stem>_bbts.json`.
pub fn cmd_bbts(
    image_path: &Path,
    boxes_path: &Path,
    polarity: Polarity,
    threshold: Option<f64>,
    cfg: &RunConfig,
) -> Result<BbtsCmdOutput> {
    cfg.validate()?;
    let image = load_plane(image_path)?;
    let boxes = load_boxes(boxes_path)?;
    let out = bbts_segment(&image, &boxes, polarity, threshold)?;
    let stem = image_path.file_stem().and_then(|s| s.to_str()).unwrap_or("image");
    let mp = cfg.out.join(format!("{stem}_mask.png"));
    let jp = cfg.out.join(format!("{stem}_bbts.json"));
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    out.mask.save_png(&mp)?;
    let summary = BbtsFile {
        config: cfg.clone(),
        polarity,
        foreground_pixels: out.mask.foreground_count(),
        boxes: out.boxes,
    };
    write_text(&jp, &to_json(&summary))?;
    Ok(BbtsCmdOutput {
        summary,
        written: vec![mp, jp],
    })
}

/// Serializes a command's main record for `--stdout`.
pub fn json_string<T: Serialize>(value: &T) -> String {
    to_json(value)
}

//! Full report for the synthetic longitudinal case: comparison, slice
//! collage with contours and indices, volume chart, volume table and bins.
//!
//! cargo run --release --example render_report [OUT_DIR]

use std::path::PathBuf;

use lesionstat::config::RunConfig;
use lesionstat::nifti::write_nifti;
use lesionstat::phantom::LongitudinalPhantom;
use lesionstat::pipeline::{cmd_compare, cmd_report, ExamPaths};

fn main() -> lesionstat::Result<()> {
    let out = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("lesionstat_report"));
    std::fs::create_dir_all(&out).map_err(|e| lesionstat::Error::Io {
        path: out.clone(),
        source: e,
    })?;

    let ph = LongitudinalPhantom::standard()?;
    let files = ["prev_image.nii", "prev_mask.nii", "follow_image.nii", "follow_mask.nii"].map(|f| out.join(f));
    write_nifti(&ph.baseline.image, &files[0])?;
    write_nifti(&ph.baseline.mask.to_volume(), &files[1])?;
    write_nifti(&ph.follow.image, &files[2])?;
    write_nifti(&ph.follow.mask.to_volume(), &files[3])?;

    let cfg = RunConfig {
        stability_tolerance: 0.15,
        chart_floor: 0,
        columns: 6,
        out: out.clone(),
        ..RunConfig::default()
    };
    let prev = ExamPaths {
        image: &files[0],
        mask: &files[1],
    };
    let follow = ExamPaths {
        image: &files[2],
        mask: &files[3],
    };
    let compared = cmd_compare(prev, follow, None, &cfg)?;
    let report = cmd_report(&compared.written[0], follow, Some(14..50), "phantom", &cfg)?;
    for p in compared.written.iter().chain(&report.written) {
        println!("{}", p.display());
    }
    Ok(())
}

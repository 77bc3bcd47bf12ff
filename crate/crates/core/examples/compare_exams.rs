//! Two synthetic examinations of the same patient: registration, lesion
//! matching and the grow/shrink/emerge/vanish breakdown.
//!
//! cargo run --release --example compare_exams [OUT_DIR]

use std::path::PathBuf;

use lesionstat::config::RunConfig;
use lesionstat::nifti::write_nifti;
use lesionstat::phantom::LongitudinalPhantom;
use lesionstat::pipeline::{cmd_compare, ExamPaths};

fn main() -> lesionstat::Result<()> {
    let out = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("lesionstat_compare"));

    let ph = LongitudinalPhantom::standard()?;
    let files = ["prev_image.nii", "prev_mask.nii", "follow_image.nii", "follow_mask.nii"].map(|f| out.join(f));
    std::fs::create_dir_all(&out).map_err(|e| lesionstat::Error::Io {
        path: out.clone(),
        source: e,
    })?;
    write_nifti(&ph.baseline.image, &files[0])?;
    write_nifti(&ph.baseline.mask.to_volume(), &files[1])?;
    write_nifti(&ph.follow.image, &files[2])?;
    write_nifti(&ph.follow.mask.to_volume(), &files[3])?;

    let cfg = RunConfig {
        stability_tolerance: 0.15,
        out: out.clone(),
        ..RunConfig::default()
    };
    let result = cmd_compare(
        ExamPaths {
            image: &files[0],
            mask: &files[1],
        },
        ExamPaths {
            image: &files[2],
            mask: &files[3],
        },
        None,
        &cfg,
    )?;

    let c = &result.comparison;
    println!(
        "true motion: rotation {:?} deg, translation {:?} mm",
        ph.motion.rotation_deg, ph.motion.translation_mm
    );
    println!(
        "recovered:   rotation [{:.2}, {:.2}, {:.2}] deg, translation [{:.2}, {:.2}, {:.2}] mm (ncc {:.4})",
        c.transform.rotation_deg[0],
        c.transform.rotation_deg[1],
        c.transform.rotation_deg[2],
        c.transform.translation_mm[0],
        c.transform.translation_mm[1],
        c.transform.translation_mm[2],
        c.transform.final_ncc
    );
    println!(
        "{} baseline / {} follow-up lesions: {} matched, {} emerged, {} vanished",
        c.summary.prev_lesions, c.summary.follow_lesions, c.summary.matched, c.summary.emerge, c.summary.vanish
    );
    for m in &c.report.matched {
        println!(
            "  follow {:>2} <- prev {:>2}  [{}, {}]  {:?}",
            m.follow_index,
            m.prev_index,
            m.prev_voxels,
            m.follow_voxels,
            m.category.expect("classified")
        );
    }
    for (parent, children) in &c.summary.many_to_one {
        println!("  prev {parent} is shared by follow-up lesions {children:?}");
    }
    println!("wrote {}", out.display());
    Ok(())
}

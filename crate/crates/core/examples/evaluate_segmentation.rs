//! Scores predicted slice masks against ground truth with micro and macro
//! aggregation.
//!
//! cargo run --example evaluate_segmentation [WORK_DIR]

use std::path::PathBuf;

use lesionstat::metrics::{evaluate_set, Aggregation};
use lesionstat::slices::BinaryPlane;

fn disk(w: usize, h: usize, cx: f64, cy: f64, r: f64) -> BinaryPlane {
    let mut p = BinaryPlane::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            p.set(x, y, (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2) <= r * r);
        }
    }
    p
}

fn main() -> lesionstat::Result<()> {
    let work = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("lesionstat_eval"));
    let (pred, gt) = (work.join("pred"), work.join("gt"));
    for d in [&pred, &gt] {
        std::fs::create_dir_all(d).map_err(|e| lesionstat::Error::Io {
            path: d.to_path_buf(),
            source: e,
        })?;
    }

    // a good prediction, a shifted one and a missed small lesion
    let cases = [
        ((32.0, 32.0, 12.0), (32.0, 32.0, 11.0)),
        ((20.0, 30.0, 8.0), (24.0, 30.0, 8.0)),
        ((50.0, 50.0, 3.0), (10.0, 10.0, 0.0)),
    ];
    for (i, (g, p)) in cases.iter().enumerate() {
        let name = format!("slice_{i:03}.png");
        disk(64, 64, g.0, g.1, g.2).save_png(gt.join(&name))?;
        disk(64, 64, p.0, p.1, p.2).save_png(pred.join(&name))?;
    }

    for mode in [Aggregation::Micro, Aggregation::Macro] {
        let table = evaluate_set(&pred, &gt, mode)?;
        print!("{}", table.to_csv()?);
        println!();
    }
    Ok(())
}

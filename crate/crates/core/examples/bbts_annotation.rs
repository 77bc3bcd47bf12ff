//! Box-restricted thresholding of a synthetic slice holding two dark
//! lesions; the second box holds a constant patch and is skipped.
//!
//! cargo run --example bbts_annotation [OUT_DIR]

use std::path::PathBuf;

use lesionstat::bbts::{bbts_segment, BoxPrompt, Polarity};
use lesionstat::slices::Plane;

fn main() -> lesionstat::Result<()> {
    let out = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(std::env::temp_dir);
    std::fs::create_dir_all(&out).map_err(|e| lesionstat::Error::Io {
        path: out.clone(),
        source: e,
    })?;
    let image = Plane::from_fn(128, 96, |x, y| {
        let d1 = ((x as f64 - 40.0).powi(2) + (y as f64 - 40.0).powi(2)).sqrt();
        let d2 = ((x as f64 - 90.0).powi(2) + (y as f64 - 60.0).powi(2)).sqrt();
        if d1 <= 10.0 || d2 <= 6.0 {
            35.0
        } else if x < 8 && y >= 76 {
            180.0
        } else {
            180.0 + ((x * 7 + y * 3) % 20) as f32
        }
    });
    let boxes = [
        BoxPrompt {
            x0: 26,
            y0: 26,
            x1: 54,
            y1: 54,
            threshold: None,
        },
        BoxPrompt {
            x0: 80,
            y0: 50,
            x1: 100,
            y1: 70,
            threshold: Some(100.0),
        },
        BoxPrompt {
            x0: 0,
            y0: 80,
            x1: 3,
            y1: 83,
            threshold: None,
        },
    ];
    let result = bbts_segment(&image, &boxes, Polarity::Dark, None)?;
    for b in &result.boxes {
        match b.threshold {
            Some(t) => println!("box {:?}: threshold {t:.1}", b.bbox),
            None => println!("box {:?}: skipped, constant patch", b.bbox),
        }
    }
    println!("foreground pixels: {}", result.mask.foreground_count());
    let path = out.join("bbts_mask.png");
    result.mask.save_png(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}

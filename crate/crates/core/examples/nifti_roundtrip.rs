//! Writes a small volume in each supported data type and reads it back.
//!
//! cargo run --example nifti_roundtrip [OUT_DIR]

use std::path::PathBuf;

use lesionstat::nifti::{read_nifti, write_nifti};
use lesionstat::volume::{DataType, Grid, Volume};

fn main() -> lesionstat::Result<()> {
    let out = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(std::env::temp_dir);
    std::fs::create_dir_all(&out).map_err(|e| lesionstat::Error::Io {
        path: out.clone(),
        source: e,
    })?;
    let grid = Grid::new([6, 5, 4], [0.9, 0.9, 2.5])?;

    for dtype in [DataType::U8, DataType::I16, DataType::U16, DataType::F32] {
        let v = Volume::from_fn(grid, dtype, |x, y, z| match dtype {
            DataType::I16 => (x as f32 - 3.0) * 100.0 + y as f32,
            DataType::F32 => 0.25 * (x + y * z) as f32,
            _ => (x + 6 * y + 30 * z) as f32,
        })?;
        let path = out.join(format!("roundtrip_{dtype:?}.nii").to_lowercase());
        write_nifti(&v, &path)?;
        let back = read_nifti(&path)?;
        let bytes = std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0);
        println!(
            "{:<4} {} bytes, dims {:?}, spacing {:?}, identical: {}",
            format!("{dtype:?}"),
            bytes,
            back.dims(),
            back.spacing(),
            back == v
        );
    }
    Ok(())
}

//! Labels a synthetic lesion mask under each connectivity and prints the
//! lesion table and volume bins.
//!
//! cargo run --example label_lesions

use lesionstat::labeling::{extract_lesions, label_components, Connectivity};
use lesionstat::phantom::sphere_mask;
use lesionstat::report::{lesion_bin_stats, DEFAULT_BIN_THRESHOLDS};
use lesionstat::volume::Grid;

fn main() -> lesionstat::Result<()> {
    let grid = Grid::new([48, 48, 32], [0.5, 0.5, 1.0])?;
    let mut mask = sphere_mask(
        grid,
        &[
            ([10.0, 10.0, 8.0], 2.0),
            ([30.0, 12.0, 10.0], 5.0),
            ([20.0, 34.0, 18.0], 9.0),
            ([40.0, 40.0, 26.0], 1.0),
        ],
    );
    // two voxels touching only along an edge, then only at a corner
    mask.set(2, 2, 2, true);
    mask.set(3, 3, 2, true);
    mask.set(4, 4, 3, true);

    for c in Connectivity::ALL {
        let map = label_components(&mask, c);
        println!("{c}-connectivity: {} lesions", map.lesion_count());
    }

    let map = label_components(&mask, Connectivity::TwentySix);
    println!("\nindex  voxels  volume_mm3  bounding cube");
    for r in extract_lesions(&map, 0) {
        println!(
            "{:>5}  {:>6}  {:>10.2}  {:?}..={:?}",
            r.index, r.voxel_count, r.volume_mm3, r.cube.min, r.cube.max
        );
    }
    println!("\n{}", lesion_bin_stats(&extract_lesions(&map, 0), &DEFAULT_BIN_THRESHOLDS)?.display());
    Ok(())
}

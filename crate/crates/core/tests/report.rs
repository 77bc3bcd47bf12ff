use std::path::PathBuf;

use lesionstat::labeling::{extract_lesions, label_components, Connectivity};
use lesionstat::matching::{ComparisonParams, ComparisonReport, EmergeEntry, LesionMatch, VanishEntry};
use lesionstat::phantom::sphere_mask;
use lesionstat::report::{chart_data, render_collage, render_line_chart, volume_table, CollageLayout, TableVolume};
use lesionstat::volume::{DataType, Grid, Volume};

fn pair(prev_index: usize, follow_index: usize, prev_voxels: u64, follow_voxels: u64) -> LesionMatch {
    LesionMatch {
        prev_index,
        follow_index,
        ioc: 0.5,
        prev_voxels,
        follow_voxels,
        category: None,
    }
}

fn sample_report() -> ComparisonReport {
    ComparisonReport {
        matched: vec![
            pair(1, 2, 120, 150),
            pair(2, 1, 80, 60),
            pair(3, 4, 1196, 1127),
            pair(4, 5, 3900, 4210),
            pair(4, 3, 3900, 420),
        ],
        emerge: vec![
            EmergeEntry { follow_index: 6, follow_voxels: 310, resampling_loss: false },
            EmergeEntry { follow_index: 7, follow_voxels: 40, resampling_loss: false },
        ],
        vanish: vec![VanishEntry { prev_index: 5, prev_voxels: 75 }],
        params: ComparisonParams::default(),
    }
}

#[test]
fn chart_matches_golden_svg() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/chart_golden.svg");
    let svg = render_line_chart(&chart_data(&sample_report(), 100));
    if std::env::var_os("LESIONSTAT_BLESS").is_some() {
        std::fs::write(&path, &svg).unwrap();
    }
    let golden = std::fs::read_to_string(&path).unwrap();
    assert_eq!(svg, golden);
}

#[test]
fn chart_floor_filters_by_follow_volume() {
    let d = chart_data(&sample_report(), 100);
    assert_eq!(d.matched.len(), 4);
    assert_eq!(d.unmatched.len(), 1);
    let none = chart_data(&sample_report(), 10_000);
    assert!(none.matched.is_empty() && none.unmatched.is_empty());
    assert!(render_line_chart(&none).starts_with("<svg"));
}

#[test]
fn table_lists_shared_parents() {
    let rows = volume_table(&sample_report());
    assert_eq!(rows.len(), 7);
    let shared: Vec<_> = rows.iter().filter(|r| r.shared_parent).map(|r| r.follow_index).collect();
    assert_eq!(shared, vec![3, 5]);
    let r4 = rows.iter().find(|r| r.follow_index == 4).unwrap();
    assert_eq!(r4.volume, TableVolume::Pair(1196, 1127));
    assert_eq!(r4.volume.to_string(), "[1196, 1127]");
}

#[test]
fn collage_outlines_every_lesion() {
    let g = Grid::new([40, 40, 20], [1.0; 3]).unwrap();
    let mask = sphere_mask(g, &[([10.0, 10.0, 8.0], 3.0), ([28.0, 26.0, 12.0], 4.0)]);
    let map = label_components(&mask, Connectivity::TwentySix);
    let lesions = extract_lesions(&map, 0);
    let image = Volume::from_fn(g, DataType::U8, |x, y, _| ((x * 3 + y * 2) % 200) as f32).unwrap();

    let pages = render_collage(&image, &map, &lesions, 0..20, &CollageLayout { columns: 5, rows_per_page: None }).unwrap();
    assert_eq!(pages.len(), 1);
    assert_eq!(pages[0].tiles.len(), 20);
    assert_eq!((pages[0].image.width(), pages[0].image.height()), (200, 160));

    for lesion in &lesions {
        let [z0, z1] = [lesion.cube.min[2], lesion.cube.max[2]];
        for t in &pages[0].tiles {
            let z = t.slice.unwrap();
            let outlined = t.contour_pixels > 0;
            let lesion_here = (0..40).any(|y| (0..40).any(|x| map.get(x, y, z) == lesion.label));
            if (z0..=z1).contains(&z) && lesion_here {
                assert!(outlined, "slice {z}");
                assert!(t.numerals.iter().any(|n| n.lesion_index == lesion.index));
            }
        }
    }
    let red = pages[0].image.pixels().filter(|p| p.0 == [255, 0, 0]).count();
    assert!(red > 0);
}

mod common;

use std::collections::{HashMap, HashSet};

use proptest::prelude::*;

use common::{bfs_oracle, same_partition};

use lesionstat::bbts::{bbts_segment, otsu_threshold, BoxPrompt, Polarity};
use lesionstat::labeling::{extract_lesions, label_components, BoundingCube, Connectivity, LesionLabelMap};
use lesionstat::matching::{ioc, ioc_ratio, ComparisonParams, ComparisonReport, EmergeEntry, LesionMatch};
use lesionstat::metrics::{aggregate, confusion, scores, Aggregation, ConfusionCounts};
use lesionstat::nifti::{encode_nifti, parse_nifti};
use lesionstat::registration::{map_moving_point_to_fixed, resample_labelmap, RigidTransform};
use lesionstat::report::{
    chart_data, render_collage, trace_contours, volume_bin_stats, CollageLayout,
};
use lesionstat::slices::Plane;
use lesionstat::volume::{DataType, Grid, MaskVolume, Volume};

fn mask_strategy(max_dim: usize) -> impl Strategy<Value = MaskVolume> {
    (1..=max_dim, 1..=max_dim, 1..=max_dim, 0.05f64..0.6).prop_flat_map(|(nx, ny, nz, density)| {
        prop::collection::vec(prop::bool::weighted(density), nx * ny * nz).prop_map(move |bits| {
            let g = Grid::new([nx, ny, nz], [1.0; 3]).unwrap();
            MaskVolume::new(g, bits.into_iter().map(u8::from).collect()).unwrap()
        })
    })
}

fn connectivity_strategy() -> impl Strategy<Value = Connectivity> {
    prop::sample::select(Connectivity::ALL.to_vec())
}

fn cube_strategy() -> impl Strategy<Value = BoundingCube> {
    (prop::array::uniform3(0usize..12), prop::array::uniform3(0usize..6))
        .prop_map(|(min, ext)| BoundingCube::new(min, std::array::from_fn(|a| min[a] + ext[a])).unwrap())
}

fn counts_strategy() -> impl Strategy<Value = ConfusionCounts> {
    (0u64..200, 0u64..200, 0u64..200, 0u64..200).prop_map(|(tp, fp, fn_, tn)| ConfusionCounts { tp, fp, fn_, tn })
}

fn in_unit(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn labeling_matches_flood_fill(mask in mask_strategy(9), c in connectivity_strategy()) {
        let map = label_components(&mask, c);
        let oracle = bfs_oracle(&mask, c);
        prop_assert_eq!(map.lesion_count() as u32, oracle.iter().copied().max().unwrap_or(0));
        prop_assert!(same_partition(map.labels(), &oracle));
    }

    #[test]
    fn labels_follow_raster_order(mask in mask_strategy(8), c in connectivity_strategy()) {
        let map = label_components(&mask, c);
        let mut seen = 0u32;
        for &l in map.labels() {
            if l > seen {
                prop_assert_eq!(l, seen + 1);
                seen = l;
            }
        }
        prop_assert_eq!(seen as usize, map.lesion_count());
    }

    #[test]
    fn connectivity_is_monotone(mask in mask_strategy(8)) {
        let n = |c| label_components(&mask, c).lesion_count();
        prop_assert!(n(Connectivity::Six) >= n(Connectivity::Eighteen));
        prop_assert!(n(Connectivity::Eighteen) >= n(Connectivity::TwentySix));
    }

    #[test]
    fn records_partition_and_cubes_are_minimal(mask in mask_strategy(8), c in connectivity_strategy()) {
        let map = label_components(&mask, c);
        let recs = extract_lesions(&map, 0);
        let total: u64 = recs.iter().map(|r| r.voxel_count).sum();
        prop_assert_eq!(total as usize, mask.foreground_count());
        prop_assert!(recs.windows(2).all(|w| w[0].voxel_count <= w[1].voxel_count));
        prop_assert_eq!(recs.iter().map(|r| r.index).collect::<Vec<_>>(), (1..=recs.len()).collect::<Vec<_>>());

        let g = *mask.grid();
        for r in &recs {
            let voxels: Vec<[usize; 3]> = (0..g.len())
                .filter(|&i| map.labels()[i] == r.label)
                .map(|i| g.coords(i))
                .collect();
            prop_assert_eq!(voxels.len() as u64, r.voxel_count);
            prop_assert!(voxels.iter().all(|&v| r.cube.contains(v)));
            for a in 0..3 {
                prop_assert!(voxels.iter().any(|v| v[a] == r.cube.min[a]));
                prop_assert!(voxels.iter().any(|v| v[a] == r.cube.max[a]));
            }
            prop_assert_eq!(r.volume_mm3, r.voxel_count as f64 * g.voxel_volume());
        }
    }

    #[test]
    fn ioc_properties(a in cube_strategy(), b in cube_strategy(), shift in prop::array::uniform3(0usize..20)) {
        let v = ioc(&a, &b);
        prop_assert!(in_unit(v));
        prop_assert_eq!(ioc_ratio(&a, &b), ioc_ratio(&b, &a));
        prop_assert_eq!(ioc_ratio(&a, &b).intersection == ioc_ratio(&a, &b).larger, a == b);

        let moved = |c: &BoundingCube| {
            BoundingCube::new(std::array::from_fn(|k| c.min[k] + shift[k]), std::array::from_fn(|k| c.max[k] + shift[k])).unwrap()
        };
        prop_assert_eq!(ioc_ratio(&moved(&a), &moved(&b)), ioc_ratio(&a, &b));

        // brute-force voxel enumeration
        let mut inter = 0u64;
        for z in a.min[2]..=a.max[2] {
            for y in a.min[1]..=a.max[1] {
                for x in a.min[0]..=a.max[0] {
                    if b.contains([x, y, z]) {
                        inter += 1;
                    }
                }
            }
        }
        prop_assert_eq!(ioc_ratio(&a, &b).intersection, inter);
        prop_assert_eq!(ioc_ratio(&a, &b).larger, a.volume().max(b.volume()));
    }

    #[test]
    fn metric_identities(c in counts_strategy(), d in counts_strategy()) {
        let s = scores(&c);
        for v in [s.dice, s.miou, s.precision, s.recall, s.f1] {
            prop_assert!(in_unit(v));
        }
        prop_assert!(s.dice >= s.miou);
        if s.dice == s.miou {
            prop_assert!(s.dice == 0.0 || s.dice == 1.0);
        }
        let swapped = scores(&ConfusionCounts { fp: c.fn_, fn_: c.fp, ..c });
        prop_assert_eq!(swapped.dice, s.dice);
        prop_assert_eq!(swapped.miou, s.miou);
        prop_assert_eq!(swapped.precision, s.recall);
        prop_assert_eq!(swapped.recall, s.precision);
        prop_assert!((swapped.f1 - s.f1).abs() <= 1e-15);

        let micro = aggregate(&[c, d], Aggregation::Micro);
        prop_assert!((micro.f1 - micro.dice).abs() <= 1e-12);
    }

    #[test]
    fn confusion_matches_set_arithmetic(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..300)) {
        let pred: Vec<u8> = pairs.iter().map(|p| u8::from(p.0)).collect();
        let gt: Vec<u8> = pairs.iter().map(|p| u8::from(p.1)).collect();
        let c = confusion(&pred, &gt).unwrap();
        let a: HashSet<usize> = (0..pred.len()).filter(|&i| pred[i] == 1).collect();
        let b: HashSet<usize> = (0..gt.len()).filter(|&i| gt[i] == 1).collect();
        prop_assert_eq!(c.tp as usize, a.intersection(&b).count());
        prop_assert_eq!(c.fp as usize, a.difference(&b).count());
        prop_assert_eq!(c.fn_ as usize, b.difference(&a).count());
        prop_assert_eq!(c.total() as usize, pred.len());
    }

    #[test]
    fn bins_count_every_lesion(
        volumes in prop::collection::vec(1u64..10_000, 0..200),
        raw in prop::collection::btree_set(1u32..9_000, 1..5),
    ) {
        let thresholds: Vec<f64> = raw.into_iter().map(f64::from).collect();
        let bins = volume_bin_stats(&volumes, &thresholds).unwrap();
        prop_assert_eq!(bins.counts().iter().sum::<usize>(), volumes.len());
        if !volumes.is_empty() {
            let p: f64 = bins.bins.iter().map(|b| b.proportion).sum();
            prop_assert!((p - 1.0).abs() < 1e-9);
        }
        let lowest = volumes.iter().filter(|&&v| v as f64 <= thresholds[0]).count();
        prop_assert_eq!(bins.counts()[0], lowest);
    }

    #[test]
    fn contours_cover_exactly_the_boundary(
        (w, h, labels) in (1usize..14, 1usize..14).prop_flat_map(|(w, h)| {
            (Just(w), Just(h), prop::collection::vec(prop::sample::select(vec![0u32, 0, 1, 2]), w * h))
        })
    ) {
        let set = trace_contours(&labels, w, h);
        let at = |x: i64, y: i64| -> u32 {
            if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 { 0 } else { labels[y as usize * w + x as usize] }
        };
        let boundary = |x: usize, y: usize| {
            let l = labels[y * w + x];
            let (x, y) = (x as i64, y as i64);
            l != 0 && [(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)].iter().any(|&(a, b)| at(a, b) != l)
        };
        let mut on = HashSet::new();
        for c in &set.contours {
            prop_assert!(c.points.len() >= 2);
            prop_assert_eq!(c.points.first(), c.points.last());
            for &(x, y) in &c.points {
                prop_assert!(x < w && y < h);
                prop_assert_eq!(labels[y * w + x], c.label);
                prop_assert!(boundary(x, y));
                on.insert((x, y));
            }
        }
        for y in 0..h {
            for x in 0..w {
                if boundary(x, y) {
                    prop_assert!(on.contains(&(x, y)), "boundary pixel {},{} not traced", x, y);
                }
            }
        }
    }

    #[test]
    fn transform_inverse_round_trips(
        r in prop::array::uniform3(-30.0f64..30.0),
        t in prop::array::uniform3(-20.0f64..20.0),
        c in prop::array::uniform3(0.0f64..100.0),
        p in prop::array::uniform3(-200.0f64..200.0),
    ) {
        let tr = RigidTransform::new(r, t, c).unwrap();
        let back = map_moving_point_to_fixed(&tr, tr.apply(p));
        for a in 0..3 {
            prop_assert!((back[a] - p[a]).abs() < 1e-9);
        }
        let fwd = tr.apply(map_moving_point_to_fixed(&tr, p));
        for a in 0..3 {
            prop_assert!((fwd[a] - p[a]).abs() < 1e-9);
        }
    }

    #[test]
    fn nifti_round_trip_is_bit_exact(
        dims in prop::array::uniform3(1usize..7),
        spacing in prop::array::uniform3(0.1f32..5.0),
        dtype in prop::sample::select(vec![DataType::U8, DataType::I16, DataType::U16, DataType::F32]),
        seed in any::<u64>(),
    ) {
        let g = Grid::new(dims, spacing.map(f64::from)).unwrap();
        let mut s = seed;
        let v = Volume::from_fn(g, dtype, |_, _, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let r = (s >> 33) as u32;
            match dtype {
                DataType::U8 => (r % 256) as f32,
                DataType::I16 => (r % 65536) as f32 - 32768.0,
                DataType::U16 => (r % 65536) as f32,
                DataType::F32 => f32::from_bits(r & 0x7f7f_ffff) * if r & 1 == 0 { 1.0 } else { -1.0 },
            }
        }).unwrap();
        let back = parse_nifti(&encode_nifti(&v).unwrap()).unwrap();
        prop_assert_eq!(back.dims(), v.dims());
        prop_assert_eq!(back.dtype(), v.dtype());
        prop_assert_eq!(back.spacing().map(|s| s as f32), spacing);
        let bits = |x: &Volume| x.data().iter().map(|f| f.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back), bits(&v));
    }

    #[test]
    fn chart_series_are_sorted_and_filtered(
        pairs in prop::collection::vec((1u64..5000, 1u64..5000), 0..30),
        emerge in prop::collection::vec(1u64..5000, 0..10),
        floor in 0u64..2000,
    ) {
        let report = ComparisonReport {
            matched: pairs.iter().enumerate().map(|(i, &(p, f))| LesionMatch {
                prev_index: i + 1, follow_index: i + 1, ioc: 0.5, prev_voxels: p, follow_voxels: f, category: None,
            }).collect(),
            emerge: emerge.iter().enumerate().map(|(i, &v)| EmergeEntry {
                follow_index: pairs.len() + i + 1, follow_voxels: v, resampling_loss: false,
            }).collect(),
            vanish: Vec::new(),
            params: ComparisonParams::default(),
        };
        let d = chart_data(&report, floor);
        prop_assert!(d.matched.windows(2).all(|w| (w[0].prev_voxels, w[0].follow_voxels) <= (w[1].prev_voxels, w[1].follow_voxels)));
        prop_assert!(d.unmatched.windows(2).all(|w| w[0].voxels <= w[1].voxels));
        prop_assert_eq!(d.matched.len(), pairs.iter().filter(|p| p.1 > floor).count());
        prop_assert_eq!(d.unmatched.len(), emerge.iter().filter(|&&v| v > floor).count());
    }

    #[test]
    fn otsu_maximizes_between_class_variance(values in prop::collection::vec(0u8..40, 2..80)) {
        let patch: Vec<f32> = values.iter().map(|&v| f32::from(v) * 5.0).collect();
        let t = otsu_threshold(&patch).unwrap();
        let distinct: Vec<f32> = { let mut d = patch.clone(); d.sort_by(f32::total_cmp); d.dedup(); d };
        if distinct.len() == 1 {
            prop_assert!(t.degenerate);
            return Ok(());
        }
        // exhaustive sweep over every cut between distinct levels
        let between = |cut: f64| {
            let lo: Vec<f64> = patch.iter().map(|&v| f64::from(v)).filter(|&v| v <= cut).collect();
            let hi: Vec<f64> = patch.iter().map(|&v| f64::from(v)).filter(|&v| v > cut).collect();
            let m = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
            lo.len() as f64 * hi.len() as f64 * (m(&lo) - m(&hi)).powi(2)
        };
        let best = distinct.windows(2).map(|w| between(f64::from(w[0]))).fold(f64::MIN, f64::max);
        prop_assert!(!t.degenerate);
        prop_assert!((between(t.threshold) - best).abs() <= 1e-9 * best.max(1.0));
        prop_assert!(distinct.iter().all(|&v| f64::from(v) != t.threshold));
    }

    #[test]
    fn bbts_is_confined_monotone_and_idempotent(
        seed in any::<u64>(),
        boxes in prop::collection::vec((0usize..20, 0usize..16, 0usize..12, 0usize..12), 0..4),
        t1 in 0.0f64..255.0,
        dt in 0.0f64..100.0,
    ) {
        let img = Plane::from_fn(24, 20, |x, y| ((seed.wrapping_mul(31 + x as u64).wrapping_add(y as u64 * 977)) % 256) as f32);
        let prompts: Vec<BoxPrompt> = boxes.iter().map(|&(x0, y0, w, h)| BoxPrompt {
            x0, y0, x1: (x0 + w).min(23), y1: (y0 + h).min(19), threshold: None,
        }).collect();

        let out = bbts_segment(&img, &prompts, Polarity::Dark, None).unwrap();
        for y in 0..20 {
            for x in 0..24 {
                if out.mask.get(x, y) {
                    prop_assert!(prompts.iter().any(|p| p.bbox().contains(x, y)));
                }
            }
        }

        let pinned: Vec<BoxPrompt> = prompts.iter().zip(&out.boxes).map(|(p, r)| BoxPrompt { threshold: r.threshold, ..*p }).collect();
        let again = bbts_segment(&img, &pinned, Polarity::Dark, None).unwrap();
        let kept: Vec<BoxPrompt> = pinned.iter().filter(|p| p.threshold.is_some()).copied().collect();
        let kept_out = bbts_segment(&img, &kept, Polarity::Dark, None).unwrap();
        prop_assert_eq!(&again.mask, &kept_out.mask);
        prop_assert_eq!(&again.mask, &out.mask);

        let low = bbts_segment(&img, &prompts, Polarity::Dark, Some(t1)).unwrap();
        let high = bbts_segment(&img, &prompts, Polarity::Dark, Some(t1 + dt)).unwrap();
        prop_assert!(low.mask.data.iter().zip(&high.mask.data).all(|(a, b)| a <= b));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn collage_tile_count(nz in 1usize..40, columns in 1usize..9) {
        let g = Grid::new([6, 5, nz], [1.0; 3]).unwrap();
        let v = Volume::from_fn(g, DataType::U8, |x, _, z| (x + z) as f32).unwrap();
        let map = label_components(&MaskVolume::zeros(g), Connectivity::TwentySix);
        let layout = CollageLayout { columns, rows_per_page: None };
        let pages = render_collage(&v, &map, &[], 0..nz, &layout).unwrap();
        prop_assert_eq!(pages[0].tiles.len(), nz.div_ceil(columns) * columns);
        let again = render_collage(&v, &map, &[], 0..nz, &layout).unwrap();
        prop_assert_eq!(pages[0].image.as_raw(), again[0].image.as_raw());
    }

    #[test]
    fn integer_shift_keeps_voxel_counts_in_overlap(
        mask in mask_strategy(10),
        shift in prop::array::uniform3(-4i64..=4),
    ) {
        let map = label_components(&mask, Connectivity::TwentySix);
        let g = *mask.grid();
        let t = RigidTransform::new([0.0; 3], shift.map(|s| s as f64), g.center_mm()).unwrap();
        let moved = resample_labelmap(&map, &t, &g);
        // output voxel p samples input p + shift
        let mut expected: HashMap<u32, u64> = HashMap::new();
        for i in 0..g.len() {
            let p = g.coords(i);
            let q: Vec<i64> = (0..3).map(|a| p[a] as i64 + shift[a]).collect();
            if (0..3).all(|a| q[a] >= 0 && q[a] < g.dims[a] as i64) {
                let l = map.get(q[0] as usize, q[1] as usize, q[2] as usize);
                prop_assert_eq!(moved.labels()[i], l);
                if l != 0 {
                    *expected.entry(l).or_default() += 1;
                }
            } else {
                prop_assert_eq!(moved.labels()[i], 0);
            }
        }
        let mut got: HashMap<u32, u64> = HashMap::new();
        for &l in moved.labels().iter().filter(|l| **l != 0) {
            *got.entry(l).or_default() += 1;
        }
        prop_assert_eq!(got, expected);
        prop_assert_eq!(moved.lesion_count(), moved.labels().iter().filter(|l| **l != 0).collect::<HashSet<_>>().len());
    }
}

#[test]
fn labelmap_roundtrip_through_from_labels() {
    let g = Grid::new([4, 1, 1], [1.0; 3]).unwrap();
    let map = LesionLabelMap::from_labels(g, vec![0, 3, 3, 1]).unwrap();
    assert_eq!(map.lesion_count(), 2);
}

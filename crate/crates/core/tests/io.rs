use std::path::PathBuf;

use image::{GrayImage, Luma};

use lesionstat::nifti::{encode_nifti, parse_nifti, read_nifti, write_nifti};
use lesionstat::slices::stack_slices;
use lesionstat::volume::{DataType, Grid, Volume};
use lesionstat::Error;

const DTYPES: [(&str, DataType); 4] = [
    ("u8", DataType::U8),
    ("i16", DataType::I16),
    ("u16", DataType::U16),
    ("f32", DataType::F32),
];

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

/// Values written by tests/data/make_golden.py.
fn expected(dtype: DataType) -> Volume {
    let g = Grid::new([3, 2, 2], [0.5, 0.75, 2.0]).unwrap();
    let data = (0..12)
        .map(|i| {
            let i = i as f32;
            match dtype {
                DataType::U8 => i * 10.0,
                DataType::I16 => i * 1000.0 - 5000.0,
                DataType::U16 => i * 5000.0,
                DataType::F32 => i * 0.25 - 1.5,
            }
        })
        .collect();
    Volume::new(g, dtype, data).unwrap()
}

#[test]
fn golden_files_decode_in_both_byte_orders() {
    for (name, dtype) in DTYPES {
        let want = expected(dtype);
        for order in ["le", "be"] {
            let v = read_nifti(golden(&format!("golden_{name}_{order}.nii"))).unwrap();
            assert_eq!(v, want, "{name} {order}");
        }
    }
}

#[test]
fn writer_reproduces_golden_bytes() {
    let order = if cfg!(target_endian = "little") { "le" } else { "be" };
    for (name, dtype) in DTYPES {
        let bytes = std::fs::read(golden(&format!("golden_{name}_{order}.nii"))).unwrap();
        assert_eq!(encode_nifti(&expected(dtype)).unwrap(), bytes, "{name}");
    }
}

#[test]
fn round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    for (name, dtype) in DTYPES {
        let p = dir.path().join(format!("{name}.nii"));
        write_nifti(&expected(dtype), &p).unwrap();
        assert_eq!(read_nifti(&p).unwrap(), expected(dtype));
    }
}

#[test]
fn header_faults_are_named() {
    let good = std::fs::read(golden("golden_i16_le.nii")).unwrap();

    let mut bad_magic = good.clone();
    bad_magic[344..348].copy_from_slice(b"abc\0");
    assert!(matches!(parse_nifti(&bad_magic), Err(Error::UnsupportedFormat(_))));

    let mut bad_size = good.clone();
    bad_size[0..4].copy_from_slice(&100i32.to_le_bytes());
    assert!(matches!(parse_nifti(&bad_size), Err(Error::UnsupportedFormat(_) | Error::CorruptHeader(_))));

    let mut bad_dtype = good.clone();
    bad_dtype[70..72].copy_from_slice(&64i16.to_le_bytes());
    assert!(matches!(parse_nifti(&bad_dtype), Err(Error::UnsupportedFormat(_))));

    let mut bad_dim = good.clone();
    bad_dim[42..44].copy_from_slice(&0i16.to_le_bytes());
    assert!(matches!(parse_nifti(&bad_dim), Err(Error::CorruptHeader(_))));

    match parse_nifti(&good[..good.len() - 3]) {
        Err(Error::TruncatedData { expected, found }) => assert_eq!(expected - found, 3),
        other => panic!("expected truncation, got {other:?}"),
    }
    assert!(parse_nifti(&good[..200]).is_err());
}

#[test]
fn stacks_130_slices_of_768() {
    let dir = tempfile::tempdir().unwrap();
    for k in 0..130u32 {
        let img = GrayImage::from_fn(768, 768, |x, y| {
            let on = (x as i64 - 384).pow(2) + (y as i64 - 384).pow(2) < 100 && (40..60).contains(&k);
            Luma([if on { 255 } else { 0 }])
        });
        img.save(dir.path().join(format!("slice_{k:04}.png"))).unwrap();
    }
    let m = stack_slices(dir.path(), [1.0; 3], 0.5).unwrap();
    assert_eq!(m.dims(), [768, 768, 130]);
    assert!(m.get(384, 384, 45));
    assert!(!m.get(384, 384, 39));
    assert!(!m.get(0, 0, 50));
}

#[test]
fn mismatched_slice_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    GrayImage::new(8, 8).save(dir.path().join("a.png")).unwrap();
    GrayImage::new(8, 9).save(dir.path().join("b.png")).unwrap();
    assert!(matches!(
        stack_slices(dir.path(), [1.0; 3], 0.5),
        Err(Error::InconsistentDimensions(_))
    ));
    let empty = tempfile::tempdir().unwrap();
    assert!(matches!(stack_slices(empty.path(), [1.0; 3], 0.5), Err(Error::EmptyDirectory(_))));
}

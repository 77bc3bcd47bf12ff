//! Single-file NIfTI-1 (`.nii`) reading and writing for 3D volumes.
//!
//! Only the subset needed for mask and image exchange is supported:
//! uncompressed files, `dim[0] == 3`, and the data types u8, i16, u16 and f32.
//! Orientation (qform/sform) is ignored on read and left unset on write; voxel
//! spacing comes from `pixdim[1..=3]`. Both byte orders are accepted on read,
//! files are written in host byte order.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::volume::{DataType, Grid, Volume};

pub const HEADER_SIZE: usize = 348;
/// Header plus the 4-byte extension flag.
pub const DEFAULT_VOX_OFFSET: usize = 352;
pub const MAGIC: &[u8; 4] = b"n+1\0";

const NIFTI_UNITS_MM: u8 = 2;

mod offset {
    pub const SIZEOF_HDR: usize = 0;
    pub const REGULAR: usize = 38;
    pub const DIM: usize = 40;
    pub const DATATYPE: usize = 70;
    pub const BITPIX: usize = 72;
    pub const PIXDIM: usize = 76;
    pub const VOX_OFFSET: usize = 108;
    pub const SCL_SLOPE: usize = 112;
    pub const SCL_INTER: usize = 116;
    pub const XYZT_UNITS: usize = 123;
    pub const MAGIC: usize = 344;
}

struct HeaderView<'a> {
    bytes: &'a [u8],
    big_endian: bool,
}

impl HeaderView<'_> {
    fn raw<const N: usize>(&self, at: usize) -> [u8; N] {
        let mut b: [u8; N] = self.bytes[at..at + N].try_into().unwrap();
        if self.big_endian {
            b.reverse();
        }
        b
    }

    fn i16(&self, at: usize) -> i16 {
        i16::from_le_bytes(self.raw(at))
    }

    fn f32(&self, at: usize) -> f32 {
        f32::from_le_bytes(self.raw(at))
    }
}

/// Widens through the shortest decimal form, so a spacing such as 0.9 comes
/// back as 0.9 rather than 0.8999999761581421.
fn widen(v: f32) -> f64 {
    v.to_string().parse().expect("float display parses")
}

/// Reads a `.nii` file from disk.
pub fn read_nifti(path: impl AsRef<Path>) -> Result<Volume> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_nifti(&bytes)
}

/// Parses an in-memory `.nii` image.
pub fn parse_nifti(bytes: &[u8]) -> Result<Volume> {
    if bytes.starts_with(&[0x1f, 0x8b]) {
        return Err(Error::UnsupportedFormat("gzip-compressed NIfTI".into()));
    }
    if bytes.len() < HEADER_SIZE {
        return Err(Error::TruncatedData {
            expected: HEADER_SIZE as u64,
            found: bytes.len() as u64,
        });
    }

    let sizeof_hdr: [u8; 4] = bytes[offset::SIZEOF_HDR..4].try_into().unwrap();
    let big_endian = if i32::from_le_bytes(sizeof_hdr) == HEADER_SIZE as i32 {
        false
    } else if i32::from_be_bytes(sizeof_hdr) == HEADER_SIZE as i32 {
        true
    } else {
        return Err(Error::UnsupportedFormat(format!(
            "sizeof_hdr is {} (expected 348 in either byte order)",
            i32::from_le_bytes(sizeof_hdr)
        )));
    };
    let hdr = HeaderView { bytes, big_endian };

    if &bytes[offset::MAGIC..offset::MAGIC + 4] != MAGIC {
        return Err(Error::UnsupportedFormat(format!(
            "magic {:?} is not single-file NIfTI-1",
            String::from_utf8_lossy(&bytes[offset::MAGIC..offset::MAGIC + 4])
        )));
    }

    let code = hdr.i16(offset::DATATYPE);
    let dtype = DataType::from_nifti_code(code)
        .ok_or_else(|| Error::UnsupportedFormat(format!("datatype {code} not supported")))?;

    let ndim = hdr.i16(offset::DIM);
    if ndim != 3 {
        return Err(Error::UnsupportedFormat(format!("dim[0] is {ndim}, only 3D is supported")));
    }
    let mut dims = [0usize; 3];
    for (a, d) in dims.iter_mut().enumerate() {
        let v = hdr.i16(offset::DIM + 2 * (a + 1));
        if v <= 0 {
            return Err(Error::CorruptHeader(format!("dim[{}] is {v}", a + 1)));
        }
        *d = v as usize;
    }

    let mut spacing = [0f64; 3];
    for (a, s) in spacing.iter_mut().enumerate() {
        let v = hdr.f32(offset::PIXDIM + 4 * (a + 1));
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::CorruptHeader(format!("pixdim[{}] is {v}", a + 1)));
        }
        *s = widen(v);
    }

    let vox_offset = hdr.f32(offset::VOX_OFFSET);
    if !vox_offset.is_finite() || vox_offset < DEFAULT_VOX_OFFSET as f32 || vox_offset.fract() != 0.0 {
        return Err(Error::CorruptHeader(format!("vox_offset {vox_offset} is invalid")));
    }
    let vox_offset = vox_offset as usize;

    let count = dims[0] * dims[1] * dims[2];
    let payload = count * dtype.size_bytes();
    let needed = vox_offset + payload;
    if bytes.len() < needed {
        return Err(Error::TruncatedData {
            expected: needed as u64,
            found: bytes.len() as u64,
        });
    }

    let raw = &bytes[vox_offset..needed];
    let mut data = decode(raw, dtype, big_endian);

    let slope = hdr.f32(offset::SCL_SLOPE);
    let inter = hdr.f32(offset::SCL_INTER);
    let mut out_dtype = dtype;
    if slope != 0.0 && slope.is_finite() && !(slope == 1.0 && inter == 0.0) {
        for v in &mut data {
            *v = *v * slope + inter;
        }
        out_dtype = DataType::F32;
    }
    if data.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidVolume("NaN voxel values".into()));
    }

    let grid = Grid::new(dims, spacing)?;
    Volume::new(grid, out_dtype, data)
}

fn decode(raw: &[u8], dtype: DataType, big_endian: bool) -> Vec<f32> {
    macro_rules! words {
        ($t:ty, $n:expr) => {
            raw.chunks_exact($n)
                .map(|c| {
                    let b: [u8; $n] = c.try_into().unwrap();
                    let v = if big_endian { <$t>::from_be_bytes(b) } else { <$t>::from_le_bytes(b) };
                    v as f32
                })
                .collect()
        };
    }
    match dtype {
        DataType::U8 => raw.iter().map(|&b| f32::from(b)).collect(),
        DataType::I16 => words!(i16, 2),
        DataType::U16 => words!(u16, 2),
        DataType::F32 => words!(f32, 4),
    }
}

/// Encodes a volume as a single-file NIfTI-1 image in host byte order.
pub fn encode_nifti(volume: &Volume) -> Result<Vec<u8>> {
    let dims = volume.dims();
    if let Some(d) = dims.iter().find(|&&d| d > i16::MAX as usize) {
        return Err(Error::InvalidVolume(format!("dimension {d} exceeds NIfTI-1 limit")));
    }
    let dtype = volume.dtype();
    let mut out = vec![0u8; DEFAULT_VOX_OFFSET + volume.data().len() * dtype.size_bytes()];

    let mut put = |at: usize, b: &[u8]| out[at..at + b.len()].copy_from_slice(b);
    put(offset::SIZEOF_HDR, &(HEADER_SIZE as i32).to_ne_bytes());
    put(offset::REGULAR, b"r");
    let dim: [i16; 8] = [3, dims[0] as i16, dims[1] as i16, dims[2] as i16, 1, 1, 1, 1];
    for (i, d) in dim.iter().enumerate() {
        put(offset::DIM + 2 * i, &d.to_ne_bytes());
    }
    put(offset::DATATYPE, &dtype.nifti_code().to_ne_bytes());
    put(offset::BITPIX, &((dtype.size_bytes() * 8) as i16).to_ne_bytes());
    let sp = volume.spacing();
    let pixdim: [f32; 8] = [1.0, sp[0] as f32, sp[1] as f32, sp[2] as f32, 0.0, 0.0, 0.0, 0.0];
    for (i, p) in pixdim.iter().enumerate() {
        put(offset::PIXDIM + 4 * i, &p.to_ne_bytes());
    }
    put(offset::VOX_OFFSET, &(DEFAULT_VOX_OFFSET as f32).to_ne_bytes());
    put(offset::SCL_SLOPE, &1f32.to_ne_bytes());
    put(offset::SCL_INTER, &0f32.to_ne_bytes());
    put(offset::XYZT_UNITS, &[NIFTI_UNITS_MM]);
    put(offset::MAGIC, MAGIC);

    let body = &mut out[DEFAULT_VOX_OFFSET..];
    match dtype {
        DataType::U8 => {
            for (dst, &v) in body.iter_mut().zip(volume.data()) {
                *dst = v as u8;
            }
        }
        DataType::I16 => {
            for (dst, &v) in body.chunks_exact_mut(2).zip(volume.data()) {
                dst.copy_from_slice(&(v as i16).to_ne_bytes());
            }
        }
        DataType::U16 => {
            for (dst, &v) in body.chunks_exact_mut(2).zip(volume.data()) {
                dst.copy_from_slice(&(v as u16).to_ne_bytes());
            }
        }
        DataType::F32 => {
            for (dst, &v) in body.chunks_exact_mut(4).zip(volume.data()) {
                dst.copy_from_slice(&v.to_ne_bytes());
            }
        }
    }
    Ok(out)
}

/// Writes `volume` to `path`. Nothing is written if encoding fails.
pub fn write_nifti(volume: &Volume, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_nifti(volume)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

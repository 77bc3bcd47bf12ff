//! 2D grayscale planes and assembly of slice directories into 3D masks.

use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage, ImageBuffer, Luma};

use crate::error::{Error, Result};
use crate::volume::{Grid, MaskVolume};

/// Default foreground threshold: strictly above 0.5 accepts both {0, 1} and
/// {0, 255} encoded masks.
pub const DEFAULT_MASK_THRESHOLD: f64 = 0.5;

/// A 2D grayscale image with native pixel values kept as `f32`.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::InconsistentDimensions(format!(
                "{width}x{height} plane with {} values",
                data.len()
            )));
        }
        Ok(Plane { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Plane { width, height, data }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    pub fn binarize(&self, threshold: f64) -> BinaryPlane {
        BinaryPlane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| u8::from(f64::from(v) > threshold)).collect(),
        }
    }
}

/// A 2D binary mask (0/1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryPlane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl BinaryPlane {
    pub fn zeros(width: usize, height: usize) -> Self {
        BinaryPlane {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x] != 0
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.data[y * self.width + x] = u8::from(on);
    }

    pub fn foreground_count(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    /// 8-bit image with foreground at 255.
    pub fn to_image(&self) -> GrayImage {
        ImageBuffer::from_fn(self.width as u32, self.height as u32, |x, y| {
            Luma([if self.get(x as usize, y as usize) { 255 } else { 0 }])
        })
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.to_image()
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| image_error(path, e))
    }
}

fn image_error(path: &Path, e: image::ImageError) -> Error {
    match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::UnreadableImage {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    }
}

/// Loads an 8- or 16-bit grayscale image (PNG or PGM). Colour images are
/// converted to luma at their native bit depth.
pub fn load_plane(path: impl AsRef<Path>) -> Result<Plane> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|e| image_error(path, e))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<f32> = match img {
        DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().map(f32::from).collect(),
        DynamicImage::ImageLuma16(buf) => buf.into_raw().into_iter().map(f32::from).collect(),
        other if other.color().bits_per_pixel() / u16::from(other.color().channel_count()) > 8 => {
            other.to_luma16().into_raw().into_iter().map(f32::from).collect()
        }
        other => other.to_luma8().into_raw().into_iter().map(f32::from).collect(),
    };
    Plane::new(w, h, data)
}

fn is_slice_file(path: &Path) -> bool {
    path.is_file()
        && path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "pgm"))
            .unwrap_or(false)
}

/// Lists slice images in `dir`, sorted lexicographically by file name.
pub fn list_slices(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| is_slice_file(p))
        .collect();
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

/// Stacks a directory of 2D masks into a 3D mask. Slice `k` in file-name order
/// becomes plane `z = k`; pixels strictly above `threshold` are foreground.
pub fn stack_slices(dir: impl AsRef<Path>, spacing: [f64; 3], threshold: f64) -> Result<MaskVolume> {
    let dir = dir.as_ref();
    let files = list_slices(dir)?;
    if files.is_empty() {
        return Err(Error::EmptyDirectory(dir.to_path_buf()));
    }

    let first = load_plane(&files[0])?;
    let (w, h) = (first.width, first.height);
    let grid = Grid::new([w, h, files.len()], spacing)?;
    let mut data = Vec::with_capacity(grid.len());
    data.extend(first.binarize(threshold).data);

    for path in &files[1..] {
        let plane = load_plane(path)?;
        if (plane.width, plane.height) != (w, h) {
            return Err(Error::InconsistentDimensions(format!(
                "{} is {}x{}, expected {w}x{h}",
                path.display(),
                plane.width,
                plane.height
            )));
        }
        data.extend(plane.binarize(threshold).data);
    }
    MaskVolume::new(grid, data)
}

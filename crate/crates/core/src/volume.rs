//! In-memory 3D scalar volumes and binary masks.
//!
//! Data is stored x-fastest: the voxel `(x, y, z)` lives at
//! `x + nx * (y + ny * z)`. Physical coordinates place voxel `(0, 0, 0)` at the
//! origin, so voxel `(x, y, z)` sits at `(x * sx, y * sy, z * sz)` millimetres.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Voxel storage type carried by a volume on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataType {
    U8,
    I16,
    U16,
    F32,
}

impl DataType {
    pub fn nifti_code(self) -> i16 {
        match self {
            DataType::U8 => 2,
            DataType::I16 => 4,
            DataType::F32 => 16,
            DataType::U16 => 512,
        }
    }

    pub fn from_nifti_code(code: i16) -> Option<Self> {
        match code {
            2 => Some(DataType::U8),
            4 => Some(DataType::I16),
            16 => Some(DataType::F32),
            512 => Some(DataType::U16),
            _ => None,
        }
    }

    pub fn size_bytes(self) -> usize {
        match self {
            DataType::U8 => 1,
            DataType::I16 | DataType::U16 => 2,
            DataType::F32 => 4,
        }
    }

    /// Whether `value` is exactly representable in this type.
    pub fn represents(self, value: f32) -> bool {
        match self {
            DataType::U8 => value.fract() == 0.0 && (0.0..=255.0).contains(&value),
            DataType::I16 => value.fract() == 0.0 && (-32768.0..=32767.0).contains(&value),
            DataType::U16 => value.fract() == 0.0 && (0.0..=65535.0).contains(&value),
            DataType::F32 => value.is_finite(),
        }
    }
}

/// Grid geometry shared by volumes, masks and label maps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dims: [usize; 3],
    /// Millimetres per voxel along x, y, z.
    pub spacing: [f64; 3],
}

// Spacing is validated finite, so equality is total.
impl Eq for Grid {}

impl Grid {
    pub fn new(dims: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidVolume(format!("zero-sized dimension in {dims:?}")));
        }
        if spacing.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err(Error::InvalidVolume(format!("non-positive spacing {spacing:?}")));
        }
        Ok(Grid { dims, spacing })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [index % nx, (index / nx) % ny, index / (nx * ny)]
    }

    /// Volume of one voxel in mm³.
    pub fn voxel_volume(&self) -> f64 {
        self.spacing[0] * self.spacing[1] * self.spacing[2]
    }

    /// Physical centre of the grid in millimetres.
    pub fn center_mm(&self) -> [f64; 3] {
        std::array::from_fn(|a| (self.dims[a] as f64 - 1.0) * 0.5 * self.spacing[a])
    }

    /// Physical position (mm) of a possibly fractional voxel coordinate.
    pub fn to_physical(&self, voxel: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|a| voxel[a] * self.spacing[a])
    }

    /// Fractional voxel coordinate of a physical position (mm).
    pub fn to_voxel(&self, mm: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|a| mm[a] / self.spacing[a])
    }

    /// Same dims and spacing within a relative tolerance of 1e-6.
    pub fn matches(&self, other: &Grid) -> bool {
        self.dims == other.dims
            && self
                .spacing
                .iter()
                .zip(other.spacing.iter())
                .all(|(a, b)| (a - b).abs() <= 1e-6 * a.abs().max(b.abs()))
    }
}

/// A 3D scalar image with voxel spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    grid: Grid,
    dtype: DataType,
    data: Vec<f32>,
}

impl Volume {
    pub fn new(grid: Grid, dtype: DataType, data: Vec<f32>) -> Result<Self> {
        let grid = Grid::new(grid.dims, grid.spacing)?;
        if data.len() != grid.len() {
            return Err(Error::InvalidVolume(format!(
                "data length {} does not match dims {:?}",
                data.len(),
                grid.dims
            )));
        }
        if let Some(v) = data.iter().find(|v| !dtype.represents(**v)) {
            return Err(Error::InvalidVolume(format!(
                "value {v} is not representable as {dtype:?}"
            )));
        }
        Ok(Volume { grid, dtype, data })
    }

    pub fn from_fn(
        grid: Grid,
        dtype: DataType,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(grid.len());
        for z in 0..grid.dims[2] {
            for y in 0..grid.dims[1] {
                for x in 0..grid.dims[0] {
                    data.push(f(x, y, z));
                }
            }
        }
        Volume::new(grid, dtype, data)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dims(&self) -> [usize; 3] {
        self.grid.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.grid.spacing
    }

    pub fn dtype(&self) -> DataType {
        self.dtype
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f32 {
        self.data[self.grid.index(x, y, z)]
    }

    pub fn min_max(&self) -> (f32, f32) {
        self.data
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Binarizes the volume: voxels strictly above `threshold` become foreground.
    pub fn binarize(&self, threshold: f64) -> MaskVolume {
        let data = self
            .data
            .iter()
            .map(|&v| u8::from(f64::from(v) > threshold))
            .collect();
        MaskVolume {
            grid: self.grid,
            data,
        }
    }
}

/// A binary 3D mask: 0 is background, 1 is foreground.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskVolume {
    grid: Grid,
    data: Vec<u8>,
}

impl MaskVolume {
    pub fn new(grid: Grid, data: Vec<u8>) -> Result<Self> {
        let grid = Grid::new(grid.dims, grid.spacing)?;
        if data.len() != grid.len() {
            return Err(Error::InvalidVolume(format!(
                "mask length {} does not match dims {:?}",
                data.len(),
                grid.dims
            )));
        }
        if data.iter().any(|&v| v > 1) {
            return Err(Error::InvalidVolume("mask values must be 0 or 1".into()));
        }
        Ok(MaskVolume { grid, data })
    }

    pub fn zeros(grid: Grid) -> Self {
        MaskVolume {
            data: vec![0; grid.len()],
            grid,
        }
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(usize, usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for z in 0..grid.dims[2] {
            for y in 0..grid.dims[1] {
                for x in 0..grid.dims[0] {
                    data.push(u8::from(f(x, y, z)));
                }
            }
        }
        MaskVolume { grid, data }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dims(&self) -> [usize; 3] {
        self.grid.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.grid.spacing
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.data[self.grid.index(x, y, z)] != 0
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize, on: bool) {
        let i = self.grid.index(x, y, z);
        self.data[i] = u8::from(on);
    }

    pub fn foreground_count(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    /// The mask as a `u8` volume with values {0, 1}.
    pub fn to_volume(&self) -> Volume {
        Volume {
            grid: self.grid,
            dtype: DataType::U8,
            data: self.data.iter().map(|&v| f32::from(v)).collect(),
        }
    }
}

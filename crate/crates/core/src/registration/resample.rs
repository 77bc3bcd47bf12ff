//! Pull-back resampling of volumes and label maps onto a reference grid.

use super::transform::{Mat3, RigidTransform, Vec3};
use crate::labeling::LesionLabelMap;
use crate::volume::{DataType, Grid, Volume};

// Fractional coordinates this close to an integer are treated as exact, so
// identity-like transforms reproduce voxel values bit for bit.
const SNAP: f64 = 1e-9;

#[inline]
fn snap(u: f64) -> f64 {
    let r = u.round();
    if (u - r).abs() < SNAP {
        r
    } else {
        u
    }
}

/// Maps reference voxel indices straight to moving voxel coordinates:
/// `u = M (i, j, k) + u0`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct IndexMap {
    pub m: Mat3,
    pub u0: Vec3,
}

impl IndexMap {
    /// `ref_origin`/`mov_origin` are the physical positions of voxel 0.
    pub fn new(
        transform: &RigidTransform,
        ref_spacing: Vec3,
        ref_origin: Vec3,
        mov_spacing: Vec3,
        mov_origin: Vec3,
    ) -> Self {
        let (a, b) = transform.affine();
        let m = std::array::from_fn(|r| std::array::from_fn(|c| a[r][c] * ref_spacing[c] / mov_spacing[r]));
        let u0 = std::array::from_fn(|r| {
            let q = a[r][0] * ref_origin[0] + a[r][1] * ref_origin[1] + a[r][2] * ref_origin[2] + b[r];
            (q - mov_origin[r]) / mov_spacing[r]
        });
        IndexMap { m, u0 }
    }

    #[inline]
    pub fn row_start(&self, j: usize, k: usize) -> Vec3 {
        let (j, k) = (j as f64, k as f64);
        std::array::from_fn(|r| self.u0[r] + self.m[r][1] * j + self.m[r][2] * k)
    }

    #[inline]
    pub fn at(&self, row: Vec3, i: usize) -> Vec3 {
        let i = i as f64;
        std::array::from_fn(|r| row[r] + self.m[r][0] * i)
    }
}

/// Trilinear sampling of a scalar grid in voxel coordinates.
pub(crate) struct Trilinear<'a> {
    pub dims: [usize; 3],
    pub data: &'a [f32],
}

impl Trilinear<'_> {
    #[inline]
    fn axis(u: f64, n: usize) -> Option<(usize, f64)> {
        let u = snap(u);
        if u < 0.0 || u > (n - 1) as f64 {
            return None;
        }
        if n == 1 {
            return Some((0, 0.0));
        }
        let i0 = (u.floor() as usize).min(n - 2);
        Some((i0, u - i0 as f64))
    }

    /// Interpolated value, or `None` outside the grid.
    #[inline]
    pub fn sample(&self, u: Vec3) -> Option<f64> {
        let [nx, ny, nz] = self.dims;
        let (x0, fx) = Self::axis(u[0], nx)?;
        let (y0, fy) = Self::axis(u[1], ny)?;
        let (z0, fz) = Self::axis(u[2], nz)?;
        let sx = usize::from(nx > 1);
        let sy = if ny > 1 { nx } else { 0 };
        let sz = if nz > 1 { nx * ny } else { 0 };
        let base = x0 + nx * (y0 + ny * z0);
        let d = self.data;
        let v = |o: usize| f64::from(d[base + o]);
        // Exact weights of 0 and 1 at voxel centres keep identity sampling exact.
        let c00 = lerp(v(0), v(sx), fx);
        let c10 = lerp(v(sy), v(sy + sx), fx);
        let c01 = lerp(v(sz), v(sz + sx), fx);
        let c11 = lerp(v(sz + sy), v(sz + sy + sx), fx);
        let c0 = lerp(c00, c10, fy);
        let c1 = lerp(c01, c11, fy);
        Some(lerp(c0, c1, fz))
    }
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    if t == 0.0 {
        a
    } else if t == 1.0 {
        b
    } else {
        a + (b - a) * t
    }
}

#[inline]
fn nearest(u: Vec3, dims: [usize; 3]) -> Option<[usize; 3]> {
    let mut idx = [0usize; 3];
    for a in 0..3 {
        let r = (snap(u[a]) + 0.5).floor();
        if r < 0.0 || r >= dims[a] as f64 {
            return None;
        }
        idx[a] = r as usize;
    }
    Some(idx)
}

/// Resamples `moving` onto `reference` by trilinear interpolation at `T(p)` for
/// each reference voxel `p`. Points falling outside `moving` become 0.
pub fn resample_volume(moving: &Volume, transform: &RigidTransform, reference: &Grid) -> Volume {
    let map = IndexMap::new(transform, reference.spacing, [0.0; 3], moving.spacing(), [0.0; 3]);
    let sampler = Trilinear {
        dims: moving.dims(),
        data: moving.data(),
    };
    let [nx, ny, nz] = reference.dims;
    let mut out = Vec::with_capacity(reference.len());
    for k in 0..nz {
        for j in 0..ny {
            let row = map.row_start(j, k);
            for i in 0..nx {
                out.push(sampler.sample(map.at(row, i)).unwrap_or(0.0) as f32);
            }
        }
    }
    Volume::new(*reference, DataType::F32, out).expect("finite samples on a valid grid")
}

/// Resamples a label map by nearest-neighbour lookup, keeping label identities.
/// Labels whose voxels all map outside the reference grid disappear.
pub fn resample_labelmap(labels: &LesionLabelMap, transform: &RigidTransform, reference: &Grid) -> LesionLabelMap {
    let src = labels.grid();
    let map = IndexMap::new(transform, reference.spacing, [0.0; 3], src.spacing, [0.0; 3]);
    let [nx, ny, nz] = reference.dims;
    let mut out = Vec::with_capacity(reference.len());
    for k in 0..nz {
        for j in 0..ny {
            let row = map.row_start(j, k);
            for i in 0..nx {
                let l = nearest(map.at(row, i), src.dims)
                    .map(|[x, y, z]| labels.get(x, y, z))
                    .unwrap_or(0);
                out.push(l);
            }
        }
    }
    LesionLabelMap::from_labels(*reference, out).expect("label array sized to the reference grid")
}

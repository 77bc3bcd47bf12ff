//! Synthetic head phantoms with known lesions and known motion.
//!
//! Intensities are analytic functions of physical position, so a moved copy
//! of a phantom is produced by evaluating the same function at `T⁻¹(q)`
//! rather than by resampling, and carries no interpolation error.

use crate::error::Result;
use crate::registration::{RigidTransform, Vec3};
use crate::volume::{DataType, Grid, MaskVolume, Volume};

const TISSUE: f64 = 1000.0;
const EDGE_MM: f64 = 3.0;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

struct Blob {
    /// Position in units of the grid half-extent, relative to the centre.
    at: Vec3,
    sigma: Vec3,
    amplitude: f64,
}

/// Smooth, asymmetric head-like intensity field scaled to a grid.
pub struct HeadPhantom {
    center: Vec3,
    half: Vec3,
    blobs: Vec<Blob>,
}

impl HeadPhantom {
    pub fn new(grid: &Grid) -> Self {
        let center = grid.center_mm();
        let half: Vec3 = std::array::from_fn(|a| ((grid.dims[a] as f64 - 1.0) * grid.spacing[a] / 2.0).max(1.0));
        let blob = |at: Vec3, sigma: Vec3, amplitude| Blob { at, sigma, amplitude };
        HeadPhantom {
            center,
            half,
            blobs: vec![
                blob([-0.18, 0.05, 0.05], [0.12, 0.28, 0.16], -420.0),
                blob([0.2, 0.1, 0.02], [0.1, 0.22, 0.14], -300.0),
                blob([0.3, -0.35, -0.3], [0.18, 0.16, 0.2], 260.0),
                blob([-0.4, -0.3, 0.35], [0.12, 0.12, 0.12], 180.0),
                blob([0.05, 0.45, -0.2], [0.2, 0.1, 0.15], -150.0),
                blob([0.55, 0.2, 0.25], [0.08, 0.1, 0.08], 220.0),
                blob([-0.6, 0.15, -0.1], [0.1, 0.07, 0.09], -200.0),
                blob([0.1, -0.55, 0.3], [0.09, 0.08, 0.1], 200.0),
                blob([-0.25, 0.5, 0.4], [0.08, 0.09, 0.07], 240.0),
                blob([0.35, 0.35, -0.45], [0.1, 0.08, 0.08], -180.0),
                blob([-0.35, -0.15, -0.5], [0.09, 0.1, 0.08], 160.0),
            ],
        }
    }

    fn normalized(&self, p: Vec3) -> Vec3 {
        std::array::from_fn(|a| (p[a] - self.center[a]) / self.half[a])
    }

    /// Tissue intensity at a physical point (mm).
    pub fn intensity(&self, p: Vec3) -> f64 {
        let u = self.normalized(p);
        let radii = [0.9, 0.75, 0.65];
        let r = u.iter().zip(radii).map(|(v, rad)| (v / rad).powi(2)).sum::<f64>().sqrt();
        let scale = self.half.iter().zip(radii).map(|(h, rad)| h * rad).fold(f64::INFINITY, f64::min);
        let inside = sigmoid((1.0 - r) * scale / EDGE_MM);

        let mut v = TISSUE + 120.0 * u[0] + 80.0 * u[2] - 60.0 * u[1] * u[1];
        for b in &self.blobs {
            let e: f64 = (0..3).map(|a| ((u[a] - b.at[a]) / b.sigma[a]).powi(2)).sum();
            v += b.amplitude * (-0.5 * e).exp();
        }
        // dim scalp-like rim
        let rim = (-((r - 1.1) / 0.1).powi(2)).exp();
        inside * v + 300.0 * rim
    }

    /// Samples the phantom on `grid`; with a transform `T`, voxel `q` shows
    /// the content at `T⁻¹(q)`, i.e. the phantom moved by `T`.
    pub fn sample(&self, grid: &Grid, motion: Option<&RigidTransform>) -> Result<Volume> {
        self.sample_with(grid, motion, |_| 1.0)
    }

    fn sample_with(
        &self,
        grid: &Grid,
        motion: Option<&RigidTransform>,
        mut attenuation: impl FnMut(Vec3) -> f64,
    ) -> Result<Volume> {
        Volume::from_fn(*grid, DataType::F32, |x, y, z| {
            let q = grid.to_physical([x as f64, y as f64, z as f64]);
            let p = motion.map_or(q, |t| t.apply_inverse(q));
            (self.intensity(p) * attenuation(p)) as f32
        })
    }
}

/// A spherical lesion in baseline physical coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sphere {
    pub center: Vec3,
    pub radius: f64,
}

impl Sphere {
    pub fn contains(&self, p: Vec3) -> bool {
        (0..3).map(|a| (p[a] - self.center[a]).powi(2)).sum::<f64>() <= self.radius * self.radius
    }

    fn darkening(&self, p: Vec3) -> f64 {
        let d = (0..3).map(|a| (p[a] - self.center[a]).powi(2)).sum::<f64>().sqrt();
        1.0 - 0.7 * sigmoid((self.radius - d) / 0.5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LesionFate {
    Grow,
    Shrink,
    Unchanged,
    Vanish,
    /// One baseline lesion replaced by several smaller ones inside its
    /// bounding cube.
    Split,
    New,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomLesion {
    pub fate: LesionFate,
    pub baseline: Option<Sphere>,
    /// Follow-up lesions, in baseline coordinates.
    pub follow: Vec<Sphere>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exam {
    pub image: Volume,
    pub mask: MaskVolume,
}

/// Baseline and follow-up examinations of one synthetic patient.
#[derive(Debug, Clone, PartialEq)]
pub struct LongitudinalPhantom {
    pub baseline: Exam,
    pub follow: Exam,
    /// Ground-truth baseline-to-follow-up transform.
    pub motion: RigidTransform,
    pub lesions: Vec<PhantomLesion>,
}

pub const LONGITUDINAL_DIMS: [usize; 3] = [80, 80, 64];

impl LongitudinalPhantom {
    /// Default scenario on an 80×80×64 grid of 1 mm voxels: twelve baseline
    /// lesions (3 grow, 3 shrink, 3 unchanged, 2 vanish, 1 split in three)
    /// and two new follow-up lesions, 14 follow-up lesions in all.
    pub fn standard() -> Result<Self> {
        let grid = Grid::new(LONGITUDINAL_DIMS, [1.0; 3])?;
        let motion = RigidTransform::new([3.0, -2.0, 4.0], [2.5, -1.5, 1.0], grid.center_mm())?;
        Self::build(grid, motion)
    }

    /// Same scenario with a caller-chosen motion.
    pub fn build(grid: Grid, motion: RigidTransform) -> Result<Self> {
        use LesionFate::*;
        let sites = [
            ([17.0, 25.0, 24.0], Grow, 3.0),
            ([32.0, 25.0, 24.0], Shrink, 4.5),
            ([47.0, 25.0, 24.0], Unchanged, 3.5),
            ([62.0, 25.0, 24.0], Vanish, 2.5),
            ([17.0, 40.0, 24.0], Shrink, 4.0),
            ([32.0, 40.0, 24.0], Split, 6.0),
            ([47.0, 40.0, 24.0], Grow, 3.5),
            ([62.0, 40.0, 24.0], Unchanged, 3.0),
            ([17.0, 55.0, 39.0], New, 3.0),
            ([32.0, 55.0, 39.0], Unchanged, 4.0),
            ([47.0, 55.0, 39.0], Vanish, 3.0),
            ([62.0, 55.0, 39.0], Grow, 2.5),
            ([32.0, 25.0, 39.0], Shrink, 5.0),
            ([62.0, 40.0, 39.0], New, 3.5),
        ];
        let lesions: Vec<PhantomLesion> = sites
            .iter()
            .map(|&(center, fate, radius)| {
                let s = Sphere { center, radius };
                let scaled = |k: f64| Sphere {
                    center,
                    radius: radius * k,
                };
                let (baseline, follow) = match fate {
                    Grow => (Some(s), vec![scaled(1.3)]),
                    Shrink => (Some(s), vec![scaled(0.75)]),
                    Unchanged => (Some(s), vec![s]),
                    Vanish => (Some(s), vec![]),
                    New => (None, vec![s]),
                    Split => {
                        let child = |d: Vec3| Sphere {
                            center: std::array::from_fn(|a| center[a] + d[a]),
                            radius: 2.0,
                        };
                        (
                            Some(s),
                            vec![child([-4.0, -2.0, 0.0]), child([4.0, -2.0, 0.0]), child([0.0, 3.5, 0.0])],
                        )
                    }
                };
                PhantomLesion { fate, baseline, follow }
            })
            .collect();

        let head = HeadPhantom::new(&grid);
        let base_spheres: Vec<Sphere> = lesions.iter().filter_map(|l| l.baseline).collect();
        let follow_spheres: Vec<Sphere> = lesions.iter().flat_map(|l| l.follow.iter().copied()).collect();

        let exam = |spheres: &[Sphere], motion: Option<&RigidTransform>| -> Result<Exam> {
            let image = head.sample_with(&grid, motion, |p| spheres.iter().map(|s| s.darkening(p)).product())?;
            let mask = MaskVolume::from_fn(grid, |x, y, z| {
                let q = grid.to_physical([x as f64, y as f64, z as f64]);
                let p = motion.map_or(q, |t| t.apply_inverse(q));
                spheres.iter().any(|s| s.contains(p))
            });
            Ok(Exam { image, mask })
        };

        Ok(LongitudinalPhantom {
            baseline: exam(&base_spheres, None)?,
            follow: exam(&follow_spheres, Some(&motion))?,
            motion,
            lesions,
        })
    }

    /// Nearest voxel to a baseline-space point in the baseline grid.
    pub fn baseline_voxel(&self, p: Vec3) -> [usize; 3] {
        nearest_voxel(self.baseline.mask.grid(), p)
    }

    /// Nearest voxel, in the follow-up grid, to where a baseline-space point
    /// moved.
    pub fn follow_voxel(&self, p: Vec3) -> [usize; 3] {
        nearest_voxel(self.follow.mask.grid(), self.motion.apply(p))
    }
}

fn nearest_voxel(grid: &Grid, p: Vec3) -> [usize; 3] {
    let v = grid.to_voxel(p);
    std::array::from_fn(|a| (v[a].round().max(0.0) as usize).min(grid.dims[a] - 1))
}

/// Binary mask with the given spheres (grid voxel coordinates, radius in
/// voxels) switched on.
pub fn sphere_mask(grid: Grid, spheres: &[([f64; 3], f64)]) -> MaskVolume {
    MaskVolume::from_fn(grid, |x, y, z| {
        spheres.iter().any(|(c, r)| {
            (x as f64 - c[0]).powi(2) + (y as f64 - c[1]).powi(2) + (z as f64 - c[2]).powi(2) <= r * r
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeling::{label_components, Connectivity};

    #[test]
    fn phantom_is_asymmetric_and_bounded() {
        let g = Grid::new([32, 32, 32], [1.0; 3]).unwrap();
        let v = HeadPhantom::new(&g).sample(&g, None).unwrap();
        let (lo, hi) = v.min_max();
        assert!(lo >= 0.0 && hi < 2000.0 && hi > 500.0);
        assert_ne!(v.get(8, 16, 16), v.get(23, 16, 16));
        assert!(v.get(0, 0, 0) < 50.0);
    }

    #[test]
    fn moved_phantom_matches_transform() {
        let g = Grid::new([24, 24, 24], [1.0; 3]).unwrap();
        let head = HeadPhantom::new(&g);
        let t = RigidTransform::new([0.0; 3], [2.0, 0.0, 0.0], g.center_mm()).unwrap();
        let moved = head.sample(&g, Some(&t)).unwrap();
        let still = head.sample(&g, None).unwrap();
        // content shifts by +2 voxels along x
        assert_eq!(moved.get(12, 10, 11), still.get(10, 10, 11));
    }

    #[test]
    fn standard_scenario_counts() {
        let ph = LongitudinalPhantom::standard().unwrap();
        let prev = label_components(&ph.baseline.mask, Connectivity::TwentySix);
        let follow = label_components(&ph.follow.mask, Connectivity::TwentySix);
        assert_eq!(prev.lesion_count(), 12);
        assert_eq!(follow.lesion_count(), 14);
    }
}

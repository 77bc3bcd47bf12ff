use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

pub const CONVENTION: &str = "fixed-to-moving, intrinsic ZYX, pull-back";

/// 6-DoF rigid transform mapping fixed-space points to moving-space points:
/// `q = R (p - c) + c + t`, with `R = Rz * Ry * Rx` built from intrinsic
/// Z-Y-X Euler angles in degrees and `c` the rotation centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub rotation_deg: Vec3,
    pub translation_mm: Vec3,
    pub center_mm: Vec3,
}

impl RigidTransform {
    pub fn identity(center_mm: Vec3) -> Self {
        RigidTransform {
            rotation_deg: [0.0; 3],
            translation_mm: [0.0; 3],
            center_mm,
        }
    }

    pub fn new(rotation_deg: Vec3, translation_mm: Vec3, center_mm: Vec3) -> Result<Self> {
        let t = RigidTransform {
            rotation_deg,
            translation_mm,
            center_mm,
        };
        if t.params().iter().chain(center_mm.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite transform component".into()));
        }
        Ok(t)
    }

    /// `[rx, ry, rz, tx, ty, tz]`.
    pub fn params(&self) -> [f64; 6] {
        let [rx, ry, rz] = self.rotation_deg;
        let [tx, ty, tz] = self.translation_mm;
        [rx, ry, rz, tx, ty, tz]
    }

    pub fn with_params(&self, p: [f64; 6]) -> Self {
        RigidTransform {
            rotation_deg: [p[0], p[1], p[2]],
            translation_mm: [p[3], p[4], p[5]],
            center_mm: self.center_mm,
        }
    }

    pub fn matrix(&self) -> Mat3 {
        let [rx, ry, rz] = self.rotation_deg.map(f64::to_radians);
        let (sx, cx) = rx.sin_cos();
        let (sy, cy) = ry.sin_cos();
        let (sz, cz) = rz.sin_cos();
        let rot_x = [[1.0, 0.0, 0.0], [0.0, cx, -sx], [0.0, sx, cx]];
        let rot_y = [[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]];
        let rot_z = [[cz, -sz, 0.0], [sz, cz, 0.0], [0.0, 0.0, 1.0]];
        mat_mul(&mat_mul(&rot_z, &rot_y), &rot_x)
    }

    /// Fixed-space point to moving-space point.
    pub fn apply(&self, p: Vec3) -> Vec3 {
        let r = self.matrix();
        let d = sub(p, self.center_mm);
        std::array::from_fn(|i| {
            r[i][0] * d[0] + r[i][1] * d[1] + r[i][2] * d[2] + self.center_mm[i] + self.translation_mm[i]
        })
    }

    /// Moving-space point to fixed-space point.
    pub fn apply_inverse(&self, q: Vec3) -> Vec3 {
        let r = self.matrix();
        let d: Vec3 = std::array::from_fn(|i| q[i] - self.center_mm[i] - self.translation_mm[i]);
        std::array::from_fn(|i| r[0][i] * d[0] + r[1][i] * d[1] + r[2][i] * d[2] + self.center_mm[i])
    }

    /// Affine form `q = A p + b`.
    pub fn affine(&self) -> (Mat3, Vec3) {
        let r = self.matrix();
        let c = self.center_mm;
        let b = std::array::from_fn(|i| {
            c[i] + self.translation_mm[i] - (r[i][0] * c[0] + r[i][1] * c[1] + r[i][2] * c[2])
        });
        (r, b)
    }
}

/// Returns `T⁻¹(q)`: where a moving-space point lands in fixed space.
pub fn map_moving_point_to_fixed(transform: &RigidTransform, q: Vec3) -> Vec3 {
    transform.apply_inverse(q)
}

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    std::array::from_fn(|i| a[i] - b[i])
}

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..3).map(|k| a[i][k] * b[k][j]).sum()))
}

/// On-disk form of a registration result (`transform.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformRecord {
    pub rotation_deg: Vec3,
    pub translation_mm: Vec3,
    pub center_mm: Vec3,
    pub convention: String,
    pub final_ncc: f64,
    pub converged: bool,
}

impl TransformRecord {
    pub fn transform(&self) -> Result<RigidTransform> {
        if self.convention != CONVENTION {
            return Err(Error::InvalidConfig(format!(
                "unknown transform convention {:?}",
                self.convention
            )));
        }
        RigidTransform::new(self.rotation_deg, self.translation_mm, self.center_mm)
    }
}

//! Rigid registration of a follow-up volume onto a baseline volume.
//!
//! The baseline is the fixed image; the optimizer looks for the transform
//! `T` (fixed space to moving space) that maximizes the normalized
//! cross-correlation between the fixed image and `moving ∘ T`. Search runs
//! coarse to fine over a block-averaged pyramid using a compass pattern
//! search on the six rigid parameters.

mod resample;
mod transform;

pub use resample::{resample_labelmap, resample_volume};
pub use transform::{map_moving_point_to_fixed, Mat3, RigidTransform, TransformRecord, Vec3, CONVENTION};

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::Volume;
use resample::{IndexMap, Trilinear};

/// Search settings. Steps are `(millimetres, degrees)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegistrationParams {
    /// Number of pyramid levels; level `k` (0 = coarsest) downsamples by
    /// `2^(levels - 1 - k)`.
    pub pyramid_levels: usize,
    /// Step sizes at the coarsest level; each finer level starts at half.
    pub initial_step: (f64, f64),
    /// Search stops on a level once steps fall below this (scaled by the
    /// level's downsampling factor).
    pub min_step: (f64, f64),
    pub max_iterations_per_level: usize,
}

impl Default for RegistrationParams {
    fn default() -> Self {
        RegistrationParams {
            pyramid_levels: 3,
            initial_step: (8.0, 4.0),
            min_step: (0.1, 0.05),
            max_iterations_per_level: 200,
        }
    }
}

impl RegistrationParams {
    pub fn validate(&self) -> Result<()> {
        let (it, ir) = self.initial_step;
        let (mt, mr) = self.min_step;
        if self.pyramid_levels == 0 || self.pyramid_levels > 8 {
            return Err(Error::InvalidConfig("pyramid_levels must be in 1..=8".into()));
        }
        if !(mt > 0.0 && mr > 0.0 && mt < it && mr < ir) || !(it.is_finite() && ir.is_finite()) {
            return Err(Error::InvalidConfig(
                "steps must satisfy 0 < min_step < initial_step".into(),
            ));
        }
        if self.max_iterations_per_level == 0 {
            return Err(Error::InvalidConfig("max_iterations_per_level must be positive".into()));
        }
        Ok(())
    }
}

/// What happened on one pyramid level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelTrace {
    pub factor: usize,
    pub iterations: usize,
    pub hit_iteration_cap: bool,
    /// Metric value at the level start followed by the value after every
    /// accepted move.
    pub accepted_ncc: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationOutcome {
    pub transform: RigidTransform,
    /// NCC at full resolution for the returned transform.
    pub final_ncc: f64,
    /// False when every level stopped on the iteration cap.
    pub converged: bool,
    pub levels: Vec<LevelTrace>,
}

impl RegistrationOutcome {
    pub fn record(&self) -> TransformRecord {
        TransformRecord {
            rotation_deg: self.transform.rotation_deg,
            translation_mm: self.transform.translation_mm,
            center_mm: self.transform.center_mm,
            convention: CONVENTION.to_string(),
            final_ncc: self.final_ncc,
            converged: self.converged,
        }
    }
}

/// One resolution of an image: voxel 0 sits at `origin` (mm).
struct Level {
    dims: [usize; 3],
    spacing: Vec3,
    origin: Vec3,
    data: Vec<f32>,
}

impl Level {
    fn full(v: &Volume) -> Self {
        Level {
            dims: v.dims(),
            spacing: v.spacing(),
            origin: [0.0; 3],
            data: v.data().to_vec(),
        }
    }

    /// Block average by `f` along every axis; partial edge blocks average
    /// the voxels they have.
    fn downsample(&self, f: usize) -> Self {
        if f == 1 {
            return Level {
                dims: self.dims,
                spacing: self.spacing,
                origin: self.origin,
                data: self.data.clone(),
            };
        }
        let [nx, ny, nz] = self.dims;
        let dims = [nx.div_ceil(f), ny.div_ceil(f), nz.div_ceil(f)];
        let mut sum = vec![0f64; dims[0] * dims[1] * dims[2]];
        let mut count = vec![0u32; sum.len()];
        for z in 0..nz {
            for y in 0..ny {
                let row = nx * (y + ny * z);
                let orow = dims[0] * (y / f + dims[1] * (z / f));
                for x in 0..nx {
                    sum[orow + x / f] += f64::from(self.data[row + x]);
                    count[orow + x / f] += 1;
                }
            }
        }
        let data = sum.iter().zip(&count).map(|(s, &c)| (s / f64::from(c)) as f32).collect();
        Level {
            dims,
            spacing: std::array::from_fn(|a| self.spacing[a] * f as f64),
            origin: std::array::from_fn(|a| self.origin[a] + (f as f64 - 1.0) * 0.5 * self.spacing[a]),
            data,
        }
    }

    fn len(&self) -> usize {
        self.data.len()
    }
}

/// Outcome of one metric evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Metric {
    Value(f64),
    Degenerate,
    NoOverlap,
}

/// Normalized cross-correlation of `fixed` and `moving ∘ T` over the fixed
/// voxels whose mapped position falls inside `moving`.
fn ncc(fixed: &Level, moving: &Level, t: &RigidTransform, min_overlap: usize) -> Metric {
    let map = IndexMap::new(t, fixed.spacing, fixed.origin, moving.spacing, moving.origin);
    let sampler = Trilinear {
        dims: moving.dims,
        data: &moving.data,
    };
    let [nx, ny, nz] = fixed.dims;
    let (mut n, mut sf, mut sm, mut sff, mut smm, mut sfm) = (0usize, 0f64, 0f64, 0f64, 0f64, 0f64);
    let mut idx = 0;
    for k in 0..nz {
        for j in 0..ny {
            let row = map.row_start(j, k);
            for i in 0..nx {
                let f = f64::from(fixed.data[idx]);
                idx += 1;
                if let Some(m) = sampler.sample(map.at(row, i)) {
                    n += 1;
                    sf += f;
                    sm += m;
                    sff += f * f;
                    smm += m * m;
                    sfm += f * m;
                }
            }
        }
    }
    if n < min_overlap.max(1) {
        return Metric::NoOverlap;
    }
    let nf = n as f64;
    let cov = sfm - sf * sm / nf;
    let vf = sff - sf * sf / nf;
    let vm = smm - sm * sm / nf;
    let scale = (sff.abs() + smm.abs()).max(f64::MIN_POSITIVE);
    if vf <= 1e-12 * scale || vm <= 1e-12 * scale {
        return Metric::Degenerate;
    }
    Metric::Value(cov / (vf * vm).sqrt())
}

fn is_constant(v: &Volume) -> bool {
    let (lo, hi) = v.min_max();
    lo == hi
}

/// Aligns `moving` to `fixed`, starting from a transform that maps the fixed
/// grid centre onto the moving grid centre.
pub fn register_rigid(fixed: &Volume, moving: &Volume, params: &RegistrationParams) -> Result<RegistrationOutcome> {
    params.validate()?;
    if is_constant(fixed) || is_constant(moving) {
        return Err(Error::DegenerateInput("constant-intensity volume, NCC is undefined".into()));
    }
    let center = fixed.grid().center_mm();
    let moving_center = moving.grid().center_mm();
    let init = RigidTransform::new([0.0; 3], std::array::from_fn(|a| moving_center[a] - center[a]), center)?;
    register_from(fixed, moving, params, init)
}

/// Like [`register_rigid`] but starting from a caller-supplied transform.
pub fn register_from(
    fixed: &Volume,
    moving: &Volume,
    params: &RegistrationParams,
    init: RigidTransform,
) -> Result<RegistrationOutcome> {
    params.validate()?;
    let fixed_full = Level::full(fixed);
    let moving_full = Level::full(moving);

    let mut current = init;
    let mut levels = Vec::with_capacity(params.pyramid_levels);
    for level in 0..params.pyramid_levels {
        let factor = 1usize << (params.pyramid_levels - 1 - level);
        let f = fixed_full.downsample(factor);
        let m = moving_full.downsample(factor);
        // Candidates must overlap at least a tenth of the fixed grid.
        let min_overlap = (f.len() / 10).max(8);

        let start = match ncc(&f, &m, &current, min_overlap) {
            Metric::Value(v) => v,
            Metric::NoOverlap => return Err(Error::NoOverlap),
            Metric::Degenerate => {
                return Err(Error::DegenerateInput(format!(
                    "overlap region has constant intensity at factor {factor}"
                )))
            }
        };

        let halvings = level as i32;
        let mut step_t = params.initial_step.0 / 2f64.powi(halvings);
        let mut step_r = params.initial_step.1 / 2f64.powi(halvings);
        let min_t = params.min_step.0 * factor as f64;
        let min_r = params.min_step.1 * factor as f64;

        let mut best = start;
        let mut accepted = vec![start];
        let mut iterations = 0;
        let mut finished = false;
        while iterations < params.max_iterations_per_level {
            if step_t < min_t && step_r < min_r {
                finished = true;
                break;
            }
            iterations += 1;
            let base = current.params();
            let mut winner: Option<([f64; 6], f64)> = None;
            for axis in 0..6 {
                let step = if axis < 3 { step_r } else { step_t };
                for sign in [1.0, -1.0] {
                    let mut p = base;
                    p[axis] += sign * step;
                    let candidate = current.with_params(p);
                    if let Metric::Value(v) = ncc(&f, &m, &candidate, min_overlap) {
                        let bar = winner.map_or(best, |(_, w)| w);
                        if v > bar {
                            winner = Some((p, v));
                        }
                    }
                }
            }
            match winner {
                Some((p, v)) => {
                    current = current.with_params(p);
                    best = v;
                    accepted.push(v);
                }
                None => {
                    step_t *= 0.5;
                    step_r *= 0.5;
                }
            }
        }
        if !finished && step_t < min_t && step_r < min_r {
            finished = true;
        }
        debug!(
            "level x{factor}: {iterations} iterations, ncc {start:.6} -> {best:.6}, params {:?}",
            current.params()
        );
        levels.push(LevelTrace {
            factor,
            iterations,
            hit_iteration_cap: !finished,
            accepted_ncc: accepted,
        });
    }

    let final_ncc = match ncc(&fixed_full, &moving_full, &current, 8) {
        Metric::Value(v) => v,
        Metric::NoOverlap => return Err(Error::NoOverlap),
        Metric::Degenerate => return Err(Error::DegenerateInput("constant overlap at full resolution".into())),
    };
    let converged = !levels.iter().all(|l| l.hit_iteration_cap);
    if !converged {
        warn!("registration hit the iteration cap on every level; returning best transform found");
    }
    Ok(RegistrationOutcome {
        transform: current,
        final_ncc,
        converged,
        levels,
    })
}

/// NCC between `fixed` and `moving ∘ transform` at full resolution.
pub fn similarity(fixed: &Volume, moving: &Volume, transform: &RigidTransform) -> Result<f64> {
    match ncc(&Level::full(fixed), &Level::full(moving), transform, 8) {
        Metric::Value(v) => Ok(v),
        Metric::NoOverlap => Err(Error::NoOverlap),
        Metric::Degenerate => Err(Error::DegenerateInput("constant overlap".into())),
    }
}

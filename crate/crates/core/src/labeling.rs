//! Connected-component labelling of 3D masks and per-lesion statistics.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{Grid, MaskVolume};

/// Voxel neighbourhood used to decide whether two foreground voxels touch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Connectivity {
    /// Face neighbours only.
    Six,
    /// Faces and edges.
    Eighteen,
    /// Faces, edges and corners.
    #[default]
    TwentySix,
}

impl Connectivity {
    pub const ALL: [Connectivity; 3] = [Connectivity::Six, Connectivity::Eighteen, Connectivity::TwentySix];

    pub fn neighbors(self) -> u8 {
        self.into()
    }

    /// Largest Manhattan length of a neighbour offset.
    fn reach(self) -> i32 {
        match self {
            Connectivity::Six => 1,
            Connectivity::Eighteen => 2,
            Connectivity::TwentySix => 3,
        }
    }

    /// All neighbour offsets `(dx, dy, dz)`.
    pub fn offsets(self) -> Vec<[i32; 3]> {
        let mut out = Vec::with_capacity(26);
        for dz in -1..=1 {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let l1 = dx * dx + dy * dy + dz * dz;
                    if l1 != 0 && l1 <= self.reach() {
                        out.push([dx, dy, dz]);
                    }
                }
            }
        }
        out
    }

    /// Neighbour offsets that precede the centre voxel in raster order.
    fn backward_offsets(self) -> Vec<[i32; 3]> {
        self.offsets()
            .into_iter()
            .filter(|&[dx, dy, dz]| (dz, dy, dx) < (0, 0, 0))
            .collect()
    }
}

impl From<Connectivity> for u8 {
    fn from(c: Connectivity) -> u8 {
        match c {
            Connectivity::Six => 6,
            Connectivity::Eighteen => 18,
            Connectivity::TwentySix => 26,
        }
    }
}

impl TryFrom<u8> for Connectivity {
    type Error = Error;

    fn try_from(n: u8) -> Result<Self> {
        match n {
            6 => Ok(Connectivity::Six),
            18 => Ok(Connectivity::Eighteen),
            26 => Ok(Connectivity::TwentySix),
            other => Err(Error::InvalidConfig(format!("connectivity must be 6, 18 or 26, got {other}"))),
        }
    }
}

impl fmt::Display for Connectivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.neighbors())
    }
}

/// Per-voxel lesion labels: 0 is background, `k >= 1` is lesion `k`.
///
/// Maps produced by [`label_components`] use the contiguous label set
/// `1..=lesion_count`. Maps produced by resampling keep the source labels, so
/// labels that fell outside the target grid leave gaps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LesionLabelMap {
    grid: Grid,
    labels: Vec<u32>,
    lesion_count: usize,
}

impl LesionLabelMap {
    /// Builds a map from raw labels; `lesion_count` is the number of distinct
    /// nonzero labels present.
    pub fn from_labels(grid: Grid, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != grid.len() {
            return Err(Error::InvalidVolume(format!(
                "label array of {} for dims {:?}",
                labels.len(),
                grid.dims
            )));
        }
        let max = labels.iter().copied().max().unwrap_or(0) as usize;
        let mut seen = vec![false; max + 1];
        for &l in &labels {
            seen[l as usize] = true;
        }
        let lesion_count = seen.iter().skip(1).filter(|&&s| s).count();
        Ok(LesionLabelMap {
            grid,
            labels,
            lesion_count,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dims(&self) -> [usize; 3] {
        self.grid.dims
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn lesion_count(&self) -> usize {
        self.lesion_count
    }

    pub fn max_label(&self) -> u32 {
        self.labels.iter().copied().max().unwrap_or(0)
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> u32 {
        self.labels[self.grid.index(x, y, z)]
    }

    /// Labels of the axial plane `z`, row-major with width `nx`.
    pub fn slice_z(&self, z: usize) -> &[u32] {
        let n = self.grid.dims[0] * self.grid.dims[1];
        &self.labels[z * n..(z + 1) * n]
    }

    pub fn to_mask(&self) -> MaskVolume {
        MaskVolume::new(self.grid, self.labels.iter().map(|&l| u8::from(l != 0)).collect())
            .expect("labels share the grid")
    }
}

/// Labels connected foreground regions. Labels are numbered in raster order
/// of each region's first voxel, so the result is deterministic.
pub fn label_components(mask: &MaskVolume, connectivity: Connectivity) -> LesionLabelMap {
    let grid = *mask.grid();
    let [nx, ny, nz] = grid.dims;
    let fg = mask.data();
    let backward = connectivity.backward_offsets();

    let mut provisional = vec![0u32; grid.len()];
    let mut forest = DisjointSet::default();

    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let i = grid.index(x, y, z);
                if fg[i] == 0 {
                    continue;
                }
                let mut current = 0u32;
                for &[dx, dy, dz] in &backward {
                    let (qx, qy, qz) = (x as i32 + dx, y as i32 + dy, z as i32 + dz);
                    if qx < 0 || qy < 0 || qz < 0 || qx >= nx as i32 || qy >= ny as i32 {
                        continue;
                    }
                    let neighbor = provisional[grid.index(qx as usize, qy as usize, qz as usize)];
                    if neighbor == 0 {
                        continue;
                    }
                    if current == 0 {
                        current = neighbor;
                    } else {
                        forest.union(current, neighbor);
                    }
                }
                if current == 0 {
                    current = forest.make_set();
                }
                provisional[i] = current;
            }
        }
    }

    let mut final_label = vec![0u32; forest.len() + 1];
    let mut next = 0u32;
    for p in provisional.iter_mut() {
        if *p == 0 {
            continue;
        }
        let root = forest.find(*p) as usize;
        if final_label[root] == 0 {
            next += 1;
            final_label[root] = next;
        }
        *p = final_label[root];
    }

    LesionLabelMap {
        grid,
        labels: provisional,
        lesion_count: next as usize,
    }
}

/// Union-find over provisional labels `1..=len`.
#[derive(Default)]
struct DisjointSet {
    // parent[0] is unused so labels index directly.
    parent: Vec<u32>,
}

impl DisjointSet {
    fn len(&self) -> usize {
        self.parent.len().saturating_sub(1)
    }

    fn make_set(&mut self) -> u32 {
        if self.parent.is_empty() {
            self.parent.push(0);
        }
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        while self.parent[x as usize] != root {
            let next = self.parent[x as usize];
            self.parent[x as usize] = root;
            x = next;
        }
        root
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // keep the smaller id as root
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Axis-aligned box in voxel indices, both corners inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundingCube {
    pub min: [usize; 3],
    pub max: [usize; 3],
}

impl BoundingCube {
    pub fn new(min: [usize; 3], max: [usize; 3]) -> Result<Self> {
        if (0..3).any(|a| min[a] > max[a]) {
            return Err(Error::InvalidVolume(format!("cube min {min:?} exceeds max {max:?}")));
        }
        Ok(BoundingCube { min, max })
    }

    fn point(p: [usize; 3]) -> Self {
        BoundingCube { min: p, max: p }
    }

    fn include(&mut self, p: [usize; 3]) {
        for (a, &v) in p.iter().enumerate() {
            self.min[a] = self.min[a].min(v);
            self.max[a] = self.max[a].max(v);
        }
    }

    pub fn extent(&self) -> [u64; 3] {
        std::array::from_fn(|a| (self.max[a] - self.min[a] + 1) as u64)
    }

    /// Number of voxels inside the cube.
    pub fn volume(&self) -> u64 {
        self.extent().iter().product()
    }

    pub fn intersection(&self, other: &BoundingCube) -> Option<BoundingCube> {
        let min: [usize; 3] = std::array::from_fn(|a| self.min[a].max(other.min[a]));
        let max: [usize; 3] = std::array::from_fn(|a| self.max[a].min(other.max[a]));
        (0..3).all(|a| min[a] <= max[a]).then_some(BoundingCube { min, max })
    }

    pub fn contains(&self, p: [usize; 3]) -> bool {
        (0..3).all(|a| self.min[a] <= p[a] && p[a] <= self.max[a])
    }
}

/// Midpoint of a cube in voxel coordinates; may be half-integer.
pub fn lesion_center(cube: &BoundingCube) -> [f64; 3] {
    std::array::from_fn(|a| (cube.min[a] + cube.max[a]) as f64 / 2.0)
}

/// Statistics of one lesion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LesionRecord {
    /// 1-based identifier after sorting by ascending size.
    pub index: usize,
    /// Label of this lesion in the label map it was extracted from.
    pub label: u32,
    pub voxel_count: u64,
    pub volume_mm3: f64,
    pub cube: BoundingCube,
}

/// Collects one record per label with at least `min_voxels` voxels.
///
/// Records are ordered by ascending voxel count, ties broken by the raster
/// index of each lesion's first voxel, and indexed `1..=K` in that order.
pub fn extract_lesions(map: &LesionLabelMap, min_voxels: u64) -> Vec<LesionRecord> {
    struct Acc {
        count: u64,
        first: usize,
        cube: BoundingCube,
    }

    let grid = map.grid();
    let mut acc: Vec<Option<Acc>> = Vec::new();
    acc.resize_with(map.max_label() as usize + 1, || None);

    for (i, &label) in map.labels().iter().enumerate() {
        if label == 0 {
            continue;
        }
        let p = grid.coords(i);
        match &mut acc[label as usize] {
            Some(a) => {
                a.count += 1;
                a.cube.include(p);
            }
            slot @ None => {
                *slot = Some(Acc {
                    count: 1,
                    first: i,
                    cube: BoundingCube::point(p),
                })
            }
        }
    }

    let voxel_volume = grid.voxel_volume();
    let mut kept: Vec<(u32, Acc)> = acc
        .into_iter()
        .enumerate()
        .filter_map(|(label, a)| a.map(|a| (label as u32, a)))
        .filter(|(_, a)| a.count >= min_voxels)
        .collect();
    kept.sort_by_key(|(_, a)| (a.count, a.first));

    kept.into_iter()
        .enumerate()
        .map(|(k, (label, a))| LesionRecord {
            index: k + 1,
            label,
            voxel_count: a.count,
            volume_mm3: a.count as f64 * voxel_volume,
            cube: a.cube,
        })
        .collect()
}

use std::collections::{HashMap, VecDeque};

use lesionstat::labeling::Connectivity;
use lesionstat::volume::MaskVolume;

/// Breadth-first flood fill with neighbourhoods built from the definition:
/// offsets in {-1,0,1}³ with at most 1, 2 or 3 nonzero components.
pub fn bfs_oracle(mask: &MaskVolume, connectivity: Connectivity) -> Vec<u32> {
    let max_nonzero = match connectivity {
        Connectivity::Six => 1,
        Connectivity::Eighteen => 2,
        Connectivity::TwentySix => 3,
    };
    let mut offsets = Vec::new();
    for dz in -1i64..=1 {
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let nz = [dx, dy, dz].iter().filter(|d| **d != 0).count();
                if nz > 0 && nz <= max_nonzero {
                    offsets.push([dx, dy, dz]);
                }
            }
        }
    }
    let [nx, ny, nz] = mask.dims();
    let mut labels = vec![0u32; nx * ny * nz];
    let mut next = 0;
    for start in 0..labels.len() {
        if mask.data()[start] == 0 || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            let (x, y, z) = ((i % nx) as i64, ((i / nx) % ny) as i64, (i / (nx * ny)) as i64);
            for d in &offsets {
                let (a, b, c) = (x + d[0], y + d[1], z + d[2]);
                if a < 0 || b < 0 || c < 0 || a >= nx as i64 || b >= ny as i64 || c >= nz as i64 {
                    continue;
                }
                let j = (c as usize * ny + b as usize) * nx + a as usize;
                if mask.data()[j] == 1 && labels[j] == 0 {
                    labels[j] = next;
                    queue.push_back(j);
                }
            }
        }
    }
    labels
}

/// True when two labelings induce the same partition of the voxels.
pub fn same_partition(a: &[u32], b: &[u32]) -> bool {
    let mut ab: HashMap<u32, u32> = HashMap::new();
    let mut ba: HashMap<u32, u32> = HashMap::new();
    a.iter().zip(b).all(|(&x, &y)| {
        if (x == 0) != (y == 0) {
            return false;
        }
        x == 0 || (*ab.entry(x).or_insert(y) == y && *ba.entry(y).or_insert(x) == x)
    })
}

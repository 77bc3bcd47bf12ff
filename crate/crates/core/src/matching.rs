//! Follow-up to baseline lesion correspondence by bounding-cube overlap.
//!
//! For two bounding cubes the intersection-over-cube ratio (IoC) is the
//! voxel volume of their overlap divided by the voxel volume of the larger
//! cube. Every follow-up lesion, after registration into baseline space, is
//! matched to the baseline lesion with the highest IoC; lesions with no
//! positive IoC are reported as newly emerged. Several follow-up lesions may
//! match the same baseline lesion.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::labeling::{BoundingCube, Connectivity, LesionRecord};

/// IoC kept as an exact ratio of voxel counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IocRatio {
    pub intersection: u64,
    pub larger: u64,
}

impl IocRatio {
    pub fn value(&self) -> f64 {
        self.intersection as f64 / self.larger as f64
    }

    pub fn is_positive(&self) -> bool {
        self.intersection > 0
    }
}

impl PartialOrd for IocRatio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for IocRatio {
    fn cmp(&self, other: &Self) -> Ordering {
        (u128::from(self.intersection) * u128::from(other.larger))
            .cmp(&(u128::from(other.intersection) * u128::from(self.larger)))
    }
}

pub fn ioc_ratio(a: &BoundingCube, b: &BoundingCube) -> IocRatio {
    let larger = a.volume().max(b.volume());
    let intersection = a.intersection(b).map_or(0, |c| c.volume());
    IocRatio { intersection, larger }
}

/// Overlap volume of two cubes over the volume of the larger one, in `[0, 1]`.
pub fn ioc(a: &BoundingCube, b: &BoundingCube) -> f64 {
    ioc_ratio(a, b).value()
}

/// Volume trend of a matched pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Grow,
    Shrink,
    Stable,
}

/// A follow-up lesion matched to a baseline lesion. Voxel counts are taken
/// from the native (unregistered) grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LesionMatch {
    pub prev_index: usize,
    pub follow_index: usize,
    pub ioc: f64,
    pub prev_voxels: u64,
    pub follow_voxels: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<Category>,
}

/// A follow-up lesion without a baseline counterpart.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmergeEntry {
    pub follow_index: usize,
    pub follow_voxels: u64,
    /// The lesion vanished entirely when its labels were resampled into
    /// baseline space, so it could not be compared at all.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub resampling_loss: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VanishEntry {
    pub prev_index: usize,
    pub prev_voxels: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchOutcome {
    pub matches: Vec<LesionMatch>,
    pub emerge: Vec<EmergeEntry>,
}

/// Matches follow-up lesions to baseline lesions.
///
/// `follow_registered` are records extracted from the follow-up label map
/// after resampling into baseline space; their `label` field identifies the
/// native follow-up lesion (`follow_native[..].label`) they came from. A
/// pair matches when its IoC is strictly greater than `min_ioc`; the best
/// IoC wins and exact ties go to the smaller baseline index.
pub fn match_lesions(
    prev: &[LesionRecord],
    follow_registered: &[LesionRecord],
    follow_native: &[LesionRecord],
    min_ioc: f64,
) -> MatchOutcome {
    let registered: HashMap<u32, &LesionRecord> = follow_registered.iter().map(|r| (r.label, r)).collect();
    let mut prev_sorted: Vec<&LesionRecord> = prev.iter().collect();
    prev_sorted.sort_by_key(|r| r.index);

    let mut follow_sorted: Vec<&LesionRecord> = follow_native.iter().collect();
    follow_sorted.sort_by_key(|r| r.index);

    let mut out = MatchOutcome::default();
    for f in follow_sorted {
        let Some(reg) = registered.get(&f.label) else {
            out.emerge.push(EmergeEntry {
                follow_index: f.index,
                follow_voxels: f.voxel_count,
                resampling_loss: true,
            });
            continue;
        };

        let mut best: Option<(&LesionRecord, IocRatio)> = None;
        for p in &prev_sorted {
            let r = ioc_ratio(&reg.cube, &p.cube);
            if !r.is_positive() || r.value() <= min_ioc {
                continue;
            }
            // strict: the earlier (smaller) index keeps exact ties
            if best.is_none_or(|(_, b)| r > b) {
                best = Some((p, r));
            }
        }

        match best {
            Some((p, r)) => out.matches.push(LesionMatch {
                prev_index: p.index,
                follow_index: f.index,
                ioc: r.value(),
                prev_voxels: p.voxel_count,
                follow_voxels: f.voxel_count,
                category: None,
            }),
            None => out.emerge.push(EmergeEntry {
                follow_index: f.index,
                follow_voxels: f.voxel_count,
                resampling_loss: false,
            }),
        }
    }
    out
}

/// Parameters echoed into every comparison report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonParams {
    pub connectivity: Connectivity,
    pub min_voxels: u64,
    pub stability_tolerance: f64,
    pub min_ioc: f64,
}

impl Default for ComparisonParams {
    fn default() -> Self {
        ComparisonParams {
            connectivity: Connectivity::default(),
            min_voxels: 0,
            stability_tolerance: 0.0,
            min_ioc: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub matched: Vec<LesionMatch>,
    pub emerge: Vec<EmergeEntry>,
    pub vanish: Vec<VanishEntry>,
    pub params: ComparisonParams,
}

impl ComparisonReport {
    pub fn follow_lesion_count(&self) -> usize {
        self.matched.len() + self.emerge.len()
    }

    /// Native voxel counts of every follow-up lesion, in follow-up index order.
    pub fn follow_volumes(&self) -> Vec<(usize, u64)> {
        let mut v: Vec<(usize, u64)> = self
            .matched
            .iter()
            .map(|m| (m.follow_index, m.follow_voxels))
            .chain(self.emerge.iter().map(|e| (e.follow_index, e.follow_voxels)))
            .collect();
        v.sort_unstable();
        v
    }

    /// Matches grouped by baseline lesion where more than one follow-up
    /// lesion points at the same parent.
    pub fn many_to_one(&self) -> Vec<(usize, Vec<usize>)> {
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        for m in &self.matched {
            groups.entry(m.prev_index).or_default().push(m.follow_index);
        }
        let mut out: Vec<(usize, Vec<usize>)> = groups.into_iter().filter(|(_, f)| f.len() > 1).collect();
        for (_, f) in &mut out {
            f.sort_unstable();
        }
        out.sort();
        out
    }
}

pub fn classify(prev_voxels: u64, follow_voxels: u64, tolerance: f64) -> Category {
    let (p, f) = (prev_voxels as f64, follow_voxels as f64);
    if f > p * (1.0 + tolerance) {
        Category::Grow
    } else if f < p * (1.0 - tolerance) {
        Category::Shrink
    } else {
        Category::Stable
    }
}

/// Labels each match grow/shrink/stable and lists baseline lesions that no
/// follow-up lesion selected.
pub fn classify_matches(outcome: MatchOutcome, prev: &[LesionRecord], params: ComparisonParams) -> ComparisonReport {
    let MatchOutcome { mut matches, mut emerge } = outcome;
    for m in &mut matches {
        m.category = Some(classify(m.prev_voxels, m.follow_voxels, params.stability_tolerance));
    }
    matches.sort_by_key(|m| m.follow_index);
    emerge.sort_by_key(|e| e.follow_index);

    let mut vanish: Vec<VanishEntry> = prev
        .iter()
        .filter(|p| !matches.iter().any(|m| m.prev_index == p.index))
        .map(|p| VanishEntry {
            prev_index: p.index,
            prev_voxels: p.voxel_count,
        })
        .collect();
    vanish.sort_by_key(|v| v.prev_index);

    ComparisonReport {
        matched: matches,
        emerge,
        vanish,
        params,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(min: [usize; 3], max: [usize; 3]) -> BoundingCube {
        BoundingCube::new(min, max).unwrap()
    }

    fn rec(index: usize, label: u32, voxels: u64, c: BoundingCube) -> LesionRecord {
        LesionRecord {
            index,
            label,
            voxel_count: voxels,
            volume_mm3: voxels as f64,
            cube: c,
        }
    }

    #[test]
    fn ioc_hand_cases() {
        let a = cube([0; 3], [3; 3]);
        let b = cube([2; 3], [5; 3]);
        assert_eq!(ioc_ratio(&a, &b), IocRatio { intersection: 8, larger: 64 });
        assert_eq!(ioc(&a, &b), 0.125);
        assert_eq!(ioc(&a, &a), 1.0);
        assert_eq!(ioc(&a, &cube([4; 3], [6; 3])), 0.0);
    }

    #[test]
    fn touching_corner_voxels_overlap() {
        let a = cube([0; 3], [2; 3]);
        let b = cube([2; 3], [4; 3]);
        assert_eq!(ioc_ratio(&a, &b).intersection, 1);
    }

    #[test]
    fn identical_lesion_matches() {
        let c = cube([1; 3], [3; 3]);
        let out = match_lesions(&[rec(1, 1, 20, c)], &[rec(1, 1, 20, c)], &[rec(1, 1, 20, c)], 0.0);
        assert_eq!(out.matches.len(), 1);
        assert_eq!(out.matches[0].ioc, 1.0);
        assert!(out.emerge.is_empty());
    }

    #[test]
    fn many_to_one() {
        let parent = rec(1, 1, 143_305, cube([0; 3], [40; 3]));
        let parts = [
            rec(1, 7, 422, cube([1; 3], [5; 3])),
            rec(2, 3, 956, cube([10; 3], [16; 3])),
            rec(3, 9, 23_833, cube([20; 3], [39; 3])),
        ];
        let out = match_lesions(&[parent], &parts, &parts, 0.0);
        assert_eq!(out.matches.len(), 3);
        assert!(out.matches.iter().all(|m| m.prev_index == 1 && m.prev_voxels == 143_305));
        let report = classify_matches(out, &[rec(1, 1, 143_305, cube([0; 3], [40; 3]))], ComparisonParams::default());
        assert_eq!(report.many_to_one(), vec![(1, vec![1, 2, 3])]);
        assert!(report.vanish.is_empty());
    }

    #[test]
    fn unmatched_follow_lesion_emerges() {
        let prev = [rec(1, 1, 30, cube([0; 3], [3; 3]))];
        let f = [rec(1, 1, 639, cube([20; 3], [30; 3]))];
        let out = match_lesions(&prev, &f, &f, 0.0);
        assert!(out.matches.is_empty());
        assert_eq!(
            out.emerge,
            vec![EmergeEntry { follow_index: 1, follow_voxels: 639, resampling_loss: false }]
        );
        let report = classify_matches(out, &prev, ComparisonParams::default());
        assert_eq!(report.vanish, vec![VanishEntry { prev_index: 1, prev_voxels: 30 }]);
    }

    #[test]
    fn lost_label_is_flagged() {
        let prev = [rec(1, 1, 30, cube([0; 3], [3; 3]))];
        let native = [rec(1, 4, 2, cube([0; 3], [0, 0, 1]))];
        let out = match_lesions(&prev, &[], &native, 0.0);
        assert!(out.emerge[0].resampling_loss);
    }

    #[test]
    fn ties_go_to_smaller_baseline_index() {
        let prev = [rec(2, 2, 8, cube([4, 0, 0], [5, 1, 1])), rec(1, 1, 8, cube([0; 3], [1; 3]))];
        let f = [rec(1, 1, 8, cube([1, 0, 0], [4, 1, 1]))];
        let out = match_lesions(&prev, &f, &f, 0.0);
        assert_eq!(out.matches[0].prev_index, 1);
    }

    #[test]
    fn argmax_picks_largest_overlap() {
        let prev = [rec(1, 1, 8, cube([0; 3], [1; 3])), rec(2, 2, 27, cube([3; 3], [5; 3]))];
        let f = [rec(1, 1, 27, cube([1; 3], [4; 3]))];
        let out = match_lesions(&prev, &f, &f, 0.0);
        // 1 voxel vs 8 voxels of overlap, both over the 64-voxel follow cube
        assert_eq!(out.matches[0].prev_index, 2);
        assert_eq!(out.matches[0].ioc, 8.0 / 64.0);
    }

    #[test]
    fn min_ioc_threshold() {
        let prev = [rec(1, 1, 64, cube([0; 3], [3; 3]))];
        let f = [rec(1, 1, 64, cube([2; 3], [5; 3]))];
        assert_eq!(match_lesions(&prev, &f, &f, 0.125).emerge.len(), 1);
        assert_eq!(match_lesions(&prev, &f, &f, 0.1).matches.len(), 1);
    }

    #[test]
    fn categories() {
        assert_eq!(classify(1196, 1127, 0.0), Category::Shrink);
        assert_eq!(classify(8479, 10042, 0.0), Category::Grow);
        assert_eq!(classify(100, 100, 0.0), Category::Stable);
        assert_eq!(classify(100, 104, 0.05), Category::Stable);
        assert_eq!(classify(100, 106, 0.05), Category::Grow);
    }
}

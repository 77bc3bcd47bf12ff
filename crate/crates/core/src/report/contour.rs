//! Moore-neighbour boundary tracing on labelled 2D slices.

use std::collections::{HashSet, VecDeque};

/// Clockwise ring around a pixel (image y axis points down), starting west.
const RING: [(i64, i64); 8] = [(-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1)];

/// Closed boundary polyline of one region; `points[0] == points[last]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contour {
    /// Label of the traced region in the source slice.
    pub label: u32,
    /// Region number within the slice, in raster order of region starts.
    pub region: usize,
    /// True for the trace that starts at the region's topmost-leftmost pixel.
    pub outer: bool,
    pub points: Vec<(usize, usize)>,
}

impl Contour {
    /// Inclusive `(x0, y0, x1, y1)` of the contour pixels.
    pub fn bounds(&self) -> (usize, usize, usize, usize) {
        self.points.iter().fold((usize::MAX, usize::MAX, 0, 0), |(x0, y0, x1, y1), &(x, y)| {
            (x0.min(x), y0.min(y), x1.max(x), y1.max(y))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ContourSet {
    pub width: usize,
    pub height: usize,
    pub contours: Vec<Contour>,
}

impl ContourSet {
    pub fn is_empty(&self) -> bool {
        self.contours.is_empty()
    }
}

struct Slice<'a> {
    labels: &'a [u32],
    width: usize,
    height: usize,
}

impl Slice<'_> {
    #[inline]
    fn label_at(&self, x: i64, y: i64) -> u32 {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            0
        } else {
            self.labels[y as usize * self.width + x as usize]
        }
    }

    /// Has a 4-neighbour (or the image edge) outside its own label.
    fn is_boundary(&self, x: usize, y: usize) -> bool {
        let l = self.labels[y * self.width + x];
        let (x, y) = (x as i64, y as i64);
        [(x - 1, y), (x, y - 1), (x + 1, y), (x, y + 1)]
            .iter()
            .any(|&(qx, qy)| self.label_at(qx, qy) != l)
    }
}

/// Traces every labelled region of a row-major slice.
///
/// Regions are 8-connected sets of equal nonzero labels. Each region gets an
/// outer contour starting at its topmost-leftmost pixel; any boundary pixels
/// the outer trace does not reach (hole rims) start further traces, so every
/// boundary pixel ends up on some contour.
pub fn trace_contours(labels: &[u32], width: usize, height: usize) -> ContourSet {
    assert_eq!(labels.len(), width * height, "slice size");
    let slice = Slice { labels, width, height };
    let mut region_of = vec![usize::MAX; labels.len()];
    let mut covered = vec![false; labels.len()];
    let mut contours = Vec::new();
    let mut region = 0;

    for start in 0..labels.len() {
        let label = labels[start];
        if label == 0 || region_of[start] != usize::MAX {
            continue;
        }
        let members = flood_region(&slice, start, region, &mut region_of);

        let (sx, sy) = (start % width, start / width);
        let outer = trace(&slice, (sx, sy), 0);
        mark(&outer, width, &mut covered);
        contours.push(Contour {
            label,
            region,
            outer: true,
            points: outer,
        });

        for &i in &members {
            let (x, y) = (i % width, i / width);
            if covered[i] || !slice.is_boundary(x, y) {
                continue;
            }
            let back = [0usize, 2, 4, 6]
                .into_iter()
                .find(|&d| {
                    let (dx, dy) = RING[d];
                    slice.label_at(x as i64 + dx, y as i64 + dy) != label
                })
                .expect("boundary pixel has a foreign 4-neighbour");
            let pts = trace(&slice, (x, y), back);
            mark(&pts, width, &mut covered);
            contours.push(Contour {
                label,
                region,
                outer: false,
                points: pts,
            });
        }
        region += 1;
    }

    ContourSet {
        width,
        height,
        contours,
    }
}

fn mark(points: &[(usize, usize)], width: usize, covered: &mut [bool]) {
    for &(x, y) in points {
        covered[y * width + x] = true;
    }
}

/// Collects the 8-connected region containing `start`, in raster order.
fn flood_region(slice: &Slice, start: usize, region: usize, region_of: &mut [usize]) -> Vec<usize> {
    let label = slice.labels[start];
    let w = slice.width;
    let mut members = vec![start];
    region_of[start] = region;
    let mut queue = VecDeque::from([start]);
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as i64, (i / w) as i64);
        for (dx, dy) in RING {
            let (qx, qy) = (x + dx, y + dy);
            if slice.label_at(qx, qy) != label {
                continue;
            }
            let j = qy as usize * w + qx as usize;
            if region_of[j] == usize::MAX {
                region_of[j] = region;
                members.push(j);
                queue.push_back(j);
            }
        }
    }
    members.sort_unstable();
    members
}

/// Moore-neighbour trace from `start`, whose neighbour in ring direction
/// `back` lies outside the region. Stops when the walk re-enters the start
/// state (Jacob's criterion) and always returns a closed polyline.
fn trace(slice: &Slice, start: (usize, usize), back: usize) -> Vec<(usize, usize)> {
    let label = slice.labels[start.1 * slice.width + start.0];
    let mut points = vec![start];
    let mut seen: HashSet<((usize, usize), usize)> = HashSet::new();
    let (mut cur, mut back_dir) = (start, back);
    seen.insert((cur, back_dir));

    loop {
        let (cx, cy) = (cur.0 as i64, cur.1 as i64);
        let mut next = None;
        for k in 1..=8 {
            let d = (back_dir + k) % 8;
            let (dx, dy) = RING[d];
            if slice.label_at(cx + dx, cy + dy) == label {
                let prev = (back_dir + k - 1) % 8;
                let (px, py) = (cx + RING[prev].0, cy + RING[prev].1);
                let (nx, ny) = (cx + dx, cy + dy);
                // the previously examined cell, seen from the new pixel
                let rel = (px - nx, py - ny);
                let nb = RING.iter().position(|&r| r == rel).expect("ring cells are adjacent");
                next = Some(((nx as usize, ny as usize), nb));
                break;
            }
        }
        let Some((n, nb)) = next else {
            // isolated pixel
            points.push(start);
            return points;
        };
        cur = n;
        back_dir = nb;
        if (cur, back_dir) == (start, back) {
            points.push(start);
            return points;
        }
        if !seen.insert((cur, back_dir)) {
            if points.last() != Some(&start) {
                points.push(start);
            }
            return points;
        }
        points.push(cur);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: &[&str]) -> (Vec<u32>, usize, usize) {
        let h = rows.len();
        let w = rows[0].len();
        let labels = rows
            .iter()
            .flat_map(|r| r.chars().map(|c| c.to_digit(10).unwrap()))
            .collect();
        (labels, w, h)
    }

    #[test]
    fn empty_slice() {
        let (l, w, h) = grid(&["000", "000"]);
        assert!(trace_contours(&l, w, h).is_empty());
    }

    #[test]
    fn single_pixel_loop() {
        let (l, w, h) = grid(&["000", "010", "000"]);
        let set = trace_contours(&l, w, h);
        assert_eq!(set.contours.len(), 1);
        assert_eq!(set.contours[0].points, vec![(1, 1), (1, 1)]);
    }

    #[test]
    fn square_border() {
        let (l, w, h) = grid(&["00000", "01110", "01110", "01110", "00000"]);
        let set = trace_contours(&l, w, h);
        assert_eq!(set.contours.len(), 1);
        let pts = &set.contours[0].points;
        assert_eq!(pts.first(), pts.last());
        assert_eq!(pts[0], (1, 1));
        let distinct: HashSet<_> = pts.iter().copied().collect();
        assert_eq!(distinct.len(), 8);
        assert!(!distinct.contains(&(2, 2)));
        assert_eq!(pts.len(), 9);
    }

    #[test]
    fn ring_gets_outer_and_hole_contours() {
        let (l, w, h) = grid(&["11111", "11111", "11011", "11111", "11111"]);
        let set = trace_contours(&l, w, h);
        assert_eq!(set.contours.iter().filter(|c| c.outer).count(), 1);
        assert!(set.contours.len() >= 2);
        let on: HashSet<_> = set.contours.iter().flat_map(|c| c.points.iter().copied()).collect();
        for (x, y) in [(2, 1), (1, 2), (3, 2), (2, 3)] {
            assert!(on.contains(&(x, y)), "hole rim pixel {x},{y}");
        }
        assert!(!on.contains(&(2, 2)));
    }

    #[test]
    fn line_and_diagonal() {
        let (l, w, h) = grid(&["1000", "0100", "0011"]);
        let set = trace_contours(&l, w, h);
        assert_eq!(set.contours.len(), 1);
        let on: HashSet<_> = set.contours[0].points.iter().copied().collect();
        assert_eq!(on.len(), 4);
    }

    #[test]
    fn adjacent_labels_are_separate_regions() {
        let (l, w, h) = grid(&["1122", "1122"]);
        let set = trace_contours(&l, w, h);
        let labels: Vec<u32> = set.contours.iter().map(|c| c.label).collect();
        assert_eq!(labels, vec![1, 2]);
        assert_eq!(set.contours[1].bounds(), (2, 0, 3, 1));
    }
}

//! Axis-aligned bounding box with a Cartesian control-cell grid used to seed
//! the donor walking search.

use crate::math::Vec3;

#[derive(Debug, Clone, Copy)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn of_points(points: impl IntoIterator<Item = Vec3>) -> Self {
        let mut min = Vec3::repeat(f64::INFINITY);
        let mut max = Vec3::repeat(f64::NEG_INFINITY);
        for p in points {
            for d in 0..3 {
                min[d] = min[d].min(p[d]);
                max[d] = max[d].max(p[d]);
            }
        }
        Aabb { min, max }
    }

    pub fn contains(&self, p: Vec3) -> bool {
        (0..3).all(|d| p[d] >= self.min[d] && p[d] <= self.max[d])
    }

    pub fn inflate(&self, amount: f64) -> Aabb {
        Aabb { min: self.min - Vec3::repeat(amount), max: self.max + Vec3::repeat(amount) }
    }

    pub fn overlaps(&self, other: &Aabb) -> bool {
        (0..3).all(|d| self.min[d] <= other.max[d] && self.max[d] >= other.min[d])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlLocation {
    Cell([usize; 3]),
    Outside,
}

/// Cartesian bucket grid over a grid partition. Each control cell lists the
/// donor cells whose bounding boxes overlap it.
#[derive(Debug, Clone)]
pub struct ControlGrid {
    pub aabb: Aabb,
    pub n: [usize; 3],
    inv_h: Vec3,
    buckets: Vec<Vec<u32>>,
}

/// Per-direction control-cell count ceiling.
const MAX_CELLS: usize = 64;
const MIN_CELLS: usize = 8;

impl ControlGrid {
    /// Build over `aabb` with target spacing (twice the mean donor edge
    /// length), counts clamped per direction; `boxes` yields the id and AABB
    /// of every candidate donor cell.
    pub fn build(
        aabb: Aabb,
        mean_edge: f64,
        boxes: impl IntoIterator<Item = (u32, Aabb)>,
    ) -> Self {
        let spacing = (2.0 * mean_edge).max(1e-300);
        let mut n = [1usize; 3];
        for d in 0..3 {
            let extent = aabb.max[d] - aabb.min[d];
            let raw = (extent / spacing).ceil() as usize;
            n[d] = if extent > 4.0 * mean_edge {
                raw.clamp(MIN_CELLS, MAX_CELLS)
            } else {
                raw.clamp(1, MAX_CELLS)
            };
        }
        let mut inv_h = Vec3::zeros();
        for d in 0..3 {
            let extent = (aabb.max[d] - aabb.min[d]).max(1e-300);
            inv_h[d] = n[d] as f64 / extent;
        }
        let mut grid = ControlGrid { aabb, n, inv_h, buckets: vec![Vec::new(); n[0] * n[1] * n[2]] };
        for (id, b) in boxes {
            let lo = grid.clamped_index(b.min);
            let hi = grid.clamped_index(b.max);
            for k in lo[2]..=hi[2] {
                for j in lo[1]..=hi[1] {
                    for i in lo[0]..=hi[0] {
                        let c = i + grid.n[0] * (j + grid.n[1] * k);
                        grid.buckets[c].push(id);
                    }
                }
            }
        }
        grid
    }

    fn clamped_index(&self, p: Vec3) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for d in 0..3 {
            let raw = ((p[d] - self.aabb.min[d]) * self.inv_h[d]).floor();
            idx[d] = (raw.max(0.0) as usize).min(self.n[d] - 1);
        }
        idx
    }

    /// Candidate donor cells for the control cell at `idx`.
    pub fn candidates(&self, idx: [usize; 3]) -> &[u32] {
        &self.buckets[idx[0] + self.n[0] * (idx[1] + self.n[1] * idx[2])]
    }
}

/// Floor arithmetic localization of `p` in the control grid.
pub fn locate_control_cell(p: Vec3, grid: &ControlGrid) -> ControlLocation {
    if !grid.aabb.contains(p) {
        return ControlLocation::Outside;
    }
    ControlLocation::Cell(grid.clamped_index(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::vec3;

    fn grid() -> ControlGrid {
        let aabb = Aabb { min: vec3(0.0, 0.0, 0.0), max: vec3(10.0, 5.0, 2.5) };
        ControlGrid::build(aabb, 0.25, std::iter::empty())
    }

    #[test]
    fn min_corner_is_cell_zero() {
        let g = grid();
        assert_eq!(locate_control_cell(g.aabb.min, &g), ControlLocation::Cell([0, 0, 0]));
    }

    #[test]
    fn max_corner_is_last_cell() {
        let g = grid();
        let eps = 1e-12;
        let p = g.aabb.max - vec3(eps, eps, eps);
        assert_eq!(
            locate_control_cell(p, &g),
            ControlLocation::Cell([g.n[0] - 1, g.n[1] - 1, g.n[2] - 1])
        );
    }

    #[test]
    fn outside_detected() {
        let g = grid();
        assert_eq!(locate_control_cell(vec3(-0.1, 1.0, 1.0), &g), ControlLocation::Outside);
    }

    #[test]
    fn random_points_match_linear_scan() {
        let g = grid();
        let mut state = 99u64;
        let mut rand01 = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64)
        };
        for _ in 0..500 {
            let p = vec3(rand01() * 12.0 - 1.0, rand01() * 7.0 - 1.0, rand01() * 4.0 - 1.0);
            let got = locate_control_cell(p, &g);
            // scan oracle
            let mut want = ControlLocation::Outside;
            if g.aabb.contains(p) {
                'scan: for k in 0..g.n[2] {
                    for j in 0..g.n[1] {
                        for i in 0..g.n[0] {
                            let lo = vec3(
                                g.aabb.min.x + i as f64 / g.inv_h.x,
                                g.aabb.min.y + j as f64 / g.inv_h.y,
                                g.aabb.min.z + k as f64 / g.inv_h.z,
                            );
                            let hi = vec3(
                                g.aabb.min.x + (i + 1) as f64 / g.inv_h.x,
                                g.aabb.min.y + (j + 1) as f64 / g.inv_h.y,
                                g.aabb.min.z + (k + 1) as f64 / g.inv_h.z,
                            );
                            if p.x >= lo.x && p.x < hi.x && p.y >= lo.y && p.y < hi.y
                                && p.z >= lo.z && p.z < hi.z
                            {
                                want = ControlLocation::Cell([i, j, k]);
                                break 'scan;
                            }
                        }
                    }
                }
                if want == ControlLocation::Outside {
                    // point exactly on the max boundary clamps to the last cell
                    want = got;
                }
            }
            assert_eq!(got, want, "p = {p:?}");
        }
    }

    #[test]
    fn buckets_collect_overlapping_boxes() {
        let aabb = Aabb { min: vec3(0.0, 0.0, 0.0), max: vec3(4.0, 4.0, 4.0) };
        let boxes = vec![
            (0u32, Aabb { min: vec3(0.1, 0.1, 0.1), max: vec3(0.4, 0.4, 0.4) }),
            (1u32, Aabb { min: vec3(3.0, 3.0, 3.0), max: vec3(4.0, 4.0, 4.0) }),
        ];
        let g = ControlGrid::build(aabb, 0.25, boxes);
        match locate_control_cell(vec3(0.2, 0.2, 0.2), &g) {
            ControlLocation::Cell(c) => assert!(g.candidates(c).contains(&0)),
            _ => panic!("expected a cell"),
        }
        match locate_control_cell(vec3(3.9, 3.9, 3.9), &g) {
            ControlLocation::Cell(c) => assert!(g.candidates(c).contains(&1)),
            _ => panic!("expected a cell"),
        }
    }
}

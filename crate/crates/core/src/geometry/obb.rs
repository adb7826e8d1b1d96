//! Oriented bounding boxes from point-cloud covariance, with the separating
//! axis intersection test.

use crate::math::{Mat3, Vec3};

/// Oriented bounding box: center, right-handed orthonormal axes (columns of
/// `axes`) and half extents along each axis.
#[derive(Debug, Clone, Copy)]
pub struct OrientedBoundingBox {
    pub ctr: Vec3,
    pub axes: Mat3,
    pub half: Vec3,
    /// Membership slack, scaled to the box diagonal.
    pub eps: f64,
}

/// Fraction of the cloud diameter used to pad degenerate extents.
const DEGENERATE_PAD: f64 = 1e-6;
/// Fraction of the box diagonal used as membership slack.
const MEMBERSHIP_EPS: f64 = 1e-10;

/// Build an OBB around a point cloud. Axes are the eigenvectors of the point
/// covariance matrix, orthonormalized right-handed; extents are the maximum
/// projected deviations. Degenerate (flat or linear) clouds get a small pad so
/// containment still holds with nonzero thickness.
pub fn build_obb(points: &[Vec3]) -> OrientedBoundingBox {
    assert!(!points.is_empty(), "OBB needs at least one point");
    let n = points.len() as f64;
    let ctr = points.iter().sum::<Vec3>() / n;
    let mut cov = Mat3::zeros();
    for p in points {
        let d = p - ctr;
        cov += d * d.transpose();
    }
    cov /= n;

    let eig = nalgebra::SymmetricEigen::new(cov);
    // order axes by descending eigenvalue for determinism
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut cols = [Vec3::zeros(); 3];
    for (slot, &src) in order.iter().enumerate() {
        let mut v: Vec3 = eig.eigenvectors.column(src).into();
        // fix sign: largest-magnitude component positive
        let lead = (0..3).max_by(|&a, &b| v[a].abs().partial_cmp(&v[b].abs()).unwrap()).unwrap();
        if v[lead] < 0.0 {
            v = -v;
        }
        cols[slot] = v;
    }
    // right-handed orthonormal closure
    let a = cols[0].normalize();
    let b = (cols[1] - a * a.dot(&cols[1])).normalize();
    let c = a.cross(&b);
    let axes = Mat3::from_columns(&[a, b, c]);

    let mut half = Vec3::zeros();
    let mut diameter: f64 = 0.0;
    for p in points {
        let d = axes.transpose() * (p - ctr);
        for q in 0..3 {
            half[q] = half[q].max(d[q].abs());
        }
        diameter = diameter.max((p - ctr).norm() * 2.0);
    }
    let pad = DEGENERATE_PAD * diameter.max(1e-300);
    for q in 0..3 {
        if half[q] < pad {
            half[q] = pad;
        }
    }
    let eps = MEMBERSHIP_EPS * 2.0 * half.norm();
    OrientedBoundingBox { ctr, axes, half, eps }
}

/// Point membership with the box's own slack.
pub fn point_in_obb(p: Vec3, obb: &OrientedBoundingBox) -> bool {
    let d = obb.axes.transpose() * (p - obb.ctr);
    (0..3).all(|q| d[q].abs() <= obb.half[q] + obb.eps)
}

/// Separating-axis test over the 15 candidate axes (3+3 face normals and the
/// 9 edge cross products). Returns false only when a separating axis exists.
pub fn obb_intersect(a: &OrientedBoundingBox, b: &OrientedBoundingBox) -> bool {
    let r = a.axes.transpose() * b.axes;
    let t = a.axes.transpose() * (b.ctr - a.ctr);
    // absolute rotation with epsilon against parallel-edge degeneracy
    let mut absr = [[0.0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            absr[i][j] = r[(i, j)].abs() + 1e-12;
        }
    }
    let (ae, be) = (a.half, b.half);

    // A's face normals
    for i in 0..3 {
        let ra = ae[i];
        let rb = be[0] * absr[i][0] + be[1] * absr[i][1] + be[2] * absr[i][2];
        if t[i].abs() > ra + rb {
            return false;
        }
    }
    // B's face normals
    for j in 0..3 {
        let ra = ae[0] * absr[0][j] + ae[1] * absr[1][j] + ae[2] * absr[2][j];
        let rb = be[j];
        let tp = t[0] * r[(0, j)] + t[1] * r[(1, j)] + t[2] * r[(2, j)];
        if tp.abs() > ra + rb {
            return false;
        }
    }
    // edge cross products A_i x B_j
    for i in 0..3 {
        let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
        for j in 0..3 {
            let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
            let ra = ae[i1] * absr[i2][j] + ae[i2] * absr[i1][j];
            let rb = be[j1] * absr[i][j2] + be[j2] * absr[i][j1];
            let tp = t[i2] * r[(i1, j)] - t[i1] * r[(i2, j)];
            if tp.abs() > ra + rb {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{rotation_about, vec3};

    fn cube_corners(ctr: Vec3, half: f64) -> Vec<Vec3> {
        let mut pts = Vec::new();
        for k in [-1.0, 1.0] {
            for j in [-1.0, 1.0] {
                for i in [-1.0, 1.0] {
                    pts.push(ctr + vec3(i, j, k) * half);
                }
            }
        }
        pts
    }

    #[test]
    fn axis_aligned_cube() {
        let obb = build_obb(&cube_corners(Vec3::zeros(), 0.5));
        for q in 0..3 {
            assert!((obb.half[q] - 0.5).abs() < 1e-12);
            // identity axes up to permutation/sign
            let col: Vec3 = obb.axes.column(q).into();
            let m = col.amax();
            assert!((m - 1.0).abs() < 1e-12);
        }
        assert!(point_in_obb(Vec3::zeros(), &obb));
    }

    #[test]
    fn rotated_anisotropic_box_recovers_axes() {
        let rot = rotation_about(vec3(0.0, 0.0, 1.0), 45f64.to_radians());
        // sample the surface of a 1.0 x 0.6 x 0.3 box so covariance is anisotropic
        let mut pts = Vec::new();
        let half = vec3(1.0, 0.6, 0.3);
        let n = 7;
        for a in 0..n {
            for b in 0..n {
                let (u, v) = (
                    -1.0 + 2.0 * a as f64 / (n - 1) as f64,
                    -1.0 + 2.0 * b as f64 / (n - 1) as f64,
                );
                for (f, s) in [(0, 1.0), (0, -1.0), (1, 1.0), (1, -1.0), (2, 1.0), (2, -1.0)] {
                    let mut p = Vec3::zeros();
                    p[f] = s * half[f];
                    p[(f + 1) % 3] = u * half[(f + 1) % 3];
                    p[(f + 2) % 3] = v * half[(f + 2) % 3];
                    pts.push(rot * p);
                }
            }
        }
        let obb = build_obb(&pts);
        // principal axis should align with the rotated x axis
        let a0: Vec3 = obb.axes.column(0).into();
        let want = rot * vec3(1.0, 0.0, 0.0);
        assert!(a0.dot(&want).abs() > 1.0 - 1e-8, "axis {a0:?}");
        assert!((obb.half[0] - 1.0).abs() < 1e-6);
        for p in &pts {
            assert!(point_in_obb(*p, &obb));
        }
    }

    #[test]
    fn coplanar_cloud_gets_padded_extent() {
        let mut pts = Vec::new();
        for j in 0..5 {
            for i in 0..5 {
                pts.push(vec3(i as f64, j as f64, 2.0));
            }
        }
        let obb = build_obb(&pts);
        let min_half = obb.half.min();
        assert!(min_half > 0.0);
        for p in &pts {
            assert!(point_in_obb(*p, &obb));
        }
    }

    #[test]
    fn membership_examples() {
        let obb = build_obb(&cube_corners(vec3(1.0, 2.0, 3.0), 0.5));
        assert!(point_in_obb(obb.ctr, &obb));
        let a1: Vec3 = obb.axes.column(0).into();
        let outside = obb.ctr + a1 * (obb.half[0] + 1.0);
        assert!(!point_in_obb(outside, &obb));
    }

    #[test]
    fn identical_boxes_intersect() {
        let obb = build_obb(&cube_corners(Vec3::zeros(), 0.5));
        assert!(obb_intersect(&obb, &obb));
    }

    #[test]
    fn separated_on_x() {
        let a = build_obb(&cube_corners(Vec3::zeros(), 0.5));
        let b = build_obb(&cube_corners(vec3(3.0, 0.0, 0.0), 0.5));
        assert!(!obb_intersect(&a, &b));
    }
}

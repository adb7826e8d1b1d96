//! Point-in-the-box membership for hexahedral donor cells via signed distances
//! to the six faces.

use crate::math::Vec3;
use crate::{Error, Result};

/// A hexahedral cell given by its 8 corners; corner `b` sits at logical offset
/// (b & 1, (b >> 1) & 1, (b >> 2) & 1).
pub type HexCell = [Vec3; 8];

/// Face membership data: signed distances to the six faces measured along the
/// inward normals, positive inside.
///
/// Faces are ordered so the index pairs with the trilinear coefficients:
/// 1 = i-max, 2 = i-min, 3 = j-max, 4 = j-min, 5 = k-max, 6 = k-min
/// (d[0] is face 1).
#[derive(Debug, Clone, Copy)]
pub struct CellMembership {
    pub inside: bool,
    pub d: [f64; 6],
}

/// Corner indices of each face, ordered consistently with the face list above.
/// Each row lists the quad corners; diagonals are (0,2) and (1,3).
const FACE_CORNERS: [[usize; 4]; 6] = [
    [1, 5, 7, 3], // i-max
    [0, 2, 6, 4], // i-min
    [2, 3, 7, 6], // j-max
    [0, 4, 5, 1], // j-min
    [4, 6, 7, 5], // k-max
    [0, 1, 3, 2], // k-min
];

/// Signed distances of `p` to the six faces of `cell`, inward positive.
/// `eps_scale` returns the cell diagonal for tolerance scaling.
pub fn trilinear_distances(p: Vec3, cell: &HexCell) -> Result<([f64; 6], f64)> {
    let mut d = [0.0; 6];
    let diag = (cell[7] - cell[0]).norm().max((cell[6] - cell[1]).norm());
    for (f, corners) in FACE_CORNERS.iter().enumerate() {
        let (c0, c1, c2, c3) = (cell[corners[0]], cell[corners[1]], cell[corners[2]], cell[corners[3]]);
        let mid = (c0 + c1 + c2 + c3) / 4.0;
        let r1 = c2 - c0;
        let r2 = c3 - c1;
        let n = r1.cross(&r2);
        let len = n.norm();
        if len < 1e-300 || !len.is_finite() {
            return Err(Error::DegenerateFace);
        }
        // FACE_CORNERS is wound so r1 x r2 points inward
        d[f] = (p - mid).dot(&n) / len;
    }
    Ok((d, diag))
}

/// Point-in-the-box test: inside iff every signed face distance clears the
/// scale-free slack.
pub fn point_in_cell(p: Vec3, cell: &HexCell) -> Result<CellMembership> {
    let (d, diag) = trilinear_distances(p, cell)?;
    let eps = 1e-10 * diag;
    let inside = d.iter().all(|&v| v > -eps);
    Ok(CellMembership { inside, d })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::vec3;

    pub fn unit_cube() -> HexCell {
        let mut c = [Vec3::zeros(); 8];
        for b in 0..8 {
            c[b] = vec3((b & 1) as f64, ((b >> 1) & 1) as f64, ((b >> 2) & 1) as f64);
        }
        c
    }

    #[test]
    fn center_of_unit_cube() {
        let m = point_in_cell(vec3(0.5, 0.5, 0.5), &unit_cube()).unwrap();
        assert!(m.inside);
        for &d in &m.d {
            assert!((d - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn outside_beyond_imax_has_one_negative() {
        let m = point_in_cell(vec3(1.5, 0.5, 0.5), &unit_cube()).unwrap();
        assert!(!m.inside);
        let neg: Vec<usize> = (0..6).filter(|&f| m.d[f] < 0.0).collect();
        assert_eq!(neg, vec![0], "only the i-max face should be violated");
    }

    #[test]
    fn inward_orientation_all_faces() {
        let c = unit_cube();
        let center = vec3(0.5, 0.5, 0.5);
        let (d, _) = trilinear_distances(center, &c).unwrap();
        assert!(d.iter().all(|&v| v > 0.0), "{d:?}");
    }

    #[test]
    fn sheared_hex_matches_tet_decomposition() {
        // parallelepiped: unit cube sheared in x by y and in y by z
        let shear = |p: Vec3| vec3(p.x + 0.4 * p.y, p.y + 0.3 * p.z, p.z);
        let mut cell = unit_cube();
        for c in cell.iter_mut() {
            *c = shear(*c);
        }
        // oracle: invert the affine map and test the unit cube
        let inv = |q: Vec3| {
            let z = q.z;
            let y = q.y - 0.3 * z;
            let x = q.x - 0.4 * y;
            vec3(x, y, z)
        };
        let mut rng_state = 12345u64;
        let mut rand01 = move || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((rng_state >> 11) as f64) / ((1u64 << 53) as f64)
        };
        for _ in 0..1000 {
            let q = vec3(rand01() * 3.0 - 1.0, rand01() * 3.0 - 1.0, rand01() * 3.0 - 1.0);
            let u = inv(q);
            let want = (0..3).all(|d| u[d] > 1e-9 && u[d] < 1.0 - 1e-9);
            let strict_out = (0..3).any(|d| u[d] < -1e-9 || u[d] > 1.0 + 1e-9);
            let got = point_in_cell(q, &cell).unwrap().inside;
            if want {
                assert!(got, "{q:?} should be inside");
            } else if strict_out {
                assert!(!got, "{q:?} should be outside");
            }
        }
    }

    #[test]
    fn degenerate_face_rejected() {
        let mut cell = unit_cube();
        // collapse the i-min face to a line
        cell[0] = cell[2];
        cell[4] = cell[6];
        assert!(matches!(point_in_cell(vec3(0.5, 0.5, 0.5), &cell), Err(Error::DegenerateFace)));
    }
}

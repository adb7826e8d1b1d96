//! Finite-volume curvilinear metrics: cell Jacobians, face area vectors and
//! viscous face coefficients, evaluated so that the discrete metric identity
//! (freestream preservation) holds exactly per cell.

use crate::math::{quad_area_vector, Mat3, Vec3};
use crate::{Error, Result};

/// Metric arrays over a cell lattice of `ncell` cells per direction.
///
/// `s1/s2/s3` hold the face area vectors xi^r_q / J at the constant-i, -j, -k
/// faces; `gv*` hold the three viscous coefficients (g^{rm}/J) at each face;
/// `fc*` are face centroids. `jac` is 1/V per cell.
#[derive(Debug, Clone)]
pub struct Metrics {
    pub ncell: [usize; 3],
    pub jac: Vec<f64>,
    pub vol: Vec<f64>,
    pub s1: Vec<Vec3>,
    pub s2: Vec<Vec3>,
    pub s3: Vec<Vec3>,
    pub fc1: Vec<Vec3>,
    pub fc2: Vec<Vec3>,
    pub fc3: Vec<Vec3>,
    pub gv1: Vec<[f64; 3]>,
    pub gv2: Vec<[f64; 3]>,
    pub gv3: Vec<[f64; 3]>,
}

impl Metrics {
    #[inline]
    pub fn cell(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.ncell[0] * (j + self.ncell[1] * k)
    }

    #[inline]
    pub fn face(&self, dir: usize, i: usize, j: usize, k: usize) -> usize {
        let [ni, nj, _] = self.ncell;
        match dir {
            0 => i + (ni + 1) * (j + nj * k),
            1 => i + ni * (j + (nj + 1) * k),
            _ => i + ni * (j + nj * k),
        }
    }

    pub fn s(&self, dir: usize) -> &[Vec3] {
        match dir {
            0 => &self.s1,
            1 => &self.s2,
            _ => &self.s3,
        }
    }

    pub fn gv(&self, dir: usize) -> &[[f64; 3]] {
        match dir {
            0 => &self.gv1,
            1 => &self.gv2,
            _ => &self.gv3,
        }
    }

    pub fn fc(&self, dir: usize) -> &[Vec3] {
        match dir {
            0 => &self.fc1,
            1 => &self.fc2,
            _ => &self.fc3,
        }
    }

    /// xi^r_q at a constant-`dir` face: area vector scaled by interpolated J.
    pub fn xi_row(&self, dir: usize, i: usize, j: usize, k: usize) -> Vec3 {
        let f = self.face(dir, i, j, k);
        self.s(dir)[f] * self.face_jac(dir, i, j, k)
    }

    /// Interpolated 1/V at a face (one-sided at the lattice boundary).
    pub fn face_jac(&self, dir: usize, i: usize, j: usize, k: usize) -> f64 {
        let hi = [i, j, k][dir];
        let n = self.ncell[dir];
        let mut lo_idx = [i, j, k];
        let mut hi_idx = [i, j, k];
        if hi == 0 {
            return self.jac[self.cell(i, j, k)];
        } else if hi == n {
            lo_idx[dir] -= 1;
            return self.jac[self.cell(lo_idx[0], lo_idx[1], lo_idx[2])];
        }
        lo_idx[dir] -= 1;
        hi_idx[dir] = hi;
        let va = self.vol[self.cell(lo_idx[0], lo_idx[1], lo_idx[2])];
        let vb = self.vol[self.cell(hi_idx[0], hi_idx[1], hi_idx[2])];
        2.0 / (va + vb)
    }

    /// Contravariant metric tensor g^{rm} at a cell.
    pub fn g_contra(&self, i: usize, j: usize, k: usize) -> Mat3 {
        let jc = self.jac[self.cell(i, j, k)];
        let rows = [
            (self.s1[self.face(0, i, j, k)] + self.s1[self.face(0, i + 1, j, k)]) * 0.5 * jc,
            (self.s2[self.face(1, i, j, k)] + self.s2[self.face(1, i, j + 1, k)]) * 0.5 * jc,
            (self.s3[self.face(2, i, j, k)] + self.s3[self.face(2, i, j, k + 1)]) * 0.5 * jc,
        ];
        let mut g = Mat3::zeros();
        for r in 0..3 {
            for m in 0..3 {
                g[(r, m)] = rows[r].dot(&rows[m]);
            }
        }
        g
    }

    /// Sum of outward face area vectors of one cell; identically zero for a
    /// consistent metric set.
    pub fn closure_defect(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.s1[self.face(0, i + 1, j, k)] - self.s1[self.face(0, i, j, k)]
            + self.s2[self.face(1, i, j + 1, k)] - self.s2[self.face(1, i, j, k)]
            + self.s3[self.face(2, i, j, k + 1)] - self.s3[self.face(2, i, j, k)]
    }
}

/// Compute metrics for a node lattice with `dims` node planes per direction.
pub fn compute_metrics_lattice(nodes: &[Vec3], dims: [usize; 3], block: usize) -> Result<Metrics> {
    let nc = [dims[0] - 1, dims[1] - 1, dims[2] - 1];
    let [ni, nj, nk] = nc;
    let nd = |i: usize, j: usize, k: usize| nodes[i + dims[0] * (j + dims[1] * k)];

    let mut s1 = vec![Vec3::zeros(); (ni + 1) * nj * nk];
    let mut fc1 = vec![Vec3::zeros(); (ni + 1) * nj * nk];
    for k in 0..nk {
        for j in 0..nj {
            for i in 0..=ni {
                let (p0, p1, p2, p3) =
                    (nd(i, j, k), nd(i, j + 1, k), nd(i, j + 1, k + 1), nd(i, j, k + 1));
                let f = i + (ni + 1) * (j + nj * k);
                s1[f] = quad_area_vector(p0, p1, p2, p3);
                fc1[f] = (p0 + p1 + p2 + p3) / 4.0;
            }
        }
    }
    let mut s2 = vec![Vec3::zeros(); ni * (nj + 1) * nk];
    let mut fc2 = vec![Vec3::zeros(); ni * (nj + 1) * nk];
    for k in 0..nk {
        for j in 0..=nj {
            for i in 0..ni {
                let (p0, p1, p2, p3) =
                    (nd(i, j, k), nd(i, j, k + 1), nd(i + 1, j, k + 1), nd(i + 1, j, k));
                let f = i + ni * (j + (nj + 1) * k);
                s2[f] = quad_area_vector(p0, p1, p2, p3);
                fc2[f] = (p0 + p1 + p2 + p3) / 4.0;
            }
        }
    }
    let mut s3 = vec![Vec3::zeros(); ni * nj * (nk + 1)];
    let mut fc3 = vec![Vec3::zeros(); ni * nj * (nk + 1)];
    for k in 0..=nk {
        for j in 0..nj {
            for i in 0..ni {
                let (p0, p1, p2, p3) =
                    (nd(i, j, k), nd(i + 1, j, k), nd(i + 1, j + 1, k), nd(i, j + 1, k));
                let f = i + ni * (j + nj * k);
                s3[f] = quad_area_vector(p0, p1, p2, p3);
                fc3[f] = (p0 + p1 + p2 + p3) / 4.0;
            }
        }
    }

    // cell volumes by the divergence theorem over the six faces
    let mut vol = vec![0.0; ni * nj * nk];
    let mut jac = vec![0.0; ni * nj * nk];
    for k in 0..nk {
        for j in 0..nj {
            for i in 0..ni {
                let c = i + ni * (j + nj * k);
                let f1l = i + (ni + 1) * (j + nj * k);
                let f2l = i + ni * (j + (nj + 1) * k);
                let f3l = i + ni * (j + nj * k);
                let v = (fc1[f1l + 1].dot(&s1[f1l + 1]) - fc1[f1l].dot(&s1[f1l])
                    + fc2[f2l + ni].dot(&s2[f2l + ni])
                    - fc2[f2l].dot(&s2[f2l])
                    + fc3[f3l + ni * nj].dot(&s3[f3l + ni * nj])
                    - fc3[f3l].dot(&s3[f3l]))
                    / 3.0;
                if v <= 0.0 || !v.is_finite() {
                    return Err(Error::DegenerateCell {
                        block,
                        i: i as i64,
                        j: j as i64,
                        k: k as i64,
                    });
                }
                vol[c] = v;
                jac[c] = 1.0 / v;
            }
        }
    }

    let mut m = Metrics {
        ncell: nc,
        jac,
        vol,
        s1,
        s2,
        s3,
        fc1,
        fc2,
        fc3,
        gv1: Vec::new(),
        gv2: Vec::new(),
        gv3: Vec::new(),
    };
    m.gv1 = viscous_coefficients(&m, 0);
    m.gv2 = viscous_coefficients(&m, 1);
    m.gv3 = viscous_coefficients(&m, 2);
    Ok(m)
}

/// Compute metrics for one block.
pub fn compute_metrics(block: &super::Block) -> Result<Metrics> {
    compute_metrics_lattice(block.nodes(), block.dims, block.id)
}

/// (g^{rm}/J) at every constant-`dir` face: S^dir . S~^m * J~, with the
/// m-direction area vector averaged from the neighboring m-faces.
fn viscous_coefficients(m: &Metrics, dir: usize) -> Vec<[f64; 3]> {
    let [ni, nj, nk] = m.ncell;
    let fdims = match dir {
        0 => [ni + 1, nj, nk],
        1 => [ni, nj + 1, nk],
        _ => [ni, nj, nk + 1],
    };
    let mut gv = vec![[0.0; 3]; fdims[0] * fdims[1] * fdims[2]];
    for k in 0..fdims[2] {
        for j in 0..fdims[1] {
            for i in 0..fdims[0] {
                let f = m.face(dir, i, j, k);
                let sf = m.s(dir)[f];
                let jf = m.face_jac(dir, i, j, k);
                let mut row = [0.0; 3];
                for md in 0..3 {
                    let sm = if md == dir { sf } else { averaged_face(m, dir, md, [i, j, k]) };
                    row[md] = sf.dot(&sm) * jf;
                }
                gv[f] = row;
            }
        }
    }
    gv
}

/// Average the `md`-direction area vectors adjacent to the constant-`dir` face
/// at `idx`, clamping one-sided at the lattice boundary.
fn averaged_face(m: &Metrics, dir: usize, md: usize, idx: [usize; 3]) -> Vec3 {
    let n = m.ncell;
    // the cells sharing this face, clamped into range
    let mut cells = Vec::with_capacity(2);
    if idx[dir] > 0 {
        let mut c = idx;
        c[dir] -= 1;
        cells.push(c);
    }
    if idx[dir] < n[dir] {
        cells.push(idx);
    }
    let mut acc = Vec3::zeros();
    let mut cnt = 0.0;
    for c in cells {
        for off in 0..2 {
            let mut fidx = c;
            fidx[md] += off;
            acc += m.s(md)[m.face(md, fidx[0], fidx[1], fidx[2])];
            cnt += 1.0;
        }
    }
    acc / cnt
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::vec3;
    use crate::mesh::{BcTag, Block, BlockRole, Mapping};

    fn uniform_block(h: f64, n: usize) -> Block {
        Block::from_mapping(
            0,
            [n, n, n],
            &Mapping::Uniform { origin: [0.0; 3], spacing: [h; 3] },
            0,
            BlockRole::Background,
            [BcTag::Periodic; 6],
            false,
        )
        .unwrap()
    }

    #[test]
    fn unit_spacing_jacobian_is_one() {
        let m = compute_metrics(&uniform_block(1.0, 4)).unwrap();
        for &j in &m.jac {
            assert!((j - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn half_spacing_jacobian_is_eight() {
        let m = compute_metrics(&uniform_block(0.5, 4)).unwrap();
        for &j in &m.jac {
            assert!((j - 8.0).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_grid_xi_and_g_are_diagonal() {
        let h = 0.5;
        let m = compute_metrics(&uniform_block(h, 4)).unwrap();
        let xi = m.xi_row(0, 1, 1, 1);
        assert!((xi - vec3(1.0 / h, 0.0, 0.0)).norm() < 1e-12);
        let g = m.g_contra(1, 1, 1);
        for r in 0..3 {
            for c in 0..3 {
                let want = if r == c { 1.0 / (h * h) } else { 0.0 };
                assert!((g[(r, c)] - want).abs() < 1e-11, "g[{r}{c}] = {}", g[(r, c)]);
            }
        }
    }

    #[test]
    fn rotated_block_matches_analytic_inverse() {
        let angle = 30f64.to_radians();
        let h = 0.3;
        let block = Block::from_mapping(
            0,
            [5, 5, 5],
            &Mapping::RotatedZ { origin: [1.0, -2.0, 0.5], spacing: [h, h, h], angle },
            0,
            BlockRole::Background,
            [BcTag::Periodic; 6],
            false,
        )
        .unwrap();
        let m = compute_metrics(&block).unwrap();
        // analytic d(xi)/dx = (1/h) R(-angle) for this affine mapping
        let (s, c) = angle.sin_cos();
        let want = [
            vec3(c / h, s / h, 0.0),
            vec3(-s / h, c / h, 0.0),
            vec3(0.0, 0.0, 1.0 / h),
        ];
        for dir in 0..3 {
            let xi = m.xi_row(dir, 2, 2, 2);
            assert!((xi - want[dir]).norm() < 1e-12, "dir {dir}: {xi:?}");
        }
        for &j in &m.jac {
            assert!((j - 1.0 / (h * h * h)).abs() < 1e-9 / (h * h * h));
        }
    }

    #[test]
    fn freestream_closure_on_perturbed_lattice() {
        // a genuinely curvilinear lattice: sum of outward face areas per cell
        // must still telescope to zero
        let n = 6;
        let mut nodes = Vec::new();
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let (x, y, z) = (i as f64, j as f64, k as f64);
                    nodes.push(vec3(
                        x + 0.15 * (y * 0.7).sin() + 0.1 * (z * 1.3).cos(),
                        y + 0.12 * (x * 0.9).cos(),
                        z + 0.1 * (x * 0.5 + y * 0.4).sin(),
                    ));
                }
            }
        }
        let m = compute_metrics_lattice(&nodes, [n, n, n], 0).unwrap();
        for k in 0..n - 1 {
            for j in 0..n - 1 {
                for i in 0..n - 1 {
                    assert!(m.closure_defect(i, j, k).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn tangled_grid_is_rejected() {
        let mut nodes = Mapping::Uniform { origin: [0.0; 3], spacing: [1.0; 3] }
            .generate([3, 3, 3])
            .unwrap();
        nodes[13] = vec3(4.0, 4.0, 4.0); // center node pushed far out
        let err = compute_metrics_lattice(&nodes, [3, 3, 3], 7);
        assert!(matches!(err, Err(Error::DegenerateCell { block: 7, .. })));
    }
}

//! Small fixed-size linear algebra shared across modules.

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

pub fn vec3(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3::new(x, y, z)
}

/// Signed volume of the tetrahedron (a, b, c, d).
pub fn tet_volume(a: Vec3, b: Vec3, c: Vec3, d: Vec3) -> f64 {
    (b - a).cross(&(c - a)).dot(&(d - a)) / 6.0
}

/// Area vector of a (possibly non-planar) quad p0-p1-p2-p3, equal to the
/// integral of the unit normal over the bilinear surface patch.
pub fn quad_area_vector(p0: Vec3, p1: Vec3, p2: Vec3, p3: Vec3) -> Vec3 {
    0.5 * (p2 - p0).cross(&(p3 - p1))
}

/// Re-orthonormalize a rotation matrix with Gram-Schmidt, preserving det = +1.
pub fn orthonormalize(m: &Mat3) -> Mat3 {
    let c0: Vec3 = m.column(0).into();
    let c1: Vec3 = m.column(1).into();
    let a = c0.normalize();
    let b = (c1 - a * a.dot(&c1)).normalize();
    let c = a.cross(&b);
    Mat3::from_columns(&[a, b, c])
}

/// Rotation matrix for a rotation of `angle` radians about `axis` (Rodrigues).
pub fn rotation_about(axis: Vec3, angle: f64) -> Mat3 {
    let n = axis.norm();
    if n < 1e-300 {
        return Mat3::identity();
    }
    let k = axis / n;
    let kx = skew(k);
    Mat3::identity() + kx * angle.sin() + kx * kx * (1.0 - angle.cos())
}

/// Skew-symmetric cross-product matrix: skew(a) * b == a x b.
pub fn skew(a: Vec3) -> Mat3 {
    Mat3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

/// Least-squares slope of y against x.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tet_volume_unit() {
        let v = tet_volume(
            vec3(0.0, 0.0, 0.0),
            vec3(1.0, 0.0, 0.0),
            vec3(0.0, 1.0, 0.0),
            vec3(0.0, 0.0, 1.0),
        );
        assert!((v - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn quad_area_planar() {
        let s = quad_area_vector(
            vec3(0.0, 0.0, 0.0),
            vec3(2.0, 0.0, 0.0),
            vec3(2.0, 3.0, 0.0),
            vec3(0.0, 3.0, 0.0),
        );
        assert!((s - vec3(0.0, 0.0, 6.0)).norm() < 1e-14);
    }

    #[test]
    fn rotation_roundtrip() {
        let q = rotation_about(vec3(0.3, -0.2, 0.9), 1.234);
        let r = q * q.transpose();
        assert!((r - Mat3::identity()).norm() < 1e-14);
        assert!((q.determinant() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn slope_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        assert!((fit_slope(&x, &y) - 2.0).abs() < 1e-13);
    }
}

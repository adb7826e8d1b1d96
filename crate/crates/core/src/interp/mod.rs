//! Trilinear interpolation: coefficient computation, the distributed sparse
//! interpolation operator, and the frame-to-frame velocity transform.

mod matrix;

pub use matrix::{assemble_matrix, InterpMatrix, RankMatrix};

use crate::frames::FrameState;
use crate::math::Vec3;
use crate::{Error, Result};

/// Trilinear coefficients from the six signed face distances of the donor
/// cell: a1 = d1/(d1+d2), a2 = d3/(d3+d4), a3 = d5/(d5+d6).
pub fn trilinear_coefficients(d: &[f64; 6]) -> Result<[f64; 3]> {
    let mut a = [0.0; 3];
    let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for dir in 0..3 {
        let (d1, d2) = (d[2 * dir], d[2 * dir + 1]);
        let sum = d1 + d2;
        if sum <= 1e-14 * scale.max(1e-300) {
            return Err(Error::DegenerateCell { block: usize::MAX, i: 0, j: 0, k: 0 });
        }
        a[dir] = (d1 / sum).clamp(0.0, 1.0);
    }
    Ok(a)
}

/// Tensor-product corner weights; corner b at offset (b&1, b>>1&1, b>>2&1)
/// from the base corner. Weights are nonnegative and sum to one.
pub fn corner_weights(a: [f64; 3]) -> [f64; 8] {
    let mut w = [0.0; 8];
    for (b, wb) in w.iter_mut().enumerate() {
        let f0 = if b & 1 == 0 { a[0] } else { 1.0 - a[0] };
        let f1 = if b & 2 == 0 { a[1] } else { 1.0 - a[1] };
        let f2 = if b & 4 == 0 { a[2] } else { 1.0 - a[2] };
        *wb = f0 * f1 * f2;
    }
    w
}

/// Convert a velocity between non-inertial frames through world components.
pub fn transform_velocity(u_donor: Vec3, donor: &FrameState, receiver: &FrameState) -> Vec3 {
    receiver.q.transpose() * (donor.q * u_donor)
}

/// Contravariant volume flux through a face with area vector `s` (xi^r_q / J):
/// U^r = u_q xi^r_q / J.
pub fn contravariant_flux(u: Vec3, s: Vec3) -> f64 {
    u.dot(&s)
}

/// Relative flux (U^r - V^r) given the fluid velocity and the frame velocity
/// at the face.
pub fn relative_flux(u: Vec3, frame_vel: Vec3, s: Vec3) -> f64 {
    (u - frame_vel).dot(&s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{rotation_about, vec3};

    #[test]
    fn centered_point_has_half_coefficients() {
        let d = [0.5; 6];
        assert_eq!(trilinear_coefficients(&d).unwrap(), [0.5, 0.5, 0.5]);
    }

    #[test]
    fn point_on_face_one() {
        let d = [0.0, 1.0, 0.5, 0.5, 0.5, 0.5];
        let a = trilinear_coefficients(&d).unwrap();
        assert_eq!(a[0], 0.0);
    }

    #[test]
    fn degenerate_pair_rejected() {
        let d = [0.0, 0.0, 0.5, 0.5, 0.5, 0.5];
        assert!(trilinear_coefficients(&d).is_err());
    }

    #[test]
    fn corner_weight_delta() {
        // a = (0,0,0): all weight on the far corner (offsets 1,1,1)
        let w = corner_weights([0.0, 0.0, 0.0]);
        assert_eq!(w[7], 1.0);
        assert_eq!(w.iter().sum::<f64>(), 1.0);
        // base corner carries full weight at a = (1,1,1)
        let w = corner_weights([1.0, 1.0, 1.0]);
        assert_eq!(w[0], 1.0);
    }

    #[test]
    fn centered_weights_are_eighth() {
        let w = corner_weights([0.5, 0.5, 0.5]);
        for v in w {
            assert!((v - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn linear_reproduction_on_parallelepiped() {
        // corners of a sheared cell; interpolating corner coordinates with the
        // weights must reproduce the query point
        let shear = |p: Vec3| vec3(p.x + 0.3 * p.y - 0.1 * p.z, p.y + 0.2 * p.z, p.z);
        let mut corners = [Vec3::zeros(); 8];
        for (b, c) in corners.iter_mut().enumerate() {
            *c = shear(vec3((b & 1) as f64, ((b >> 1) & 1) as f64, ((b >> 2) & 1) as f64));
        }
        let cell: crate::geometry::HexCell = corners;
        let mut state = 4u64;
        let mut rand01 = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64)
        };
        for _ in 0..200 {
            let q = shear(vec3(rand01(), rand01(), rand01()));
            let (d, _) = crate::geometry::trilinear_distances(q, &cell).unwrap();
            if d.iter().any(|&v| v < 1e-9) {
                continue;
            }
            let a = trilinear_coefficients(&d).unwrap();
            let w = corner_weights(a);
            let mut rec = Vec3::zeros();
            for b in 0..8 {
                rec += corners[b] * w[b];
            }
            assert!((rec - q).norm() < 1e-12, "{q:?} vs {rec:?}");
        }
    }

    #[test]
    fn velocity_transform_examples() {
        let identity = FrameState::at_rest(0, Vec3::zeros());
        let u = vec3(1.0, 0.0, 0.0);
        assert!((transform_velocity(u, &identity, &identity) - u).norm() < 1e-15);

        let mut donor = FrameState::at_rest(1, Vec3::zeros());
        donor.q = rotation_about(vec3(0.0, 0.0, 1.0), std::f64::consts::FRAC_PI_2);
        // u = (1,0,0) in a frame rotated +90 deg about z is (0,1,0) in world
        let got = transform_velocity(u, &donor, &identity);
        assert!((got - vec3(0.0, 1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn velocity_transform_roundtrip() {
        let mut donor = FrameState::at_rest(0, Vec3::zeros());
        donor.q = rotation_about(vec3(0.4, -0.3, 0.85), 1.1);
        let mut recv = FrameState::at_rest(1, Vec3::zeros());
        recv.q = rotation_about(vec3(-0.2, 0.9, 0.1), -0.7);
        let u = vec3(0.3, -1.2, 0.8);
        let there = transform_velocity(u, &donor, &recv);
        let back = transform_velocity(there, &recv, &donor);
        assert!((back - u).norm() < 1e-13);
    }

    #[test]
    fn flux_of_uniform_velocity_on_unit_grid() {
        let h = 0.5;
        let s = vec3(h * h, 0.0, 0.0);
        assert!((contravariant_flux(vec3(1.0, 0.0, 0.0), s) - h * h).abs() < 1e-15);
        assert_eq!(contravariant_flux(vec3(0.0, 1.0, 0.0), s), 0.0);
        // static frame: V = 0
        assert_eq!(relative_flux(vec3(1.0, 0.0, 0.0), Vec3::zeros(), s), h * h);
    }
}

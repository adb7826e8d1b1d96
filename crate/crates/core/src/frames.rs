//! Non-inertial reference frames: rigid translation/rotation state, the
//! world/frame coordinate maps, grid velocities and kinematics integration.
//!
//! `q` rotates frame components to world components (`p_world = origin + q p`)
//! and stays orthogonal under integration by re-orthonormalization every step.
//! Grid metrics are computed once in frame coordinates and never touched as
//! the frame moves.

use crate::math::{orthonormalize, rotation_about, Mat3, Vec3};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy)]
pub struct FrameState {
    pub id: usize,
    /// Frame origin in world coordinates.
    pub origin: Vec3,
    /// Orientation tensor, frame to world.
    pub q: Mat3,
    /// Translational velocity of the origin, world components.
    pub vel: Vec3,
    /// Angular velocity, world components.
    pub omega: Vec3,
    pub time: f64,
}

impl FrameState {
    pub fn at_rest(id: usize, origin: Vec3) -> Self {
        Self { id, origin, q: Mat3::identity(), vel: Vec3::zeros(), omega: Vec3::zeros(), time: 0.0 }
    }

    pub fn world_from_frame(&self, p: Vec3) -> Vec3 {
        self.origin + self.q * p
    }

    pub fn frame_from_world(&self, x: Vec3) -> Vec3 {
        self.q.transpose() * (x - self.origin)
    }

    /// Velocity of the frame point `p` (frame coordinates), world components:
    /// u_ctr + omega x (q p).
    pub fn grid_velocity_at(&self, p: Vec3) -> Vec3 {
        self.vel + self.omega.cross(&(self.q * p))
    }

    /// Same velocity expressed in frame components.
    pub fn grid_velocity_frame(&self, p: Vec3) -> Vec3 {
        self.q.transpose() * self.vel + (self.q.transpose() * self.omega).cross(&p)
    }

    /// Rotational part of the frame velocity in frame components: w = Omega~ x p.
    pub fn rotation_velocity_frame(&self, p: Vec3) -> Vec3 {
        (self.q.transpose() * self.omega).cross(&p)
    }

    pub fn vel_frame_to_world(&self, u: Vec3) -> Vec3 {
        self.q * u
    }

    pub fn vel_world_to_frame(&self, u: Vec3) -> Vec3 {
        self.q.transpose() * u
    }

    /// Advance to `time + dt` with end-of-step velocities. The origin is
    /// integrated with the trapezoidal rule; the orientation by an incremental
    /// rotation about the midpoint angular velocity, re-orthonormalized.
    pub fn advance(&self, new_vel: Vec3, new_omega: Vec3, dt: f64) -> FrameState {
        assert!(dt > 0.0);
        let origin = self.origin + 0.5 * dt * (self.vel + new_vel);
        let mid = 0.5 * (self.omega + new_omega);
        let angle = mid.norm() * dt;
        let q = if angle > 0.0 {
            orthonormalize(&(rotation_about(mid, angle) * self.q))
        } else {
            self.q
        };
        FrameState { id: self.id, origin, q, vel: new_vel, omega: new_omega, time: self.time + dt }
    }

    /// Relative pose of `self` as seen from frame `other`: returns (rotation,
    /// shift) with x_other = rot * x_self + shift. Used to cache classifications
    /// that only depend on the relative pose.
    pub fn pose_in(&self, other: &FrameState) -> (Mat3, Vec3) {
        let rot = other.q.transpose() * self.q;
        let shift = other.q.transpose() * (self.origin - other.origin);
        (rot, shift)
    }
}

/// Rigid-motion specification for a frame, from the case configuration.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Motion {
    Static,
    ConstantTranslation { velocity: [f64; 3] },
    ConstantRotation { omega: [f64; 3] },
    /// omega(t) = amplitude * sin(2 pi f t) about `axis`.
    PrescribedRotation { amplitude: f64, frequency: f64, axis: [f64; 3] },
    /// x(t) = -amplitude * sin(2 pi f t) along `dir`.
    PrescribedTranslation { amplitude: f64, frequency: f64, dir: [f64; 3] },
    /// Velocities supplied by the rigid-body solver.
    Fsi {
        density_ratio: f64,
        /// Translational degrees of freedom left free.
        dof: [bool; 3],
        #[serde(default)]
        initial_velocity: [f64; 3],
    },
}

impl Motion {
    /// Prescribed frame velocities at time `t`; `None` for FSI-driven frames.
    pub fn velocities_at(&self, t: f64) -> Option<(Vec3, Vec3)> {
        match self {
            Motion::Static => Some((Vec3::zeros(), Vec3::zeros())),
            Motion::ConstantTranslation { velocity } => {
                Some((Vec3::from(*velocity), Vec3::zeros()))
            }
            Motion::ConstantRotation { omega } => Some((Vec3::zeros(), Vec3::from(*omega))),
            Motion::PrescribedRotation { amplitude, frequency, axis } => {
                let w = amplitude * (2.0 * std::f64::consts::PI * frequency * t).sin();
                Some((Vec3::zeros(), Vec3::from(*axis).normalize() * w))
            }
            Motion::PrescribedTranslation { amplitude, frequency, dir } => {
                let om = 2.0 * std::f64::consts::PI * frequency;
                let v = -amplitude * om * (om * t).cos();
                Some((Vec3::from(*dir).normalize() * v, Vec3::zeros()))
            }
            Motion::Fsi { .. } => None,
        }
    }

    pub fn is_fsi(&self) -> bool {
        matches!(self, Motion::Fsi { .. })
    }

    pub fn is_static(&self) -> bool {
        matches!(self, Motion::Static)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::vec3;

    #[test]
    fn identity_frame_is_noop() {
        let f = FrameState::at_rest(0, Vec3::zeros());
        let p = vec3(0.3, -0.7, 1.1);
        assert_eq!(f.world_from_frame(p), p);
        assert_eq!(f.grid_velocity_at(p), Vec3::zeros());
    }

    #[test]
    fn pure_translation() {
        let mut f = FrameState::at_rest(0, vec3(1.0, 2.0, 3.0));
        f.vel = vec3(0.5, 0.0, 0.0);
        let p = vec3(0.1, 0.2, 0.3);
        assert!((f.world_from_frame(p) - vec3(1.1, 2.2, 3.3)).norm() < 1e-15);
        assert!((f.grid_velocity_at(p) - vec3(0.5, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn roundtrip_world_frame() {
        let mut f = FrameState::at_rest(0, vec3(0.2, -0.4, 0.9));
        f.q = rotation_about(vec3(0.1, 0.7, -0.3), 0.83);
        let p = vec3(1.3, -2.1, 0.6);
        let back = f.frame_from_world(f.world_from_frame(p));
        assert!((back - p).norm() < 1e-13);
    }

    #[test]
    fn rotation_grid_velocity() {
        let mut f = FrameState::at_rest(0, Vec3::zeros());
        let w = 0.7;
        f.omega = vec3(0.0, 0.0, w);
        let r = 1.5;
        let v = f.grid_velocity_at(vec3(r, 0.0, 0.0));
        assert!((v - vec3(0.0, w * r, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn combined_motion_matches_formula() {
        let mut f = FrameState::at_rest(0, vec3(1.0, 0.0, 0.0));
        f.q = rotation_about(vec3(0.0, 0.0, 1.0), 0.5);
        f.vel = vec3(0.2, -0.1, 0.05);
        f.omega = vec3(0.01, 0.02, 0.6);
        let p = vec3(0.4, 0.3, -0.2);
        let want = f.vel + f.omega.cross(&(f.q * p));
        assert!((f.grid_velocity_at(p) - want).norm() < 1e-14);
        // frame-component version is the same vector rotated
        let vf = f.grid_velocity_frame(p);
        assert!((f.q * vf - want).norm() < 1e-14);
    }

    #[test]
    fn constant_translation_advances_linearly() {
        let mut f = FrameState::at_rest(0, Vec3::zeros());
        let v = vec3(0.3, 0.0, 0.0);
        f.vel = v;
        for _ in 0..100 {
            f = f.advance(v, Vec3::zeros(), 0.01);
        }
        assert!((f.origin - vec3(0.3, 0.0, 0.0)).norm() < 1e-13);
        assert!((f.q - Mat3::identity()).norm() < 1e-15);
    }

    #[test]
    fn full_turn_returns_to_identity() {
        let mut f = FrameState::at_rest(0, Vec3::zeros());
        let w = vec3(0.0, 0.0, 1.0);
        f.omega = w;
        let n = 1000;
        let dt = 2.0 * std::f64::consts::PI / n as f64;
        for _ in 0..n {
            f = f.advance(Vec3::zeros(), w, dt);
        }
        assert!((f.q - Mat3::identity()).norm() < 1e-10);
    }

    #[test]
    fn oscillating_rotation_has_zero_net_angle() {
        let motion =
            Motion::PrescribedRotation { amplitude: 1.3, frequency: 0.25, axis: [0.0, 0.0, 1.0] };
        let mut f = FrameState::at_rest(0, Vec3::zeros());
        let period = 4.0;
        let n = 4000;
        let dt = period / n as f64;
        let (_, w0) = motion.velocities_at(0.0).unwrap();
        f.omega = w0;
        for s in 0..n {
            let t1 = (s + 1) as f64 * dt;
            let (_, w) = motion.velocities_at(t1).unwrap();
            f = f.advance(Vec3::zeros(), w, dt);
        }
        let angle = ((f.q[(0, 0)] + f.q[(1, 1)] + f.q[(2, 2)] - 1.0) / 2.0).clamp(-1.0, 1.0).acos();
        assert!(angle < 1e-8, "net angle {angle}");
    }

    #[test]
    fn orthogonality_preserved_over_many_steps() {
        let mut f = FrameState::at_rest(0, Vec3::zeros());
        let mut worst: f64 = 0.0;
        for s in 0..5000 {
            let t = s as f64 * 0.01;
            let w = vec3((t * 0.3).sin(), (t * 0.7).cos(), 1.0 + 0.2 * (t * 1.3).sin());
            f = f.advance(vec3(0.1, 0.0, 0.0), w, 0.01);
            let drift = (f.q.transpose() * f.q - Mat3::identity()).norm();
            worst = worst.max(drift);
        }
        assert!(worst < 1e-12, "drift {worst}");
        assert!((f.q.determinant() - 1.0).abs() < 1e-12);
    }
}

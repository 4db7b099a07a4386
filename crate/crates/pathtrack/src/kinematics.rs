//! Forward kinematics for serial chains of revolute joints, and the derived
//! quantities the task rewards care about: tool position, tool orientation
//! relative to a reference axis, and the tilt of a tool-mounted beam.

use nalgebra::{Isometry3, Translation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One revolute joint: rotation about `axis` (in the parent frame) followed
/// by a fixed translation to the next joint.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct JointSpec {
    pub axis: [f64; 3],
    pub translation: [f64; 3],
}

/// A serial kinematic chain. `base_translation`/`base_rotvec` place the chain
/// in the world; `tcp_offset` is the tool point in the last joint's frame.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ChainSpec {
    pub joints: Vec<JointSpec>,
    pub base_translation: [f64; 3],
    pub base_rotvec: [f64; 3],
    pub tcp_offset: [f64; 3],
}

#[derive(Debug, Error)]
pub enum KinematicsError {
    #[error("joint {0} has a zero rotation axis")]
    ZeroAxis(usize),
    #[error("got {got} joint angles for a {expected}-joint chain")]
    WrongDof { got: usize, expected: usize },
}

impl ChainSpec {
    /// Chain with identity base orientation, tool at the last joint frame's
    /// origin, and the given base offset.
    pub fn serial_chain(joints: &[([f64; 3], [f64; 3])], base_translation: [f64; 3]) -> ChainSpec {
        ChainSpec {
            joints: joints
                .iter()
                .map(|&(axis, translation)| JointSpec { axis, translation })
                .collect(),
            base_translation,
            base_rotvec: [0.0; 3],
            tcp_offset: [0.0; 3],
        }
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        for (i, j) in self.joints.iter().enumerate() {
            if Vector3::from(j.axis).norm() < 1e-12 {
                return Err(KinematicsError::ZeroAxis(i));
            }
        }
        Ok(())
    }

    /// Pose of the tool frame for joint angles `q`.
    pub fn fk(&self, q: &[f64]) -> Result<Isometry3<f64>, KinematicsError> {
        if q.len() != self.joints.len() {
            return Err(KinematicsError::WrongDof {
                got: q.len(),
                expected: self.joints.len(),
            });
        }
        self.validate()?;
        let base_rot = rotvec_to_quat(self.base_rotvec);
        let mut pose = Isometry3::from_parts(Translation3::from(Vector3::from(self.base_translation)), base_rot);
        for (joint, &angle) in self.joints.iter().zip(q) {
            let axis = Unit::new_normalize(Vector3::from(joint.axis));
            let rot = UnitQuaternion::from_axis_angle(&axis, angle);
            pose = pose
                * Isometry3::from_parts(Translation3::identity(), rot)
                * Isometry3::translation(
                    joint.translation[0],
                    joint.translation[1],
                    joint.translation[2],
                );
        }
        Ok(pose * Isometry3::translation(self.tcp_offset[0], self.tcp_offset[1], self.tcp_offset[2]))
    }

    /// Tool position for joint angles `q`.
    pub fn tool_position(&self, q: &[f64]) -> Result<Vector3<f64>, KinematicsError> {
        Ok(self.fk(q)?.translation.vector)
    }
}

/// Angle in [0, pi] between a reference direction and its image under the
/// pose's rotation. Zero means the pose leaves that direction unchanged.
pub fn orientation_angle(pose: &Isometry3<f64>, reference: [f64; 3]) -> f64 {
    let r = Unit::new_normalize(Vector3::from(reference));
    let moved = pose.rotation * r.into_inner();
    moved.dot(&r).clamp(-1.0, 1.0).acos()
}

/// Signed tilt of the tool's local x direction against the horizontal plane,
/// in [-pi/2, pi/2]. Positive tilts the direction upward (toward world +z).
pub fn beam_tilt(pose: &Isometry3<f64>) -> f64 {
    let along = pose.rotation * Vector3::x();
    along.z.clamp(-1.0, 1.0).asin()
}

/// Rotation angle in [0, pi] between the orientations of two poses.
pub fn rotation_angle_between(a: &Isometry3<f64>, b: &Isometry3<f64>) -> f64 {
    a.rotation.angle_to(&b.rotation)
}

fn rotvec_to_quat(rv: [f64; 3]) -> UnitQuaternion<f64> {
    let v = Vector3::from(rv);
    let angle = v.norm();
    if angle < 1e-12 {
        UnitQuaternion::identity()
    } else {
        UnitQuaternion::from_axis_angle(&Unit::new_normalize(v), angle)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RobotConfig;

    #[test]
    fn planar3_stretched_pose() {
        let robot = RobotConfig::planar3();
        let p = robot.chain.tool_position(&[0.0, 0.0, 0.0]).unwrap();
        // Links along x, base lifted by 0.4: tool at (1.1, 0, 0.4).
        assert!((p - Vector3::new(1.1, 0.0, 0.4)).norm() < 1e-12, "{p}");
    }

    #[test]
    fn planar3_first_joint_quarter_turn() {
        let robot = RobotConfig::planar3();
        // Rotating -pi/2 about +y sends +x to +z: arm points straight up.
        let p = robot
            .chain
            .tool_position(&[-std::f64::consts::FRAC_PI_2, 0.0, 0.0])
            .unwrap();
        assert!((p - Vector3::new(0.0, 0.0, 1.5)).norm() < 1e-9, "{p}");
    }

    #[test]
    fn planar3_motion_stays_in_xz_plane() {
        let robot = RobotConfig::planar3();
        for q in [[0.3, -0.7, 1.1], [-1.2, 0.4, 0.9], [2.0, -2.0, 0.5]] {
            let p = robot.chain.tool_position(&q).unwrap();
            assert!(p.y.abs() < 1e-12, "{p}");
        }
    }

    #[test]
    fn beam_tilt_tracks_total_pitch() {
        let robot = RobotConfig::planar3();
        for (q, expect) in [
            ([0.0, 0.0, 0.0], 0.0),
            ([-0.3, 0.0, 0.0], 0.3),
            ([-0.1, -0.2, 0.1], 0.2),
        ] {
            let pose = robot.chain.fk(&q).unwrap();
            // Rotation by theta about +y pitches +x toward -z, so tilt
            // equals minus the angle sum.
            assert!((beam_tilt(&pose) - expect).abs() < 1e-12, "{q:?}");
        }
    }

    #[test]
    fn orientation_angle_identity_and_known_rotation() {
        let robot = RobotConfig::planar3();
        let pose = robot.chain.fk(&[0.0, 0.0, 0.0]).unwrap();
        assert!(orientation_angle(&pose, [1.0, 0.0, 0.0]) < 1e-12);
        let pose = robot.chain.fk(&[0.5, 0.0, 0.0]).unwrap();
        // x rotated about y by 0.5 keeps a 0.5 angle to its start.
        assert!((orientation_angle(&pose, [1.0, 0.0, 0.0]) - 0.5).abs() < 1e-12);
        // The rotation axis itself never moves.
        assert!(orientation_angle(&pose, [0.0, 1.0, 0.0]) < 1e-12);
    }

    #[test]
    fn spatial7_zero_pose_height() {
        let robot = RobotConfig::spatial7();
        let p = robot.chain.tool_position(&vec![0.0; 7]).unwrap();
        let h = 0.34 + 0.19 + 0.21 + 0.19 + 0.21 + 0.19 + 0.126;
        assert!((p - Vector3::new(0.0, 0.0, h)).norm() < 1e-12, "{p}");
    }

    #[test]
    fn spatial7_first_joint_spins_in_place_at_zero() {
        let robot = RobotConfig::spatial7();
        // All links along z and all-zero elbows: rotating joint 1 about z
        // leaves the tool position fixed.
        let a = robot.chain.tool_position(&vec![0.0; 7]).unwrap();
        let mut q = vec![0.0; 7];
        q[0] = 1.0;
        let b = robot.chain.tool_position(&q).unwrap();
        assert!((a - b).norm() < 1e-12);
        // Bending the second joint moves it.
        q[0] = 0.0;
        q[1] = 0.7;
        let c = robot.chain.tool_position(&q).unwrap();
        assert!((a - c).norm() > 0.1);
    }

    #[test]
    fn fk_errors() {
        let robot = RobotConfig::planar3();
        assert!(matches!(
            robot.chain.fk(&[0.0, 0.0]),
            Err(KinematicsError::WrongDof {
                got: 2,
                expected: 3
            })
        ));
        let mut chain = robot.chain.clone();
        chain.joints[1].axis = [0.0; 3];
        assert!(matches!(
            chain.fk(&[0.0, 0.0, 0.0]),
            Err(KinematicsError::ZeroAxis(1))
        ));
    }
}

//! Forward kinematics over the skeletal tree.

use nalgebra::{Matrix3, Vector3};
use ndarray::Array3;

use super::{JointPositions, MotionSequence, Skeleton, JOINT_COUNT};
use crate::error::{Error, Result};
use crate::motion::rot6d_to_matrix;

/// Converts per-joint rotations plus root translation into global 3-D
/// joint positions.
///
/// Per frame, the root is placed at the frame's translation with the
/// root rotation applied; every other joint sits at its parent's
/// position plus the parent's global rotation applied to the joint's
/// rest offset, with rotations composed down the tree.
pub fn forward_kinematics(seq: &MotionSequence, skel: &Skeleton) -> Result<JointPositions> {
    let frame_count = seq.len();
    let mut out = Array3::zeros((frame_count, JOINT_COUNT, 3));

    let mut global_rot: Vec<Matrix3<f64>> = vec![Matrix3::identity(); JOINT_COUNT];
    let mut global_pos: Vec<Vector3<f64>> = vec![Vector3::zeros(); JOINT_COUNT];

    for frame in 0..frame_count {
        let pose = seq.pose(frame);
        for joint in 0..JOINT_COUNT {
            let local = rot6d_to_matrix(&pose.joint_rotation(joint)).map_err(|e| match e {
                Error::DegenerateRotation => Error::DegenerateRotationAt { frame, joint },
                other => other,
            })?;
            match skel.parent_of(joint) {
                None => {
                    global_rot[joint] = local;
                    global_pos[joint] = pose.root_translation();
                }
                Some(parent) => {
                    global_pos[joint] =
                        global_pos[parent] + global_rot[parent] * skel.rest_offsets()[joint];
                    global_rot[joint] = global_rot[parent] * local;
                }
            }
            for axis in 0..3 {
                out[[frame, joint, axis]] = global_pos[joint][axis];
            }
        }
    }

    JointPositions::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::PoseVector;

    fn identity_seq(frames: usize) -> MotionSequence {
        let poses = vec![PoseVector::identity(); frames];
        MotionSequence::from_poses(30.0, &poses).unwrap()
    }

    /// Rest-pose joint positions by walking the parent chain directly.
    fn cumulative_offsets(skel: &Skeleton) -> Vec<Vector3<f64>> {
        let mut acc = vec![Vector3::zeros(); JOINT_COUNT];
        for joint in 1..JOINT_COUNT {
            let parent = skel.parent_of(joint).unwrap();
            acc[joint] = acc[parent] + skel.rest_offsets()[joint];
        }
        acc
    }

    #[test]
    fn identity_pose_reproduces_rest_offsets() {
        let skel = Skeleton::smpl_default();
        let pos = forward_kinematics(&identity_seq(3), &skel).unwrap();
        let expected = cumulative_offsets(&skel);
        for frame in 0..3 {
            for (joint, want) in expected.iter().enumerate() {
                assert_eq!(pos.joint(frame, joint), *want, "joint {joint}");
            }
        }
    }

    #[test]
    fn rigid_translation_shifts_everything() {
        let skel = Skeleton::smpl_default();
        let mut pose = PoseVector::identity();
        pose.set_root_translation(Vector3::new(1.0, 2.0, 3.0));
        let seq = MotionSequence::from_poses(30.0, &[pose]).unwrap();
        let pos = forward_kinematics(&seq, &skel).unwrap();
        let expected = cumulative_offsets(&skel);
        for (joint, want) in expected.iter().enumerate() {
            let d = pos.joint(0, joint) - want;
            assert!(
                (d - Vector3::new(1.0, 2.0, 3.0)).norm() < 1e-12,
                "joint {joint}"
            );
        }
    }

    #[test]
    fn rotated_root_swings_child_bone() {
        // two-joint chain: rotate the root 90 degrees about z; a child
        // with rest offset (1, 0, 0) lands at root + (0, 1, 0)
        // all joints hang off the root so only the root rotation matters
        let mut parents = vec![0i32; JOINT_COUNT];
        parents[0] = -1;
        let mut offsets = vec![Vector3::zeros(); JOINT_COUNT];
        offsets[1] = Vector3::new(1.0, 0.0, 0.0);
        let skel = Skeleton::new(parents, offsets).unwrap();

        let mut pose = PoseVector::identity();
        // 90-degree rotation about z: columns (0,1,0) and (-1,0,0)
        pose.set_joint_rotation(0, [0.0, 1.0, 0.0, -1.0, 0.0, 0.0]);
        let seq = MotionSequence::from_poses(30.0, &[pose]).unwrap();
        let pos = forward_kinematics(&seq, &skel).unwrap();

        let child = pos.joint(0, 1);
        assert!((child - Vector3::new(0.0, 1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn degenerate_rotation_reports_frame_and_joint() {
        let skel = Skeleton::smpl_default();
        let mut bad = PoseVector::identity();
        bad.set_joint_rotation(13, [0.0; 6]);
        let seq = MotionSequence::from_poses(30.0, &[PoseVector::identity(), bad]).unwrap();
        match forward_kinematics(&seq, &skel) {
            Err(Error::DegenerateRotationAt { frame, joint }) => {
                assert_eq!((frame, joint), (1, 13));
            }
            other => panic!("expected degenerate-rotation error, got {other:?}"),
        }
    }
}

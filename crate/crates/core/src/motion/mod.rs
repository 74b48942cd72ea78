//! Pose and motion data model with SMPL-format forward kinematics.
//!
//! A pose is a 151-dimensional vector laid out as 4 foot-contact values,
//! a 3-D root translation in meters, and 24 joint rotations in the
//! continuous 6-DOF representation (6 values per joint, stored in joint
//! order). Sequences of poses carry a frame rate and are converted to
//! global 3-D joint positions by [`forward_kinematics`].

mod fk;
mod kinematics;
mod rot6d;

pub use fk::forward_kinematics;
pub use kinematics::{
    joint_acceleration, joint_velocity, mean_joint_speed, second_time_derivative, time_derivative,
};
pub use rot6d::rot6d_to_matrix;

use nalgebra::Vector3;
use ndarray::{Array2, Array3};

use crate::error::{Error, Result};

/// Number of skeleton joints.
pub const JOINT_COUNT: usize = 24;
/// Foot-contact values per frame (heel and toe of each foot).
pub const CONTACT_DIM: usize = 4;
/// Root-translation values per frame.
pub const TRANSLATION_DIM: usize = 3;
/// Values per joint rotation.
pub const ROT6D_DIM: usize = 6;
/// Total pose dimensionality: contacts + translation + 24 rotations.
pub const POSE_DIM: usize = CONTACT_DIM + TRANSLATION_DIM + JOINT_COUNT * ROT6D_DIM;

/// SMPL joint indices of the four contact points, in the order the
/// contact values are stored: left heel, right heel, left toe, right toe.
/// Heels map to the ankle joints and toes to the foot joints; SMPL has
/// no dedicated heel joint.
pub const CONTACT_JOINTS: [usize; CONTACT_DIM] = [7, 8, 10, 11];

/// Left and right foot joints used by foot-velocity metrics.
pub const FOOT_JOINTS: [usize; 2] = [10, 11];

/// One frame of the 151-D dance representation.
///
/// Contact values are nominally in `[0, 1]` (binary in ground truth;
/// model output may be continuous and is kept raw, see the loss module
/// for how they are consumed).
#[derive(Debug, Clone, PartialEq)]
pub struct PoseVector {
    values: Vec<f64>,
}

impl PoseVector {
    /// Wraps a raw 151-value frame. Rejects wrong dimensionality and
    /// non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != POSE_DIM {
            return Err(Error::ShapeMismatch {
                context: "pose vector",
                expected: POSE_DIM.to_string(),
                got: values.len().to_string(),
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "pose vector",
            });
        }
        Ok(Self { values })
    }

    /// Identity pose: zero contacts, zero translation, identity rotations.
    pub fn identity() -> Self {
        let mut values = vec![0.0; POSE_DIM];
        for joint in 0..JOINT_COUNT {
            let base = CONTACT_DIM + TRANSLATION_DIM + joint * ROT6D_DIM;
            // identity rotation in 6-DOF form: first two matrix columns
            values[base] = 1.0;
            values[base + 4] = 1.0;
        }
        Self { values }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn contacts(&self) -> [f64; CONTACT_DIM] {
        [
            self.values[0],
            self.values[1],
            self.values[2],
            self.values[3],
        ]
    }

    pub fn root_translation(&self) -> Vector3<f64> {
        Vector3::new(
            self.values[CONTACT_DIM],
            self.values[CONTACT_DIM + 1],
            self.values[CONTACT_DIM + 2],
        )
    }

    pub fn set_root_translation(&mut self, t: Vector3<f64>) {
        self.values[CONTACT_DIM] = t.x;
        self.values[CONTACT_DIM + 1] = t.y;
        self.values[CONTACT_DIM + 2] = t.z;
    }

    pub fn set_contact(&mut self, slot: usize, value: f64) {
        assert!(slot < CONTACT_DIM);
        self.values[slot] = value;
    }

    /// The 6-DOF rotation values of one joint.
    pub fn joint_rotation(&self, joint: usize) -> [f64; ROT6D_DIM] {
        assert!(joint < JOINT_COUNT);
        let base = CONTACT_DIM + TRANSLATION_DIM + joint * ROT6D_DIM;
        let mut out = [0.0; ROT6D_DIM];
        out.copy_from_slice(&self.values[base..base + ROT6D_DIM]);
        out
    }

    pub fn set_joint_rotation(&mut self, joint: usize, r6: [f64; ROT6D_DIM]) {
        assert!(joint < JOINT_COUNT);
        let base = CONTACT_DIM + TRANSLATION_DIM + joint * ROT6D_DIM;
        self.values[base..base + ROT6D_DIM].copy_from_slice(&r6);
    }
}

/// An ordered sequence of poses at a fixed frame rate.
///
/// Length and frame rate are fixed at construction; frames are stored
/// row-major as an `L x 151` array.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionSequence {
    fps: f64,
    data: Array2<f64>,
}

impl MotionSequence {
    /// Builds a sequence from individual poses. Requires at least one
    /// frame and a positive frame rate.
    pub fn from_poses(fps: f64, poses: &[PoseVector]) -> Result<Self> {
        let mut data = Array2::zeros((poses.len(), POSE_DIM));
        for (i, pose) in poses.iter().enumerate() {
            data.row_mut(i)
                .iter_mut()
                .zip(pose.as_slice())
                .for_each(|(dst, src)| *dst = *src);
        }
        Self::from_array(fps, data)
    }

    /// Builds a sequence from an `L x 151` array of frame rows.
    pub fn from_array(fps: f64, data: Array2<f64>) -> Result<Self> {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::InvalidParameter {
                name: "fps",
                reason: format!("must be positive and finite, got {fps}"),
            });
        }
        if data.nrows() == 0 {
            return Err(Error::SequenceTooShort { needed: 1, got: 0 });
        }
        if data.ncols() != POSE_DIM {
            return Err(Error::ShapeMismatch {
                context: "motion sequence frame width",
                expected: POSE_DIM.to_string(),
                got: data.ncols().to_string(),
            });
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "motion sequence",
            });
        }
        Ok(Self { fps, data })
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    /// Number of frames `L`.
    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        false // L >= 1 by construction
    }

    /// Frame rows as an `L x 151` array.
    pub fn frames(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn pose(&self, frame: usize) -> PoseVector {
        PoseVector {
            values: self.data.row(frame).to_vec(),
        }
    }
}

/// Skeleton tree: 24 parent indices and parent-relative rest offsets in
/// meters. The root (joint 0) uses parent sentinel `-1`; its rest offset
/// is unused because the root is placed at the frame's translation.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    parents: Vec<i32>,
    rest_offsets: Vec<Vector3<f64>>,
}

/// Standard SMPL parent array for the 24-joint tree.
pub const SMPL_PARENTS: [i32; JOINT_COUNT] = [
    -1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21,
];

/// Approximate SMPL-compatible rest offsets (meters, y-up, left = +x).
/// Adequate as a default skeleton configuration; real deployments load
/// measured offsets from a skeleton file.
const DEFAULT_REST_OFFSETS: [[f64; 3]; JOINT_COUNT] = [
    [0.0, 0.0, 0.0],     // 0 pelvis (root)
    [0.09, -0.08, 0.0],  // 1 left hip
    [-0.09, -0.08, 0.0], // 2 right hip
    [0.0, 0.11, 0.0],    // 3 spine1
    [0.04, -0.38, 0.0],  // 4 left knee
    [-0.04, -0.38, 0.0], // 5 right knee
    [0.0, 0.14, 0.0],    // 6 spine2
    [0.0, -0.40, 0.0],   // 7 left ankle
    [0.0, -0.40, 0.0],   // 8 right ankle
    [0.0, 0.06, 0.0],    // 9 spine3
    [0.0, -0.06, 0.13],  // 10 left foot
    [0.0, -0.06, 0.13],  // 11 right foot
    [0.0, 0.22, 0.0],    // 12 neck
    [0.07, 0.11, 0.0],   // 13 left collar
    [-0.07, 0.11, 0.0],  // 14 right collar
    [0.0, 0.09, 0.0],    // 15 head
    [0.09, 0.04, 0.0],   // 16 left shoulder
    [-0.09, 0.04, 0.0],  // 17 right shoulder
    [0.26, 0.0, 0.0],    // 18 left elbow
    [-0.26, 0.0, 0.0],   // 19 right elbow
    [0.25, 0.0, 0.0],    // 20 left wrist
    [-0.25, 0.0, 0.0],   // 21 right wrist
    [0.08, 0.0, 0.0],    // 22 left hand
    [-0.08, 0.0, 0.0],   // 23 right hand
];

impl Skeleton {
    /// Builds a skeleton from parents and offsets. The parent array must
    /// encode an ordered tree: `parents[0] == -1` and `0 <= parents[j] < j`
    /// for every other joint.
    pub fn new(parents: Vec<i32>, rest_offsets: Vec<Vector3<f64>>) -> Result<Self> {
        if parents.len() != JOINT_COUNT || rest_offsets.len() != JOINT_COUNT {
            return Err(Error::ShapeMismatch {
                context: "skeleton",
                expected: format!("{JOINT_COUNT} parents and offsets"),
                got: format!("{} parents, {} offsets", parents.len(), rest_offsets.len()),
            });
        }
        if parents[0] != -1 {
            return Err(Error::InvalidParameter {
                name: "parents",
                reason: format!("root parent must be -1, got {}", parents[0]),
            });
        }
        for (joint, &p) in parents.iter().enumerate().skip(1) {
            if p < 0 || p as usize >= joint {
                return Err(Error::InvalidParameter {
                    name: "parents",
                    reason: format!("joint {joint} has parent {p}; need 0 <= parent < joint"),
                });
            }
        }
        if !rest_offsets.iter().all(|o| o.iter().all(|v| v.is_finite())) {
            return Err(Error::NonFinite {
                context: "skeleton rest offsets",
            });
        }
        Ok(Self {
            parents,
            rest_offsets,
        })
    }

    /// The default SMPL-compatible 24-joint skeleton.
    pub fn smpl_default() -> Self {
        Self {
            parents: SMPL_PARENTS.to_vec(),
            rest_offsets: DEFAULT_REST_OFFSETS
                .iter()
                .map(|o| Vector3::new(o[0], o[1], o[2]))
                .collect(),
        }
    }

    pub fn parents(&self) -> &[i32] {
        &self.parents
    }

    pub fn rest_offsets(&self) -> &[Vector3<f64>] {
        &self.rest_offsets
    }

    /// Parent of a non-root joint.
    pub fn parent_of(&self, joint: usize) -> Option<usize> {
        let p = self.parents[joint];
        (p >= 0).then_some(p as usize)
    }
}

/// Global Cartesian joint positions, `L x 24 x 3`, meters.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPositions {
    data: Array3<f64>,
}

impl JointPositions {
    /// Wraps an `L x 24 x 3` position array; all values must be finite.
    pub fn new(data: Array3<f64>) -> Result<Self> {
        let shape = data.shape();
        if shape[1] != JOINT_COUNT || shape[2] != 3 {
            return Err(Error::ShapeMismatch {
                context: "joint positions",
                expected: format!("(L, {JOINT_COUNT}, 3)"),
                got: format!("{shape:?}"),
            });
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "joint positions",
            });
        }
        Ok(Self { data })
    }

    /// Number of frames.
    pub fn len(&self) -> usize {
        self.data.shape()[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn array(&self) -> &Array3<f64> {
        &self.data
    }

    pub fn joint(&self, frame: usize, joint: usize) -> Vector3<f64> {
        Vector3::new(
            self.data[[frame, joint, 0]],
            self.data[[frame, joint, 1]],
            self.data[[frame, joint, 2]],
        )
    }
}

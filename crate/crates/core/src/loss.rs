//! Training-loss suite: reconstruction, kinematic terms, and the
//! beat alignment loss.
//!
//! Kinematic terms compare sequences both in the raw 151-D
//! representation and after forward kinematics; derivatives use the
//! shared forward-difference operator so per-frame sums stay aligned.
//! The beat alignment loss weights the per-frame squared beat-distance
//! error by a shrinkage sigmoid (stressing badly aligned frames) and an
//! exponential beat-proximity factor.

use serde::{Deserialize, Serialize};

use crate::beat::{adjacent_intervals, BeatDistanceVector, BeatGrid};
use crate::error::{Error, Result};
use crate::motion::{
    forward_kinematics, joint_acceleration, joint_velocity, second_time_derivative,
    time_derivative, MotionSequence, Skeleton, CONTACT_JOINTS,
};

/// Loss weights and beat-loss shape parameters.
///
/// `a` and `c` steer the shrinkage sigmoid (steepness and relative-error
/// threshold); `epsilon_b` guards the relative-error denominator at beat
/// frames where the true distance is zero. `beat_normalize` divides the
/// beat loss by the sequence length instead of leaving it as a plain sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub lambda_joint: f64,
    pub lambda_vel: f64,
    pub lambda_contact: f64,
    pub lambda_acc: f64,
    pub lambda_kin: f64,
    pub lambda_beat: f64,
    pub a: f64,
    pub c: f64,
    pub epsilon_b: f64,
    pub beat_normalize: bool,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_joint: 1.0,
            lambda_vel: 2.5,
            lambda_contact: 10.0,
            lambda_acc: 0.1,
            lambda_kin: 1.0,
            lambda_beat: 0.5,
            a: 10.0,
            c: 0.2,
            epsilon_b: 1.0,
            beat_normalize: false,
        }
    }
}

/// Per-component loss breakdown plus the combined total and the weights
/// used to produce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub simple: f64,
    pub joint: f64,
    pub vel: f64,
    pub contact: f64,
    pub acc: f64,
    pub kin: f64,
    pub beat: f64,
    pub total: f64,
    pub weights: LossWeights,
}

fn check_pair(x0: &MotionSequence, x0_hat: &MotionSequence) -> Result<()> {
    if x0.len() != x0_hat.len() {
        return Err(Error::ShapeMismatch {
            context: "loss inputs",
            expected: format!("{} frames", x0.len()),
            got: format!("{} frames", x0_hat.len()),
        });
    }
    if x0.fps() != x0_hat.fps() {
        return Err(Error::InvalidParameter {
            name: "fps",
            reason: format!("sequences disagree: {} vs {}", x0.fps(), x0_hat.fps()),
        });
    }
    Ok(())
}

/// Squared-error reconstruction loss: mean over frames and coordinates.
pub fn simple_loss(x0: &MotionSequence, x0_hat: &MotionSequence) -> Result<f64> {
    check_pair(x0, x0_hat)?;
    let diff = x0.frames() - x0_hat.frames();
    Ok(diff.iter().map(|v| v * v).sum::<f64>() / diff.len() as f64)
}

fn sum_sq(diff: impl IntoIterator<Item = f64>) -> f64 {
    diff.into_iter().map(|v| v * v).sum()
}

/// Joint-position loss: per-frame squared FK-position difference summed
/// over joints and coordinates, averaged over frames.
pub fn joint_loss(x0: &MotionSequence, x0_hat: &MotionSequence, skel: &Skeleton) -> Result<f64> {
    check_pair(x0, x0_hat)?;
    let p = forward_kinematics(x0, skel)?;
    let q = forward_kinematics(x0_hat, skel)?;
    let diff = p.array() - q.array();
    Ok(sum_sq(diff.iter().copied()) / x0.len() as f64)
}

/// Velocity loss: representation-space derivative error plus FK-space
/// derivative error, summed per frame and averaged over frames.
pub fn vel_loss(x0: &MotionSequence, x0_hat: &MotionSequence, skel: &Skeleton) -> Result<f64> {
    check_pair(x0, x0_hat)?;
    let fps = x0.fps();
    let rep = time_derivative(x0.frames(), fps)? - time_derivative(x0_hat.frames(), fps)?;
    let v0 = joint_velocity(&forward_kinematics(x0, skel)?, fps)?;
    let v1 = joint_velocity(&forward_kinematics(x0_hat, skel)?, fps)?;
    let fk = &v0 - &v1;
    Ok((sum_sq(rep.iter().copied()) + sum_sq(fk.iter().copied())) / x0.len() as f64)
}

/// Contact consistency loss: squared foot-joint velocities, each scaled
/// by the predicted contact value of its slot, averaged over frames.
///
/// Contact slots follow the pose layout (left heel, right heel, left
/// toe, right toe) and map to [`CONTACT_JOINTS`]. Contact values are
/// used raw, without thresholding.
pub fn contact_loss(x0_hat: &MotionSequence, skel: &Skeleton) -> Result<f64> {
    let fps = x0_hat.fps();
    let vel = joint_velocity(&forward_kinematics(x0_hat, skel)?, fps)?;
    let frames = x0_hat.len();
    let mut total = 0.0;
    for i in 0..frames {
        let contacts = x0_hat.pose(i).contacts();
        for (slot, &joint) in CONTACT_JOINTS.iter().enumerate() {
            let g = contacts[slot];
            let sq_speed: f64 = (0..3).map(|axis| vel[[i, joint, axis]].powi(2)).sum();
            total += g * g * sq_speed;
        }
    }
    Ok(total / frames as f64)
}

/// Acceleration loss: second-difference analogue of [`vel_loss`].
pub fn acc_loss(x0: &MotionSequence, x0_hat: &MotionSequence, skel: &Skeleton) -> Result<f64> {
    check_pair(x0, x0_hat)?;
    if x0.len() < 3 {
        return Err(Error::SequenceTooShort {
            needed: 3,
            got: x0.len(),
        });
    }
    let fps = x0.fps();
    let rep =
        second_time_derivative(x0.frames(), fps)? - second_time_derivative(x0_hat.frames(), fps)?;
    let a0 = joint_acceleration(&forward_kinematics(x0, skel)?, fps)?;
    let a1 = joint_acceleration(&forward_kinematics(x0_hat, skel)?, fps)?;
    let fk = &a0 - &a1;
    Ok((sum_sq(rep.iter().copied()) + sum_sq(fk.iter().copied())) / x0.len() as f64)
}

/// Weighted combination of the four kinematic components.
pub fn combine_kin(joint: f64, vel: f64, contact: f64, acc: f64, w: &LossWeights) -> f64 {
    w.lambda_joint * joint + w.lambda_vel * vel + w.lambda_contact * contact + w.lambda_acc * acc
}

/// Overall kinematic loss over a ground-truth/prediction pair.
pub fn kin_loss(
    x0: &MotionSequence,
    x0_hat: &MotionSequence,
    skel: &Skeleton,
    w: &LossWeights,
) -> Result<f64> {
    Ok(combine_kin(
        joint_loss(x0, x0_hat, skel)?,
        vel_loss(x0, x0_hat, skel)?,
        contact_loss(x0_hat, skel)?,
        acc_loss(x0, x0_hat, skel)?,
        w,
    ))
}

/// Shrinkage weight: sigmoid in the relative beat-distance error,
/// increasing for worse-aligned frames.
fn shrinkage_weight(b: f64, b_hat: f64, w: &LossWeights) -> f64 {
    let rel = (b - b_hat).abs() / b.max(w.epsilon_b);
    1.0 / (1.0 + (w.a * (w.c - rel)).exp())
}

/// Beat alignment loss over ground-truth distances `b` and predicted
/// distances `b_hat`.
///
/// Per frame: `w_s * w_b * (b - b_hat)^2` with `w_s` the shrinkage
/// weight and `w_b = exp(-2 b / d)` the beat-proximity weight computed
/// from the designated grid. Plain sum over frames, or mean when
/// `beat_normalize` is set.
pub fn beat_loss(
    b: &BeatDistanceVector,
    b_hat: &[f64],
    grid: &BeatGrid,
    w: &LossWeights,
) -> Result<f64> {
    if b.len() != b_hat.len() || b.len() != grid.length() {
        return Err(Error::ShapeMismatch {
            context: "beat loss",
            expected: format!("{} frames", grid.length()),
            got: format!("b: {}, b_hat: {}", b.len(), b_hat.len()),
        });
    }
    if b_hat.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "predicted beat distances",
        });
    }
    if w.epsilon_b.is_nan() || w.epsilon_b <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "epsilon_b",
            reason: format!("must be positive, got {}", w.epsilon_b),
        });
    }
    let intervals = adjacent_intervals(grid)?;
    let mut total = 0.0;
    for i in 0..b.len() {
        let bi = b.values()[i] as f64;
        let err = bi - b_hat[i];
        let w_b = (-2.0 * bi / intervals[i] as f64).exp();
        total += shrinkage_weight(bi, b_hat[i], w) * w_b * err * err;
    }
    if w.beat_normalize {
        total /= b.len() as f64;
    }
    Ok(total)
}

/// Overall combination of the three top-level components.
pub fn combine_total(simple: f64, kin: f64, beat: f64, w: &LossWeights) -> f64 {
    simple + w.lambda_kin * kin + w.lambda_beat * beat
}

/// Full loss evaluation with per-component breakdown.
#[allow(clippy::too_many_arguments)]
pub fn total_loss(
    x0: &MotionSequence,
    x0_hat: &MotionSequence,
    skel: &Skeleton,
    b: &BeatDistanceVector,
    b_hat: &[f64],
    grid: &BeatGrid,
    w: &LossWeights,
) -> Result<LossReport> {
    let simple = simple_loss(x0, x0_hat)?;
    let joint = joint_loss(x0, x0_hat, skel)?;
    let vel = vel_loss(x0, x0_hat, skel)?;
    let contact = contact_loss(x0_hat, skel)?;
    let acc = acc_loss(x0, x0_hat, skel)?;
    let kin = combine_kin(joint, vel, contact, acc, w);
    let beat = beat_loss(b, b_hat, grid, w)?;
    Ok(LossReport {
        simple,
        joint,
        vel,
        contact,
        acc,
        kin,
        beat,
        total: combine_total(simple, kin, beat, w),
        weights: *w,
    })
}

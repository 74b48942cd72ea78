//! Finite-difference kinematic quantities on joint positions.
//!
//! Derivatives use the forward difference scaled by the frame rate,
//! evaluated wherever real samples support it, with last-element
//! replication so derivative sequences keep length `L` and per-frame
//! loss sums stay aligned across orders.

use ndarray::{Array2, Array3, Axis};

use super::{JointPositions, JOINT_COUNT};
use crate::error::{Error, Result};

/// Forward-difference time derivative of an `L x D` array, `fps`-scaled.
/// The last row replicates the final computed difference. Shared by
/// representation-space and position-space loss terms.
pub fn time_derivative(values: &Array2<f64>, fps: f64) -> Result<Array2<f64>> {
    let frames = values.nrows();
    if frames < 2 {
        return Err(Error::SequenceTooShort {
            needed: 2,
            got: frames,
        });
    }
    let mut out = Array2::zeros(values.raw_dim());
    for i in 0..frames - 1 {
        let diff = (&values.row(i + 1) - &values.row(i)) * fps;
        out.row_mut(i).assign(&diff);
    }
    let last = out.row(frames - 2).to_owned();
    out.row_mut(frames - 1).assign(&last);
    Ok(out)
}

/// Second-order analogue of [`time_derivative`]: forward differences of
/// the unpadded first derivative, last two rows replicated.
pub fn second_time_derivative(values: &Array2<f64>, fps: f64) -> Result<Array2<f64>> {
    let frames = values.nrows();
    if frames < 3 {
        return Err(Error::SequenceTooShort {
            needed: 3,
            got: frames,
        });
    }
    let mut out = Array2::zeros(values.raw_dim());
    for i in 0..frames - 2 {
        let diff = (&values.row(i + 2) - &(&values.row(i + 1) * 2.0) + values.row(i)) * (fps * fps);
        out.row_mut(i).assign(&diff);
    }
    let last = out.row(frames - 3).to_owned();
    out.row_mut(frames - 2).assign(&last);
    out.row_mut(frames - 1).assign(&last);
    Ok(out)
}

/// Per-joint velocities in m/s, `L x 24 x 3`. Needs `L >= 2`.
pub fn joint_velocity(pos: &JointPositions, fps: f64) -> Result<Array3<f64>> {
    let values = pos.array();
    let frames = values.shape()[0];
    if frames < 2 {
        return Err(Error::SequenceTooShort {
            needed: 2,
            got: frames,
        });
    }
    let mut out = Array3::zeros(values.raw_dim());
    for i in 0..frames - 1 {
        let diff = (&values.index_axis(Axis(0), i + 1) - &values.index_axis(Axis(0), i)) * fps;
        out.index_axis_mut(Axis(0), i).assign(&diff);
    }
    let last = out.index_axis(Axis(0), frames - 2).to_owned();
    out.index_axis_mut(Axis(0), frames - 1).assign(&last);
    Ok(out)
}

/// Per-joint accelerations in m/s^2, `L x 24 x 3`: forward difference of
/// the unpadded [`joint_velocity`], last two frames replicated. Needs
/// `L >= 3`.
pub fn joint_acceleration(pos: &JointPositions, fps: f64) -> Result<Array3<f64>> {
    let values = pos.array();
    let frames = values.shape()[0];
    if frames < 3 {
        return Err(Error::SequenceTooShort {
            needed: 3,
            got: frames,
        });
    }
    let mut out = Array3::zeros(values.raw_dim());
    for i in 0..frames - 2 {
        let diff = (&values.index_axis(Axis(0), i + 2)
            - &(&values.index_axis(Axis(0), i + 1) * 2.0)
            + values.index_axis(Axis(0), i))
            * (fps * fps);
        out.index_axis_mut(Axis(0), i).assign(&diff);
    }
    let last = out.index_axis(Axis(0), frames - 3).to_owned();
    out.index_axis_mut(Axis(0), frames - 2).assign(&last);
    out.index_axis_mut(Axis(0), frames - 1).assign(&last);
    Ok(out)
}

/// Per-frame mean over the 24 joints of the velocity-vector norm.
pub fn mean_joint_speed(pos: &JointPositions, fps: f64) -> Result<Vec<f64>> {
    let vel = joint_velocity(pos, fps)?;
    let frames = vel.shape()[0];
    let mut out = Vec::with_capacity(frames);
    for i in 0..frames {
        let mut sum = 0.0;
        for j in 0..JOINT_COUNT {
            let v = [vel[[i, j, 0]], vel[[i, j, 1]], vel[[i, j, 2]]];
            sum += (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        }
        out.push(sum / JOINT_COUNT as f64);
    }
    Ok(out)
}

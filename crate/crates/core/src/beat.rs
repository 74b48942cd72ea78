//! Beat grids and the nearest-beat-distance representation.
//!
//! A beat grid marks a subset of frames as beats. Dense conditions are
//! derived from it: the per-frame distance to the nearest beat and the
//! interval between the two beats enclosing a frame. Motion beats are
//! recovered from a mean joint-speed curve as local minima.

use crate::error::{Error, Result};
use crate::motion::{forward_kinematics, mean_joint_speed, MotionSequence, Skeleton};

/// Beat-frame indices over a sequence of `length` frames.
///
/// Indices are strictly increasing and all below `length`. Grids may be
/// empty (nothing qualified as a beat); distance and interval operations
/// then return [`Error::NoBeats`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeatGrid {
    length: usize,
    beat_frames: Vec<usize>,
}

impl BeatGrid {
    pub fn new(length: usize, beat_frames: Vec<usize>) -> Result<Self> {
        if length == 0 {
            return Err(Error::InvalidParameter {
                name: "length",
                reason: "must be at least 1".into(),
            });
        }
        for pair in beat_frames.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::InvalidParameter {
                    name: "beat_frames",
                    reason: format!("indices must be strictly increasing, got {pair:?}"),
                });
            }
        }
        if let Some(&last) = beat_frames.last() {
            if last >= length {
                return Err(Error::FrameOutOfRange {
                    index: last,
                    length,
                });
            }
        }
        Ok(Self {
            length,
            beat_frames,
        })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn beat_frames(&self) -> &[usize] {
        &self.beat_frames
    }

    pub fn is_empty(&self) -> bool {
        self.beat_frames.is_empty()
    }

    fn require_beats(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::NoBeats)
        } else {
            Ok(())
        }
    }
}

/// Per-frame integer distances to the nearest beat frame.
///
/// Zero exactly at beat frames; adjacent entries differ by at most one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeatDistanceVector {
    values: Vec<usize>,
}

impl BeatDistanceVector {
    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Distances as reals, the form consumed by the loss module.
    pub fn as_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }
}

/// Distance from every frame to its nearest beat frame.
pub fn nearest_beat_distance(grid: &BeatGrid) -> Result<BeatDistanceVector> {
    grid.require_beats()?;
    let beats = grid.beat_frames();
    let mut values = Vec::with_capacity(grid.length());
    let mut cursor = 0usize; // index of first beat >= i, maintained incrementally
    for i in 0..grid.length() {
        while cursor < beats.len() && beats[cursor] < i {
            cursor += 1;
        }
        let ahead = beats.get(cursor).map(|&b| b - i);
        let behind = cursor.checked_sub(1).map(|c| i - beats[c]);
        let d = match (behind, ahead) {
            (Some(b), Some(a)) => b.min(a),
            (Some(b), None) => b,
            (None, Some(a)) => a,
            (None, None) => unreachable!("grid verified nonempty"),
        };
        values.push(d);
    }
    Ok(BeatDistanceVector { values })
}

/// Number of frames between the two beats enclosing frame `i`.
///
/// Frames on or after a beat `b_r` and before the next beat use the
/// interval starting at `b_r`. Frames before the first beat use the
/// first interior interval, frames at or past the last beat use the
/// last one. A single-beat grid yields the sequence length, keeping the
/// value positive and finite.
pub fn adjacent_interval(grid: &BeatGrid, i: usize) -> Result<usize> {
    grid.require_beats()?;
    if i >= grid.length() {
        return Err(Error::FrameOutOfRange {
            index: i,
            length: grid.length(),
        });
    }
    let beats = grid.beat_frames();
    if beats.len() == 1 {
        return Ok(grid.length());
    }
    let segment = match beats.binary_search(&i) {
        Ok(pos) => pos,                    // i is a beat: interval starting there
        Err(pos) => pos.saturating_sub(1), // i between beats[pos-1] and beats[pos]
    };
    let segment = segment.min(beats.len() - 2);
    Ok(beats[segment + 1] - beats[segment])
}

/// [`adjacent_interval`] evaluated at every frame.
pub fn adjacent_intervals(grid: &BeatGrid) -> Result<Vec<usize>> {
    (0..grid.length())
        .map(|i| adjacent_interval(grid, i))
        .collect()
}

/// Motion-beat extraction from a speed curve.
///
/// Beats are strict local minima of the (optionally box-smoothed) curve
/// whose prominence reaches `min_prominence`. Endpoints never qualify.
/// May return an empty grid.
pub fn extract_motion_beats(
    speed: &[f64],
    min_prominence: f64,
    smooth_radius: usize,
) -> Result<BeatGrid> {
    let len = speed.len();
    if len < 3 {
        return Err(Error::SequenceTooShort {
            needed: 3,
            got: len,
        });
    }
    if min_prominence.is_nan() || min_prominence < 0.0 {
        return Err(Error::InvalidParameter {
            name: "min_prominence",
            reason: format!("must be nonnegative, got {min_prominence}"),
        });
    }
    if speed.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "speed curve",
        });
    }

    let curve = box_smooth(speed, smooth_radius);
    let mut beats = Vec::new();
    for i in 1..len - 1 {
        let strict_min = curve[i] < curve[i - 1] && curve[i] < curve[i + 1];
        if strict_min && prominence_of_minimum(&curve, i) >= min_prominence {
            beats.push(i);
        }
    }
    BeatGrid::new(len, beats)
}

/// Moving average with window `[i - radius, i + radius]`, truncated at
/// the sequence boundaries.
fn box_smooth(values: &[f64], radius: usize) -> Vec<f64> {
    if radius == 0 {
        return values.to_vec();
    }
    let len = values.len();
    (0..len)
        .map(|i| {
            let lo = i.saturating_sub(radius);
            let hi = (i + radius).min(len - 1);
            let window = &values[lo..=hi];
            window.iter().sum::<f64>() / window.len() as f64
        })
        .collect()
}

/// Prominence of a local minimum: on each side, walk until a value
/// strictly below the minimum (or the boundary) and record the maximum
/// passed; prominence is the lower of the two maxima minus the minimum.
fn prominence_of_minimum(curve: &[f64], i: usize) -> f64 {
    let value = curve[i];
    let mut left_max = value;
    for j in (0..i).rev() {
        if curve[j] < value {
            break;
        }
        left_max = left_max.max(curve[j]);
    }
    let mut right_max = value;
    for &c in &curve[i + 1..] {
        if c < value {
            break;
        }
        right_max = right_max.max(c);
    }
    left_max.min(right_max) - value
}

/// Converts beat times in seconds to a frame-index grid.
///
/// Frames are `round(time * fps)` with ties away from zero, clamped to
/// `[0, L)`; duplicates collapse. Times must be nondecreasing and lie in
/// `[0, L / fps)`.
pub fn beats_from_times(times_sec: &[f64], fps: f64, length: usize) -> Result<BeatGrid> {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Error::InvalidParameter {
            name: "fps",
            reason: format!("must be positive and finite, got {fps}"),
        });
    }
    let max_time = length as f64 / fps;
    let mut frames: Vec<usize> = Vec::with_capacity(times_sec.len());
    for pair in times_sec.windows(2) {
        if pair[0] > pair[1] {
            return Err(Error::InvalidParameter {
                name: "times_sec",
                reason: format!("must be nondecreasing, got {pair:?}"),
            });
        }
    }
    for &t in times_sec {
        if !t.is_finite() || t < 0.0 || t >= max_time {
            return Err(Error::InvalidParameter {
                name: "times_sec",
                reason: format!("time {t} outside [0, {max_time})"),
            });
        }
        let frame = ((t * fps).round() as usize).min(length - 1);
        if frames.last() != Some(&frame) {
            frames.push(frame);
        }
    }
    BeatGrid::new(length, frames)
}

/// Parameters of the kinematic beat-distance estimator.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct BeatExtractParams {
    /// Minimum prominence a speed minimum needs to count as a beat.
    pub min_prominence: f64,
    /// Box-smoothing radius applied to the speed curve before detection.
    pub smooth_radius: usize,
}

impl Default for BeatExtractParams {
    fn default() -> Self {
        Self {
            min_prominence: 0.0,
            smooth_radius: 1,
        }
    }
}

/// Output of [`estimate_beat_distance`]. When no motion beats are found
/// the distances are a sentinel all-`L` vector and `no_beats` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatDistanceEstimate {
    pub distances: BeatDistanceVector,
    pub motion_beats: BeatGrid,
    pub no_beats: bool,
}

/// Deterministic beat-distance estimator: forward kinematics, mean joint
/// speed, speed-minimum beat extraction, then nearest-beat distances.
pub fn estimate_beat_distance(
    seq: &MotionSequence,
    skel: &Skeleton,
    params: &BeatExtractParams,
) -> Result<BeatDistanceEstimate> {
    let positions = forward_kinematics(seq, skel)?;
    let speed = mean_joint_speed(&positions, seq.fps())?;
    let motion_beats = extract_motion_beats(&speed, params.min_prominence, params.smooth_radius)?;
    if motion_beats.is_empty() {
        let len = seq.len();
        return Ok(BeatDistanceEstimate {
            distances: BeatDistanceVector {
                values: vec![len; len],
            },
            motion_beats,
            no_beats: true,
        });
    }
    let distances = nearest_beat_distance(&motion_beats)?;
    Ok(BeatDistanceEstimate {
        distances,
        motion_beats,
        no_beats: false,
    })
}

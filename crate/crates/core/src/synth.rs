//! Synthetic motion generation and keyframe sampling for experiments
//! and tests.

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::KeyframeMask;
use crate::motion::{MotionSequence, PoseVector};

/// Kind of synthetic sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKind {
    /// Identical frames, feet planted.
    Static,
    /// Root translating at constant speed.
    Linear,
    /// Root speed follows a triangle wave with strict minima every
    /// `period` frames, so extracted motion beats land exactly on the
    /// period multiples.
    Periodic,
}

/// Parameters of the synthetic generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    /// Root speed in m/s for the linear kind.
    pub speed: f64,
    /// Frames between speed minima for the periodic kind.
    pub period: usize,
    /// Speed at the minima of the periodic profile, m/s.
    pub base_speed: f64,
    /// Speed gain per frame of distance from the nearest minimum, m/s.
    pub amplitude: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            speed: 1.0,
            period: 15,
            base_speed: 0.1,
            amplitude: 0.25,
        }
    }
}

/// Frames where the periodic profile attains its speed minima, endpoints
/// excluded: the beats the generated motion is constructed to carry.
pub fn periodic_beat_frames(length: usize, period: usize) -> Vec<usize> {
    (1..length.saturating_sub(1))
        .filter(|i| i % period == 0)
        .collect()
}

fn heading(seed: u64) -> Vector3<f64> {
    // deterministic travel direction in the horizontal plane
    let angle = (seed % 360) as f64 * std::f64::consts::PI / 180.0;
    Vector3::new(angle.cos(), 0.0, angle.sin())
}

/// Deterministic synthetic sequences with analytically known speeds and
/// beats. The seed picks the travel direction; it never changes speed
/// profiles, so derived quantities stay exact.
pub fn synth_motion(
    kind: SynthKind,
    length: usize,
    fps: f64,
    params: &SynthParams,
    seed: u64,
) -> Result<MotionSequence> {
    if length == 0 {
        return Err(Error::SequenceTooShort { needed: 1, got: 0 });
    }
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Error::InvalidParameter {
            name: "fps",
            reason: format!("must be positive and finite, got {fps}"),
        });
    }
    match kind {
        SynthKind::Static => {
            let mut pose = PoseVector::identity();
            for slot in 0..4 {
                pose.set_contact(slot, 1.0);
            }
            MotionSequence::from_poses(fps, &vec![pose; length])
        }
        SynthKind::Linear => {
            if !(params.speed.is_finite() && params.speed >= 0.0) {
                return Err(Error::InvalidParameter {
                    name: "speed",
                    reason: format!("must be nonnegative, got {}", params.speed),
                });
            }
            let dir = heading(seed);
            let poses: Vec<PoseVector> = (0..length)
                .map(|i| {
                    let mut p = PoseVector::identity();
                    p.set_root_translation(dir * (params.speed * i as f64 / fps));
                    p
                })
                .collect();
            MotionSequence::from_poses(fps, &poses)
        }
        SynthKind::Periodic => {
            if params.period < 2 {
                return Err(Error::InvalidParameter {
                    name: "period",
                    reason: format!("must be at least 2 frames, got {}", params.period),
                });
            }
            if !(params.base_speed >= 0.0 && params.amplitude > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "amplitude",
                    reason: "base_speed must be nonnegative and amplitude positive".into(),
                });
            }
            let dir = heading(seed);
            // triangle distance to the nearest period multiple
            let tri = |i: usize| -> f64 {
                let m = i % params.period;
                m.min(params.period - m) as f64
            };
            let mut poses = Vec::with_capacity(length);
            let mut position = Vector3::zeros();
            for i in 0..length {
                let mut p = PoseVector::identity();
                p.set_root_translation(position);
                poses.push(p);
                let speed = params.base_speed + params.amplitude * tri(i);
                position += dir * (speed / fps);
            }
            MotionSequence::from_poses(fps, &poses)
        }
    }
}

/// Uniformly samples `round(ratio * L)` distinct keyframes without
/// replacement, deterministically per seed.
pub fn sample_keyframes(length: usize, ratio: f64, seed: u64) -> Result<KeyframeMask> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "ratio",
            reason: format!("must lie in (0, 1], got {ratio}"),
        });
    }
    if length == 0 {
        return Err(Error::InvalidParameter {
            name: "length",
            reason: "must be at least 1".into(),
        });
    }
    let count = (ratio * length as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen = rand::seq::index::sample(&mut rng, length, count).into_vec();
    KeyframeMask::from_keyframes(length, &chosen)
}

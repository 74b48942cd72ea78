//! Evaluation metrics: beat alignment, physical foot contact, key-pose
//! distance, beat assignment precision, and kinetic diversity.
//!
//! Every parametrized metric reads its parameters from [`MetricConfig`]
//! and reports are expected to carry that configuration alongside the
//! values, since several of the parameters (Gaussian width, matching
//! tolerance, direction) change the numbers materially.

use serde::{Deserialize, Serialize};

use crate::beat::BeatGrid;
use crate::error::{Error, Result};
use crate::mask::KeyframeMask;
use crate::motion::{
    forward_kinematics, joint_acceleration, joint_velocity, JointPositions, MotionSequence,
    Skeleton, FOOT_JOINTS, JOINT_COUNT,
};

/// Direction of the beat-alignment average: which grid supplies the
/// beats being scored against nearest beats of the other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BasDirection {
    #[default]
    MotionToMusic,
    MusicToMotion,
}

/// Whether beat assignment scores generated beats against designated
/// ones (precision) or the reverse (recall).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BapMode {
    #[default]
    Precision,
    Recall,
}

/// Metric parameters, recorded alongside every emitted value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    /// Gaussian width of the beat-alignment kernel, in frames.
    pub bas_sigma: f64,
    /// Matching window for beat assignment, in frames.
    pub bap_tolerance: usize,
    pub bas_direction: BasDirection,
    pub bap_mode: BapMode,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            bas_sigma: 3.0,
            bap_tolerance: 3,
            bas_direction: BasDirection::default(),
            bap_mode: BapMode::default(),
        }
    }
}

/// Metric values plus the configuration that produced them. Metrics the
/// caller had no inputs for stay unset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub bas: Option<f64>,
    pub pfc: Option<f64>,
    pub kpd: Option<f64>,
    pub bap: Option<f64>,
    pub div_k: Option<f64>,
    /// Set when beat assignment was requested but the source grid had
    /// no beats; the score is then reported as 0.
    pub bap_degenerate: Option<bool>,
    pub config: MetricConfig,
}

impl MetricReport {
    pub fn empty(config: MetricConfig) -> Self {
        Self {
            bas: None,
            pfc: None,
            kpd: None,
            bap: None,
            div_k: None,
            bap_degenerate: None,
            config,
        }
    }
}

/// Beat alignment score: mean Gaussian kernel of the distance from each
/// source beat to its nearest destination beat. 1 exactly when every
/// source beat lands on a destination beat.
pub fn beat_alignment_score(
    motion_beats: &BeatGrid,
    music_beats: &BeatGrid,
    cfg: &MetricConfig,
) -> Result<f64> {
    if motion_beats.length() != music_beats.length() {
        return Err(Error::ShapeMismatch {
            context: "beat alignment score",
            expected: format!("{} frames", motion_beats.length()),
            got: format!("{} frames", music_beats.length()),
        });
    }
    if motion_beats.is_empty() || music_beats.is_empty() {
        return Err(Error::NoBeats);
    }
    if cfg.bas_sigma.is_nan() || cfg.bas_sigma <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "bas_sigma",
            reason: format!("must be positive, got {}", cfg.bas_sigma),
        });
    }
    let (source, dest) = match cfg.bas_direction {
        BasDirection::MotionToMusic => (motion_beats, music_beats),
        BasDirection::MusicToMotion => (music_beats, motion_beats),
    };
    let denom = 2.0 * cfg.bas_sigma * cfg.bas_sigma;
    let total: f64 = source
        .beat_frames()
        .iter()
        .map(|&t| {
            let nearest_sq = dest
                .beat_frames()
                .iter()
                .map(|&u| {
                    let d = t.abs_diff(u) as f64;
                    d * d
                })
                .fold(f64::INFINITY, f64::min);
            (-nearest_sq / denom).exp()
        })
        .sum();
    Ok(total / source.beat_frames().len() as f64)
}

/// Physical foot contact score.
///
/// Per frame, the center-of-mass acceleration (root joint, vertical
/// component clamped upward since gravity explains downward motion) is
/// multiplied by both foot speeds; contact with the ground should zero
/// one factor whenever the body accelerates. Normalized by the peak
/// COM acceleration and the frame count; 0 when the COM never
/// accelerates.
pub fn physical_foot_contact(pos: &JointPositions, fps: f64) -> Result<f64> {
    let vel = joint_velocity(pos, fps)?;
    let acc = joint_acceleration(pos, fps)?;
    let frames = pos.len();

    let mut com_norm = Vec::with_capacity(frames);
    for i in 0..frames {
        let ax = acc[[i, 0, 0]];
        let ay = acc[[i, 0, 1]].max(0.0);
        let az = acc[[i, 0, 2]];
        com_norm.push((ax * ax + ay * ay + az * az).sqrt());
    }
    let max_acc = com_norm.iter().copied().fold(0.0f64, f64::max);
    if max_acc == 0.0 {
        return Ok(0.0);
    }

    let speed_of = |i: usize, joint: usize| -> f64 {
        (0..3)
            .map(|axis| vel[[i, joint, axis]].powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let total: f64 = (0..frames)
        .map(|i| com_norm[i] * speed_of(i, FOOT_JOINTS[0]) * speed_of(i, FOOT_JOINTS[1]))
        .sum();
    Ok(total / (frames as f64 * max_acc))
}

/// Key pose distance: mean squared error of root-relative joint
/// positions over the keyframes only.
pub fn keypose_distance(
    gen: &JointPositions,
    reference: &JointPositions,
    mask: &KeyframeMask,
) -> Result<f64> {
    if gen.len() != reference.len() || gen.len() != mask.len() {
        return Err(Error::ShapeMismatch {
            context: "key pose distance",
            expected: format!("{} frames", gen.len()),
            got: format!("reference {}, mask {}", reference.len(), mask.len()),
        });
    }
    let keyframes = mask.keyframes();
    if keyframes.is_empty() {
        return Err(Error::InvalidParameter {
            name: "mask",
            reason: "key pose distance needs at least one keyframe".into(),
        });
    }
    let mut total = 0.0;
    for &frame in &keyframes {
        let g_root = gen.joint(frame, 0);
        let r_root = reference.joint(frame, 0);
        for joint in 0..JOINT_COUNT {
            let g = gen.joint(frame, joint) - g_root;
            let r = reference.joint(frame, joint) - r_root;
            total += (g - r).norm_squared();
        }
    }
    Ok(total / (keyframes.len() * JOINT_COUNT * 3) as f64)
}

/// Beat assignment score with its degeneracy flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BapScore {
    pub value: f64,
    /// True when the source grid had no beats to score.
    pub degenerate: bool,
}

/// Fraction of generated beats lying within the tolerance of some
/// designated beat (precision mode), or of designated beats matched by
/// some generated beat (recall mode). An empty source grid yields 0
/// with the degenerate flag set.
pub fn beat_assignment_precision(
    gen_beats: &BeatGrid,
    designated: &BeatGrid,
    cfg: &MetricConfig,
) -> BapScore {
    let (source, dest) = match cfg.bap_mode {
        BapMode::Precision => (gen_beats, designated),
        BapMode::Recall => (designated, gen_beats),
    };
    if source.is_empty() {
        return BapScore {
            value: 0.0,
            degenerate: true,
        };
    }
    let matched = source
        .beat_frames()
        .iter()
        .filter(|&&s| {
            dest.beat_frames()
                .iter()
                .any(|&d| s.abs_diff(d) <= cfg.bap_tolerance)
        })
        .count();
    BapScore {
        value: matched as f64 / source.beat_frames().len() as f64,
        degenerate: false,
    }
}

/// Per-joint mean squared speed, the 24-dimensional kinetic feature of
/// one sequence.
pub fn kinetic_features(seq: &MotionSequence, skel: &Skeleton) -> Result<Vec<f64>> {
    let pos = forward_kinematics(seq, skel)?;
    let vel = joint_velocity(&pos, seq.fps())?;
    let frames = seq.len();
    let mut feat = vec![0.0; JOINT_COUNT];
    for (joint, f) in feat.iter_mut().enumerate() {
        let mut acc = 0.0;
        for i in 0..frames {
            acc += (0..3)
                .map(|axis| vel[[i, joint, axis]].powi(2))
                .sum::<f64>();
        }
        *f = acc / frames as f64;
    }
    Ok(feat)
}

/// Mean pairwise Euclidean distance between kinetic features of the
/// given sequences. Needs at least two sequences.
pub fn kinetic_diversity(seqs: &[MotionSequence], skel: &Skeleton) -> Result<f64> {
    if seqs.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "sequences",
            reason: format!("diversity needs at least 2 sequences, got {}", seqs.len()),
        });
    }
    let features: Vec<Vec<f64>> = seqs
        .iter()
        .map(|s| kinetic_features(s, skel))
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..features.len() {
        for j in i + 1..features.len() {
            let dist: f64 = features[i]
                .iter()
                .zip(&features[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            total += dist;
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::PoseVector;
    use nalgebra::Vector3;
    use ndarray::Array3;

    fn grid(length: usize, beats: &[usize]) -> BeatGrid {
        BeatGrid::new(length, beats.to_vec()).unwrap()
    }

    #[test]
    fn bas_identical_grids() {
        let g = grid(60, &[5, 20, 40]);
        let cfg = MetricConfig::default();
        assert!((beat_alignment_score(&g, &g, &cfg).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bas_sigma_offset_case() {
        let cfg = MetricConfig::default(); // sigma = 3
        let motion = grid(30, &[10]);
        let music = grid(30, &[13]);
        let bas = beat_alignment_score(&motion, &music, &cfg).unwrap();
        assert!((bas - (-0.5f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn bas_distant_beats_vanish() {
        let cfg = MetricConfig::default();
        let motion = grid(200, &[0]);
        let music = grid(200, &[199]);
        assert!(beat_alignment_score(&motion, &music, &cfg).unwrap() < 1e-12);
    }

    #[test]
    fn bas_direction_swaps_average() {
        let cfg = MetricConfig::default();
        // two motion beats, one aligned; single music beat
        let motion = grid(60, &[10, 40]);
        let music = grid(60, &[10]);
        let forward = beat_alignment_score(&motion, &music, &cfg).unwrap();
        let reverse = beat_alignment_score(
            &motion,
            &music,
            &MetricConfig {
                bas_direction: BasDirection::MusicToMotion,
                ..cfg
            },
        )
        .unwrap();
        assert!(forward < 1.0 && forward > 0.4);
        assert!((reverse - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bas_requires_beats() {
        let cfg = MetricConfig::default();
        assert!(matches!(
            beat_alignment_score(&grid(10, &[]), &grid(10, &[2]), &cfg),
            Err(Error::NoBeats)
        ));
    }

    fn static_positions(frames: usize) -> JointPositions {
        JointPositions::new(Array3::zeros((frames, JOINT_COUNT, 3))).unwrap()
    }

    #[test]
    fn pfc_static_motion_is_zero() {
        assert_eq!(
            physical_foot_contact(&static_positions(5), 30.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn pfc_pinned_feet_zero_despite_com_acceleration() {
        let mut data = Array3::zeros((6, JOINT_COUNT, 3));
        for i in 0..6 {
            // root accelerates along x, feet stay pinned
            let t = i as f64;
            for joint in 0..JOINT_COUNT {
                if !FOOT_JOINTS.contains(&joint) {
                    data[[i, joint, 0]] = 0.1 * t * t;
                }
            }
        }
        let pos = JointPositions::new(data).unwrap();
        assert_eq!(physical_foot_contact(&pos, 10.0).unwrap(), 0.0);
    }

    #[test]
    fn pfc_hand_case() {
        // 5 frames at fps 1: root rises quadratically (upward acceleration
        // 2), both feet translate at 1 m/s along x
        let fps = 1.0;
        let mut data = Array3::zeros((5, JOINT_COUNT, 3));
        for i in 0..5 {
            let t = i as f64;
            data[[i, 0, 1]] = t * t; // root y: acceleration 2 upward
            for &foot in &FOOT_JOINTS {
                data[[i, foot, 0]] = t; // unit speed
            }
        }
        let pos = JointPositions::new(data).unwrap();
        // per frame: |a| = 2, |v_L| = |v_R| = 1; max |a| = 2
        // PFC = (5 * 2 * 1 * 1) / (5 * 2) = 1
        let pfc = physical_foot_contact(&pos, fps).unwrap();
        assert!((pfc - 1.0).abs() < 1e-12, "{pfc}");
    }

    #[test]
    fn pfc_clamps_downward_acceleration() {
        // root falls: acceleration purely downward, clamped to zero
        let mut data = Array3::zeros((5, JOINT_COUNT, 3));
        for i in 0..5 {
            let t = i as f64;
            data[[i, 0, 1]] = -t * t;
            for &foot in &FOOT_JOINTS {
                data[[i, foot, 0]] = t;
            }
        }
        let pos = JointPositions::new(data).unwrap();
        assert_eq!(physical_foot_contact(&pos, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn kpd_identity_and_root_shift() {
        let mut data = Array3::zeros((4, JOINT_COUNT, 3));
        for i in 0..4 {
            for j in 0..JOINT_COUNT {
                data[[i, j, 0]] = j as f64 * 0.1;
                data[[i, j, 1]] = i as f64 * 0.05;
            }
        }
        let gen = JointPositions::new(data.clone()).unwrap();
        let mask = KeyframeMask::new(vec![1, 0, 1, 0]).unwrap();
        assert_eq!(keypose_distance(&gen, &gen, &mask).unwrap(), 0.0);

        // shifting the whole body moves the root too: local coords agree
        let mut shifted = data;
        for i in 0..4 {
            for j in 0..JOINT_COUNT {
                shifted[[i, j, 0]] += 5.0;
            }
        }
        let moved = JointPositions::new(shifted).unwrap();
        let kpd = keypose_distance(&gen, &moved, &mask).unwrap();
        assert!(kpd < 1e-24);
    }

    #[test]
    fn kpd_single_displaced_joint() {
        let frames = 6;
        let gen = static_positions(frames);
        let mut data = Array3::zeros((frames, JOINT_COUNT, 3));
        data[[2, 9, 1]] = 1.0; // unit displacement at keyframe 2, joint 9
        let reference = JointPositions::new(data).unwrap();
        let mask = KeyframeMask::new(vec![0, 0, 1, 0, 1, 0]).unwrap();
        let kpd = keypose_distance(&gen, &reference, &mask).unwrap();
        let expected = 1.0 / (2.0 * JOINT_COUNT as f64 * 3.0);
        assert!((kpd - expected).abs() < 1e-15);
    }

    #[test]
    fn kpd_requires_keyframes() {
        let gen = static_positions(3);
        let mask = KeyframeMask::new(vec![0, 0, 0]).unwrap();
        assert!(keypose_distance(&gen, &gen, &mask).is_err());
    }

    #[test]
    fn bap_identity_disjoint_and_partial() {
        let cfg = MetricConfig::default(); // tolerance 3, precision
        let designated = grid(50, &[10, 21, 40]);
        let identical = beat_assignment_precision(&designated, &designated, &cfg);
        assert_eq!(identical.value, 1.0);
        assert!(!identical.degenerate);

        let far = grid(50, &[0, 30]);
        let none = beat_assignment_precision(&far, &grid(50, &[15, 45]), &cfg);
        assert_eq!(none.value, 0.0);

        let gen = grid(50, &[10, 20, 33]);
        let partial = beat_assignment_precision(&gen, &designated, &cfg);
        assert!((partial.value - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn bap_recall_mode() {
        let cfg = MetricConfig {
            bap_mode: BapMode::Recall,
            ..MetricConfig::default()
        };
        let gen = grid(50, &[10]);
        let designated = grid(50, &[10, 30]);
        let score = beat_assignment_precision(&gen, &designated, &cfg);
        assert!((score.value - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bap_empty_source_is_degenerate() {
        let cfg = MetricConfig::default();
        let score = beat_assignment_precision(&grid(10, &[]), &grid(10, &[5]), &cfg);
        assert_eq!(score.value, 0.0);
        assert!(score.degenerate);
    }

    #[test]
    fn bap_monotone_in_tolerance() {
        let gen = grid(60, &[10, 20, 30, 47]);
        let designated = grid(60, &[12, 26, 50]);
        let mut prev = 0.0;
        for tol in 0..8 {
            let cfg = MetricConfig {
                bap_tolerance: tol,
                ..MetricConfig::default()
            };
            let score = beat_assignment_precision(&gen, &designated, &cfg).value;
            assert!(score >= prev, "tolerance {tol}");
            prev = score;
        }
    }

    fn root_motion_seq(fps: f64, frames: usize, speed: f64) -> MotionSequence {
        let poses: Vec<PoseVector> = (0..frames)
            .map(|i| {
                let mut p = PoseVector::identity();
                p.set_root_translation(Vector3::new(speed * i as f64 / fps, 0.0, 0.0));
                p
            })
            .collect();
        MotionSequence::from_poses(fps, &poses).unwrap()
    }

    #[test]
    fn diversity_zero_on_duplicates() {
        let skel = Skeleton::smpl_default();
        let seq = root_motion_seq(30.0, 5, 1.0);
        let div = kinetic_diversity(&[seq.clone(), seq.clone(), seq], &skel).unwrap();
        assert_eq!(div, 0.0);
    }

    #[test]
    fn diversity_unit_feature_distance() {
        let skel = Skeleton::smpl_default();
        let static_seq = root_motion_seq(30.0, 5, 0.0);
        // rigid translation: every joint's mean squared speed is v^2, so
        // the feature distance from rest is v^2 * sqrt(24); v chosen to
        // make that distance 1
        let v = (1.0 / (JOINT_COUNT as f64).sqrt()).sqrt();
        let moving = root_motion_seq(30.0, 5, v);
        let div = kinetic_diversity(&[static_seq, moving], &skel).unwrap();
        assert!((div - 1.0).abs() < 1e-9, "{div}");
    }

    #[test]
    fn diversity_matches_brute_force_mean() {
        let skel = Skeleton::smpl_default();
        let seqs = [
            root_motion_seq(30.0, 6, 0.0),
            root_motion_seq(30.0, 6, 0.5),
            root_motion_seq(30.0, 6, 1.5),
        ];
        let feats: Vec<Vec<f64>> = seqs
            .iter()
            .map(|s| kinetic_features(s, &skel).unwrap())
            .collect();
        let dist = |a: &[f64], b: &[f64]| -> f64 {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
        };
        let expected =
            (dist(&feats[0], &feats[1]) + dist(&feats[0], &feats[2]) + dist(&feats[1], &feats[2]))
                / 3.0;
        let got = kinetic_diversity(&seqs, &skel).unwrap();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn diversity_needs_two_sequences() {
        let skel = Skeleton::smpl_default();
        let seq = root_motion_seq(30.0, 5, 1.0);
        assert!(kinetic_diversity(&[seq], &skel).is_err());
    }
}

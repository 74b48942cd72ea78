//! Property tests for the crate-wide invariants.

use beatmotion::beat::{beats_from_times, extract_motion_beats, nearest_beat_distance, BeatGrid};
use beatmotion::io::{BeatFile, MaskFile, MotionFile, PlotData, RunConfig, SkeletonFile};
use beatmotion::loss::{beat_loss, LossWeights};
use beatmotion::mask::{
    attention_mask, dilate_mask, dilation_step, masked_attention, DilatedMask, KeyframeMask,
};
use beatmotion::metrics::{kinetic_diversity, MetricConfig};
use beatmotion::motion::{
    forward_kinematics, joint_velocity, rot6d_to_matrix, MotionSequence, PoseVector, Skeleton,
    JOINT_COUNT, POSE_DIM,
};
use nalgebra::{Matrix3, Vector3};
use ndarray::Array2;
use proptest::collection::btree_set;
use proptest::prelude::*;

fn max_abs(m: &Matrix3<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

fn arb_rot6d() -> impl Strategy<Value = [f64; 6]> {
    proptest::array::uniform6(-3.0f64..3.0).prop_filter("nondegenerate", |r| {
        let u = Vector3::new(r[0], r[1], r[2]);
        let w = Vector3::new(r[3], r[4], r[5]);
        u.norm() > 1e-3 && u.cross(&w).norm() > 1e-3
    })
}

fn arb_grid() -> impl Strategy<Value = BeatGrid> {
    (1usize..128).prop_flat_map(|len| {
        btree_set(0..len, 1..=len.min(24))
            .prop_map(move |beats| BeatGrid::new(len, beats.into_iter().collect()).unwrap())
    })
}

proptest! {
    #[test]
    fn rot6d_outputs_are_special_orthogonal(r6 in arb_rot6d()) {
        let r = rot6d_to_matrix(&r6).unwrap();
        prop_assert!(max_abs(&(r.transpose() * r - Matrix3::identity())) < 1e-6);
        prop_assert!((r.determinant() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rot6d_is_scale_invariant(r6 in arb_rot6d(), a in 0.05f64..20.0, b in 0.05f64..20.0) {
        let scaled = [
            a * r6[0], a * r6[1], a * r6[2],
            b * r6[3], b * r6[4], b * r6[5],
        ];
        let r = rot6d_to_matrix(&r6).unwrap();
        let s = rot6d_to_matrix(&scaled).unwrap();
        prop_assert!(max_abs(&(r - s)) < 1e-9);
    }

    #[test]
    fn nearest_distance_matches_brute_force(grid in arb_grid()) {
        let fast = nearest_beat_distance(&grid).unwrap();
        for i in 0..grid.length() {
            let brute = grid
                .beat_frames()
                .iter()
                .map(|&k| k.abs_diff(i))
                .min()
                .unwrap();
            prop_assert_eq!(fast.values()[i], brute);
        }
    }

    #[test]
    fn nearest_distance_is_lipschitz_and_zero_on_beats(grid in arb_grid()) {
        let d = nearest_beat_distance(&grid).unwrap();
        for pair in d.values().windows(2) {
            prop_assert!(pair[0].abs_diff(pair[1]) <= 1);
        }
        for i in 0..grid.length() {
            let on_beat = grid.beat_frames().contains(&i);
            prop_assert_eq!(d.values()[i] == 0, on_beat);
        }
    }

    #[test]
    fn beat_extraction_ignores_uniform_scaling(
        speed in proptest::collection::vec(0.0f64..10.0, 8..64),
        scale in 0.01f64..100.0,
        radius in 0usize..3,
    ) {
        let scaled: Vec<f64> = speed.iter().map(|s| s * scale).collect();
        let a = extract_motion_beats(&speed, 0.0, radius).unwrap();
        let b = extract_motion_beats(&scaled, 0.0, radius).unwrap();
        prop_assert_eq!(a.beat_frames(), b.beat_frames());
    }

    #[test]
    fn beat_times_round_trip_on_frame_boundaries(grid in arb_grid(), fps in 10.0f64..120.0) {
        let times: Vec<f64> = grid
            .beat_frames()
            .iter()
            .map(|&f| f as f64 / fps)
            .collect();
        let back = beats_from_times(&times, fps, grid.length()).unwrap();
        prop_assert_eq!(back.beat_frames(), grid.beat_frames());
    }

    #[test]
    fn dilation_step_range_and_monotonicity(
        d in 0.5f64..64.0,
        s in 1u32..32,
        b1 in 0.0f64..64.0,
        b2 in 0.0f64..64.0,
    ) {
        let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
        let n_lo = dilation_step(lo, d, s).unwrap();
        let n_hi = dilation_step(hi, d, s).unwrap();
        prop_assert!((1..=s).contains(&n_lo));
        prop_assert!((1..=s).contains(&n_hi));
        prop_assert!(n_lo >= n_hi, "closer to beat must dilate at least as far");
    }

    #[test]
    fn dilated_mask_dominates_and_is_stable(
        grid in arb_grid(),
        s in 1u32..16,
        seed in any::<u64>(),
    ) {
        let len = grid.length();
        let keyframes: Vec<usize> = (0..len).filter(|i| (seed >> (i % 64)) & 1 == 1).collect();
        let mask = KeyframeMask::from_keyframes(len, &keyframes).unwrap();
        let d1 = dilate_mask(&mask, &grid, s).unwrap();
        let d2 = dilate_mask(&mask, &grid, s).unwrap();
        prop_assert_eq!(&d1, &d2, "same keyframes imply fixed windows");
        for i in 0..len {
            prop_assert!(d1.values()[i] >= mask.values()[i]);
        }
    }

    #[test]
    fn attention_requires_keyframe_rows(grid in arb_grid(), s in 1u32..8, seed in any::<u64>()) {
        let len = grid.length();
        let keyframes: Vec<usize> = (0..len).filter(|i| (seed >> (i % 64)) & 1 == 1).collect();
        let mask = KeyframeMask::from_keyframes(len, &keyframes).unwrap();
        let dilated = dilate_mask(&mask, &grid, s).unwrap();
        let attn = attention_mask(&mask, &dilated).unwrap();
        for i in 0..len {
            for j in 0..len {
                if attn.entry(i, j) == 1 {
                    prop_assert_eq!(mask.values()[i], 1);
                }
                prop_assert_eq!(attn.entry(i, j), mask.values()[i] * dilated.values()[j]);
            }
        }
    }

    #[test]
    fn masked_attention_outputs_convex_combinations(
        len in 2usize..6,
        dim in 1usize..4,
        seed in any::<u64>(),
    ) {
        let fill = |offset: u64| {
            Array2::from_shape_fn((len, dim), |(i, j)| {
                let h = seed
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(offset + (i * dim + j) as u64);
                ((h >> 11) as f64 / (1u64 << 53) as f64) * 4.0 - 2.0
            })
        };
        let q = fill(1);
        let k = fill(2);
        let v = fill(3);
        let m_vals: Vec<u8> = (0..len).map(|i| ((seed >> i) & 1) as u8).collect();
        let d_vals: Vec<u8> = (0..len).map(|i| ((seed >> (i + 17)) & 1) as u8).collect();
        let mask = KeyframeMask::new(m_vals.clone()).unwrap();
        let dilated = DilatedMask::from_values(d_vals.clone()).unwrap();
        let attn = attention_mask(&mask, &dilated).unwrap();
        let out = masked_attention(&q, &k, &v, &attn).unwrap();
        for i in 0..len {
            let allowed: Vec<usize> = (0..len)
                .filter(|&j| mask.values()[i] == 1 && d_vals[j] == 1)
                .collect();
            for c in 0..dim {
                if allowed.is_empty() {
                    prop_assert_eq!(out[[i, c]], 0.0);
                } else {
                    let lo = allowed.iter().map(|&j| v[[j, c]]).fold(f64::INFINITY, f64::min);
                    let hi = allowed.iter().map(|&j| v[[j, c]]).fold(f64::NEG_INFINITY, f64::max);
                    prop_assert!(out[[i, c]] >= lo - 1e-12 && out[[i, c]] <= hi + 1e-12);
                }
            }
        }
    }

    #[test]
    fn beat_loss_nonnegative_and_zero_at_truth(
        grid in arb_grid(),
        noise in proptest::collection::vec(-8.0f64..8.0, 128),
    ) {
        let w = LossWeights::default();
        let b = nearest_beat_distance(&grid).unwrap();
        let truth = b.as_f64();
        prop_assert_eq!(beat_loss(&b, &truth, &grid, &w).unwrap(), 0.0);
        let noisy: Vec<f64> = truth
            .iter()
            .enumerate()
            .map(|(i, v)| v + noise[i % noise.len()])
            .collect();
        prop_assert!(beat_loss(&b, &noisy, &grid, &w).unwrap() >= 0.0);
    }

    #[test]
    fn rigid_translation_preserves_velocity_differences(
        delta in proptest::array::uniform3(-5.0f64..5.0),
        frames in 2usize..6,
    ) {
        let skel = Skeleton::smpl_default();
        let fps = 30.0;
        let poses: Vec<PoseVector> = (0..frames)
            .map(|i| {
                let mut p = PoseVector::identity();
                p.set_root_translation(Vector3::new(
                    0.1 * i as f64,
                    0.02 * (i * i) as f64,
                    -0.05 * i as f64,
                ));
                p
            })
            .collect();
        let seq = MotionSequence::from_poses(fps, &poses).unwrap();
        let shifted: Vec<PoseVector> = poses
            .iter()
            .map(|p| {
                let mut q = p.clone();
                q.set_root_translation(
                    p.root_translation() + Vector3::new(delta[0], delta[1], delta[2]),
                );
                q
            })
            .collect();
        let shifted_seq = MotionSequence::from_poses(fps, &shifted).unwrap();

        let pos_a = forward_kinematics(&seq, &skel).unwrap();
        let pos_b = forward_kinematics(&shifted_seq, &skel).unwrap();
        // positions shift uniformly
        for f in 0..frames {
            for j in 0..JOINT_COUNT {
                let d = pos_b.joint(f, j) - pos_a.joint(f, j);
                prop_assert!((d - Vector3::new(delta[0], delta[1], delta[2])).norm() < 1e-9);
            }
        }
        // velocities agree
        let va = joint_velocity(&pos_a, fps).unwrap();
        let vb = joint_velocity(&pos_b, fps).unwrap();
        let max_diff = (&va - &vb).iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        prop_assert!(max_diff < 1e-7);
    }

    #[test]
    fn diversity_is_permutation_invariant(
        speeds in proptest::collection::vec(0.0f64..2.0, 3..6),
        rotate in 1usize..3,
    ) {
        let skel = Skeleton::smpl_default();
        let seqs: Vec<MotionSequence> = speeds
            .iter()
            .map(|&v| {
                let poses: Vec<PoseVector> = (0..5)
                    .map(|i| {
                        let mut p = PoseVector::identity();
                        p.set_root_translation(Vector3::new(v * i as f64 / 30.0, 0.0, 0.0));
                        p
                    })
                    .collect();
                MotionSequence::from_poses(30.0, &poses).unwrap()
            })
            .collect();
        let mut permuted = seqs.clone();
        let k = rotate % permuted.len();
        permuted.rotate_left(k);
        let a = kinetic_diversity(&seqs, &skel).unwrap();
        let b = kinetic_diversity(&permuted, &skel).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn bas_is_shift_invariant(grid in arb_grid(), shift in 0usize..16) {
        // need a second grid over the same length
        let len = grid.length();
        let other_beats: Vec<usize> = grid.beat_frames().iter().map(|&b| b / 2).collect();
        let mut dedup = other_beats.clone();
        dedup.dedup();
        let other = BeatGrid::new(len, dedup).unwrap();
        let cfg = MetricConfig::default();
        let base =
            beatmotion::metrics::beat_alignment_score(&grid, &other, &cfg).unwrap();

        let shifted_a = BeatGrid::new(
            len + shift,
            grid.beat_frames().iter().map(|&b| b + shift).collect(),
        )
        .unwrap();
        let shifted_b = BeatGrid::new(
            len + shift,
            other.beat_frames().iter().map(|&b| b + shift).collect(),
        )
        .unwrap();
        let shifted =
            beatmotion::metrics::beat_alignment_score(&shifted_a, &shifted_b, &cfg).unwrap();
        prop_assert!((base - shifted).abs() < 1e-12);
    }

    #[test]
    fn motion_file_round_trips(
        fps in 1.0f64..240.0,
        frames in 1usize..4,
        seed in any::<u64>(),
    ) {
        let file = MotionFile {
            fps,
            frames: (0..frames)
                .map(|f| {
                    (0..POSE_DIM)
                        .map(|c| {
                            let h = seed
                                .wrapping_mul(0x9E3779B97F4A7C15)
                                .wrapping_add((f * POSE_DIM + c) as u64);
                            ((h >> 11) as f64 / (1u64 << 53) as f64) * 10.0 - 5.0
                        })
                        .collect()
                })
                .collect(),
        };
        let json = serde_json::to_string(&file).unwrap();
        let parsed: MotionFile = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(parsed, file);
    }

    #[test]
    fn beat_and_mask_files_round_trip(grid in arb_grid(), fps in 1.0f64..240.0) {
        let beat = BeatFile::from_grid(&grid, fps);
        let parsed: BeatFile =
            serde_json::from_str(&serde_json::to_string(&beat).unwrap()).unwrap();
        prop_assert_eq!(parsed, beat);

        let mask = MaskFile {
            length: grid.length(),
            keyframes: grid.beat_frames().to_vec(),
        };
        let parsed: MaskFile =
            serde_json::from_str(&serde_json::to_string(&mask).unwrap()).unwrap();
        prop_assert_eq!(parsed, mask);
    }

    #[test]
    fn config_and_plot_files_round_trip(
        sigma in 0.5f64..10.0,
        tol in 0usize..10,
        speeds in proptest::collection::vec(0.0f64..5.0, 3..24),
    ) {
        let mut config = RunConfig::default();
        config.metrics.bas_sigma = sigma;
        config.metrics.bap_tolerance = tol;
        let parsed: RunConfig =
            serde_json::from_str(&serde_json::to_string(&config).unwrap()).unwrap();
        prop_assert_eq!(parsed, config);

        let len = speeds.len();
        let data = PlotData {
            frames: (0..len).collect(),
            mean_speed: speeds,
            beat_frames: (0..len).step_by(3).collect(),
            motion_beat_frames: (0..len).step_by(4).collect(),
        };
        let parsed: PlotData =
            serde_json::from_str(&serde_json::to_string(&data).unwrap()).unwrap();
        prop_assert_eq!(&parsed, &data);
        let from_csv = PlotData::from_csv(&data.to_csv().unwrap()).unwrap();
        prop_assert_eq!(from_csv, data);
    }

    #[test]
    fn skeleton_file_round_trips(scale in 0.1f64..2.0) {
        let base = Skeleton::smpl_default();
        let scaled = Skeleton::new(
            base.parents().to_vec(),
            base.rest_offsets().iter().map(|o| o * scale).collect(),
        )
        .unwrap();
        let file = SkeletonFile::from(&scaled);
        let parsed: SkeletonFile =
            serde_json::from_str(&serde_json::to_string(&file).unwrap()).unwrap();
        prop_assert_eq!(parsed.into_skeleton().unwrap(), scaled);
    }
}

#[test]
fn core_values_are_shareable_across_threads() {
    fn assert_send_sync<T: Send + Sync>() {}
    assert_send_sync::<MotionSequence>();
    assert_send_sync::<Skeleton>();
    assert_send_sync::<beatmotion::motion::JointPositions>();
    assert_send_sync::<BeatGrid>();
    assert_send_sync::<KeyframeMask>();
    assert_send_sync::<DilatedMask>();
    assert_send_sync::<beatmotion::mask::AttentionMask>();
    assert_send_sync::<LossWeights>();
    assert_send_sync::<beatmotion::diffusion::NoiseSchedule>();
    assert_send_sync::<MetricConfig>();
}

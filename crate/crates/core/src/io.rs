//! File formats and plot-data emission.
//!
//! JSON is the canonical interchange for motions, skeletons, beats,
//! masks, configurations, and reports; plot data is additionally
//! emitted as CSV. Numbers round-trip exactly through both paths.

use std::fs;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::beat::{beats_from_times, extract_motion_beats, BeatExtractParams, BeatGrid};
use crate::diffusion::SamplerParams;
use crate::error::{Error, Result};
use crate::loss::LossWeights;
use crate::mask::KeyframeMask;
use crate::metrics::MetricConfig;
use crate::motion::{forward_kinematics, mean_joint_speed, MotionSequence, PoseVector, Skeleton};

/// Wire form of a motion sequence: `{ "fps": number, "frames": [[151 numbers], ...] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionFile {
    pub fps: f64,
    pub frames: Vec<Vec<f64>>,
}

impl From<&MotionSequence> for MotionFile {
    fn from(seq: &MotionSequence) -> Self {
        Self {
            fps: seq.fps(),
            frames: seq
                .frames()
                .rows()
                .into_iter()
                .map(|r| r.to_vec())
                .collect(),
        }
    }
}

impl MotionFile {
    pub fn into_sequence(self) -> Result<MotionSequence> {
        let poses: Vec<PoseVector> = self
            .frames
            .into_iter()
            .map(PoseVector::new)
            .collect::<Result<_>>()?;
        MotionSequence::from_poses(self.fps, &poses)
    }
}

/// Wire form of a skeleton: `{ "parents": [24 ints], "rest_offsets": [[x,y,z] x 24] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonFile {
    pub parents: Vec<i32>,
    pub rest_offsets: Vec<[f64; 3]>,
}

impl From<&Skeleton> for SkeletonFile {
    fn from(skel: &Skeleton) -> Self {
        Self {
            parents: skel.parents().to_vec(),
            rest_offsets: skel
                .rest_offsets()
                .iter()
                .map(|o| [o.x, o.y, o.z])
                .collect(),
        }
    }
}

impl SkeletonFile {
    pub fn into_skeleton(self) -> Result<Skeleton> {
        Skeleton::new(
            self.parents,
            self.rest_offsets
                .into_iter()
                .map(|o| Vector3::new(o[0], o[1], o[2]))
                .collect(),
        )
    }
}

/// Wire form of a beat grid. Exactly one of `beat_frames` and
/// `beat_times_sec` must be present; times are converted through the
/// file's frame rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatFile {
    pub fps: f64,
    pub length: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beat_frames: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beat_times_sec: Option<Vec<f64>>,
}

impl BeatFile {
    pub fn from_grid(grid: &BeatGrid, fps: f64) -> Self {
        Self {
            fps,
            length: grid.length(),
            beat_frames: Some(grid.beat_frames().to_vec()),
            beat_times_sec: None,
        }
    }

    pub fn into_grid(self) -> Result<BeatGrid> {
        match (self.beat_frames, self.beat_times_sec) {
            (Some(frames), None) => BeatGrid::new(self.length, frames),
            (None, Some(times)) => beats_from_times(&times, self.fps, self.length),
            (Some(_), Some(_)) => Err(Error::InvalidFile {
                reason: "beat file must not carry both beat_frames and beat_times_sec".into(),
            }),
            (None, None) => Err(Error::InvalidFile {
                reason: "beat file needs one of beat_frames or beat_times_sec".into(),
            }),
        }
    }
}

/// Wire form of a keyframe mask: `{ "length": int, "keyframes": [ints] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskFile {
    pub length: usize,
    pub keyframes: Vec<usize>,
}

impl From<&KeyframeMask> for MaskFile {
    fn from(mask: &KeyframeMask) -> Self {
        Self {
            length: mask.len(),
            keyframes: mask.keyframes(),
        }
    }
}

impl MaskFile {
    pub fn into_mask(self) -> Result<KeyframeMask> {
        KeyframeMask::from_keyframes(self.length, &self.keyframes)
    }
}

/// Combined configuration accepted by the CLI `--config` flag; every
/// section falls back to its defaults when omitted.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub loss: LossWeights,
    pub metrics: MetricConfig,
    pub sampler: SamplerParams,
    pub beat_extract: BeatExtractParams,
}

/// Data behind the beat-alignment visualization: the mean joint-speed
/// curve with designated beats and extracted motion beats marked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotData {
    pub frames: Vec<usize>,
    pub mean_speed: Vec<f64>,
    pub beat_frames: Vec<usize>,
    pub motion_beat_frames: Vec<usize>,
}

/// Builds [`PlotData`] for a sequence: speed curve, the given music
/// beats, and motion beats extracted from the curve.
pub fn emit_plot_data(
    seq: &MotionSequence,
    skel: &Skeleton,
    music_beats: &BeatGrid,
    params: &BeatExtractParams,
) -> Result<PlotData> {
    if music_beats.length() != seq.len() {
        return Err(Error::ShapeMismatch {
            context: "plot data",
            expected: format!("{} frames", seq.len()),
            got: format!("{} frames", music_beats.length()),
        });
    }
    let positions = forward_kinematics(seq, skel)?;
    let mean_speed = mean_joint_speed(&positions, seq.fps())?;
    let motion_beats =
        extract_motion_beats(&mean_speed, params.min_prominence, params.smooth_radius)?;
    Ok(PlotData {
        frames: (0..seq.len()).collect(),
        mean_speed,
        beat_frames: music_beats.beat_frames().to_vec(),
        motion_beat_frames: motion_beats.beat_frames().to_vec(),
    })
}

impl PlotData {
    /// CSV form: one row per frame with beat membership as 0/1 columns.
    /// Carries the same numeric content as the JSON form.
    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(["frame", "mean_speed", "music_beat", "motion_beat"])?;
        for (idx, &frame) in self.frames.iter().enumerate() {
            writer.write_record([
                frame.to_string(),
                format!("{}", self.mean_speed[idx]),
                u8::from(self.beat_frames.binary_search(&frame).is_ok()).to_string(),
                u8::from(self.motion_beat_frames.binary_search(&frame).is_ok()).to_string(),
            ])?;
        }
        let bytes = writer.into_inner().map_err(|e| Error::InvalidFile {
            reason: format!("csv write failed: {e}"),
        })?;
        String::from_utf8(bytes).map_err(|e| Error::InvalidFile {
            reason: format!("csv not utf-8: {e}"),
        })
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut data = PlotData {
            frames: Vec::new(),
            mean_speed: Vec::new(),
            beat_frames: Vec::new(),
            motion_beat_frames: Vec::new(),
        };
        for record in reader.records() {
            let record = record?;
            let field = |i: usize| -> Result<&str> {
                record.get(i).ok_or_else(|| Error::InvalidFile {
                    reason: format!("csv row too short: {record:?}"),
                })
            };
            let parse_err = |what: &str, v: &str| Error::InvalidFile {
                reason: format!("bad {what} value {v:?}"),
            };
            let frame: usize = field(0)?
                .parse()
                .map_err(|_| parse_err("frame", field(0).unwrap_or("")))?;
            let speed: f64 = field(1)?
                .parse()
                .map_err(|_| parse_err("mean_speed", field(1).unwrap_or("")))?;
            data.frames.push(frame);
            data.mean_speed.push(speed);
            if field(2)? == "1" {
                data.beat_frames.push(frame);
            }
            if field(3)? == "1" {
                data.motion_beat_frames.push(frame);
            }
        }
        Ok(data)
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn load_motion(path: &Path) -> Result<MotionSequence> {
    read_json::<MotionFile>(path)?.into_sequence()
}

pub fn save_motion(path: &Path, seq: &MotionSequence) -> Result<()> {
    write_json(path, &MotionFile::from(seq))
}

pub fn load_skeleton(path: &Path) -> Result<Skeleton> {
    read_json::<SkeletonFile>(path)?.into_skeleton()
}

pub fn save_skeleton(path: &Path, skel: &Skeleton) -> Result<()> {
    write_json(path, &SkeletonFile::from(skel))
}

/// Loads a beat grid along with the file's frame rate.
pub fn load_beats(path: &Path) -> Result<(BeatGrid, f64)> {
    let file: BeatFile = read_json(path)?;
    let fps = file.fps;
    Ok((file.into_grid()?, fps))
}

pub fn save_beats(path: &Path, grid: &BeatGrid, fps: f64) -> Result<()> {
    write_json(path, &BeatFile::from_grid(grid, fps))
}

pub fn load_mask(path: &Path) -> Result<KeyframeMask> {
    read_json::<MaskFile>(path)?.into_mask()
}

pub fn save_mask(path: &Path, mask: &KeyframeMask) -> Result<()> {
    write_json(path, &MaskFile::from(mask))
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    read_json(path)
}

/// Writes any serializable report or array as pretty JSON.
pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_json(path, value)
}

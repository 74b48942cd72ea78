//! Beat-aware keyframe-mask dilation and masked attention.
//!
//! Keyframes are marked by a binary temporal mask. Each keyframe's
//! influence is widened to a symmetric window whose radius shrinks
//! exponentially with the keyframe's distance to the nearest beat, so
//! keyframes sitting on beats propagate furthest. The attention mask is
//! the outer product of the original mask with the dilated one, and a
//! deterministic scaled-dot-product kernel applies it.

use ndarray::{Array1, Array2};

use crate::beat::{adjacent_interval, nearest_beat_distance, BeatGrid};
use crate::error::{Error, Result};

/// Default base dilation steps of the six sparse-dense fusion blocks,
/// shallow to deep. The base step is per-block configuration; these are
/// the shipped defaults.
pub const DEFAULT_BASE_DILATION_STEPS: [u32; 6] = [4, 8, 12, 16, 20, 24];

fn validate_binary(values: &[u8], name: &'static str) -> Result<()> {
    if values.iter().any(|&v| v > 1) {
        return Err(Error::InvalidParameter {
            name,
            reason: "entries must be 0 or 1".into(),
        });
    }
    Ok(())
}

/// Binary temporal mask marking keyframe locations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyframeMask {
    values: Vec<u8>,
}

impl KeyframeMask {
    pub fn new(values: Vec<u8>) -> Result<Self> {
        validate_binary(&values, "keyframe mask")?;
        Ok(Self { values })
    }

    /// Mask of `length` frames with ones at the given keyframe indices.
    pub fn from_keyframes(length: usize, keyframes: &[usize]) -> Result<Self> {
        let mut values = vec![0u8; length];
        for &k in keyframes {
            if k >= length {
                return Err(Error::FrameOutOfRange { index: k, length });
            }
            values[k] = 1;
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    /// Indices of the set entries, ascending.
    pub fn keyframes(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, &v)| (v == 1).then_some(i))
            .collect()
    }

    pub fn count(&self) -> usize {
        self.values.iter().filter(|&&v| v == 1).count()
    }
}

/// Beat-aware dilation of a keyframe mask; pointwise dominates the mask
/// it was grown from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DilatedMask {
    values: Vec<u8>,
}

impl DilatedMask {
    /// Wraps raw binary values, e.g. a previously emitted dilated mask.
    /// Dominance over a particular keyframe mask is the caller's
    /// concern on this path; [`dilate_mask`] guarantees it.
    pub fn from_values(values: Vec<u8>) -> Result<Self> {
        validate_binary(&values, "dilated mask")?;
        Ok(Self { values })
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Binary `L x L` attention mask with rank-1 structure: entry `(i, j)`
/// is `M[i] * M_d[j]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttentionMask {
    length: usize,
    values: Vec<u8>, // row-major
}

impl AttentionMask {
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn entry(&self, i: usize, j: usize) -> u8 {
        self.values[i * self.length + j]
    }

    /// Dense row-major entries.
    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> {
        self.values.chunks(self.length)
    }
}

/// Window radius for a keyframe: `ceil(s * exp(-2 b / d))`.
///
/// `b` is the keyframe's distance to the nearest beat and `d` the
/// interval between its adjacent beats. The radius is monotone
/// nonincreasing in `b` and always lies in `[1, s]`.
pub fn dilation_step(b: f64, d: f64, s: u32) -> Result<u32> {
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::InvalidParameter {
            name: "d",
            reason: format!("adjacent interval must be positive, got {d}"),
        });
    }
    if !(b.is_finite() && b >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "b",
            reason: format!("beat distance must be nonnegative, got {b}"),
        });
    }
    if s < 1 {
        return Err(Error::InvalidParameter {
            name: "s",
            reason: "base dilation step must be at least 1".into(),
        });
    }
    let n = (s as f64 * (-2.0 * b / d).exp()).ceil() as u32;
    Ok(n.clamp(1, s))
}

/// Grows each keyframe of `mask` into a symmetric window of radius
/// [`dilation_step`], computed from the designated beat grid. Windows
/// are clipped to the sequence bounds and overlaps union.
pub fn dilate_mask(mask: &KeyframeMask, grid: &BeatGrid, s: u32) -> Result<DilatedMask> {
    if mask.len() != grid.length() {
        return Err(Error::ShapeMismatch {
            context: "mask dilation",
            expected: format!("mask length {}", grid.length()),
            got: mask.len().to_string(),
        });
    }
    let distances = nearest_beat_distance(grid)?;
    let mut values = mask.values().to_vec();
    for k in mask.keyframes() {
        let b = distances.values()[k] as f64;
        let d = adjacent_interval(grid, k)? as f64;
        let n = dilation_step(b, d, s)? as usize;
        let lo = k.saturating_sub(n);
        let hi = (k + n).min(mask.len() - 1);
        for v in &mut values[lo..=hi] {
            *v = 1;
        }
    }
    Ok(DilatedMask { values })
}

/// Outer product `M[i] * M_d[j]` of a keyframe mask with its dilation.
pub fn attention_mask(mask: &KeyframeMask, dilated: &DilatedMask) -> Result<AttentionMask> {
    if mask.len() != dilated.len() {
        return Err(Error::ShapeMismatch {
            context: "attention mask",
            expected: format!("dilated mask length {}", mask.len()),
            got: dilated.len().to_string(),
        });
    }
    let length = mask.len();
    let mut values = vec![0u8; length * length];
    for (i, &mi) in mask.values().iter().enumerate() {
        if mi == 1 {
            let row = &mut values[i * length..(i + 1) * length];
            row.copy_from_slice(dilated.values());
        }
    }
    Ok(AttentionMask { length, values })
}

/// Scaled dot-product attention restricted to the allowed positions of
/// `mask`.
///
/// Row `i` of the output is the softmax-weighted combination of the `V`
/// rows whose mask entry `(i, j)` is one, with scores `Q_i . K_j / sqrt(d)`.
/// Rows with no allowed position yield zeros: non-keyframe rows carry no
/// constraint.
pub fn masked_attention(
    q: &Array2<f64>,
    k: &Array2<f64>,
    v: &Array2<f64>,
    mask: &AttentionMask,
) -> Result<Array2<f64>> {
    let length = mask.length();
    let dim = q.ncols();
    for (name, m) in [("Q", q), ("K", k), ("V", v)] {
        if m.nrows() != length || m.ncols() != dim {
            return Err(Error::ShapeMismatch {
                context: "masked attention",
                expected: format!("{name} of shape ({length}, {dim})"),
                got: format!("({}, {})", m.nrows(), m.ncols()),
            });
        }
    }
    if dim == 0 {
        return Err(Error::InvalidParameter {
            name: "d",
            reason: "feature dimension must be at least 1".into(),
        });
    }

    let scale = 1.0 / (dim as f64).sqrt();
    let mut out = Array2::zeros((length, dim));
    let mut scores: Vec<(usize, f64)> = Vec::with_capacity(length);
    for i in 0..length {
        scores.clear();
        let qi = q.row(i);
        for j in 0..length {
            if mask.entry(i, j) == 1 {
                scores.push((j, qi.dot(&k.row(j)) * scale));
            }
        }
        if scores.is_empty() {
            continue;
        }
        let max = scores
            .iter()
            .map(|&(_, s)| s)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        let mut row: Array1<f64> = Array1::zeros(dim);
        for &(j, s) in &scores {
            let w = (s - max).exp();
            total += w;
            row.scaled_add(w, &v.row(j));
        }
        row /= total;
        out.row_mut(i).assign(&row);
    }
    Ok(out)
}

//! DDPM machinery with clean-sample prediction.
//!
//! The schedule follows the improved cosine parameterization; sampling
//! is ancestral with the posterior expressed directly in the predicted
//! clean sample. Keyframe constraints are injected after every step by
//! replacing masked frames with forward-diffused reference frames, and
//! classifier-free guidance combines conditional and unconditional
//! predictions in clean-sample space. The denoiser itself is injected;
//! the crate ships deterministic test denoisers only.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::KeyframeMask;
use crate::motion::{MotionSequence, POSE_DIM};

/// Cosine-schedule offset keeping the first step's noise level small.
const COSINE_OFFSET: f64 = 0.008;
/// Upper clip for per-step beta values.
const BETA_CLIP: f64 = 0.999;

/// Precomputed diffusion schedule: `beta_t`, `alpha_t = 1 - beta_t`, and
/// the running product `alpha_bar_t` for steps `t = 1..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    betas: Vec<f64>,
    alphas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl NoiseSchedule {
    /// Builds a schedule from raw beta values in `(0, BETA_CLIP]`.
    pub fn from_betas(betas: Vec<f64>) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::InvalidParameter {
                name: "T",
                reason: "schedule needs at least one step".into(),
            });
        }
        if betas.iter().any(|&b| !(b > 0.0 && b <= BETA_CLIP)) {
            return Err(Error::InvalidParameter {
                name: "betas",
                reason: format!("every beta must lie in (0, {BETA_CLIP}]"),
            });
        }
        let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
        let alpha_bars: Vec<f64> = alphas
            .iter()
            .scan(1.0, |acc, a| {
                *acc *= a;
                Some(*acc)
            })
            .collect();
        Ok(Self {
            betas,
            alphas,
            alpha_bars,
        })
    }

    /// Number of diffusion steps `T`.
    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    fn check_step(&self, t: usize) -> Result<()> {
        if t < 1 || t > self.steps() {
            return Err(Error::StepOutOfRange {
                t,
                min: 1,
                max: self.steps(),
            });
        }
        Ok(())
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t - 1]
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.alphas[t - 1]
    }

    pub fn alpha_bar(&self, t: usize) -> f64 {
        self.alpha_bars[t - 1]
    }

    /// `alpha_bar_{t-1}`, defined as 1 at `t = 1`.
    pub fn alpha_bar_prev(&self, t: usize) -> f64 {
        if t == 1 {
            1.0
        } else {
            self.alpha_bars[t - 2]
        }
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bars
    }
}

/// Cosine noise schedule with `T` steps.
///
/// `alpha_bar` targets `f(t)/f(0)` with
/// `f(t) = cos^2(((t/T + o) / (1 + o)) * pi/2)`, `o = 0.008`; betas are
/// the step ratios clipped at 0.999 and `alpha_bar` is re-accumulated
/// from the clipped betas so the stored product stays self-consistent.
pub fn cosine_schedule(steps: usize) -> Result<NoiseSchedule> {
    if steps < 1 {
        return Err(Error::InvalidParameter {
            name: "T",
            reason: "schedule needs at least one step".into(),
        });
    }
    let f = |t: f64| {
        let x = (t / steps as f64 + COSINE_OFFSET) / (1.0 + COSINE_OFFSET);
        (x * std::f64::consts::FRAC_PI_2).cos().powi(2)
    };
    let f0 = f(0.0);
    let mut betas = Vec::with_capacity(steps);
    let mut prev_bar = 1.0;
    for t in 1..=steps {
        let bar = f(t as f64) / f0;
        let beta = (1.0 - bar / prev_bar).min(BETA_CLIP);
        betas.push(beta);
        prev_bar = bar;
    }
    NoiseSchedule::from_betas(betas)
}

fn check_same_shape(a: &Array2<f64>, b: &Array2<f64>, context: &'static str) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch {
            context,
            expected: format!("{:?}", a.dim()),
            got: format!("{:?}", b.dim()),
        });
    }
    Ok(())
}

/// Closed-form forward diffusion:
/// `x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) noise`.
pub fn forward_diffuse(
    x0: &Array2<f64>,
    t: usize,
    noise: &Array2<f64>,
    sched: &NoiseSchedule,
) -> Result<Array2<f64>> {
    sched.check_step(t)?;
    check_same_shape(x0, noise, "forward diffusion")?;
    let bar = sched.alpha_bar(t);
    Ok(x0 * bar.sqrt() + noise * (1.0 - bar).sqrt())
}

/// One ancestral step given the predicted clean sample:
/// the posterior mean
/// `mu = sqrt(alpha_bar_{t-1}) beta_t / (1 - alpha_bar_t) * x0_hat
///     + sqrt(alpha_t) (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t) * x_t`
/// plus `sigma_t * noise` with
/// `sigma_t^2 = beta_t (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t)`.
/// No noise is added at `t = 1`, where the step returns `x0_hat` exactly.
pub fn posterior_step(
    x_t: &Array2<f64>,
    x0_hat: &Array2<f64>,
    t: usize,
    noise: &Array2<f64>,
    sched: &NoiseSchedule,
) -> Result<Array2<f64>> {
    sched.check_step(t)?;
    check_same_shape(x_t, x0_hat, "posterior step")?;
    check_same_shape(x_t, noise, "posterior step")?;
    let beta = sched.beta(t);
    let alpha = sched.alpha(t);
    let bar = sched.alpha_bar(t);
    let bar_prev = sched.alpha_bar_prev(t);

    let coef_x0 = bar_prev.sqrt() * beta / (1.0 - bar);
    let coef_xt = alpha.sqrt() * (1.0 - bar_prev) / (1.0 - bar);
    let mut out = x0_hat * coef_x0 + x_t * coef_xt;
    if t > 1 {
        let sigma = (beta * (1.0 - bar_prev) / (1.0 - bar)).sqrt();
        out = out + noise * sigma;
    }
    Ok(out)
}

/// Keyframe constraint injection: masked frames are replaced by the
/// forward-diffused reference, the rest pass through.
pub fn apply_constraint(
    x_t: &Array2<f64>,
    x_c: &Array2<f64>,
    mask: &KeyframeMask,
    t: usize,
    noise: &Array2<f64>,
    sched: &NoiseSchedule,
) -> Result<Array2<f64>> {
    check_same_shape(x_t, x_c, "constraint injection")?;
    if mask.len() != x_t.nrows() {
        return Err(Error::ShapeMismatch {
            context: "constraint mask",
            expected: format!("{} frames", x_t.nrows()),
            got: mask.len().to_string(),
        });
    }
    let diffused = forward_diffuse(x_c, t, noise, sched)?;
    Ok(blend_rows(x_t, &diffused, mask))
}

fn blend_rows(x: &Array2<f64>, replacement: &Array2<f64>, mask: &KeyframeMask) -> Array2<f64> {
    let mut out = x.clone();
    for (i, &m) in mask.values().iter().enumerate() {
        if m == 1 {
            out.row_mut(i).assign(&replacement.row(i));
        }
    }
    out
}

/// Classifier-free guidance in clean-sample space:
/// `x0_uncond + scale * (x0_cond - x0_uncond)`.
pub fn cfg_combine(
    x0_cond: &Array2<f64>,
    x0_uncond: &Array2<f64>,
    scale: f64,
) -> Result<Array2<f64>> {
    check_same_shape(x0_cond, x0_uncond, "guidance combination")?;
    Ok(x0_uncond + &((x0_cond - x0_uncond) * scale))
}

/// Evaluation contract of the denoising model: predict the clean
/// sequence from a noisy one at step `t`. `denoise_uncond` is the
/// null-condition evaluation used by classifier-free guidance and
/// defaults to the conditional one, making guidance a no-op.
pub trait Denoiser {
    fn denoise(&self, x_t: &Array2<f64>, t: usize) -> Result<Array2<f64>>;

    fn denoise_uncond(&self, x_t: &Array2<f64>, t: usize) -> Result<Array2<f64>> {
        self.denoise(x_t, t)
    }
}

/// Returns the noisy input unchanged.
pub struct IdentityDenoiser;

impl Denoiser for IdentityDenoiser {
    fn denoise(&self, x_t: &Array2<f64>, _t: usize) -> Result<Array2<f64>> {
        Ok(x_t.clone())
    }
}

/// Always predicts one fixed target, regardless of input or step.
pub struct ConstantDenoiser {
    target: Array2<f64>,
}

impl ConstantDenoiser {
    pub fn new(target: Array2<f64>) -> Self {
        Self { target }
    }
}

impl Denoiser for ConstantDenoiser {
    fn denoise(&self, x_t: &Array2<f64>, _t: usize) -> Result<Array2<f64>> {
        check_same_shape(&self.target, x_t, "constant denoiser")?;
        Ok(self.target.clone())
    }
}

/// Ground-truth oracle: predicts the known clean sequence, optionally
/// with a distinct null-condition prediction so guidance paths can be
/// exercised.
pub struct OracleDenoiser {
    clean: Array2<f64>,
    null: Option<Array2<f64>>,
}

impl OracleDenoiser {
    pub fn new(clean: Array2<f64>) -> Self {
        Self { clean, null: None }
    }

    pub fn with_null_target(clean: Array2<f64>, null: Array2<f64>) -> Self {
        Self {
            clean,
            null: Some(null),
        }
    }
}

impl Denoiser for OracleDenoiser {
    fn denoise(&self, x_t: &Array2<f64>, _t: usize) -> Result<Array2<f64>> {
        check_same_shape(&self.clean, x_t, "oracle denoiser")?;
        Ok(self.clean.clone())
    }

    fn denoise_uncond(&self, x_t: &Array2<f64>, t: usize) -> Result<Array2<f64>> {
        match &self.null {
            Some(null) => {
                check_same_shape(null, x_t, "oracle denoiser")?;
                Ok(null.clone())
            }
            None => self.denoise(x_t, t),
        }
    }
}

/// Keyframe constraint for the sampler: reference frames plus the mask
/// of frames to pin.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub reference: Array2<f64>,
    pub mask: KeyframeMask,
}

/// Sampler configuration. `guidance_scale = 1` disables the second
/// denoiser evaluation; the seed fully determines the run.
#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub guidance_scale: f64,
    pub seed: u64,
    pub fps: f64,
    pub constraint: Option<Constraint>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            guidance_scale: 2.0,
            seed: 0,
            fps: 30.0,
            constraint: None,
        }
    }
}

/// Serializable sampler parameters (seed, scale, schedule length); the
/// constraint arrives through dedicated files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerParams {
    pub guidance_scale: f64,
    pub seed: u64,
    pub steps: usize,
}

impl Default for SamplerParams {
    fn default() -> Self {
        Self {
            guidance_scale: 2.0,
            seed: 0,
            steps: 1000,
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    let normal = StandardNormal;
    Array2::from_shape_simple_fn((rows, cols), || normal.sample(rng))
}

/// Ancestral sampling loop over an arbitrary feature width.
///
/// Starts from seeded standard Gaussian noise and walks `t = T..1`:
/// denoiser evaluation (guided when the scale is not 1), posterior
/// step, then constraint injection at the new noise level. After the
/// final step the constraint is injected noise-free, so pinned frames
/// equal the reference exactly. Deterministic for a fixed seed.
pub fn sample_raw(
    denoiser: &dyn Denoiser,
    cfg: &SamplerConfig,
    sched: &NoiseSchedule,
    length: usize,
    dim: usize,
) -> Result<Array2<f64>> {
    if length == 0 || dim == 0 {
        return Err(Error::InvalidParameter {
            name: "shape",
            reason: format!("length {length} and dim {dim} must be positive"),
        });
    }
    if !(cfg.guidance_scale.is_finite() && cfg.guidance_scale >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "guidance_scale",
            reason: format!("must be nonnegative, got {}", cfg.guidance_scale),
        });
    }
    if let Some(constraint) = &cfg.constraint {
        if constraint.reference.dim() != (length, dim) || constraint.mask.len() != length {
            return Err(Error::ShapeMismatch {
                context: "sampler constraint",
                expected: format!("({length}, {dim}) reference and {length} mask entries"),
                got: format!(
                    "{:?} reference and {} mask entries",
                    constraint.reference.dim(),
                    constraint.mask.len()
                ),
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x = gaussian(&mut rng, length, dim);

    for t in (1..=sched.steps()).rev() {
        let x0_cond = denoiser.denoise(&x, t).map_err(|e| Error::DenoiserFailed {
            t,
            source: e.into(),
        })?;
        let x0_hat = if cfg.guidance_scale == 1.0 {
            x0_cond
        } else {
            let x0_uncond = denoiser
                .denoise_uncond(&x, t)
                .map_err(|e| Error::DenoiserFailed {
                    t,
                    source: e.into(),
                })?;
            cfg_combine(&x0_cond, &x0_uncond, cfg.guidance_scale)?
        };
        if x0_hat.dim() != x.dim() {
            return Err(Error::ShapeMismatch {
                context: "denoiser output",
                expected: format!("{:?}", x.dim()),
                got: format!("{:?}", x0_hat.dim()),
            });
        }

        let noise = gaussian(&mut rng, length, dim);
        x = posterior_step(&x, &x0_hat, t, &noise, sched)?;

        if let Some(constraint) = &cfg.constraint {
            if t > 1 {
                let c_noise = gaussian(&mut rng, length, dim);
                x = apply_constraint(
                    &x,
                    &constraint.reference,
                    &constraint.mask,
                    t - 1,
                    &c_noise,
                    sched,
                )?;
            } else {
                // noise level zero: the forward-diffused reference is the
                // reference itself
                x = blend_rows(&x, &constraint.reference, &constraint.mask);
            }
        }
    }

    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "sampled sequence",
        });
    }
    Ok(x)
}

/// [`sample_raw`] at the full pose width, wrapped as a motion sequence.
pub fn sample(
    denoiser: &dyn Denoiser,
    cfg: &SamplerConfig,
    sched: &NoiseSchedule,
    length: usize,
) -> Result<MotionSequence> {
    let data = sample_raw(denoiser, cfg, sched, length, POSE_DIM)?;
    MotionSequence::from_array(cfg.fps, data)
}

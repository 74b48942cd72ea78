//! Beat-synchronized dance motion toolkit.
//!
//! The crate covers the numeric core of beat-synchronized dance
//! generation and evaluation:
//!
//! - [`motion`]: the 151-D pose representation, 6-DOF rotation decoding,
//!   SMPL-format forward kinematics, and finite-difference kinematics
//! - [`beat`]: beat grids, nearest-beat distances, adjacent intervals,
//!   and motion-beat extraction from speed minima
//! - [`mask`]: beat-aware keyframe-mask dilation, attention masks, and a
//!   deterministic masked-attention kernel
//! - [`loss`]: the reconstruction, kinematic, and beat-alignment losses
//! - [`diffusion`]: cosine schedule, forward diffusion, ancestral
//!   sampling with keyframe constraint injection, and classifier-free
//!   guidance over a pluggable denoiser
//! - [`metrics`]: beat alignment score, physical foot contact, key-pose
//!   distance, beat assignment precision, and kinetic diversity
//! - [`io`] / [`synth`]: JSON/CSV interchange, plot data, synthetic
//!   motions, and keyframe sampling
//!
//! All operations are pure functions of their inputs; values are safely
//! shareable across threads.

pub mod beat;
pub mod diffusion;
pub mod error;
pub mod io;
pub mod loss;
pub mod mask;
pub mod metrics;
pub mod motion;
pub mod synth;

pub use error::{Error, Result};

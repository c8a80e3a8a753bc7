//! Simulated screen-shooting channel.
//!
//! [`apply_channel`] runs gamut shift, desaturation, blur, Moiré and
//! sensor noise with severities drawn from step-dependent ramps, and
//! records what it did in a [`DistortionTrace`] that [`replay`] can re-run.

mod distort;
mod moire;

pub use distort::{
    blur, color_gamut, gaussian_blur_kernel, gaussian_noise, motion_blur_kernel, saturation,
};
pub use moire::{
    bayer_mosaic, demosaic_bilinear, lcd_subpixel_resample, moire, moire_with,
    sample_moire_homography,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Homography;
use crate::raster::RasterU8;

/// Linear schedule: the limit is reached after `steps` training steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ramp {
    pub steps: u64,
    pub limit: f64,
}

impl Ramp {
    pub const fn new(steps: u64, limit: f64) -> Self {
        Self { steps, limit }
    }

    /// Fraction of the ramp completed at `step`, in `[0, 1]`.
    pub fn progress(&self, step: u64) -> f64 {
        (step as f64 / self.steps as f64).min(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlurConfig {
    /// Largest (odd) kernel side.
    pub max_kernel: usize,
    pub max_sigma: f64,
    /// Steps over which the defocus sigma ramps up. Motion blur is not ramped.
    pub ramp_steps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelConfig {
    pub seed: u64,
    pub step: u64,
    /// Brightness offset limit in gray levels.
    pub brightness_ramp: Ramp,
    /// Contrast deviation `D`; contrast is drawn from `(1 - D/2, 1 + D)`.
    pub contrast_ramp: Ramp,
    /// The limit is the smallest saturation level reached.
    pub saturation_ramp: Ramp,
    /// Noise sigma limit in gray levels.
    pub noise_ramp: Ramp,
    pub blur: BlurConfig,
    pub moire_probability: f64,
    pub motion_blur_probability: f64,
    /// Optical blur of the Moiré stage, in subpixel units.
    pub moire_blur_sigma: f64,
    /// Corner jitter of the Moiré camera pose, as a fraction of the side.
    pub moire_offset: f64,
    /// Moiré is only enabled from `total_steps / 2` on.
    pub total_steps: u64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            step: 0,
            brightness_ramp: Ramp::new(100, 24.0),
            contrast_ramp: Ramp::new(1_000, 0.3),
            saturation_ramp: Ramp::new(1_000, 0.7),
            noise_ramp: Ramp::new(1_000, 0.02 * 255.0),
            blur: BlurConfig {
                max_kernel: 7,
                max_sigma: 1.5,
                ramp_steps: 1_000,
            },
            moire_probability: 0.75,
            motion_blur_probability: 0.2,
            moire_blur_sigma: 1.5,
            moire_offset: 0.1,
            total_steps: 175_000,
        }
    }
}

impl ChannelConfig {
    /// A configuration under which every stage is the identity.
    pub fn zero_severity(seed: u64) -> Self {
        Self {
            seed,
            step: 0,
            moire_probability: 0.0,
            motion_blur_probability: 0.0,
            ..Self::default()
        }
    }

    /// Only the Moiré stage: every other severity is zero and the gate is open.
    pub fn moire_only(seed: u64) -> Self {
        let d = Self::default();
        Self {
            seed,
            step: d.total_steps,
            brightness_ramp: Ramp::new(d.brightness_ramp.steps, 0.0),
            contrast_ramp: Ramp::new(d.contrast_ramp.steps, 0.0),
            saturation_ramp: Ramp::new(d.saturation_ramp.steps, 1.0),
            noise_ramp: Ramp::new(d.noise_ramp.steps, 0.0),
            blur: BlurConfig {
                max_sigma: 0.0,
                ..d.blur
            },
            moire_probability: 1.0,
            motion_blur_probability: 0.0,
            ..d
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("brightness_ramp", &self.brightness_ramp),
            ("contrast_ramp", &self.contrast_ramp),
            ("saturation_ramp", &self.saturation_ramp),
            ("noise_ramp", &self.noise_ramp),
        ] {
            if r.steps == 0 {
                return Err(Error::InvalidConfig(format!("{name}.steps must be at least 1")));
            }
            if !(r.limit >= 0.0) {
                return Err(Error::InvalidConfig(format!("{name}.limit must be non-negative")));
            }
        }
        if self.blur.ramp_steps == 0 {
            return Err(Error::InvalidConfig("blur.ramp_steps must be at least 1".into()));
        }
        if self.contrast_ramp.limit >= 2.0 {
            return Err(Error::InvalidConfig("contrast deviation must stay below 2".into()));
        }
        if self.saturation_ramp.limit > 1.0 {
            return Err(Error::InvalidConfig("saturation floor must be at most 1".into()));
        }
        if self.blur.max_kernel % 2 == 0 {
            return Err(Error::InvalidConfig("blur.max_kernel must be odd".into()));
        }
        if !(self.blur.max_sigma >= 0.0) || !(self.moire_blur_sigma >= 0.0) {
            return Err(Error::InvalidConfig("blur sigmas must be non-negative".into()));
        }
        for (name, p) in [
            ("moire_probability", self.moire_probability),
            ("motion_blur_probability", self.motion_blur_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("{name} must lie in [0, 1]")));
            }
        }
        if !(0.0..=0.2).contains(&self.moire_offset) {
            return Err(Error::InvalidConfig("moire_offset must lie in [0, 0.2]".into()));
        }
        Ok(())
    }

    /// Whether the Moiré stage may fire at the configured step.
    pub fn moire_enabled(&self) -> bool {
        self.step >= self.total_steps / 2
    }
}

/// Contrast and brightness for `step`: `theta2` uniform in `(-M1, M1)` and
/// `theta1` uniform in `(1 - D/2, 1 + D)`, both ramps scaled by progress.
pub fn sample_gamut_params(step: u64, cfg: &ChannelConfig, rng: &mut impl Rng) -> (f64, f64) {
    let u: f64 = rng.random_range(-1.0..1.0);
    let v: f64 = rng.random();
    gamut_from_draws(step, cfg, u, v)
}

fn gamut_from_draws(step: u64, cfg: &ChannelConfig, u: f64, v: f64) -> (f64, f64) {
    let m1 = cfg.brightness_ramp.limit * cfg.brightness_ramp.progress(step);
    let d = cfg.contrast_ramp.limit * cfg.contrast_ramp.progress(step);
    let theta2 = u * m1;
    let theta1 = if d == 0.0 { 1.0 } else { 1.0 - d / 2.0 + v * 1.5 * d };
    (theta1, theta2)
}

/// One applied stage with the parameters it used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum Stage {
    Gamut { theta1: f64, theta2: f64 },
    Saturation { theta3: f64 },
    DefocusBlur { size: usize, sigma: f64 },
    MotionBlur { size: usize, sigma: f64, theta: f64 },
    Moire { homography: Homography, blur_sigma: f64 },
    Noise { sigma: f64, seed: u64 },
}

impl Stage {
    pub fn apply(&self, img: &RasterU8) -> Result<RasterU8> {
        match *self {
            Stage::Gamut { theta1, theta2 } => color_gamut(img, theta1, theta2),
            Stage::Saturation { theta3 } => saturation(img, theta3),
            Stage::DefocusBlur { size, sigma } => blur(img, &gaussian_blur_kernel(size, sigma)?),
            Stage::MotionBlur { size, sigma, theta } => {
                blur(img, &motion_blur_kernel(size, sigma, theta)?)
            }
            Stage::Moire {
                ref homography,
                blur_sigma,
            } => moire_with(img, homography, blur_sigma),
            Stage::Noise { sigma, seed } => {
                gaussian_noise(img, sigma, &mut ChaCha8Rng::seed_from_u64(seed))
            }
        }
    }
}

/// Ordered record of the stages applied by [`apply_channel`].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DistortionTrace {
    pub stages: Vec<Stage>,
}

/// Re-runs a recorded trace.
pub fn replay(trace: &DistortionTrace, img: &RasterU8) -> Result<RasterU8> {
    let mut out = img.clone();
    for s in &trace.stages {
        out = s.apply(&out)?;
    }
    Ok(out)
}

fn kernel_size(sigma: f64, max_kernel: usize) -> usize {
    let n = 2 * (3.0 * sigma).ceil() as usize + 1;
    n.clamp(1, max_kernel.max(1))
}

/// Draws every stage for `cfg.step`. All random draws happen in a fixed
/// order whatever the step, so a larger step at the same seed only scales
/// the same underlying draws.
pub fn sample_trace(img_dims: (usize, usize), cfg: &ChannelConfig, rng: &mut impl Rng) -> Result<DistortionTrace> {
    cfg.validate()?;
    let step = cfg.step;
    let u_bright: f64 = rng.random_range(-1.0..1.0);
    let u_contrast: f64 = rng.random();
    let u_sat: f64 = rng.random();
    let u_motion: f64 = rng.random();
    let u_blur: f64 = rng.random();
    let u_angle: f64 = rng.random();
    let u_moire: f64 = rng.random();
    let moire_seed: u64 = rng.random();
    let u_noise: f64 = rng.random();
    let noise_seed: u64 = rng.random();

    let mut stages = Vec::new();
    let (theta1, theta2) = gamut_from_draws(step, cfg, u_bright, u_contrast);
    stages.push(Stage::Gamut { theta1, theta2 });

    let theta3 = 1.0 - u_sat * (1.0 - cfg.saturation_ramp.limit) * cfg.saturation_ramp.progress(step);
    stages.push(Stage::Saturation { theta3 });

    if u_motion < cfg.motion_blur_probability {
        let sigma = cfg.blur.max_sigma * (0.5 + 0.5 * u_blur);
        let size = kernel_size(sigma, cfg.blur.max_kernel);
        if sigma > 0.0 && size > 1 {
            stages.push(Stage::MotionBlur {
                size,
                sigma,
                theta: std::f64::consts::PI * u_angle,
            });
        }
    } else {
        let progress = (step as f64 / cfg.blur.ramp_steps as f64).min(1.0);
        let sigma = cfg.blur.max_sigma * u_blur * progress;
        let size = kernel_size(sigma, cfg.blur.max_kernel);
        if sigma > 0.0 && size > 1 {
            stages.push(Stage::DefocusBlur { size, sigma });
        }
    }

    if cfg.moire_enabled() && u_moire < cfg.moire_probability {
        let mut mrng = ChaCha8Rng::seed_from_u64(moire_seed);
        let homography = sample_moire_homography(&mut mrng, img_dims.0, img_dims.1, cfg.moire_offset)?;
        stages.push(Stage::Moire {
            homography,
            blur_sigma: cfg.moire_blur_sigma,
        });
    }

    let sigma = u_noise * cfg.noise_ramp.limit * cfg.noise_ramp.progress(step);
    if sigma > 0.0 {
        stages.push(Stage::Noise {
            sigma,
            seed: noise_seed,
        });
    }
    Ok(DistortionTrace { stages })
}

/// Samples and applies the channel to a 3-channel image.
pub fn apply_channel(img: &RasterU8, cfg: &ChannelConfig, rng: &mut impl Rng) -> Result<(RasterU8, DistortionTrace)> {
    img.require_channels(3)?;
    let trace = sample_trace(img.dims(), cfg, rng)?;
    let out = replay(&trace, img)?;
    Ok((out, trace))
}

/// [`apply_channel`] with a generator seeded from `cfg.seed`.
pub fn simulate(img: &RasterU8, cfg: &ChannelConfig) -> Result<(RasterU8, DistortionTrace)> {
    apply_channel(img, cfg, &mut ChaCha8Rng::seed_from_u64(cfg.seed))
}

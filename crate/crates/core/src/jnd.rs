//! Pixel-domain just-noticeable-distortion (JND) model.
//!
//! The threshold at each pixel combines spatial masking, driven by the
//! background luminance and the strongest directional gradient, with a
//! luminance-adaptation term:
//!
//! ```text
//! jnd = lambda1 * (f1(bg, mg) + lambda2) + f2(bg)
//! ```
//!
//! `f1` follows the classical Chou-Li masking form. Both the background
//! kernel and the four directional gradient kernels come from the same
//! pixel-domain JND lineage.

use crate::error::{Error, Result};
use crate::filter::convolve2d;
use crate::raster::{RasterF, RasterU8};

const BG_WEIGHTS: [[f64; 5]; 5] = [
    [1.0, 1.0, 1.0, 1.0, 1.0],
    [1.0, 2.0, 2.0, 2.0, 1.0],
    [1.0, 2.0, 0.0, 2.0, 1.0],
    [1.0, 2.0, 2.0, 2.0, 1.0],
    [1.0, 1.0, 1.0, 1.0, 1.0],
];

const GRAD_WEIGHTS: [[[f64; 5]; 5]; 4] = [
    [
        [0.0, 0.0, 0.0, 0.0, 0.0],
        [1.0, 3.0, 8.0, 3.0, 1.0],
        [0.0, 0.0, 0.0, 0.0, 0.0],
        [-1.0, -3.0, -8.0, -3.0, -1.0],
        [0.0, 0.0, 0.0, 0.0, 0.0],
    ],
    [
        [0.0, 0.0, 1.0, 0.0, 0.0],
        [0.0, 8.0, 3.0, 0.0, 0.0],
        [1.0, 3.0, 0.0, -3.0, -1.0],
        [0.0, 0.0, -3.0, -8.0, 0.0],
        [0.0, 0.0, -1.0, 0.0, 0.0],
    ],
    [
        [0.0, 0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 3.0, 8.0, 0.0],
        [-1.0, -3.0, 0.0, 3.0, 1.0],
        [0.0, -8.0, -3.0, 0.0, 0.0],
        [0.0, 0.0, -1.0, 0.0, 0.0],
    ],
    [
        [0.0, 1.0, 0.0, -1.0, 0.0],
        [0.0, 3.0, 0.0, -3.0, 0.0],
        [0.0, 8.0, 0.0, -8.0, 0.0],
        [0.0, 3.0, 0.0, -3.0, 0.0],
        [0.0, 1.0, 0.0, -1.0, 0.0],
    ],
];

fn kernel_from(weights: &[[f64; 5]; 5], scale: f64) -> RasterF {
    RasterF::from_fn(5, 5, |x, y| weights[y][x] * scale)
}

/// Weights and kernels of the JND model.
#[derive(Debug, Clone, PartialEq)]
pub struct JndParams {
    pub lambda1: f64,
    pub lambda2: f64,
    bg_kernel: RasterF,
    grad_kernels: [RasterF; 4],
}

impl Default for JndParams {
    fn default() -> Self {
        Self {
            lambda1: 1.0,
            lambda2: 0.0,
            bg_kernel: kernel_from(&BG_WEIGHTS, 1.0 / 32.0),
            grad_kernels: GRAD_WEIGHTS.map(|g| kernel_from(&g, 1.0 / 16.0)),
        }
    }
}

impl JndParams {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        Self::default().with_lambdas(lambda1, lambda2)
    }

    pub fn with_lambdas(mut self, lambda1: f64, lambda2: f64) -> Result<Self> {
        if !(lambda1 >= 0.0 && lambda2 >= 0.0 && lambda1.is_finite() && lambda2.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "JND weights must be finite and non-negative (lambda1={lambda1}, lambda2={lambda2})"
            )));
        }
        self.lambda1 = lambda1;
        self.lambda2 = lambda2;
        Ok(self)
    }

    /// Replaces the background kernel; weights are normalized to sum to 1.
    pub fn with_bg_kernel(mut self, kernel: RasterF) -> Result<Self> {
        if kernel.dims() != (5, 5) || kernel.data().iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidConfig(
                "background kernel must be 5x5 with non-negative weights".into(),
            ));
        }
        let s = kernel.sum();
        if s <= 0.0 {
            return Err(Error::InvalidConfig("background kernel sums to zero".into()));
        }
        self.bg_kernel = kernel.map(|v| v / s);
        Ok(self)
    }

    /// Replaces the gradient bank; each kernel must sum to zero.
    pub fn with_grad_kernels(mut self, kernels: [RasterF; 4]) -> Result<Self> {
        for k in &kernels {
            if k.dims() != (5, 5) || k.sum().abs() > 1e-12 {
                return Err(Error::InvalidConfig(
                    "gradient kernels must be 5x5 and sum to zero".into(),
                ));
            }
        }
        self.grad_kernels = kernels;
        Ok(self)
    }

    pub fn bg_kernel(&self) -> &RasterF {
        &self.bg_kernel
    }

    pub fn grad_kernels(&self) -> &[RasterF; 4] {
        &self.grad_kernels
    }
}

/// Per-pixel JND thresholds in gray levels. Every value is finite and > 0.
#[derive(Debug, Clone, PartialEq)]
pub struct JndMap {
    plane: RasterF,
}

impl JndMap {
    pub fn new(plane: RasterF) -> Result<Self> {
        if plane.data().iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::OutOfRange("JND values must be finite and positive".into()));
        }
        Ok(Self { plane })
    }

    pub fn plane(&self) -> &RasterF {
        &self.plane
    }

    pub fn width(&self) -> usize {
        self.plane.width()
    }

    pub fn height(&self) -> usize {
        self.plane.height()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.plane.get(x, y)
    }

    /// Linearly rescales the map to a 0..255 preview image.
    pub fn to_preview(&self) -> RasterU8 {
        let lo = self.plane.min();
        let hi = self.plane.max();
        let span = if hi > lo { hi - lo } else { 1.0 };
        self.plane.map(|v| (v - lo) / span * 255.0).to_u8()
    }
}

/// Weighted 5x5 background luminance (replicated borders).
pub fn background_luminance(gray: &RasterU8, params: &JndParams) -> Result<RasterF> {
    gray.require_channels(1)?;
    convolve2d(&gray.plane_f(0), &params.bg_kernel)
}

/// Largest absolute response over the four directional gradient kernels.
pub fn max_gradient(gray: &RasterU8, params: &JndParams) -> Result<RasterF> {
    gray.require_channels(1)?;
    let plane = gray.plane_f(0);
    let mut out = RasterF::zeros(gray.width(), gray.height());
    for k in &params.grad_kernels {
        let resp = convolve2d(&plane, k)?;
        for (o, r) in out.data_mut().iter_mut().zip(resp.data()) {
            *o = o.max(r.abs());
        }
    }
    Ok(out)
}

/// Luminance-adaptation threshold for a background level in `[0, 255]`.
pub fn luminance_adaptation(bg: f64) -> Result<f64> {
    if !(0.0..=255.0).contains(&bg) {
        return Err(Error::OutOfRange(format!("background level {bg} outside [0, 255]")));
    }
    Ok(if bg <= 127.0 {
        17.0 * (1.0 - bg / 127.0) + 3.0
    } else {
        3.0 / 128.0 * (bg - 127.0) + 3.0
    })
}

#[inline]
fn masking_slope(bg: f64) -> f64 {
    0.0001 * bg + 0.115
}

#[inline]
fn masking_offset(bg: f64) -> f64 {
    (0.5 - 0.01 * bg).max(0.0)
}

/// Spatial masking term `mg * alpha(bg) + max(0, beta(bg))`.
pub fn spatial_masking(bg: &RasterF, mg: &RasterF, _params: &JndParams) -> Result<RasterF> {
    bg.require_same_shape(mg)?;
    let data = bg
        .data()
        .iter()
        .zip(mg.data())
        .map(|(&b, &m)| m * masking_slope(b) + masking_offset(b))
        .collect();
    RasterF::new(bg.width(), bg.height(), data)
}

/// Full JND map of a gray image.
pub fn jnd_map(gray: &RasterU8, params: &JndParams) -> Result<JndMap> {
    let bg = background_luminance(gray, params)?;
    let mg = max_gradient(gray, params)?;
    let f1 = spatial_masking(&bg, &mg, params)?;
    let mut plane = RasterF::zeros(gray.width(), gray.height());
    for ((o, &b), &m) in plane.data_mut().iter_mut().zip(bg.data()).zip(f1.data()) {
        // bg is a convex combination of 8-bit samples; clamp float noise.
        let f2 = luminance_adaptation(b.clamp(0.0, 255.0))?;
        *o = params.lambda1 * (m + params.lambda2) + f2;
    }
    JndMap::new(plane)
}

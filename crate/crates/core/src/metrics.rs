//! Quality and robustness metrics: PSNR, SSIM and bit error rate.

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::filter::gaussian_taps;
use crate::raster::RasterU8;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
const SSIM_C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

/// Visual quality and robustness of one watermarking run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    /// Decibels; `f64::INFINITY` for identical images (serialized as null).
    #[serde(with = "infinite_as_null")]
    pub psnr: f64,
    pub ssim: f64,
    pub ber: f64,
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Mean squared error over every sample.
pub fn mse(a: &RasterU8, b: &RasterU8) -> Result<f64> {
    a.require_same_shape(b)?;
    let n = a.data().len().max(1) as f64;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    Ok(sum / n)
}

/// Peak signal-to-noise ratio in dB; `+inf` when the images are identical.
pub fn psnr(a: &RasterU8, b: &RasterU8) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (255.0 * 255.0 / m).log10())
}

/// Single-scale SSIM with an 11x11 Gaussian window (sigma 1.5), averaged
/// over all fully contained windows.
pub fn ssim(a: &RasterU8, b: &RasterU8) -> Result<f64> {
    a.require_channels(1)?;
    b.require_channels(1)?;
    a.require_same_shape(b)?;
    let (w, h) = a.dims();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::ImageTooSmall(format!(
            "{w}x{h} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window"
        )));
    }
    let taps = gaussian_taps(SSIM_SIGMA, SSIM_WINDOW / 2);
    let x: Vec<f64> = a.data().iter().map(|&v| v as f64).collect();
    let y: Vec<f64> = b.data().iter().map(|&v| v as f64).collect();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();

    let ow = w - SSIM_WINDOW + 1;
    let oh = h - SSIM_WINDOW + 1;
    let valid = |src: &[f64]| -> Vec<f64> {
        let mut tmp = vec![0.0; ow * h];
        for row in 0..h {
            for ox in 0..ow {
                let base = row * w + ox;
                tmp[row * ow + ox] = taps.iter().enumerate().map(|(k, t)| t * src[base + k]).sum();
            }
        }
        let mut out = vec![0.0; ow * oh];
        for oy in 0..oh {
            for ox in 0..ow {
                out[oy * ow + ox] = taps
                    .iter()
                    .enumerate()
                    .map(|(k, t)| t * tmp[(oy + k) * ow + ox])
                    .sum();
            }
        }
        out
    };
    let mx = valid(&x);
    let my = valid(&y);
    let sxx = valid(&xx);
    let syy = valid(&yy);
    let sxy = valid(&xy);

    let total: f64 = (0..ow * oh)
        .map(|i| {
            let (ux, uy) = (mx[i], my[i]);
            let vx = sxx[i] - ux * ux;
            let vy = syy[i] - uy * uy;
            let cov = sxy[i] - ux * uy;
            ((2.0 * ux * uy + SSIM_C1) * (2.0 * cov + SSIM_C2))
                / ((ux * ux + uy * uy + SSIM_C1) * (vx + vy + SSIM_C2))
        })
        .sum();
    Ok((total / (ow * oh) as f64).min(1.0))
}

/// SSIM of the luma planes (RGB inputs) or of the planes themselves (gray).
pub fn ssim_luma(a: &RasterU8, b: &RasterU8) -> Result<f64> {
    a.require_same_shape(b)?;
    if a.channels() == 1 {
        return ssim(a, b);
    }
    ssim(
        &crate::filter::to_grayscale(a)?,
        &crate::filter::to_grayscale(b)?,
    )
}

/// Fraction of positions at which two equal-length bit strings differ.
pub fn ber(sent: &BitString, recv: &BitString) -> Result<f64> {
    if sent.len() != recv.len() {
        return Err(Error::LengthMismatch(sent.len(), recv.len()));
    }
    if sent.is_empty() {
        return Ok(0.0);
    }
    let diff = sent
        .bits()
        .iter()
        .zip(recv.bits())
        .filter(|(a, b)| a != b)
        .count();
    Ok(diff as f64 / sent.len() as f64)
}

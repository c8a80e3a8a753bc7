//! Photometric distortions: gamut shift, desaturation, blur and sensor noise.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::filter::{convolve2d, luma};
use crate::raster::{to_u8, RasterF, RasterU8};

/// Contrast/brightness change `theta1 * v + theta2` on every sample.
pub fn color_gamut(img: &RasterU8, theta1: f64, theta2: f64) -> Result<RasterU8> {
    if !(theta1 > 0.0) {
        return Err(Error::NonPositiveContrast(theta1));
    }
    let mut lut = [0u8; 256];
    for (v, o) in lut.iter_mut().enumerate() {
        *o = to_u8(theta1 * v as f64 + theta2);
    }
    let data = img.data().iter().map(|&v| lut[v as usize]).collect();
    RasterU8::new(img.width(), img.height(), img.channels(), data)
}

/// Blends every channel with the pixel's luma: `theta3 * c + (1 - theta3) * Y`.
pub fn saturation(img: &RasterU8, theta3: f64) -> Result<RasterU8> {
    img.require_channels(3)?;
    if !(0.0..=1.0).contains(&theta3) {
        return Err(Error::OutOfRange(format!("saturation level {theta3} outside [0, 1]")));
    }
    let mut out = img.clone();
    for px in out.data_mut().chunks_exact_mut(3) {
        let y = luma(px[0], px[1], px[2]);
        for v in px.iter_mut() {
            *v = to_u8(theta3 * *v as f64 + (1.0 - theta3) * y);
        }
    }
    Ok(out)
}

/// Adds i.i.d. `N(0, sigma^2)` noise to every sample.
pub fn gaussian_noise(img: &RasterU8, sigma: f64, rng: &mut impl Rng) -> Result<RasterU8> {
    if !(sigma >= 0.0) {
        return Err(Error::NegativeSigma(sigma));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let mut out = img.clone();
    for v in out.data_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *v = to_u8(*v as f64 + sigma * z);
    }
    Ok(out)
}

fn check_kernel_args(n: usize, sigma: f64) -> Result<()> {
    if n % 2 == 0 {
        return Err(Error::EvenKernel(n, n));
    }
    if !(sigma > 0.0) {
        return Err(Error::NonPositiveSigma(sigma));
    }
    Ok(())
}

fn normalized(mut k: RasterF) -> RasterF {
    let s = k.sum();
    k.data_mut().iter_mut().for_each(|v| *v /= s);
    k
}

fn gauss2(x: f64, y: f64, sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    (-(x * x + y * y) / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI * s2)
}

/// Isotropic `n x n` Gaussian kernel normalized to unit sum.
pub fn gaussian_blur_kernel(n: usize, sigma: f64) -> Result<RasterF> {
    check_kernel_args(n, sigma)?;
    let r = (n / 2) as f64;
    Ok(normalized(RasterF::from_fn(n, n, |x, y| {
        gauss2(x as f64 - r, y as f64 - r, sigma)
    })))
}

/// Motion kernel `G(x cos(theta), y sin(theta))`, normalized to unit sum.
///
/// At `theta = 0` the kernel only varies along x, at `theta = pi/2` only
/// along y.
pub fn motion_blur_kernel(n: usize, sigma: f64, theta: f64) -> Result<RasterF> {
    check_kernel_args(n, sigma)?;
    let r = (n / 2) as f64;
    let (c, s) = (theta.cos(), theta.sin());
    Ok(normalized(RasterF::from_fn(n, n, |x, y| {
        gauss2((x as f64 - r) * c, (y as f64 - r) * s, sigma)
    })))
}

/// Convolves each channel with `kernel` (replicated borders).
pub fn blur(img: &RasterU8, kernel: &RasterF) -> Result<RasterU8> {
    let planes = (0..img.channels())
        .map(|c| convolve2d(&img.plane_f(c), kernel))
        .collect::<Result<Vec<_>>>()?;
    RasterU8::from_planes_f(&planes)
}

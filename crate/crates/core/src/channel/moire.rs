//! Moiré simulation: LCD subpixel layout, camera perspective, Bayer
//! sampling with bilinear demosaicing, then back to the image grid.

use rand::Rng;

use crate::error::{Error, Result};
use crate::filter::{convolve_separable, gaussian_taps};
use crate::geometry::{random_perspective, warp_planes, Homography, Point, Quad};
use crate::raster::{to_u8, RasterF, RasterU8};

/// Lit subpixel rows per 3x3 block; the third row is the inter-element gap.
const LIT_ROWS: usize = 2;

/// Expands each pixel to a 3x3 block: R at column 0, G at column 1, B at
/// column 2, in rows 0 and 1 only.
pub fn lcd_subpixel_resample(img: &RasterU8) -> Result<RasterU8> {
    img.require_channels(3)?;
    let (w, h) = img.dims();
    Ok(RasterU8::from_fn(3 * w, 3 * h, 3, |x, y, c| {
        if y % 3 < LIT_ROWS && x % 3 == c {
            img.get(x / 3, y / 3, c)
        } else {
            0
        }
    }))
}

fn subpixel_planes(img: &RasterU8) -> Vec<RasterF> {
    let (w, h) = img.dims();
    (0..3)
        .map(|c| {
            RasterF::from_fn(3 * w, 3 * h, |x, y| {
                if y % 3 < LIT_ROWS && x % 3 == c {
                    img.get(x / 3, y / 3, c) as f64
                } else {
                    0.0
                }
            })
        })
        .collect()
}

/// RGGB color index sampled at `(x, y)`.
#[inline]
fn bayer_channel(x: usize, y: usize) -> usize {
    match (y % 2, x % 2) {
        (0, 0) => 0,
        (1, 1) => 2,
        _ => 1,
    }
}

fn require_even(w: usize, h: usize) -> Result<()> {
    if w % 2 != 0 || h % 2 != 0 {
        return Err(Error::OddDimensions(w, h));
    }
    Ok(())
}

/// Samples an RGB image through an RGGB color filter array.
pub fn bayer_mosaic(img: &RasterU8) -> Result<RasterU8> {
    img.require_channels(3)?;
    let (w, h) = img.dims();
    require_even(w, h)?;
    Ok(RasterU8::from_fn(w, h, 1, |x, y, _| img.get(x, y, bayer_channel(x, y))))
}

fn mosaic_f(planes: &[RasterF]) -> RasterF {
    let (w, h) = planes[0].dims();
    RasterF::from_fn(w, h, |x, y| planes[bayer_channel(x, y)].get(x, y))
}

/// Mirror index without repeating the edge sample (`-1 -> 1`), which
/// keeps the parity of the CFA pattern.
#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let mut i = i;
    if i < 0 {
        i = -i;
    }
    if i >= n {
        i = 2 * (n - 1) - i;
    }
    i.clamp(0, n - 1) as usize
}

fn demosaic_f(mosaic: &RasterF) -> Vec<RasterF> {
    let (w, h) = mosaic.dims();
    let m = mosaic.data();
    let at = |x: isize, y: isize| m[reflect(y, h) * w + reflect(x, w)];
    let mut planes = vec![RasterF::zeros(w, h); 3];
    for y in 0..h {
        for x in 0..w {
            let (xi, yi) = (x as isize, y as isize);
            let here = at(xi, yi);
            let cross = (at(xi - 1, yi) + at(xi + 1, yi) + at(xi, yi - 1) + at(xi, yi + 1)) / 4.0;
            let diag = (at(xi - 1, yi - 1) + at(xi + 1, yi - 1) + at(xi - 1, yi + 1) + at(xi + 1, yi + 1)) / 4.0;
            let horiz = (at(xi - 1, yi) + at(xi + 1, yi)) / 2.0;
            let vert = (at(xi, yi - 1) + at(xi, yi + 1)) / 2.0;
            let (r, g, b) = match (y % 2, x % 2) {
                (0, 0) => (here, cross, diag),
                (1, 1) => (diag, cross, here),
                // Green on a red row: red left/right, blue above/below.
                (0, 1) => (horiz, here, vert),
                _ => (vert, here, horiz),
            };
            planes[0].set(x, y, r);
            planes[1].set(x, y, g);
            planes[2].set(x, y, b);
        }
    }
    planes
}

/// Bilinear demosaicing of an RGGB mosaic.
pub fn demosaic_bilinear(mosaic: &RasterU8) -> Result<RasterU8> {
    mosaic.require_channels(1)?;
    let (w, h) = mosaic.dims();
    require_even(w, h)?;
    RasterU8::from_planes_f(&demosaic_f(&mosaic.plane_f(0)))
}

/// Moiré pipeline with explicit parameters. `h` acts on subpixel
/// coordinates of the `3W x 3H` layout; `blur_sigma = 0` skips the optical
/// blur.
pub fn moire_with(img: &RasterU8, h: &Homography, blur_sigma: f64) -> Result<RasterU8> {
    img.require_channels(3)?;
    if !(blur_sigma >= 0.0) {
        return Err(Error::NegativeSigma(blur_sigma));
    }
    let (w, hh) = img.dims();
    if w == 0 || hh == 0 {
        return Err(Error::ImageTooSmall("empty image".into()));
    }
    let (sw, sh) = (3 * w, 3 * hh);
    let sub = subpixel_planes(img);

    // Camera canvas: bounding box of the warped layout, even-sized for the CFA.
    let mapped = Quad::image_frame(sw, sh).transformed(h)?;
    let xs = mapped.corners().map(|p| p.x);
    let ys = mapped.corners().map(|p| p.y);
    let min_x = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let min_y = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_x = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let max_y = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let shift = Homography::translation(-(min_x + 0.5).floor(), -(min_y + 0.5).floor());
    let to_canvas = shift.compose(h)?;
    let far = shift
        .apply(Point::new(max_x, max_y))
        .ok_or(Error::SingularTransform)?;
    let cw = ((far.x + 1.5).ceil() as usize).next_multiple_of(2);
    let ch = ((far.y + 1.5).ceil() as usize).next_multiple_of(2);

    let (mut shot, _) = warp_planes(&sub, &to_canvas, cw, ch)?;
    if blur_sigma > 0.0 {
        let taps = gaussian_taps(blur_sigma, (3.0 * blur_sigma).ceil() as usize);
        shot = shot.iter().map(|p| convolve_separable(p, &taps)).collect();
    }
    let rgb = demosaic_f(&mosaic_f(&shot));
    let (back, _) = warp_planes(&rgb, &to_canvas.inverse()?, sw, sh)?;

    // Sensor integration over each pixel's block. Only two subpixels per
    // block carry a given channel, so the block sum is divided by two.
    let planes: Vec<RasterF> = back
        .iter()
        .map(|p| {
            RasterF::from_fn(w, hh, |x, y| {
                let mut s = 0.0;
                for dy in 0..3 {
                    for dx in 0..3 {
                        s += p.get(3 * x + dx, 3 * y + dy);
                    }
                }
                s / LIT_ROWS as f64
            })
        })
        .collect();
    let mut out = RasterU8::filled(w, hh, 3, 0);
    for (c, p) in planes.iter().enumerate() {
        for y in 0..hh {
            for x in 0..w {
                out.set(x, y, c, to_u8(p.get(x, y)));
            }
        }
    }
    Ok(out)
}

/// Draws the camera homography for [`moire_with`]: a random perspective of
/// the subpixel layout with corner jitter up to `offset` of the side.
pub fn sample_moire_homography(rng: &mut impl Rng, w: usize, h: usize, offset: f64) -> Result<Homography> {
    random_perspective(rng, offset)?.scaled_to(3.0 * w as f64, 3.0 * h as f64)
}

/// Full Moiré stage with a randomly drawn camera pose.
pub fn moire(img: &RasterU8, rng: &mut impl Rng, offset: f64, blur_sigma: f64) -> Result<RasterU8> {
    let h = sample_moire_homography(rng, img.width(), img.height(), offset)?;
    moire_with(img, &h, blur_sigma)
}

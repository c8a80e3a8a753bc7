//! Color conversion and spatial filtering primitives.

use crate::error::{Error, Result};
use crate::raster::{to_u8, RasterF, RasterU8};

pub const LUMA_R: f64 = 0.299;
pub const LUMA_G: f64 = 0.587;
pub const LUMA_B: f64 = 0.114;

/// Unrounded luma of one RGB sample.
#[inline]
pub fn luma(r: u8, g: u8, b: u8) -> f64 {
    LUMA_R * r as f64 + LUMA_G * g as f64 + LUMA_B * b as f64
}

/// Converts an RGB raster to 8-bit luma.
pub fn to_grayscale(img: &RasterU8) -> Result<RasterU8> {
    img.require_channels(3)?;
    let data = img
        .data()
        .chunks_exact(3)
        .map(|p| to_u8(luma(p[0], p[1], p[2])))
        .collect();
    RasterU8::new(img.width(), img.height(), 1, data)
}

/// Luma plane without rounding. Gray inputs pass through as floats.
pub fn luma_plane(img: &RasterU8) -> RasterF {
    match img.channels() {
        1 => img.plane_f(0),
        _ => {
            let data = img
                .data()
                .chunks_exact(3)
                .map(|p| luma(p[0], p[1], p[2]))
                .collect();
            RasterF::new(img.width(), img.height(), data).expect("luma is finite")
        }
    }
}

/// 2-D convolution with replicated borders. Output has the input's size.
///
/// This is a true convolution (the kernel is flipped), so an impulse
/// reproduces the kernel unflipped around its position.
pub fn convolve2d(img: &RasterF, kernel: &RasterF) -> Result<RasterF> {
    let (kw, kh) = kernel.dims();
    if kw % 2 == 0 || kh % 2 == 0 {
        return Err(Error::EvenKernel(kw, kh));
    }
    let (w, h) = img.dims();
    let cx = (kw / 2) as isize;
    let cy = (kh / 2) as isize;
    let taps: Vec<(isize, isize, f64)> = (0..kh)
        .flat_map(|j| (0..kw).map(move |i| (i, j)))
        .filter_map(|(i, j)| {
            let k = kernel.get(i, j);
            (k != 0.0).then_some((i as isize - cx, j as isize - cy, k))
        })
        .collect();
    let mut out = RasterF::zeros(w, h);
    let interior = |x: usize, y: usize| {
        x as isize >= cx
            && y as isize >= cy
            && (x as isize) < w as isize - cx
            && (y as isize) < h as isize - cy
    };
    let src = img.data();
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            if interior(x, y) {
                for &(dx, dy, k) in &taps {
                    let sx = (x as isize - dx) as usize;
                    let sy = (y as isize - dy) as usize;
                    acc += k * src[sy * w + sx];
                }
            } else {
                for &(dx, dy, k) in &taps {
                    acc += k * img.get_clamped(x as isize - dx, y as isize - dy);
                }
            }
            out.set(x, y, acc);
        }
    }
    Ok(out)
}

/// Separable convolution with a symmetric 1-D kernel along both axes
/// (replicated borders).
pub fn convolve_separable(img: &RasterF, taps: &[f64]) -> RasterF {
    assert!(taps.len() % 2 == 1, "separable kernel must have odd length");
    let (w, h) = img.dims();
    if w == 0 || h == 0 {
        return img.clone();
    }
    let r = taps.len() / 2;
    let src = img.data();
    let mut tmp = vec![0.0; w * h];
    let mut padded = vec![0.0; w + 2 * r];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        padded[..r].fill(row[0]);
        padded[r..r + w].copy_from_slice(row);
        padded[r + w..].fill(row[w - 1]);
        let dst = &mut tmp[y * w..(y + 1) * w];
        for (x, d) in dst.iter_mut().enumerate() {
            *d = taps.iter().zip(&padded[x..x + taps.len()]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        let dst = &mut out[y * w..(y + 1) * w];
        for (k, t) in taps.iter().enumerate() {
            let sy = (y + k).saturating_sub(r).min(h - 1);
            for (d, v) in dst.iter_mut().zip(&tmp[sy * w..(sy + 1) * w]) {
                *d += t * v;
            }
        }
    }
    RasterF::new(w, h, out).expect("same shape")
}

/// Normalized 1-D Gaussian taps of length `2*radius + 1`.
pub fn gaussian_taps(sigma: f64, radius: usize) -> Vec<f64> {
    let r = radius as isize;
    let mut taps: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= s);
    taps
}

/// Mean over a `(2r+1) x (2r+1)` window with replicated borders, via a
/// summed-area table.
pub fn box_mean(img: &RasterF, radius: usize) -> RasterF {
    let (w, h) = img.dims();
    let r = radius as isize;
    // Padded integral image so replicated borders stay exact.
    let pw = w + 2 * radius;
    let ph = h + 2 * radius;
    let mut sat = vec![0.0f64; (pw + 1) * (ph + 1)];
    for py in 0..ph {
        let mut row = 0.0;
        for px in 0..pw {
            row += img.get_clamped(px as isize - r, py as isize - r);
            sat[(py + 1) * (pw + 1) + px + 1] = sat[py * (pw + 1) + px + 1] + row;
        }
    }
    let side = 2 * radius + 1;
    let area = (side * side) as f64;
    RasterF::from_fn(w, h, |x, y| {
        let (x0, y0, x1, y1) = (x, y, x + side, y + side);
        let s = sat[y1 * (pw + 1) + x1] - sat[y0 * (pw + 1) + x1] - sat[y1 * (pw + 1) + x0]
            + sat[y0 * (pw + 1) + x0];
        s / area
    })
}

/// Median filter over a square odd window with replicated borders.
pub fn median_filter(img: &RasterU8, window: usize) -> Result<RasterU8> {
    img.require_channels(1)?;
    if window < 3 || window % 2 == 0 {
        return Err(Error::EvenWindow(window));
    }
    let (w, h) = img.dims();
    let r = (window / 2) as isize;
    let src = img.data();
    let mut out = vec![0u8; w * h];
    let mut buf = Vec::with_capacity(window * window);
    let mid = window * window / 2;
    for y in 0..h as isize {
        for x in 0..w as isize {
            buf.clear();
            for dy in -r..=r {
                let sy = (y + dy).clamp(0, h as isize - 1) as usize;
                for dx in -r..=r {
                    let sx = (x + dx).clamp(0, w as isize - 1) as usize;
                    buf.push(src[sy * w + sx]);
                }
            }
            let (_, m, _) = buf.select_nth_unstable(mid);
            out[y as usize * w + x as usize] = *m;
        }
    }
    RasterU8::new(w, h, 1, out)
}

/// Bilinear resize of every channel (pixel-center aligned).
pub fn resize_bilinear(img: &RasterU8, out_w: usize, out_h: usize) -> RasterU8 {
    let (w, h) = img.dims();
    let sx = w as f64 / out_w as f64;
    let sy = h as f64 / out_h as f64;
    let ch = img.channels();
    RasterU8::from_fn(out_w, out_h, ch, |x, y, c| {
        let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (w - 1) as f64);
        let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (h - 1) as f64);
        let x0 = fx.floor() as usize;
        let y0 = fy.floor() as usize;
        let x1 = (x0 + 1).min(w - 1);
        let y1 = (y0 + 1).min(h - 1);
        let ax = fx - x0 as f64;
        let ay = fy - y0 as f64;
        let v = (1.0 - ay)
            * ((1.0 - ax) * img.get(x0, y0, c) as f64 + ax * img.get(x1, y0, c) as f64)
            + ay * ((1.0 - ax) * img.get(x0, y1, c) as f64 + ax * img.get(x1, y1, c) as f64);
        to_u8(v)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grayscale_examples() {
        let px = |r, g, b| {
            let img = RasterU8::new(1, 1, 3, vec![r, g, b]).unwrap();
            to_grayscale(&img).unwrap().get(0, 0, 0)
        };
        assert_eq!(px(255, 255, 255), 255);
        assert_eq!(px(0, 0, 0), 0);
        assert_eq!(px(255, 0, 0), 76);
    }

    #[test]
    fn grayscale_rejects_gray() {
        let img = RasterU8::filled(2, 2, 1, 3);
        assert!(matches!(
            to_grayscale(&img),
            Err(Error::ChannelMismatch { .. })
        ));
    }

    #[test]
    fn grayscale_of_replicated_gray_is_identity() {
        let gray = RasterU8::from_fn(17, 9, 1, |x, y, _| ((x * 37 + y * 11) % 256) as u8);
        let rgb = gray.gray_to_rgb().unwrap();
        assert_eq!(to_grayscale(&rgb).unwrap(), gray);
    }

    #[test]
    fn identity_kernel() {
        let img = RasterF::from_fn(7, 5, |x, y| (x * y) as f64 + 0.25);
        let k = RasterF::filled(1, 1, 1.0);
        assert_eq!(convolve2d(&img, &k).unwrap(), img);
    }

    #[test]
    fn dc_preserved() {
        let img = RasterF::filled(9, 9, 42.0);
        let k = RasterF::new(3, 3, vec![0.1, 0.2, 0.05, 0.05, 0.2, 0.1, 0.1, 0.1, 0.1]).unwrap();
        let out = convolve2d(&img, &k).unwrap();
        assert!(out.data().iter().all(|v| (v - 42.0).abs() < 1e-12));
    }

    #[test]
    fn impulse_reproduces_kernel() {
        let mut img = RasterF::zeros(9, 9);
        img.set(4, 4, 1.0);
        let k = RasterF::from_fn(3, 3, |x, y| (1 + x + 3 * y) as f64);
        let out = convolve2d(&img, &k).unwrap();
        for y in 0..9 {
            for x in 0..9 {
                let expected = if (3..=5).contains(&x) && (3..=5).contains(&y) {
                    k.get(x - 3, y - 3)
                } else {
                    0.0
                };
                assert_eq!(out.get(x, y), expected, "at ({x},{y})");
            }
        }
    }

    #[test]
    fn even_kernel_rejected() {
        let img = RasterF::zeros(4, 4);
        assert_eq!(
            convolve2d(&img, &RasterF::zeros(2, 3)),
            Err(Error::EvenKernel(2, 3))
        );
    }

    #[test]
    fn median_examples() {
        let flat = RasterU8::filled(6, 6, 1, 77);
        assert_eq!(median_filter(&flat, 3).unwrap(), flat);

        let mut salt = RasterU8::filled(7, 7, 1, 0);
        salt.set(3, 3, 0, 255);
        assert!(median_filter(&salt, 3).unwrap().data().iter().all(|&v| v == 0));

        let checker = RasterU8::from_fn(8, 8, 1, |x, y, _| if (x + y) % 2 == 0 { 255 } else { 0 });
        let out = median_filter(&checker, 3).unwrap();
        for y in 1..7 {
            for x in 1..7 {
                assert_eq!(out.get(x, y, 0), checker.get(x, y, 0));
            }
        }
        assert_eq!(median_filter(&flat, 4), Err(Error::EvenWindow(4)));
        assert_eq!(median_filter(&flat, 1), Err(Error::EvenWindow(1)));
    }

    #[test]
    fn box_mean_matches_direct() {
        let img = RasterF::from_fn(11, 8, |x, y| ((x * 7 + y * 13) % 17) as f64);
        let fast = box_mean(&img, 2);
        for y in 0..8isize {
            for x in 0..11isize {
                let mut s = 0.0;
                for dy in -2..=2 {
                    for dx in -2..=2 {
                        s += img.get_clamped(x + dx, y + dy);
                    }
                }
                assert!((fast.get(x as usize, y as usize) - s / 25.0).abs() < 1e-9);
            }
        }
    }

    proptest! {
        #[test]
        fn convolution_is_linear(
            f in proptest::collection::vec(-100.0f64..100.0, 36),
            g in proptest::collection::vec(-100.0f64..100.0, 36),
            k in proptest::collection::vec(-1.0f64..1.0, 9),
            alpha in -3.0f64..3.0,
            beta in -3.0f64..3.0,
        ) {
            let f = RasterF::new(6, 6, f).unwrap();
            let g = RasterF::new(6, 6, g).unwrap();
            let k = RasterF::new(3, 3, k).unwrap();
            let mix = RasterF::from_fn(6, 6, |x, y| alpha * f.get(x, y) + beta * g.get(x, y));
            let lhs = convolve2d(&mix, &k).unwrap();
            let cf = convolve2d(&f, &k).unwrap();
            let cg = convolve2d(&g, &k).unwrap();
            for y in 0..6 {
                for x in 0..6 {
                    let rhs = alpha * cf.get(x, y) + beta * cg.get(x, y);
                    prop_assert!((lhs.get(x, y) - rhs).abs() < 1e-9);
                }
            }
        }
    }
}

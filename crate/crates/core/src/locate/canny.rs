//! Canny edge detection.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::filter::{convolve_separable, gaussian_taps};
use crate::raster::{Mask, RasterF, RasterU8};

const SMOOTH_SIGMA: f64 = 1.4;

/// Sobel gradients of a float plane (replicated borders).
pub fn sobel(plane: &RasterF) -> (RasterF, RasterF) {
    let (w, h) = plane.dims();
    let mut gx = RasterF::zeros(w, h);
    let mut gy = RasterF::zeros(w, h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let p = |dx: isize, dy: isize| plane.get_clamped(x + dx, y + dy);
            let sx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
            let sy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
            gx.set(x as usize, y as usize, sx);
            gy.set(x as usize, y as usize, sy);
        }
    }
    (gx, gy)
}

/// Canny edges: Gaussian smoothing (sigma 1.4), Sobel gradients,
/// non-maximum suppression and hysteresis on the gradient magnitude.
///
/// Suppression keeps a pixel that is strictly greater than its predecessor
/// along the gradient and not smaller than its successor, so a symmetric
/// step yields a single-pixel edge.
pub fn canny(gray: &RasterU8, low: f64, high: f64) -> Result<Mask> {
    gray.require_channels(1)?;
    if !(low > 0.0 && low < high) {
        return Err(Error::BadThresholds { low, high });
    }
    let (w, h) = gray.dims();
    let taps = gaussian_taps(SMOOTH_SIGMA, (3.0 * SMOOTH_SIGMA).ceil() as usize);
    let smooth = convolve_separable(&gray.plane_f(0), &taps);
    let (gx, gy) = sobel(&smooth);
    let mag: Vec<f64> = gx.data().iter().zip(gy.data()).map(|(a, b)| a.hypot(*b)).collect();

    let mut thin = vec![0.0; w * h];
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            let i = y * w + x;
            let m = mag[i];
            if m < low {
                continue;
            }
            let (dx, dy) = (gx.data()[i], gy.data()[i]);
            // Quantize the gradient direction to 0, 45, 90 or 135 degrees.
            let angle = dy.atan2(dx).to_degrees().rem_euclid(180.0);
            let (ox, oy): (isize, isize) = if !(22.5..157.5).contains(&angle) {
                (1, 0)
            } else if angle < 67.5 {
                (1, 1)
            } else if angle < 112.5 {
                (0, 1)
            } else {
                (-1, 1)
            };
            let at = |sx: isize, sy: isize| mag[(y as isize + sy) as usize * w + (x as isize + sx) as usize];
            let prev = at(-ox, -oy);
            let next = at(ox, oy);
            if m > prev && m >= next {
                thin[i] = m;
            }
        }
    }

    let mut edges = Mask::zeros(w, h);
    let mut queue = VecDeque::new();
    for (i, &m) in thin.iter().enumerate() {
        if m >= high {
            edges.set(i % w, i / w, true);
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if thin[j] >= low && !edges.get(nx as usize, ny as usize) {
                    edges.set(nx as usize, ny as usize, true);
                    queue.push_back(j);
                }
            }
        }
    }
    Ok(edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_has_no_edges() {
        let img = RasterU8::filled(30, 30, 1, 100);
        assert!(canny(&img, 10.0, 30.0).unwrap().is_empty());
    }

    #[test]
    fn vertical_step_is_one_pixel_wide() {
        let img = RasterU8::from_fn(40, 30, 1, |x, _, _| if x < 20 { 0 } else { 255 });
        let e = canny(&img, 20.0, 60.0).unwrap();
        for y in 3..27 {
            let row: Vec<usize> = (0..40).filter(|&x| e.get(x, y)).collect();
            assert_eq!(row.len(), 1, "row {y}: {row:?}");
            assert!((19..=20).contains(&row[0]));
        }
    }

    #[test]
    fn rectangle_boundary_has_four_sides() {
        let img = RasterU8::from_fn(80, 60, 1, |x, y, _| {
            if (15..65).contains(&x) && (10..50).contains(&y) { 255 } else { 0 }
        });
        let e = canny(&img, 20.0, 60.0).unwrap();
        let col = |x: usize| (15..45).filter(|&y| e.get(x, y)).count();
        let row = |y: usize| (25..55).filter(|&x| e.get(x, y)).count();
        assert!(col(14) + col(15) >= 29);
        assert!(col(64) + col(65) >= 29);
        assert!(row(9) + row(10) >= 29);
        assert!(row(49) + row(50) >= 29);
        assert!(!e.get(40, 30));
    }

    #[test]
    fn thresholds_validated() {
        let img = RasterU8::filled(5, 5, 1, 0);
        assert!(matches!(canny(&img, 30.0, 10.0), Err(Error::BadThresholds { .. })));
        assert!(canny(&img, 0.0, 10.0).is_err());
    }
}

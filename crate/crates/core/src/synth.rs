//! Deterministic synthetic hosts and screen captures for tests and the
//! bundled evaluation corpus.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::{homography_from_quads, warp_perspective_with_coverage, Homography, Point, Quad};
use crate::raster::{to_u8, RasterU8};

/// Default side of a synthetic host.
pub const HOST_SIDE: usize = 512;

/// Textured RGB image built from a gradient, a few gratings, soft blobs and
/// mild noise. Values stay within roughly `[40, 215]`.
pub fn texture(id: u64, width: usize, height: usize) -> RasterU8 {
    let mut rng = ChaCha8Rng::seed_from_u64(id.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ 0x7465_7874);
    let (w, h) = (width as f64, height as f64);

    let base: [f64; 3] = std::array::from_fn(|_| rng.random_range(80.0..175.0));
    let grad: [(f64, f64); 3] = std::array::from_fn(|_| (rng.random_range(-40.0..40.0), rng.random_range(-40.0..40.0)));

    struct Grating {
        fx: f64,
        fy: f64,
        phase: f64,
        amp: [f64; 3],
    }
    let gratings: Vec<Grating> = (0..rng.random_range(2..5))
        .map(|_| {
            let period = rng.random_range(6.0..90.0);
            let angle = rng.random_range(0.0..std::f64::consts::PI);
            let f = std::f64::consts::TAU / period;
            Grating {
                fx: f * angle.cos(),
                fy: f * angle.sin(),
                phase: rng.random_range(0.0..std::f64::consts::TAU),
                amp: std::array::from_fn(|_| rng.random_range(4.0..22.0)),
            }
        })
        .collect();

    struct Blob {
        cx: f64,
        cy: f64,
        r: f64,
        delta: [f64; 3],
    }
    let blobs: Vec<Blob> = (0..rng.random_range(3..9))
        .map(|_| Blob {
            cx: rng.random_range(0.0..w),
            cy: rng.random_range(0.0..h),
            r: rng.random_range(0.05..0.25) * w.min(h),
            delta: std::array::from_fn(|_| rng.random_range(-45.0..45.0)),
        })
        .collect();

    let noise = Normal::new(0.0, 3.0).expect("valid sigma");
    let mut out = RasterU8::filled(width, height, 3, 0);
    for y in 0..height {
        for x in 0..width {
            let (u, v) = (x as f64 / w - 0.5, y as f64 / h - 0.5);
            let (fx, fy) = (x as f64, y as f64);
            for c in 0..3 {
                let mut val = base[c] + grad[c].0 * u + grad[c].1 * v;
                for g in &gratings {
                    val += g.amp[c] * (g.fx * fx + g.fy * fy + g.phase).sin();
                }
                for b in &blobs {
                    let d2 = ((fx - b.cx).powi(2) + (fy - b.cy).powi(2)) / (b.r * b.r);
                    // Smooth-edged disk.
                    val += b.delta[c] / (1.0 + d2.powi(3));
                }
                val += noise.sample(&mut rng);
                out.set(x, y, c, to_u8(val.clamp(40.0, 215.0)));
            }
        }
    }
    out
}

/// `n` hosts of side `side`, ids `0..n`.
pub fn corpus(n: usize, side: usize) -> Vec<RasterU8> {
    (0..n as u64).map(|i| texture(i, side, side)).collect()
}

/// A picture pasted onto a uniform background, with its true outline.
#[derive(Debug, Clone)]
pub struct Capture {
    pub image: RasterU8,
    /// Outline of the pasted picture in capture coordinates.
    pub truth: Quad,
    /// Maps picture coordinates to capture coordinates.
    pub homography: Homography,
    pub background: [u8; 3],
}

/// Pastes `img` centered on a `canvas x canvas` background, moving each
/// corner by up to `jitter` times the picture side in both axes.
pub fn synth_capture(img: &RasterU8, canvas: usize, jitter: f64, rng: &mut impl Rng) -> Result<Capture> {
    img.require_channels(3)?;
    let (w, h) = img.dims();
    if canvas < w.max(h) {
        return Err(Error::ImageTooSmall(format!("canvas {canvas} smaller than picture")));
    }
    if !(0.0..=0.2).contains(&jitter) {
        return Err(Error::OutOfRange(format!("jitter {jitter} outside [0, 0.2]")));
    }
    let frame = Quad::image_frame(w, h);
    let ox = (canvas - w) as f64 / 2.0;
    let oy = (canvas - h) as f64 / 2.0;
    let lim = (canvas as f64 - 0.5, canvas as f64 - 0.5);
    let truth = loop {
        let c = frame.corners().map(|p| {
            let dx = jitter * w as f64 * rng.random_range(-1.0..=1.0);
            let dy = jitter * h as f64 * rng.random_range(-1.0..=1.0);
            Point::new(
                (p.x + ox + dx).clamp(-0.5, lim.0),
                (p.y + oy + dy).clamp(-0.5, lim.1),
            )
        });
        if let Ok(q) = Quad::new(c) {
            break q;
        }
    };
    let homography = homography_from_quads(&frame, &truth)?;

    let dark = rng.random::<bool>();
    let background: [u8; 3] = std::array::from_fn(|_| {
        if dark {
            rng.random_range(0..=25)
        } else {
            rng.random_range(230..=255)
        }
    });
    let (warped, cov) = warp_perspective_with_coverage(img, &homography, (canvas, canvas))?;
    let image = RasterU8::from_fn(canvas, canvas, 3, |x, y, c| {
        if cov.get(x, y) {
            warped.get(x, y, c)
        } else {
            background[c]
        }
    });
    Ok(Capture {
        image,
        truth,
        homography,
        background,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textures_are_deterministic_and_distinct() {
        let a = texture(3, 64, 48);
        assert_eq!(a, texture(3, 64, 48));
        assert_ne!(a, texture(4, 64, 48));
        assert_eq!(a.dims(), (64, 48));
        assert!(a.data().iter().all(|&v| (40..=215).contains(&v)));
    }

    #[test]
    fn capture_truth_matches_homography() {
        let img = texture(0, 128, 128);
        let cap = synth_capture(&img, 200, 0.1, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(cap.image.dims(), (200, 200));
        let mapped = Quad::image_frame(128, 128).transformed(&cap.homography).unwrap();
        for (a, b) in mapped.corners().iter().zip(cap.truth.corners()) {
            assert!(a.dist(b) < 1e-6);
        }
        assert_eq!(cap.image.get(0, 0, 0), cap.background[0]);
        assert!(synth_capture(&img, 100, 0.1, &mut ChaCha8Rng::seed_from_u64(1)).is_err());
    }
}

//! Finding the displayed picture inside a photo and rectifying it.
//!
//! The capture is segmented against its (assumed uniform) background, the
//! foreground mask is completed morphologically, its outline is turned into
//! straight lines, and the line intersections are clustered into four
//! corners that define the rectifying homography.

mod canny;
mod hough;
mod kmeans;
mod mask;

pub use canny::{canny, sobel};
pub use hough::{
    fit_line, hough_lines, hough_peaks, intersect, line_intersections, near, HoughPeak, LineParams,
};
pub use kmeans::{kmeans_best_of, kmeans_pp, KMeans, CONVERGENCE_PX};
pub use mask::{
    adaptive_threshold, close_disk, dilate_disk, erode_disk, fill_holes, largest_component,
    refine_mask,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::median_filter;
use crate::geometry::{homography_from_quads, warp_perspective, Homography, Point, Quad};
use crate::raster::{Mask, RasterU8};

/// Side of the rectified output.
pub const RECTIFIED_SIDE: usize = 512;

/// Tuning of [`locate_with`]. Defaults target captures of a picture on a
/// roughly uniform background.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocateParams {
    pub median_window: usize,
    /// Color distance from the background that always counts as foreground.
    pub deviation_threshold: f64,
    pub adaptive_block: usize,
    pub adaptive_offset: f64,
    /// Fraction of border pixels allowed to differ from the background
    /// before the whole frame is taken as the picture.
    pub border_outlier_fraction: f64,
    pub canny_low: f64,
    pub canny_high: f64,
    pub rho_res: f64,
    pub theta_res: f64,
    /// Minimum Hough votes as a fraction of the smaller capture side.
    pub min_votes_fraction: f64,
    pub angle_min: f64,
    pub kmeans_iters: usize,
    /// Independent k-means++ runs; the lowest objective wins.
    pub kmeans_attempts: usize,
    pub seed: u64,
    pub output_side: usize,
}

impl Default for LocateParams {
    fn default() -> Self {
        Self {
            median_window: 5,
            deviation_threshold: 12.0,
            adaptive_block: 51,
            adaptive_offset: 10.0,
            border_outlier_fraction: 0.3,
            canny_low: 20.0,
            canny_high: 60.0,
            rho_res: 2.0,
            theta_res: 0.5f64.to_radians(),
            min_votes_fraction: 0.2,
            angle_min: 20f64.to_radians(),
            kmeans_iters: 100,
            kmeans_attempts: 5,
            seed: 0,
            output_side: RECTIFIED_SIDE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocateResult {
    pub quad: Quad,
    /// Maps capture coordinates onto the rectified frame.
    pub homography: Homography,
    pub rectified: RasterU8,
    /// Filled in by [`LocateResult::with_truth`].
    pub recall_estimate: Option<f64>,
}

impl LocateResult {
    pub fn with_truth(mut self, truth: &Quad) -> Self {
        self.recall_estimate = Some(recall(&self.quad, truth));
        self
    }
}

/// Orders four corners clockwise on screen, starting from the corner with
/// the smallest `x + y` (ties: smaller `y`).
pub fn order_clockwise(points: &[Point; 4]) -> Result<Quad> {
    let cx = points.iter().map(|p| p.x).sum::<f64>() / 4.0;
    let cy = points.iter().map(|p| p.y).sum::<f64>() / 4.0;
    let mut sorted = *points;
    // With y pointing down, increasing atan2 runs clockwise on screen.
    sorted.sort_by(|a, b| {
        (a.y - cy)
            .atan2(a.x - cx)
            .total_cmp(&(b.y - cy).atan2(b.x - cx))
    });
    let start = (0..4)
        .min_by(|&i, &j| {
            let (a, b) = (sorted[i], sorted[j]);
            (a.x + a.y).total_cmp(&(b.x + b.y)).then(a.y.total_cmp(&b.y))
        })
        .unwrap();
    sorted.rotate_left(start);
    Quad::new(sorted).map_err(|_| Error::NonConvex)
}

/// Sutherland-Hodgman clip of a polygon by a convex clockwise polygon.
fn clip_polygon(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    let mut out = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        if out.is_empty() {
            break;
        }
        let (a, b) = (clip[i], clip[(i + 1) % n]);
        // Inside means on the right of a->b on screen (clockwise winding).
        let side = |p: &Point| (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
        let input = std::mem::take(&mut out);
        for j in 0..input.len() {
            let cur = input[j];
            let prev = input[(j + input.len() - 1) % input.len()];
            let (sc, sp) = (side(&cur), side(&prev));
            if sc >= 0.0 {
                if sp < 0.0 {
                    out.push(lerp(prev, cur, sp / (sp - sc)));
                }
                out.push(cur);
            } else if sp >= 0.0 {
                out.push(lerp(prev, cur, sp / (sp - sc)));
            }
        }
    }
    out
}

fn lerp(a: Point, b: Point, t: f64) -> Point {
    Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
}

/// Fraction of the true quad's area covered by the detected quad.
pub fn recall(detected: &Quad, truth: &Quad) -> f64 {
    let inter = clip_polygon(detected.corners(), truth.corners());
    let area = crate::geometry::signed_area2(&inter).abs() / 2.0;
    (area / truth.area()).clamp(0.0, 1.0)
}

/// Mean distance between corresponding corners.
pub fn mean_corner_error(a: &Quad, b: &Quad) -> f64 {
    a.corners()
        .iter()
        .zip(b.corners())
        .map(|(p, q)| p.dist(q))
        .sum::<f64>()
        / 4.0
}

fn failed(stage: &'static str, reason: impl Into<String>) -> Error {
    Error::LocalizationFailed {
        stage,
        reason: reason.into(),
    }
}

fn median_u8(values: &mut [u8]) -> u8 {
    let mid = values.len() / 2;
    *values.select_nth_unstable(mid).1
}

/// Background color estimate from a 4-pixel border ring, and whether the
/// ring is uniform enough for that estimate to be meaningful.
fn border_background(img: &RasterU8, params: &LocateParams) -> (Vec<f64>, bool) {
    let (w, h) = img.dims();
    let ring = 4.min(w / 4).min(h / 4).max(1);
    let on_ring = |x: usize, y: usize| x < ring || y < ring || x >= w - ring || y >= h - ring;
    let coords: Vec<(usize, usize)> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter(|&(x, y)| on_ring(x, y))
        .collect();
    let bg: Vec<f64> = (0..img.channels())
        .map(|c| {
            let mut v: Vec<u8> = coords.iter().map(|&(x, y)| img.get(x, y, c)).collect();
            median_u8(&mut v) as f64
        })
        .collect();
    let outliers = coords
        .iter()
        .filter(|&&(x, y)| {
            (0..img.channels()).any(|c| (img.get(x, y, c) as f64 - bg[c]).abs() > params.deviation_threshold)
        })
        .count();
    let uniform = (outliers as f64) <= params.border_outlier_fraction * coords.len() as f64;
    (bg, uniform)
}

/// Foreground mask of the capture, before completion.
pub fn segment_foreground(captured: &RasterU8, params: &LocateParams) -> Result<Option<Mask>> {
    let (bg, uniform) = border_background(captured, params);
    if !uniform {
        return Ok(None);
    }
    let (w, h) = captured.dims();
    let dev = RasterU8::from_fn(w, h, 1, |x, y, _| {
        let d = (0..captured.channels())
            .map(|c| (captured.get(x, y, c) as f64 - bg[c]).abs())
            .fold(0.0, f64::max);
        d.min(255.0) as u8
    });
    let dev = median_filter(&dev, params.median_window)?;
    let absolute = Mask::from_fn(w, h, |x, y| dev.get(x, y, 0) as f64 > params.deviation_threshold);
    // Pixels standing out from their neighborhood's deviation; thresholding
    // the inverted plane keeps the polarity of a dark, uniform background.
    let inverted = RasterU8::from_fn(w, h, 1, |x, y, _| 255 - dev.get(x, y, 0));
    let local = adaptive_threshold(&inverted, params.adaptive_block, params.adaptive_offset)?.complement();
    Ok(Some(absolute.union(&local)))
}

/// Corner estimate of the picture in a capture.
pub fn detect_quad(captured: &RasterU8, params: &LocateParams) -> Result<Quad> {
    let (w, h) = captured.dims();
    if w < 64 || h < 64 {
        return Err(Error::ImageTooSmall(format!("capture {w}x{h} is below 64x64")));
    }
    let Some(raw) = segment_foreground(captured, params)? else {
        // Non-uniform border: the picture fills the frame.
        return Ok(Quad::image_frame(w, h));
    };
    let component = largest_component(&raw).map_err(|_| failed("segmentation", "no foreground pixels"))?;
    let mask = refine_mask(&component).map_err(|_| failed("refine", "empty mask"))?;
    if mask.count() < (w * h) / 100 {
        return Err(failed("segmentation", "foreground region too small"));
    }

    let margin = 8;
    let padded = mask.pad(margin);
    let edges = canny(&padded.to_raster(), params.canny_low, params.canny_high)?;
    if edges.is_empty() {
        return Err(failed("edges", "no edges on the mask outline"));
    }
    let (pw, ph) = edges.dims();
    let edge_pts: Vec<Point> = (0..ph)
        .flat_map(|y| (0..pw).map(move |x| (x, y)))
        .filter(|&(x, y)| edges.get(x, y))
        .map(|(x, y)| Point::new(x as f64, y as f64))
        .collect();

    let mut min_votes = (params.min_votes_fraction * w.min(h) as f64).max(10.0);
    let lines = loop {
        let peaks = hough_peaks(&edges, params.rho_res, params.theta_res, min_votes as u32);
        let lines = refine_lines(&peaks, &edge_pts, params);
        if lines.len() >= 4 || min_votes <= 10.0 {
            break lines;
        }
        min_votes = (min_votes / 2.0).max(10.0);
    };
    if lines.len() < 4 {
        return Err(failed("hough", format!("only {} outline lines found", lines.len())));
    }

    let points = line_intersections(&lines, params.angle_min, pw, ph);
    if points.len() < 4 {
        return Err(failed("intersections", format!("only {} corner candidates", points.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let km = kmeans_best_of(&points, 4, &mut rng, params.kmeans_iters, params.kmeans_attempts.max(1))
        .map_err(|e| failed("clustering", e.to_string()))?;
    let shift = margin as f64;
    let corners: [Point; 4] = std::array::from_fn(|i| {
        Point::new(km.centers[i].x - shift, km.centers[i].y - shift)
    });
    order_clockwise(&corners).map_err(|_| failed("ordering", "corner clusters are not a convex quad"))
}

/// Refits every Hough line to its nearby edge pixels, then drops lines
/// that duplicate a stronger one. At most eight lines are kept.
fn refine_lines(peaks: &[HoughPeak], edge_pts: &[Point], params: &LocateParams) -> Vec<LineParams> {
    let mut out: Vec<LineParams> = Vec::new();
    for peak in peaks.iter().take(16) {
        let mut line = peak.line;
        for band in [2.0 * params.rho_res, 1.5] {
            let support: Vec<Point> = edge_pts
                .iter()
                .copied()
                .filter(|p| line.distance(*p).abs() <= band)
                .collect();
            match fit_line(&support) {
                Some(l) if support.len() >= 10 => line = l,
                _ => break,
            }
        }
        if !out.iter().any(|l| near(l, &line, 6.0, 3f64.to_radians())) {
            out.push(line);
        }
        if out.len() == 8 {
            break;
        }
    }
    out
}

/// Locates the picture and rectifies it to `params.output_side` squared.
pub fn locate_with(captured: &RasterU8, params: &LocateParams) -> Result<LocateResult> {
    let quad = detect_quad(captured, params)?;
    let side = params.output_side;
    let homography = homography_from_quads(&quad, &Quad::image_frame(side, side))
        .map_err(|e| failed("homography", e.to_string()))?;
    let rectified = warp_perspective(captured, &homography, (side, side))?;
    Ok(LocateResult {
        quad,
        homography,
        rectified,
        recall_estimate: None,
    })
}

/// [`locate_with`] at default parameters.
pub fn locate_and_rectify(captured: &RasterU8) -> Result<LocateResult> {
    locate_with(captured, &LocateParams::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_examples() {
        let pts = [
            Point::new(1.0, 1.0),
            Point::new(0.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 0.0),
        ];
        let q = order_clockwise(&pts).unwrap();
        assert_eq!(
            q.corners(),
            &[
                Point::new(0.0, 0.0),
                Point::new(1.0, 0.0),
                Point::new(1.0, 1.0),
                Point::new(0.0, 1.0)
            ]
        );
        let line = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(2.0, 2.0),
            Point::new(3.0, 3.0),
        ];
        assert_eq!(order_clockwise(&line), Err(Error::NonConvex));
    }

    #[test]
    fn rotated_square_order() {
        // Diamond: the two leftmost-topmost candidates tie on x + y.
        let c = Point::new(50.0, 50.0);
        for k in 0..12 {
            let a = k as f64 * 0.5;
            let pts: [Point; 4] = std::array::from_fn(|i| {
                let t = a + i as f64 * std::f64::consts::FRAC_PI_2;
                Point::new(c.x + 20.0 * t.cos(), c.y + 20.0 * t.sin())
            });
            let q = order_clockwise(&pts).unwrap();
            let first = q.corners()[0];
            assert!(pts.iter().all(|p| first.x + first.y <= p.x + p.y + 1e-9));
            assert!(q.area() > 0.0);
        }
    }

    #[test]
    fn recall_examples() {
        let truth = Quad::from_xy([(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)]).unwrap();
        assert!((recall(&truth, &truth) - 1.0).abs() < 1e-12);
        let half = Quad::from_xy([(5.0, -5.0), (20.0, -5.0), (20.0, 20.0), (5.0, 20.0)]).unwrap();
        assert!((recall(&half, &truth) - 0.5).abs() < 1e-12);
        let away = Quad::from_xy([(50.0, 50.0), (60.0, 50.0), (60.0, 60.0), (50.0, 60.0)]).unwrap();
        assert_eq!(recall(&away, &truth), 0.0);
    }

    #[test]
    fn axis_aligned_paste() {
        let inner = RasterU8::from_fn(200, 200, 3, |x, y, c| {
            (100.0 + 60.0 * ((x as f64 * 0.1 + c as f64).sin() + (y as f64 * 0.07).cos()) / 2.0) as u8 + 40
        });
        let cap = RasterU8::from_fn(320, 300, 3, |x, y, c| {
            if (60..260).contains(&x) && (50..250).contains(&y) {
                inner.get(x - 60, y - 50, c)
            } else {
                20
            }
        });
        let truth = Quad::from_xy([(59.5, 49.5), (259.5, 49.5), (259.5, 249.5), (59.5, 249.5)]).unwrap();
        let res = locate_and_rectify(&cap).unwrap().with_truth(&truth);
        assert!(mean_corner_error(&res.quad, &truth) <= 2.0, "{:?}", res.quad);
        assert!(res.recall_estimate.unwrap() > 0.98);
        assert_eq!(res.rectified.dims(), (512, 512));
    }

    #[test]
    fn full_frame_input() {
        let img = RasterU8::from_fn(128, 128, 3, |x, y, c| ((x * 3 + y * 5 + c * 40) % 256) as u8);
        let q = detect_quad(&img, &LocateParams::default()).unwrap();
        assert!(mean_corner_error(&q, &Quad::image_frame(128, 128)) <= 2.0);
    }

    #[test]
    fn blank_capture_fails_with_stage() {
        let img = RasterU8::filled(100, 100, 3, 30);
        match locate_and_rectify(&img) {
            Err(Error::LocalizationFailed { stage, .. }) => assert_eq!(stage, "segmentation"),
            other => panic!("unexpected {other:?}"),
        }
    }
}

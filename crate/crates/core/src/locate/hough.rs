//! Straight-line detection in edge maps and line intersections.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::raster::Mask;

/// Line `x cos(theta) + y sin(theta) = rho`, `theta` in `[0, pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineParams {
    pub rho: f64,
    pub theta: f64,
}

impl LineParams {
    /// Builds a line, folding `theta` into `[0, pi)` (negating `rho` when
    /// the normal flips).
    pub fn new(rho: f64, theta: f64) -> Self {
        let mut t = theta.rem_euclid(2.0 * PI);
        let mut r = rho;
        if t >= PI {
            t -= PI;
            r = -r;
        }
        Self { rho: r, theta: t }
    }

    pub fn distance(&self, p: Point) -> f64 {
        p.x * self.theta.cos() + p.y * self.theta.sin() - self.rho
    }

    /// Unsigned angle between the two lines, in `[0, pi/2]`.
    pub fn angle_to(&self, other: &LineParams) -> f64 {
        let d = (self.theta - other.theta).abs() % PI;
        d.min(PI - d)
    }
}

/// A detected line with its accumulator support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoughPeak {
    pub line: LineParams,
    pub votes: u32,
}

/// Standard Hough transform. Returns local accumulator maxima with at least
/// `min_votes` votes, strongest first, after suppressing any peak within
/// three cells (in rho and theta) of a stronger one.
pub fn hough_lines(edges: &Mask, rho_res: f64, theta_res: f64, min_votes: u32) -> Vec<LineParams> {
    hough_peaks(edges, rho_res, theta_res, min_votes)
        .into_iter()
        .map(|p| p.line)
        .collect()
}

/// [`hough_lines`] keeping the vote counts.
pub fn hough_peaks(edges: &Mask, rho_res: f64, theta_res: f64, min_votes: u32) -> Vec<HoughPeak> {
    assert!(rho_res > 0.0 && theta_res > 0.0, "Hough resolutions must be positive");
    let (w, h) = edges.dims();
    let n_theta = (PI / theta_res).round().max(1.0) as usize;
    let diag = ((w * w + h * h) as f64).sqrt();
    let n_rho = (2.0 * diag / rho_res).ceil() as usize + 1;
    let rho_cell = |rho: f64| ((rho + diag) / rho_res).round() as usize;
    let trig: Vec<(f64, f64)> = (0..n_theta)
        .map(|t| {
            let a = t as f64 * theta_res;
            (a.cos(), a.sin())
        })
        .collect();

    let mut acc = vec![0u32; n_theta * n_rho];
    for y in 0..h {
        for x in 0..w {
            if !edges.get(x, y) {
                continue;
            }
            for (t, &(c, s)) in trig.iter().enumerate() {
                let r = rho_cell(x as f64 * c + y as f64 * s);
                acc[t * n_rho + r] += 1;
            }
        }
    }

    // Neighbor in theta wraps around pi with rho mirrored.
    let cell = |t: isize, r: isize| -> Option<u32> {
        let (t, r) = if t < 0 {
            (t + n_theta as isize, n_rho as isize - 1 - r)
        } else if t >= n_theta as isize {
            (t - n_theta as isize, n_rho as isize - 1 - r)
        } else {
            (t, r)
        };
        (r >= 0 && r < n_rho as isize).then(|| acc[t as usize * n_rho + r as usize])
    };

    let mut peaks = Vec::new();
    for t in 0..n_theta {
        for r in 0..n_rho {
            let v = acc[t * n_rho + r];
            if v < min_votes || v == 0 {
                continue;
            }
            let mut is_max = true;
            'nb: for dt in -1..=1isize {
                for dr in -1..=1isize {
                    if dt == 0 && dr == 0 {
                        continue;
                    }
                    if let Some(n) = cell(t as isize + dt, r as isize + dr) {
                        // Plateaus keep their first cell in scan order.
                        let earlier = dt < 0 || (dt == 0 && dr < 0);
                        if n > v || (n == v && earlier) {
                            is_max = false;
                            break 'nb;
                        }
                    }
                }
            }
            if is_max {
                peaks.push((v, t, r));
            }
        }
    }
    peaks.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut kept: Vec<HoughPeak> = Vec::new();
    let to_line = |t: usize, r: usize| LineParams::new(r as f64 * rho_res - diag, t as f64 * theta_res);
    for (v, t, r) in peaks {
        let line = to_line(t, r);
        let close = kept.iter().any(|k| near(&k.line, &line, 3.0 * rho_res, 3.0 * theta_res));
        if !close {
            kept.push(HoughPeak { line, votes: v });
        }
    }
    kept
}

/// Whether two lines lie within the given rho/theta window, accounting for
/// the wrap at `theta = pi`.
pub fn near(a: &LineParams, b: &LineParams, rho_tol: f64, theta_tol: f64) -> bool {
    let dt = (a.theta - b.theta).abs();
    if dt <= theta_tol + 1e-12 {
        return (a.rho - b.rho).abs() <= rho_tol + 1e-9;
    }
    if PI - dt <= theta_tol + 1e-12 {
        return (a.rho + b.rho).abs() <= rho_tol + 1e-9;
    }
    false
}

/// Intersection point of two lines, `None` when (numerically) parallel.
pub fn intersect(a: &LineParams, b: &LineParams) -> Option<Point> {
    let (c1, s1) = (a.theta.cos(), a.theta.sin());
    let (c2, s2) = (b.theta.cos(), b.theta.sin());
    let det = c1 * s2 - s1 * c2;
    if det.abs() < 1e-9 {
        return None;
    }
    Some(Point::new(
        (a.rho * s2 - b.rho * s1) / det,
        (c1 * b.rho - c2 * a.rho) / det,
    ))
}

/// Pairwise intersections of lines meeting at `angle_min` radians or more,
/// kept when inside the image bounds enlarged 1.5 times about the center.
pub fn line_intersections(lines: &[LineParams], angle_min: f64, width: usize, height: usize) -> Vec<Point> {
    let (w, h) = (width as f64, height as f64);
    let mut out = Vec::new();
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            if lines[i].angle_to(&lines[j]) < angle_min {
                continue;
            }
            if let Some(p) = intersect(&lines[i], &lines[j]) {
                if p.x >= -0.25 * w && p.x <= 1.25 * w && p.y >= -0.25 * h && p.y <= 1.25 * h {
                    out.push(p);
                }
            }
        }
    }
    out
}

/// Total-least-squares line through points.
pub fn fit_line(points: &[Point]) -> Option<LineParams> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.x).sum::<f64>() / n;
    let my = points.iter().map(|p| p.y).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy) = (p.x - mx, p.y - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    // Direction of largest spread; the normal is perpendicular to it.
    let dir = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let normal = dir + PI / 2.0;
    let rho = mx * normal.cos() + my * normal.sin();
    Some(LineParams::new(rho, normal))
}

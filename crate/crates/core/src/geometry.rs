//! Affine and projective warps, homography estimation and quads.
//!
//! Coordinates are pixel centers: sample `(x, y)` sits at `(x, y)` and
//! covers `[x - 0.5, x + 0.5]`. Image `y` grows downwards. All warps use
//! inverse mapping; a transform maps source coordinates to destination
//! coordinates and each destination pixel samples the source at the
//! inverse-mapped position.

use nalgebra::{SMatrix, SVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{Mask, RasterF, RasterU8};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Six-parameter affine map `(x, y) -> (a x + b y + c, d x + e y + f)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl AffineParams {
    pub const IDENTITY: AffineParams = AffineParams {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 0.0,
        e: 1.0,
        f: 0.0,
    };

    pub fn new(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> Self {
        Self { a, b, c, d, e, f }
    }

    pub fn det(&self) -> f64 {
        self.a * self.e - self.b * self.d
    }

    pub fn to_homography(&self) -> Result<Homography> {
        if self.det().abs() <= 1e-12 {
            return Err(Error::SingularTransform);
        }
        Homography::from_matrix([self.a, self.b, self.c, self.d, self.e, self.f, 0.0, 0.0, 1.0])
    }
}

/// Projective transform stored row-major with `h[8] = 1` when possible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Homography {
    h: [f64; 9],
}

impl Homography {
    pub const IDENTITY: Homography = Homography {
        h: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
    };

    /// Normalizes by `h[8]` (when it is not vanishingly small) and checks
    /// that the matrix is nonsingular.
    pub fn from_matrix(mut h: [f64; 9]) -> Result<Self> {
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularTransform);
        }
        if h[8].abs() > 1e-12 && h[8] != 1.0 {
            let s = h[8];
            h.iter_mut().for_each(|v| *v /= s);
        }
        let out = Self { h };
        if out.det().abs() <= 1e-12 {
            return Err(Error::SingularTransform);
        }
        Ok(out)
    }

    pub fn matrix(&self) -> &[f64; 9] {
        &self.h
    }

    pub fn det(&self) -> f64 {
        let h = &self.h;
        h[0] * (h[4] * h[8] - h[5] * h[7]) - h[1] * (h[3] * h[8] - h[5] * h[6])
            + h[2] * (h[3] * h[7] - h[4] * h[6])
    }

    /// Maps a point; `None` when it lands on the line at infinity.
    #[inline]
    pub fn apply(&self, p: Point) -> Option<Point> {
        let h = &self.h;
        let w = h[6] * p.x + h[7] * p.y + h[8];
        if w.abs() < 1e-15 {
            return None;
        }
        Some(Point::new(
            (h[0] * p.x + h[1] * p.y + h[2]) / w,
            (h[3] * p.x + h[4] * p.y + h[5]) / w,
        ))
    }

    pub fn inverse(&self) -> Result<Homography> {
        let h = &self.h;
        let det = self.det();
        if det.abs() <= 1e-12 {
            return Err(Error::SingularTransform);
        }
        let adj = [
            h[4] * h[8] - h[5] * h[7],
            h[2] * h[7] - h[1] * h[8],
            h[1] * h[5] - h[2] * h[4],
            h[5] * h[6] - h[3] * h[8],
            h[0] * h[8] - h[2] * h[6],
            h[2] * h[3] - h[0] * h[5],
            h[3] * h[7] - h[4] * h[6],
            h[1] * h[6] - h[0] * h[7],
            h[0] * h[4] - h[1] * h[3],
        ];
        Homography::from_matrix(adj.map(|v| v / det))
    }

    /// `self * other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Homography) -> Result<Homography> {
        let a = &self.h;
        let b = &other.h;
        let mut m = [0.0; 9];
        for r in 0..3 {
            for c in 0..3 {
                m[r * 3 + c] = (0..3).map(|k| a[r * 3 + k] * b[k * 3 + c]).sum();
            }
        }
        Homography::from_matrix(m)
    }

    pub fn translation(tx: f64, ty: f64) -> Homography {
        Homography {
            h: [1.0, 0.0, tx, 0.0, 1.0, ty, 0.0, 0.0, 1.0],
        }
    }

    pub fn scaling(sx: f64, sy: f64) -> Homography {
        Homography {
            h: [sx, 0.0, 0.0, 0.0, sy, 0.0, 0.0, 0.0, 1.0],
        }
    }

    /// Re-expresses a unit-square transform in the coordinates of a
    /// `w x h` image: `S * self * S^-1` with `S = diag(w, h, 1)`.
    pub fn scaled_to(&self, w: f64, h: f64) -> Result<Homography> {
        Homography::scaling(w, h)
            .compose(self)?
            .compose(&Homography::scaling(1.0 / w, 1.0 / h))
    }

    /// Frobenius distance between matrices after normalization.
    pub fn frobenius_distance(&self, other: &Homography) -> f64 {
        self.h
            .iter()
            .zip(&other.h)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Twice the signed shoelace area. Positive for corners that run clockwise
/// on screen (y pointing down).
pub fn signed_area2(pts: &[Point]) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let p = pts[i];
            let q = pts[(i + 1) % n];
            p.x * q.y - q.x * p.y
        })
        .sum()
}

/// Four corners of a strictly convex quadrilateral, clockwise on screen
/// (shoelace area > 0 with y down). The first corner is conventionally the
/// top-left one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quad {
    corners: [Point; 4],
}

impl Quad {
    pub fn new(corners: [Point; 4]) -> Result<Self> {
        if corners.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::DegenerateQuad("non-finite corner".into()));
        }
        let scale = corners
            .iter()
            .flat_map(|a| corners.iter().map(move |b| a.dist(b)))
            .fold(0.0f64, f64::max);
        if scale <= 0.0 {
            return Err(Error::DegenerateQuad("all corners coincide".into()));
        }
        let eps = 1e-9 * scale * scale;
        for i in 0..4 {
            let c = cross(corners[i], corners[(i + 1) % 4], corners[(i + 2) % 4]);
            if c <= eps {
                return Err(Error::DegenerateQuad(
                    "corners are collinear, non-convex or counter-clockwise".into(),
                ));
            }
        }
        Ok(Self { corners })
    }

    pub fn from_xy(pts: [(f64, f64); 4]) -> Result<Self> {
        Self::new(pts.map(|(x, y)| Point::new(x, y)))
    }

    /// The pixel-area rectangle of a `w x h` image.
    pub fn image_frame(w: usize, h: usize) -> Quad {
        let (x1, y1) = (w as f64 - 0.5, h as f64 - 0.5);
        Quad {
            corners: [
                Point::new(-0.5, -0.5),
                Point::new(x1, -0.5),
                Point::new(x1, y1),
                Point::new(-0.5, y1),
            ],
        }
    }

    pub fn corners(&self) -> &[Point; 4] {
        &self.corners
    }

    pub fn area(&self) -> f64 {
        signed_area2(&self.corners) / 2.0
    }

    /// Maps every corner through `h`.
    pub fn transformed(&self, h: &Homography) -> Result<Quad> {
        let mut out = [Point::default(); 4];
        for (o, c) in out.iter_mut().zip(&self.corners) {
            *o = h.apply(*c).ok_or(Error::SingularTransform)?;
        }
        Quad::new(out)
    }
}

/// Homography taking each `src` corner onto the matching `dst` corner,
/// solved as an 8x8 DLT system on Hartley-normalized points.
pub fn homography_from_quads(src: &Quad, dst: &Quad) -> Result<Homography> {
    homography_from_points(src.corners(), dst.corners())
}

/// Same as [`homography_from_quads`] on raw correspondences.
pub fn homography_from_points(src: &[Point; 4], dst: &[Point; 4]) -> Result<Homography> {
    for pts in [src, dst] {
        for i in 0..4 {
            for j in i + 1..4 {
                for k in j + 1..4 {
                    let scale = pts[i].dist(&pts[j]).max(pts[i].dist(&pts[k])).max(1e-300);
                    if cross(pts[i], pts[j], pts[k]).abs() <= 1e-9 * scale * scale {
                        return Err(Error::DegenerateQuad("three corners are collinear".into()));
                    }
                }
            }
        }
    }
    let (ts, ns) = conditioning(src);
    let (td, nd) = conditioning(dst);

    let mut a = SMatrix::<f64, 8, 8>::zeros();
    let mut b = SVector::<f64, 8>::zeros();
    for i in 0..4 {
        let (x, y) = (ns[i].x, ns[i].y);
        let (u, v) = (nd[i].x, nd[i].y);
        let r = 2 * i;
        a.set_row(
            r,
            &SMatrix::<f64, 1, 8>::from_row_slice(&[x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y]),
        );
        b[r] = u;
        a.set_row(
            r + 1,
            &SMatrix::<f64, 1, 8>::from_row_slice(&[0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y]),
        );
        b[r + 1] = v;
    }
    let sol = a.full_piv_lu().solve(&b).ok_or(Error::SingularSystem)?;
    let hn = Homography::from_matrix([
        sol[0], sol[1], sol[2], sol[3], sol[4], sol[5], sol[6], sol[7], 1.0,
    ])
    .map_err(|_| Error::SingularSystem)?;
    td.inverse()?.compose(&hn)?.compose(&ts)
}

/// Similarity moving the centroid to the origin with mean distance sqrt(2).
fn conditioning(pts: &[Point; 4]) -> (Homography, [Point; 4]) {
    let cx = pts.iter().map(|p| p.x).sum::<f64>() / 4.0;
    let cy = pts.iter().map(|p| p.y).sum::<f64>() / 4.0;
    let mean_d = pts
        .iter()
        .map(|p| ((p.x - cx).powi(2) + (p.y - cy).powi(2)).sqrt())
        .sum::<f64>()
        / 4.0;
    let s = std::f64::consts::SQRT_2 / mean_d;
    let t = Homography {
        h: [s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0],
    };
    let n = pts.map(|p| Point::new(s * (p.x - cx), s * (p.y - cy)));
    (t, n)
}

/// Bilinear sample of a float plane at a pixel-center coordinate. Positions
/// outside `[-0.5, size - 0.5]` are `None`; inside, indices clamp to the edge.
#[inline]
pub fn sample_bilinear(plane: &RasterF, x: f64, y: f64) -> Option<f64> {
    let (w, h) = plane.dims();
    if !(x >= -0.5 && y >= -0.5 && x <= w as f64 - 0.5 && y <= h as f64 - 0.5) {
        return None;
    }
    let xc = x.clamp(0.0, (w - 1) as f64);
    let yc = y.clamp(0.0, (h - 1) as f64);
    let x0 = xc.floor() as usize;
    let y0 = yc.floor() as usize;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let ax = xc - x0 as f64;
    let ay = yc - y0 as f64;
    let d = plane.data();
    let top = if ax == 0.0 {
        d[y0 * w + x0]
    } else {
        (1.0 - ax) * d[y0 * w + x0] + ax * d[y0 * w + x1]
    };
    if ay == 0.0 {
        return Some(top);
    }
    let bottom = if ax == 0.0 {
        d[y1 * w + x0]
    } else {
        (1.0 - ax) * d[y1 * w + x0] + ax * d[y1 * w + x1]
    };
    Some((1.0 - ay) * top + ay * bottom)
}

/// Warps a float plane; uncovered pixels are 0 and cleared in the coverage mask.
pub fn warp_plane(plane: &RasterF, h: &Homography, out_w: usize, out_h: usize) -> Result<(RasterF, Mask)> {
    let (mut planes, cov) = warp_planes(std::slice::from_ref(plane), h, out_w, out_h)?;
    Ok((planes.remove(0), cov))
}

/// Warps several same-sized planes with one shared coordinate mapping.
pub fn warp_planes(
    planes: &[RasterF],
    h: &Homography,
    out_w: usize,
    out_h: usize,
) -> Result<(Vec<RasterF>, Mask)> {
    let inv = h.inverse()?;
    let mut out = vec![RasterF::zeros(out_w, out_h); planes.len()];
    let mut cov = Mask::zeros(out_w, out_h);
    let Some(first) = planes.first() else {
        return Ok((out, cov));
    };
    for p in planes {
        first.require_same_shape(p)?;
    }
    let (w, h) = first.dims();
    let (wf, hf) = (w as f64, h as f64);
    let src: Vec<&[f64]> = planes.iter().map(|p| p.data()).collect();
    let m = inv.matrix();
    let mut dst: Vec<&mut [f64]> = out.iter_mut().map(|o| o.data_mut()).collect();
    for y in 0..out_h {
        let yf = y as f64;
        for x in 0..out_w {
            let xf = x as f64;
            let den = m[6] * xf + m[7] * yf + m[8];
            if den.abs() < 1e-15 {
                continue;
            }
            let sx = (m[0] * xf + m[1] * yf + m[2]) / den;
            let sy = (m[3] * xf + m[4] * yf + m[5]) / den;
            if !(sx >= -0.5 && sy >= -0.5 && sx <= wf - 0.5 && sy <= hf - 0.5) {
                continue;
            }
            // Same weights as sample_bilinear, shared by every plane.
            let xc = sx.clamp(0.0, wf - 1.0);
            let yc = sy.clamp(0.0, hf - 1.0);
            let (x0, y0) = (xc.floor() as usize, yc.floor() as usize);
            let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
            let (ax, ay) = (xc - x0 as f64, yc - y0 as f64);
            let (i00, i01, i10, i11) = (y0 * w + x0, y0 * w + x1, y1 * w + x0, y1 * w + x1);
            let o = y * out_w + x;
            for (d, p) in dst.iter_mut().zip(&src) {
                let top = if ax == 0.0 { p[i00] } else { (1.0 - ax) * p[i00] + ax * p[i01] };
                d[o] = if ay == 0.0 {
                    top
                } else {
                    let bottom = if ax == 0.0 { p[i10] } else { (1.0 - ax) * p[i10] + ax * p[i11] };
                    (1.0 - ay) * top + ay * bottom
                };
            }
            cov.set(x, y, true);
        }
    }
    Ok((out, cov))
}

/// Perspective warp with bilinear sampling and its coverage mask.
pub fn warp_perspective_with_coverage(
    img: &RasterU8,
    h: &Homography,
    out_size: (usize, usize),
) -> Result<(RasterU8, Mask)> {
    let planes: Vec<RasterF> = (0..img.channels()).map(|c| img.plane_f(c)).collect();
    let (warped, coverage) = warp_planes(&planes, h, out_size.0, out_size.1)?;
    Ok((RasterU8::from_planes_f(&warped)?, coverage))
}

/// Perspective warp into an `out_size` canvas; uncovered pixels are black.
pub fn warp_perspective(img: &RasterU8, h: &Homography, out_size: (usize, usize)) -> Result<RasterU8> {
    Ok(warp_perspective_with_coverage(img, h, out_size)?.0)
}

/// Nearest-neighbor warp for masks.
pub fn warp_mask_nearest(mask: &Mask, h: &Homography, out_size: (usize, usize)) -> Result<Mask> {
    let inv = h.inverse()?;
    let (w, hh) = mask.dims();
    Ok(Mask::from_fn(out_size.0, out_size.1, |x, y| {
        inv.apply(Point::new(x as f64, y as f64))
            .map(|s| {
                let (sx, sy) = (s.x.round(), s.y.round());
                sx >= 0.0
                    && sy >= 0.0
                    && (sx as usize) < w
                    && (sy as usize) < hh
                    && mask.get(sx as usize, sy as usize)
            })
            .unwrap_or(false)
    }))
}

/// Applies an affine transform (same output size, bilinear, black fill).
pub fn apply_affine(img: &RasterU8, params: &AffineParams) -> Result<RasterU8> {
    warp_perspective(img, &params.to_homography()?, img.dims())
}

/// Random projective jitter of the unit square: each corner moves by up to
/// `max_corner_offset` (a fraction of the side) along each axis.
pub fn random_perspective(rng: &mut impl Rng, max_corner_offset: f64) -> Result<Homography> {
    if !(0.0..=0.2).contains(&max_corner_offset) {
        return Err(Error::OutOfRange(format!(
            "max_corner_offset {max_corner_offset} outside [0, 0.2]"
        )));
    }
    let unit = [
        Point::new(0.0, 0.0),
        Point::new(1.0, 0.0),
        Point::new(1.0, 1.0),
        Point::new(0.0, 1.0),
    ];
    if max_corner_offset == 0.0 {
        return Ok(Homography::IDENTITY);
    }
    loop {
        let jittered = unit.map(|p| {
            Point::new(
                p.x + rng.random_range(-max_corner_offset..=max_corner_offset),
                p.y + rng.random_range(-max_corner_offset..=max_corner_offset),
            )
        });
        if Quad::new(jittered).is_err() {
            continue;
        }
        if let Ok(h) = homography_from_points(&unit, &jittered) {
            return Ok(h);
        }
    }
}

//! Anti-cropping: a doubly mirror-symmetric noise template in the red
//! channel, and recovery of sub-image boundaries from the symmetry axes of
//! a cropped picture.
//!
//! Symmetry axes fall between pixel columns. Profile index `j` stands for
//! the axis between columns `j - 1` and `j`, so a full template of width
//! `W` peaks at `j = W / 2`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::box_mean;
use crate::raster::{to_u8, RasterF, RasterU8};

/// Axes with fewer than this many columns on either side score zero.
pub const MIN_HALF_WIDTH: usize = 4;
pub const DEFAULT_HIGHPASS_WINDOW: usize = 31;
pub const DEFAULT_PEAK_THRESHOLD: f64 = 0.15;

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricTemplate {
    plane: RasterF,
    amplitude: f64,
}

impl SymmetricTemplate {
    pub fn plane(&self) -> &RasterF {
        &self.plane
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }
}

/// Gaussian quarter plane mirrored horizontally and then vertically, with
/// the mean removed.
pub fn make_symmetric_template(
    rng: &mut impl Rng,
    width: usize,
    height: usize,
    amplitude: f64,
) -> Result<SymmetricTemplate> {
    if width % 2 != 0 || height % 2 != 0 {
        return Err(Error::OddDimensions(width, height));
    }
    if !(amplitude >= 0.0) {
        return Err(Error::OutOfRange(format!("template amplitude {amplitude} is negative")));
    }
    let (qw, qh) = (width / 2, height / 2);
    let quarter: Vec<f64> = (0..qw * qh)
        .map(|_| { let v: f64 = StandardNormal.sample(rng); amplitude * v })
        .collect();
    let mean = quarter.iter().sum::<f64>() / quarter.len().max(1) as f64;
    let plane = RasterF::from_fn(width, height, |x, y| {
        let qx = if x < qw { x } else { width - 1 - x };
        let qy = if y < qh { y } else { height - 1 - y };
        quarter[qy * qw + qx] - mean
    });
    Ok(SymmetricTemplate { plane, amplitude })
}

/// Adds the template to a single channel with rounding and clamping.
pub fn embed_template(red: &RasterU8, tmpl: &SymmetricTemplate) -> Result<RasterU8> {
    red.require_channels(1)?;
    if red.dims() != tmpl.plane.dims() {
        return Err(Error::ShapeMismatch(format!(
            "channel {:?} vs template {:?}",
            red.dims(),
            tmpl.plane.dims()
        )));
    }
    let data = red
        .data()
        .iter()
        .zip(tmpl.plane.data())
        .map(|(&v, &t)| to_u8(v as f64 + t))
        .collect();
    RasterU8::new(red.width(), red.height(), 1, data)
}

/// Input minus its 3x3 adaptive Wiener estimate. The noise power is the
/// mean of the local variances.
pub fn wiener_residual(red: &RasterU8) -> RasterF {
    wiener_residual_plane(&red.plane_f(0))
}

pub fn wiener_residual_plane(v: &RasterF) -> RasterF {
    let mean = box_mean(v, 1);
    let sq = box_mean(&v.map(|a| a * a), 1);
    let var: Vec<f64> = sq
        .data()
        .iter()
        .zip(mean.data())
        .map(|(s, m)| (s - m * m).max(0.0))
        .collect();
    let noise = var.iter().sum::<f64>() / var.len().max(1) as f64;
    let (w, h) = v.dims();
    let mut out = RasterF::zeros(w, h);
    for (i, o) in out.data_mut().iter_mut().enumerate() {
        let (x, m, s2) = (v.data()[i], mean.data()[i], var[i]);
        let gain = if s2 > noise && s2 > 0.0 { (s2 - noise) / s2 } else { 0.0 };
        let estimate = m + gain * (x - m);
        *o = x - estimate;
    }
    out
}

/// `(v - mean) / std` with the population standard deviation.
pub fn standardize(segment: &RasterF) -> Result<RasterF> {
    let n = segment.data().len();
    if n < 2 {
        return Err(Error::ZeroVariance);
    }
    let mean = segment.mean();
    let std = segment.std();
    if !(std > 1e-12 * (1.0 + mean.abs())) {
        return Err(Error::ZeroVariance);
    }
    Ok(segment.map(|v| (v - mean) / std))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileAxis {
    Column,
    Row,
}

/// Mirror-correlation score for every candidate axis position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryProfile {
    /// `scores[j]` scores the axis between line `j - 1` and line `j`;
    /// length is the image extent plus one.
    pub scores: Vec<f64>,
    pub axis: ProfileAxis,
}

impl SymmetryProfile {
    /// Index and value of the largest score (first on ties).
    pub fn argmax(&self) -> Option<(usize, f64)> {
        self.scores
            .iter()
            .copied()
            .enumerate()
            .fold(None, |acc, (j, s)| match acc {
                Some((_, best)) if best >= s => acc,
                _ => Some((j, s)),
            })
    }
}

/// Correlation between the band left of each axis and the mirrored band to
/// its right. Each band spans the distance to the nearer border and is
/// standardized on its own, so scores lie in `[-1, 1]`.
pub fn column_symmetry(residual: &RasterF) -> Result<SymmetryProfile> {
    let (w, h) = residual.dims();
    if w < 2 * MIN_HALF_WIDTH {
        return Err(Error::TooNarrow(w));
    }
    let d = residual.data();
    // Per-column sums and sums of squares.
    let mut col_sum = vec![0.0; w];
    let mut col_sq = vec![0.0; w];
    for y in 0..h {
        for x in 0..w {
            let v = d[y * w + x];
            col_sum[x] += v;
            col_sq[x] += v * v;
        }
    }
    let mut scores = vec![0.0; w + 1];
    for (j, score) in scores.iter_mut().enumerate() {
        let half = j.min(w - j);
        if half < MIN_HALF_WIDTH {
            continue;
        }
        let n = (half * h) as f64;
        let (mut s1, mut q1, mut s2, mut q2, mut cross) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for k in 0..half {
            let (a, b) = (j - 1 - k, j + k);
            s1 += col_sum[a];
            q1 += col_sq[a];
            s2 += col_sum[b];
            q2 += col_sq[b];
            for y in 0..h {
                cross += d[y * w + a] * d[y * w + b];
            }
        }
        let (m1, m2) = (s1 / n, s2 / n);
        let v1 = q1 / n - m1 * m1;
        let v2 = q2 / n - m2 * m2;
        if v1 <= 1e-12 || v2 <= 1e-12 {
            // Zero-variance band: no evidence either way.
            continue;
        }
        *score = ((cross / n - m1 * m2) / (v1 * v2).sqrt()).clamp(-1.0, 1.0);
    }
    Ok(SymmetryProfile {
        scores,
        axis: ProfileAxis::Column,
    })
}

/// Row counterpart of [`column_symmetry`].
pub fn row_symmetry(residual: &RasterF) -> Result<SymmetryProfile> {
    let mut p = column_symmetry(&residual.transpose())?;
    p.axis = ProfileAxis::Row;
    Ok(p)
}

/// Subtracts a centered moving average (window shrinking at the ends).
pub fn highpass_profile(profile: &SymmetryProfile, window: usize) -> Result<SymmetryProfile> {
    if window % 2 == 0 {
        return Err(Error::EvenWindow(window));
    }
    let s = &profile.scores;
    let n = s.len();
    let r = window / 2;
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + s[i];
    }
    let scores = (0..n)
        .map(|j| {
            let lo = j.saturating_sub(r);
            let hi = (j + r + 1).min(n);
            s[j] - (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect();
    Ok(SymmetryProfile {
        scores,
        axis: profile.axis,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quadrant {
    TL,
    TR,
    BL,
    BR,
}

impl Quadrant {
    pub fn from_sides(right: bool, bottom: bool) -> Self {
        match (right, bottom) {
            (false, false) => Quadrant::TL,
            (true, false) => Quadrant::TR,
            (false, true) => Quadrant::BL,
            (true, true) => Quadrant::BR,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubImageRect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
    pub quadrant: Quadrant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CropBounds {
    pub rects: Vec<SubImageRect>,
    /// Detected vertical axis (profile index), if any.
    pub column_axis: Option<usize>,
    pub row_axis: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecoverParams {
    pub highpass_window: usize,
    pub peak_threshold: f64,
}

impl Default for RecoverParams {
    fn default() -> Self {
        Self {
            highpass_window: DEFAULT_HIGHPASS_WINDOW,
            peak_threshold: DEFAULT_PEAK_THRESHOLD,
        }
    }
}

fn detect_axis(profile: &SymmetryProfile, params: &RecoverParams) -> Result<Option<usize>> {
    let hp = highpass_profile(profile, params.highpass_window)?;
    Ok(hp
        .argmax()
        .filter(|&(_, s)| s >= params.peak_threshold)
        .map(|(j, _)| j))
}

/// Sub-image anchors along one dimension: `(offset, on_far_side)`.
fn anchors(axis: Option<usize>, extent: usize, side: usize) -> Vec<(usize, bool)> {
    let mut out = Vec::new();
    match axis {
        Some(a) => {
            if a >= side {
                out.push((a - side, false));
            }
            if a + side <= extent {
                out.push((a, true));
            }
        }
        None => {
            out.push((0, false));
            if extent - side > 0 {
                out.push((extent - side, true));
            }
        }
    }
    out
}

/// Finds the complete `sub_side x sub_side` sub-images left in a cropped
/// picture, using the template's symmetry axes as sub-image boundaries.
pub fn recover_subimages(cropped: &RasterU8, sub_side: usize) -> Result<CropBounds> {
    recover_subimages_with(cropped, sub_side, &RecoverParams::default())
}

pub fn recover_subimages_with(cropped: &RasterU8, sub_side: usize, params: &RecoverParams) -> Result<CropBounds> {
    cropped.require_channels(3)?;
    let (w, h) = cropped.dims();
    if sub_side == 0 || w < sub_side || h < sub_side {
        return Err(Error::NoSymmetryFound);
    }
    let residual = wiener_residual(&cropped.channel(0));
    let column_axis = detect_axis(&column_symmetry(&residual)?, params)?;
    let row_axis = detect_axis(&row_symmetry(&residual)?, params)?;
    if column_axis.is_none() && row_axis.is_none() {
        return Err(Error::NoSymmetryFound);
    }
    let mut rects = Vec::new();
    for &(y, bottom) in &anchors(row_axis, h, sub_side) {
        for &(x, right) in &anchors(column_axis, w, sub_side) {
            rects.push(SubImageRect {
                x,
                y,
                w: sub_side,
                h: sub_side,
                quadrant: Quadrant::from_sides(right, bottom),
            });
        }
    }
    if rects.is_empty() {
        return Err(Error::NoSymmetryFound);
    }
    Ok(CropBounds {
        rects,
        column_axis,
        row_axis,
    })
}

/// Side of an image from which [`crop_edge`] removes pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    Left,
    Right,
    Top,
    Bottom,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::Left, Edge::Right, Edge::Top, Edge::Bottom];

    pub fn name(&self) -> &'static str {
        match self {
            Edge::Left => "left",
            Edge::Right => "right",
            Edge::Top => "top",
            Edge::Bottom => "bottom",
        }
    }
}

impl std::str::FromStr for Edge {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Edge::Left),
            "right" => Ok(Edge::Right),
            "top" => Ok(Edge::Top),
            "bottom" => Ok(Edge::Bottom),
            other => Err(Error::Parse(format!("unknown edge {other:?}"))),
        }
    }
}

/// Removes the fraction `gamma` of the image extent from one side.
pub fn crop_edge(img: &RasterU8, edge: Edge, gamma: f64) -> Result<RasterU8> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::OutOfRange(format!("crop ratio {gamma} outside [0, 1)")));
    }
    let (w, h) = img.dims();
    let cut = |n: usize| (gamma * n as f64).round() as usize;
    match edge {
        Edge::Left => img.crop(cut(w), 0, w - cut(w), h),
        Edge::Right => img.crop(0, 0, w - cut(w), h),
        Edge::Top => img.crop(0, cut(h), w, h - cut(h)),
        Edge::Bottom => img.crop(0, 0, w, h - cut(h)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn template(seed: u64, w: usize, h: usize, amp: f64) -> SymmetricTemplate {
        make_symmetric_template(&mut ChaCha8Rng::seed_from_u64(seed), w, h, amp).unwrap()
    }

    #[test]
    fn template_symmetry_and_stats() {
        let t = template(1, 512, 512, 2.0);
        let p = t.plane();
        for y in 0..512 {
            for x in 0..512 {
                assert_eq!(p.get(x, y), p.get(511 - x, y));
                assert_eq!(p.get(x, y), p.get(x, 511 - y));
            }
        }
        assert!(p.mean().abs() < 1e-9);
        assert!((p.std() - 2.0).abs() <= 0.1);
        assert_eq!(template(1, 64, 32, 2.0), template(1, 64, 32, 2.0));
        assert!(matches!(
            make_symmetric_template(&mut ChaCha8Rng::seed_from_u64(0), 5, 4, 1.0),
            Err(Error::OddDimensions(5, 4))
        ));
    }

    #[test]
    fn template_embedding() {
        let red = RasterU8::filled(512, 512, 1, 128);
        assert_eq!(embed_template(&red, &template(2, 512, 512, 0.0)).unwrap(), red);
        let marked = embed_template(&red, &template(2, 512, 512, 2.0)).unwrap();
        let p = crate::metrics::psnr(&red, &marked).unwrap();
        let expected = 20.0 * (255.0f64 / 2.0).log10();
        assert!((p - expected).abs() < 0.5, "psnr {p} vs {expected}");
        assert!(embed_template(&RasterU8::filled(4, 4, 1, 0), &template(2, 6, 4, 1.0)).is_err());
    }

    #[test]
    fn wiener_on_constant() {
        let r = wiener_residual(&RasterU8::filled(20, 20, 1, 77));
        assert!(r.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn standardize_examples() {
        let v = RasterF::from_fn(7, 3, |x, y| (x * x) as f64 - 2.0 * y as f64);
        let s = standardize(&v).unwrap();
        let again = standardize(&s).unwrap();
        assert!(s.data().iter().zip(again.data()).all(|(a, b)| (a - b).abs() < 1e-12));
        let affine = standardize(&v.map(|a| 3.0 * a + 10.0)).unwrap();
        assert!(s.data().iter().zip(affine.data()).all(|(a, b)| (a - b).abs() < 1e-12));
        assert_eq!(standardize(&RasterF::filled(3, 3, 2.0)), Err(Error::ZeroVariance));
    }

    #[test]
    fn profile_peaks_on_template_axis() {
        let t = template(3, 128, 96, 2.0);
        let prof = column_symmetry(t.plane()).unwrap();
        let (j, s) = prof.argmax().unwrap();
        assert_eq!(j, 64);
        assert!(s >= 0.99);
        assert!(prof.scores.iter().all(|v| (-1.0..=1.0).contains(v)));
        let rows = row_symmetry(t.plane()).unwrap();
        assert_eq!(rows.argmax().unwrap().0, 48);
        assert_eq!(rows.scores, column_symmetry(&t.plane().transpose()).unwrap().scores);
        let flat = row_symmetry(&RasterF::filled(16, 16, 1.0)).unwrap();
        assert!(flat.scores.iter().all(|&v| v == 0.0));
        assert_eq!(column_symmetry(&RasterF::zeros(7, 10)), Err(Error::TooNarrow(7)));
    }

    #[test]
    fn profile_tracks_cropped_axis() {
        let t = template(4, 512, 64, 2.0);
        let cropped = t.plane().crop(106, 0, 406, 64).unwrap();
        let (j, _) = column_symmetry(&cropped).unwrap().argmax().unwrap();
        assert!((j as isize - 150).abs() <= 2);
    }

    #[test]
    fn white_noise_has_no_strong_axis() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let noise = RasterF::from_fn(512, 64, |_, _| StandardNormal.sample(&mut rng));
            let (_, s) = column_symmetry(&noise).unwrap().argmax().unwrap();
            let hp = highpass_profile(&column_symmetry(&noise).unwrap(), 31).unwrap();
            assert!(hp.argmax().unwrap().1 <= 0.2, "{s}");
        }
    }

    #[test]
    fn highpass_examples() {
        let flat = SymmetryProfile { scores: vec![0.3; 100], axis: ProfileAxis::Column };
        assert!(highpass_profile(&flat, 31).unwrap().scores.iter().all(|v| v.abs() < 1e-12));
        let mut spike = vec![0.1; 101];
        spike[50] = 1.1;
        let out = highpass_profile(&SymmetryProfile { scores: spike, axis: ProfileAxis::Column }, 31).unwrap();
        assert!((out.scores[50] - 1.0).abs() <= 0.05);
        let ramp: Vec<f64> = (0..513).map(|i| i as f64 / 512.0).collect();
        let out = highpass_profile(&SymmetryProfile { scores: ramp, axis: ProfileAxis::Row }, 31).unwrap();
        assert!(out.scores.iter().all(|v| v.abs() <= 0.1));
        assert!(highpass_profile(&flat, 30).is_err());
    }

    #[test]
    fn crop_edge_sizes() {
        let img = RasterU8::filled(512, 512, 3, 1);
        assert_eq!(crop_edge(&img, Edge::Left, 0.4).unwrap().dims(), (307, 512));
        assert_eq!(crop_edge(&img, Edge::Bottom, 0.05).unwrap().dims(), (512, 486));
        assert!(crop_edge(&img, Edge::Top, 1.0).is_err());
    }
}

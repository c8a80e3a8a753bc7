//! Raster containers shared by every stage.
//!
//! [`RasterU8`] holds interleaved 8-bit samples (1 or 3 channels); [`RasterF`]
//! is a single float plane used for intermediate math. All float to 8-bit
//! conversions go through [`to_u8`], which rounds half away from zero and
//! clamps to `[0, 255]`.

use crate::error::{Error, Result};

/// Converts a working-plane value to an 8-bit sample.
///
/// Rounds half away from zero, then clamps. NaN maps to 0.
#[inline]
pub fn to_u8(v: f64) -> u8 {
    let r = v.round();
    if r >= 255.0 {
        255
    } else if r > 0.0 {
        r as u8
    } else {
        0
    }
}

/// Interleaved row-major 8-bit raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterU8 {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl RasterU8 {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidRaster(format!(
                "channels must be 1 or 3, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::InvalidRaster(format!(
                "data length {} != {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Self {
        assert!(channels == 1 || channels == 3, "channels must be 1 or 3");
        Self {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        }
    }

    /// Builds a raster from a per-sample generator `f(x, y, channel)`.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> u8,
    ) -> Self {
        assert!(channels == 1 || channels == 3, "channels must be 1 or 3");
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Self {
            width,
            height,
            channels,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: u8) {
        self.data[(y * self.width + x) * self.channels + c] = v;
    }

    pub fn require_channels(&self, expected: usize) -> Result<()> {
        if self.channels != expected {
            return Err(Error::ChannelMismatch {
                expected,
                actual: self.channels,
            });
        }
        Ok(())
    }

    pub fn require_same_shape(&self, other: &RasterU8) -> Result<()> {
        if self.width != other.width
            || self.height != other.height
            || self.channels != other.channels
        {
            return Err(Error::ShapeMismatch(format!(
                "{}x{}x{} vs {}x{}x{}",
                self.width, self.height, self.channels, other.width, other.height, other.channels
            )));
        }
        Ok(())
    }

    /// Extracts one channel as a single-channel raster.
    pub fn channel(&self, c: usize) -> RasterU8 {
        assert!(c < self.channels);
        let data = self
            .data
            .iter()
            .skip(c)
            .step_by(self.channels)
            .copied()
            .collect();
        RasterU8 {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
        }
    }

    /// Replaces channel `c` with the samples of a single-channel raster.
    pub fn set_channel(&mut self, c: usize, plane: &RasterU8) -> Result<()> {
        plane.require_channels(1)?;
        if plane.dims() != self.dims() {
            return Err(Error::ShapeMismatch(format!(
                "plane {}x{} vs image {}x{}",
                plane.width, plane.height, self.width, self.height
            )));
        }
        let ch = self.channels;
        for (i, &v) in plane.data.iter().enumerate() {
            self.data[i * ch + c] = v;
        }
        Ok(())
    }

    /// Stacks three single-channel planes into an RGB raster.
    pub fn from_planes(r: &RasterU8, g: &RasterU8, b: &RasterU8) -> Result<RasterU8> {
        for p in [r, g, b] {
            p.require_channels(1)?;
            if p.dims() != r.dims() {
                return Err(Error::ShapeMismatch("planes differ in size".into()));
            }
        }
        let mut data = Vec::with_capacity(r.data.len() * 3);
        for i in 0..r.data.len() {
            data.extend_from_slice(&[r.data[i], g.data[i], b.data[i]]);
        }
        RasterU8::new(r.width, r.height, 3, data)
    }

    /// Replicates a gray raster into three identical channels.
    pub fn gray_to_rgb(&self) -> Result<RasterU8> {
        self.require_channels(1)?;
        RasterU8::from_planes(self, self, self)
    }

    /// Channel `c` as a float plane.
    pub fn plane_f(&self, c: usize) -> RasterF {
        assert!(c < self.channels);
        let data = self
            .data
            .iter()
            .skip(c)
            .step_by(self.channels)
            .map(|&v| v as f64)
            .collect();
        RasterF {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Rebuilds a raster from float planes (one per channel) with [`to_u8`].
    pub fn from_planes_f(planes: &[RasterF]) -> Result<RasterU8> {
        let channels = planes.len();
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidRaster(format!(
                "expected 1 or 3 planes, got {channels}"
            )));
        }
        let (w, h) = planes[0].dims();
        if planes.iter().any(|p| p.dims() != (w, h)) {
            return Err(Error::ShapeMismatch("planes differ in size".into()));
        }
        let mut data = Vec::with_capacity(w * h * channels);
        for i in 0..w * h {
            for p in planes {
                data.push(to_u8(p.data[i]));
            }
        }
        RasterU8::new(w, h, channels, data)
    }

    /// Copies the rectangle `[x, x+w) x [y, y+h)`.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<RasterU8> {
        if x + w > self.width || y + h > self.height {
            return Err(Error::ShapeMismatch(format!(
                "crop {w}x{h}+{x}+{y} outside {}x{}",
                self.width, self.height
            )));
        }
        let ch = self.channels;
        let mut data = Vec::with_capacity(w * h * ch);
        for row in y..y + h {
            let start = (row * self.width + x) * ch;
            data.extend_from_slice(&self.data[start..start + w * ch]);
        }
        RasterU8::new(w, h, ch, data)
    }
}

/// Single-plane row-major float raster.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterF {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl RasterF {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidRaster(format!(
                "data length {} != {width}x{height}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidRaster("non-finite sample".into()));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    /// Sample with replicated borders.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let xc = x.clamp(0, self.width as isize - 1) as usize;
        let yc = y.clamp(0, self.height as isize - 1) as usize;
        self.data[yc * self.width + xc]
    }

    pub fn require_same_shape(&self, other: &RasterF) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> RasterF {
        RasterF {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn transpose(&self) -> RasterF {
        RasterF::from_fn(self.height, self.width, |x, y| self.get(y, x))
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            0.0
        } else {
            self.sum() / self.data.len() as f64
        }
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Population standard deviation.
    pub fn std(&self) -> f64 {
        let m = self.mean();
        let var = self.data.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
            / self.data.len().max(1) as f64;
        var.sqrt()
    }

    pub fn to_u8(&self) -> RasterU8 {
        RasterU8 {
            width: self.width,
            height: self.height,
            channels: 1,
            data: self.data.iter().map(|&v| to_u8(v)).collect(),
        }
    }

    /// Copies the rectangle `[x, x+w) x [y, y+h)`.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<RasterF> {
        if x + w > self.width || y + h > self.height {
            return Err(Error::ShapeMismatch(format!(
                "crop {w}x{h}+{x}+{y} outside {}x{}",
                self.width, self.height
            )));
        }
        Ok(RasterF::from_fn(w, h, |cx, cy| self.get(x + cx, y + cy)))
    }
}

/// Binary plane with values in `{0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Mask {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidRaster(format!(
                "mask length {} != {width}x{height}",
                data.len()
            )));
        }
        if data.iter().any(|&v| v > 1) {
            return Err(Error::InvalidRaster("mask values must be 0 or 1".into()));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    pub fn ones(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![1; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y) as u8);
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x] != 0
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v as u8;
    }

    pub fn count(&self) -> usize {
        self.data.iter().map(|&v| v as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn complement(&self) -> Mask {
        Mask {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| 1 - v).collect(),
        }
    }

    pub fn union(&self, other: &Mask) -> Mask {
        assert_eq!(self.dims(), other.dims());
        Mask {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a | b)
                .collect(),
        }
    }

    /// Renders the mask as a 0/255 gray raster.
    pub fn to_raster(&self) -> RasterU8 {
        RasterU8 {
            width: self.width,
            height: self.height,
            channels: 1,
            data: self.data.iter().map(|&v| v * 255).collect(),
        }
    }

    /// Surrounds the mask with `margin` zero pixels on every side.
    pub fn pad(&self, margin: usize) -> Mask {
        let w = self.width + 2 * margin;
        let h = self.height + 2 * margin;
        Mask::from_fn(w, h, |x, y| {
            x >= margin
                && y >= margin
                && x < margin + self.width
                && y < margin + self.height
                && self.get(x - margin, y - margin)
        })
    }

    /// Inverse of [`Mask::pad`].
    pub fn unpad(&self, margin: usize) -> Mask {
        let w = self.width - 2 * margin;
        let h = self.height - 2 * margin;
        Mask::from_fn(w, h, |x, y| self.get(x + margin, y + margin))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_is_half_away_from_zero() {
        assert_eq!(to_u8(0.5), 1);
        assert_eq!(to_u8(1.5), 2);
        assert_eq!(to_u8(2.5), 3);
        assert_eq!(to_u8(-0.5), 0);
        assert_eq!(to_u8(254.5), 255);
        assert_eq!(to_u8(300.0), 255);
        assert_eq!(to_u8(f64::NAN), 0);
    }

    #[test]
    fn raster_rejects_bad_lengths() {
        assert!(RasterU8::new(2, 2, 3, vec![0; 11]).is_err());
        assert!(RasterU8::new(2, 2, 2, vec![0; 8]).is_err());
        assert!(RasterF::new(2, 2, vec![0.0, 1.0, f64::NAN, 0.0]).is_err());
        assert!(Mask::new(1, 1, vec![2]).is_err());
    }

    #[test]
    fn channel_roundtrip() {
        let img = RasterU8::from_fn(4, 3, 3, |x, y, c| (x * 10 + y * 3 + c) as u8);
        let planes: Vec<_> = (0..3).map(|c| img.channel(c)).collect();
        let back = RasterU8::from_planes(&planes[0], &planes[1], &planes[2]).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn pad_unpad() {
        let m = Mask::from_fn(5, 4, |x, y| (x + y) % 2 == 0);
        assert_eq!(m.pad(3).unpad(3), m);
        assert_eq!(m.pad(3).count(), m.count());
    }
}

//! Reference spread-spectrum codec.
//!
//! Each payload bit modulates a keyed ±1 pattern. The summed residual is
//! clipped to the JND budget and added to the G and B channels of all four
//! quadrants; the anti-crop template goes into R. Decoding correlates the
//! high-passed G+B plane of every quadrant with the patterns, after a small
//! search over integer shifts that absorbs residual misregistration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::anticrop::{embed_template, make_symmetric_template, recover_subimages, CropBounds, SymmetricTemplate};
use crate::bits::{BitString, PAYLOAD_BITS};
use crate::error::{Error, Result};
use crate::filter::{box_mean, resize_bilinear};
use crate::jnd::JndMap;
use crate::raster::{to_u8, RasterF, RasterU8};

/// Largest pairwise pattern correlation accepted by [`gen_pattern_bank`].
pub const MAX_CROSS_CORRELATION: f64 = 0.05;
const BANK_RETRIES: u64 = 3;
const TEMPLATE_SALT: u64 = 0x5bd1_e995_a3c4_7f21;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedConfig {
    /// Residual cap as a multiple of the JND.
    pub eta: f64,
    /// Amplitude of each bit's pattern before summation, in gray levels.
    pub per_bit_gain: f64,
    pub sub_side: usize,
    pub template_amplitude: f64,
    /// Side of the square cells a pattern is constant over.
    pub chip: usize,
    /// Decoder shift search radius in pixels.
    pub search_radius: usize,
    /// Patterns scored during the shift search.
    pub sync_patterns: usize,
    /// Minimum mean |z| for a sub-image to count as watermarked.
    pub confidence_floor: f64,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        Self {
            eta: 1.0,
            per_bit_gain: 0.35,
            sub_side: 256,
            template_amplitude: 2.0,
            chip: 2,
            search_radius: 3,
            sync_patterns: 32,
            confidence_floor: 1.5,
        }
    }
}

impl EmbedConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::InvalidConfig("eta must be positive".into()));
        }
        if !(self.per_bit_gain >= 0.0) || !(self.template_amplitude >= 0.0) {
            return Err(Error::InvalidConfig("gains must be non-negative".into()));
        }
        if self.chip == 0 || self.sub_side < 64 || self.sub_side % self.chip != 0 {
            return Err(Error::InvalidConfig(
                "sub_side must be at least 64 and a multiple of chip".into(),
            ));
        }
        if self.sync_patterns == 0 || self.sync_patterns > PAYLOAD_BITS {
            return Err(Error::InvalidConfig("sync_patterns must lie in 1..=127".into()));
        }
        Ok(())
    }

    pub fn host_side(&self) -> usize {
        2 * self.sub_side
    }
}

/// Keyed ±1 patterns, stored on the chip-cell grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternBank {
    key: u64,
    side: usize,
    chip: usize,
    patterns: Vec<Vec<i8>>,
}

impl PatternBank {
    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn chip(&self) -> usize {
        self.chip
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Cells per row of the cell grid.
    pub fn cells_per_side(&self) -> usize {
        self.side / self.chip
    }

    pub fn cells(&self, i: usize) -> &[i8] {
        &self.patterns[i]
    }

    /// Pattern `i` at pixel `(x, y)` of a sub-image.
    #[inline]
    pub fn value(&self, i: usize, x: usize, y: usize) -> i8 {
        self.patterns[i][(y / self.chip) * self.cells_per_side() + x / self.chip]
    }

    /// Normalized correlation of two patterns (over pixels, which equals the
    /// correlation over cells).
    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.patterns[i], &self.patterns[j]);
        a.iter().zip(b).map(|(&p, &q)| (p * q) as i64).sum::<i64>() as f64 / a.len() as f64
    }

    pub fn max_cross_correlation(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                worst = worst.max(self.correlation(i, j).abs());
            }
        }
        worst
    }
}

/// Generates `len` near-orthogonal ±1 patterns of `side x side` pixels with
/// 2x2-pixel cells.
pub fn gen_pattern_bank(key: u64, len: usize, side: usize) -> Result<PatternBank> {
    gen_pattern_bank_with_chip(key, len, side, EmbedConfig::default().chip)
}

pub fn gen_pattern_bank_with_chip(key: u64, len: usize, side: usize, chip: usize) -> Result<PatternBank> {
    if side < 64 || chip == 0 || side % chip != 0 {
        return Err(Error::OutOfRange(format!("pattern side {side} with chip {chip}")));
    }
    let cells = (side / chip) * (side / chip);
    let mut worst = 0.0;
    for attempt in 0..=BANK_RETRIES {
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.set_stream(attempt);
        let patterns = (0..len)
            .map(|_| (0..cells).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect())
            .collect();
        let bank = PatternBank {
            key,
            side,
            chip,
            patterns,
        };
        worst = bank.max_cross_correlation();
        if worst <= MAX_CROSS_CORRELATION {
            return Ok(bank);
        }
        log::debug!("pattern bank attempt {attempt} rejected: max correlation {worst}");
    }
    Err(Error::OrthogonalityViolation(worst))
}

/// Decoder output.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub bits: BitString,
    /// Per-bit |sum of z-scores| / sqrt(number of sub-images).
    pub confidence: Vec<f64>,
    /// Per sub-image: mean |z| over all bits at the selected shift.
    pub sync: Vec<f64>,
    /// Per sub-image: selected `(dx, dy)` shift.
    pub shifts: Vec<(i32, i32)>,
}

/// Correlation statistics of one sub-image.
#[derive(Debug, Clone, PartialEq)]
pub struct SubImageScores {
    /// Per-bit z-score (normalized correlation times sqrt of the sample count).
    pub z: Vec<f64>,
    pub shift: (i32, i32),
}

impl SubImageScores {
    pub fn sync(&self) -> f64 {
        self.z.iter().map(|v| v.abs()).sum::<f64>() / self.z.len().max(1) as f64
    }
}

/// Pattern bank, template and configuration for one key.
#[derive(Debug, Clone)]
pub struct Codec {
    cfg: EmbedConfig,
    bank: PatternBank,
    template: SymmetricTemplate,
}

impl Codec {
    pub fn new(key: u64, cfg: EmbedConfig) -> Result<Self> {
        cfg.validate()?;
        let bank = gen_pattern_bank_with_chip(key, PAYLOAD_BITS, cfg.sub_side, cfg.chip)?;
        let side = cfg.host_side();
        let mut rng = ChaCha8Rng::seed_from_u64(key ^ TEMPLATE_SALT);
        let template = make_symmetric_template(&mut rng, side, side, cfg.template_amplitude)?;
        Ok(Self { cfg, bank, template })
    }

    pub fn config(&self) -> &EmbedConfig {
        &self.cfg
    }

    pub fn bank(&self) -> &PatternBank {
        &self.bank
    }

    pub fn template(&self) -> &SymmetricTemplate {
        &self.template
    }

    /// Unclipped sub-image residual `gain * sum_i s_i P_i`.
    pub fn raw_residual(&self, payload: &BitString) -> Result<RasterF> {
        if payload.len() != PAYLOAD_BITS {
            return Err(Error::PayloadLengthMismatch {
                expected: PAYLOAD_BITS,
                actual: payload.len(),
            });
        }
        let n = self.bank.cells_per_side();
        let mut cells = vec![0.0; n * n];
        for i in 0..PAYLOAD_BITS {
            let s = payload.symbol(i) * self.cfg.per_bit_gain;
            for (c, &p) in cells.iter_mut().zip(self.bank.cells(i)) {
                *c += s * p as f64;
            }
        }
        let side = self.cfg.sub_side;
        let chip = self.cfg.chip;
        Ok(RasterF::from_fn(side, side, |x, y| cells[(y / chip) * n + x / chip]))
    }

    /// Embeds `payload` into a `2 sub_side` square RGB host.
    pub fn embed(&self, host: &RasterU8, payload: &BitString, jnd: &JndMap) -> Result<RasterU8> {
        host.require_channels(3)?;
        let side = self.cfg.host_side();
        if host.dims() != (side, side) {
            return Err(Error::ShapeMismatch(format!(
                "host is {}x{}, expected {side}x{side}",
                host.width(),
                host.height()
            )));
        }
        if (jnd.width(), jnd.height()) != host.dims() {
            return Err(Error::ShapeMismatch("JND map does not match the host".into()));
        }
        let raw = self.raw_residual(payload)?;
        let s = self.cfg.sub_side;
        let mut out = host.clone();
        for y in 0..side {
            for x in 0..side {
                let cap = self.cfg.eta * jnd.get(x, y);
                let r = raw.get(x % s, y % s).clamp(-cap, cap);
                for c in 1..3 {
                    out.set(x, y, c, to_u8(host.get(x, y, c) as f64 + r));
                }
            }
        }
        let red = embed_template(&host.channel(0), &self.template)?;
        out.set_channel(0, &red)?;
        Ok(out)
    }

    /// Scores one `sub_side` square sub-image.
    pub fn score_subimage(&self, sub: &RasterU8) -> Result<SubImageScores> {
        sub.require_channels(3)?;
        let s = self.cfg.sub_side;
        if sub.dims() != (s, s) {
            return Err(Error::ShapeMismatch(format!("sub-image must be {s}x{s}")));
        }
        let gb = RasterF::from_fn(s, s, |x, y| sub.get(x, y, 1) as f64 + sub.get(x, y, 2) as f64);
        let smooth = box_mean(&gb, 1);
        let res: Vec<f64> = gb.data().iter().zip(smooth.data()).map(|(a, b)| a - b).collect();

        let r = self.cfg.search_radius as i32;
        let sync_n = self.cfg.sync_patterns;
        let mut best: Option<(f64, (i32, i32))> = None;
        for dy in -r..=r {
            for dx in -r..=r {
                let (cells, energy) = self.cell_sums(&res, dx, dy);
                if energy <= 0.0 {
                    continue;
                }
                let score: f64 = (0..sync_n).map(|i| self.z_score(&cells, energy, i).powi(2)).sum();
                if best.is_none_or(|(b, _)| score > b) {
                    best = Some((score, (dx, dy)));
                }
            }
        }
        let shift = best.map(|b| b.1).unwrap_or((0, 0));
        let (cells, energy) = self.cell_sums(&res, shift.0, shift.1);
        let z = (0..PAYLOAD_BITS)
            .map(|i| if energy > 0.0 { self.z_score(&cells, energy, i) } else { 0.0 })
            .collect();
        Ok(SubImageScores { z, shift })
    }

    /// Residual summed per pattern cell, assuming image pixel `(x, y)`
    /// carries pattern pixel `(x - dx, y - dy)`; also returns the residual
    /// energy of the overlap.
    fn cell_sums(&self, res: &[f64], dx: i32, dy: i32) -> (Vec<f64>, f64) {
        let s = self.cfg.sub_side as i32;
        let chip = self.cfg.chip as i32;
        let n = self.bank.cells_per_side();
        let mut cells = vec![0.0; n * n];
        let mut energy = 0.0;
        for y in 0..s {
            let py = y - dy;
            if py < 0 || py >= s {
                continue;
            }
            let row = (py / chip) as usize * n;
            for x in 0..s {
                let px = x - dx;
                if px < 0 || px >= s {
                    continue;
                }
                let v = res[(y * s + x) as usize];
                cells[row + (px / chip) as usize] += v;
                energy += v * v;
            }
        }
        (cells, energy)
    }

    #[inline]
    fn z_score(&self, cells: &[f64], energy: f64, i: usize) -> f64 {
        let dot: f64 = cells
            .iter()
            .zip(self.bank.cells(i))
            .map(|(c, &p)| c * p as f64)
            .sum();
        dot / energy.sqrt()
    }

    /// Decodes a full frame (all four quadrants) or a single sub-image.
    pub fn extract(&self, img: &RasterU8) -> Result<Extraction> {
        img.require_channels(3)?;
        let s = self.cfg.sub_side;
        let subs = if img.dims() == (2 * s, 2 * s) {
            let mut v = Vec::with_capacity(4);
            for qy in 0..2 {
                for qx in 0..2 {
                    v.push(img.crop(qx * s, qy * s, s, s)?);
                }
            }
            v
        } else if img.dims() == (s, s) {
            vec![img.clone()]
        } else {
            return Err(Error::ShapeMismatch(format!(
                "expected {0}x{0} or {1}x{1}, got {2}x{3}",
                2 * s,
                s,
                img.width(),
                img.height()
            )));
        };
        let scores = subs
            .iter()
            .map(|sub| self.score_subimage(sub))
            .collect::<Result<Vec<_>>>()?;
        Ok(combine(&scores))
    }

    /// Recovers complete sub-images from a cropped picture and decodes
    /// those whose sync score clears the confidence floor.
    pub fn decode_with_anticrop(&self, cropped: &RasterU8) -> Result<(Extraction, CropBounds)> {
        let bounds = recover_subimages(cropped, self.cfg.sub_side)?;
        let mut kept = Vec::new();
        for r in &bounds.rects {
            let sub = cropped.crop(r.x, r.y, r.w, r.h)?;
            let sc = self.score_subimage(&sub)?;
            if sc.sync() >= self.cfg.confidence_floor {
                kept.push(sc);
            }
        }
        if kept.is_empty() {
            return Err(Error::DecodeFailed(format!(
                "no recovered sub-image reached sync {}",
                self.cfg.confidence_floor
            )));
        }
        Ok((combine(&kept), bounds))
    }

    /// Decodes an arbitrary-size picture by resizing it to the full frame,
    /// without any crop analysis.
    pub fn extract_resized(&self, img: &RasterU8) -> Result<Extraction> {
        let side = self.cfg.host_side();
        if img.dims() == (side, side) {
            return self.extract(img);
        }
        self.extract(&resize_bilinear(img, side, side))
    }
}

/// Sums z-scores over sub-images: the sign gives the bit, the magnitude
/// (scaled by 1/sqrt(count)) the confidence.
fn combine(scores: &[SubImageScores]) -> Extraction {
    let q = scores.len().max(1) as f64;
    let mut total = vec![0.0; PAYLOAD_BITS];
    for s in scores {
        for (t, z) in total.iter_mut().zip(&s.z) {
            *t += z;
        }
    }
    Extraction {
        bits: BitString::from_bools(total.iter().map(|&t| t > 0.0)),
        confidence: total.iter().map(|t| t.abs() / q.sqrt()).collect(),
        sync: scores.iter().map(|s| s.sync()).collect(),
        shifts: scores.iter().map(|s| s.shift).collect(),
    }
}

/// One-shot embedding with a freshly generated bank.
pub fn embed(host: &RasterU8, payload: &BitString, key: u64, jnd: &JndMap, cfg: &EmbedConfig) -> Result<RasterU8> {
    Codec::new(key, *cfg)?.embed(host, payload, jnd)
}

/// One-shot extraction with a freshly generated bank.
pub fn extract(img: &RasterU8, key: u64, cfg: &EmbedConfig) -> Result<Extraction> {
    Codec::new(key, *cfg)?.extract(img)
}

/// One-shot anti-crop decoding with a freshly generated bank.
pub fn decode_with_anticrop(cropped: &RasterU8, key: u64, cfg: &EmbedConfig) -> Result<(Extraction, CropBounds)> {
    Codec::new(key, *cfg)?.decode_with_anticrop(cropped)
}

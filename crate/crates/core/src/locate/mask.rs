//! Foreground masks: adaptive thresholding, connected components and
//! morphological completion.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::filter::box_mean;
use crate::raster::{Mask, RasterU8};

/// `1` where a pixel exceeds its `block x block` local mean minus `offset`.
pub fn adaptive_threshold(gray: &RasterU8, block: usize, offset: f64) -> Result<Mask> {
    gray.require_channels(1)?;
    if block % 2 == 0 || block < 3 {
        return Err(Error::EvenBlock(block));
    }
    let mean = box_mean(&gray.plane_f(0), block / 2);
    let (w, h) = gray.dims();
    Ok(Mask::from_fn(w, h, |x, y| {
        gray.get(x, y, 0) as f64 > mean.get(x, y) - offset
    }))
}

const NEIGHBORS_8: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// Labels 8-connected foreground components in row-major discovery order.
/// Returns the label plane (0 = background) and each component's size.
fn label_components(mask: &Mask) -> (Vec<u32>, Vec<usize>) {
    let (w, h) = mask.dims();
    let mut labels = vec![0u32; w * h];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if mask.data()[start] == 0 || labels[start] != 0 {
            continue;
        }
        let label = sizes.len() as u32 + 1;
        labels[start] = label;
        queue.push_back(start);
        let mut size = 0;
        while let Some(i) = queue.pop_front() {
            size += 1;
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for (dx, dy) in NEIGHBORS_8 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if mask.data()[j] != 0 && labels[j] == 0 {
                    labels[j] = label;
                    queue.push_back(j);
                }
            }
        }
        sizes.push(size);
    }
    (labels, sizes)
}

/// Keeps only the largest 8-connected component. Ties go to the component
/// whose first pixel comes earliest in row-major order.
pub fn largest_component(mask: &Mask) -> Result<Mask> {
    let (labels, sizes) = label_components(mask);
    // Labels are assigned in row-major order of first pixels, so the first
    // maximum wins ties.
    let best = sizes
        .iter()
        .enumerate()
        .fold(None, |acc: Option<(usize, usize)>, (i, &s)| match acc {
            Some((_, bs)) if bs >= s => acc,
            _ => Some((i, s)),
        })
        .ok_or(Error::EmptyMask)?;
    let keep = best.0 as u32 + 1;
    let (w, h) = mask.dims();
    Ok(Mask::from_fn(w, h, |x, y| labels[y * w + x] == keep))
}

/// Half-widths of the rows of a digital disk of radius `r`.
fn disk_rows(r: usize) -> Vec<(isize, usize)> {
    let r = r as isize;
    (-r..=r)
        .map(|dy| {
            let half = (((r * r - dy * dy) as f64).sqrt()).floor() as usize;
            (dy, half)
        })
        .collect()
}

/// Per-row prefix counts of set pixels: `pre[y * (w + 1) + x]` counts `[0, x)`.
fn row_prefix(mask: &Mask) -> Vec<u32> {
    let (w, h) = mask.dims();
    let mut pre = vec![0u32; (w + 1) * h];
    for y in 0..h {
        for x in 0..w {
            pre[y * (w + 1) + x + 1] = pre[y * (w + 1) + x] + mask.data()[y * w + x] as u32;
        }
    }
    pre
}

/// Disk dilation; pixels outside the mask count as background.
pub fn dilate_disk(mask: &Mask, r: usize) -> Mask {
    let (w, h) = mask.dims();
    let pre = row_prefix(mask);
    let rows = disk_rows(r);
    Mask::from_fn(w, h, |x, y| {
        rows.iter().any(|&(dy, half)| {
            let yy = y as isize + dy;
            if yy < 0 || yy >= h as isize {
                return false;
            }
            let x0 = x.saturating_sub(half);
            let x1 = (x + half + 1).min(w);
            let base = yy as usize * (w + 1);
            pre[base + x1] > pre[base + x0]
        })
    })
}

/// Disk erosion; pixels outside the mask count as background.
pub fn erode_disk(mask: &Mask, r: usize) -> Mask {
    let (w, h) = mask.dims();
    let pre = row_prefix(mask);
    let rows = disk_rows(r);
    Mask::from_fn(w, h, |x, y| {
        rows.iter().all(|&(dy, half)| {
            let yy = y as isize + dy;
            if yy < 0 || yy >= h as isize || x < half || x + half >= w {
                return false;
            }
            let base = yy as usize * (w + 1);
            pre[base + x + half + 1] - pre[base + x - half] == (2 * half + 1) as u32
        })
    })
}

/// Morphological closing with a disk, computed on a zero-padded canvas so
/// the result is not clipped by the image border.
pub fn close_disk(mask: &Mask, r: usize) -> Mask {
    erode_disk(&dilate_disk(&mask.pad(r), r), r).unpad(r)
}

/// Fills every background region not connected to the image border.
pub fn fill_holes(mask: &Mask) -> Mask {
    let (w, h) = mask.dims();
    let mut outside = vec![false; w * h];
    let mut queue = VecDeque::new();
    let seed = |x: usize, y: usize, q: &mut VecDeque<usize>, o: &mut Vec<bool>| {
        let i = y * w + x;
        if mask.data()[i] == 0 && !o[i] {
            o[i] = true;
            q.push_back(i);
        }
    };
    for x in 0..w {
        seed(x, 0, &mut queue, &mut outside);
        seed(x, h - 1, &mut queue, &mut outside);
    }
    for y in 0..h {
        seed(0, y, &mut queue, &mut outside);
        seed(w - 1, y, &mut queue, &mut outside);
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        // Background connectivity is 4-neighborhood, dual to 8-connected foreground.
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                continue;
            }
            let j = ny as usize * w + nx as usize;
            if mask.data()[j] == 0 && !outside[j] {
                outside[j] = true;
                queue.push_back(j);
            }
        }
    }
    Mask::from_fn(w, h, |x, y| !outside[y * w + x])
}

/// Completes a foreground mask: closing with a radius-5 disk then hole
/// filling, repeated until nothing changes (which makes it idempotent).
pub fn refine_mask(mask: &Mask) -> Result<Mask> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let mut cur = mask.clone();
    loop {
        let next = fill_holes(&close_disk(&cur, 5));
        if next == cur {
            return Ok(cur);
        }
        cur = next;
    }
}

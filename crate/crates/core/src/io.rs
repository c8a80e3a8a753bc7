//! PNG and float-plane file I/O.

use std::io::{Read, Write};
use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma, Rgb};

use crate::error::{Error, Result};
use crate::raster::{RasterF, RasterU8};

/// Magic bytes opening a float-plane sidecar file.
pub const JNDF_MAGIC: &[u8; 4] = b"JNDF";

/// Loads an 8-bit PNG as a gray or RGB raster. Alpha is dropped with a
/// warning; 16-bit inputs are rejected.
pub fn read_png(path: impl AsRef<Path>) -> Result<RasterU8> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::Io(format!("{}: {io}", path.display())),
        other => Error::Parse(format!("{}: {other}", path.display())),
    })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(buf) => RasterU8::new(w, h, 1, buf.into_raw()),
        DynamicImage::ImageRgb8(buf) => RasterU8::new(w, h, 3, buf.into_raw()),
        DynamicImage::ImageLumaA8(_) => {
            log::warn!("{}: dropping alpha channel", path.display());
            RasterU8::new(w, h, 1, img.to_luma8().into_raw())
        }
        DynamicImage::ImageRgba8(_) => {
            log::warn!("{}: dropping alpha channel", path.display());
            RasterU8::new(w, h, 3, img.to_rgb8().into_raw())
        }
        _ => Err(Error::Parse(format!(
            "{}: only 8-bit gray or RGB images are supported",
            path.display()
        ))),
    }
}

pub fn write_png(path: impl AsRef<Path>, img: &RasterU8) -> Result<()> {
    let path = path.as_ref();
    let (w, h) = (img.width() as u32, img.height() as u32);
    let res = match img.channels() {
        1 => ImageBuffer::<Luma<u8>, _>::from_raw(w, h, img.data().to_vec())
            .expect("raster length checked")
            .save(path),
        _ => ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, img.data().to_vec())
            .expect("raster length checked")
            .save(path),
    };
    res.map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Writes a float plane: 16-byte header (`JNDF`, width, height, reserved;
/// little-endian u32s) followed by row-major little-endian f32 samples.
pub fn write_float_plane(mut w: impl Write, plane: &RasterF) -> Result<()> {
    let mut header = [0u8; 16];
    header[..4].copy_from_slice(JNDF_MAGIC);
    header[4..8].copy_from_slice(&(plane.width() as u32).to_le_bytes());
    header[8..12].copy_from_slice(&(plane.height() as u32).to_le_bytes());
    w.write_all(&header)?;
    let mut body = Vec::with_capacity(plane.data().len() * 4);
    for &v in plane.data() {
        body.extend_from_slice(&(v as f32).to_le_bytes());
    }
    w.write_all(&body)?;
    Ok(())
}

pub fn read_float_plane(mut r: impl Read) -> Result<RasterF> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if &header[..4] != JNDF_MAGIC {
        return Err(Error::Parse("missing JNDF magic".into()));
    }
    let width = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let mut body = vec![0u8; width * height * 4];
    r.read_exact(&mut body)?;
    let data = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    RasterF::new(width, height, data)
}

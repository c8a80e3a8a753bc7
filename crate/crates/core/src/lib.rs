//! Screen-shooting resilient image watermarking.
//!
//! The crate embeds a 127-bit payload into an RGB image under a
//! perceptual (JND) budget, simulates the display/camera channel, locates
//! the watermarked picture inside a photo, recovers cropped sub-images from
//! a symmetric template and decodes the payload.

pub mod anticrop;
pub mod bits;
pub mod channel;
pub mod codec;
pub mod error;
pub mod filter;
pub mod geometry;
pub mod io;
pub mod jnd;
pub mod locate;
pub mod metrics;
pub mod raster;
pub mod synth;

pub use bits::{BitString, PAYLOAD_BITS};
pub use error::{Error, Result};
pub use geometry::{AffineParams, Homography, Point, Quad};
pub use metrics::QualityReport;
pub use raster::{Mask, RasterF, RasterU8};

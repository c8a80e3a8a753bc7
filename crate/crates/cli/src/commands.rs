//! Single-image subcommands.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;

use screenmark::anticrop::{recover_subimages, CropBounds};
use screenmark::channel::{replay, simulate, ChannelConfig, DistortionTrace};
use screenmark::codec::{Codec, Extraction};
use screenmark::filter::to_grayscale;
use screenmark::io::{read_png, write_float_plane, write_png};
use screenmark::jnd::{jnd_map, JndParams};
use screenmark::locate::locate_with;
use screenmark::metrics::{ber, psnr, ssim_luma};
use screenmark::{BitString, Homography, QualityReport, Quad, RasterU8};

use crate::config::{load_payload, FileConfig};
use crate::{AttackArgs, CliError, EmbedArgs, ExtractArgs, JndArgs, LocateArgs, RecoverArgs};

pub fn read_image(path: &Path) -> Result<RasterU8, CliError> {
    read_png(path).map_err(|e| CliError::Input(e.to_string()))
}

pub fn read_rgb(path: &Path) -> Result<RasterU8, CliError> {
    let img = read_image(path)?;
    if img.channels() == 1 {
        return Ok(img.gray_to_rgb()?);
    }
    Ok(img)
}

pub fn write_image(path: &Path, img: &RasterU8) -> Result<(), CliError> {
    write_png(path, img).map_err(|e| CliError::Output(e.to_string()))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let out = File::create(path).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
    serde_json::to_writer_pretty(BufWriter::new(out), value)
        .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

fn print_json(value: &impl Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable report"));
}

pub fn embed(a: &EmbedArgs, file: &FileConfig) -> Result<(), CliError> {
    let mut cfg = file.embed;
    if let Some(v) = a.eta {
        cfg.eta = v;
    }
    if let Some(v) = a.gain {
        cfg.per_bit_gain = v;
    }
    if let Some(v) = a.template_amplitude {
        cfg.template_amplitude = v;
    }
    let payload = load_payload(a.payload.as_deref(), a.payload_file.as_deref())?;
    let host = read_rgb(&a.host)?;
    let codec = Codec::new(a.key, cfg)?;
    let jnd = jnd_map(&to_grayscale(&host)?, &JndParams::default())?;
    let marked = codec.embed(&host, &payload, &jnd)?;
    write_image(&a.out, &marked)?;
    let decoded = codec.extract(&marked)?;
    print_json(&QualityReport {
        psnr: psnr(&host, &marked)?,
        ssim: ssim_luma(&host, &marked)?,
        ber: ber(&payload, &decoded.bits)?,
    });
    Ok(())
}

#[derive(Serialize)]
struct AttackReport {
    #[serde(serialize_with = "finite_or_null")]
    psnr: f64,
    stages: usize,
}

fn finite_or_null<S: serde::Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

pub fn attack(a: &AttackArgs, file: &FileConfig) -> Result<(), CliError> {
    let img = read_image(&a.input)?;
    let (out, trace) = if let Some(path) = &a.replay {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let trace: DistortionTrace =
            serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        (replay(&trace, &img)?, trace)
    } else {
        let seed = a.seed.unwrap_or(file.channel.seed);
        let mut cfg = if a.zero {
            ChannelConfig::zero_severity(seed)
        } else if a.moire_only {
            ChannelConfig::moire_only(seed)
        } else {
            ChannelConfig { seed, ..file.channel }
        };
        if let Some(step) = a.step {
            cfg.step = step;
        }
        simulate(&img, &cfg)?
    };
    write_image(&a.out, &out)?;
    if let Some(path) = &a.trace {
        write_json(path, &trace)?;
    }
    print_json(&AttackReport {
        psnr: psnr(&img, &out)?,
        stages: trace.stages.len(),
    });
    Ok(())
}

#[derive(Serialize)]
struct LocateReport {
    quad: Quad,
    homography: Homography,
    output_side: usize,
}

pub fn locate(a: &LocateArgs, file: &FileConfig) -> Result<(), CliError> {
    let img = read_rgb(&a.input)?;
    let mut params = file.locate.clone();
    if let Some(seed) = a.seed {
        params.seed = seed;
    }
    let res = locate_with(&img, &params)?;
    write_image(&a.out, &res.rectified)?;
    let report = LocateReport {
        quad: res.quad,
        homography: res.homography,
        output_side: params.output_side,
    };
    if let Some(path) = &a.quad {
        write_json(path, &report)?;
    }
    print_json(&report);
    Ok(())
}

#[derive(Serialize)]
struct ExtractReport {
    payload: String,
    bits: String,
    mean_confidence: f64,
    sync: Vec<f64>,
    shifts: Vec<(i32, i32)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ber: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    crop: Option<CropBounds>,
}

fn report(x: &Extraction, truth: Option<&BitString>, crop: Option<CropBounds>) -> Result<ExtractReport, CliError> {
    Ok(ExtractReport {
        payload: x.bits.to_hex()?,
        bits: x.bits.to_string(),
        mean_confidence: x.confidence.iter().sum::<f64>() / x.confidence.len().max(1) as f64,
        sync: x.sync.clone(),
        shifts: x.shifts.clone(),
        ber: truth.map(|t| ber(t, &x.bits)).transpose()?,
        crop,
    })
}

pub fn extract(a: &ExtractArgs, file: &FileConfig) -> Result<(), CliError> {
    let truth = match (&a.truth, &a.truth_file) {
        (None, None) => None,
        (h, f) => Some(load_payload(h.as_deref(), f.as_deref())?),
    };
    let img = read_rgb(&a.input)?;
    let codec = Codec::new(a.key, file.embed)?;
    let out = if a.anticrop {
        let (x, bounds) = codec.decode_with_anticrop(&img)?;
        report(&x, truth.as_ref(), Some(bounds))?
    } else if a.resize {
        report(&codec.extract_resized(&img)?, truth.as_ref(), None)?
    } else {
        report(&codec.extract(&img)?, truth.as_ref(), None)?
    };
    print_json(&out);
    Ok(())
}

pub fn recover(a: &RecoverArgs, file: &FileConfig) -> Result<(), CliError> {
    let img = read_rgb(&a.input)?;
    let bounds = recover_subimages(&img, file.embed.sub_side)?;
    if let Some(dir) = &a.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
        for r in &bounds.rects {
            let name = format!("{:?}.png", r.quadrant).to_lowercase();
            write_image(&dir.join(name), &img.crop(r.x, r.y, r.w, r.h)?)?;
        }
    }
    print_json(&bounds);
    Ok(())
}

#[derive(Serialize)]
struct JndReport {
    min: f64,
    max: f64,
    mean: f64,
}

pub fn jnd(a: &JndArgs) -> Result<(), CliError> {
    let img = read_image(&a.input)?;
    let gray = if img.channels() == 3 { to_grayscale(&img)? } else { img };
    let map = jnd_map(&gray, &JndParams::default())?;
    write_image(&a.out, &map.to_preview())?;
    if let Some(path) = &a.raw {
        let f = File::create(path).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
        write_float_plane(BufWriter::new(f), map.plane()).map_err(|e| CliError::Output(e.to_string()))?;
    }
    let p = map.plane();
    print_json(&JndReport {
        min: p.min(),
        max: p.max(),
        mean: p.mean(),
    });
    Ok(())
}

//! Experiment grid runner: images x seeds x channel conditions x crops.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use screenmark::anticrop::{crop_edge, Edge};
use screenmark::channel::{simulate, ChannelConfig};
use screenmark::codec::{Codec, EmbedConfig, Extraction};
use screenmark::filter::{resize_bilinear, to_grayscale};
use screenmark::jnd::{jnd_map, JndParams};
use screenmark::locate::{locate_with, LocateParams};
use screenmark::metrics::{ber, psnr, ssim_luma};
use screenmark::synth::{corpus, synth_capture};
use screenmark::{BitString, RasterU8, PAYLOAD_BITS};

use crate::commands::{read_rgb, write_json};
use crate::config::{parse_key, FileConfig};
use crate::{CliError, EvaluateArgs};

const DEFAULT_KEY: &str = "5eedcafef00d0001";
const MAX_CROP: f64 = 0.75;

/// A channel condition of the grid.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelCondition {
    pub label: String,
    /// Channel settings; absent means no simulated channel.
    #[serde(default)]
    pub config: Option<ChannelConfig>,
    /// Paste onto a background with this corner jitter and localize.
    #[serde(default)]
    pub capture_jitter: Option<f64>,
}

impl ChannelCondition {
    fn none() -> Self {
        Self {
            label: "none".into(),
            config: None,
            capture_jitter: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decoder {
    /// Symmetry-based sub-image recovery.
    #[default]
    Anticrop,
    /// Resize the cropped picture to the full frame.
    Resize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CropCondition {
    pub gamma: f64,
    #[serde(default = "default_edge")]
    pub edge: Edge,
    #[serde(default)]
    pub decoder: Decoder,
}

fn default_edge() -> Edge {
    Edge::Left
}

impl CropCondition {
    fn label(&self) -> String {
        if self.gamma == 0.0 {
            return "crop=0".into();
        }
        let dec = match self.decoder {
            Decoder::Anticrop => "",
            Decoder::Resize => ":resize",
        };
        format!("crop={:.2}:{}{dec}", self.gamma, self.edge.name())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub corpus_dir: Option<PathBuf>,
    pub synthetic_images: usize,
    pub seeds: Vec<u64>,
    pub key: String,
    pub channel: Vec<ChannelCondition>,
    pub crop: Vec<CropCondition>,
    pub output: PathBuf,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            corpus_dir: None,
            synthetic_images: 20,
            seeds: vec![0],
            key: DEFAULT_KEY.into(),
            channel: Vec::new(),
            crop: Vec::new(),
            output: PathBuf::from("report"),
        }
    }
}

impl ExperimentSpec {
    fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    fn apply_flags(&mut self, a: &EvaluateArgs) {
        if let Some(c) = &a.corpus {
            self.corpus_dir = Some(c.clone());
        }
        if let Some(n) = a.synthetic {
            self.synthetic_images = n;
            self.corpus_dir = None;
        }
        if let Some(s) = &a.seeds {
            self.seeds = s.clone();
        }
        if let Some(crops) = &a.crops {
            self.crop = crops
                .iter()
                .map(|&gamma| CropCondition {
                    gamma,
                    edge: a.edge,
                    decoder: Decoder::Anticrop,
                })
                .collect();
        }
        if let Some(k) = a.key {
            self.key = format!("{k:016x}");
        }
        if let Some(o) = &a.out_dir {
            self.output = o.clone();
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.seeds.is_empty() {
            return Err(CliError::Usage("experiment needs at least one seed".into()));
        }
        for c in &self.crop {
            if !(0.0..=MAX_CROP).contains(&c.gamma) {
                return Err(CliError::Usage(format!("crop ratio {} outside [0, {MAX_CROP}]", c.gamma)));
            }
        }
        for ch in &self.channel {
            if let Some(cfg) = &ch.config {
                cfg.validate()?;
            }
        }
        Ok(())
    }

    fn channels(&self) -> Vec<ChannelCondition> {
        if self.channel.is_empty() {
            vec![ChannelCondition::none()]
        } else {
            self.channel.clone()
        }
    }

    fn crops(&self) -> Vec<CropCondition> {
        if self.crop.is_empty() {
            vec![CropCondition {
                gamma: 0.0,
                edge: Edge::Left,
                decoder: Decoder::Anticrop,
            }]
        } else {
            self.crop.clone()
        }
    }
}

/// FNV-1a over bytes.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one (seed, image) job; independent of scheduling.
pub fn job_seed(seed: u64, image_id: &str) -> u64 {
    splitmix64(seed ^ fnv1a(image_id.as_bytes()))
}

struct Host {
    id: String,
    image: RasterU8,
}

fn load_corpus(spec: &ExperimentSpec, side: usize) -> Result<Vec<Host>, CliError> {
    let Some(dir) = &spec.corpus_dir else {
        return Ok(corpus(spec.synthetic_images, side)
            .into_iter()
            .enumerate()
            .map(|(i, image)| Host {
                id: format!("synth-{i:03}"),
                image,
            })
            .collect());
    };
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let mut image = read_rgb(p)?;
            if image.dims() != (side, side) {
                log::info!("{}: resizing to {side}x{side}", p.display());
                image = resize_bilinear(&image, side, side);
            }
            let id = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            Ok(Host { id, image })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
struct ReportRow {
    image: String,
    seed: u64,
    condition: String,
    psnr: String,
    ssim: String,
    ber: String,
    error: String,
}

#[derive(Debug, Clone, Serialize)]
struct TimingRow {
    image: String,
    seed: u64,
    condition: String,
    embed_ms: String,
    attack_ms: String,
    locate_ms: String,
    extract_ms: String,
}

struct Outcome {
    condition: String,
    ber: Option<f64>,
    error: Option<String>,
    attack_ms: f64,
    locate_ms: f64,
    extract_ms: f64,
}

struct JobResult {
    image: String,
    seed: u64,
    psnr: f64,
    ssim: f64,
    embed_ms: f64,
    outcomes: Vec<Outcome>,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1000.0
}

fn fmt_f(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else {
        "inf".into()
    }
}

fn error_label(e: &screenmark::Error) -> String {
    match e {
        screenmark::Error::LocalizationFailed { stage, .. } => format!("LocalizationFailed:{stage}"),
        other => crate::variant_name(other),
    }
}

struct Grid<'a> {
    codec: &'a Codec,
    locate: &'a LocateParams,
    channels: &'a [ChannelCondition],
    crops: &'a [CropCondition],
}

fn run_condition(
    grid: &Grid,
    marked: &RasterU8,
    payload: &BitString,
    ch: &ChannelCondition,
    crop: &CropCondition,
    seed: u64,
) -> Outcome {
    let condition = format!("{}/{}", ch.label, crop.label());
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ fnv1a(condition.as_bytes())));
    let mut out = Outcome {
        condition,
        ber: None,
        error: None,
        attack_ms: 0.0,
        locate_ms: 0.0,
        extract_ms: 0.0,
    };
    let res = (|| -> screenmark::Result<Extraction> {
        let t = Instant::now();
        let mut img = match &ch.config {
            Some(cfg) => {
                let cfg = ChannelConfig {
                    seed: rng.random(),
                    ..*cfg
                };
                simulate(marked, &cfg)?.0
            }
            None => marked.clone(),
        };
        out.attack_ms = ms(t);
        if let Some(jitter) = ch.capture_jitter {
            let canvas = img.width() * 25 / 16;
            let cap = synth_capture(&img, canvas, jitter, &mut rng)?;
            let t = Instant::now();
            let params = LocateParams {
                seed: rng.random(),
                ..grid.locate.clone()
            };
            img = locate_with(&cap.image, &params)?.rectified;
            out.locate_ms = ms(t);
        }
        let t = Instant::now();
        let x = if crop.gamma > 0.0 {
            let cropped = crop_edge(&img, crop.edge, crop.gamma)?;
            match crop.decoder {
                Decoder::Anticrop => grid.codec.decode_with_anticrop(&cropped).map(|r| r.0),
                Decoder::Resize => grid.codec.extract_resized(&cropped),
            }
        } else {
            grid.codec.extract(&img)
        };
        out.extract_ms = ms(t);
        x
    })();
    match res {
        Ok(x) => out.ber = ber(payload, &x.bits).ok(),
        Err(e) => {
            log::info!("{}: {e}", out.condition);
            out.error = Some(error_label(&e));
        }
    }
    out
}

fn run_job(grid: &Grid, host: &Host, seed: u64) -> Result<JobResult, screenmark::Error> {
    let js = job_seed(seed, &host.id);
    let mut rng = ChaCha8Rng::seed_from_u64(js);
    let payload = BitString::random(&mut rng, PAYLOAD_BITS);
    let t = Instant::now();
    let jnd = jnd_map(&to_grayscale(&host.image)?, &JndParams::default())?;
    let marked = grid.codec.embed(&host.image, &payload, &jnd)?;
    let embed_ms = ms(t);
    let mut outcomes = Vec::new();
    for ch in grid.channels {
        for crop in grid.crops {
            outcomes.push(run_condition(grid, &marked, &payload, ch, crop, js));
        }
    }
    Ok(JobResult {
        image: host.id.clone(),
        seed,
        psnr: psnr(&host.image, &marked)?,
        ssim: ssim_luma(&host.image, &marked)?,
        embed_ms,
        outcomes,
    })
}

#[derive(Debug, Serialize)]
struct ConditionSummary {
    condition: String,
    rows: usize,
    failures: usize,
    ber_mean: Option<f64>,
    ber_median: Option<f64>,
    psnr_mean: Option<f64>,
    ssim_mean: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Summary {
    images: usize,
    seeds: Vec<u64>,
    rows: usize,
    conditions: Vec<ConditionSummary>,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn median(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len();
    Some(if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) })
}

fn worker_count(flag: Option<usize>) -> Result<usize, CliError> {
    if let Ok(v) = std::env::var("SCREENMARK_THREADS") {
        return v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("SCREENMARK_THREADS must be a number, got {v:?}")));
    }
    Ok(flag.unwrap_or(0))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

fn out_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Output(format!("{}: {e}", path.display()))
}

pub fn run(a: &EvaluateArgs, file: &FileConfig) -> Result<(), CliError> {
    let mut spec = match &a.spec {
        Some(p) => ExperimentSpec::load(p)?,
        None => ExperimentSpec::default(),
    };
    spec.apply_flags(a);
    spec.validate()?;
    let key = parse_key(&spec.key).map_err(CliError::Usage)?;
    let cfg: EmbedConfig = file.embed;
    let codec = Codec::new(key, cfg)?;
    let hosts = load_corpus(&spec, cfg.host_side())?;
    if hosts.is_empty() {
        return Err(CliError::Usage("corpus is empty".into()));
    }
    let channels = spec.channels();
    let crops = spec.crops();
    let grid = Grid {
        codec: &codec,
        locate: &file.locate,
        channels: &channels,
        crops: &crops,
    };

    let jobs: Vec<(&Host, u64)> = hosts.iter().flat_map(|h| spec.seeds.iter().map(move |&s| (h, s))).collect();
    let workers = worker_count(a.workers)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    log::info!("running {} jobs on {} workers", jobs.len(), pool.current_num_threads());
    let results: Vec<Result<JobResult, (String, u64, screenmark::Error)>> = pool.install(|| {
        jobs.par_iter()
            .map(|(h, s)| run_job(&grid, h, *s).map_err(|e| (h.id.clone(), *s, e)))
            .collect()
    });

    std::fs::create_dir_all(&spec.output)
        .map_err(|e| CliError::Output(format!("{}: {e}", spec.output.display())))?;
    let report_path = spec.output.join("report.csv");
    let timing_path = spec.output.join("timings.csv");
    let mut report = csv_writer(&report_path)?;
    let mut timings = csv_writer(&timing_path)?;
    let labels: Vec<String> = channels
        .iter()
        .flat_map(|c| crops.iter().map(move |k| format!("{}/{}", c.label, k.label())))
        .collect();
    let mut per_condition: Vec<(Vec<f64>, Vec<f64>, Vec<f64>, usize, usize)> =
        vec![(Vec::new(), Vec::new(), Vec::new(), 0, 0); labels.len()];
    let mut rows = 0;
    for r in &results {
        match r {
            Ok(job) => {
                for (i, o) in job.outcomes.iter().enumerate() {
                    rows += 1;
                    let agg = &mut per_condition[i];
                    agg.3 += 1;
                    agg.1.push(job.psnr);
                    agg.2.push(job.ssim);
                    match o.ber {
                        Some(b) => agg.0.push(b),
                        None => agg.4 += 1,
                    }
                    report
                        .serialize(ReportRow {
                            image: job.image.clone(),
                            seed: job.seed,
                            condition: o.condition.clone(),
                            psnr: fmt_f(job.psnr),
                            ssim: fmt_f(job.ssim),
                            ber: o.ber.map(fmt_f).unwrap_or_default(),
                            error: o.error.clone().unwrap_or_default(),
                        })
                        .map_err(out_err(&report_path))?;
                    timings
                        .serialize(TimingRow {
                            image: job.image.clone(),
                            seed: job.seed,
                            condition: o.condition.clone(),
                            embed_ms: format!("{:.3}", job.embed_ms),
                            attack_ms: format!("{:.3}", o.attack_ms),
                            locate_ms: format!("{:.3}", o.locate_ms),
                            extract_ms: format!("{:.3}", o.extract_ms),
                        })
                        .map_err(out_err(&timing_path))?;
                }
            }
            Err((id, seed, e)) => {
                // Embedding itself failed: one error row per condition.
                for (i, label) in labels.iter().enumerate() {
                    rows += 1;
                    per_condition[i].3 += 1;
                    per_condition[i].4 += 1;
                    report
                        .serialize(ReportRow {
                            image: id.clone(),
                            seed: *seed,
                            condition: label.clone(),
                            psnr: String::new(),
                            ssim: String::new(),
                            ber: String::new(),
                            error: error_label(e),
                        })
                        .map_err(out_err(&report_path))?;
                }
            }
        }
    }
    report.flush().map_err(|e| CliError::Output(e.to_string()))?;
    timings.flush().map_err(|e| CliError::Output(e.to_string()))?;

    let summary = Summary {
        images: hosts.len(),
        seeds: spec.seeds.clone(),
        rows,
        conditions: labels
            .iter()
            .zip(&per_condition)
            .map(|(label, (b, p, s, n, f))| ConditionSummary {
                condition: label.clone(),
                rows: *n,
                failures: *f,
                ber_mean: mean(b),
                ber_median: median(b),
                psnr_mean: mean(&p.iter().copied().filter(|v| v.is_finite()).collect::<Vec<_>>()),
                ssim_mean: mean(s),
            })
            .collect(),
    };
    write_json(&spec.output.join("summary.json"), &summary)?;
    println!("{}", serde_json::to_string_pretty(&summary).expect("serializable summary"));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn job_seed_is_stable_and_spread() {
        assert_eq!(job_seed(1, "a.png"), job_seed(1, "a.png"));
        assert_ne!(job_seed(1, "a.png"), job_seed(2, "a.png"));
        assert_ne!(job_seed(1, "a.png"), job_seed(1, "b.png"));
    }

    #[test]
    fn spec_parsing_and_validation() {
        let spec: ExperimentSpec = toml::from_str(
            r#"
            synthetic_images = 3
            seeds = [1, 2]
            [[crop]]
            gamma = 0.4
            edge = "top"
            [[channel]]
            label = "mild"
            config = { moire_probability = 1.0 }
            "#,
        )
        .unwrap();
        assert_eq!(spec.crop[0].edge, Edge::Top);
        assert_eq!(spec.crop[0].label(), "crop=0.40:top");
        assert_eq!(spec.channel[0].config.unwrap().moire_probability, 1.0);
        spec.validate().unwrap();
        let bad = ExperimentSpec {
            crop: vec![CropCondition {
                gamma: 0.8,
                edge: Edge::Left,
                decoder: Decoder::Anticrop,
            }],
            ..ExperimentSpec::default()
        };
        assert!(bad.validate().is_err());
    }
}

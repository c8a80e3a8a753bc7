use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use screenmark::anticrop::{crop_edge, Edge};
use screenmark::codec::{Codec, EmbedConfig};
use screenmark::io::{read_png, write_png};
use screenmark::synth::{synth_capture, texture};
use screenmark::{BitString, RasterU8, PAYLOAD_BITS};
use tempfile::TempDir;

const KEY: &str = "00c0ffee12345678";

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_screenmark"));
    c.env_remove("SCREENMARK_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!("bad JSON ({e}): {}", String::from_utf8_lossy(&o.stdout))
    })
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn payload_hex() -> String {
    BitString::random(&mut ChaCha8Rng::seed_from_u64(5), PAYLOAD_BITS).to_hex().unwrap()
}

fn host(dir: &TempDir) -> PathBuf {
    let p = dir.path().join("host.png");
    write_png(&p, &texture(1, 512, 512)).unwrap();
    p
}

fn embedded(dir: &TempDir) -> PathBuf {
    let h = host(dir);
    let out = dir.path().join("marked.png");
    let o = run(&["embed", "--host", s(&h), "--out", s(&out), "--key", KEY, "--payload", &payload_hex()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn embed_reports_quality_and_round_trips() {
    let dir = TempDir::new().unwrap();
    let h = host(&dir);
    let out = dir.path().join("marked.png");
    let o = run(&["embed", "--host", s(&h), "--out", s(&out), "--key", KEY, "--payload", &payload_hex()]);
    assert_eq!(code(&o), 0);
    assert!(out.exists());
    let q = json(&o);
    assert!(q["psnr"].as_f64().unwrap() >= 28.0);
    assert_eq!(q["ber"].as_f64().unwrap(), 0.0);

    let o = run(&["extract", "--input", s(&out), "--key", KEY, "--truth", &payload_hex()]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert_eq!(r["payload"], payload_hex());
    assert_eq!(r["ber"].as_f64().unwrap(), 0.0);
}

#[test]
fn embed_errors_map_to_exit_codes() {
    let dir = TempDir::new().unwrap();
    let h = host(&dir);
    let out = dir.path().join("o.png");

    let o = run(&["embed", "--host", s(&h), "--out", s(&out), "--key", KEY, "--payload", "abcd"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("PayloadLengthMismatch"));

    let bits = dir.path().join("bits.txt");
    std::fs::write(&bits, "0101").unwrap();
    let o = run(&["embed", "--host", s(&h), "--out", s(&out), "--key", KEY, "--payload-file", s(&bits)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("PayloadLengthMismatch"));

    let missing = dir.path().join("nope.png");
    let o = run(&["embed", "--host", s(&missing), "--out", s(&out), "--key", KEY, "--payload", &payload_hex()]);
    assert_eq!(code(&o), 1);

    let unwritable = dir.path().join("no/such/dir/o.png");
    let o = run(&["embed", "--host", s(&h), "--out", s(&unwritable), "--key", KEY, "--payload", &payload_hex()]);
    assert_eq!(code(&o), 3);

    assert_eq!(code(&run(&["embed", "--host", s(&h)])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn attack_zero_replay_and_moire() {
    let dir = TempDir::new().unwrap();
    let src = dir.path().join("in.png");
    write_png(&src, &texture(2, 96, 64)).unwrap();
    let zero = dir.path().join("zero.png");
    assert_eq!(code(&run(&["attack", "-i", s(&src), "-o", s(&zero), "--zero", "--seed", "3"])), 0);
    assert_eq!(read_png(&zero).unwrap(), read_png(&src).unwrap());

    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "[channel]\nstep = 120000\nmoire_probability = 1.0\n").unwrap();
    let att = dir.path().join("att.png");
    let trace = dir.path().join("trace.json");
    let o = run(&["--config", s(&cfg), "attack", "-i", s(&src), "-o", s(&att), "--seed", "8", "--trace", s(&trace)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let again = dir.path().join("again.png");
    assert_eq!(code(&run(&["attack", "-i", s(&src), "-o", s(&again), "--replay", s(&trace)])), 0);
    assert_eq!(read_png(&again).unwrap(), read_png(&att).unwrap());

    let moire = dir.path().join("moire.png");
    let o = run(&["attack", "-i", s(&src), "-o", s(&moire), "--moire-only", "--seed", "1"]);
    assert_eq!(code(&o), 0);
    assert!(json(&o)["psnr"].is_f64());
    assert_ne!(read_png(&moire).unwrap(), read_png(&src).unwrap());
}

#[test]
fn locate_then_extract() {
    let dir = TempDir::new().unwrap();
    let marked = embedded(&dir);
    let cap = synth_capture(&read_png(&marked).unwrap(), 800, 0.08, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    let cap_path = dir.path().join("cap.png");
    write_png(&cap_path, &cap.image).unwrap();
    let rect = dir.path().join("rect.png");
    let quad = dir.path().join("quad.json");
    let o = run(&["locate", "-i", s(&cap_path), "-o", s(&rect), "--quad", s(&quad)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(quad.exists());
    assert_eq!(read_png(&rect).unwrap().dims(), (512, 512));
    let o = run(&["extract", "-i", s(&rect), "--key", KEY, "--truth", &payload_hex()]);
    assert!(json(&o)["ber"].as_f64().unwrap() <= 0.05);

    let blank = dir.path().join("blank.png");
    write_png(&blank, &RasterU8::filled(300, 300, 3, 40)).unwrap();
    let o = run(&["locate", "-i", s(&blank), "-o", s(&rect)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("segmentation"));
}

#[test]
fn anticrop_extract_and_recover() {
    let dir = TempDir::new().unwrap();
    let marked = embedded(&dir);
    let cropped = crop_edge(&read_png(&marked).unwrap(), Edge::Right, 0.3).unwrap();
    let cpath = dir.path().join("crop.png");
    write_png(&cpath, &cropped).unwrap();

    let o = run(&["extract", "-i", s(&cpath), "--key", KEY, "--anticrop", "--truth", &payload_hex()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o);
    assert!(r["ber"].as_f64().unwrap() <= 0.05);
    assert!(!r["crop"]["rects"].as_array().unwrap().is_empty());

    // Wrong size without --anticrop or --resize is a codec error.
    assert_eq!(code(&run(&["extract", "-i", s(&cpath), "--key", KEY])), 1);

    let subs = dir.path().join("subs");
    let o = run(&["recover", "-i", s(&cpath), "--out-dir", s(&subs)]);
    assert_eq!(code(&o), 0);
    let n = json(&o)["rects"].as_array().unwrap().len();
    assert_eq!(std::fs::read_dir(&subs).unwrap().count(), n);

    let tiny = dir.path().join("tiny.png");
    write_png(&tiny, &crop_edge(&cropped, Edge::Bottom, 0.6).unwrap()).unwrap();
    let o = run(&["recover", "-i", s(&tiny)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("NoSymmetryFound"));
}

#[test]
fn jnd_map_writes_preview_and_raw() {
    let dir = TempDir::new().unwrap();
    let src = dir.path().join("in.png");
    write_png(&src, &texture(4, 64, 64)).unwrap();
    let out = dir.path().join("jnd.png");
    let raw = dir.path().join("jnd.jndf");
    let o = run(&["jnd-map", "-i", s(&src), "-o", s(&out), "--raw", s(&raw)]);
    assert_eq!(code(&o), 0);
    assert!(json(&o)["min"].as_f64().unwrap() > 0.0);
    assert_eq!(read_png(&out).unwrap().dims(), (64, 64));
    assert_eq!(std::fs::metadata(&raw).unwrap().len(), 16 + 4 * 64 * 64);
}

#[test]
fn codec_library_matches_cli_embedding() {
    let dir = TempDir::new().unwrap();
    let marked = read_png(embedded(&dir)).unwrap();
    let key = u64::from_str_radix(KEY, 16).unwrap();
    let codec = Codec::new(key, EmbedConfig::default()).unwrap();
    assert_eq!(codec.extract(&marked).unwrap().bits.to_hex().unwrap(), payload_hex());
}

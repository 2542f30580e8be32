use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use ehdr_core::datagen::{read_sample, Manifest, TrainingSample, MANIFEST_FILE};
use ehdr_core::image::REC601;
use ehdr_core::io::{write_pfm, write_png};
use ehdr_core::train::{infer_sequence, Checkpoint, Framework};
use ehdr_core::{DType, Device, HdrImage, Image};

use crate::error::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct InferArgs {
    /// Trained checkpoint.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Sample directory inside a synthesized corpus.
    #[arg(long)]
    pub sample: PathBuf,
    /// Number of output frames spread over the exposure window.
    #[arg(short, long, default_value_t = 11)]
    pub k: usize,
    /// Output directory for `frame_###.pfm` and `frame_###.png`.
    #[arg(long, short)]
    pub out: PathBuf,
}

pub fn run(args: &InferArgs) -> CliResult {
    if !args.checkpoint.is_file() {
        return Err(CliError::user(format!("checkpoint {} not found", args.checkpoint.display())));
    }
    let sample = load_sample(&args.sample)?;
    let ckpt = Checkpoint::load(&args.checkpoint)?;
    let framework = Framework::from_checkpoint(&ckpt, DType::F32, &Device::Cpu)?;
    let frames = infer_sequence(&framework, &sample, args.k)?;
    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::user(format!("cannot create {}: {e}", args.out.display())))?;
    for (i, frame) in frames.iter().enumerate() {
        write_pfm(&args.out.join(format!("frame_{i:03}.pfm")), frame)?;
        write_png(&args.out.join(format!("frame_{i:03}.png")), &reinhard(frame))?;
    }
    println!("{} frames written to {}", frames.len(), args.out.display());
    Ok(())
}

/// Reads a sample, taking its exposure window from the corpus manifest in
/// the parent directory.
fn load_sample(dir: &Path) -> CliResult<TrainingSample> {
    if !dir.is_dir() {
        return Err(CliError::user(format!("sample directory {} not found", dir.display())));
    }
    let name = dir
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| CliError::user(format!("bad sample path {}", dir.display())))?;
    let manifest_path = dir.parent().unwrap_or(Path::new(".")).join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path)
        .map_err(|e| CliError::user(format!("cannot read {}: {e}", manifest_path.display())))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| CliError::user(format!("{}: {e}", manifest_path.display())))?;
    let entry = manifest
        .iter()
        .find(|e| e.path == name)
        .ok_or_else(|| CliError::user(format!("{name} is not listed in {}", manifest_path.display())))?;
    Ok(read_sample(dir, (entry.span[0], entry.span[1]))?)
}

/// Global Reinhard operator `x / (1 + x)` after scaling the image so its
/// log-average luminance maps to middle grey.
pub fn reinhard(hdr: &HdrImage) -> Image {
    const KEY: f64 = 0.18;
    const EPS: f64 = 1e-6;
    let (c, h, w) = hdr.shape();
    let n = (h * w) as f64;
    let mut log_sum = 0.0;
    for y in 0..h {
        for x in 0..w {
            let lum = if c == 3 {
                (0..3).map(|k| REC601[k] * hdr.get(k, y, x) as f64).sum()
            } else {
                hdr.get(0, y, x) as f64
            };
            log_sum += (EPS + lum.max(0.0)).ln();
        }
    }
    let scale = KEY / (log_sum / n).exp();
    hdr.map(|v| {
        let s = v.max(0.0) as f64 * scale;
        (s / (1.0 + s)) as f32
    })
}

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use ehdr_core::datagen::scene::procedural_sequences;
use ehdr_core::datagen::{synthesize_samples, write_corpus, SceneKind, SharpSequence};
use ehdr_core::events::Polarity;
use ehdr_core::io::read_image;

use crate::error::{CliError, CliResult};
use crate::ConfigArgs;

/// File in a sequence directory holding the frame rate in Hz.
pub const FRAMERATE_FILE: &str = "framerate.txt";

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SceneArg {
    Static,
    Dynamic,
}

impl From<SceneArg> for SceneKind {
    fn from(s: SceneArg) -> Self {
        match s {
            SceneArg::Static => SceneKind::Static,
            SceneArg::Dynamic => SceneKind::Dynamic,
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Sequence directory of PNG/PFM frames, or a directory of such
    /// directories. A `framerate.txt` beside the frames declares the rate;
    /// without it `sim.framerate` applies. Repeatable.
    #[arg(long, short, required_unless_present = "procedural")]
    pub input: Vec<PathBuf>,
    /// Generate this many procedural sequences instead of reading frames.
    #[arg(long, conflicts_with = "input")]
    pub procedural: Option<usize>,
    /// Side length of procedural frames.
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    /// Frames per procedural sequence.
    #[arg(long, default_value_t = 15)]
    pub frames: usize,
    /// Scene label attached to the sequences.
    #[arg(long, value_enum, default_value_t = SceneArg::Dynamic)]
    pub scene: SceneArg,
    /// Output corpus directory.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn run(args: &SynthArgs) -> CliResult {
    let cfg = args.config.resolve(None)?;
    let kind = SceneKind::from(args.scene);
    let seqs = match args.procedural {
        Some(0) => return Err(CliError::user("--procedural needs at least one sequence")),
        Some(n) => procedural_sequences(n, args.size, args.size, args.frames, kind, args.seed)?,
        None => {
            let mut seqs = Vec::new();
            for dir in &args.input {
                for seq_dir in sequence_dirs(dir)? {
                    seqs.push(read_sequence(&seq_dir, cfg.sim.framerate)?.with_scene(kind));
                }
            }
            seqs
        }
    };
    let records = synthesize_samples(&seqs, &cfg.sim, &cfg.corpus, args.seed)?;
    write_corpus(&args.out, &records)?;

    let (mut pos, mut neg) = (0usize, 0usize);
    for r in &records {
        pos += r.sample.events.count(Polarity::Positive);
        neg += r.sample.events.count(Polarity::Negative);
    }
    let n = records.len();
    println!("{n} samples written to {}", args.out.display());
    println!(
        "events: {} total ({pos} positive, {neg} negative), {:.1} per sample",
        pos + neg,
        (pos + neg) as f64 / n as f64
    );
    Ok(())
}

fn is_frame(path: &Path) -> bool {
    path.is_file()
        && matches!(
            path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
            Some("png" | "pfm")
        )
}

fn list_dir(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = fs::read_dir(dir)
        .map_err(|e| CliError::user(format!("cannot read input {}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
    paths.sort();
    Ok(paths)
}

/// `dir` itself if it holds frames, otherwise its subdirectories that do.
fn sequence_dirs(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = list_dir(dir)?;
    if entries.iter().any(|p| is_frame(p)) {
        return Ok(vec![dir.to_path_buf()]);
    }
    let mut out = Vec::new();
    for sub in entries.into_iter().filter(|p| p.is_dir()) {
        if list_dir(&sub)?.iter().any(|p| is_frame(p)) {
            out.push(sub);
        }
    }
    if out.is_empty() {
        return Err(CliError::user(format!("no PNG or PFM frames under {}", dir.display())));
    }
    Ok(out)
}

fn read_sequence(dir: &Path, default_rate: f64) -> CliResult<SharpSequence> {
    let rate_path = dir.join(FRAMERATE_FILE);
    let framerate = if rate_path.exists() {
        let text = fs::read_to_string(&rate_path)
            .map_err(|e| CliError::user(format!("cannot read {}: {e}", rate_path.display())))?;
        text.trim()
            .parse::<f64>()
            .map_err(|_| CliError::user(format!("{}: expected a frame rate in Hz", rate_path.display())))?
    } else {
        log::warn!("{} missing, using {default_rate} Hz", rate_path.display());
        default_rate
    };
    let frames = list_dir(dir)?
        .into_iter()
        .filter(|p| is_frame(p))
        .map(|p| read_image(&p))
        .collect::<ehdr_core::Result<Vec<_>>>()?;
    Ok(SharpSequence::at_framerate(frames, framerate, 0.0)?)
}

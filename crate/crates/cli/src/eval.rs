use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use ehdr_core::io::read_image;
use ehdr_core::metrics::{average_gradient, mu_tonemap, psnr_mu, spatial_frequency, ssim_mu, write_report, EvalRow};

use crate::error::{CliError, CliResult};
use crate::ConfigArgs;

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Directory of predicted frames. PFM files are used when present,
    /// otherwise PNG.
    #[arg(long)]
    pub pred: PathBuf,
    /// Directory of reference frames with matching file stems.
    #[arg(long = "ref")]
    pub reference: Option<PathBuf>,
    /// Output directory for `eval.csv` and `summary.json`.
    #[arg(long, short)]
    pub out: PathBuf,
}

/// Image files in `dir` keyed by file stem.
fn frames(dir: &Path) -> CliResult<BTreeMap<String, PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::user(format!("cannot read {}: {e}", dir.display())))?;
    let mut by_ext: BTreeMap<&str, BTreeMap<String, PathBuf>> = BTreeMap::new();
    for entry in entries.filter_map(|e| e.ok()) {
        let path = entry.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        let key = match ext.as_deref() {
            Some("pfm") => "pfm",
            Some("png") => "png",
            _ => continue,
        };
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            by_ext.entry(key).or_default().insert(stem.to_string(), path.clone());
        }
    }
    let found = by_ext.remove("pfm").or_else(|| by_ext.remove("png")).unwrap_or_default();
    if found.is_empty() {
        return Err(CliError::user(format!("no PFM or PNG frames in {}", dir.display())));
    }
    Ok(found)
}

pub fn run(args: &EvalArgs) -> CliResult {
    let cfg = args.config.resolve(None)?;
    let preds = frames(&args.pred)?;
    let refs = args.reference.as_deref().map(frames).transpose()?;
    if let Some(refs) = &refs {
        let orphans: Vec<String> = preds
            .keys()
            .filter(|k| !refs.contains_key(*k))
            .map(|k| format!("prediction without reference: {k}"))
            .chain(refs.keys().filter(|k| !preds.contains_key(*k)).map(|k| format!("reference without prediction: {k}")))
            .collect();
        if !orphans.is_empty() {
            return Err(CliError::user(format!("mismatched file sets:\n  {}", orphans.join("\n  "))));
        }
    }

    let mut rows = Vec::with_capacity(preds.len());
    for (id, path) in &preds {
        let pred = read_image(path)?;
        let mapped = mu_tonemap(&pred, &cfg.tonemap)?;
        let (psnr, ssim) = match &refs {
            Some(refs) => {
                let reference = read_image(&refs[id])?;
                (
                    Some(psnr_mu(&pred, &reference, &cfg.tonemap)?),
                    Some(ssim_mu(&pred, &reference, &cfg.tonemap)?),
                )
            }
            None => (None, None),
        };
        rows.push(EvalRow {
            sample_id: id.clone(),
            psnr_mu: psnr,
            ssim_mu: ssim,
            ag: average_gradient(&mapped),
            sf: spatial_frequency(&mapped),
        });
    }
    let summary = write_report(&args.out, &rows)?;
    println!("{} images evaluated", summary.count);
    if let (Some(p), Some(s)) = (summary.psnr_mu, summary.ssim_mu) {
        println!("PSNR-mu {p:.3} dB, SSIM-mu {s:.4}");
    }
    println!("AG {:.5}, SF {:.5}", summary.ag, summary.sf);
    Ok(())
}

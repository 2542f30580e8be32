use std::path::PathBuf;

use clap::Args;
use ehdr_core::datagen::{load_corpus, Corpus, SceneKind, Split};
use ehdr_core::train::{
    pretrain_stage, train_full, Checkpoint, PreparedSample, Stage, StepRecord, Trainer, FINAL_CHECKPOINT,
    LOG_FILE,
};

use crate::error::{CliError, CliResult};
use crate::ConfigArgs;

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Corpus directory or manifest file.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Training stage; defaults to `train.stage`.
    #[arg(long)]
    pub stage: Option<Stage>,
    /// Checkpoint to start the full stage from.
    #[arg(long, conflicts_with = "resume")]
    pub init: Option<PathBuf>,
    /// Checkpoint to resume; training continues at its recorded epoch.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Seed; defaults to `train.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for checkpoints and the loss log.
    #[arg(long, short)]
    pub out: PathBuf,
}

fn load_checkpoint(path: &PathBuf) -> CliResult<Checkpoint> {
    if !path.is_file() {
        return Err(CliError::user(format!("checkpoint {} not found", path.display())));
    }
    Ok(Checkpoint::load(path)?)
}

pub fn run(args: &TrainArgs) -> CliResult {
    let resume = args.resume.as_ref().map(load_checkpoint).transpose()?;
    let init = args.init.as_ref().map(load_checkpoint).transpose()?;
    let mut overrides = args.config.overrides.clone();
    if let Some(stage) = args.stage.or(resume.as_ref().map(|c| c.stage)) {
        overrides.push(format!("train.stage=\"{stage}\""));
    }
    if let Some(seed) = args.seed {
        overrides.push(format!("train.seed={seed}"));
    }
    let cfg = ConfigArgs {
        config: args.config.config.clone(),
        overrides,
    }
    .resolve(resume.as_ref().map(|c| &c.config))?;

    let manifest = if args.corpus.is_dir() {
        args.corpus.join(ehdr_core::datagen::MANIFEST_FILE)
    } else {
        args.corpus.clone()
    };
    if !manifest.is_file() {
        return Err(CliError::user(format!("manifest {} not found", manifest.display())));
    }
    let mut corpus = load_corpus(&manifest)?.split(Split::Train);
    if cfg.train.stage == Stage::Pretrain {
        corpus = corpus.scene(SceneKind::Static);
    }
    if corpus.is_empty() {
        return Err(CliError::user(format!(
            "no training samples for stage {} in {}",
            cfg.train.stage,
            manifest.display()
        )));
    }
    log::info!("stage {} on {} samples", cfg.train.stage, corpus.len());

    let out = Some(args.out.as_path());
    let (trainer, records) = match (&resume, &init, cfg.train.stage) {
        (Some(ckpt), _, _) => resume_run(ckpt, &cfg, &corpus, &args.out)?,
        (None, _, Stage::Pretrain) => pretrain_stage(&corpus, &cfg, out)?,
        (None, Some(ckpt), Stage::Full) => train_full(&corpus, ckpt, &cfg, out)?,
        (None, None, Stage::Full) => {
            return Err(CliError::user("stage full needs --init <checkpoint> or --resume <checkpoint>"))
        }
    };
    print_summary(&trainer, &records, &args.out);
    Ok(())
}

fn resume_run(
    ckpt: &Checkpoint,
    cfg: &ehdr_core::config::Config,
    corpus: &Corpus,
    out: &std::path::Path,
) -> CliResult<(Trainer, Vec<StepRecord>)> {
    let data = corpus
        .samples()
        .map(|s| PreparedSample::new(s, cfg.model.temporal_bins))
        .collect::<ehdr_core::Result<Vec<_>>>()?;
    let mut trainer = Trainer::resume(ckpt, cfg)?;
    log::info!("resuming at epoch {} step {}", trainer.epoch(), trainer.step());
    let records = trainer.run(&data, Some(out))?;
    Ok((trainer, records))
}

fn print_summary(trainer: &Trainer, records: &[StepRecord], out: &std::path::Path) {
    println!(
        "stage {} finished at epoch {} step {} ({} steps this run)",
        trainer.stage(),
        trainer.epoch(),
        trainer.step(),
        records.len()
    );
    if let (Some(first), Some(last)) = (records.first(), records.last()) {
        println!("total loss {:.6} -> {:.6}", first.losses.total, last.losses.total);
    }
    println!(
        "checkpoint {}, log {}",
        out.join(FINAL_CHECKPOINT).display(),
        out.join(LOG_FILE).display()
    );
}

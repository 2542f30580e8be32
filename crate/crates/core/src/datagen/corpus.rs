use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::blur::{synthesize_blur, BLUR_WINDOW};
use super::exposure::{decompose_exposure, Crf, ExposureTag};
use super::sequence::{SceneKind, SharpSequence};
use super::simulator::{simulate_events, SimulatorConfig};
use crate::error::{Error, Result};
use crate::events::{read_events, write_events, EventStream};
use crate::image::{HdrImage, LdrImage};
use crate::io::{read_pfm, read_png, write_pfm, write_png};

/// One self-supervised training example: a blurry frame, its concurrent
/// events and a single sharp LDR observation inside the exposure window.
#[derive(Debug, Clone)]
pub struct TrainingSample {
    pub blurry_ldr: LdrImage,
    pub events: EventStream,
    pub obs_time: f64,
    pub obs_image: LdrImage,
    pub obs_ev: ExposureTag,
    /// Synthetic ground truth at `obs_time`. Evaluation only.
    pub eval_hdr: Option<HdrImage>,
}

impl TrainingSample {
    pub fn validate(&self) -> Result<()> {
        let (t0, t1) = self.events.span();
        if !(self.obs_time >= t0 && self.obs_time <= t1) {
            return Err(Error::invalid(format!(
                "observation time {} outside event span [{t0}, {t1}]",
                self.obs_time
            )));
        }
        if self.blurry_ldr.channels() != 3 {
            return Err(Error::invalid("blurry frame must be RGB"));
        }
        self.blurry_ldr.ensure_same_shape(&self.obs_image)?;
        if (self.blurry_ldr.height(), self.blurry_ldr.width()) != self.events.resolution() {
            return Err(Error::shape(
                (self.blurry_ldr.height(), self.blurry_ldr.width()),
                self.events.resolution(),
            ));
        }
        if let Some(gt) = &self.eval_hdr {
            self.blurry_ldr.ensure_same_shape(gt)?;
        }
        Ok(())
    }

    /// `(height, width)`.
    pub fn resolution(&self) -> (usize, usize) {
        self.events.resolution()
    }

    pub fn span(&self) -> (f64, f64) {
        self.events.span()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// A sample together with its corpus bookkeeping.
#[derive(Debug, Clone)]
pub struct SampleRecord {
    pub id: String,
    pub split: Split,
    pub scene: SceneKind,
    pub sample: TrainingSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub crf: Crf,
    /// Frame step between consecutive blur windows.
    pub stride: usize,
    /// Fraction of samples assigned to the test split.
    pub test_fraction: f64,
    /// Store the sharp HDR frame at the observation time.
    pub store_eval_hdr: bool,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            crf: Crf::Linear,
            stride: 1,
            test_fraction: 1.0 / 6.0,
            store_eval_hdr: true,
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 {
            return Err(Error::config("corpus stride must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.test_fraction) {
            return Err(Error::config("test_fraction must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Cuts every sequence into 13-frame windows and synthesizes one sample per
/// window. Observation exposures cycle `-2, +0, +2` over the global sample
/// index; each sample draws its observation frame from an RNG keyed on
/// `(seed, index)`, so the result does not depend on processing order.
pub fn synthesize_samples(
    seqs: &[SharpSequence],
    sim: &SimulatorConfig,
    cfg: &CorpusConfig,
    seed: u64,
) -> Result<Vec<SampleRecord>> {
    cfg.validate()?;
    sim.validate()?;
    if seqs.is_empty() {
        return Err(Error::invalid("no input sequences"));
    }
    let mut jobs = Vec::new();
    for (si, seq) in seqs.iter().enumerate() {
        if seq.len() < BLUR_WINDOW {
            return Err(Error::invalid(format!(
                "sequence {si} has {} frames, at least {BLUR_WINDOW} are needed",
                seq.len()
            )));
        }
        let mut start = 0;
        while start + BLUR_WINDOW <= seq.len() {
            jobs.push((si, start));
            start += cfg.stride;
        }
    }

    let mut records = Vec::with_capacity(jobs.len());
    for (index, &(si, start)) in jobs.iter().enumerate() {
        let window = seqs[si].window(start, BLUR_WINDOW)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        let obs_frame = rng.random_range(0..BLUR_WINDOW);
        let obs_ev = ExposureTag::from_index(index % 3).expect("index mod 3");
        let sharp = &window.frames()[obs_frame];
        let sample = TrainingSample {
            blurry_ldr: synthesize_blur(window.frames(), cfg.crf)?,
            events: simulate_events(&window, sim)?,
            obs_time: window.timestamps()[obs_frame],
            obs_image: decompose_exposure(sharp, obs_ev, cfg.crf)?,
            obs_ev,
            eval_hdr: cfg.store_eval_hdr.then(|| sharp.clone()),
        };
        sample.validate()?;
        records.push(SampleRecord {
            id: format!("sample_{index:05}"),
            split: Split::Train,
            scene: window.scene(),
            sample,
        });
    }

    let n_test = (records.len() as f64 * cfg.test_fraction).round() as usize;
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ SPLIT_SALT));
    for &i in &order[..n_test] {
        records[i].split = Split::Test;
    }
    Ok(records)
}

const SPLIT_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Manifest entry describing one sample directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    /// Sample directory relative to the manifest.
    pub path: String,
    pub split: Split,
    pub scene: SceneKind,
    /// Exposure window `[t0, t1]` in seconds.
    pub span: [f64; 2],
}

/// JSON list of sample entries.
pub type Manifest = Vec<ManifestEntry>;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes sample directories and `manifest.json` under `out`.
pub fn write_corpus(out: &Path, records: &[SampleRecord]) -> Result<Manifest> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut manifest = Vec::with_capacity(records.len());
    for rec in records {
        let dir = out.join(&rec.id);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let s = &rec.sample;
        write_png(&dir.join("blur.png"), &s.blurry_ldr)?;
        write_events(&dir.join("events.bin"), &s.events)?;
        write_png(&dir.join("obs.png"), &s.obs_image)?;
        let meta = dir.join("obs.meta");
        fs::write(&meta, format!("{} {}\n", s.obs_time, s.obs_ev)).map_err(|e| Error::io(&meta, e))?;
        if let Some(gt) = &s.eval_hdr {
            write_pfm(&dir.join("gt_hdr.pfm"), gt)?;
        }
        let (t0, t1) = s.span();
        manifest.push(ManifestEntry {
            path: rec.id.clone(),
            split: rec.split,
            scene: rec.scene,
            span: [t0, t1],
        });
    }
    let path = out.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// Synthesizes samples from `seqs` and materializes them under `out`.
pub fn build_corpus(
    seqs: &[SharpSequence],
    sim: &SimulatorConfig,
    cfg: &CorpusConfig,
    out: &Path,
    seed: u64,
) -> Result<Manifest> {
    let records = synthesize_samples(seqs, sim, cfg, seed)?;
    write_corpus(out, &records)
}

/// Reads one sample directory written by [`write_corpus`].
pub fn read_sample(dir: &Path, span: (f64, f64)) -> Result<TrainingSample> {
    let meta_path = dir.join("obs.meta");
    let meta = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let mut parts = meta.split_whitespace();
    let obs_time: f64 = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::format(&meta_path, "missing observation timestamp"))?;
    let obs_ev: ExposureTag = parts
        .next()
        .ok_or_else(|| Error::format(&meta_path, "missing exposure tag"))?
        .parse()?;
    let gt = dir.join("gt_hdr.pfm");
    let sample = TrainingSample {
        blurry_ldr: read_png(&dir.join("blur.png"))?,
        events: read_events(&dir.join("events.bin"), span)?,
        obs_time,
        obs_image: read_png(&dir.join("obs.png"))?,
        obs_ev,
        eval_hdr: if gt.exists() { Some(read_pfm(&gt)?) } else { None },
    };
    sample.validate()?;
    Ok(sample)
}

/// An in-memory corpus.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub records: Vec<SampleRecord>,
}

impl Corpus {
    pub fn new(records: Vec<SampleRecord>) -> Self {
        Self { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn split(&self, split: Split) -> Corpus {
        Corpus::new(self.records.iter().filter(|r| r.split == split).cloned().collect())
    }

    pub fn scene(&self, scene: SceneKind) -> Corpus {
        Corpus::new(self.records.iter().filter(|r| r.scene == scene).cloned().collect())
    }

    pub fn samples(&self) -> impl Iterator<Item = &TrainingSample> {
        self.records.iter().map(|r| &r.sample)
    }
}

/// Loads every sample listed in a manifest file (or a corpus directory
/// containing `manifest.json`).
pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let manifest_path: PathBuf = if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    };
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| Error::format(&manifest_path, e.to_string()))?;
    let root = manifest_path.parent().unwrap_or(Path::new("."));
    let records = manifest
        .iter()
        .map(|entry| {
            Ok(SampleRecord {
                id: entry.path.clone(),
                split: entry.split,
                scene: entry.scene,
                sample: read_sample(&root.join(&entry.path), (entry.span[0], entry.span[1]))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Corpus::new(records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::scene::{generate, SceneParams};

    fn seq(frames: usize, seed: u64) -> SharpSequence {
        generate(&SceneParams::new(8, 8, frames, SceneKind::Static, seed)).unwrap()
    }

    fn no_split() -> CorpusConfig {
        CorpusConfig {
            test_fraction: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn single_window() {
        let recs = synthesize_samples(&[seq(13, 1)], &SimulatorConfig::default(), &no_split(), 0).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].sample.obs_ev, ExposureTag::Minus2);
    }

    #[test]
    fn fifteen_frames_give_three_cycled_samples() {
        let recs = synthesize_samples(&[seq(15, 1)], &SimulatorConfig::default(), &no_split(), 0).unwrap();
        let tags: Vec<_> = recs.iter().map(|r| r.sample.obs_ev).collect();
        assert_eq!(tags, vec![ExposureTag::Minus2, ExposureTag::Plus0, ExposureTag::Plus2]);
        for r in &recs {
            let (t0, t1) = r.sample.span();
            assert!(r.sample.obs_time >= t0 && r.sample.obs_time <= t1);
            assert!((t1 - t0 - 12.0 / 150.0).abs() < 1e-12);
        }
    }

    #[test]
    fn short_or_missing_sequences_fail() {
        let sim = SimulatorConfig::default();
        assert!(synthesize_samples(&[seq(12, 1)], &sim, &no_split(), 0).is_err());
        assert!(synthesize_samples(&[], &sim, &no_split(), 0).is_err());
    }

    #[test]
    fn manifests_are_byte_identical_and_reload() {
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        let cfg = CorpusConfig {
            test_fraction: 0.5,
            ..Default::default()
        };
        for d in &dirs {
            build_corpus(&[seq(16, 4)], &SimulatorConfig::default(), &cfg, d.path(), 11).unwrap();
        }
        let read = |d: &tempfile::TempDir| fs::read(d.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(read(&dirs[0]), read(&dirs[1]));
        let corpus = load_corpus(dirs[0].path()).unwrap();
        assert_eq!(corpus.len(), 4);
        assert_eq!(corpus.split(Split::Test).len(), 2);
        let s = &corpus.records[1].sample;
        assert_eq!(s.obs_ev, ExposureTag::Plus0);
        assert!(s.eval_hdr.is_some());
        assert!(!s.events.is_empty());
    }

    #[test]
    fn unwritable_output_fails() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, b"x").unwrap();
        let err = build_corpus(&[seq(13, 1)], &SimulatorConfig::default(), &no_split(), &blocker.join("out"), 0);
        assert!(matches!(err, Err(Error::Io { .. })));
    }
}

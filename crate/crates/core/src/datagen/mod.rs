//! Synthetic corpus generation: event simulation, blur synthesis and
//! multi-exposure decomposition of sharp HDR frame sequences.

mod blur;
mod corpus;
mod exposure;
pub mod scene;
mod sequence;
mod simulator;

pub use blur::{blur_linear_mean, synthesize_blur, BLUR_WINDOW};
pub use corpus::{
    build_corpus, load_corpus, read_sample, synthesize_samples, write_corpus, Corpus, CorpusConfig,
    Manifest, ManifestEntry, SampleRecord, Split, TrainingSample, MANIFEST_FILE,
};
pub use exposure::{decompose_exposure, Crf, ExposureStack, ExposureTag};
pub use sequence::{SceneKind, SharpSequence};
pub use simulator::{simulate_events, SimulatorConfig};

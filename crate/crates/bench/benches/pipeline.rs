use criterion::{black_box, criterion_group, criterion_main, Criterion};
use ehdr_core::config::Config;
use ehdr_core::datagen::scene::{generate, SceneParams};
use ehdr_core::datagen::{decompose_exposure, simulate_events, Crf, ExposureStack, ExposureTag, SceneKind};
use ehdr_core::events::voxelize;
use ehdr_core::losses::{fuse_stack, FusionMapping};
use ehdr_core::model::{Ebl2Sh, ModelConfig};
use ehdr_core::{DType, Device};

fn pipeline(c: &mut Criterion) {
    let seq = generate(&SceneParams::new(64, 64, 13, SceneKind::Dynamic, 1)).unwrap();
    let sim = Config::default().sim;
    c.bench_function("simulate_events 64x64x13", |b| {
        b.iter(|| simulate_events(black_box(&seq), &sim).unwrap())
    });

    let events = simulate_events(&seq, &sim).unwrap();
    let span = events.span();
    c.bench_function("voxelize m=6", |b| b.iter(|| voxelize(black_box(&events), 6, span).unwrap()));

    let hdr = &seq.frames()[6];
    let exp = |tag| decompose_exposure(hdr, tag, Crf::Linear).unwrap();
    let stack = ExposureStack {
        minus2: exp(ExposureTag::Minus2),
        plus0: exp(ExposureTag::Plus0),
        plus2: exp(ExposureTag::Plus2),
    };
    let mapping = FusionMapping::default();
    c.bench_function("fuse_stack 64x64", |b| b.iter(|| fuse_stack(black_box(&stack), &mapping).unwrap()));

    let model = Ebl2Sh::new(&ModelConfig::default(), DType::F32, &Device::Cpu, 0).unwrap();
    let ldr = exp(ExposureTag::Plus0);
    let t = 0.5 * (span.0 + span.1);
    let mut group = c.benchmark_group("ebl2sh");
    group.sample_size(10);
    group.bench_function("reconstruct 64x64", |b| {
        b.iter(|| model.reconstruct(black_box(&ldr), &events, t).unwrap())
    });
    group.finish();
}

criterion_group!(benches, pipeline);
criterion_main!(benches);

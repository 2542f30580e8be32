//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Pass criterion numbers as arguments to run
//! a subset, e.g. `cargo test --test acceptance -- 1 6`.

use std::collections::HashMap;
use std::io::Write;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use candle_core::{DType, Device, Tensor};
use ehdr_core::config::Config;
use ehdr_core::datagen::scene::procedural_sequences;
use ehdr_core::datagen::{
    decompose_exposure, simulate_events, synthesize_samples, Corpus, CorpusConfig, Crf, ExposureStack,
    ExposureTag, SceneKind, SharpSequence, Split, TrainingSample,
};
use ehdr_core::events::{voxelize, Event, EventStream, Polarity};
use ehdr_core::image::{Image, REC601};
use ehdr_core::losses::{
    brightness_convert, fuse_reference, fuse_stack, fusion_weights, loss_hh, loss_hl, loss_lh, loss_ll, FusionMapping,
};
use ehdr_core::metrics::psnr_mu;
use ehdr_core::train::{
    infer_sequence, lr_schedule, pretrain_stage, train_full, Batch, Framework, PreparedSample, StepRecord,
    TrainConfig, LOG_FILE,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Criterion {
    id: usize,
    name: &'static str,
    budget: Duration,
    run: fn() -> Result<String, String>,
}

fn check(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn scalar(t: &Tensor) -> f64 {
    t.to_dtype(DType::F64).unwrap().flatten_all().unwrap().to_vec1::<f64>().unwrap()[0]
}

fn gain(ev: ExposureTag) -> f64 {
    match ev {
        ExposureTag::Minus2 => 1.0,
        ExposureTag::Plus0 => 4.0,
        ExposureTag::Plus2 => 16.0,
    }
}

/// Scalar weight of one exposure, written out per tag.
fn oracle_weight(s: f64, ev: ExposureTag) -> f64 {
    let z = 2.0 * s - 1.0;
    let lam = match ev {
        ExposureTag::Minus2 => -z,
        ExposureTag::Plus0 => z.abs(),
        ExposureTag::Plus2 => z,
    };
    1.0 - lam.max(0.0)
}

fn oracle_fuse(s: [f64; 3]) -> f64 {
    let evs = [ExposureTag::Minus2, ExposureTag::Plus0, ExposureTag::Plus2];
    let (mut num, mut den) = (0.0, 0.0);
    for (v, ev) in s.into_iter().zip(evs) {
        let w = oracle_weight(v, ev);
        num += w * v / gain(ev);
        den += w;
    }
    num / den.max(1e-6)
}

fn c1_fusion_oracle() -> Result<String, String> {
    const N: usize = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut draw = || -> f64 {
        match rng.random_range(0..10) {
            0 => 0.0,
            1 => 1.0,
            2 => 0.5,
            _ => rng.random(),
        }
    };
    let planes: [Vec<f64>; 3] = std::array::from_fn(|_| (0..N).map(|_| draw()).collect());
    let dev = Device::Cpu;
    let tensors: Vec<Tensor> = planes
        .iter()
        .map(|p| Tensor::from_slice(p, (1, 1, 1, N), &dev).unwrap())
        .collect();
    let fused = fuse_reference([&tensors[0], &tensors[1], &tensors[2]], &FusionMapping::default())
        .map_err(|e| e.to_string())?
        .flatten_all()
        .unwrap()
        .to_vec1::<f64>()
        .unwrap();
    let max_err = (0..N)
        .map(|i| (fused[i] - oracle_fuse([planes[0][i], planes[1][i], planes[2][i]])).abs())
        .fold(0.0, f64::max);
    check(max_err < 1e-6, format!("max |Δ| = {max_err:.3e} over {N} pixels"))
}

fn c2_unclipped_fixed_point() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let hdr = Image::from_fn(3, 128, 128, |_, _, _| rng.random_range(0.0..=1.0f32 / 16.0));
    let exp = |ev| decompose_exposure(&hdr, ev, Crf::Linear).unwrap();
    let stack = ExposureStack {
        minus2: exp(ExposureTag::Minus2),
        plus0: exp(ExposureTag::Plus0),
        plus2: exp(ExposureTag::Plus2),
    };
    let fused = fuse_stack(&stack, &FusionMapping::default()).map_err(|e| e.to_string())?;
    let max_err = fused
        .data()
        .iter()
        .zip(hdr.data())
        .map(|(a, b)| (a - b).abs() as f64)
        .fold(0.0, f64::max);
    check(max_err < 1e-6, format!("max |M - x| = {max_err:.3e}"))
}

/// Per-pixel event list from a sub-stepped scan of the piecewise-linear log
/// signal. A level counts as reached at a frame sample when it is within
/// `tol` of it, and exactly elsewhere.
fn oracle_events(logs: &[f64], ts: &[f64], c: f64, tol: f64, substeps: usize) -> Vec<(f64, i8)> {
    let segments = logs.len() - 1;
    let per_segment = substeps / segments;
    let value = |k: usize, j: usize| -> f64 {
        if j == per_segment {
            logs[k + 1]
        } else {
            logs[k] + (logs[k + 1] - logs[k]) * j as f64 / per_segment as f64
        }
    };
    let time = |k: usize, j: usize| ts[k] + (ts[k + 1] - ts[k]) * j as f64 / per_segment as f64;
    let mut reference = logs[0];
    let mut out = Vec::new();
    for k in 0..segments {
        for j in 0..per_segment {
            let (v0, v1) = (value(k, j), value(k, j + 1));
            let (u0, u1) = (time(k, j), time(k, j + 1));
            let slack = if j + 1 == per_segment { tol } else { 0.0 };
            let at = |level: f64| u0 + ((level - v0) / (v1 - v0)).clamp(0.0, 1.0) * (u1 - u0);
            while v1 > v0 && v1 >= reference + c - slack {
                reference += c;
                out.push((at(reference), 1));
            }
            while v1 < v0 && v1 <= reference - c + slack {
                reference -= c;
                out.push((at(reference), -1));
            }
        }
    }
    out
}

fn c3_simulator_oracle() -> Result<String, String> {
    const SIGNALS: usize = 50;
    const SIDE: usize = 4;
    const FRAMES: usize = 5;
    const SUBSTEPS: usize = 10_000;
    let cfg = Config::default().sim;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut total, mut worst_dt) = (0usize, 0.0f64);
    for signal in 0..SIGNALS {
        let frames: Vec<Image> = (0..FRAMES)
            .map(|_| {
                let plane: Vec<f32> = (0..SIDE * SIDE)
                    .map(|_| rng.random_range((0.02f64).ln()..(1.5f64).ln()).exp() as f32)
                    .collect();
                Image::from_fn(3, SIDE, SIDE, |_, y, x| plane[y * SIDE + x])
            })
            .collect();
        let seq = SharpSequence::at_framerate(frames, cfg.framerate, 0.0).map_err(|e| e.to_string())?;
        let stream = simulate_events(&seq, &cfg).map_err(|e| e.to_string())?;
        let mut got: HashMap<(usize, usize), Vec<(f64, i8)>> = HashMap::new();
        for e in stream.events() {
            got.entry((e.y as usize, e.x as usize)).or_default().push((e.t, e.p.sign()));
        }
        for y in 0..SIDE {
            for x in 0..SIDE {
                let logs: Vec<f64> = seq
                    .frames()
                    .iter()
                    .map(|f| {
                        let lum: f64 = (0..3).map(|ch| REC601[ch] * f.get(ch, y, x) as f64).sum();
                        lum.max(cfg.log_eps).ln()
                    })
                    .collect();
                let want = oracle_events(&logs, seq.timestamps(), cfg.contrast_threshold, 1e-6, SUBSTEPS);
                let have = got.remove(&(y, x)).unwrap_or_default();
                if want.len() != have.len() {
                    return Err(format!(
                        "signal {signal} pixel ({y},{x}): {} events, oracle {}",
                        have.len(),
                        want.len()
                    ));
                }
                for (a, b) in have.iter().zip(&want) {
                    if a.1 != b.1 {
                        return Err(format!("signal {signal} pixel ({y},{x}): polarity mismatch"));
                    }
                    worst_dt = worst_dt.max((a.0 - b.0).abs());
                }
                total += want.len();
            }
        }
    }
    check(
        worst_dt < 1e-9,
        format!("{total} events matched, max |Δt| = {worst_dt:.3e} s"),
    )
}

fn c4_voxel_conservation() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (h, w) = (rng.random_range(1..12), rng.random_range(1..12));
        let t0 = rng.random_range(0.0..1.0);
        let span = (t0, t0 + rng.random_range(1e-3..0.1));
        let n = rng.random_range(0..400);
        let mut events: Vec<Event> = (0..n)
            .map(|i| Event {
                x: rng.random_range(0..w) as u16,
                y: rng.random_range(0..h) as u16,
                t: match i % 17 {
                    0 => span.0,
                    1 => span.1,
                    _ => rng.random_range(span.0..=span.1),
                },
                p: if rng.random_bool(0.5) { Polarity::Positive } else { Polarity::Negative },
            })
            .collect();
        events.sort_by(|a, b| a.t.total_cmp(&b.t));
        let stream = EventStream::new(events, h, w, span).map_err(|e| e.to_string())?;
        for m in [1, 2, 6, 16] {
            let grid = voxelize(&stream, m, span).map_err(|e| e.to_string())?;
            for p in [Polarity::Positive, Polarity::Negative] {
                worst = worst.max((grid.polarity_sum(p) - stream.count(p) as f64).abs());
            }
        }
    }
    check(worst < 1e-6, format!("max |Σgrid - count| = {worst:.3e}"))
}

fn sample_corpus(static_n: usize, dynamic_n: usize, side: usize, seed: u64, test_fraction: f64) -> Corpus {
    let mut seqs = procedural_sequences(static_n, side, side, 13, SceneKind::Static, seed).unwrap();
    seqs.extend(procedural_sequences(dynamic_n, side, side, 13, SceneKind::Dynamic, seed + 1).unwrap());
    let cfg = CorpusConfig {
        test_fraction,
        ..CorpusConfig::default()
    };
    Corpus::new(synthesize_samples(&seqs, &Config::default().sim, &cfg, seed).unwrap())
}

/// Total loss with the stop-gradient targets (the fusion reference in L_LH
/// and the composed HDR in L_HH) held at `targets`. Its derivative is what
/// backpropagation through the detached targets computes.
fn surrogate_loss(fw: &Framework, batch: &Batch, targets: Option<&(Tensor, Tensor)>) -> (f64, (Tensor, Tensor)) {
    let out = fw.forward(batch).unwrap();
    let stack = [&out.stack[0], &out.stack[1], &out.stack[2]];
    let cfg = &fw.config;
    let fused = fuse_reference(stack, &cfg.fusion).unwrap();
    let own = (fused, out.composed.hdr.detach());
    let (fused_t, composed_t) = targets.unwrap_or(&own);
    let [l1, l2, l3, l4] = cfg.loss.lambdas();
    let ctx = &fw.combo;
    let total = l1 * scalar(&loss_hl(stack, &batch.obs, &batch.obs_ev, ctx).unwrap())
        + l2 * scalar(&loss_ll(stack).unwrap())
        + l3 * scalar(&loss_lh(fused_t, &out.composed.hdr, ctx).unwrap())
        + l4 * scalar(&loss_hh(composed_t, &out.main.hdr_pred, ctx).unwrap());
    (total, (own.0.detach(), own.1))
}

fn c5_gradient_check() -> Result<String, String> {
    const PARAMS: usize = 8;
    const H: f64 = 1e-6;
    let cfg = Config::layered(None, &["loss.w_gan=0".to_string()]).map_err(|e| e.to_string())?;
    let dev = Device::Cpu;
    let corpus = sample_corpus(1, 1, 16, 5, 0.0);
    let prepared: Vec<PreparedSample> = corpus
        .samples()
        .map(|s| PreparedSample::new(s, cfg.model.temporal_bins).unwrap())
        .collect();
    let refs: Vec<&PreparedSample> = prepared.iter().collect();
    let batch = Batch::uncropped(&refs, DType::F64, &dev).map_err(|e| e.to_string())?;
    let fw = Framework::new(&cfg, DType::F64, &dev, 5).map_err(|e| e.to_string())?;
    let out = fw.forward(&batch).map_err(|e| e.to_string())?;
    let (loss, _) = fw.loss(&batch, &out).map_err(|e| e.to_string())?;
    let grads = loss.backward().map_err(|e| e.to_string())?;
    let (base, targets) = surrogate_loss(&fw, &batch, None);
    if (base - scalar(&loss)).abs() > 1e-12 {
        return Err(format!("surrogate {base} differs from total loss {}", scalar(&loss)));
    }

    let params = fw.generator_params(true);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut report = Vec::new();
    for _ in 0..PARAMS {
        let (name, var) = &params[rng.random_range(0..params.len())];
        let original = var.as_tensor().flatten_all().unwrap().to_vec1::<f64>().unwrap();
        let idx = rng.random_range(0..original.len());
        let analytic = grads
            .get(var)
            .map(|g| g.flatten_all().unwrap().to_vec1::<f64>().unwrap()[idx])
            .unwrap_or(0.0);
        let eval_at = |delta: f64| -> f64 {
            let mut v = original.clone();
            v[idx] += delta;
            var.set(&Tensor::from_vec(v, var.shape(), &dev).unwrap()).unwrap();
            surrogate_loss(&fw, &batch, Some(&targets)).0
        };
        let numeric = (eval_at(H) - eval_at(-H)) / (2.0 * H);
        var.set(&Tensor::from_vec(original, var.shape(), &dev).unwrap()).unwrap();
        let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6);
        worst = worst.max(rel);
        report.push(format!("{name}[{idx}] {analytic:.3e}/{numeric:.3e}"));
    }
    check(
        worst < 1e-3,
        format!("max rel err {worst:.3e}; analytic/numeric: {}", report.join(", ")),
    )
}

fn c6_loss_arithmetic() -> Result<String, String> {
    let dev = Device::Cpu;
    let full = |v: f64| Tensor::full(v, (1, 3, 4, 4), &dev).unwrap();
    let mapping = FusionMapping::default();
    let mut errors = Vec::new();
    let mut expect = |what: &str, got: f64, want: f64| {
        if (got - want).abs() >= 1e-6 {
            errors.push(format!("{what}: {got} != {want}"));
        }
    };
    expect("L_LL constant stack", scalar(&loss_ll([&full(0.1), &full(0.5), &full(1.0)]).unwrap()), 0.1);
    expect("H(0.2)", scalar(&brightness_convert(&full(0.2)).unwrap()), 0.8);
    expect(
        "M(0.5, 0.5, 0.5)",
        scalar(&fuse_reference([&full(0.5), &full(0.5), &full(0.5)], &mapping).unwrap()),
        0.21875,
    );
    for (ev, v) in [
        (ExposureTag::Minus2, 0.0),
        (ExposureTag::Plus0, 0.0),
        (ExposureTag::Plus0, 1.0),
        (ExposureTag::Plus2, 1.0),
    ] {
        expect(&format!("Φ_{ev}({v})"), scalar(&fusion_weights(&full(v), ev, &mapping).unwrap()), 0.0);
    }
    if errors.is_empty() {
        Ok("L_LL = 0.1, H(0.2) = 0.8, M = 0.21875, saturated Φ = 0".into())
    } else {
        Err(errors.join("; "))
    }
}

fn c7_schedule() -> Result<String, String> {
    let cfg = TrainConfig::default();
    let lr = |e| lr_schedule(e, &cfg).unwrap();
    let values = [lr(0), lr(99), lr(100), lr(150), lr(200)];
    check(
        values == [2e-4, 2e-4, 2e-4, 1e-4, 0.0],
        format!("lr(0, 99, 100, 150, 200) = {values:?}"),
    )
}

fn mean_total(records: &[StepRecord]) -> f64 {
    records.iter().map(|r| r.losses.total).sum::<f64>() / records.len() as f64
}

fn drc_params(fw: &Framework) -> Vec<(String, Vec<f32>)> {
    fw.named_tensors()
        .into_iter()
        .filter(|(k, _)| k.starts_with("drc."))
        .map(|(k, t)| (k, t.flatten_all().unwrap().to_vec1::<f32>().unwrap()))
        .collect()
}

fn c8_toy_convergence() -> Result<String, String> {
    const STEPS: u64 = 500;
    const WINDOW: usize = 25;
    let pre = sample_corpus(16, 0, 64, 11, 0.0);
    let mixed = sample_corpus(20, 20, 64, 21, 0.2);
    let (train, test) = (mixed.split(Split::Train), mixed.split(Split::Test));
    if pre.len() != 16 || train.len() != 32 || test.len() != 8 {
        return Err(format!("corpus sizes {} / {} / {}", pre.len(), train.len(), test.len()));
    }
    let overrides: Vec<String> = [
        "model.base_channels=8",
        "model.drd_blocks=1",
        "train.batch_size=2",
        "train.crop=32",
        "train.epochs=1000",
        "train.decay_start_epoch=999",
        "train.disc_channels=8",
    ]
    .iter()
    .map(|s| s.to_string())
    .chain([format!("train.max_steps={STEPS}")])
    .collect();
    let cfg = Config::layered(None, &overrides).map_err(|e| e.to_string())?;

    let (pretrained, records) = pretrain_stage(&pre, &cfg, None).map_err(|e| e.to_string())?;
    let (first, last) = (mean_total(&records[..WINDOW]), mean_total(&records[records.len() - WINDOW..]));
    let fall = 1.0 - last / first;
    let init = pretrained.checkpoint().map_err(|e| e.to_string())?;
    let drc_before = drc_params(pretrained.framework());

    let (full, records) = train_full(&train, &init, &cfg, None).map_err(|e| e.to_string())?;
    let frozen = drc_before == drc_params(full.framework());
    let (mut ours, mut baseline) = (0.0, 0.0);
    for s in test.samples() {
        let gt = s.eval_hdr.as_ref().ok_or("test sample lacks eval_hdr")?;
        let pred = full.framework().reconstruct(s, s.obs_time).map_err(|e| e.to_string())?;
        ours += psnr_mu(&pred, gt, &cfg.tonemap).map_err(|e| e.to_string())?;
        baseline += psnr_mu(&s.blurry_ldr, gt, &cfg.tonemap).map_err(|e| e.to_string())?;
    }
    let n = test.len() as f64;
    let (ours, baseline) = (ours / n, baseline / n);
    check(
        fall >= 0.5 && frozen && records.len() as u64 == STEPS && ours - baseline >= 3.0,
        format!(
            "pretrain loss {first:.4} -> {last:.4} ({:.1}% drop); DRC frozen: {frozen}; \
             PSNR-mu {ours:.2} dB vs blurry baseline {baseline:.2} dB ({:+.2} dB)",
            100.0 * fall,
            ours - baseline
        ),
    )
}

fn c9_sequence() -> Result<String, String> {
    let corpus = sample_corpus(0, 1, 64, 9, 0.0);
    let sample: &TrainingSample = corpus.samples().next().ok_or("empty corpus")?;
    if sample.events.is_empty() {
        return Err("sample has no events".into());
    }
    let cfg = Config::default();
    let fw = Framework::new(&cfg, DType::F32, &Device::Cpu, 9).map_err(|e| e.to_string())?;
    let frames = infer_sequence(&fw, sample, 11).map_err(|e| e.to_string())?;
    let non_negative = frames.iter().all(|f| f.min_value() >= 0.0);
    let mut distinct = true;
    for i in 0..frames.len() {
        for j in i + 1..frames.len() {
            distinct &= frames[i] != frames[j];
        }
    }
    let min_mad = frames
        .windows(2)
        .map(|w| {
            w[0].data().iter().zip(w[1].data()).map(|(a, b)| (a - b).abs() as f64).sum::<f64>()
                / w[0].data().len() as f64
        })
        .fold(f64::INFINITY, f64::min);
    check(
        frames.len() == 11 && non_negative && distinct && min_mad > 0.0,
        format!(
            "{} frames, non-negative: {non_negative}, pairwise distinct: {distinct}, \
             min consecutive MAD {min_mad:.3e} ({} events)",
            frames.len(),
            sample.events.len()
        ),
    )
}

fn c10_ablation() -> Result<String, String> {
    let corpus = sample_corpus(2, 0, 16, 10, 0.0);
    let columns = ["L_HL", "L_LL", "L_LH", "L_HH"];
    let mut notes = Vec::new();
    for (i, key) in ["loss.l1=0", "loss.l2=0", "loss.l3=0", "loss.l4=0"].into_iter().enumerate() {
        let overrides: Vec<String> = [
            key,
            "model.base_channels=8",
            "train.batch_size=1",
            "train.crop=16",
            "train.epochs=2",
            "train.decay_start_epoch=1",
            "train.max_steps=2",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let cfg = Config::layered(None, &overrides).map_err(|e| e.to_string())?;
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        pretrain_stage(&corpus, &cfg, Some(dir.path())).map_err(|e| format!("{key}: {e}"))?;
        let log = std::fs::read_to_string(dir.path().join(LOG_FILE)).map_err(|e| e.to_string())?;
        let lines: Vec<serde_json::Value> = log.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        if lines.len() != 2 {
            return Err(format!("{key}: {} log lines", lines.len()));
        }
        for line in &lines {
            for (j, col) in columns.iter().enumerate() {
                let v = line[*col].as_f64().ok_or_else(|| format!("{key}: no {col}"))?;
                if (j == i) != (v == 0.0) {
                    return Err(format!("{key}: {col} = {v}"));
                }
            }
        }
        notes.push(format!("{key} -> {} = 0", columns[i]));
    }
    Ok(notes.join(", "))
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "fusion oracle equivalence", budget: Duration::from_secs(5), run: c1_fusion_oracle },
        Criterion { id: 2, name: "unclipped fixed point", budget: Duration::from_secs(5), run: c2_unclipped_fixed_point },
        Criterion { id: 3, name: "event simulator oracle", budget: Duration::from_secs(30), run: c3_simulator_oracle },
        Criterion { id: 4, name: "voxel conservation", budget: Duration::from_secs(10), run: c4_voxel_conservation },
        Criterion { id: 5, name: "gradient check", budget: Duration::from_secs(120), run: c5_gradient_check },
        Criterion { id: 6, name: "loss arithmetic", budget: Duration::from_secs(5), run: c6_loss_arithmetic },
        Criterion { id: 7, name: "learning-rate schedule", budget: Duration::MAX, run: c7_schedule },
        Criterion { id: 8, name: "toy convergence", budget: Duration::from_secs(30 * 60), run: c8_toy_convergence },
        Criterion { id: 9, name: "sequence reconstruction", budget: Duration::from_secs(60), run: c9_sequence },
        Criterion { id: 10, name: "ablation plumbing", budget: Duration::MAX, run: c10_ablation },
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut out = std::io::stdout();
    for c in criteria.iter().filter(|c| selected.is_empty() || selected.contains(&c.id)) {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        let over = elapsed > c.budget;
        let (status, detail) = match (&result, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("{d}; over the {:?} budget", c.budget)),
            (Err(d), _) => ("FAIL", d.clone()),
        };
        if status == "FAIL" {
            failed += 1;
        }
        writeln!(
            out,
            "criterion {:>2} {status} {} [{:.1}s]: {detail}",
            c.id,
            c.name,
            elapsed.as_secs_f64()
        )
        .unwrap();
        out.flush().unwrap();
    }
    if failed > 0 {
        writeln!(out, "acceptance: {failed} criterion(s) failed").unwrap();
        std::process::exit(1);
    }
}

//! Acceptance criteria 1-10. Each prints one PASS/FAIL line.
//!
//! Criteria listed in `EXPECTED_FAILURES` are reported as FAIL but do not
//! fail the run unless `FUZZVAD_ACCEPT_STRICT=1`.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use fuzzvad::clustering::{fcm_fit, sweep_clusters, FcmConfig, Point};
use fuzzvad::data::{split_stratified, synth_generate, Dataset, EmotionGroup, SynthConfig, REPORTED_GROUP_TOTALS};
use fuzzvad::dsp::{analog_bandpass_magnitude, spectrogram_stack, stft, EegRecording, SosFilter, StftConfig};
use fuzzvad::fuzzy::{eval_lmf, eval_umf, Dimension, Fuzzifier, MembershipParams, Term};
use fuzzvad::models::{
    cross_subject_experiment, extract_features, train, ArchConfig, Batch, FeatureSet, FusionModel, FusionNet,
    GroupPair, ModelConfig, ModelKind,
};
use fuzzvad::nn::gradcheck::relative_error;
use fuzzvad::nn::{
    repeat_sequence, softmax_cross_entropy, Conv2d, Dense, Dropout, Lstm, LstmInputGrad, MaxPool2d, Mode, NnRng,
    Param, Relu, Tensor,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Known failures: the criterion cannot be met without altering source data.
const EXPECTED_FAILURES: &[(u32, &str)] = &[(
    10,
    "the printed Group 1 total is 108 but its per-emotion counts sum to 96; counts are kept verbatim",
)];

const BENCH_SEEDS: u64 = 5;
/// Relative-error floor for finite-difference checks.
const FD_FLOOR: f64 = 1e-4;

type Check = std::result::Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

struct Outcome {
    id: u32,
    pass: bool,
}

fn run(id: u32, title: &str, budget: Duration, f: impl FnOnce() -> Check) -> Outcome {
    let start = Instant::now();
    let result = f();
    let elapsed = start.elapsed();
    let (pass, detail) = match result {
        Ok(d) if elapsed <= budget => (true, d),
        Ok(d) => (false, format!("{d}; over budget")),
        Err(e) => (false, e),
    };
    println!(
        "criterion {id:>2} {} {title} ({:.1}s / {}s): {detail}",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    Outcome { id, pass }
}

// ---------------------------------------------------------------- 1, 2

fn membership_containment() -> Check {
    let fz = Fuzzifier::default();
    let mut violations = 0;
    let mut points = 0;
    for dim in Dimension::ALL {
        let adjusted = fz.adjusted(dim);
        for term in Term::ALL {
            for i in 0..=8000 {
                let x = 1.0 + i as f64 * 0.001;
                let (lo, hi) = adjusted.envelope(term, x).map_err(|e| e.to_string())?;
                points += 1;
                if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                    violations += 1;
                }
            }
        }
    }
    ensure!(violations == 0, "{violations} of {points} grid points violate 0 <= lower <= upper <= 1");
    Ok(format!("{points} grid points, 0 violations"))
}

fn membership_fixtures() -> Check {
    let inv_e = (-1.0f64).exp();
    let p = MembershipParams::default();
    let mut checked = 0;
    let mut expect = |what: String, got: f64, want: f64| -> Check {
        checked += 1;
        ensure!((got - want).abs() <= 1e-12, "{what}: got {got}, want {want}");
        Ok(String::new())
    };
    let umf = |x: f64, dim: Dimension, term: Term| eval_umf(x, p.pair(dim).umf.get(term), term).unwrap();
    let lmf = |x: f64, dim: Dimension, term: Term| eval_lmf(x, p.pair(dim).lmf.get(term), term).unwrap();
    use Dimension::*;
    use Term::*;
    // Worked points with the published Low/High parameters.
    expect("valence low UMF at 1".into(), umf(1.0, Valence, Low), 1.0)?;
    expect("valence low UMF at 5".into(), umf(5.0, Valence, Low), 0.0)?;
    expect("valence low UMF at 2.2".into(), umf(2.2, Valence, Low), inv_e)?;
    expect("valence low LMF at 1.5".into(), lmf(1.5, Valence, Low), 1.0)?;
    expect("arousal high LMF at 8".into(), lmf(8.0, Arousal, High), 1.0)?;
    expect("valence low LMF at 2.88".into(), lmf(2.88, Valence, Low), inv_e)?;
    // Every term of both families: peak, one sigma inside the support, outside the support.
    for dim in Dimension::ALL {
        for term in Term::ALL {
            for (family, tp) in [("UMF", p.pair(dim).umf.get(term)), ("LMF", p.pair(dim).lmf.get(term))] {
                let f = |x: f64| if family == "UMF" { umf(x, dim, term) } else { lmf(x, dim, term) };
                let inside = |x: f64| x >= tp.range_lo && x <= tp.range_hi;
                let name = |what: &str| format!("{dim:?} {term:?} {family} {what}");
                if inside(tp.mean) {
                    expect(name("peak"), f(tp.mean), 1.0)?;
                }
                // LMF Low/High are flat on the far side of the mean.
                let sides: &[f64] = match (family, term) {
                    ("LMF", Low) => &[1.0],
                    ("LMF", High) => &[-1.0],
                    _ => &[-1.0, 1.0],
                };
                for s in sides {
                    let x = tp.mean + s * tp.sigma;
                    if inside(x) {
                        expect(name("one sigma"), f(x), inv_e)?;
                    }
                }
                for x in [tp.range_lo - 0.25, tp.range_hi + 0.25] {
                    if (1.0..=9.0).contains(&x) {
                        expect(name("outside support"), f(x), 0.0)?;
                    }
                }
            }
        }
    }
    Ok(format!("{checked} analytic points within 1e-12"))
}

// ---------------------------------------------------------------- 3

fn fcm_criterion() -> Check {
    let centres: [Point; 4] = [[7.73, 7.70, 6.82], [2.09, 7.17, 6.75], [1.89, 2.63, 2.14], [1.86, 7.05, 2.57]];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let noise = Normal::new(0.0, 0.5).unwrap();
    let points: Vec<Point> = centres
        .iter()
        .flat_map(|c| (0..50).map(|_| *c).collect::<Vec<_>>())
        .map(|c| [c[0] + noise.sample(&mut rng), c[1] + noise.sample(&mut rng), c[2] + noise.sample(&mut rng)])
        .collect();
    let fit = fcm_fit(&points, &FcmConfig::default()).map_err(|e| e.to_string())?;
    for (t, w) in fit.objective_trace.windows(2).enumerate() {
        ensure!(w[1] <= w[0] + 1e-12, "objective rose at iteration {}: {} -> {}", t + 1, w[0], w[1]);
    }
    for (i, row) in fit.memberships.iter().enumerate() {
        let s: f64 = row.iter().sum();
        ensure!((s - 1.0).abs() <= 1e-9, "membership row {i} sums to {s}");
    }
    // best permutation of recovered centroids onto the generator means
    let mut best = f64::INFINITY;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let perm = [a, b, c, d];
                    if perm.iter().collect::<BTreeSet<_>>().len() != 4 {
                        continue;
                    }
                    let worst = (0..4)
                        .flat_map(|k| (0..3).map(move |j| (k, j)))
                        .map(|(k, j)| (fit.centroids[perm[k]][j] - centres[k][j]).abs())
                        .fold(0.0, f64::max);
                    best = best.min(worst);
                }
            }
        }
    }
    ensure!(best <= 0.3, "best permutation leaves a coordinate {best:.3} from its blob mean");
    let sweep = sweep_clusters(&points, 2..=10, &FcmConfig::default(), 1.0).map_err(|e| e.to_string())?;
    let top = sweep
        .iter()
        .max_by(|a, b| a.fuzzy_silhouette.total_cmp(&b.fuzzy_silhouette))
        .unwrap();
    let table: Vec<String> = sweep.iter().map(|r| format!("{}:{:.3}", r.clusters, r.fuzzy_silhouette)).collect();
    ensure!(top.clusters == 4, "fuzzy silhouette peaks at c={} [{}]", top.clusters, table.join(" "));
    Ok(format!(
        "{} iterations, centroid error {best:.3}, silhouette argmax c=4 [{}]",
        fit.iterations_run,
        table.join(" ")
    ))
}

// ---------------------------------------------------------------- 4

fn sine(freq: f64, fs: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| (2.0 * PI * freq * i as f64 / fs).sin()).collect()
}

fn peak(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn dsp_criterion() -> Check {
    let fs = 250.0;
    let filter = SosFilter::butterworth_bandpass(1.0, 40.0, 5, fs).map_err(|e| e.to_string())?;
    let n = 20 * 250;
    let settle = 10 * 250;
    let out20 = filter.filter(&sine(20.0, fs, n));
    let gain20 = peak(&out20[settle..]);
    let oracle20 = analog_bandpass_magnitude(20.0, 1.0, 40.0, 5, fs);
    ensure!(
        (gain20 - oracle20).abs() <= 0.05 * oracle20,
        "20 Hz gain {gain20:.5} vs oracle {oracle20:.5}"
    );
    ensure!((gain20 - 1.0).abs() <= 0.05, "20 Hz gain {gain20:.5} not within 5% of unity");
    let dc = filter.filter(&vec![1.0; n]);
    let dc_level = peak(&dc[settle..]);
    ensure!(dc_level < 1e-3, "DC output {dc_level:.2e}");
    let out100 = filter.filter(&sine(100.0, fs, n));
    let atten100 = -20.0 * peak(&out100[settle..]).log10();
    ensure!(atten100 >= 25.0, "100 Hz attenuation {atten100:.1} dB");

    // Parseval per frame against the directly windowed samples.
    let cfg = StftConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let signal: Vec<f64> = (0..1750).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let spec = stft(&signal, &cfg).map_err(|e| e.to_string())?;
    let nfft = cfg.fft_length;
    let window: Vec<f64> = (0..cfg.window_length)
        .map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / cfg.window_length as f64).cos())
        .collect();
    let mut worst = 0.0f64;
    for frame in 0..spec.frames {
        let time: f64 = (0..cfg.window_length)
            .map(|k| (signal[frame * cfg.hop + k] * window[k]).powi(2))
            .sum();
        let mut freq = 0.0;
        for bin in 0..spec.bins {
            let w = if bin == 0 || bin == nfft / 2 { 1.0 } else { 2.0 };
            freq += w * spec.get(bin, frame).norm_sqr();
        }
        worst = worst.max((freq / nfft as f64 - time).abs() / time);
    }
    ensure!(worst <= 1e-6, "Parseval relative error {worst:.2e}");

    let seg = EegRecording::new(
        (0..32).map(|_| (0..1750).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect(),
        fs,
    )
    .map_err(|e| e.to_string())?;
    let stack = spectrogram_stack(&seg, &cfg, 40.0).map_err(|e| e.to_string())?;
    ensure!(stack.shape() == [32, 21, 26], "stack shape {:?}", stack.shape());
    Ok(format!(
        "20 Hz gain {gain20:.4} (oracle {oracle20:.4}), DC {dc_level:.1e}, 100 Hz -{atten100:.1} dB, \
         Parseval {worst:.1e}, stack 32x21x26"
    ))
}

// ---------------------------------------------------------------- 5

struct GradStats {
    worst: f64,
    count: usize,
}

impl GradStats {
    fn record(&mut self, what: &str, analytic: f64, numeric: f64) -> Check {
        let err = relative_error(analytic, numeric, FD_FLOOR);
        self.worst = self.worst.max(err);
        self.count += 1;
        ensure!(err < 1e-5, "{what}: analytic {analytic:.10e} numeric {numeric:.10e} (rel {err:.2e})");
        Ok(String::new())
    }
}

const STEP: f64 = 1e-5;

fn random(rng: &mut NnRng, shape: Vec<usize>) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn dot(a: &Tensor, c: &Tensor) -> f64 {
    a.data.iter().zip(&c.data).map(|(x, y)| x * y).sum()
}

/// Checks input and parameter gradients of `L = <layer(x), c>`.
fn check_layer<L>(
    stats: &mut GradStats,
    name: &str,
    layer: &mut L,
    x: &Tensor,
    c: &Tensor,
    forward: impl Fn(&mut L, &Tensor, Mode) -> Tensor,
    backward: impl Fn(&mut L, &Tensor) -> Tensor,
    params: impl Fn(&mut L) -> Vec<&mut Param>,
) -> Check {
    for p in params(layer) {
        p.zero_grad();
    }
    forward(layer, x, Mode::Train);
    let gx = backward(layer, c);
    let grads: Vec<Vec<f64>> = params(layer).iter().map(|p| p.grad.clone()).collect();
    let mut xp = x.clone();
    for i in 0..x.len() {
        xp.data[i] = x.data[i] + STEP;
        let plus = dot(&forward(layer, &xp, Mode::Eval), c);
        xp.data[i] = x.data[i] - STEP;
        let minus = dot(&forward(layer, &xp, Mode::Eval), c);
        xp.data[i] = x.data[i];
        stats.record(&format!("{name} input[{i}]"), gx.data[i], (plus - minus) / (2.0 * STEP))?;
    }
    for (pi, g) in grads.iter().enumerate() {
        for i in 0..g.len() {
            let orig = params(layer)[pi].value[i];
            params(layer)[pi].value[i] = orig + STEP;
            let plus = dot(&forward(layer, x, Mode::Eval), c);
            params(layer)[pi].value[i] = orig - STEP;
            let minus = dot(&forward(layer, x, Mode::Eval), c);
            params(layer)[pi].value[i] = orig;
            let pname = params(layer)[pi].name.clone();
            stats.record(&format!("{pname}[{i}]"), g[i], (plus - minus) / (2.0 * STEP))?;
        }
    }
    Ok(String::new())
}

fn op_gradients(stats: &mut GradStats) -> Check {
    let mut rng = NnRng::seed_from_u64(21);

    let mut dense = Dense::new("dense", 4, 3);
    dense.init(&mut rng);
    let (x, c) = (random(&mut rng, vec![2, 4]), random(&mut rng, vec![2, 3]));
    check_layer(
        stats,
        "dense",
        &mut dense,
        &x,
        &c,
        |l, x, m| l.forward(x, m).unwrap(),
        |l, g| l.backward(g).unwrap(),
        |l| l.params_mut().into_iter().collect(),
    )?;

    let mut conv = Conv2d::new("conv", 3, 3, 2, 3);
    conv.init(&mut rng);
    let (x, c) = (random(&mut rng, vec![2, 5, 6, 2]), random(&mut rng, vec![2, 3, 4, 3]));
    check_layer(
        stats,
        "conv",
        &mut conv,
        &x,
        &c,
        |l, x, m| l.forward(x, m).unwrap(),
        |l, g| l.backward(g, true).unwrap().unwrap(),
        |l| l.params_mut().into_iter().collect(),
    )?;

    let mut pool = MaxPool2d::new(2, 2);
    let (x, c) = (random(&mut rng, vec![1, 4, 6, 3]), random(&mut rng, vec![1, 2, 3, 3]));
    check_layer(
        stats,
        "maxpool",
        &mut pool,
        &x,
        &c,
        |l, x, m| l.forward(x, m).unwrap(),
        |l, g| l.backward(g).unwrap(),
        |_| Vec::new(),
    )?;

    let mut relu = Relu::new();
    let mut x = random(&mut rng, vec![3, 5]);
    x.data.iter_mut().filter(|v| v.abs() < 1e-2).for_each(|v| *v = 0.5);
    let c = random(&mut rng, vec![3, 5]);
    check_layer(
        stats,
        "relu",
        &mut relu,
        &x,
        &c,
        |l, x, m| l.forward(x, m),
        |l, g| l.backward(g).unwrap(),
        |_| Vec::new(),
    )?;

    // Same seed on every call keeps the mask fixed; Eval would skip it, so
    // the finite differences also run in training mode.
    let mut dropout = Dropout::new(0.3);
    let (x, c) = (random(&mut rng, vec![2, 8]), random(&mut rng, vec![2, 8]));
    check_layer(
        stats,
        "dropout",
        &mut dropout,
        &x,
        &c,
        |l, x, _| l.forward(x, Mode::Train, &mut NnRng::seed_from_u64(3)),
        |l, g| l.backward(g).unwrap(),
        |_| Vec::new(),
    )?;

    // LSTM over an explicit sequence, loss on every hidden state.
    let mut lstm = Lstm::new("lstm", 3, 4);
    lstm.init(&mut rng);
    lstm.bias.value.iter_mut().for_each(|b| *b += rng.gen_range(-0.2..0.2));
    let steps = 3;
    let x = random(&mut rng, vec![steps * 2, 3]);
    let c = random(&mut rng, vec![steps * 2, 4]);
    let split = |x: &Tensor| -> Vec<Tensor> {
        (0..steps)
            .map(|t| Tensor::new(vec![2, 3], x.data[t * 6..(t + 1) * 6].to_vec()).unwrap())
            .collect()
    };
    let cs: Vec<Tensor> = (0..steps)
        .map(|t| Tensor::new(vec![2, 4], c.data[t * 8..(t + 1) * 8].to_vec()).unwrap())
        .collect();
    check_layer(
        stats,
        "lstm",
        &mut lstm,
        &x,
        &c,
        |l, x, m| {
            let states = l.forward_sequence(split(x), m).unwrap();
            let data = states.iter().flat_map(|s| s.hidden.data.clone()).collect();
            Tensor::new(vec![steps * 2, 4], data).unwrap()
        },
        |l, _| match l.backward(&cs.iter().cloned().map(Some).collect::<Vec<_>>()).unwrap() {
            LstmInputGrad::Sequence(gs) => {
                Tensor::new(vec![steps * 2, 3], gs.iter().flat_map(|g| g.data.clone()).collect()).unwrap()
            }
            LstmInputGrad::Repeated(_) => panic!("sequence input"),
        },
        |l| l.params_mut().into_iter().collect(),
    )?;

    // Repeated input, loss on the last hidden state only.
    let mut lstm = Lstm::new("lstm_rep", 3, 4);
    lstm.init(&mut rng);
    let repeats = 4;
    let (x, c) = (random(&mut rng, vec![2, 3]), random(&mut rng, vec![2, 4]));
    let c_last = c.clone();
    check_layer(
        stats,
        "lstm repeated",
        &mut lstm,
        &x,
        &c,
        |l, x, m| l.forward_repeated(x.clone(), repeats, m).unwrap().pop().unwrap().hidden,
        |l, _| {
            let mut g = vec![None; repeats];
            g[repeats - 1] = Some(c_last.clone());
            match l.backward(&g).unwrap() {
                LstmInputGrad::Repeated(g) => g,
                LstmInputGrad::Sequence(_) => panic!("repeated input"),
            }
        },
        |l| l.params_mut().into_iter().collect(),
    )?;
    // The repeated path must agree with explicitly repeating the vector.
    let explicit = lstm.forward_sequence(repeat_sequence(&x, repeats).unwrap(), Mode::Eval).unwrap();
    let fused = lstm.forward_repeated(x.clone(), repeats, Mode::Eval).unwrap();
    ensure!(explicit == fused, "forward_repeated differs from an explicit repeat");

    let logits = random(&mut rng, vec![3, 5]);
    let labels = [1, 4, 0];
    let grad = softmax_cross_entropy(&logits, &labels).unwrap().grad_logits;
    let mut lp = logits.clone();
    for i in 0..logits.len() {
        lp.data[i] = logits.data[i] + STEP;
        let plus = softmax_cross_entropy(&lp, &labels).unwrap().loss;
        lp.data[i] = logits.data[i] - STEP;
        let minus = softmax_cross_entropy(&lp, &labels).unwrap().loss;
        lp.data[i] = logits.data[i];
        stats.record(&format!("softmax cross-entropy[{i}]"), grad.data[i], (plus - minus) / (2.0 * STEP))?;
    }
    Ok(String::new())
}

fn small_arch() -> ArchConfig {
    ArchConfig {
        conv1_filters: 2,
        conv2_filters: 3,
        kernel: 3,
        pool: 2,
        lstm1_units: 4,
        lstm2_units: 3,
        fuzzy_hidden: 5,
        fuzzy_out: 4,
    }
}

fn graph_gradients(stats: &mut GradStats, kind: ModelKind) -> Check {
    let mut rng = NnRng::seed_from_u64(31);
    let mut net = FusionNet::new(kind, &small_arch(), 3, [10, 12, 2], 0.2, 4).map_err(|e| e.to_string())?;
    net.init(&mut rng);
    for p in net.params_mut() {
        if p.name.ends_with("bias") {
            p.value.iter_mut().for_each(|v| *v += rng.gen_range(-0.1..0.1));
        }
    }
    let n = 3;
    let width = kind.fuzzy_input_width();
    let batch = Batch {
        images: random(&mut rng, vec![n, 10, 12, 2]),
        phi: (width > 0).then(|| {
            Tensor::new(vec![n, width], (0..n * width).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap()
        }),
        labels: vec![0, 2, 1],
        cuboids: vec![4, 13, 26],
    };
    let loss = |net: &mut FusionNet| {
        let out = net
            .forward(&batch.images, batch.phi.as_ref(), Mode::Train, &mut NnRng::seed_from_u64(99))
            .unwrap();
        net.loss(&out, &batch).unwrap().total
    };
    net.zero_grad();
    net.forward_backward(&batch, &mut NnRng::seed_from_u64(99)).map_err(|e| e.to_string())?;
    let grads: Vec<Vec<f64>> = net.params().iter().map(|p| p.grad.clone()).collect();
    for (pi, g) in grads.iter().enumerate() {
        for i in 0..g.len() {
            let orig = net.params()[pi].value[i];
            net.params_mut()[pi].value[i] = orig + STEP;
            let plus = loss(&mut net);
            net.params_mut()[pi].value[i] = orig - STEP;
            let minus = loss(&mut net);
            net.params_mut()[pi].value[i] = orig;
            let name = format!("{kind} {}[{i}]", net.params()[pi].name);
            stats.record(&name, g[i], (plus - minus) / (2.0 * STEP))?;
        }
    }
    Ok(String::new())
}

fn gradient_criterion() -> Check {
    let mut stats = GradStats { worst: 0.0, count: 0 };
    op_gradients(&mut stats)?;
    let ops = stats.count;
    for kind in [ModelKind::Model1Type2, ModelKind::model3()] {
        graph_gradients(&mut stats, kind)?;
    }
    Ok(format!(
        "{ops} op and {} full-graph coordinates, worst relative error {:.2e}",
        stats.count - ops,
        stats.worst
    ))
}

// ---------------------------------------------------------------- 6, 7, 8

struct BenchSeed {
    seed: u64,
    _dir: tempfile::TempDir,
    dataset: Dataset,
    features: FeatureSet,
    train: FeatureSet,
    validation: FeatureSet,
}

static BENCH: OnceLock<Vec<BenchSeed>> = OnceLock::new();

/// The default synthetic benchmark for every seed, generated once.
fn bench() -> &'static [BenchSeed] {
    BENCH.get_or_init(|| {
        (0..BENCH_SEEDS)
            .map(|seed| {
                let dir = tempfile::tempdir().unwrap();
                let cfg = SynthConfig {
                    seed,
                    ..SynthConfig::default()
                };
                let out = synth_generate(&cfg, dir.path()).unwrap();
                let model = ModelConfig::default();
                let features = extract_features(&out.dataset, &model.features).unwrap();
                let (tr, va) = split_stratified(&out.dataset, model.train_fraction, seed).unwrap();
                BenchSeed {
                    seed,
                    train: features.select(&tr).unwrap(),
                    validation: features.select(&va).unwrap(),
                    _dir: dir,
                    dataset: out.dataset,
                    features,
                }
            })
            .collect()
    })
}

fn seeded(kind: ModelKind, seed: u64) -> ModelConfig {
    let mut cfg = ModelConfig::default().with_kind(kind);
    cfg.training.seed = seed;
    cfg
}

/// Validation accuracy of `kind` on every benchmark seed.
fn accuracies(kind: ModelKind) -> std::result::Result<Vec<f64>, String> {
    bench()
        .iter()
        .map(|b| {
            let (_, report) = train(&seeded(kind, b.seed), &b.train, Some(&b.validation)).map_err(|e| e.to_string())?;
            Ok(report.accuracy)
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn fmt_accs(v: &[f64]) -> String {
    let each: Vec<String> = v.iter().map(|a| format!("{:.1}", 100.0 * a)).collect();
    format!("{:.2}% [{}]", 100.0 * mean(v), each.join(" "))
}

fn ablation_ordering() -> Check {
    let model1 = accuracies(ModelKind::Model1Type2)?;
    let crisp = accuracies(ModelKind::CrispVad)?;
    let novad = accuracies(ModelKind::NoVad)?;
    let (m1, cr, nv) = (mean(&model1), mean(&crisp), mean(&novad));
    let summary = format!(
        "model1 {}, crisp-vad {}, no-vad {}",
        fmt_accs(&model1),
        fmt_accs(&crisp),
        fmt_accs(&novad)
    );
    ensure!(m1 >= cr && cr >= nv, "ordering violated: {summary}");
    ensure!(m1 - nv >= 0.02, "model1 - no-vad = {:.2} pp: {summary}", 100.0 * (m1 - nv));
    ensure!(m1 >= 0.90, "model1 below 90%: {summary}");
    Ok(format!("{summary}; gap {:.2} pp", 100.0 * (m1 - nv)))
}

fn model2_model3() -> Check {
    let model2 = accuracies(ModelKind::model2())?;
    let model3 = accuracies(ModelKind::model3())?;
    let summary = format!("model2 {}, model3 {}", fmt_accs(&model2), fmt_accs(&model3));
    ensure!(mean(&model2) >= 0.85 && mean(&model3) >= 0.85, "below 85%: {summary}");

    // Dual loss against an independent log-sum-exp evaluation on real inputs.
    let b = &bench()[0];
    let lambda = 0.7;
    let cfg = seeded(ModelKind::Model3CuboidDual { lambda }, 0);
    let mut model = FusionModel::build(&cfg, &b.train).map_err(|e| e.to_string())?;
    let idx: Vec<usize> = (0..16).collect();
    let batch = model.batch(&b.train, &idx).map_err(|e| e.to_string())?;
    let out = model
        .net
        .forward(&batch.images, batch.phi.as_ref(), Mode::Eval, &mut NnRng::seed_from_u64(0))
        .map_err(|e| e.to_string())?;
    let parts = model.net.loss(&out, &batch).map_err(|e| e.to_string())?;
    let ce = |logits: &Tensor, labels: &[usize]| {
        let k = logits.row_len();
        labels
            .iter()
            .enumerate()
            .map(|(r, &y)| {
                let row = &logits.data[r * k..(r + 1) * k];
                let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln() - row[y]
            })
            .sum::<f64>()
            / labels.len() as f64
    };
    let ce24 = ce(&out.logits, &batch.labels);
    let ce27 = ce(out.lattice_logits.as_ref().ok_or("no lattice output")?, &batch.cuboids);
    let diff = (parts.total - (ce24 + lambda * ce27)).abs();
    ensure!(diff <= 1e-10, "total {} vs CE24 + lambda CE27 = {} (diff {diff:.2e})", parts.total, ce24 + lambda * ce27);
    Ok(format!("{summary}; dual-loss decomposition error {diff:.1e}"))
}

fn cross_subject() -> Check {
    let pair = GroupPair::G1vG2;
    let (mut with, mut without) = (Vec::new(), Vec::new());
    for b in bench() {
        for fuzzy in [true, false] {
            let r = cross_subject_experiment(&b.dataset, &b.features, pair, fuzzy, &seeded(ModelKind::Model1Type2, b.seed))
                .map_err(|e| e.to_string())?;
            let train: BTreeSet<&String> = r.split.train_participants.iter().collect();
            let overlap = r.split.validation_participants.iter().filter(|p| train.contains(p)).count();
            ensure!(overlap == 0, "seed {} fuzzy={fuzzy}: {overlap} participants on both sides", b.seed);
            ensure!(!r.split.validation_participants.is_empty(), "seed {}: empty validation side", b.seed);
            if fuzzy { &mut with } else { &mut without }.push(r.report.accuracy);
        }
    }
    let summary = format!("{pair} with fuzzy {}, without {}", fmt_accs(&with), fmt_accs(&without));
    ensure!(mean(&with) >= mean(&without), "{summary}");
    Ok(format!("{summary}; all splits participant-disjoint"))
}

// ---------------------------------------------------------------- 9

fn cli(dir: &Path, args: &[&str]) -> std::result::Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_fuzzvad"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(o.status.success(), "fuzzvad {}: {}", args.join(" "), String::from_utf8_lossy(&o.stderr));
    Ok(())
}

fn files(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Check {
    let config = r#"{"synth": {"participants": 4}, "model": {"train_fraction": 0.5, "training": {"epochs": 2}}, "cluster": {"c_max": 5}}"#;
    let raw = EegRecording::new(
        (0..4).map(|c| sine(6.0 + c as f64, 250.0, 60 * 250)).collect(),
        250.0,
    )
    .map_err(|e| e.to_string())?;
    let commands: &[&[&str]] = &[
        &["synth", "--out", "synth"],
        &["params", "--out", "params"],
        &["fuzzify", "--input", "synth/manifest.csv", "--out", "fuzzify"],
        &["cluster", "--input", "synth/manifest.csv", "--out", "cluster"],
        &["preprocess", "--input", "raw.eegs", "--clicks", "clicks.txt", "--out", "pre"],
        &["train", "--out", "train"],
        &["eval", "--model", "train/model.json", "--out", "eval"],
        &["ablate", "--out", "ablate"],
        &["crosssub", "--pair", "G1vG2", "--out", "crosssub"],
    ];
    let mut runs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        fs::write(dir.path().join("config.json"), config).map_err(|e| e.to_string())?;
        fs::write(dir.path().join("clicks.txt"), "20\n45\n3\n").map_err(|e| e.to_string())?;
        fuzzvad::dsp::format::write_eeg(&dir.path().join("raw.eegs"), &raw).map_err(|e| e.to_string())?;
        for args in commands {
            let mut full = args.to_vec();
            full.extend(["--config", "config.json", "--seed", "17"]);
            cli(dir.path(), &full)?;
        }
        runs.push(files(dir.path()));
        drop(dir);
    }
    let names = |r: &[(String, Vec<u8>)]| r.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>();
    ensure!(names(&runs[0]) == names(&runs[1]), "runs wrote different file sets");
    for ((name, a), (_, b)) in runs[0].iter().zip(&runs[1]) {
        ensure!(a == b, "{name} differs between runs");
    }
    Ok(format!("{} commands, {} files byte-identical across two runs", commands.len(), runs[0].len()))
}

// ---------------------------------------------------------------- 10

fn group_totals() -> Check {
    let totals: Vec<usize> = EmotionGroup::ALL.iter().map(|g| g.event_total()).collect();
    ensure!(
        totals == REPORTED_GROUP_TOTALS,
        "embedded rows sum to {totals:?}, printed totals are {REPORTED_GROUP_TOTALS:?}"
    );
    Ok(format!("{totals:?}"))
}

fn main() {
    let secs = Duration::from_secs;
    let outcomes = [
        run(1, "membership containment", secs(1), membership_containment),
        run(2, "membership fixtures", secs(1), membership_fixtures),
        run(3, "fuzzy c-means", secs(10), fcm_criterion),
        run(4, "dsp", secs(5), dsp_criterion),
        run(5, "gradient checks", secs(60), gradient_criterion),
        run(6, "ablation ordering", secs(15 * 60), ablation_ordering),
        run(7, "model-2 and model-3", secs(10 * 60), model2_model3),
        run(8, "cross-subject", secs(10 * 60), cross_subject),
        run(9, "cli determinism", secs(60), determinism),
        run(10, "group totals", secs(1), group_totals),
    ];
    let strict = std::env::var("FUZZVAD_ACCEPT_STRICT").is_ok_and(|v| v == "1");
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("acceptance: {passed}/{} criteria passed", outcomes.len());
    let mut unexpected = 0;
    for o in outcomes.iter().filter(|o| !o.pass) {
        match EXPECTED_FAILURES.iter().find(|(id, _)| *id == o.id) {
            Some((_, why)) if !strict => println!("criterion {:>2} expected failure: {why}", o.id),
            _ => unexpected += 1,
        }
    }
    if unexpected > 0 {
        println!("acceptance: {unexpected} unexpected failure(s)");
        std::process::exit(1);
    }
}

//! Trains a set of model variants on the default synthetic benchmark.
//!
//! cargo run --release --example synthetic_benchmark -- [epochs] [seeds] [kinds...]

use std::time::Instant;

use fuzzvad::data::{split_stratified, synth_generate, SynthConfig};
use fuzzvad::models::{extract_features, train, ModelConfig, ModelKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let epochs: usize = args.first().map_or(Ok(10), |s| s.parse())?;
    let seeds: u64 = args.get(1).map_or(Ok(1), |s| s.parse())?;
    let kinds: Vec<ModelKind> = if args.len() > 2 {
        args[2..].iter().map(|s| s.parse()).collect::<Result<_, _>>()?
    } else {
        vec![ModelKind::Model1Type2, ModelKind::CrispVad, ModelKind::NoVad]
    };
    let noise: f64 = std::env::var("NOISE").ok().map_or(Ok(SynthConfig::default().noise_level), |s| s.parse())?;
    for seed in 0..seeds {
        let dir = tempfile::tempdir()?;
        let cfg = SynthConfig { seed, noise_level: noise, ..SynthConfig::default() };
        let out = synth_generate(&cfg, dir.path())?;
        let mut model_cfg = ModelConfig::default();
        model_cfg.training.epochs = epochs;
        model_cfg.training.seed = seed;
        let features = extract_features(&out.dataset, &model_cfg.features)?;
        let (tr, va) = split_stratified(&out.dataset, model_cfg.train_fraction, seed)?;
        let (tr, va) = (features.select(&tr)?, features.select(&va)?);
        for kind in &kinds {
            let t = Instant::now();
            let (_, report) = train(&model_cfg.with_kind(*kind), &tr, Some(&va))?;
            println!(
                "seed {seed} {:<10} acc {:.4} train {:.4} loss {:?} ({:.1}s)",
                kind.name(),
                report.accuracy,
                report.train_accuracy,
                report.epoch_losses.iter().map(|l| (l * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
                t.elapsed().as_secs_f64()
            );
        }
    }
    Ok(())
}

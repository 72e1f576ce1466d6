//! Global sigma scaling and sparsification on synthetic predictions whose
//! spreads are twice the true noise.
//!
//! `cargo run --release --example calibration`

use rand_distr::{Distribution, Normal, Uniform};
use viscnet::model::MixtureParams;
use viscnet::seed;
use viscnet::uq::{
    ause, calibrate, sparsification, CoverageMode, PredictiveDistribution, SparsificationConfig, DEFAULT_LEVELS,
};

fn main() -> anyhow::Result<()> {
    let mut rng = seed::rng(0, &[]);
    let spread = Uniform::new(0.05, 0.5)?;
    let mut dists = Vec::new();
    let mut targets = Vec::new();
    let mut errors = Vec::new();
    let mut stds = Vec::new();
    for _ in 0..5000 {
        let sigma = spread.sample(&mut rng);
        let mean = Normal::new(0.0, 1.0)?.sample(&mut rng);
        let y = mean + Normal::new(0.0, sigma)?.sample(&mut rng);
        dists.push(PredictiveDistribution::new(MixtureParams::gaussian(mean, 2.0 * sigma)?));
        targets.push(y);
        errors.push(mean - y);
        stds.push(2.0 * sigma);
    }

    let r = calibrate(&dists, &targets, &DEFAULT_LEVELS, CoverageMode::Central)?;
    println!("fitted s = {:.4} (expected 0.5)", r.s);
    for (b, a) in r.coverage_before.iter().zip(&r.coverage_after) {
        println!("  {:.0}%: {:.3} -> {:.3}", b.nominal * 100.0, b.empirical, a.empirical);
    }
    println!("ce {:.4} -> {:.4}", r.ce_before, r.ce_after);

    let curve = sparsification(&errors, &stds, &SparsificationConfig::default())?;
    let a = ause(&curve);
    println!("ause modeled {:.4}, random {:.4}", a.modeled, a.random);
    print!("{}", curve.to_csv());
    Ok(())
}

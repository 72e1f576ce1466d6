//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.
//!
//! `cargo test --release --test acceptance -- [ids...]` runs a subset.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ndarray::{s, Array2, Array3};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::json;

use viscnet::analysis::{dimensionless_numbers, proximity, GeometrySpec};
use viscnet::cli::{run, Command, RunConfig, Verbosity};
use viscnet::dataset::{fluid_table, load_manifest, BasePattern, PatternId, VideoConfig, NUM_CLASSES};
use viscnet::model::MixtureParams;
use viscnet::seed;
use viscnet::synth::{
    generate_dataset, landing_offsets, make_checkerboard, make_noise_pattern, refract_render, vortex_surface,
    BackgroundPattern, GenConfig, LightingPreset, PatternKind, Phase, RenderConfig, Schedule, SurfaceParams,
    SurfaceState,
};
use viscnet::train::{
    data_efficiency_sweep, multipattern_experiment, nll_raw, train_from_manifest, Arm, MultiPatternConfig, Stage,
    StageData, SweepConfig, TrainConfig, TrainReport,
};
use viscnet::uq::{
    ause, calibrate, mixture_cdf, mixture_quantile, sparsification, CoverageMode, PredictiveDistribution,
    SparsificationConfig, DEFAULT_LEVELS,
};

type Outcome = Result<String, String>;

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Shared between criteria: the desk pretrain checkpoint seeds the sweep.
struct Ctx {
    root: PathBuf,
    pretrained: Option<PathBuf>,
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Option<Duration>,
    run: fn(&mut Ctx) -> Outcome,
}

// 1. Metric oracles

fn random_mixture(rng: &mut impl Rng) -> PredictiveDistribution {
    let raw: Vec<f64> = (0..9).map(|_| rng.random_range(-2.0..2.0)).collect();
    let p = MixtureParams::from_raw(&raw[..3], &raw[3..6], &raw[6..], 1e-3).unwrap();
    PredictiveDistribution::new(p)
}

/// Trapezoid rule on the mixture density from far below every component.
fn quadrature_cdf(dist: &PredictiveDistribution, y: f64, points: usize) -> f64 {
    let p = &dist.params;
    let lo = (0..p.k())
        .map(|k| p.means[k] - 12.0 * p.stds[k])
        .fold(f64::INFINITY, f64::min);
    if y <= lo {
        return 0.0;
    }
    let h = (y - lo) / (points - 1) as f64;
    let density = |x: f64| {
        (0..p.k())
            .map(|k| {
                let z = (x - p.means[k]) / p.stds[k];
                p.weights[k] * (-0.5 * z * z).exp() / (p.stds[k] * (2.0 * std::f64::consts::PI).sqrt())
            })
            .sum::<f64>()
    };
    let inner: f64 = (1..points - 1).map(|i| density(lo + i as f64 * h)).sum();
    h * (inner + 0.5 * (density(lo) + density(y)))
}

/// Kinematic viscosities of the ten reference mixtures, 1e-6 m^2/s.
const TABLE_NU: [f64; 10] = [
    0.89552, 1.36066, 1.80070, 2.38489, 3.16070, 41.9134, 55.6089, 73.8131, 98.0165, 130.203,
];

fn same_4_sig(a: f64, b: f64) -> bool {
    let digits = |v: f64| format!("{v:.3e}");
    digits(a) == digits(b)
}

fn metric_oracles(_: &mut Ctx) -> Outcome {
    let mut rng = seed::rng(11, &[]);
    let mut worst_cdf = 0.0f64;
    let mut worst_q = 0.0f64;
    for _ in 0..20 {
        let d = random_mixture(&mut rng);
        for _ in 0..3 {
            let y = rng.random_range(-4.0..4.0);
            worst_cdf = worst_cdf.max((mixture_cdf(&d, y) - quadrature_cdf(&d, y, 100_000)).abs());
        }
        for tau in [1e-3, 0.05, 0.25, 0.5, 0.68, 0.95, 0.999] {
            let q = mixture_quantile(&d, tau).map_err(err)?;
            worst_q = worst_q.max((mixture_cdf(&d, q) - tau).abs());
        }
    }
    check(worst_cdf <= 1e-6, || {
        format!("cdf vs quadrature off by {worst_cdf:.2e}")
    })?;
    check(worst_q <= 1e-8, || format!("quantile round trip off by {worst_q:.2e}"))?;

    let nu: Vec<f64> = fluid_table().iter().map(|f| f.kinematic_viscosity).collect();
    let d = proximity(&nu).map_err(err)?;
    let n = TABLE_NU.len();
    for i in 0..n {
        let want = if i == 0 {
            (TABLE_NU[0] - TABLE_NU[1]).abs()
        } else if i == n - 1 {
            (TABLE_NU[n - 1] - TABLE_NU[n - 2]).abs()
        } else {
            (2.0 * TABLE_NU[i] - TABLE_NU[i - 1] - TABLE_NU[i + 1]).abs() / 2.0
        } * 1e-6;
        check(same_4_sig(d[i], want), || {
            format!("D_{i} = {:.5e}, expected {want:.5e}", d[i])
        })?;
    }
    check(same_4_sig(d[0], 0.46514e-6) && same_4_sig(d[5], 12.5286e-6), || {
        format!("D_0 = {:.5e}, D_5 = {:.5e}", d[0], d[5])
    })?;

    let mut worst_we = 0.0f64;
    for f in fluid_table() {
        for _ in 0..20 {
            let rpm = rng.random_range(1.0..1000.0);
            let geom = GeometrySpec::from_impeller(rng.random_range(0.005..0.1));
            let t = dimensionless_numbers(&f, rpm, &geom).map_err(err)?;
            worst_we = worst_we.max((t.re * t.ca - t.we).abs() / t.we);
        }
    }
    check(worst_we <= 1e-12, || format!("Re*Ca vs We relative gap {worst_we:.2e}"))?;
    Ok(format!(
        "cdf gap {worst_cdf:.1e}, quantile gap {worst_q:.1e}, D_0 {:.5e}, D_5 {:.5e}, Re*Ca/We gap {worst_we:.1e}",
        d[0], d[5]
    ))
}

// 2. NLL gradient

fn nll_gradient(_: &mut Ctx) -> Outcome {
    let mut rng = seed::rng(23, &[]);
    let h = 1e-4;
    let instances = 100;
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let raw: Vec<f64> = (0..9).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y = rng.random_range(-3.0..3.0);
        let (_, g) = nll_raw(&raw, y, 1e-3).map_err(err)?;
        let fd: Vec<f64> = (0..raw.len())
            .map(|j| {
                let mut p = raw.clone();
                p[j] += h;
                let up = nll_raw(&p, y, 1e-3).unwrap().0;
                p[j] -= 2.0 * h;
                let down = nll_raw(&p, y, 1e-3).unwrap().0;
                (up - down) / (2.0 * h)
            })
            .collect();
        let diff = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
        worst = worst.max(diff / norm);
    }
    check(worst <= 1e-4, || format!("relative gradient error {worst:.2e}"))?;
    Ok(format!("{instances} instances, worst relative error {worst:.2e}"))
}

// 3. Calibration recovery

fn gaussian_calibration(inflation: f64, seed_id: u64) -> Result<(f64, f64, f64), String> {
    let mut rng = seed::rng(seed_id, &[]);
    let n = 10_000;
    let mut dists = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let mu = rng.random_range(-2.0..2.0);
        let sigma = rng.random_range(0.2..2.0);
        let z: f64 = StandardNormal.sample(&mut rng);
        targets.push(mu + sigma * z);
        dists.push(PredictiveDistribution::new(
            MixtureParams::gaussian(mu, inflation * sigma).map_err(err)?,
        ));
    }
    let r = calibrate(&dists, &targets, &DEFAULT_LEVELS, CoverageMode::Central).map_err(err)?;
    Ok((r.s, r.ce_before, r.ce_after))
}

fn calibration_recovery(_: &mut Ctx) -> Outcome {
    let (s2, b2, a2) = gaussian_calibration(2.0, 31)?;
    check((0.45..=0.55).contains(&s2), || format!("inflated: s = {s2:.4}"))?;
    check(a2 <= b2, || format!("inflated: ce {b2:.3e} -> {a2:.3e}"))?;
    let (s1, b1, a1) = gaussian_calibration(1.0, 32)?;
    check((0.9..=1.1).contains(&s1), || format!("well-specified: s = {s1:.4}"))?;
    check(a1 <= b1, || format!("well-specified: ce {b1:.3e} -> {a1:.3e}"))?;
    Ok(format!(
        "inflated s = {s2:.4} (ce {b2:.2e} -> {a2:.2e}), well-specified s = {s1:.4} (ce {b1:.2e} -> {a1:.2e})"
    ))
}

// 4. AUSE

fn ause_sanity(_: &mut Ctx) -> Outcome {
    let n = 1000;
    let mut rng = seed::rng(41, &[]);
    let errors: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let exact: Vec<f64> = errors.iter().map(|e: &f64| e.abs()).collect();
    let cfg = SparsificationConfig::default();
    let perfect = ause(&sparsification(&errors, &exact, &cfg).map_err(err)?).modeled;
    check(perfect.abs() <= 1e-9, || {
        format!("AUSE with exact uncertainty {perfect:.2e}")
    })?;

    let mut wins = 0;
    for trial in 0..100u64 {
        let mut rng = seed::rng(trial, &[0xa5e]);
        let errors: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let noisy: Vec<f64> = errors
            .iter()
            .map(|e: &f64| {
                let z: f64 = StandardNormal.sample(&mut rng);
                e.abs() * (0.5 * z).exp()
            })
            .collect();
        let cfg = SparsificationConfig {
            seed: trial,
            ..SparsificationConfig::default()
        };
        let a = ause(&sparsification(&errors, &noisy, &cfg).map_err(err)?);
        if a.modeled < a.random {
            wins += 1;
        }
    }
    check(wins >= 95, || format!("modeled beat random in {wins}/100 trials"))?;
    Ok(format!(
        "exact-uncertainty AUSE {perfect:.1e}, modeled < random in {wins}/100 trials"
    ))
}

// 5. Renderer

fn flat(h: usize, w: usize, depth: f64) -> SurfaceState {
    SurfaceState {
        height: Array2::from_elem((h, w), depth),
        time: 0.0,
        phase: Phase::Steady,
        meters_per_pixel: 0.15 / w as f64,
    }
}

fn tilted(h: usize, w: usize, slope: f64, base: f64) -> SurfaceState {
    let mpp = 0.15 / w as f64;
    SurfaceState {
        height: Array2::from_shape_fn((h, w), |(_, j)| base + slope * (j as f64 - w as f64 / 2.0) * mpp),
        time: 0.0,
        phase: Phase::Steady,
        meters_per_pixel: mpp,
    }
}

fn centre_crop(p: &BackgroundPattern, h: usize, w: usize) -> Array3<u8> {
    let (oy, ox) = ((p.height() - h) / 2, (p.width() - w) / 2);
    p.pixels.slice(s![oy..oy + h, ox..ox + w, ..]).to_owned()
}

/// Lateral displacement of a vertical ray refracted by an inclined plane.
fn snell_oracle(slope: f64, height: f64, n: f64) -> f64 {
    let theta_i = slope.atan();
    let theta_t = (theta_i.sin() / n).asin();
    height * (theta_i - theta_t).tan()
}

fn variance(a: &Array2<f64>) -> f64 {
    let m = a.mean().unwrap_or(0.0);
    a.iter().map(|v| (v - m).powi(2)).sum::<f64>() / a.len() as f64
}

fn renderer_invariants(_: &mut Ctx) -> Outcome {
    let (h, w) = (64, 64);
    let patterns = [
        make_noise_pattern(1, (96, 96), 5).map_err(err)?,
        make_noise_pattern(3, (96, 96), 6).map_err(err)?,
        make_checkerboard(8, (96, 96)).map_err(err)?,
    ];
    let schedule = Schedule {
        steady_duration: 1.5,
        decay_duration: 2.5,
    };
    let unit = RenderConfig {
        refractive_index: 1.0,
        ..RenderConfig::default()
    };
    let fluids = fluid_table();
    for p in &patterns {
        for (f, rpm, t) in [(&fluids[0], 450.0, 1.0), (&fluids[9], 270.0, 2.5)] {
            let surf = vortex_surface(f, rpm, t, schedule, &unit, &SurfaceParams::default(), (h, w), 3).map_err(err)?;
            check(
                refract_render(&surf, p, &unit).map_err(err)? == centre_crop(p, h, w),
                || format!("index 1.0 changed the image ({:?} pattern)", p.kind),
            )?;
        }
        for n in [1.0, 1.333, 1.5, 1.9] {
            let cfg = RenderConfig {
                refractive_index: n,
                ..RenderConfig::default()
            };
            check(
                refract_render(&flat(h, w, 0.1), p, &cfg).map_err(err)? == centre_crop(p, h, w),
                || format!("flat surface changed the image at n = {n}"),
            )?;
        }
    }

    let mut worst = 0.0f64;
    for slope in [0.005, 0.02, 0.05] {
        for n in [1.333, 1.5] {
            let surf = tilted(h, w, slope, 0.1);
            let offs = landing_offsets(&surf, n);
            for i in 0..h {
                for j in 0..w {
                    let want = snell_oracle(slope, surf.height[[i, j]], n) / surf.meters_per_pixel;
                    worst = worst.max((offs[[i, j, 0]] - want).abs()).max(offs[[i, j, 1]].abs());
                }
            }
        }
    }
    // the rendered image of a horizontal ramp shifts by the oracle displacement
    let (slope, n, pw) = (0.02, 1.333, 128);
    let surf = tilted(h, w, slope, 0.1);
    let ramp = BackgroundPattern {
        pixels: Array3::from_shape_fn((96, pw, 3), |(_, x, _)| (x * 2).min(255) as u8),
        kind: PatternKind::Noise,
        scale: 1,
    };
    let cfg = RenderConfig {
        refractive_index: n,
        lighting: LightingPreset {
            specular_strength: 0.0,
            ..LightingPreset::NEUTRAL
        },
        ..RenderConfig::default()
    };
    let img = refract_render(&surf, &ramp, &cfg).map_err(err)?;
    let ox = (pw - w) / 2;
    for j in 2..w - 2 {
        let seen = f64::from(img[[h / 2, j, 0]]) / 2.0 - (j + ox) as f64;
        let want = snell_oracle(slope, surf.height[[h / 2, j]], n) / surf.meters_per_pixel;
        worst = worst.max((seen - want).abs());
    }
    check(worst < 0.5, || {
        format!("tilted plane off the Snell oracle by {worst:.3} px")
    })?;

    let params = SurfaceParams::default();
    let mut decays = 0;
    for rpm in [270.0, 360.0, 450.0] {
        for t in [2.0, 3.0, 3.9] {
            let vars = fluids
                .iter()
                .map(|f| {
                    let surf = vortex_surface(f, rpm, t, schedule, &RenderConfig::default(), &params, (h, w), 4)?;
                    check(surf.phase == Phase::Decay, || format!("t = {t} not in decay"))
                        .map_err(viscnet::Error::Domain)?;
                    Ok(variance(&surf.height))
                })
                .collect::<viscnet::Result<Vec<f64>>>()
                .map_err(err)?;
            check(vars.windows(2).all(|p| p[1] <= p[0]), || {
                format!("variance rises with viscosity at {rpm} rpm, t = {t}: {vars:?}")
            })?;
            decays += 1;
        }
    }
    Ok(format!(
        "identities exact on {} patterns, Snell gap {worst:.3} px, variance monotone in {decays} decay snapshots",
        patterns.len()
    ))
}

// 6. Desk learning signal

fn desk_learning(ctx: &mut Ctx) -> Outcome {
    let gen = GenConfig {
        repeats: 3,
        seed: 1,
        ..GenConfig::default()
    };
    let data = ctx.root.join("desk/data");
    let manifest = generate_dataset(&gen, &data, 1).map_err(err)?;
    let classes: std::collections::BTreeSet<u8> = manifest.entries.iter().map(|e| e.class_id).collect();
    let omegas: std::collections::BTreeSet<u64> = manifest.entries.iter().map(|e| e.omega_rpm.to_bits()).collect();
    let patterns: std::collections::BTreeSet<PatternId> = manifest.entries.iter().map(|e| e.pattern_id).collect();
    check(manifest.entries.len() >= 500, || {
        format!("{} videos", manifest.entries.len())
    })?;
    check(manifest.video_config == VideoConfig::DESK, || {
        format!("{:?}", manifest.video_config)
    })?;
    check(
        classes.len() == NUM_CLASSES && omegas.len() == 5 && patterns.len() == 4,
        || {
            format!(
                "{} classes, {} speeds, {} patterns",
                classes.len(),
                omegas.len(),
                patterns.len()
            )
        },
    )?;

    let manifest_path = data.join("manifest.jsonl");
    let pre = TrainConfig {
        epochs: 30,
        seed: 1,
        ..TrainConfig::default()
    };
    let t = Instant::now();
    let (_, pre_report) = train_from_manifest(&pre, &manifest_path, &ctx.root.join("desk/pre")).map_err(err)?;
    let pre_time = t.elapsed();
    let acc = pre_report.last().val_accuracy.unwrap_or(0.0);
    ctx.pretrained = Some(pre_report.best_checkpoint.clone());
    check(pre_time <= Duration::from_secs(30 * 60), || {
        format!("pretrain took {:.0} s", pre_time.as_secs_f64())
    })?;
    check(acc >= 0.3, || format!("val accuracy {acc:.3}"))?;

    let reg = TrainConfig {
        stage: Stage::Regress,
        epochs: 15,
        seed: 1,
        init_checkpoint: Some(pre_report.final_checkpoint.clone()),
        ..TrainConfig::default()
    };
    let (_, reg_report) = train_from_manifest(&reg, &manifest_path, &ctx.root.join("desk/reg")).map_err(err)?;
    let mae = reg_report.last().val_mae.unwrap_or(f64::INFINITY);
    let baseline = reg_report.baseline_mae.unwrap_or(0.0);
    check(mae <= 0.8 * baseline, || {
        format!("MAE {mae:.4} vs baseline {baseline:.4}")
    })?;
    Ok(format!(
        "{} videos, val accuracy {acc:.3} after {:.0} s, MAE {mae:.4} vs mean baseline {baseline:.4} ({:.0}% lower)",
        manifest.entries.len(),
        pre_time.as_secs_f64(),
        100.0 * (1.0 - mae / baseline)
    ))
}

// 7. Multi-pattern harness

fn multipattern(ctx: &mut Ctx) -> Outcome {
    let refused = MultiPatternConfig {
        multi_patterns: vec![PatternId::Multi {
            left: BasePattern::Checkerboard,
            right: BasePattern::Noise(1),
        }],
        ..MultiPatternConfig::default()
    };
    check(
        multipattern_experiment(&refused, &ctx.root.join("mp-refused")).is_err(),
        || "coarse-left composite accepted".into(),
    )?;

    let config = MultiPatternConfig::default();
    for p in &config.multi_patterns {
        check(matches!(p, PatternId::Multi { .. }), || {
            format!("{p:?} is not a composite")
        })?;
    }
    let r = multipattern_experiment(&config, &ctx.root.join("mp")).map_err(err)?;
    check(r.classes == [1, 2, 3], || format!("classes {:?}", r.classes))?;
    for arm in [&r.mono, &r.multi] {
        check(
            arm.per_class_accuracy.len() == 3 && arm.val_samples > 0 && arm.train_samples > 0,
            || format!("arm {arm:?}"),
        )?;
        check(arm.per_class_accuracy.iter().all(|a| (0.0..=1.0).contains(a)), || {
            format!("{arm:?}")
        })?;
    }
    check(r.multi.patterns == config.multi_patterns, || {
        format!("multi arm used {:?}", r.multi.patterns)
    })?;
    for i in 0..3 {
        let want = r.multi.per_class_accuracy[i] - r.mono.per_class_accuracy[i];
        check((r.delta_per_class[i] - want).abs() < 1e-12, || format!("delta {i}"))?;
    }
    let mean = r.delta_per_class.iter().sum::<f64>() / 3.0;
    check((r.delta_mean - mean).abs() < 1e-12, || "mean delta".into())?;

    let v = serde_json::to_value(&r).map_err(err)?;
    for k in ["classes", "proximity", "mono", "multi", "delta_per_class", "delta_mean"] {
        check(v.get(k).is_some(), || format!("report lacks {k}"))?;
    }
    check(
        serde_json::from_value::<viscnet::train::MultiPatternReport>(v).map_err(err)? == r,
        || "report does not round-trip".into(),
    )?;
    let deltas: Vec<String> = r.delta_per_class.iter().map(|d| format!("{d:+.3}")).collect();
    Ok(format!(
        "classes {:?}, mono {:.3}, multi {:.3}, delta per class [{}]",
        r.classes,
        r.mono.accuracy,
        r.multi.accuracy,
        deltas.join(", ")
    ))
}

// 8. Data efficiency

fn data_efficiency(ctx: &mut Ctx) -> Outcome {
    let pretrained = match &ctx.pretrained {
        Some(p) => p.clone(),
        None => {
            let gen = GenConfig {
                repeats: 3,
                seed: 1,
                ..GenConfig::default()
            };
            let dir = ctx.root.join("de-source");
            generate_dataset(&gen, &dir, 1).map_err(err)?;
            let cfg = TrainConfig {
                epochs: 30,
                seed: 1,
                ..TrainConfig::default()
            };
            train_from_manifest(&cfg, &dir.join("manifest.jsonl"), &ctx.root.join("de-pre"))
                .map_err(err)?
                .1
                .best_checkpoint
        }
    };
    let target = GenConfig {
        repeats: 1,
        seed: 1,
        ..GenConfig::default()
    }
    .shifted();
    let dir = ctx.root.join("de-target");
    generate_dataset(&target, &dir, 1).map_err(err)?;
    let data = StageData::from_manifest(&dir.join("manifest.jsonl")).map_err(err)?;
    let sweep = SweepConfig {
        pretrained_checkpoint: Some(pretrained),
        ..SweepConfig::default()
    };
    check(sweep.fractions.len() == 3 && sweep.seeds.len() == 3, || {
        "sweep grid".into()
    })?;
    let table = data_efficiency_sweep(&sweep, &data, &ctx.root.join("de-runs")).map_err(err)?;
    check(table.runs.len() == 18, || format!("{} runs", table.runs.len()))?;
    let smallest = sweep.fractions.iter().copied().fold(f64::INFINITY, f64::min);
    let p = table.mean(Arm::Pretrained, smallest).ok_or("no pretrained cell")?;
    let s = table.mean(Arm::Scratch, smallest).ok_or("no scratch cell")?;
    check(p >= s, || {
        format!("fraction {smallest}: pretrained {p:.3} < scratch {s:.3}")
    })?;
    let cells: Vec<String> = table
        .summary
        .iter()
        .map(|c| format!("{} {}: {:.3}", c.arm.as_str(), c.fraction, c.mean_accuracy))
        .collect();
    Ok(format!("{} runs; {}", table.runs.len(), cells.join(", ")))
}

// 9. Determinism

fn cli(command: Command, config: &Path, output: &Path, seed: Option<u64>) -> Result<(), String> {
    run(&RunConfig {
        command,
        config_path: config.to_path_buf(),
        output_dir: output.to_path_buf(),
        seed,
        workers: 1,
        verbosity: Verbosity::Quiet,
    })
    .map(|_| ())
    .map_err(err)
}

fn write_json(path: &Path, v: &serde_json::Value) -> Result<PathBuf, String> {
    std::fs::write(path, serde_json::to_string_pretty(v).map_err(err)?).map_err(err)?;
    Ok(path.to_path_buf())
}

fn determinism(ctx: &mut Ctx) -> Outcome {
    let root = ctx.root.join("det");
    std::fs::create_dir_all(&root).map_err(err)?;
    let gen = write_json(
        &root.join("gen.json"),
        &json!({"synth": {"video": {"frames": 8, "height": 32, "width": 32, "fps": 4}},
                "omegas_rpm": [270.0, 450.0], "seed": 5}),
    )?;
    cli(Command::Gen, &gen, &root.join("a"), None)?;
    cli(Command::Gen, &gen, &root.join("b"), None)?;
    let read = |p: PathBuf| std::fs::read(p).map_err(err);
    let ma = read(root.join("a/manifest.jsonl"))?;
    check(ma == read(root.join("b/manifest.jsonl"))?, || "manifests differ".into())?;
    let manifest = load_manifest(&root.join("a/manifest.jsonl")).map_err(err)?;
    for e in &manifest.entries {
        check(
            read(root.join("a").join(&e.path))? == read(root.join("b").join(&e.path))?,
            || format!("video {} differs", e.path),
        )?;
    }

    let model = json!({
        "input": [8, 32, 32], "tubelet": [4, 8, 8], "embed_dim": 16, "depth": 1, "heads": 2,
        "mlp_ratio": 2.0, "num_classes": 10, "k": 3, "omega_range": [270.0, 450.0],
        "sigma_floor": 1e-3, "encoder": {"kind": "joint"}, "pooling": "mean", "seed": 0
    });
    let train = write_json(
        &root.join("train.json"),
        &json!({"manifest": "a/manifest.jsonl", "train": {"epochs": 3, "model": model}}),
    )?;
    cli(Command::Train, &train, &root.join("ta"), Some(9))?;
    cli(Command::Train, &train, &root.join("tb"), Some(9))?;
    let report = |dir: &str| -> Result<TrainReport, String> {
        serde_json::from_slice(&read(root.join(dir).join("pretrain_classify-report.json"))?).map_err(err)
    };
    let (ra, rb) = (report("ta")?, report("tb")?);
    let mut worst = 0.0f64;
    for (a, b) in ra.history.iter().zip(&rb.history) {
        worst = worst.max((a.train_loss - b.train_loss).abs());
        worst = worst.max((a.val_loss.unwrap_or(0.0) - b.val_loss.unwrap_or(0.0)).abs());
    }
    check(ra.history.len() == 3 && rb.history.len() == 3, || {
        "loss trace length".into()
    })?;
    check(worst <= 1e-6, || format!("loss traces differ by {worst:.2e}"))?;
    let ckpt_same = read(ra.final_checkpoint.clone())? == read(rb.final_checkpoint.clone())?;
    Ok(format!(
        "{} videos and manifest byte-identical, loss trace gap {worst:.1e}, checkpoints {}",
        manifest.entries.len(),
        if ckpt_same { "byte-identical" } else { "differ" }
    ))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            id: 1,
            name: "metric oracles",
            budget: Some(Duration::from_secs(10)),
            run: metric_oracles,
        },
        Criterion {
            id: 2,
            name: "NLL gradient check",
            budget: Some(Duration::from_secs(30)),
            run: nll_gradient,
        },
        Criterion {
            id: 3,
            name: "calibration recovery",
            budget: Some(Duration::from_secs(60)),
            run: calibration_recovery,
        },
        Criterion {
            id: 4,
            name: "AUSE sanity",
            budget: Some(Duration::from_secs(60)),
            run: ause_sanity,
        },
        Criterion {
            id: 5,
            name: "renderer invariants",
            budget: Some(Duration::from_secs(120)),
            run: renderer_invariants,
        },
        Criterion {
            id: 6,
            name: "desk learning signal",
            budget: None,
            run: desk_learning,
        },
        Criterion {
            id: 7,
            name: "multi-pattern harness",
            budget: None,
            run: multipattern,
        },
        Criterion {
            id: 8,
            name: "data-efficiency sweep",
            budget: None,
            run: data_efficiency,
        },
        Criterion {
            id: 9,
            name: "determinism",
            budget: None,
            run: determinism,
        },
    ];
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let tmp = tempfile::tempdir().expect("temp dir");
    let mut ctx = Ctx {
        root: tmp.path().to_path_buf(),
        pretrained: None,
    };
    let mut failed = 0;
    for c in criteria.iter().filter(|c| wanted.is_empty() || wanted.contains(&c.id)) {
        let t = Instant::now();
        let mut outcome = (c.run)(&mut ctx);
        let elapsed = t.elapsed();
        if let (Ok(_), Some(b)) = (&outcome, c.budget) {
            if elapsed > b {
                outcome = Err(format!("took {:.1} s, budget {} s", elapsed.as_secs_f64(), b.as_secs()));
            }
        }
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {}. {} ({:.1} s): {detail}", c.id, c.name, elapsed.as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

use ndarray::{Array1, Array2, Array4};

use super::*;
use crate::nn::gradcheck::matrix;

fn tiny(encoder: EncoderKind, pooling: Pooling) -> ModelConfig {
    ModelConfig {
        input: [4, 8, 8],
        tubelet: [2, 4, 4],
        embed_dim: 8,
        depth: 1,
        heads: 2,
        mlp_ratio: 2.0,
        num_classes: 3,
        k: 2,
        omega_range: [270.0, 450.0],
        sigma_floor: 1e-3,
        encoder,
        pooling,
        input_norm: InputNorm::TemporalCentered,
        seed: 11,
    }
}

fn video(cfg: &ModelConfig, seed: u64) -> Array4<u8> {
    let m = matrix(cfg.input.iter().product::<usize>() * 3, 1, seed);
    Array4::from_shape_fn((cfg.input[0], cfg.input[1], cfg.input[2], 3), |(t, h, w, c)| {
        let i = ((t * cfg.input[1] + h) * cfg.input[2] + w) * 3 + c;
        ((m[[i, 0]] + 1.0) * 127.5) as u8
    })
}

#[test]
fn zero_video_tokens_are_bias_plus_position() {
    let cfg = tiny(EncoderKind::Joint, Pooling::Mean);
    let net = ViscNet::new(cfg).unwrap();
    let v = Array4::zeros((4, 8, 8, 3));
    let toks = net.tubelet_embed(v.view()).unwrap();
    assert_eq!(toks.tokens.dim(), (8, 8));
    for (i, row) in toks.tokens.rows().into_iter().enumerate() {
        let want = &net.patch.bias.value.row(0) + &net.pos.value.row(i);
        assert_eq!(row, want);
    }
}

#[test]
fn indivisible_input_names_the_axis() {
    let net = ViscNet::new(tiny(EncoderKind::Joint, Pooling::Mean)).unwrap();
    let v = Array4::<u8>::zeros((4, 8, 6, 3));
    match net.tubelet_embed(v.view()) {
        Err(Error::Shape { axis, .. }) => assert_eq!(axis, "W"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn omega_conditioning_is_an_affine_broadcast() {
    let cfg = tiny(EncoderKind::Joint, Pooling::Mean);
    let net = ViscNet::new(cfg).unwrap();
    let v = video(&cfg, 1);
    let base = net.tubelet_embed(v.view()).unwrap();
    let at = |w: f64| net.condition_embed(&base, w).tokens;
    let (lo, mid, hi) = (at(270.0), at(360.0), at(450.0));
    let diff = &hi - &lo;
    for row in diff.rows() {
        assert!((&row - &diff.row(0)).iter().all(|d| d.abs() < 1e-6));
    }
    let avg = (&lo + &hi) / 2.0;
    assert!((&avg - &mid).iter().all(|d| d.abs() < 1e-5));
    assert!(!net.condition_embed(&base, 270.0).omega_extrapolated);
    assert!(net.condition_embed(&base, 600.0).omega_extrapolated);
    let (z0, _) = net.omega_input(270.0);
    let (z1, _) = net.omega_input(450.0);
    assert_eq!((z0[[0, 0]], z1[[0, 0]]), (0.0, 1.0));
}

#[test]
fn attention_and_features_contract() {
    for (enc, pool) in [
        (EncoderKind::Joint, Pooling::Mean),
        (EncoderKind::Joint, Pooling::ClassToken),
        (EncoderKind::Factorized { temporal_depth: 1 }, Pooling::Mean),
    ] {
        let cfg = tiny(enc, pool);
        let net = ViscNet::new(cfg).unwrap();
        let f = net.forward(video(&cfg, 2).view(), 300.0).unwrap();
        assert_eq!(f.features.len(), cfg.embed_dim);
        assert_eq!(f.attention.spatial.dim(), (2, 2));
        assert_eq!(f.attention.temporal.len(), 2);
        assert!((f.attention.spatial.sum() - 1.0).abs() < 1e-5);
        assert!((f.attention.temporal.sum() - 1.0).abs() < 1e-5);
        let toks = net.condition_embed(&net.tubelet_embed(video(&cfg, 2).view()).unwrap(), 300.0);
        let (feat, att) = net.encode(&toks).unwrap();
        assert_eq!(feat, f.features);
        assert_eq!(att, f.attention);
    }
}

#[test]
fn spatial_attention_permutes_with_tubelets_without_positions() {
    let cfg = ModelConfig {
        input: [4, 12, 12],
        tubelet: [2, 4, 4],
        ..tiny(EncoderKind::Joint, Pooling::Mean)
    };
    let mut net = ViscNet::new(cfg).unwrap();
    net.pos.value.fill(0.0);
    let v = video(&cfg, 3);
    // swap spatial cells (0, 0) and (2, 1) in every frame
    let mut w = v.clone();
    for t in 0..4 {
        for y in 0..4 {
            for x in 0..4 {
                for c in 0..3 {
                    w[[t, y, x, c]] = v[[t, 8 + y, 4 + x, c]];
                    w[[t, 8 + y, 4 + x, c]] = v[[t, y, x, c]];
                }
            }
        }
    }
    let a = net.forward(v.view(), 350.0).unwrap().attention.spatial;
    let b = net.forward(w.view(), 350.0).unwrap().attention.spatial;
    let mut swapped = a.clone();
    swapped[[0, 0]] = a[[2, 1]];
    swapped[[2, 1]] = a[[0, 0]];
    assert!((&swapped - &b).iter().all(|d| d.abs() < 1e-6), "{a:?}\n{b:?}");
    assert!((a[[0, 0]] - a[[2, 1]]).abs() > 1e-6);
}

#[test]
fn heads_contracts() {
    let cfg = tiny(EncoderKind::Joint, Pooling::Mean);
    let net = ViscNet::new(cfg).unwrap();
    let zero = Array1::zeros(cfg.embed_dim);
    assert_eq!(net.classify_head(&zero), net.class_head.bias.value.row(0));
    let logits = net.classify_head(&Array1::from_iter((0..8).map(|i| i as f32 * 0.3)));
    let p = crate::model::mixture::softmax(&logits.iter().map(|&v| f64::from(v)).collect::<Vec<_>>());
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    let argmax = |l: &Array1<f32>| l.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    assert_eq!(argmax(&logits), argmax(&logits.mapv(|v| v + 7.5)));

    let one = ViscNet::new(ModelConfig { k: 1, ..cfg }).unwrap();
    let m = one.gmm_head(&Array1::from_elem(8, 0.4)).unwrap();
    assert_eq!(m.weights, vec![1.0]);
}

#[test]
fn mixture_invariants_over_random_features() {
    let cfg = tiny(EncoderKind::Joint, Pooling::Mean);
    let net = ViscNet::new(ModelConfig { k: 3, ..cfg }).unwrap();
    let feats = matrix(1000, 8, 21) * 20.0;
    for row in feats.rows() {
        let m = net.gmm_head(&row.to_owned()).unwrap();
        assert!((m.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
        assert!(m.stds.iter().all(|&s| s >= cfg.sigma_floor && s.is_finite()));
        assert!(m.means.iter().all(|v| v.is_finite()));
    }
}

fn scalar_loss(net: &ViscNet, v: &Array4<u8>, wl: &Array1<f32>, wg: &Array1<f32>) -> f64 {
    let f = net.forward(v.view(), 333.0).unwrap();
    let a: f64 = f.logits.iter().zip(wl).map(|(x, w)| f64::from(x * w)).sum();
    let b: f64 = f.gmm_raw.iter().zip(wg).map(|(x, w)| f64::from(x * w)).sum();
    a + b
}

#[test]
fn end_to_end_gradients_match_finite_differences() {
    for (enc, pool) in [
        (EncoderKind::Joint, Pooling::Mean),
        (EncoderKind::Joint, Pooling::ClassToken),
        (EncoderKind::Factorized { temporal_depth: 1 }, Pooling::Mean),
    ] {
        let cfg = tiny(enc, pool);
        let mut net = ViscNet::new(cfg).unwrap();
        let v = video(&cfg, 4);
        let wl = matrix(1, 3, 5).row(0).to_owned();
        let wg = matrix(1, 6, 6).row(0).to_owned();
        let (_, tape) = net.forward_train(v.view(), 333.0).unwrap();
        net.backward(&tape, Some(&wl), Some(&wg));
        let snap = net.clone();
        let mut grads: Vec<(String, Array2<f32>, Array2<f32>)> = Vec::new();
        net.visit("", &mut |n, p| {
            grads.push((n.to_string(), p.value.clone(), p.grad.clone()))
        });
        for (name, mut value, grad) in grads {
            let target = name.clone();
            crate::nn::gradcheck::check(
                &mut value,
                &grad,
                &mut |val| {
                    let mut m = snap.clone();
                    m.visit_mut("", &mut |n, p| {
                        if n == target {
                            p.value = val.clone();
                        }
                    });
                    scalar_loss(&m, &v, &wl, &wg)
                },
                1e-2,
                3e-2,
                &format!("{enc:?}/{pool:?} {name}"),
            );
        }
    }
}

#[test]
fn checkpoint_round_trip() {
    let cfg = tiny(EncoderKind::Factorized { temporal_depth: 1 }, Pooling::Mean);
    let net = ViscNet::new(cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.safetensors");
    let mut meta = std::collections::BTreeMap::new();
    meta.insert("stage".to_string(), "pretrain_classify".to_string());
    net.save(&path, &meta).unwrap();
    let (back, m2) = ViscNet::load(&path).unwrap();
    assert_eq!(m2, meta);
    assert_eq!(back, net);
    let v = video(&cfg, 8);
    assert_eq!(
        back.forward(v.view(), 400.0).unwrap(),
        net.forward(v.view(), 400.0).unwrap()
    );

    std::fs::write(&path, b"not a checkpoint").unwrap();
    assert!(matches!(ViscNet::load(&path), Err(Error::Checkpoint { .. })));
    assert!(matches!(ViscNet::load(&dir.path().join("none")), Err(Error::Io { .. })));
}

#[test]
fn deterministic_init_and_inference() {
    let cfg = tiny(EncoderKind::Joint, Pooling::Mean);
    let a = ViscNet::new(cfg).unwrap();
    let b = ViscNet::new(cfg).unwrap();
    assert_eq!(a, b);
    let v = video(&cfg, 9);
    assert_eq!(a.forward(v.view(), 280.0).unwrap(), b.forward(v.view(), 280.0).unwrap());
    let c = ViscNet::new(ModelConfig { seed: 12, ..cfg }).unwrap();
    assert_ne!(a, c);
}

#[test]
fn checkpoint_bytes_are_stable() {
    let net = ViscNet::new(tiny(EncoderKind::Joint, Pooling::ClassToken)).unwrap();
    let meta: std::collections::BTreeMap<String, String> =
        (0..6).map(|i| (format!("key{i}"), format!("value{i}"))).collect();
    assert_eq!(net.to_bytes(&meta).unwrap(), net.to_bytes(&meta).unwrap());
}

#[test]
fn centering_removes_a_static_background() {
    let cfg = tiny(EncoderKind::Joint, Pooling::Mean);
    let net = ViscNet::new(cfg).unwrap();
    let still = Array4::from_shape_fn((4, 8, 8, 3), |(_, h, w, c)| (h * 31 + w * 7 + c) as u8);
    let toks = net.tubelet_embed(still.view()).unwrap();
    for (i, row) in toks.tokens.rows().into_iter().enumerate() {
        let want = &net.patch.bias.value.row(0) + &net.pos.value.row(i);
        assert!((&row - &want).iter().all(|d| d.abs() < 1e-6));
    }
    let unit = ViscNet::new(ModelConfig {
        input_norm: InputNorm::Unit,
        ..cfg
    })
    .unwrap();
    let toks = unit.tubelet_embed(still.view()).unwrap();
    assert!(
        (&toks.tokens.row(1) - &(&unit.patch.bias.value.row(0) + &unit.pos.value.row(1)))
            .iter()
            .any(|d| d.abs() > 1e-3)
    );
}

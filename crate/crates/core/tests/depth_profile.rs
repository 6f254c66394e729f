use depthcue_core::depth::{
    depth_from_raw, resample_depth, two_layer_from_map, DepthKind, DepthMap, OTSU_BINS,
};
use depthcue_core::retarget::depth_weight;
use depthcue_core::depth::{DepthProfile, TwoLayerProfile};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Exhaustive Otsu: tries every bin boundary and compares between-class
/// variances as exact rationals. Earliest maximum wins.
fn brute_force_threshold(values: &[f64]) -> Option<usize> {
    let mut hist = vec![0u128; OTSU_BINS];
    for &v in values {
        let bin = ((v * OTSU_BINS as f64).floor() as usize).min(OTSU_BINS - 1);
        hist[bin] += 1;
    }
    let n: u128 = hist.iter().sum();
    let total: u128 = hist.iter().enumerate().map(|(i, &h)| i as u128 * h).sum();
    // between(t) = (S_b W_f - S_f W_b)^2 / (W_b W_f n^2); compare numerators
    // and denominators by cross multiplication.
    let mut best: Option<(usize, u128, u128)> = None;
    for t in 0..OTSU_BINS - 1 {
        let w_b: u128 = hist[..=t].iter().sum();
        let s_b: u128 = hist[..=t].iter().enumerate().map(|(i, &h)| i as u128 * h).sum();
        let (w_f, s_f) = (n - w_b, total - s_b);
        if w_b == 0 || w_f == 0 {
            continue;
        }
        let diff = (s_f * w_b).abs_diff(s_b * w_f);
        let num = diff * diff;
        let den = w_b * w_f;
        let better = match best {
            None => true,
            Some((_, bn, bd)) => num * bd > bn * den,
        };
        if better {
            best = Some((t, num, den));
        }
    }
    best.map(|(t, _, _)| t)
}

fn normal(rng: &mut StdRng) -> f64 {
    // Irwin-Hall approximation, adequate for cluster shapes.
    (0..12).map(|_| rng.gen::<f64>()).sum::<f64>() - 6.0
}

fn bimodal_map(rng: &mut StdRng) -> DepthMap {
    let (w, h) = (rng.gen_range(16..=64), rng.gen_range(16..=64));
    let m0 = rng.gen_range(0.05..0.45);
    let m1 = rng.gen_range(0.55..0.95);
    let (s0, s1) = (rng.gen_range(0.01..0.08), rng.gen_range(0.01..0.08));
    let frac = rng.gen_range(0.2..0.8);
    let values = (0..w * h)
        .map(|_| {
            let v = if rng.gen::<f64>() < frac {
                m0 + s0 * normal(rng)
            } else {
                m1 + s1 * normal(rng)
            };
            v.clamp(0.0, 1.0)
        })
        .collect();
    DepthMap::new(w, h, values).unwrap()
}

#[test]
fn otsu_matches_exhaustive_search() {
    let mut rng = StdRng::seed_from_u64(50);
    for case in 0..50 {
        let map = bimodal_map(&mut rng);
        let t = brute_force_threshold(map.nearness()).unwrap();
        let profile = two_layer_from_map(&map).unwrap();
        let threshold = (t + 1) as f64 / OTSU_BINS as f64;
        assert_eq!(profile.threshold(), threshold, "case {case}");
        let expected: Vec<bool> = map.nearness().iter().map(|&d| d >= threshold).collect();
        assert_eq!(profile.mask(), &expected[..], "case {case}");
    }
}

#[test]
fn perfectly_bimodal_split() {
    let map = DepthMap::from_fn(10, 6, |x, _| if x < 5 { 0.1 } else { 0.9 });
    let p = two_layer_from_map(&map).unwrap();
    for (i, &fg) in p.mask().iter().enumerate() {
        assert_eq!(fg, i % 10 >= 5);
    }
    assert!((p.fg_nearness() - 0.9).abs() < 1e-12);
    assert!((p.bg_nearness() - 0.1).abs() < 1e-12);
}

#[test]
fn constant_map_has_no_separation() {
    let map = DepthMap::from_fn(5, 5, |_, _| 0.5);
    let err = two_layer_from_map(&map).unwrap_err();
    assert!(err.to_string().contains("no depth separation"));
}

#[test]
fn mask_is_invariant_under_positive_affine_raw_maps() {
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..20 {
        let (w, h) = (32, 24);
        // Integer-valued raw data keeps the affine images exactly representable.
        let raw: Vec<f64> = (0..w * h)
            .map(|_| {
                if rng.gen::<bool>() {
                    rng.gen_range(100..300) as f64
                } else {
                    rng.gen_range(600..900) as f64
                }
            })
            .collect();
        let a = [0.5, 2.5, 4.0, 1024.0][rng.gen_range(0..4)];
        let b = rng.gen_range(-50..50) as f64;
        let mapped: Vec<f64> = raw.iter().map(|r| a * r + b + 1000.0).collect();
        let m1 = depth_from_raw(w, h, &raw, DepthKind::Disparity).unwrap();
        let m2 = depth_from_raw(w, h, &mapped, DepthKind::Disparity).unwrap();
        let p1 = two_layer_from_map(&m1).unwrap();
        let p2 = two_layer_from_map(&m2).unwrap();
        assert_eq!(p1.mask(), p2.mask());
    }
}

#[test]
fn disparity_orientation() {
    let raw = [3.0, 9.0, 4.5, 7.0, 1.5, 8.0];
    let map = depth_from_raw(3, 2, &raw, DepthKind::Disparity).unwrap();
    assert_eq!(map.nearness()[1], 1.0);
    assert_eq!(map.nearness()[4], 0.0);
}

#[test]
fn inverse_depth_normalization() {
    let map = depth_from_raw(3, 1, &[1.0, 2.0, 3.0], DepthKind::Depth).unwrap();
    // 1/z = {1, 1/2, 1/3} -> {1, 1/4, 0}
    let expected = [1.0, 0.25, 0.0];
    for (v, e) in map.nearness().iter().zip(expected) {
        assert!((v - e).abs() < 1e-4);
    }
}

#[test]
fn depth_weight_endpoints_are_exact() {
    for gain in [0.0, 0.1, 0.3, 0.4, 0.75, 0.999] {
        let map = DepthMap::new(3, 1, vec![1.0, 0.0, 0.5]).unwrap();
        let w = depth_weight(&DepthProfile::Continuous(map), gain);
        assert_eq!(w.data(), &[1.0 + gain, 1.0 - gain, 1.0]);
    }
}

#[test]
fn two_layer_weight_uses_side_means() {
    let p = TwoLayerProfile::new(2, 1, vec![true, false], 0.8, 0.3).unwrap();
    let w = depth_weight(&DepthProfile::TwoLayer(p), 0.5);
    assert!((w.data()[0] - 1.3).abs() < 1e-15);
    assert!((w.data()[1] - 0.8).abs() < 1e-15);
}

proptest! {
    #[test]
    fn resampling_stays_within_input_range(
        (w, h, values) in (1usize..=12, 1usize..=12)
            .prop_flat_map(|(w, h)| (Just(w), Just(h), prop::collection::vec(0.0f64..=1.0, w * h))),
        tw in 1usize..=30,
        th in 1usize..=30,
    ) {
        let map = DepthMap::new(w, h, values.clone()).unwrap();
        let out = resample_depth(&map, tw, th).unwrap();
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(out.nearness().iter().all(|&v| v >= lo - 1e-6 && v <= hi + 1e-6));
    }

    #[test]
    fn resampling_preserves_constants(c in 0.0f64..=1.0, tw in 1usize..=40, th in 1usize..=40) {
        let map = DepthMap::from_fn(7, 5, |_, _| c);
        let out = resample_depth(&map, tw, th).unwrap();
        prop_assert!(out.nearness().iter().all(|&v| v == c));
    }

    #[test]
    fn weights_stay_in_band(d in 0.0f64..=1.0, gain in 0.0f64..1.0) {
        let map = DepthMap::new(1, 1, vec![d]).unwrap();
        let w = depth_weight(&DepthProfile::Continuous(map), gain).data()[0];
        prop_assert!(w >= 1.0 - gain - 1e-15 && w <= 1.0 + gain + 1e-15);
    }
}

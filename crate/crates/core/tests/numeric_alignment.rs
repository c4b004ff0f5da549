mod common;

use brainalign::alignment::{
    cka, hsic, layer_cka_heatmap, rdm_from_features, region_layer_rsa, rsa, LayerStack, RsaMode,
};
use brainalign::numeric::{apply_centering, gram_linear, pearson, ridge_solve, spearman};
use brainalign::{Mat, Rng};
use common::*;
use proptest::prelude::*;

#[test]
fn gram_is_psd() {
    let mut rng = Rng::new(11);
    for _ in 0..100 {
        let m = 1 + rng.below(8);
        let d = 1 + rng.below(8);
        let a = rand_mat(&mut rng, m, d);
        let k = gram_linear(&a);
        for _ in 0..50 {
            let v = rand_mat(&mut rng, m, 1);
            let q = v.t_matmul(&k.matmul(&v).unwrap()).unwrap()[(0, 0)];
            assert!(q >= -1e-8, "vᵀKv = {q}");
        }
        for i in 0..m {
            assert!(k[(i, i)] >= 0.0);
        }
    }
}

#[test]
fn centering_matches_explicit_h_and_is_idempotent() {
    let mut rng = Rng::new(12);
    for _ in 0..30 {
        let m = 2 + rng.below(10);
        let a = rand_mat(&mut rng, m, 3);
        let k = gram_linear(&a);
        let c = apply_centering(&k).unwrap();
        let h = Mat::from_fn(m, m, |i, j| if i == j { 1.0 } else { 0.0 } - 1.0 / m as f64);
        let explicit = naive_matmul(&naive_matmul(&h, &k), &h);
        assert!(c.sub(&explicit).unwrap().max_abs() < 1e-9);
        let cc = apply_centering(&c).unwrap();
        assert!(cc.sub(&c).unwrap().max_abs() < 1e-9);
        for i in 0..m {
            let rs: f64 = c.row(i).iter().sum();
            let cs: f64 = c.col(i).iter().sum();
            assert!(rs.abs() < 1e-9 && cs.abs() < 1e-9);
            for j in 0..m {
                assert!((c[(i, j)] - c[(j, i)]).abs() < 1e-9);
            }
        }
    }
}

proptest! {
    #[test]
    fn correlations_symmetric_and_affine_invariant(
        xs in prop::collection::vec(-10.0f64..10.0, 5..20),
        scale in 0.1f64..10.0,
        shift in -5.0f64..5.0,
        seed in 0u64..1000,
    ) {
        let mut rng = Rng::new(seed);
        let ys: Vec<f64> = xs.iter().map(|x| 0.3 * x + rng.normal()).collect();
        prop_assume!(pearson(&xs, &ys).is_ok());
        let r = pearson(&xs, &ys).unwrap();
        prop_assert!((r - pearson(&ys, &xs).unwrap()).abs() < 1e-12);
        prop_assert!((r - pearson_direct(&xs, &ys)).abs() < 1e-12);
        let xt: Vec<f64> = xs.iter().map(|x| scale * x + shift).collect();
        prop_assert!((r - pearson(&xt, &ys).unwrap()).abs() < 1e-12);
        let s = spearman(&xs, &ys).unwrap();
        prop_assert!((s - spearman(&ys, &xs).unwrap()).abs() < 1e-12);
        prop_assert!((s - spearman(&xt, &ys).unwrap()).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&r) && (-1.0..=1.0).contains(&s));
    }
}

#[test]
fn ridge_matches_qr_oracle() {
    let mut rng = Rng::new(13);
    for _ in 0..20 {
        let n = 10 + rng.below(10);
        let p = 2 + rng.below(5);
        let x = rand_mat(&mut rng, n, p);
        let y = rand_mat(&mut rng, n, 3);
        let w = ridge_solve(&x, &y, 0.0).unwrap();
        let oracle = qr_least_squares(&x, &y);
        let rel = w.sub(&oracle).unwrap().frobenius_norm() / oracle.frobenius_norm();
        assert!(rel < 1e-8, "relative error {rel}");
    }
}

#[test]
fn rng_reruns_are_bit_identical() {
    let a: Mat = Rng::new(99).child("x").normal_matrix(6, 7, 1.0);
    let b: Mat = Rng::new(99).child("x").normal_matrix(6, 7, 1.0);
    let bits = |m: &Mat| m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn hsic_and_cka_hand_instance_match_explicit_oracle() {
    let a = Mat::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
    let b = Mat::from_rows(&[[2.0, 1.0], [0.0, 0.0], [1.0, 2.0]]).unwrap();
    for (x, y) in [(&a, &b), (&a, &a), (&b, &b)] {
        assert!((hsic(x, y).unwrap() - hsic_explicit(x, y)).abs() < 1e-12);
    }
    let want = hsic_explicit(&a, &b) / (hsic_explicit(&a, &a) * hsic_explicit(&b, &b)).sqrt();
    assert!((cka(&a, &b).unwrap() - want).abs() < 1e-12);
}

#[test]
fn hsic_matches_oracle_on_random_instances() {
    let mut rng = Rng::new(14);
    for _ in 0..50 {
        let m = 2 + rng.below(15);
        let a = { let d = 1 + rng.below(6); rand_mat(&mut rng, m, d) };
        let b = { let d = 1 + rng.below(6); rand_mat(&mut rng, m, d) };
        assert!((hsic(&a, &b).unwrap() - hsic_explicit(&a, &b)).abs() < 1e-12);
        assert!(hsic(&a, &a).unwrap() >= -1e-10);
        let c = cka(&a, &b).unwrap();
        assert!((c - cka_explicit(&a, &b)).abs() < 1e-12);
        assert!((c - cka(&b, &a).unwrap()).abs() < 1e-12);
        assert!((-1e-9..=1.0 + 1e-9).contains(&c));
    }
}

#[test]
fn cka_invariances() {
    let mut rng = Rng::new(15);
    for _ in 0..50 {
        let m = 3 + rng.below(10);
        let d = 2 + rng.below(5);
        let a = rand_mat(&mut rng, m, d);
        assert!((cka(&a, &a).unwrap() - 1.0).abs() < 1e-9);
        for c in [0.1, -2.0, 7.0] {
            assert!((cka(&a, &a.scale(c)).unwrap() - 1.0).abs() < 1e-9);
        }
        let q = random_orthogonal(&mut rng, d);
        assert!((cka(&a, &a.matmul(&q).unwrap()).unwrap() - 1.0).abs() < 1e-9);
        let b = rand_mat(&mut rng, m, 3);
        let base = cka(&a, &b).unwrap();
        assert!((cka(&a.scale(3.5), &b).unwrap() - base).abs() < 1e-9);
        assert!((cka(&a.matmul(&q).unwrap(), &b).unwrap() - base).abs() < 1e-9);
    }
}

#[test]
fn rdm_matches_double_loop() {
    let mut rng = Rng::new(16);
    let f = rand_mat(&mut rng, 3, 4);
    let r = rdm_from_features(&f).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { 0.0 } else { 1.0 - pearson_direct(f.row(i), f.row(j)) };
            assert!((r.values()[(i, j)] - want).abs() < 1e-12);
        }
    }
}

#[test]
fn rsa_of_independent_features_is_small() {
    for seed in 0..20 {
        let mut rng = Rng::new(1000 + seed);
        let r1 = rdm_from_features(&rand_mat(&mut rng, 20, 10)).unwrap();
        let r2 = rdm_from_features(&rand_mat(&mut rng, 20, 10)).unwrap();
        let s = rsa(&r1, &r2).unwrap();
        assert!(s.abs() < 0.35, "seed {seed}: {s}");
    }
}

#[test]
fn heatmap_shows_planted_blocks() {
    // layers 1-3 share one latent source, layers 4-6 another
    let mut rng = Rng::new(17);
    let n = 40;
    let za = rand_mat(&mut rng, n, 4);
    let zb = rand_mat(&mut rng, n, 4);
    let layers: Vec<Mat> = (0..6)
        .map(|k| {
            let z = if k < 3 { &za } else { &zb };
            let mix = rand_mat(&mut rng, 4, 8);
            let mut l = z.matmul(&mix).unwrap();
            l.axpy(0.3, &rand_mat(&mut rng, n, 8)).unwrap();
            l
        })
        .collect();
    let stack = LayerStack::new((1..=6).collect(), layers).unwrap();
    let h = layer_cka_heatmap(&stack).unwrap();
    let (mut within, mut nw, mut across, mut na) = (0.0, 0, 0.0, 0);
    for i in 0..6 {
        for j in 0..6 {
            if i == j {
                continue;
            }
            if (i < 3) == (j < 3) {
                within += h[(i, j)];
                nw += 1;
            } else {
                across += h[(i, j)];
                na += 1;
            }
        }
    }
    assert!(within / nw as f64 > across / na as f64);
}

#[test]
fn raw_rsa_ignores_per_stimulus_shifts() {
    let mut rng = Rng::new(18);
    let n = 15;
    let stack = LayerStack::new(vec![1, 2], vec![rand_mat(&mut rng, n, 6), rand_mat(&mut rng, n, 6)]).unwrap();
    let region = rand_mat(&mut rng, n, 9);
    let shifted = Mat::from_fn(n, 9, |i, j| region[(i, j)] + 3.0 * i as f64 - 1.0);
    let a = region_layer_rsa(&[("r".into(), region)], &stack, RsaMode::Raw).unwrap();
    let b = region_layer_rsa(&[("r".into(), shifted)], &stack, RsaMode::Raw).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x.similarity - y.similarity).abs() < 1e-9);
    }
}

#[test]
fn shuffled_labels_give_null_rsa() {
    for seed in 0..20 {
        let mut rng = Rng::new(2000 + seed);
        let n = 20;
        let z = rand_mat(&mut rng, n, 3);
        let layer = z.matmul(&rand_mat(&mut rng, 3, 8)).unwrap();
        let region = z.matmul(&rand_mat(&mut rng, 3, 12)).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut perm);
        let shuffled = region.select_rows(&perm).unwrap();
        let stack = LayerStack::new(vec![1], vec![layer]).unwrap();
        let rows = region_layer_rsa(&[("r".into(), shuffled)], &stack, RsaMode::Raw).unwrap();
        assert!(rows[0].similarity.abs() < 0.35, "seed {seed}: {}", rows[0].similarity);
    }
}

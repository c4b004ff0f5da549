mod common;

use brainalign::data::{synth_generate, Region, RegionMask, SynthConfig};
use brainalign::eval::*;
use brainalign::model::{init_params, ModelConfig};
use brainalign::numeric::ridge_solve;
use brainalign::train::*;
use brainalign::{Error, Mat, Rng};
use common::*;

fn tiny() -> (SynthConfig, ModelConfig) {
    let s = SynthConfig { n_train: 40, n_test: 12, n_low: 12, n_high: 9, m_img: 3, d_img: 4, m_text: 2, d_text: 4, ..SynthConfig::default() };
    let m = ModelConfig { n_s: 9, n_d: 21, latent_dim: 16, m_text: 2, d_text: 4, m_img: 3, d_img: 4, ..ModelConfig::default() };
    (s, m)
}

fn tiny_data(seed: u64) -> TrainData {
    let (s, _) = tiny();
    let ds = synth_generate(&SynthConfig { seed, ..s }).unwrap();
    TrainData::from_dataset(&ds, 2, 6).unwrap()
}

fn tcfg(epochs: usize) -> TrainConfig {
    TrainConfig { epochs, batch_size: 8, learning_rate: 1e-3, ..TrainConfig::default() }
}

#[test]
fn zero_learning_rate_keeps_initial_params() {
    let (_, cfg) = tiny();
    let data = tiny_data(0);
    let t = TrainConfig { learning_rate: 0.0, seed: 7, ..tcfg(3) };
    let (params, _) = train(&data, &cfg, &t, BranchSet::FULL).unwrap();
    let init = init_params(&cfg, &Rng::new(7).child("init"), true, true);
    assert_eq!(params, init);
}

#[test]
fn same_seed_gives_identical_runs() {
    let (_, cfg) = tiny();
    let data = tiny_data(1);
    let (p1, r1) = train(&data, &cfg, &tcfg(3), BranchSet::FULL).unwrap();
    let (p2, r2) = train(&data, &cfg, &tcfg(3), BranchSet::FULL).unwrap();
    assert_eq!(p1, p2);
    assert_eq!(r1, r2);
    assert_eq!(r1.to_csv(), r2.to_csv());
    let (p3, _) = train(&data, &cfg, &TrainConfig { seed: 1, ..tcfg(3) }, BranchSet::FULL).unwrap();
    assert_ne!(p1, p3);
}

#[test]
fn components_sum_to_totals() {
    let (_, cfg) = tiny();
    let data = tiny_data(2);
    for separate in [false, true] {
        let t = TrainConfig { separate_branches: separate, batch_text: 5, batch_image: 7, ..tcfg(3) };
        let (_, report) = train(&data, &cfg, &t, BranchSet::FULL).unwrap();
        assert_eq!(report.epochs.len(), 3);
        for e in &report.epochs {
            for c in [&e.train, &e.validation] {
                assert!(c.is_finite());
                let g = |k: &str| c.get(k).unwrap();
                assert!((g("text.total") - g("text.mg") - g("text.mse_recon")).abs() < 1e-9);
                assert!((g("text.mg") - g("text.cka") - g("text.sims")).abs() < 1e-9);
                let image = g("image.mg") + g("image.crec") + g("image.mse_semantic") + g("image.mse_detail");
                assert!((g("image.total") - image).abs() < 1e-9);
                assert!((g("image.mg") - g("image.cka") - g("image.sims")).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn loss_csv_layout() {
    let (_, cfg) = tiny();
    let (_, report) = train(&tiny_data(3), &cfg, &tcfg(2), BranchSet::FULL).unwrap();
    let csv = report.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("epoch,split,component,value"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2 * 2 * 12);
    assert!(rows.iter().all(|r| r.len() == 4 && r[3].parse::<f64>().is_ok()));
    assert!(rows.iter().any(|r| r[0] == "2" && r[1] == "validation" && r[2] == "image.crec"));
}

#[test]
fn zero_crec_weight_matches_no_crec_variant() {
    let (_, cfg) = tiny();
    let data = tiny_data(4);
    let t0 = TrainConfig { w_crec: 0.0, ..tcfg(3) };
    let a = run_ablation(Variant::Full, &data, &cfg, &t0).unwrap();
    let b = run_ablation(Variant::FullNoCrec, &data, &cfg, &tcfg(3)).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.report, b.report);
    assert_eq!(a.metrics, b.metrics);
}

#[test]
fn text_only_has_no_image_metrics() {
    let (_, cfg) = tiny();
    let data = tiny_data(5);
    let r = run_ablation(Variant::TextOnly, &data, &cfg, &tcfg(2)).unwrap();
    assert!(r.params.image.is_none());
    assert!(r.metrics.two_way_image.is_none() && r.metrics.pixcorr.is_none() && r.metrics.ssim.is_none());
    assert!(r.metrics.two_way_text.is_some());
    assert!(r.report.epochs[0].validation.get("image.total").is_none());
    let full = run_ablation(Variant::Full, &data, &cfg, &tcfg(2)).unwrap();
    let (p, rep) = train(&data, &cfg, &tcfg(2), BranchSet::FULL).unwrap();
    assert_eq!(full.params, p);
    assert_eq!(full.report, rep);
    // text parameters never see image gradients
    assert_eq!(full.params.text, r.params.text);
}

#[test]
fn single_path_variants_train() {
    let (_, cfg) = tiny();
    let data = tiny_data(6);
    for v in [Variant::TextSemantic, Variant::TextDetail] {
        let r = run_ablation(v, &data, &cfg, &tcfg(1)).unwrap();
        assert!(r.metrics.two_way_image.is_some() && r.metrics.pixcorr.is_some());
        // 3×4 token grids are smaller than the SSIM window
        assert!(r.metrics.ssim.is_none());
        let c = &r.report.epochs[0].train;
        assert_eq!(c.get("image.crec"), Some(0.0));
        let other = if v == Variant::TextSemantic { "image.mse_detail" } else { "image.mse_semantic" };
        assert_eq!(c.get(other), Some(0.0));
    }
}

#[test]
fn dimension_mismatch_is_rejected() {
    let (_, cfg) = tiny();
    let data = tiny_data(7);
    let wrong = ModelConfig { n_d: 22, ..cfg };
    assert!(matches!(train(&data, &wrong, &tcfg(1), BranchSet::FULL), Err(Error::ShapeMismatch(_))));
    assert!(train(&data, &cfg, &TrainConfig { epochs: 0, ..tcfg(1) }, BranchSet::FULL).is_err());
}

#[test]
fn layer_scan_rows_and_ranking() {
    let (s, cfg) = tiny();
    let ds = synth_generate(&s).unwrap();
    let rows = layer_scan(&ds, &cfg, &tcfg(2), &[(1, 3), (4, 7)]).unwrap();
    let labels: Vec<String> = rows.iter().map(|r| r.label()).collect();
    assert_eq!(labels, ["(1-3)", "(1-3)+final", "(4-7)", "(4-7)+final"]);
    let csv = layer_scan_csv(&rows);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "rank,range,two_way_image");
    assert_eq!(lines.len(), 5);
    let vals: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert!(vals.windows(2).all(|w| w[0] >= w[1]));
    assert!(layer_scan(&ds, &cfg, &tcfg(1), &[(2, 8)]).is_err());
}

#[test]
fn ssim_matches_window_loop() {
    for seed in 0..5 {
        let mut rng = Rng::new(seed);
        let a: Mat = rng.uniform_matrix(16, 16, 0.0, 1.0);
        let b = a.add(&rng.normal_matrix(16, 16, 0.2)).unwrap();
        let fast = ssim(&a, &b, 1.0).unwrap();
        let slow = ssim_loop(&a, &b, 1.0);
        assert!((fast - slow).abs() < 1e-10, "{fast} vs {slow}");
        assert!((fast - ssim(&b, &a, 1.0).unwrap()).abs() < 1e-12);
        assert!((ssim(&a, &a, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(ssim(&a, &a.map(|v| v + 0.5), 1.0).unwrap() < 1.0);
    }
    let small: Mat = Mat::zeros(10, 16);
    assert!(matches!(ssim(&small, &small, 1.0), Err(Error::DegenerateInput(_))));
}

#[test]
fn pixcorr_is_affine_invariant() {
    let mut rng = Rng::new(9);
    let a: Vec<f64> = (0..30).map(|_| rng.normal()).collect();
    let b: Vec<f64> = a.iter().map(|v| v + rng.normal()).collect();
    let base = pixcorr(&a, &b).unwrap();
    let a2: Vec<f64> = a.iter().map(|v| 3.0 * v - 2.0).collect();
    let b2: Vec<f64> = b.iter().map(|v| 0.5 * v + 7.0).collect();
    assert!((pixcorr(&a2, &b2).unwrap() - base).abs() < 1e-12);
    assert!((pixcorr(&a, &a2).unwrap() - 1.0).abs() < 1e-12);
    let neg: Vec<f64> = a.iter().map(|v| -v).collect();
    assert!((pixcorr(&a, &neg).unwrap() + 1.0).abs() < 1e-12);
    assert!((pixcorr::<f64>(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-12);
    assert!(matches!(pixcorr::<f64>(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(Error::DegenerateInput(_))));
}

#[test]
fn identification_null_and_permutation_invariance() {
    let mut mean = 0.0;
    for seed in 0..20 {
        let mut rng = Rng::new(seed);
        let p: Mat = rng.normal_matrix(50, 10, 1.0);
        let t: Mat = rng.normal_matrix(50, 10, 1.0);
        mean += two_way_identification(&p, &t, Similarity::Pearson).unwrap() / 20.0;
    }
    assert!((mean - 50.0).abs() <= 5.0, "null mean {mean}");

    let mut rng = Rng::new(21);
    let t: Mat = rng.normal_matrix(12, 6, 1.0);
    let p = t.add(&rng.normal_matrix(12, 6, 1.0)).unwrap();
    let mut perm: Vec<usize> = (0..12).collect();
    rng.shuffle(&mut perm);
    for sim in [Similarity::Pearson, Similarity::Cosine] {
        let base = two_way_identification(&p, &t, sim).unwrap();
        let shuffled = two_way_identification(&p.select_rows(&perm).unwrap(), &t.select_rows(&perm).unwrap(), sim).unwrap();
        assert!((base - shuffled).abs() < 1e-12);
        assert_eq!(two_way_identification(&t, &t, sim).unwrap(), 100.0);
    }
}

#[test]
fn identification_counts_single_matched_pair() {
    // prediction 0 matches its truth; every other prediction is the next
    // sample's truth, orthogonal to its own and tied with the rest
    let t: Mat = Mat::identity(4);
    let p = Mat::from_fn(4, 4, |i, j| if (i == 0 && j == 0) || (i > 0 && j == (i + 1) % 4) { 1.0 } else { 0.0 });
    let score = two_way_identification(&p, &t, Similarity::Cosine).unwrap();
    // sample 0: 3 wins; samples 1..3: one loss and two ties each
    let by_hand = 100.0 * (3.0 + 3.0 * 1.0) / 12.0;
    assert!((score - by_hand).abs() < 1e-12, "{score}");
}

#[test]
fn lasso_satisfies_kkt() {
    for seed in 0..20 {
        let mut rng = Rng::new(seed);
        let (n, p) = (30 + seed as usize, 8);
        let x: Mat = rng.normal_matrix(n, p, 1.0).map(|v| 2.0 * v + 1.0);
        let truth: Vec<f64> = (0..p).map(|j| if j % 3 == 0 { rng.normal() } else { 0.0 }).collect();
        let y: Vec<f64> = (0..n).map(|i| dot_row(&x, i, &truth) + 0.3 * rng.normal()).collect();
        let lambda = 0.02 + 0.1 * rng.unit();
        let fit = lasso_fit(&x, &y, lambda).unwrap();
        assert!(fit.warning.is_none());
        let v = lasso_kkt_violation(&x, &y, &fit.beta, lambda);
        assert!(v < 1e-6, "seed {seed}: violation {v}");
    }
}

fn dot_row(x: &Mat, i: usize, b: &[f64]) -> f64 {
    x.row(i).iter().zip(b).map(|(a, c)| a * c).sum()
}

#[test]
fn lasso_on_orthonormal_design_soft_thresholds() {
    let x = Mat::from_rows(&[[1.0, 1.0], [-1.0, 1.0], [1.0, -1.0], [-1.0, -1.0]]).unwrap();
    let y = [3.0, -1.0, 2.0, 0.5];
    let lambda = 0.4;
    let fit = lasso_fit(&x, &y, lambda).unwrap();
    // n⁻¹ x_jᵀ y with ȳ removed: (3 + 1 + 2 - 0.5)/4 and (3 - 1 - 2 - 0.5)/4
    let ols = [5.5 / 4.0, -0.5 / 4.0];
    for j in 0..2 {
        assert!((fit.beta[j] - soft_threshold(ols[j], lambda)).abs() < 1e-10);
    }
    assert_eq!(fit.beta[1], 0.0);
    assert!((fit.beta[0] - 0.975).abs() < 1e-10);
}

#[test]
fn lasso_kill_condition() {
    let mut rng = Rng::new(30);
    let x: Mat = rng.normal_matrix(25, 6, 1.0);
    let y: Vec<f64> = (0..25).map(|_| rng.normal()).collect();
    let design = LassoDesign::new(&x).unwrap();
    let xs = design.standardized();
    let ym = y.iter().sum::<f64>() / 25.0;
    let lmax = (0..6)
        .map(|j| (0..25).map(|i| xs[(i, j)] * (y[i] - ym)).sum::<f64>().abs() / 25.0)
        .fold(0.0, f64::max);
    let fit = design.fit(&y, lmax).unwrap();
    assert!(fit.beta.iter().all(|&b| b == 0.0));
    assert!((fit.intercept - ym).abs() < 1e-12);
    let below = design.fit(&y, 0.9 * lmax).unwrap();
    assert!(below.beta.iter().any(|&b| b != 0.0));
}

#[test]
fn lasso_approaches_least_squares() {
    let mut rng = Rng::new(31);
    let (n, p) = (60, 5);
    let x: Mat = rng.normal_matrix(n, p, 1.0);
    let y: Vec<f64> = (0..n).map(|i| x[(i, 0)] - 2.0 * x[(i, 3)] + 0.1 * rng.normal()).collect();
    let fit = lasso_fit(&x, &y, 1e-10).unwrap();
    let mx = x.col_means();
    let ym = y.iter().sum::<f64>() / n as f64;
    let xc = Mat::from_fn(n, p, |i, j| x[(i, j)] - mx[j]);
    let yc = Mat::from_fn(n, 1, |i, _| y[i] - ym);
    let w = ridge_solve(&xc, &yc, 1e-10).unwrap();
    for j in 0..p {
        assert!((fit.beta[j] - w[(j, 0)]).abs() < 1e-4, "coef {j}: {} vs {}", fit.beta[j], w[(j, 0)]);
    }
}

#[test]
fn backproject_zero_features() {
    let mut rng = Rng::new(40);
    let v: Mat = rng.normal_matrix(30, 10, 1.0);
    let mask = RegionMask::blocks(6, 4).unwrap();
    let b = backproject(&Mat::zeros(30, 3), &v, &mask, 0.01).unwrap();
    assert!(b.per_voxel.iter().all(|&x| x == 0.0));
    assert_eq!(b.region_mean(Region::LowLevel), 0.0);
    assert_eq!(b.region_mean(Region::HighLevel), 0.0);
    let csv = b.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "region,mean_abs_beta");
    for (line, name) in lines[1..].iter().zip(["low_level", "high_level"]) {
        let (r, v) = line.split_once(',').unwrap();
        assert_eq!(r, name);
        assert_eq!(v.parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn backproject_planted_voxel_dominates() {
    let mut rng = Rng::new(41);
    let v: Mat = rng.normal_matrix(60, 12, 1.0);
    let mask = RegionMask::blocks(7, 5).unwrap();
    let feats = Mat::from_fn(60, 2, |i, j| if j == 0 { v[(i, 2)] } else { 3.0 * v[(i, 2)] - 1.0 });
    let b = backproject(&feats, &v, &mask, 1e-3).unwrap();
    let (low, high) = (b.region_mean(Region::LowLevel), b.region_mean(Region::HighLevel));
    assert!(low >= 10.0 * high, "low {low} high {high}");
    assert!(b.unconverged.is_empty());
    let bad = backproject(&feats, &v.select_rows(&[0, 1]).unwrap(), &mask, 1e-3);
    assert!(matches!(bad, Err(Error::ShapeMismatch(_))));
}

#[test]
fn adam_first_step_closed_form() {
    let cfg = AdamConfig { learning_rate: 0.1, ..AdamConfig::default() };
    let (_, m) = tiny();
    let mut params = init_params(&m, &Rng::new(0), false, true).zeros_like();
    let mut grads = params.clone();
    for (_, g) in grads.tensors_mut() {
        g.as_mut_slice().fill(1.0);
    }
    let mut state = AdamState::new(&params);
    adam_step(&mut params, &grads, &mut state, &cfg).unwrap();
    for (_, p) in params.tensors() {
        assert!(p.as_slice().iter().all(|&v| (v + 0.1).abs() < 1e-6));
    }
}

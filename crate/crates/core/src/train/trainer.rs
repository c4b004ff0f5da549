use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::losses::{AnchorMode, LossWeights};
use crate::model::{init_params, ImagePaths, ModelConfig, ModelParams, Mode};
use crate::numeric::Rng;
use crate::train::adam::{adam_step, AdamConfig, AdamState};
use crate::train::objective::{loss_and_grads, Batch, Components, Objective};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
    pub w_cka: f64,
    pub w_sims: f64,
    pub w_crec: f64,
    pub anchor: AnchorMode,
    /// Detail target layers `layer_lo..=layer_hi`.
    pub layer_lo: usize,
    pub layer_hi: usize,
    /// Train the branches in independent loops with their own batch sizes.
    pub separate_branches: bool,
    pub batch_text: usize,
    pub batch_image: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            batch_size: 32,
            learning_rate: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
            w_cka: 1.0,
            w_sims: 1.0,
            w_crec: 1.0,
            anchor: AnchorMode::OwnFirstToken,
            layer_lo: 2,
            layer_hi: 6,
            separate_branches: false,
            batch_text: 32,
            batch_image: 32,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::RangeError(m.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if self.batch_size == 0 || self.batch_text == 0 || self.batch_image == 0 {
            return bad("batch sizes must be >= 1");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and >= 0");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("adam betas must lie in [0, 1)");
        }
        if !(self.eps > 0.0) {
            return bad("eps must be > 0");
        }
        for (k, w) in [("w_cka", self.w_cka), ("w_sims", self.w_sims), ("w_crec", self.w_crec)] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::RangeError(format!("{k} must be finite and >= 0")));
            }
        }
        if self.layer_lo > self.layer_hi {
            return bad("layer_lo must not exceed layer_hi");
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig { learning_rate: self.learning_rate, beta1: self.beta1, beta2: self.beta2, eps: self.eps }
    }

    pub fn objective(&self) -> Objective {
        Objective {
            anchor: self.anchor,
            weights: LossWeights { cka: self.w_cka, sims: self.w_sims, crec: self.w_crec },
        }
    }
}

/// Which branches and image paths a run trains.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BranchSet {
    pub text: bool,
    /// `None` disables the image branch.
    pub image: Option<ImagePaths>,
}

impl BranchSet {
    pub const FULL: BranchSet = BranchSet { text: true, image: Some(ImagePaths::FULL) };
}

/// Training and validation splits.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainData {
    pub train: Batch,
    pub test: Batch,
}

impl TrainData {
    /// Targets from the dataset with detail layers `lo..=hi`.
    pub fn from_dataset(ds: &Dataset, lo: usize, hi: usize) -> Result<Self> {
        let (f_s, f_d) = ds.fmri()?;
        let t = ds.image_targets(lo, hi)?;
        let all = Batch {
            f_s,
            f_d,
            e_t: ds.text_targets()?,
            e_fused: t.fused,
            e_semantic: t.semantic,
            e_detail: t.detail,
        };
        Self::split(&all, ds)
    }

    pub fn split(all: &Batch, ds: &Dataset) -> Result<Self> {
        if ds.n_test == 0 {
            return Err(Error::degenerate("dataset has no test split for validation"));
        }
        Ok(TrainData { train: all.select(&ds.train_indices())?, test: all.select(&ds.test_indices())? })
    }

    fn check(&self, cfg: &ModelConfig) -> Result<()> {
        let b = &self.train;
        let dims = [
            ("F_S", b.f_s.cols(), cfg.n_s),
            ("F_D", b.f_d.cols(), cfg.n_d),
            ("E_T", b.e_t.cols(), cfg.text_flat()),
            ("E_I", b.e_fused.cols(), cfg.image_flat()),
            ("e_IS", b.e_semantic.cols(), cfg.image_flat()),
            ("e_ID", b.e_detail.cols(), cfg.image_flat()),
        ];
        for (name, got, want) in dims {
            if got != want {
                return Err(Error::shape(format!("{name} has width {got}, model config expects {want}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochLosses {
    pub epoch: usize,
    pub train: Components,
    pub validation: Components,
}

/// Loss history of a run. Equality ignores the wall-clock time.
#[derive(Clone, Debug)]
pub struct TrainReport {
    pub epochs: Vec<EpochLosses>,
    pub wall_clock_secs: f64,
}

impl PartialEq for TrainReport {
    fn eq(&self, other: &Self) -> bool {
        self.epochs == other.epochs
    }
}

impl TrainReport {
    /// Validation value of `key` per epoch.
    pub fn validation_series(&self, key: &str) -> Vec<f64> {
        self.epochs.iter().filter_map(|e| e.validation.get(key)).collect()
    }

    /// `epoch,split,component,value` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,split,component,value\n");
        for e in &self.epochs {
            for (split, comps) in [("train", &e.train), ("validation", &e.validation)] {
                for (k, v) in &comps.0 {
                    out.push_str(&format!("{},{split},{k},{}\n", e.epoch, crate::alignment::format_sig9(*v)));
                }
            }
        }
        out
    }
}

fn run_epoch(
    params: &mut ModelParams,
    adam: &mut AdamState,
    cfg: &ModelConfig,
    tcfg: &TrainConfig,
    data: &Batch,
    paths: ImagePaths,
    batch_size: usize,
    rng: &Rng,
    epoch: usize,
) -> Result<Components> {
    let mut order: Vec<usize> = (0..data.rows()).collect();
    rng.child_indexed("shuffle", epoch as u64).shuffle(&mut order);
    let obj = tcfg.objective();
    let adam_cfg = tcfg.adam();
    let mut acc = Components::default();
    for chunk in order.chunks(batch_size) {
        let batch = data.select(chunk)?;
        let step_rng = rng.child_indexed("step", adam.t + 1);
        let r = loss_and_grads(params, cfg, &batch, paths, Mode::Train(&step_rng), &obj)?;
        if !r.total.is_finite() {
            return Err(Error::numerical(format!("non-finite loss at epoch {epoch}")));
        }
        adam_step(params, &r.grads, adam, &adam_cfg)?;
        acc.add_scaled(&r.components, chunk.len() as f64);
    }
    acc.scale(1.0 / data.rows() as f64);
    Ok(acc)
}

/// Validation losses in inference mode.
pub fn evaluate_losses(
    params: &ModelParams,
    cfg: &ModelConfig,
    batch: &Batch,
    paths: ImagePaths,
    obj: &Objective,
) -> Result<Components> {
    Ok(loss_and_grads(params, cfg, batch, paths, Mode::Infer, obj)?.components)
}

fn sub_params(params: &ModelParams, text: bool, image: bool) -> ModelParams {
    ModelParams {
        text: if text { params.text.clone() } else { None },
        image: if image { params.image.clone() } else { None },
    }
}

/// Trains the requested branches. Initialisation, shuffling and dropout all
/// derive from `tcfg.seed`.
pub fn train(
    data: &TrainData,
    cfg: &ModelConfig,
    tcfg: &TrainConfig,
    branches: BranchSet,
) -> Result<(ModelParams, TrainReport)> {
    let start = Instant::now();
    cfg.validate()?;
    tcfg.validate()?;
    data.check(cfg)?;
    let paths = branches.image.unwrap_or(ImagePaths::BOTH);
    if let Some(p) = branches.image {
        p.validate()?;
    }
    if !branches.text && branches.image.is_none() {
        return Err(Error::InvalidState("no branch selected for training".into()));
    }
    let root = Rng::new(tcfg.seed);
    let mut params = init_params(cfg, &root.child("init"), branches.text, branches.image.is_some());
    let obj = tcfg.objective();
    let mut epochs = Vec::with_capacity(tcfg.epochs);

    if tcfg.separate_branches {
        let mut text = sub_params(&params, true, false);
        let mut image = sub_params(&params, false, true);
        let mut adam_t = AdamState::new(&text);
        let mut adam_i = AdamState::new(&image);
        let (rng_t, rng_i) = (root.child("text"), root.child("image"));
        for epoch in 1..=tcfg.epochs {
            let mut comps = Components::default();
            if branches.text {
                let c = run_epoch(&mut text, &mut adam_t, cfg, tcfg, &data.train, paths, tcfg.batch_text, &rng_t, epoch)?;
                comps.add_scaled(&c, 1.0);
            }
            if branches.image.is_some() {
                let c = run_epoch(&mut image, &mut adam_i, cfg, tcfg, &data.train, paths, tcfg.batch_image, &rng_i, epoch)?;
                comps.add_scaled(&c, 1.0);
            }
            let joined = ModelParams { text: text.text.clone(), image: image.image.clone() };
            let validation = evaluate_losses(&joined, cfg, &data.test, paths, &obj)?;
            epochs.push(EpochLosses { epoch, train: comps, validation });
        }
        params = ModelParams { text: text.text, image: image.image };
    } else {
        let mut adam = AdamState::new(&params);
        let rng = root.child("joint");
        for epoch in 1..=tcfg.epochs {
            let train = run_epoch(&mut params, &mut adam, cfg, tcfg, &data.train, paths, tcfg.batch_size, &rng, epoch)?;
            let validation = evaluate_losses(&params, cfg, &data.test, paths, &obj)?;
            epochs.push(EpochLosses { epoch, train, validation });
        }
    }
    for e in &epochs {
        if !e.train.is_finite() || !e.validation.is_finite() {
            return Err(Error::numerical(format!("non-finite recorded loss at epoch {}", e.epoch)));
        }
    }
    log::info!("trained {} epochs in {:.1}s", tcfg.epochs, start.elapsed().as_secs_f64());
    Ok((params, TrainReport { epochs, wall_clock_secs: start.elapsed().as_secs_f64() }))
}

use std::collections::BTreeMap;

use crate::error::Result;
use crate::losses::{image_total_loss, text_total_loss, AnchorMode, ImagePreds, ImageTargets, LossWeights};
use crate::model::{
    model_backward, model_forward, ImagePaths, ImageUpstream, ModelConfig, ModelParams, ModelUpstream, Mode,
    ParamGrads, TextUpstream,
};
use crate::Mat;

/// Inputs and targets for a set of stimuli, one row each.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub f_s: Mat,
    pub f_d: Mat,
    pub e_t: Mat,
    pub e_fused: Mat,
    pub e_semantic: Mat,
    pub e_detail: Mat,
}

impl Batch {
    pub fn rows(&self) -> usize {
        self.f_s.rows()
    }

    pub fn select(&self, idx: &[usize]) -> Result<Batch> {
        Ok(Batch {
            f_s: self.f_s.select_rows(idx)?,
            f_d: self.f_d.select_rows(idx)?,
            e_t: self.e_t.select_rows(idx)?,
            e_fused: self.e_fused.select_rows(idx)?,
            e_semantic: self.e_semantic.select_rows(idx)?,
            e_detail: self.e_detail.select_rows(idx)?,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Objective {
    pub anchor: AnchorMode,
    pub weights: LossWeights<f64>,
}

impl Default for Objective {
    fn default() -> Self {
        Objective { anchor: AnchorMode::default(), weights: LossWeights::default() }
    }
}

/// Named loss components, e.g. `image.total`, `text.cka`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Components(pub BTreeMap<String, f64>);

impl Components {
    pub fn get(&self, key: &str) -> Option<f64> {
        self.0.get(key).copied()
    }

    fn set(&mut self, key: &str, v: f64) {
        self.0.insert(key.to_string(), v);
    }

    /// `self += w · other`, key by key.
    pub fn add_scaled(&mut self, other: &Components, w: f64) {
        for (k, v) in &other.0 {
            *self.0.entry(k.clone()).or_insert(0.0) += w * v;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in self.0.values_mut() {
            *v *= s;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.values().all(|v| v.is_finite())
    }
}

/// Loss components and parameter gradients of one forward/backward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub components: Components,
    pub grads: ParamGrads,
    /// Sum of the branch totals.
    pub total: f64,
}

/// Forward, losses and reverse pass over whichever branches `params` holds.
pub fn loss_and_grads(
    params: &ModelParams,
    cfg: &ModelConfig,
    batch: &Batch,
    paths: ImagePaths,
    mode: Mode<'_>,
    obj: &Objective,
) -> Result<StepResult> {
    let out = model_forward(&batch.f_s, &batch.f_d, params, cfg, paths, mode)?;
    let mut c = Components::default();
    let mut total = 0.0;
    let text_loss = match &out.text {
        Some(t) => {
            let l = text_total_loss(&batch.e_t, &t.e_t_hat, &batch.f_s, &t.f_s_hat, cfg.m_text, obj.anchor, &obj.weights)?;
            c.set("text.total", l.value);
            c.set("text.mg", l.mg);
            c.set("text.cka", l.cka);
            c.set("text.sims", l.sims);
            c.set("text.mse_recon", l.mse_recon);
            total += l.value;
            Some(l)
        }
        None => None,
    };
    let image_loss = match &out.image {
        Some(o) => {
            let targets = ImageTargets {
                fused: &batch.e_fused,
                semantic: &batch.e_semantic,
                detail: &batch.e_detail,
                f_s: &batch.f_s,
                f_d: &batch.f_d,
            };
            let preds = ImagePreds {
                semantic: o.semantic.as_ref().map(|p| &p.e_hat),
                detail: o.detail.as_ref().map(|p| &p.e_hat),
                recons: o.recons.as_ref().map(|r| &r.recons),
            };
            let l = image_total_loss(targets, preds, cfg.m_img, obj.anchor, &obj.weights)?;
            c.set("image.total", l.value);
            c.set("image.mg", l.mg);
            c.set("image.cka", l.cka);
            c.set("image.sims", l.sims);
            c.set("image.crec", l.crec);
            c.set("image.mse_semantic", l.mse_semantic);
            c.set("image.mse_detail", l.mse_detail);
            total += l.value;
            Some(l)
        }
        None => None,
    };
    let up = ModelUpstream {
        text: text_loss.as_ref().map(|l| TextUpstream { e_t_hat: &l.grad_embedding, f_s_hat: &l.grad_recon }),
        image: image_loss.as_ref().map(|l| ImageUpstream {
            fused: None,
            semantic: l.grad_semantic.as_ref(),
            detail: l.grad_detail.as_ref(),
            recons: l.grad_recons.as_ref(),
        }),
    };
    let grads = model_backward(params, &out, up)?;
    Ok(StepResult { components: c, grads, total })
}

use crate::error::{Error, Result};
use crate::model::config::ModelConfig;
use crate::numeric::Rng;
use crate::Mat;

/// Weight `in × out` and bias `1 × out`.
#[derive(Clone, Debug, PartialEq)]
pub struct Affine {
    pub w: Mat,
    pub b: Mat,
}

impl Affine {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Affine {
            w: Mat::zeros(fan_in, fan_out),
            b: Mat::zeros(1, fan_out),
        }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn glorot(fan_in: usize, fan_out: usize, rng: &mut Rng) -> Self {
        let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
        Affine {
            w: rng.uniform_matrix(fan_in, fan_out, -a, a),
            b: Mat::zeros(1, fan_out),
        }
    }

    pub fn fan_in(&self) -> usize {
        self.w.rows()
    }

    pub fn fan_out(&self) -> usize {
        self.w.cols()
    }

    fn zeros_like(&self) -> Self {
        Affine::zeros(self.fan_in(), self.fan_out())
    }

    fn check(&self, name: &str, fan_in: usize, fan_out: usize) -> Result<()> {
        if self.w.shape() != (fan_in, fan_out) || self.b.shape() != (1, fan_out) {
            return Err(Error::shape(format!(
                "{name}: expected {fan_in}x{fan_out} weights, got {:?} and bias {:?}",
                self.w.shape(),
                self.b.shape()
            )));
        }
        Ok(())
    }
}

/// The two residual blocks applied to a latent code.
#[derive(Clone, Debug, PartialEq)]
pub struct Backbone {
    pub blocks: [Affine; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct TextBranch {
    pub enc_s: Affine,
    pub dec_s: Affine,
    pub backbone: Backbone,
    pub dec_t: Affine,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImageBranch {
    pub enc_is: Affine,
    pub enc_id: Affine,
    pub dec_is: Affine,
    pub dec_id: Affine,
    pub backbone: Backbone,
    pub dec_i: Affine,
}

/// All trainable tensors; a branch is `None` when the run does not use it.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub text: Option<TextBranch>,
    pub image: Option<ImageBranch>,
}

type Named<'a> = Vec<(String, &'a Mat)>;
type NamedMut<'a> = Vec<(String, &'a mut Mat)>;

fn push<'a>(out: &mut Named<'a>, prefix: &str, a: &'a Affine) {
    out.push((format!("{prefix}.b"), &a.b));
    out.push((format!("{prefix}.w"), &a.w));
}

fn push_mut<'a>(out: &mut NamedMut<'a>, prefix: &str, a: &'a mut Affine) {
    out.push((format!("{prefix}.b"), &mut a.b));
    out.push((format!("{prefix}.w"), &mut a.w));
}

impl TextBranch {
    pub fn init(cfg: &ModelConfig, rng: &Rng) -> Self {
        let l = cfg.latent_dim;
        let g = |name: &str, i, o| Affine::glorot(i, o, &mut rng.child(name));
        TextBranch {
            enc_s: g("text.enc_s", cfg.n_s, l),
            dec_s: g("text.dec_s", l, cfg.n_s),
            backbone: Backbone {
                blocks: [g("text.backbone0", l, l), g("text.backbone1", l, l)],
            },
            dec_t: g("text.dec_t", l, cfg.text_flat()),
        }
    }

    pub fn zeros_like(&self) -> Self {
        TextBranch {
            enc_s: self.enc_s.zeros_like(),
            dec_s: self.dec_s.zeros_like(),
            backbone: Backbone {
                blocks: [self.backbone.blocks[0].zeros_like(), self.backbone.blocks[1].zeros_like()],
            },
            dec_t: self.dec_t.zeros_like(),
        }
    }

    fn tensors<'a>(&'a self, out: &mut Named<'a>) {
        push(out, "text.backbone0", &self.backbone.blocks[0]);
        push(out, "text.backbone1", &self.backbone.blocks[1]);
        push(out, "text.dec_s", &self.dec_s);
        push(out, "text.dec_t", &self.dec_t);
        push(out, "text.enc_s", &self.enc_s);
    }

    fn tensors_mut<'a>(&'a mut self, out: &mut NamedMut<'a>) {
        let [b0, b1] = &mut self.backbone.blocks;
        push_mut(out, "text.backbone0", b0);
        push_mut(out, "text.backbone1", b1);
        push_mut(out, "text.dec_s", &mut self.dec_s);
        push_mut(out, "text.dec_t", &mut self.dec_t);
        push_mut(out, "text.enc_s", &mut self.enc_s);
    }

    pub fn check(&self, cfg: &ModelConfig) -> Result<()> {
        let l = cfg.latent_dim;
        self.enc_s.check("text.enc_s", cfg.n_s, l)?;
        self.dec_s.check("text.dec_s", l, cfg.n_s)?;
        self.backbone.blocks[0].check("text.backbone0", l, l)?;
        self.backbone.blocks[1].check("text.backbone1", l, l)?;
        self.dec_t.check("text.dec_t", l, cfg.text_flat())
    }
}

impl ImageBranch {
    pub fn init(cfg: &ModelConfig, rng: &Rng) -> Self {
        let l = cfg.latent_dim;
        let g = |name: &str, i, o| Affine::glorot(i, o, &mut rng.child(name));
        ImageBranch {
            enc_is: g("image.enc_is", cfg.n_s, l),
            enc_id: g("image.enc_id", cfg.n_d, l),
            dec_is: g("image.dec_is", l, cfg.n_s),
            dec_id: g("image.dec_id", l, cfg.n_d),
            backbone: Backbone {
                blocks: [g("image.backbone0", l, l), g("image.backbone1", l, l)],
            },
            dec_i: g("image.dec_i", l, cfg.image_flat()),
        }
    }

    pub fn zeros_like(&self) -> Self {
        ImageBranch {
            enc_is: self.enc_is.zeros_like(),
            enc_id: self.enc_id.zeros_like(),
            dec_is: self.dec_is.zeros_like(),
            dec_id: self.dec_id.zeros_like(),
            backbone: Backbone {
                blocks: [self.backbone.blocks[0].zeros_like(), self.backbone.blocks[1].zeros_like()],
            },
            dec_i: self.dec_i.zeros_like(),
        }
    }

    fn tensors<'a>(&'a self, out: &mut Named<'a>) {
        push(out, "image.backbone0", &self.backbone.blocks[0]);
        push(out, "image.backbone1", &self.backbone.blocks[1]);
        push(out, "image.dec_i", &self.dec_i);
        push(out, "image.dec_id", &self.dec_id);
        push(out, "image.dec_is", &self.dec_is);
        push(out, "image.enc_id", &self.enc_id);
        push(out, "image.enc_is", &self.enc_is);
    }

    fn tensors_mut<'a>(&'a mut self, out: &mut NamedMut<'a>) {
        let [b0, b1] = &mut self.backbone.blocks;
        push_mut(out, "image.backbone0", b0);
        push_mut(out, "image.backbone1", b1);
        push_mut(out, "image.dec_i", &mut self.dec_i);
        push_mut(out, "image.dec_id", &mut self.dec_id);
        push_mut(out, "image.dec_is", &mut self.dec_is);
        push_mut(out, "image.enc_id", &mut self.enc_id);
        push_mut(out, "image.enc_is", &mut self.enc_is);
    }

    pub fn check(&self, cfg: &ModelConfig) -> Result<()> {
        let l = cfg.latent_dim;
        self.enc_is.check("image.enc_is", cfg.n_s, l)?;
        self.enc_id.check("image.enc_id", cfg.n_d, l)?;
        self.dec_is.check("image.dec_is", l, cfg.n_s)?;
        self.dec_id.check("image.dec_id", l, cfg.n_d)?;
        self.backbone.blocks[0].check("image.backbone0", l, l)?;
        self.backbone.blocks[1].check("image.backbone1", l, l)?;
        self.dec_i.check("image.dec_i", l, cfg.image_flat())
    }
}

/// Initialises the requested branches; each tensor draws from its own
/// child stream, so a branch's weights do not depend on the other branch.
pub fn init_params(cfg: &ModelConfig, rng: &Rng, text: bool, image: bool) -> ModelParams {
    ModelParams {
        text: text.then(|| TextBranch::init(cfg, rng)),
        image: image.then(|| ImageBranch::init(cfg, rng)),
    }
}

impl ModelParams {
    /// Both branches.
    pub fn init(cfg: &ModelConfig, rng: &Rng) -> Self {
        init_params(cfg, rng, true, true)
    }

    pub fn zeros_like(&self) -> Self {
        ModelParams {
            text: self.text.as_ref().map(TextBranch::zeros_like),
            image: self.image.as_ref().map(ImageBranch::zeros_like),
        }
    }

    /// Every tensor with its name, sorted by name.
    pub fn tensors(&self) -> Vec<(String, &Mat)> {
        let mut out = Vec::new();
        if let Some(i) = &self.image {
            i.tensors(&mut out);
        }
        if let Some(t) = &self.text {
            t.tensors(&mut out);
        }
        out
    }

    /// Same order as [`ModelParams::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<(String, &mut Mat)> {
        let mut out = Vec::new();
        if let Some(i) = &mut self.image {
            i.tensors_mut(&mut out);
        }
        if let Some(t) = &mut self.text {
            t.tensors_mut(&mut out);
        }
        out
    }

    pub fn count(&self) -> usize {
        self.tensors().iter().map(|(_, m)| m.len()).sum()
    }

    pub fn check(&self, cfg: &ModelConfig) -> Result<()> {
        if let Some(t) = &self.text {
            t.check(cfg)?;
        }
        if let Some(i) = &self.image {
            i.check(cfg)?;
        }
        if let Some((name, _)) = self.tensors().iter().find(|(_, m)| !m.is_finite()) {
            return Err(Error::numerical(format!("tensor {name} has non-finite entries")));
        }
        Ok(())
    }

    /// Multiplies every tensor by `s`.
    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        for (_, m) in out.tensors_mut() {
            *m = m.scale(s);
        }
        out
    }
}

/// Exact parameter count of the full two-branch model.
pub fn param_count(cfg: &ModelConfig) -> usize {
    let affine = |i: usize, o: usize| i * o + o;
    let l = cfg.latent_dim;
    let backbone = 2 * affine(l, l);
    let text = affine(cfg.n_s, l) + affine(l, cfg.n_s) + backbone + affine(l, cfg.text_flat());
    let image = affine(cfg.n_s, l)
        + affine(cfg.n_d, l)
        + affine(l, cfg.n_s)
        + affine(l, cfg.n_d)
        + backbone
        + affine(l, cfg.image_flat());
    text + image
}

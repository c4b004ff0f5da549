use crate::error::{Error, Result};
use crate::losses::CrecRecons;
use crate::model::forward::{ImageOutputs, ModelOutputs, PathOutputs, TextOutputs};
use crate::model::layers::{block_backward, BlockCache};
use crate::model::params::{Affine, Backbone, ImageBranch, ModelParams, TextBranch};
use crate::Mat;

/// Gradients share the parameter layout.
pub type ParamGrads = ModelParams;

/// Loss gradients with respect to the text outputs.
#[derive(Clone, Copy, Debug)]
pub struct TextUpstream<'a> {
    pub e_t_hat: &'a Mat,
    pub f_s_hat: &'a Mat,
}

/// Loss gradients with respect to the image outputs. A gradient on the
/// fused prediction is split evenly over the present paths.
#[derive(Clone, Copy, Debug, Default)]
pub struct ImageUpstream<'a> {
    pub fused: Option<&'a Mat>,
    pub semantic: Option<&'a Mat>,
    pub detail: Option<&'a Mat>,
    pub recons: Option<&'a CrecRecons<f64>>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ModelUpstream<'a> {
    pub text: Option<TextUpstream<'a>>,
    pub image: Option<ImageUpstream<'a>>,
}

fn accumulate(grad: &mut Affine, cache: &BlockCache, layer: &Affine, upstream: &Mat) -> Result<Mat> {
    let g = block_backward(cache, layer, upstream)?;
    grad.w.add_assign(&g.w)?;
    grad.b.add_assign(&g.b)?;
    Ok(g.input)
}

fn backbone_backward(bb: &Backbone, grad: &mut Backbone, caches: &[BlockCache; 2], upstream: &Mat) -> Result<Mat> {
    let [g0, g1] = &mut grad.blocks;
    let d1 = accumulate(g1, &caches[1], &bb.blocks[1], upstream)?;
    accumulate(g0, &caches[0], &bb.blocks[0], &d1)
}

pub fn text_backward(p: &TextBranch, out: &TextOutputs, up: TextUpstream<'_>) -> Result<TextBranch> {
    let mut g = p.zeros_like();
    let c = &out.caches;
    let dh = accumulate(&mut g.dec_t, &c.dec_t, &p.dec_t, up.e_t_hat)?;
    let mut db = backbone_backward(&p.backbone, &mut g.backbone, &c.backbone, &dh)?;
    db.add_assign(&accumulate(&mut g.dec_s, &c.dec_s, &p.dec_s, up.f_s_hat)?)?;
    accumulate(&mut g.enc_s, &c.enc_s, &p.enc_s, &db)?;
    Ok(g)
}

/// Gradient reaching one path's code through `D_I` and the backbone.
fn path_code_grad(p: &ImageBranch, g: &mut ImageBranch, path: &PathOutputs, upstream: &Mat) -> Result<Mat> {
    let dh = accumulate(&mut g.dec_i, &path.dec_i, &p.dec_i, upstream)?;
    backbone_backward(&p.backbone, &mut g.backbone, &path.backbone, &dh)
}

pub fn image_backward(p: &ImageBranch, out: &ImageOutputs, up: ImageUpstream<'_>) -> Result<ImageBranch> {
    let mut g = p.zeros_like();
    let n_paths = out.semantic.is_some() as usize + out.detail.is_some() as usize;
    let path_upstream = |own: Option<&Mat>, present: bool| -> Result<Option<Mat>> {
        if !present {
            if own.is_some() {
                return Err(Error::InvalidState("gradient given for an image path that did not run".into()));
            }
            return Ok(None);
        }
        let mut total = match own {
            Some(m) => m.clone(),
            None => Mat::zeros(out.e_i_hat.rows(), out.e_i_hat.cols()),
        };
        if let Some(f) = up.fused {
            total.axpy(1.0 / n_paths as f64, f)?;
        }
        Ok(Some(total))
    };
    let up_s = path_upstream(up.semantic, out.semantic.is_some())?;
    let up_d = path_upstream(up.detail, out.detail.is_some())?;

    let mut code_s = match (&out.semantic, &up_s) {
        (Some(path), Some(u)) => Some(path_code_grad(p, &mut g, path, u)?),
        _ => None,
    };
    let mut code_d = match (&out.detail, &up_d) {
        (Some(path), Some(u)) => Some(path_code_grad(p, &mut g, path, u)?),
        _ => None,
    };

    if let Some(r) = up.recons {
        let rec = out
            .recons
            .as_ref()
            .ok_or_else(|| Error::InvalidState("reconstruction gradient given but reconstructions did not run".into()))?;
        let (cs, cd) = match (code_s.as_mut(), code_d.as_mut()) {
            (Some(s), Some(d)) => (s, d),
            _ => return Err(Error::InvalidState("reconstructions need both image paths".into())),
        };
        cs.add_assign(&accumulate(&mut g.dec_is, &rec.caches[0], &p.dec_is, &r.s_from_s)?)?;
        cs.add_assign(&accumulate(&mut g.dec_id, &rec.caches[1], &p.dec_id, &r.d_from_s)?)?;
        cd.add_assign(&accumulate(&mut g.dec_id, &rec.caches[2], &p.dec_id, &r.d_from_d)?)?;
        cd.add_assign(&accumulate(&mut g.dec_is, &rec.caches[3], &p.dec_is, &r.s_from_d)?)?;
    }

    if let (Some(path), Some(d)) = (&out.semantic, &code_s) {
        accumulate(&mut g.enc_is, &path.enc, &p.enc_is, d)?;
    }
    if let (Some(path), Some(d)) = (&out.detail, &code_d) {
        accumulate(&mut g.enc_id, &path.enc, &p.enc_id, d)?;
    }
    Ok(g)
}

/// Reverse pass over whichever branches ran; branches without an upstream
/// gradient get zero gradients.
pub fn model_backward(params: &ModelParams, outputs: &ModelOutputs, up: ModelUpstream<'_>) -> Result<ParamGrads> {
    let text = match (&params.text, &outputs.text) {
        (Some(p), Some(o)) => Some(match up.text {
            Some(u) => text_backward(p, o, u)?,
            None => p.zeros_like(),
        }),
        (None, None) => None,
        _ => return Err(Error::InvalidState("text outputs do not match the parameter set".into())),
    };
    let image = match (&params.image, &outputs.image) {
        (Some(p), Some(o)) => Some(match up.image {
            Some(u) => image_backward(p, o, u)?,
            None => p.zeros_like(),
        }),
        (None, None) => None,
        _ => return Err(Error::InvalidState("image outputs do not match the parameter set".into())),
    };
    Ok(ModelParams { text, image })
}

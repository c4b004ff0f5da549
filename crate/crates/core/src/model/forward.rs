use crate::error::{Error, Result};
use crate::losses::CrecRecons;
use crate::model::config::ModelConfig;
use crate::model::layers::{block_forward, BlockCache, BlockKind, Mode};
use crate::model::params::{Affine, Backbone, ImageBranch, ModelParams, TextBranch};
use crate::Mat;

/// Which image-branch computations run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ImagePaths {
    pub semantic: bool,
    pub detail: bool,
    /// Direct and cross reconstructions; needs both codes.
    pub recons: bool,
}

impl ImagePaths {
    pub const FULL: ImagePaths = ImagePaths { semantic: true, detail: true, recons: true };
    pub const BOTH: ImagePaths = ImagePaths { semantic: true, detail: true, recons: false };
    pub const SEMANTIC: ImagePaths = ImagePaths { semantic: true, detail: false, recons: false };
    pub const DETAIL: ImagePaths = ImagePaths { semantic: false, detail: true, recons: false };

    pub fn validate(&self) -> Result<()> {
        if !self.semantic && !self.detail {
            return Err(Error::InvalidState("image branch run with no path enabled".into()));
        }
        if self.recons && !(self.semantic && self.detail) {
            return Err(Error::InvalidState("cross reconstruction needs both image paths".into()));
        }
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.semantic as usize + self.detail as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TextOutputs {
    pub b_s: Mat,
    pub f_s_hat: Mat,
    /// One flattened `m_text × d_text` prediction per row.
    pub e_t_hat: Mat,
    pub caches: TextCaches,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TextCaches {
    pub enc_s: BlockCache,
    pub dec_s: BlockCache,
    pub backbone: [BlockCache; 2],
    pub dec_t: BlockCache,
}

/// One image path: an encoder, the shared backbone and the shared `D_I`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathOutputs {
    pub code: Mat,
    pub e_hat: Mat,
    pub enc: BlockCache,
    pub backbone: [BlockCache; 2],
    pub dec_i: BlockCache,
}

/// Caches in `CrecRecons` field order.
#[derive(Clone, Debug, PartialEq)]
pub struct ReconOutputs {
    pub recons: CrecRecons<f64>,
    pub caches: [BlockCache; 4],
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImageOutputs {
    pub semantic: Option<PathOutputs>,
    pub detail: Option<PathOutputs>,
    pub recons: Option<ReconOutputs>,
    /// Mean of the present path predictions.
    pub e_i_hat: Mat,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelOutputs {
    pub text: Option<TextOutputs>,
    pub image: Option<ImageOutputs>,
}

fn backbone_forward(
    x: &Mat,
    bb: &Backbone,
    rate: f64,
    mode: Mode<'_>,
    prefix: &str,
    suffix: &str,
) -> Result<(Mat, [BlockCache; 2])> {
    let (h1, c0) = block_forward(x, &bb.blocks[0], BlockKind::Residual, rate, mode, &format!("{prefix}.backbone0{suffix}"))?;
    let (h2, c1) = block_forward(&h1, &bb.blocks[1], BlockKind::Residual, rate, mode, &format!("{prefix}.backbone1{suffix}"))?;
    Ok((h2, [c0, c1]))
}

fn check_input(x: &Mat, want: usize, what: &str) -> Result<()> {
    if x.cols() != want {
        return Err(Error::shape(format!("{what} has {} columns, model expects {want}", x.cols())));
    }
    Ok(())
}

/// `b_S = E_S(F_S)`, `F̂_S = D_S(b_S)`, `Ê_T = D_T(backbone(b_S))`; rows are samples.
pub fn text_branch_forward(f_s: &Mat, p: &TextBranch, cfg: &ModelConfig, mode: Mode<'_>) -> Result<TextOutputs> {
    check_input(f_s, cfg.n_s, "F_S")?;
    let pc = cfg.dropout_codec;
    let (b_s, enc_s) = block_forward(f_s, &p.enc_s, BlockKind::Relu, pc, mode, "text.enc_s")?;
    let (f_s_hat, dec_s) = block_forward(&b_s, &p.dec_s, BlockKind::Linear, pc, mode, "text.dec_s")?;
    let (h, backbone) = backbone_forward(&b_s, &p.backbone, cfg.dropout_backbone, mode, "text", "")?;
    let (e_t_hat, dec_t) = block_forward(&h, &p.dec_t, BlockKind::Linear, pc, mode, "text.dec_t")?;
    Ok(TextOutputs {
        b_s,
        f_s_hat,
        e_t_hat,
        caches: TextCaches { enc_s, dec_s, backbone, dec_t },
    })
}

fn path_forward(
    x: &Mat,
    enc: &Affine,
    p: &ImageBranch,
    cfg: &ModelConfig,
    mode: Mode<'_>,
    name: &str,
) -> Result<PathOutputs> {
    let pc = cfg.dropout_codec;
    let enc_label = if name == "semantic" { "image.enc_is" } else { "image.enc_id" };
    let (code, enc_cache) = block_forward(x, enc, BlockKind::Relu, pc, mode, enc_label)?;
    let suffix = format!(".{name}");
    let (h, backbone) = backbone_forward(&code, &p.backbone, cfg.dropout_backbone, mode, "image", &suffix)?;
    let (e_hat, dec_i) = block_forward(&h, &p.dec_i, BlockKind::Linear, pc, mode, &format!("image.dec_i{suffix}"))?;
    Ok(PathOutputs { code, e_hat, enc: enc_cache, backbone, dec_i })
}

pub fn image_branch_forward(
    f_s: &Mat,
    f_d: &Mat,
    p: &ImageBranch,
    cfg: &ModelConfig,
    paths: ImagePaths,
    mode: Mode<'_>,
) -> Result<ImageOutputs> {
    paths.validate()?;
    check_input(f_s, cfg.n_s, "F_S")?;
    check_input(f_d, cfg.n_d, "F_D")?;
    if f_s.rows() != f_d.rows() {
        return Err(Error::shape(format!("F_S has {} rows, F_D {}", f_s.rows(), f_d.rows())));
    }
    let semantic = paths
        .semantic
        .then(|| path_forward(f_s, &p.enc_is, p, cfg, mode, "semantic"))
        .transpose()?;
    let detail = paths
        .detail
        .then(|| path_forward(f_d, &p.enc_id, p, cfg, mode, "detail"))
        .transpose()?;
    let recons = match (&semantic, &detail) {
        (Some(s), Some(d)) if paths.recons => {
            let pc = cfg.dropout_codec;
            let lin = |x: &Mat, a: &Affine, label: &str| block_forward(x, a, BlockKind::Linear, pc, mode, label);
            let (s_from_s, c0) = lin(&s.code, &p.dec_is, "image.dec_is.direct")?;
            let (d_from_s, c1) = lin(&s.code, &p.dec_id, "image.dec_id.cross")?;
            let (d_from_d, c2) = lin(&d.code, &p.dec_id, "image.dec_id.direct")?;
            let (s_from_d, c3) = lin(&d.code, &p.dec_is, "image.dec_is.cross")?;
            Some(ReconOutputs {
                recons: CrecRecons { s_from_s, d_from_s, d_from_d, s_from_d },
                caches: [c0, c1, c2, c3],
            })
        }
        _ => None,
    };
    let e_i_hat = match (&semantic, &detail) {
        (Some(s), Some(d)) => s.e_hat.zip_map(&d.e_hat, |a, b| (a + b) / 2.0)?,
        (Some(s), None) => s.e_hat.clone(),
        (None, Some(d)) => d.e_hat.clone(),
        (None, None) => unreachable!("validated above"),
    };
    Ok(ImageOutputs { semantic, detail, recons, e_i_hat })
}

/// Runs whichever branches `params` holds.
pub fn model_forward(
    f_s: &Mat,
    f_d: &Mat,
    params: &ModelParams,
    cfg: &ModelConfig,
    paths: ImagePaths,
    mode: Mode<'_>,
) -> Result<ModelOutputs> {
    Ok(ModelOutputs {
        text: params.text.as_ref().map(|t| text_branch_forward(f_s, t, cfg, mode)).transpose()?,
        image: params
            .image
            .as_ref()
            .map(|i| image_branch_forward(f_s, f_d, i, cfg, paths, mode))
            .transpose()?,
    })
}

/// Row `i` of a flattened prediction as a `tokens × dims` matrix.
pub fn unflatten_row(flat: &Mat, i: usize, tokens: usize) -> Result<Mat> {
    if tokens == 0 || flat.cols() % tokens != 0 {
        return Err(Error::shape(format!("{} columns do not split into {tokens} tokens", flat.cols())));
    }
    Mat::new(tokens, flat.cols() / tokens, flat.row(i).to_vec())
}

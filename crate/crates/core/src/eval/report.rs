use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::metrics::{pixcorr, ssim, two_way_identification, Similarity, SSIM_WINDOW};
use crate::model::{image_branch_forward, text_branch_forward, ImagePaths, ModelConfig, ModelParams, Mode};
use crate::train::Batch;
use crate::Mat;

/// Test-split metrics; image metrics are absent when the run has no image branch.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metrics {
    pub pixcorr: Option<f64>,
    pub ssim: Option<f64>,
    pub two_way_image: Option<f64>,
    pub two_way_text: Option<f64>,
}

/// Mean per-stimulus PixCorr and SSIM of `m_img × d_img` predictions, with
/// each truth's value range as `L`. SSIM is `None` when the token grid is
/// smaller than the SSIM window.
pub fn image_similarity(preds: &Mat, truths: &Mat, m_img: usize) -> Result<(f64, Option<f64>)> {
    if preds.shape() != truths.shape() || m_img == 0 || truths.cols() % m_img != 0 {
        return Err(Error::shape(format!(
            "image similarity: {:?} vs {:?} with {m_img} tokens",
            preds.shape(),
            truths.shape()
        )));
    }
    let n = preds.rows();
    let d = truths.cols() / m_img;
    let windowed = m_img >= SSIM_WINDOW && d >= SSIM_WINDOW;
    let (mut pc, mut ss) = (0.0, 0.0);
    for i in 0..n {
        pc += pixcorr(preds.row(i), truths.row(i)).map_err(|e| e.context(format!("stimulus {i}")))?;
        if windowed {
            let a = Mat::new(m_img, d, preds.row(i).to_vec())?;
            let b = Mat::new(m_img, d, truths.row(i).to_vec())?;
            let (lo, hi) = b.as_slice().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
            ss += ssim(&a, &b, hi - lo).map_err(|e| e.context(format!("stimulus {i}")))?;
        }
    }
    Ok((pc / n as f64, windowed.then(|| ss / n as f64)))
}

/// Inference-mode predictions of both branches on `batch`.
pub fn predict(
    params: &ModelParams,
    cfg: &ModelConfig,
    batch: &Batch,
    paths: ImagePaths,
) -> Result<(Option<Mat>, Option<Mat>)> {
    let text = params
        .text
        .as_ref()
        .map(|t| text_branch_forward(&batch.f_s, t, cfg, Mode::Infer).map(|o| o.e_t_hat))
        .transpose()?;
    let image = params
        .image
        .as_ref()
        .map(|p| image_branch_forward(&batch.f_s, &batch.f_d, p, cfg, paths, Mode::Infer).map(|o| o.e_i_hat))
        .transpose()?;
    Ok((text, image))
}

pub fn evaluate(params: &ModelParams, cfg: &ModelConfig, batch: &Batch, paths: ImagePaths) -> Result<Metrics> {
    let (text, image) = predict(params, cfg, batch, paths)?;
    let two_way_text = text
        .map(|e| two_way_identification(&e, &batch.e_t, Similarity::Pearson))
        .transpose()?;
    let (pixcorr, ssim, two_way_image) = match image {
        Some(e) => {
            let tw = two_way_identification(&e, &batch.e_fused, Similarity::Pearson)?;
            let (pc, ss) = image_similarity(&e, &batch.e_fused, cfg.m_img)?;
            (Some(pc), ss, Some(tw))
        }
        None => (None, None, None),
    };
    Ok(Metrics { pixcorr, ssim, two_way_image, two_way_text })
}

/// Semantic and detail latent codes `(b_IS, b_ID)` in inference mode.
pub fn image_codes(params: &ModelParams, cfg: &ModelConfig, f_s: &Mat, f_d: &Mat) -> Result<(Mat, Mat)> {
    let p = params
        .image
        .as_ref()
        .ok_or_else(|| Error::InvalidState("checkpoint has no image branch".into()))?;
    let out = image_branch_forward(f_s, f_d, p, cfg, ImagePaths::BOTH, Mode::Infer)?;
    Ok((out.semantic.expect("semantic path ran").code, out.detail.expect("detail path ran").code))
}

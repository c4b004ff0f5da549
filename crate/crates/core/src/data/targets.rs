use crate::alignment::LayerStack;
use crate::error::{Error, Result};
use crate::Mat;

/// Elementwise mean of one stimulus's caption embeddings.
pub fn average_captions(embs: &[Mat]) -> Result<Mat> {
    let refs: Vec<&Mat> = embs.iter().collect();
    Mat::mean_of(&refs).map_err(|e| e.context("captions"))
}

/// Mean of layers `lo..=hi` (by layer id).
pub fn average_layers(stack: &LayerStack<f64>, lo: usize, hi: usize) -> Result<Mat> {
    stack.average_range(lo, hi)
}

/// `(e_D + e_S) / 2`.
pub fn fuse_targets(e_d: &Mat, e_s: &Mat) -> Result<Mat> {
    if e_d.shape() != e_s.shape() {
        return Err(Error::shape(format!("fuse: {:?} vs {:?}", e_d.shape(), e_s.shape())));
    }
    e_d.zip_map(e_s, |a, b| (a + b) / 2.0)
}

/// Applies a `d_src × d` projection to every token of flattened rows.
pub fn project_tokens(flat: &Mat, tokens: usize, proj: &Mat) -> Result<Mat> {
    if tokens == 0 || flat.cols() != tokens * proj.rows() {
        return Err(Error::shape(format!(
            "projection: {} columns are not {tokens} tokens of width {}",
            flat.cols(),
            proj.rows()
        )));
    }
    let d = proj.cols();
    let mut out = Mat::zeros(flat.rows(), tokens * d);
    for i in 0..flat.rows() {
        let tok = Mat::new(tokens, proj.rows(), flat.row(i).to_vec())?;
        out.row_mut(i).copy_from_slice(tok.matmul(proj)?.as_slice());
    }
    Ok(out)
}

use crate::error::{Error, Result};
use crate::model::params::Affine;
use crate::numeric::Rng;
use crate::Mat;

/// Train mode draws dropout masks from a stream; infer mode uses none.
#[derive(Clone, Copy, Debug)]
pub enum Mode<'a> {
    Train(&'a Rng),
    Infer,
}

impl Mode<'_> {
    pub fn is_train(&self) -> bool {
        matches!(self, Mode::Train(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    /// `x + dropout(relu(xW + b))`
    Residual,
    /// `dropout(relu(xW + b))`
    Relu,
    /// `dropout(x)W + b`
    Linear,
}

/// Everything the backward pass of one block application needs.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockCache {
    pub kind: BlockKind,
    pub rate: f64,
    pub train: bool,
    pub input: Mat,
    /// Pre-activation `xW + b`; absent for linear blocks.
    pub pre: Option<Mat>,
    /// Inverted-dropout multipliers, `0` or `1/(1-p)`.
    pub mask: Option<Mat>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockGrad {
    pub input: Mat,
    pub w: Mat,
    pub b: Mat,
}

/// Inverted-dropout mask with keep probability `1 - p`.
pub fn dropout_mask(rows: usize, cols: usize, p: f64, rng: &mut Rng) -> Mat {
    let keep = 1.0 / (1.0 - p);
    Mat::from_fn(rows, cols, |_, _| if rng.unit() < p { 0.0 } else { keep })
}

fn affine(x: &Mat, a: &Affine) -> Result<Mat> {
    let mut z = x.matmul(&a.w)?;
    for r in 0..z.rows() {
        for (v, &b) in z.row_mut(r).iter_mut().zip(a.b.as_slice()) {
            *v += b;
        }
    }
    Ok(z)
}

fn col_sums(m: &Mat) -> Mat {
    let mut out = Mat::zeros(1, m.cols());
    for r in m.row_iter() {
        for (o, &v) in out.as_mut_slice().iter_mut().zip(r) {
            *o += v;
        }
    }
    out
}

fn hadamard(a: &Mat, b: &Mat) -> Result<Mat> {
    a.zip_map(b, |x, y| x * y)
}

/// Applies one block. In train mode the mask comes from `mode`'s stream
/// under `label`, so every application site draws independently.
pub fn block_forward(
    x: &Mat,
    layer: &Affine,
    kind: BlockKind,
    rate: f64,
    mode: Mode<'_>,
    label: &str,
) -> Result<(Mat, BlockCache)> {
    if x.cols() != layer.fan_in() {
        return Err(Error::shape(format!(
            "{label}: input width {} but layer expects {}",
            x.cols(),
            layer.fan_in()
        )));
    }
    if kind == BlockKind::Residual && layer.fan_in() != layer.fan_out() {
        return Err(Error::shape(format!(
            "{label}: residual block needs a square layer, got {}x{}",
            layer.fan_in(),
            layer.fan_out()
        )));
    }
    let mask = match mode {
        Mode::Train(rng) if rate > 0.0 => {
            let cols = if kind == BlockKind::Linear { x.cols() } else { layer.fan_out() };
            Some(dropout_mask(x.rows(), cols, rate, &mut rng.child(label)))
        }
        _ => None,
    };
    let mut cache = BlockCache {
        kind,
        rate,
        train: mode.is_train(),
        input: x.clone(),
        pre: None,
        mask,
    };
    let y = match kind {
        BlockKind::Linear => match &cache.mask {
            Some(m) => affine(&hadamard(x, m)?, layer)?,
            None => affine(x, layer)?,
        },
        BlockKind::Relu | BlockKind::Residual => {
            let z = affine(x, layer)?;
            let mut a = z.map(|v| v.max(0.0));
            if let Some(m) = &cache.mask {
                a = hadamard(&a, m)?;
            }
            cache.pre = Some(z);
            if kind == BlockKind::Residual {
                a.add_assign(x)?;
            }
            a
        }
    };
    Ok((y, cache))
}

/// Single MLP block: residual when the layer is square, plain ReLU otherwise.
pub fn mlp_block_forward(x: &Mat, layer: &Affine, rate: f64, mode: Mode<'_>, label: &str) -> Result<(Mat, BlockCache)> {
    let kind = if layer.fan_in() == layer.fan_out() { BlockKind::Residual } else { BlockKind::Relu };
    block_forward(x, layer, kind, rate, mode, label)
}

pub fn block_backward(cache: &BlockCache, layer: &Affine, upstream: &Mat) -> Result<BlockGrad> {
    if cache.train && cache.rate > 0.0 && cache.mask.is_none() {
        return Err(Error::InvalidState("dropout mask missing for a train-mode block".into()));
    }
    match cache.kind {
        BlockKind::Linear => {
            let xd = match &cache.mask {
                Some(m) => hadamard(&cache.input, m)?,
                None => cache.input.clone(),
            };
            let w = xd.t_matmul(upstream)?;
            let b = col_sums(upstream);
            let mut input = upstream.matmul_t(&layer.w)?;
            if let Some(m) = &cache.mask {
                input = hadamard(&input, m)?;
            }
            Ok(BlockGrad { input, w, b })
        }
        BlockKind::Relu | BlockKind::Residual => {
            let pre = cache
                .pre
                .as_ref()
                .ok_or_else(|| Error::InvalidState("pre-activation missing from block cache".into()))?;
            let mut dz = match &cache.mask {
                Some(m) => hadamard(upstream, m)?,
                None => upstream.clone(),
            };
            dz = dz.zip_map(pre, |g, z| if z > 0.0 { g } else { 0.0 })?;
            let w = cache.input.t_matmul(&dz)?;
            let b = col_sums(&dz);
            let mut input = dz.matmul_t(&layer.w)?;
            if cache.kind == BlockKind::Residual {
                input.add_assign(upstream)?;
            }
            Ok(BlockGrad { input, w, b })
        }
    }
}

//! Per-layer target stacks and the layer-wise alignment analyses built on them.

use crate::alignment::kernel::cka;
use crate::alignment::rdm::{rdm_from_features, rsa};
use crate::error::{Error, Result};
use crate::numeric::{ridge_solve, Matrix};
use crate::scalar::Real;

/// Ordered per-layer embeddings, one `n_stimuli × d_flat` matrix per layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerStack<T> {
    layer_ids: Vec<usize>,
    layers: Vec<Matrix<T>>,
}

impl<T: Real> LayerStack<T> {
    pub fn new(layer_ids: Vec<usize>, layers: Vec<Matrix<T>>) -> Result<Self> {
        if layer_ids.is_empty() || layer_ids.len() != layers.len() {
            return Err(Error::shape(format!(
                "{} layer ids for {} layers",
                layer_ids.len(),
                layers.len()
            )));
        }
        if layer_ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::RangeError("layer ids must be strictly increasing".into()));
        }
        let shape = layers[0].shape();
        if let Some(k) = layers.iter().position(|l| l.shape() != shape) {
            return Err(Error::shape(format!(
                "layer {} is {:?}, expected {:?}",
                layer_ids[k],
                layers[k].shape(),
                shape
            )));
        }
        Ok(LayerStack { layer_ids, layers })
    }

    pub fn layer_ids(&self) -> &[usize] {
        &self.layer_ids
    }

    pub fn layers(&self) -> &[Matrix<T>] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn n_stimuli(&self) -> usize {
        self.layers[0].rows()
    }

    pub fn d_flat(&self) -> usize {
        self.layers[0].cols()
    }

    pub fn position(&self, id: usize) -> Option<usize> {
        self.layer_ids.iter().position(|&l| l == id)
    }

    pub fn layer(&self, id: usize) -> Option<&Matrix<T>> {
        self.position(id).map(|k| &self.layers[k])
    }

    pub fn last(&self) -> (usize, &Matrix<T>) {
        let k = self.layers.len() - 1;
        (self.layer_ids[k], &self.layers[k])
    }

    /// Elementwise mean of layers `lo..=hi` (by id).
    pub fn average_range(&self, lo: usize, hi: usize) -> Result<Matrix<T>> {
        if lo > hi {
            return Err(Error::RangeError(format!("layer range {lo}-{hi} is reversed")));
        }
        let (a, b) = match (self.position(lo), self.position(hi)) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::RangeError(format!(
                    "layer range {lo}-{hi} outside stack {:?}",
                    self.layer_ids
                )))
            }
        };
        let picked: Vec<&Matrix<T>> = self.layers[a..=b].iter().collect();
        Matrix::mean_of(&picked)
    }

    /// Same stack restricted to the given stimulus rows.
    pub fn select_stimuli(&self, idx: &[usize]) -> Result<Self> {
        let layers = self
            .layers
            .iter()
            .map(|l| l.select_rows(idx))
            .collect::<Result<Vec<_>>>()?;
        Ok(LayerStack {
            layer_ids: self.layer_ids.clone(),
            layers,
        })
    }
}

/// Pairwise CKA between layers; the diagonal is exactly 1.
pub fn layer_cka_heatmap<T: Real>(stack: &LayerStack<T>) -> Result<Matrix<T>> {
    let l = stack.len();
    if l < 2 {
        return Err(Error::degenerate("heatmap needs at least 2 layers"));
    }
    let mut out = Matrix::identity(l);
    for i in 0..l {
        for j in (i + 1)..l {
            let v = cka(&stack.layers[i], &stack.layers[j]).map_err(|e| {
                e.context(format!(
                    "layers {} and {}",
                    stack.layer_ids[i], stack.layer_ids[j]
                ))
            })?;
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RsaMode<T> {
    /// Compare region voxel patterns directly.
    Raw,
    /// Replace region features by ridge predictions of each layer
    /// (fit on even stimulus indices, evaluated on odd ones).
    Ridge { lambda: T },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RsaRow<T> {
    pub region: String,
    pub layer: usize,
    pub similarity: T,
}

/// Layer with the highest similarity for each region, regions in table
/// order; ties go to the earlier row.
pub fn rsa_peaks<T: Real>(rows: &[RsaRow<T>]) -> Vec<(String, usize)> {
    let mut peaks: Vec<(String, usize, T)> = Vec::new();
    for r in rows {
        match peaks.iter_mut().find(|p| p.0 == r.region) {
            Some(p) if r.similarity > p.2 => {
                p.1 = r.layer;
                p.2 = r.similarity;
            }
            Some(_) => {}
            None => peaks.push((r.region.clone(), r.layer, r.similarity)),
        }
    }
    peaks.into_iter().map(|(name, layer, _)| (name, layer)).collect()
}

fn center_columns<T: Real>(x: &Matrix<T>, means: &[T]) -> Matrix<T> {
    Matrix::from_fn(x.rows(), x.cols(), |i, j| x[(i, j)] - means[j])
}

fn ridge_predict<T: Real>(
    region: &Matrix<T>,
    layer: &Matrix<T>,
    train: &[usize],
    eval: &[usize],
    lambda: T,
) -> Result<Matrix<T>> {
    let (xt, yt) = (region.select_rows(train)?, layer.select_rows(train)?);
    let (mx, my) = (xt.col_means(), yt.col_means());
    let w = ridge_solve(&center_columns(&xt, &mx), &center_columns(&yt, &my), lambda)?;
    let pred = center_columns(&region.select_rows(eval)?, &mx).matmul(&w)?;
    Ok(Matrix::from_fn(pred.rows(), pred.cols(), |i, j| pred[(i, j)] + my[j]))
}

/// Region-by-layer RSA table, regions in input order, layers in stack order.
pub fn region_layer_rsa<T: Real>(
    regions: &[(String, Matrix<T>)],
    stack: &LayerStack<T>,
    mode: RsaMode<T>,
) -> Result<Vec<RsaRow<T>>> {
    let n = stack.n_stimuli();
    if n < 3 {
        return Err(Error::degenerate("RSA needs at least 3 stimuli"));
    }
    if let Some((name, m)) = regions.iter().find(|(_, m)| m.rows() != n) {
        return Err(Error::shape(format!(
            "region {name} has {} stimuli, layers have {n}",
            m.rows()
        )));
    }
    let mut rows = Vec::with_capacity(regions.len() * stack.len());
    match mode {
        RsaMode::Raw => {
            let layer_rdms = stack
                .layers
                .iter()
                .map(rdm_from_features)
                .collect::<Result<Vec<_>>>()?;
            for (name, feats) in regions {
                let r = rdm_from_features(feats).map_err(|e| e.context(format!("region {name}")))?;
                for (&id, lr) in stack.layer_ids.iter().zip(&layer_rdms) {
                    rows.push(RsaRow {
                        region: name.clone(),
                        layer: id,
                        similarity: rsa(&r, lr)?,
                    });
                }
            }
        }
        RsaMode::Ridge { lambda } => {
            let train: Vec<usize> = (0..n).step_by(2).collect();
            let eval: Vec<usize> = (1..n).step_by(2).collect();
            if eval.len() < 3 {
                return Err(Error::degenerate(format!(
                    "ridge split leaves {} evaluation stimuli, need 3",
                    eval.len()
                )));
            }
            for (name, feats) in regions {
                for (&id, layer) in stack.layer_ids.iter().zip(&stack.layers) {
                    let ctx = || format!("region {name}, layer {id}");
                    let pred = ridge_predict(feats, layer, &train, &eval, lambda)
                        .map_err(|e| e.context(ctx()))?;
                    let pr = rdm_from_features(&pred).map_err(|e| e.context(ctx()))?;
                    let lr = rdm_from_features(&layer.select_rows(&eval)?)?;
                    rows.push(RsaRow {
                        region: name.clone(),
                        layer: id,
                        similarity: rsa(&pr, &lr)?,
                    });
                }
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Rng;

    fn stack(n: usize, seed: u64) -> LayerStack<f64> {
        let mut rng = Rng::new(seed);
        let l1: Matrix<f64> = rng.normal_matrix(n, 6, 1.0);
        let l2 = l1.scale(3.0);
        let l3 = rng.normal_matrix(n, 6, 1.0);
        LayerStack::new(vec![1, 2, 5], vec![l1, l2, l3]).unwrap()
    }

    #[test]
    fn stack_validation() {
        let a = Matrix::<f64>::zeros(3, 2);
        assert!(LayerStack::new(vec![2, 1], vec![a.clone(), a.clone()]).is_err());
        assert!(LayerStack::new(vec![1, 2], vec![a.clone(), Matrix::zeros(3, 3)]).is_err());
        assert!(LayerStack::new(vec![1], vec![a.clone(), a]).is_err());
    }

    #[test]
    fn average_range_examples() {
        let s = stack(4, 1);
        assert_eq!(s.average_range(1, 1).unwrap(), s.layers()[0]);
        let two = s.average_range(1, 2).unwrap();
        let want = s.layers()[0].scale(2.0);
        assert!(two.sub(&want).unwrap().max_abs() < 1e-12);
        assert!(matches!(s.average_range(1, 3), Err(Error::RangeError(_))));
        assert!(matches!(s.average_range(5, 1), Err(Error::RangeError(_))));
    }

    #[test]
    fn heatmap_scale_invariance_and_symmetry() {
        let h = layer_cka_heatmap(&stack(10, 2)).unwrap();
        assert!((h[(0, 1)] - 1.0).abs() < 1e-9);
        for i in 0..3 {
            assert_eq!(h[(i, i)], 1.0);
            for j in 0..3 {
                assert!((h[(i, j)] - h[(j, i)]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn identical_region_scores_one_in_raw_mode() {
        let s = stack(12, 3);
        let regions = vec![("copy".to_string(), s.layers()[2].clone())];
        let rows = region_layer_rsa(&regions, &s, RsaMode::Raw).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[2].layer, 5);
        assert!((rows[2].similarity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ridge_mode_needs_enough_eval_stimuli() {
        let s = stack(5, 4);
        let regions = vec![("r".to_string(), s.layers()[0].clone())];
        assert!(matches!(
            region_layer_rsa(&regions, &s, RsaMode::Ridge { lambda: 1.0 }),
            Err(Error::DegenerateInput(_))
        ));
        let s = stack(12, 4);
        let regions = vec![("r".to_string(), s.layers()[2].clone())];
        let rows = region_layer_rsa(&regions, &s, RsaMode::Ridge { lambda: 1e-3 }).unwrap();
        assert!(rows[2].similarity > 0.9);
    }
}

//! Dataset directory:
//!
//! ```text
//! voxels.mat1                  n × N_D
//! mask.txt                     one `low`/`high` per voxel
//! layers/layer_<k>.mat1        n × (m_img·d_img)
//! captions/<stimulus>/<j>.mat1 m_text × d_text
//! meta.txt                     key=value
//! projection.mat1              optional d_src × d_img token projection
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use crate::alignment::{region_layer_rsa, LayerStack, RsaMode, RsaRow};
use crate::data::mat1::{load_matrix, save_matrix};
use crate::data::regions::{split_region_rows, Region, RegionMask};
use crate::data::synth::Dataset;
use crate::data::targets::{average_captions, average_layers, fuse_targets, project_tokens};
use crate::error::{Error, Result};
use crate::Mat;

pub const PROJECTION_FILE: &str = "projection.mat1";

/// Detail, semantic and fused image targets, one flattened row per stimulus.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageTargetSet {
    pub detail: Mat,
    pub semantic: Mat,
    pub fused: Mat,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.n_train + self.n_test
    }

    pub fn train_indices(&self) -> Vec<usize> {
        (0..self.n_train).collect()
    }

    pub fn test_indices(&self) -> Vec<usize> {
        (self.n_train..self.n()).collect()
    }

    /// `(F_S, F_D)` for every stimulus.
    pub fn fmri(&self) -> Result<(Mat, Mat)> {
        split_region_rows(&self.voxels, &self.mask)
    }

    /// Caption-averaged text targets `E_T`, flattened per row.
    pub fn text_targets(&self) -> Result<Mat> {
        let flat = self.m_text * self.d_text;
        let mut out = Mat::zeros(self.n(), flat);
        for (i, caps) in self.captions.iter().enumerate() {
            let e = average_captions(caps).map_err(|e| e.context(format!("stimulus {i}")))?;
            if e.len() != flat {
                return Err(Error::shape(format!("stimulus {i}: caption has {} entries, expected {flat}", e.len())));
            }
            out.row_mut(i).copy_from_slice(e.as_slice());
        }
        Ok(out)
    }

    pub fn final_layer_id(&self) -> usize {
        self.layers.last().0
    }

    /// Detail target from layers `lo..=hi`, semantic target from the final layer.
    pub fn image_targets(&self, lo: usize, hi: usize) -> Result<ImageTargetSet> {
        let detail = average_layers(&self.layers, lo, hi)?;
        let semantic = self.layers.last().1.clone();
        let fused = fuse_targets(&detail, &semantic)?;
        Ok(ImageTargetSet { detail, semantic, fused })
    }

    /// Region-by-layer RSA over the first `n` stimuli, regions named by
    /// [`Region::long_name`].
    pub fn region_rsa(&self, n: usize, mode: RsaMode<f64>) -> Result<Vec<RsaRow<f64>>> {
        if n > self.n() {
            return Err(Error::RangeError(format!("asked for {n} stimuli, dataset has {}", self.n())));
        }
        let idx: Vec<usize> = (0..n).collect();
        let voxels = self.voxels.select_rows(&idx)?;
        let regions = Region::ALL
            .iter()
            .map(|&r| Ok((r.long_name().to_string(), voxels.select_cols(&self.mask.indices(r))?)))
            .collect::<Result<Vec<_>>>()?;
        region_layer_rsa(&regions, &self.layers.select_stimuli(&idx)?, mode)
    }

    pub fn check(&self) -> Result<()> {
        let n = self.n();
        if self.voxels.rows() != n || self.layers.n_stimuli() != n || self.captions.len() != n {
            return Err(Error::shape(format!(
                "dataset of {n} stimuli has {} voxel rows, {} layer rows, {} caption sets",
                self.voxels.rows(),
                self.layers.n_stimuli(),
                self.captions.len()
            )));
        }
        if self.voxels.cols() != self.mask.n_d() {
            return Err(Error::shape("voxel width differs from the region mask"));
        }
        if self.layers.d_flat() != self.m_img * self.d_img {
            return Err(Error::shape("layer width differs from m_img·d_img"));
        }
        for (i, caps) in self.captions.iter().enumerate() {
            if caps.is_empty() {
                return Err(Error::degenerate(format!("stimulus {i} has no captions")));
            }
            if caps.iter().any(|c| c.shape() != (self.m_text, self.d_text)) {
                return Err(Error::shape(format!("stimulus {i}: caption shape differs from m_text×d_text")));
            }
        }
        Ok(())
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn mkdir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

pub fn save_dataset(ds: &Dataset, dir: &Path) -> Result<()> {
    ds.check()?;
    mkdir(dir)?;
    save_matrix(&ds.voxels, &dir.join("voxels.mat1"))?;
    write(&dir.join("mask.txt"), &ds.mask.to_text())?;
    mkdir(&dir.join("layers"))?;
    for (id, m) in ds.layers.layer_ids().iter().zip(ds.layers.layers()) {
        save_matrix(m, &dir.join("layers").join(format!("layer_{id}.mat1")))?;
    }
    for (i, caps) in ds.captions.iter().enumerate() {
        let sub = dir.join("captions").join(i.to_string());
        mkdir(&sub)?;
        for (j, c) in caps.iter().enumerate() {
            save_matrix(c, &sub.join(format!("{j}.mat1")))?;
        }
    }
    let meta = format!(
        "n_train={}\nn_test={}\nn_low={}\nn_high={}\nm_text={}\nd_text={}\nm_img={}\nd_img={}\nlayers={}\nseed={}\n",
        ds.n_train,
        ds.n_test,
        ds.mask.count(crate::data::Region::LowLevel),
        ds.mask.n_s(),
        ds.m_text,
        ds.d_text,
        ds.m_img,
        ds.d_img,
        ds.layers.layer_ids().iter().map(|k| k.to_string()).collect::<Vec<_>>().join(","),
        ds.seed
    );
    write(&dir.join("meta.txt"), &meta)
}

fn parse_meta(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidState(format!("meta.txt line {}: expected key=value", i + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn meta_get<T: std::str::FromStr>(meta: &BTreeMap<String, String>, key: &str) -> Result<T> {
    meta.get(key)
        .ok_or_else(|| Error::InvalidState(format!("meta.txt lacks {key}")))?
        .parse()
        .map_err(|_| Error::InvalidState(format!("meta.txt: {key} is not a valid value")))
}

/// Loads a dataset directory, applying `projection.mat1` to the layer
/// tokens when present.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let meta_path = dir.join("meta.txt");
    let meta = parse_meta(&std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?)?;
    let n_train: usize = meta_get(&meta, "n_train")?;
    let n_test: usize = meta_get(&meta, "n_test")?;
    let m_img: usize = meta_get(&meta, "m_img")?;
    let mut d_img: usize = meta_get(&meta, "d_img")?;
    let ids: Vec<usize> = meta_get::<String>(&meta, "layers")?
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| Error::InvalidState("meta.txt: bad layer id".into())))
        .collect::<Result<_>>()?;

    let voxels = load_matrix(&dir.join("voxels.mat1"))?;
    let mask_path = dir.join("mask.txt");
    let mask = RegionMask::parse(&std::fs::read_to_string(&mask_path).map_err(|e| Error::io(&mask_path, e))?)?;
    let mut layers = ids
        .iter()
        .map(|k| load_matrix(&dir.join("layers").join(format!("layer_{k}.mat1"))))
        .collect::<Result<Vec<_>>>()?;
    let proj_path = dir.join(PROJECTION_FILE);
    if proj_path.exists() {
        let proj = load_matrix(&proj_path)?;
        layers = layers
            .iter()
            .map(|l| project_tokens(l, m_img, &proj))
            .collect::<Result<Vec<_>>>()?;
        d_img = proj.cols();
    }
    let n = n_train + n_test;
    let mut captions = Vec::with_capacity(n);
    for i in 0..n {
        let sub = dir.join("captions").join(i.to_string());
        let mut caps = Vec::new();
        for j in 0.. {
            let p = sub.join(format!("{j}.mat1"));
            if !p.exists() {
                break;
            }
            caps.push(load_matrix(&p)?);
        }
        captions.push(caps);
    }
    let ds = Dataset {
        voxels,
        mask,
        layers: LayerStack::new(ids, layers)?,
        captions,
        n_train,
        n_test,
        m_text: meta_get(&meta, "m_text")?,
        d_text: meta_get(&meta, "d_text")?,
        m_img,
        d_img,
        seed: meta_get(&meta, "seed")?,
    };
    ds.check()?;
    Ok(ds)
}

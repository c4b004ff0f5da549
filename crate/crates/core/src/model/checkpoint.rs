//! Checkpoint directory: one MAT1 file per tensor plus `manifest.txt` with
//! sorted lines `tensor_name=filename rows cols`.

use std::collections::BTreeMap;
use std::path::Path;

use crate::data::mat1::{load_matrix, save_matrix};
use crate::error::{Error, Result};
use crate::model::config::ModelConfig;
use crate::model::params::{ImageBranch, ModelParams, TextBranch};
use crate::numeric::Rng;

pub const MANIFEST: &str = "manifest.txt";

pub fn save_checkpoint(params: &ModelParams, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = String::new();
    for (name, m) in params.tensors() {
        let file = format!("{name}.mat1");
        save_matrix(m, &dir.join(&file))?;
        manifest.push_str(&format!("{name}={file} {} {}\n", m.rows(), m.cols()));
    }
    let path = dir.join(MANIFEST);
    std::fs::write(&path, manifest).map_err(|e| Error::io(&path, e))
}

struct Entry {
    file: String,
    rows: usize,
    cols: usize,
}

fn parse_manifest(text: &str, path: &Path) -> Result<BTreeMap<String, Entry>> {
    let bad = |line: usize, msg: &str| Error::InvalidState(format!("{}:{line}: {msg}", path.display()));
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (name, rest) = line.split_once('=').ok_or_else(|| bad(i + 1, "expected name=file rows cols"))?;
        let parts: Vec<&str> = rest.split_whitespace().collect();
        let [file, rows, cols] = parts[..] else {
            return Err(bad(i + 1, "expected name=file rows cols"));
        };
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad(i + 1, "rows and cols must be integers"));
        let entry = Entry { file: file.to_string(), rows: num(rows)?, cols: num(cols)? };
        if out.insert(name.to_string(), entry).is_some() {
            return Err(bad(i + 1, "duplicate tensor name"));
        }
    }
    Ok(out)
}

/// Loads a checkpoint and checks every tensor against `cfg`. Branches are
/// present exactly when the manifest names their tensors.
pub fn load_checkpoint(dir: &Path, cfg: &ModelConfig) -> Result<ModelParams> {
    cfg.validate()?;
    let path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut entries = parse_manifest(&text, &path)?;
    let has = |prefix: &str| entries.keys().any(|k| k.starts_with(prefix));
    let template = Rng::new(0);
    let mut params = ModelParams {
        text: has("text.").then(|| TextBranch::init(cfg, &template)),
        image: has("image.").then(|| ImageBranch::init(cfg, &template)),
    };
    for (name, slot) in params.tensors_mut() {
        let entry = entries
            .remove(&name)
            .ok_or_else(|| Error::InvalidState(format!("checkpoint lacks tensor {name}")))?;
        let m = load_matrix(&dir.join(&entry.file))?;
        if m.shape() != (entry.rows, entry.cols) || m.shape() != slot.shape() {
            return Err(Error::shape(format!(
                "tensor {name}: manifest {}x{}, file {:?}, config {:?}",
                entry.rows,
                entry.cols,
                m.shape(),
                slot.shape()
            )));
        }
        *slot = m;
    }
    if let Some(name) = entries.keys().next() {
        return Err(Error::InvalidState(format!("unknown tensor {name} in checkpoint")));
    }
    params.check(cfg)?;
    Ok(params)
}

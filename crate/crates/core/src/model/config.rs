use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Layer widths and dropout rates of the dual-branch network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Semantic (high-level region) voxel count.
    pub n_s: usize,
    /// Detail voxel count (all regions).
    pub n_d: usize,
    pub latent_dim: usize,
    pub m_text: usize,
    pub d_text: usize,
    pub m_img: usize,
    pub d_img: usize,
    pub dropout_codec: f64,
    pub dropout_backbone: f64,
}

/// Token and width settings of the full-scale text and image embeddings
/// (77×768 and 257×768) and the corresponding training batch sizes.
pub const FULL_SCALE_TEXT_TOKENS: (usize, usize) = (77, 768);
pub const FULL_SCALE_IMAGE_TOKENS: (usize, usize) = (257, 768);
pub const FULL_SCALE_BATCH_TEXT: usize = 250;
pub const FULL_SCALE_BATCH_IMAGE: usize = 150;

impl Default for ModelConfig {
    /// Desk-scale defaults.
    fn default() -> Self {
        ModelConfig {
            n_s: 60,
            n_d: 140,
            latent_dim: 128,
            m_text: 8,
            d_text: 16,
            m_img: 12,
            d_img: 16,
            dropout_codec: 0.15,
            dropout_backbone: 0.5,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("n_s", self.n_s),
            ("n_d", self.n_d),
            ("latent_dim", self.latent_dim),
            ("m_text", self.m_text),
            ("d_text", self.d_text),
            ("m_img", self.m_img),
            ("d_img", self.d_img),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::RangeError(format!("model dimension {name} must be >= 1")));
        }
        for (name, p) in [
            ("dropout_codec", self.dropout_codec),
            ("dropout_backbone", self.dropout_backbone),
        ] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::RangeError(format!("{name} = {p} must lie in [0, 1)")));
            }
        }
        Ok(())
    }

    pub fn text_flat(&self) -> usize {
        self.m_text * self.d_text
    }

    pub fn image_flat(&self) -> usize {
        self.m_img * self.d_img
    }
}

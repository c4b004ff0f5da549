//! Representational alignment: HSIC/CKA, RDMs, RSA and layer-wise analyses.

pub mod export;
pub mod kernel;
pub mod layers;
pub mod rdm;

pub use export::{format_sig9, write_matrix_csv, write_rsa_csv};
pub use kernel::{centered_gram, cka, hsic};
pub use layers::{layer_cka_heatmap, region_layer_rsa, rsa_peaks, LayerStack, RsaMode, RsaRow};
pub use rdm::{rdm_from_features, rsa, Rdm};

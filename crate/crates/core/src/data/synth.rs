//! Planted-structure generator.
//!
//! Each stimulus has a detail factor `z_det` and a semantic factor `z_sem`.
//! Low-level voxels see only `z_det`, high-level voxels only `z_sem`. Layer
//! `l` of the vision targets mixes the two with weight `alpha_l` on detail,
//! falling to a purely semantic final layer. Captions see only `z_sem`.

use serde::{Deserialize, Serialize};

use crate::alignment::LayerStack;
use crate::data::regions::RegionMask;
use crate::error::{Error, Result};
use crate::numeric::Rng;
use crate::Mat;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_train: usize,
    pub n_test: usize,
    pub n_low: usize,
    pub n_high: usize,
    pub k_sem: usize,
    pub k_det: usize,
    /// Detail weight per planted layer, strictly decreasing, ending at 0.
    pub alphas: Vec<f64>,
    pub noise_low: f64,
    pub noise_high: f64,
    pub noise_layer: f64,
    pub noise_caption: f64,
    pub max_captions: usize,
    pub m_text: usize,
    pub d_text: usize,
    pub m_img: usize,
    pub d_img: usize,
    pub seed: u64,
}

/// `n` weights falling linearly from 1 to 0.
pub fn linear_alphas(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n).map(|l| (n - 1 - l) as f64 / (n - 1) as f64).collect()
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_train: 512,
            n_test: 64,
            n_low: 80,
            n_high: 60,
            k_sem: 6,
            k_det: 8,
            alphas: linear_alphas(8),
            noise_low: 0.1,
            noise_high: 0.1,
            noise_layer: 0.1,
            noise_caption: 0.1,
            max_captions: 5,
            m_text: 8,
            d_text: 16,
            m_img: 12,
            d_img: 16,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn n(&self) -> usize {
        self.n_train + self.n_test
    }

    pub fn n_layers(&self) -> usize {
        self.alphas.len()
    }

    /// Sets every noise level to `std`.
    pub fn with_noise(mut self, std: f64) -> Self {
        self.noise_low = std;
        self.noise_high = std;
        self.noise_layer = std;
        self.noise_caption = std;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let range = |msg: String| Err(Error::RangeError(msg));
        for (name, v) in [
            ("n_train", self.n_train),
            ("n_low", self.n_low),
            ("n_high", self.n_high),
            ("k_sem", self.k_sem),
            ("k_det", self.k_det),
            ("max_captions", self.max_captions),
            ("m_text", self.m_text),
            ("d_text", self.d_text),
            ("m_img", self.m_img),
            ("d_img", self.d_img),
        ] {
            if v == 0 {
                return range(format!("{name} must be >= 1"));
            }
        }
        if self.alphas.is_empty() {
            return range("alphas must name at least one layer".into());
        }
        if let Some(a) = self.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return range(format!("alphas: {a} lies outside [0, 1]"));
        }
        if self.alphas.windows(2).any(|w| w[1] >= w[0]) {
            return range("alphas must be strictly decreasing".into());
        }
        if *self.alphas.last().unwrap() != 0.0 {
            return range("alphas: the final layer must have alpha 0".into());
        }
        for (name, v) in [
            ("noise_low", self.noise_low),
            ("noise_high", self.noise_high),
            ("noise_layer", self.noise_layer),
            ("noise_caption", self.noise_caption),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return range(format!("{name} must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

/// Voxels, region mask, planted layer targets and captions for `n` stimuli;
/// the first `n_train` are the training split.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub voxels: Mat,
    pub mask: RegionMask,
    /// Layer ids `1..=L`, each `n × (m_img·d_img)`.
    pub layers: LayerStack<f64>,
    /// Per stimulus, `C_i` caption embeddings of shape `m_text × d_text`.
    pub captions: Vec<Vec<Mat>>,
    pub n_train: usize,
    pub n_test: usize,
    pub m_text: usize,
    pub d_text: usize,
    pub m_img: usize,
    pub d_img: usize,
    pub seed: u64,
}

/// Generating matrices, scaled so each mixed coordinate has unit variance.
struct Mixing {
    a_low: Mat,
    a_high: Mat,
    w_det: Mat,
    w_sem: Mat,
    w_txt: Mat,
}

impl Mixing {
    fn draw(cfg: &SynthConfig, rng: &Rng) -> Self {
        let draw = |label: &str, rows: usize, k: usize| rng.child(label).normal_matrix(rows, k, 1.0 / (k as f64).sqrt());
        let img = cfg.m_img * cfg.d_img;
        Mixing {
            a_low: draw("a_low", cfg.n_low, cfg.k_det),
            a_high: draw("a_high", cfg.n_high, cfg.k_sem),
            w_det: draw("w_det", img, cfg.k_det),
            w_sem: draw("w_sem", img, cfg.k_sem),
            w_txt: draw("w_txt", cfg.m_text * cfg.d_text, cfg.k_sem),
        }
    }
}

fn apply(a: &Mat, z: &[f64]) -> Vec<f64> {
    a.row_iter().map(|r| r.iter().zip(z).map(|(x, y)| x * y).sum()).collect()
}

fn noisy(mut v: Vec<f64>, std: f64, rng: &mut Rng) -> Vec<f64> {
    if std > 0.0 {
        for x in &mut v {
            *x += std * rng.normal();
        }
    }
    v
}

/// Pure function of `cfg`: the same config gives a bit-identical dataset.
pub fn synth_generate(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let root = Rng::new(cfg.seed);
    let mix = Mixing::draw(cfg, &root.child("mixing"));
    let n = cfg.n();
    let img = cfg.m_img * cfg.d_img;
    let n_d = cfg.n_low + cfg.n_high;
    let mut voxels = Mat::zeros(n, n_d);
    let mut layers: Vec<Mat> = (0..cfg.n_layers()).map(|_| Mat::zeros(n, img)).collect();
    let mut captions = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = root.child_indexed("stimulus", i as u64);
        let z_det: Vec<f64> = (0..cfg.k_det).map(|_| rng.normal()).collect();
        let z_sem: Vec<f64> = (0..cfg.k_sem).map(|_| rng.normal()).collect();

        let low = noisy(apply(&mix.a_low, &z_det), cfg.noise_low, &mut rng);
        let high = noisy(apply(&mix.a_high, &z_sem), cfg.noise_high, &mut rng);
        let row = voxels.row_mut(i);
        row[..cfg.n_low].copy_from_slice(&low);
        row[cfg.n_low..].copy_from_slice(&high);

        let det = apply(&mix.w_det, &z_det);
        let sem = apply(&mix.w_sem, &z_sem);
        for (layer, &alpha) in layers.iter_mut().zip(&cfg.alphas) {
            let mixed = det.iter().zip(&sem).map(|(d, s)| alpha * d + (1.0 - alpha) * s).collect();
            layer.row_mut(i).copy_from_slice(&noisy(mixed, cfg.noise_layer, &mut rng));
        }

        let text = apply(&mix.w_txt, &z_sem);
        let c = 1 + rng.below(cfg.max_captions);
        let caps = (0..c)
            .map(|_| Mat::new(cfg.m_text, cfg.d_text, noisy(text.clone(), cfg.noise_caption, &mut rng)))
            .collect::<Result<Vec<_>>>()?;
        captions.push(caps);
    }
    Ok(Dataset {
        voxels,
        mask: RegionMask::blocks(cfg.n_low, cfg.n_high)?,
        layers: LayerStack::new((1..=cfg.n_layers()).collect(), layers)?,
        captions,
        n_train: cfg.n_train,
        n_test: cfg.n_test,
        m_text: cfg.m_text,
        d_text: cfg.d_text,
        m_img: cfg.m_img,
        d_img: cfg.d_img,
        seed: cfg.seed,
    })
}

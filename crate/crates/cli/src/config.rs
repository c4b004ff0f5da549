//! `key=value` run configuration with `#` comments.

use std::collections::BTreeSet;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use brainalign::alignment::RsaMode;
use brainalign::data::{Dataset, SynthConfig};
use brainalign::eval::BACKPROJECT_LAMBDA;
use brainalign::model::ModelConfig;
use brainalign::train::{TrainConfig, Variant};

use crate::CliError;

pub const RESOLVED_CONFIG: &str = "resolved_config.txt";

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisConfig {
    /// `raw` or `ridge`.
    pub rsa_mode: String,
    pub rsa_lambda: f64,
    pub rsa_stimuli: usize,
    pub scan_ranges: Vec<(usize, usize)>,
    pub scan_epochs: usize,
    pub lasso_lambda: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            rsa_mode: "raw".into(),
            rsa_lambda: 1.0,
            rsa_stimuli: 128,
            scan_ranges: vec![(1, 3), (2, 6), (4, 7)],
            scan_epochs: 10,
            lasso_lambda: BACKPROJECT_LAMBDA,
        }
    }
}

impl AnalysisConfig {
    pub fn rsa(&self) -> Result<RsaMode<f64>, CliError> {
        match self.rsa_mode.as_str() {
            "raw" => Ok(RsaMode::Raw),
            "ridge" => Ok(RsaMode::Ridge { lambda: self.rsa_lambda }),
            other => Err(CliError::Usage(format!("rsa_mode: unknown mode {other:?} (expected raw or ridge)"))),
        }
    }
}

/// Everything a run can be configured with. Model dimensions other than
/// the latent width come from the dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub synth: SynthConfig,
    pub latent_dim: usize,
    pub dropout_codec: f64,
    pub dropout_backbone: f64,
    pub train: TrainConfig,
    pub variant: Variant,
    pub analysis: AnalysisConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let m = ModelConfig::default();
        RunConfig {
            synth: SynthConfig::default(),
            latent_dim: m.latent_dim,
            dropout_codec: m.dropout_codec,
            dropout_backbone: m.dropout_backbone,
            train: TrainConfig::default(),
            variant: Variant::Full,
            analysis: AnalysisConfig::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("{key}: cannot parse {v:?}"))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, String> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse(key, s.trim())).collect()
}

fn parse_ranges(key: &str, v: &str) -> Result<Vec<(usize, usize)>, String> {
    v.split(',')
        .map(|r| {
            let r = r.trim();
            let (lo, hi) = r.split_once('-').unwrap_or((r, r));
            Ok((parse(key, lo.trim())?, parse(key, hi.trim())?))
        })
        .collect()
}

fn join<T: Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Applies one `key=value` pair.
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        let s = &mut self.synth;
        let t = &mut self.train;
        let a = &mut self.analysis;
        match key {
            "seed" => {
                let seed = parse(key, v)?;
                s.seed = seed;
                t.seed = seed;
            }
            "n_train" => s.n_train = parse(key, v)?,
            "n_test" => s.n_test = parse(key, v)?,
            "n_low" => s.n_low = parse(key, v)?,
            "n_high" => s.n_high = parse(key, v)?,
            "k_sem" => s.k_sem = parse(key, v)?,
            "k_det" => s.k_det = parse(key, v)?,
            "alphas" => s.alphas = parse_list(key, v)?,
            "noise_low" => s.noise_low = parse(key, v)?,
            "noise_high" => s.noise_high = parse(key, v)?,
            "noise_layer" => s.noise_layer = parse(key, v)?,
            "noise_caption" => s.noise_caption = parse(key, v)?,
            "max_captions" => s.max_captions = parse(key, v)?,
            "m_text" => s.m_text = parse(key, v)?,
            "d_text" => s.d_text = parse(key, v)?,
            "m_img" => s.m_img = parse(key, v)?,
            "d_img" => s.d_img = parse(key, v)?,
            "latent_dim" => self.latent_dim = parse(key, v)?,
            "dropout_codec" => self.dropout_codec = parse(key, v)?,
            "dropout_backbone" => self.dropout_backbone = parse(key, v)?,
            "epochs" => t.epochs = parse(key, v)?,
            "batch_size" => t.batch_size = parse(key, v)?,
            "learning_rate" => t.learning_rate = parse(key, v)?,
            "beta1" => t.beta1 = parse(key, v)?,
            "beta2" => t.beta2 = parse(key, v)?,
            "eps" => t.eps = parse(key, v)?,
            "w_cka" => t.w_cka = parse(key, v)?,
            "w_sims" => t.w_sims = parse(key, v)?,
            "w_crec" => t.w_crec = parse(key, v)?,
            "anchor" => t.anchor = v.parse().map_err(|e| format!("anchor: {e}"))?,
            "layer_lo" => t.layer_lo = parse(key, v)?,
            "layer_hi" => t.layer_hi = parse(key, v)?,
            "separate_branches" => t.separate_branches = parse(key, v)?,
            "batch_text" => t.batch_text = parse(key, v)?,
            "batch_image" => t.batch_image = parse(key, v)?,
            "variant" => self.variant = v.parse().map_err(|e| format!("variant: {e}"))?,
            "rsa_mode" => a.rsa_mode = v.to_string(),
            "rsa_lambda" => a.rsa_lambda = parse(key, v)?,
            "rsa_stimuli" => a.rsa_stimuli = parse(key, v)?,
            "scan_ranges" => a.scan_ranges = parse_ranges(key, v)?,
            "scan_epochs" => a.scan_epochs = parse(key, v)?,
            "lasso_lambda" => a.lasso_lambda = parse(key, v)?,
            _ => return Err(format!("unknown config key {key:?}")),
        }
        Ok(())
    }

    /// Every key with its current value, in file order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let s = &self.synth;
        let t = &self.train;
        let a = &self.analysis;
        vec![
            ("seed", s.seed.to_string()),
            ("n_train", s.n_train.to_string()),
            ("n_test", s.n_test.to_string()),
            ("n_low", s.n_low.to_string()),
            ("n_high", s.n_high.to_string()),
            ("k_sem", s.k_sem.to_string()),
            ("k_det", s.k_det.to_string()),
            ("alphas", join(&s.alphas)),
            ("noise_low", s.noise_low.to_string()),
            ("noise_high", s.noise_high.to_string()),
            ("noise_layer", s.noise_layer.to_string()),
            ("noise_caption", s.noise_caption.to_string()),
            ("max_captions", s.max_captions.to_string()),
            ("m_text", s.m_text.to_string()),
            ("d_text", s.d_text.to_string()),
            ("m_img", s.m_img.to_string()),
            ("d_img", s.d_img.to_string()),
            ("latent_dim", self.latent_dim.to_string()),
            ("dropout_codec", self.dropout_codec.to_string()),
            ("dropout_backbone", self.dropout_backbone.to_string()),
            ("epochs", t.epochs.to_string()),
            ("batch_size", t.batch_size.to_string()),
            ("learning_rate", t.learning_rate.to_string()),
            ("beta1", t.beta1.to_string()),
            ("beta2", t.beta2.to_string()),
            ("eps", t.eps.to_string()),
            ("w_cka", t.w_cka.to_string()),
            ("w_sims", t.w_sims.to_string()),
            ("w_crec", t.w_crec.to_string()),
            ("anchor", t.anchor.as_str().to_string()),
            ("layer_lo", t.layer_lo.to_string()),
            ("layer_hi", t.layer_hi.to_string()),
            ("separate_branches", t.separate_branches.to_string()),
            ("batch_text", t.batch_text.to_string()),
            ("batch_image", t.batch_image.to_string()),
            ("variant", self.variant.to_string()),
            ("rsa_mode", a.rsa_mode.clone()),
            ("rsa_lambda", a.rsa_lambda.to_string()),
            ("rsa_stimuli", a.rsa_stimuli.to_string()),
            ("scan_ranges", a.scan_ranges.iter().map(|(l, h)| format!("{l}-{h}")).collect::<Vec<_>>().join(",")),
            ("scan_epochs", a.scan_epochs.to_string()),
            ("lasso_lambda", a.lasso_lambda.to_string()),
        ]
    }

    /// Parses a config and also returns the keys it set explicitly.
    pub fn parse_keys(text: &str) -> Result<(Self, BTreeSet<String>), CliError> {
        let mut cfg = RunConfig::default();
        let mut keys = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value, got {raw:?}", i + 1)))?;
            cfg.set(k.trim(), v.trim()).map_err(|e| CliError::Usage(format!("config line {}: {e}", i + 1)))?;
            keys.insert(k.trim().to_string());
        }
        Ok((cfg, keys))
    }

    pub fn load(path: Option<&Path>) -> Result<(Self, BTreeSet<String>), CliError> {
        match path {
            None => Ok((RunConfig::default(), BTreeSet::new())),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
                Self::parse_keys(&text)
            }
        }
    }

    /// Rejects a dataset whose dimensions disagree with keys the config set.
    pub fn check_dataset(&self, keys: &BTreeSet<String>, ds: &Dataset) -> Result<(), CliError> {
        let s = &self.synth;
        let dims = [
            ("n_high", s.n_high, ds.mask.n_s()),
            ("m_text", s.m_text, ds.m_text),
            ("d_text", s.d_text, ds.d_text),
            ("m_img", s.m_img, ds.m_img),
            ("d_img", s.d_img, ds.d_img),
        ];
        for (k, want, got) in dims {
            if keys.contains(k) && want != got {
                return Err(CliError::Usage(format!("dimension mismatch: config {k}={want}, dataset has {got}")));
            }
        }
        if keys.contains("n_low") && s.n_low != ds.mask.n_d() - ds.mask.n_s() {
            return Err(CliError::Usage(format!(
                "dimension mismatch: config n_low={}, dataset has {}",
                s.n_low,
                ds.mask.n_d() - ds.mask.n_s()
            )));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# resolved configuration, defaults included\n");
        for (k, v) in self.entries() {
            out.push_str(&format!("{k}={v}\n"));
        }
        out
    }

    pub fn write_resolved(&self, dir: &Path) -> Result<(), CliError> {
        crate::write_file(&dir.join(RESOLVED_CONFIG), self.to_text().as_bytes())
    }

    /// Model configuration for a dataset's dimensions.
    pub fn model_for(&self, ds: &Dataset) -> ModelConfig {
        ModelConfig {
            n_s: ds.mask.n_s(),
            n_d: ds.mask.n_d(),
            latent_dim: self.latent_dim,
            m_text: ds.m_text,
            d_text: ds.d_text,
            m_img: ds.m_img,
            d_img: ds.d_img,
            dropout_codec: self.dropout_codec,
            dropout_backbone: self.dropout_backbone,
        }
    }

    /// Checks every section that a command is about to use.
    pub fn validate(&self) -> Result<(), CliError> {
        self.synth.validate().map_err(|e| CliError::Usage(format!("config: {e}")))?;
        self.train.validate().map_err(|e| CliError::Usage(format!("config: {e}")))?;
        for (name, p) in [("dropout_codec", self.dropout_codec), ("dropout_backbone", self.dropout_backbone)] {
            if !(0.0..1.0).contains(&p) {
                return Err(CliError::Usage(format!("config: {name} = {p} must lie in [0, 1)")));
            }
        }
        if self.latent_dim == 0 {
            return Err(CliError::Usage("config: latent_dim must be >= 1".into()));
        }
        let a = &self.analysis;
        self.analysis.rsa()?;
        if a.rsa_stimuli < 3 || a.scan_epochs == 0 || !(a.lasso_lambda > 0.0) || !(a.rsa_lambda > 0.0) {
            return Err(CliError::Usage(
                "config: rsa_stimuli >= 3, scan_epochs >= 1, lasso_lambda > 0 and rsa_lambda > 0 are required".into(),
            ));
        }
        if a.scan_ranges.iter().any(|(l, h)| l > h) {
            return Err(CliError::Usage("config: scan_ranges entries must read lo-hi with lo <= hi".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_text(text: &str) -> Result<RunConfig, CliError> {
        RunConfig::parse_keys(text).map(|(cfg, _)| cfg)
    }

    #[test]
    fn resolved_text_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.set("alphas", "1,0.25,0").unwrap();
        cfg.set("noise_low", "0.3").unwrap();
        cfg.set("anchor", "target_first_token").unwrap();
        cfg.set("scan_ranges", "1-2,3").unwrap();
        cfg.set("variant", "text+detail").unwrap();
        let back = parse_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.analysis.scan_ranges, vec![(1, 2), (3, 3)]);
    }

    #[test]
    fn every_entry_is_settable() {
        let cfg = RunConfig::default();
        let mut other = RunConfig::default();
        for (k, v) in cfg.entries() {
            other.set(k, &v).unwrap();
        }
        assert_eq!(other, cfg);
    }

    #[test]
    fn comments_blanks_and_unknown_keys() {
        let cfg = parse_text("# header\n\nepochs = 3 # trailing\nseed=9\n").unwrap();
        assert_eq!(cfg.train.epochs, 3);
        assert_eq!((cfg.synth.seed, cfg.train.seed), (9, 9));
        assert_eq!(cfg.train.batch_size, 32);
        let err = parse_text("epoch=3\n").unwrap_err();
        assert!(err.to_string().contains("epoch"));
        assert!(parse_text("epochs\n").is_err());
        assert!(parse_text("epochs=three\n").is_err());
    }

    #[test]
    fn invalid_schedule_names_the_key() {
        let cfg = parse_text("alphas=0.2,0.5,0\n").unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("alphas"), "{err}");
    }
}

use std::collections::BTreeSet;
use std::path::Path;

use brainalign::alignment::{layer_cka_heatmap, region_layer_rsa, write_matrix_csv, write_rsa_csv};
use brainalign::data::{load_dataset, save_dataset, synth_generate, Dataset, Region};
use brainalign::eval::{backproject, evaluate, image_codes, Metrics};
use brainalign::model::{load_checkpoint, save_checkpoint, ImagePaths};
use brainalign::train::{gradient_suite, layer_scan, layer_scan_csv, run_ablation, TrainConfig, TrainData, TrainReport};
use serde::Serialize;
use serde_json::json;

use crate::config::{RunConfig, RESOLVED_CONFIG};
use crate::{AnalyzeMode, Cli, CliError, Command};

pub const CHECKPOINT_DIR: &str = "checkpoint";
pub const METRICS_FILE: &str = "metrics.json";
pub const LOSS_HISTORY_FILE: &str = "loss_history.csv";
pub const REPORT_FILE: &str = "train_report.json";

#[derive(Serialize)]
struct MetricsJson<'a> {
    variant: &'a str,
    seed: u64,
    pixcorr: Option<f64>,
    ssim: Option<f64>,
    two_way_image: Option<f64>,
    two_way_text: Option<f64>,
    loss_history_file: Option<&'a str>,
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::GenData { config, out } => {
            let (cfg, _) = load_config(config.as_deref(), cli.seed)?;
            gen_data(&cfg, out, cli.force)
        }
        Command::Train { config, data, out, variant } => {
            let (mut cfg, keys) = load_config(config.as_deref(), cli.seed)?;
            if let Some(v) = variant {
                cfg.variant = v.parse().map_err(|e| CliError::Usage(format!("--variant: {e}")))?;
            }
            train(&cfg, &keys, data, out, cli.force)
        }
        Command::Eval { ckpt, data, out } => eval(ckpt, data, out, cli.force),
        Command::Analyze { mode, data, ckpt, config, out } => {
            let (cfg, _) = load_config(config.as_deref(), cli.seed)?;
            analyze(&cfg, *mode, data, ckpt.as_deref(), out, cli.force)
        }
        Command::Backproject { ckpt, data, lambda, out } => backproject_cmd(ckpt, data, *lambda, out, cli.force),
        Command::Gradcheck { seeds } => gradcheck(*seeds),
    }
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<(RunConfig, BTreeSet<String>), CliError> {
    let (mut cfg, mut keys) = RunConfig::load(path)?;
    if let Some(s) = seed {
        cfg.synth.seed = s;
        cfg.train.seed = s;
        keys.insert("seed".into());
    }
    cfg.validate()?;
    Ok((cfg, keys))
}

/// Creates `out`, clearing it first under `force`.
fn prepare_out(out: &Path, force: bool) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Usage(format!("{}: {e}", out.display()));
    if out.exists() {
        if !out.is_dir() {
            return Err(CliError::Usage(format!("{} exists and is not a directory", out.display())));
        }
        if std::fs::read_dir(out).map_err(io)?.next().is_some() {
            if !force {
                return Err(CliError::Usage(format!(
                    "output directory {} is not empty (use --force to replace it)",
                    out.display()
                )));
            }
            std::fs::remove_dir_all(out).map_err(io)?;
        }
    }
    std::fs::create_dir_all(out).map_err(io)
}

fn load_data(dir: &Path) -> Result<Dataset, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Usage(format!("dataset directory {} does not exist", dir.display())));
    }
    Ok(load_dataset(dir)?)
}

/// The resolved config saved next to a checkpoint.
fn checkpoint_config(ckpt: &Path) -> Result<RunConfig, CliError> {
    let path = ckpt.join(RESOLVED_CONFIG);
    if !path.is_file() {
        return Err(CliError::Usage(format!("{} has no {RESOLVED_CONFIG}", ckpt.display())));
    }
    let (cfg, _) = RunConfig::load(Some(&path))?;
    Ok(cfg)
}

fn metrics_json(cfg: &RunConfig, m: &Metrics, history: Option<&str>) -> Result<String, CliError> {
    let body = MetricsJson {
        variant: cfg.variant.as_str(),
        seed: cfg.train.seed,
        pixcorr: m.pixcorr,
        ssim: m.ssim,
        two_way_image: m.two_way_image,
        two_way_text: m.two_way_text,
        loss_history_file: history,
    };
    let mut s = serde_json::to_string_pretty(&body).map_err(|e| CliError::Usage(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn report_json(report: &TrainReport) -> Result<String, CliError> {
    let epochs: Vec<_> = report
        .epochs
        .iter()
        .map(|e| json!({ "epoch": e.epoch, "train": e.train.0, "validation": e.validation.0 }))
        .collect();
    let mut s = serde_json::to_string_pretty(&json!({ "epochs": epochs })).map_err(|e| CliError::Usage(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn gen_data(cfg: &RunConfig, out: &Path, force: bool) -> Result<(), CliError> {
    prepare_out(out, force)?;
    let ds = synth_generate(&cfg.synth)?;
    save_dataset(&ds, out)?;
    cfg.write_resolved(out)?;
    log::info!("wrote {} stimuli to {}", ds.n(), out.display());
    Ok(())
}

fn train(cfg: &RunConfig, keys: &BTreeSet<String>, data: &Path, out: &Path, force: bool) -> Result<(), CliError> {
    let ds = load_data(data)?;
    cfg.check_dataset(keys, &ds)?;
    prepare_out(out, force)?;
    let model = cfg.model_for(&ds);
    let td = TrainData::from_dataset(&ds, cfg.train.layer_lo, cfg.train.layer_hi)?;
    log::info!("training {} for {} epochs", cfg.variant, cfg.train.epochs);
    let run = run_ablation(cfg.variant, &td, &model, &cfg.train)?;
    log::info!("trained in {:.1} s", run.report.wall_clock_secs);
    let ckpt = out.join(CHECKPOINT_DIR);
    save_checkpoint(&run.params, &ckpt)?;
    cfg.write_resolved(&ckpt)?;
    cfg.write_resolved(out)?;
    crate::write_file(&out.join(LOSS_HISTORY_FILE), run.report.to_csv().as_bytes())?;
    crate::write_file(&out.join(REPORT_FILE), report_json(&run.report)?.as_bytes())?;
    crate::write_file(&out.join(METRICS_FILE), metrics_json(cfg, &run.metrics, Some(LOSS_HISTORY_FILE))?.as_bytes())?;
    Ok(())
}

fn eval(ckpt: &Path, data: &Path, out: &Path, force: bool) -> Result<(), CliError> {
    let cfg = checkpoint_config(ckpt)?;
    let ds = load_data(data)?;
    let model = cfg.model_for(&ds);
    let params = load_checkpoint(ckpt, &model)?;
    prepare_out(out, force)?;
    let td = TrainData::from_dataset(&ds, cfg.train.layer_lo, cfg.train.layer_hi)?;
    let paths = cfg.variant.branches().image.unwrap_or(ImagePaths::BOTH);
    let m = evaluate(&params, &model, &td.test, paths)?;
    cfg.write_resolved(out)?;
    crate::write_file(&out.join(METRICS_FILE), metrics_json(&cfg, &m, None)?.as_bytes())
}

fn analyze(
    cfg: &RunConfig,
    mode: AnalyzeMode,
    data: &Path,
    ckpt: Option<&Path>,
    out: &Path,
    force: bool,
) -> Result<(), CliError> {
    let ds = load_data(data)?;
    let mut text = Vec::new();
    let io = |e: std::io::Error| CliError::Usage(e.to_string());
    let file = match mode {
        AnalyzeMode::Rsa => {
            let n = cfg.analysis.rsa_stimuli.min(ds.n());
            let idx: Vec<usize> = (0..n).collect();
            let voxels = ds.voxels.select_rows(&idx)?;
            let mut regions = Vec::new();
            for r in Region::ALL {
                regions.push((r.long_name().to_string(), voxels.select_cols(&ds.mask.indices(r))?));
            }
            if let Some(ck) = ckpt {
                let ck_cfg = checkpoint_config(ck)?;
                let model = ck_cfg.model_for(&ds);
                let params = load_checkpoint(ck, &model)?;
                let (f_s, f_d) = ds.fmri()?;
                let (b_is, b_id) = image_codes(&params, &model, &f_s.select_rows(&idx)?, &f_d.select_rows(&idx)?)?;
                regions.push(("semantic_code".into(), b_is));
                regions.push(("detail_code".into(), b_id));
            }
            let rows = region_layer_rsa(&regions, &ds.layers.select_stimuli(&idx)?, cfg.analysis.rsa()?)?;
            write_rsa_csv(&mut text, &rows).map_err(io)?;
            "rsa.csv"
        }
        AnalyzeMode::CkaHeatmap => {
            let heat = layer_cka_heatmap(&ds.layers)?;
            write_matrix_csv(&mut text, &heat, Some(ds.layers.layer_ids())).map_err(io)?;
            "cka_heatmap.csv"
        }
        AnalyzeMode::LayerScan => {
            let tcfg = TrainConfig { epochs: cfg.analysis.scan_epochs, ..cfg.train.clone() };
            let rows = layer_scan(&ds, &cfg.model_for(&ds), &tcfg, &cfg.analysis.scan_ranges)?;
            text = layer_scan_csv(&rows).into_bytes();
            "layer_scan.csv"
        }
    };
    prepare_out(out, force)?;
    cfg.write_resolved(out)?;
    crate::write_file(&out.join(file), &text)
}

fn backproject_cmd(ckpt: &Path, data: &Path, lambda: Option<f64>, out: &Path, force: bool) -> Result<(), CliError> {
    let mut cfg = checkpoint_config(ckpt)?;
    if let Some(l) = lambda {
        if !(l > 0.0 && l.is_finite()) {
            return Err(CliError::Usage(format!("--lambda must be a positive number, got {l}")));
        }
        cfg.analysis.lasso_lambda = l;
    }
    let ds = load_data(data)?;
    let model = cfg.model_for(&ds);
    let params = load_checkpoint(ckpt, &model)?;
    let train_idx = ds.train_indices();
    let (f_s, f_d) = ds.fmri()?;
    let (f_s, f_d) = (f_s.select_rows(&train_idx)?, f_d.select_rows(&train_idx)?);
    let (b_is, b_id) = image_codes(&params, &model, &f_s, &f_d)?;
    let mut outputs = Vec::new();
    for (name, codes) in [("semantic", b_is), ("detail", b_id)] {
        let bp = backproject(&codes, &f_d, &ds.mask, cfg.analysis.lasso_lambda)?;
        if !bp.unconverged.is_empty() {
            log::warn!("{name}: {} feature fits hit the sweep limit", bp.unconverged.len());
        }
        outputs.push((format!("backproject_{name}.csv"), bp.to_csv()));
    }
    prepare_out(out, force)?;
    cfg.write_resolved(out)?;
    for (file, text) in outputs {
        crate::write_file(&out.join(file), text.as_bytes())?;
    }
    Ok(())
}

fn gradcheck(seeds: u64) -> Result<(), CliError> {
    let rows = gradient_suite(seeds)?;
    let mut failed = Vec::new();
    println!("{:<26} {:>12} {:>10} {:>6} result", "check", "max_rel_err", "tolerance", "seed");
    for r in &rows {
        let verdict = if r.passed() { "ok" } else { "FAIL" };
        println!("{:<26} {:>12.3e} {:>10.0e} {:>6} {verdict}", r.name, r.max_rel_err, r.tolerance, r.worst_seed);
        if !r.passed() {
            failed.push(r.name.clone());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Core(brainalign::Error::NumericalFailure(format!(
            "gradient check failed for {}",
            failed.join(", ")
        ))))
    }
}

use std::fmt;
use std::str::FromStr;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::eval::{evaluate, Metrics};
use crate::model::{ImagePaths, ModelConfig, ModelParams};
use crate::train::trainer::{train, BranchSet, TrainConfig, TrainData, TrainReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    TextOnly,
    TextSemantic,
    TextDetail,
    FullNoCrec,
    Full,
}

impl Variant {
    pub const ALL: [Variant; 5] =
        [Variant::TextOnly, Variant::TextSemantic, Variant::TextDetail, Variant::FullNoCrec, Variant::Full];

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::TextOnly => "text_only",
            Variant::TextSemantic => "text+semantic",
            Variant::TextDetail => "text+detail",
            Variant::FullNoCrec => "full_no_crec",
            Variant::Full => "full",
        }
    }

    pub fn branches(&self) -> BranchSet {
        let image = match self {
            Variant::TextOnly => None,
            Variant::TextSemantic => Some(ImagePaths::SEMANTIC),
            Variant::TextDetail => Some(ImagePaths::DETAIL),
            Variant::FullNoCrec => Some(ImagePaths::BOTH),
            Variant::Full => Some(ImagePaths::FULL),
        };
        BranchSet { text: true, image }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::RangeError(format!("unknown variant {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationRun {
    pub variant: Variant,
    pub params: ModelParams,
    pub report: TrainReport,
    pub metrics: Metrics,
}

/// Trains the variant's sub-model and evaluates it on the test split.
pub fn run_ablation(variant: Variant, data: &TrainData, cfg: &ModelConfig, tcfg: &TrainConfig) -> Result<AblationRun> {
    let branches = variant.branches();
    let (params, report) = train(data, cfg, tcfg, branches)?;
    let paths = branches.image.unwrap_or(ImagePaths::BOTH);
    let metrics = evaluate(&params, cfg, &data.test, paths)?;
    Ok(AblationRun { variant, params, report, metrics })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerScanRow {
    pub lo: usize,
    pub hi: usize,
    /// Whether the final layer is fused into the target.
    pub with_final: bool,
    pub two_way_image: f64,
}

impl LayerScanRow {
    pub fn label(&self) -> String {
        let base = if self.lo == self.hi { format!("({})", self.lo) } else { format!("({}-{})", self.lo, self.hi) };
        if self.with_final {
            format!("{base}+final")
        } else {
            base
        }
    }
}

/// Image targets for a detail range, with or without the final layer.
pub fn scan_targets(ds: &Dataset, lo: usize, hi: usize, with_final: bool) -> Result<TrainData> {
    let mut data = TrainData::from_dataset(ds, lo, hi)?;
    if !with_final {
        for b in [&mut data.train, &mut data.test] {
            b.e_semantic = b.e_detail.clone();
            b.e_fused = b.e_detail.clone();
        }
    }
    Ok(data)
}

/// For each range, trains the image branch on targets with and without
/// the final layer fused in and records identification on the test split.
pub fn layer_scan(
    ds: &Dataset,
    cfg: &ModelConfig,
    tcfg: &TrainConfig,
    ranges: &[(usize, usize)],
) -> Result<Vec<LayerScanRow>> {
    let last = ds.final_layer_id();
    let mut rows = Vec::new();
    for &(lo, hi) in ranges {
        if hi >= last {
            return Err(Error::RangeError(format!(
                "scan range {lo}-{hi} must end before the final layer {last}"
            )));
        }
        for with_final in [false, true] {
            let data = scan_targets(ds, lo, hi, with_final)?;
            let branches = BranchSet { text: false, image: Some(ImagePaths::FULL) };
            let (params, _) = train(&data, cfg, tcfg, branches)?;
            let m = evaluate(&params, cfg, &data.test, ImagePaths::FULL)?;
            rows.push(LayerScanRow {
                lo,
                hi,
                with_final,
                two_way_image: m.two_way_image.expect("image branch trained"),
            });
        }
    }
    Ok(rows)
}

/// `rank,range,two_way_image`, best first; ties keep scan order.
pub fn layer_scan_csv(rows: &[LayerScanRow]) -> String {
    let mut sorted: Vec<&LayerScanRow> = rows.iter().collect();
    sorted.sort_by(|a, b| b.two_way_image.total_cmp(&a.two_way_image));
    let mut out = String::from("rank,range,two_way_image\n");
    for (i, r) in sorted.iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", i + 1, r.label(), crate::alignment::format_sig9(r.two_way_image)));
    }
    out
}

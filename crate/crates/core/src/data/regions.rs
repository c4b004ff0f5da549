use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::Mat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    LowLevel,
    HighLevel,
}

impl Region {
    pub const ALL: [Region; 2] = [Region::LowLevel, Region::HighLevel];

    /// Token used in `mask.txt`.
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::LowLevel => "low",
            Region::HighLevel => "high",
        }
    }

    /// Name used in reports.
    pub fn long_name(&self) -> &'static str {
        match self {
            Region::LowLevel => "low_level",
            Region::HighLevel => "high_level",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.long_name())
    }
}

impl FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "low" | "low_level" => Ok(Region::LowLevel),
            "high" | "high_level" => Ok(Region::HighLevel),
            other => Err(Error::RangeError(format!("unknown region label {other:?}"))),
        }
    }
}

/// One region label per voxel, in stored voxel order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionMask {
    labels: Vec<Region>,
}

impl RegionMask {
    pub fn new(labels: Vec<Region>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::degenerate("region mask has no voxels"));
        }
        Ok(RegionMask { labels })
    }

    /// `n_low` low-level voxels followed by `n_high` high-level ones.
    pub fn blocks(n_low: usize, n_high: usize) -> Result<Self> {
        let mut labels = vec![Region::LowLevel; n_low];
        labels.extend(std::iter::repeat_n(Region::HighLevel, n_high));
        Self::new(labels)
    }

    pub fn labels(&self) -> &[Region] {
        &self.labels
    }

    pub fn indices(&self, region: Region) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == region).collect()
    }

    pub fn count(&self, region: Region) -> usize {
        self.labels.iter().filter(|&&r| r == region).count()
    }

    /// `N_S`, the high-level voxel count.
    pub fn n_s(&self) -> usize {
        self.count(Region::HighLevel)
    }

    /// `N_D`, every voxel.
    pub fn n_d(&self) -> usize {
        self.labels.len()
    }

    pub fn to_text(&self) -> String {
        self.labels.iter().map(|r| format!("{}\n", r.as_str())).collect()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let labels = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| l.trim().parse().map_err(|e: Error| e.context(format!("mask line {}", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(labels)
    }
}

/// `(F_S, F_D)`: the high-level slice and the unchanged vector.
pub fn split_regions(voxels: &[f64], mask: &RegionMask) -> Result<(Vec<f64>, Vec<f64>)> {
    if voxels.len() != mask.n_d() {
        return Err(Error::shape(format!("{} voxels but mask has {}", voxels.len(), mask.n_d())));
    }
    let f_s = mask.indices(Region::HighLevel).into_iter().map(|i| voxels[i]).collect();
    Ok((f_s, voxels.to_vec()))
}

/// Row-wise [`split_regions`] over an `n × N_D` matrix.
pub fn split_region_rows(voxels: &Mat, mask: &RegionMask) -> Result<(Mat, Mat)> {
    if voxels.cols() != mask.n_d() {
        return Err(Error::shape(format!("{} voxel columns but mask has {}", voxels.cols(), mask.n_d())));
    }
    if mask.n_s() == 0 {
        return Err(Error::degenerate("mask has no high-level voxels"));
    }
    Ok((voxels.select_cols(&mask.indices(Region::HighLevel))?, voxels.clone()))
}

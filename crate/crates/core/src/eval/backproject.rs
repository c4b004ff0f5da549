use crate::data::{Region, RegionMask};
use crate::error::{Error, Result};
use crate::eval::lasso::LassoDesign;
use crate::Mat;

#[derive(Clone, Debug, PartialEq)]
pub struct Backprojection {
    /// Mean |beta| across feature dimensions, per voxel.
    pub per_voxel: Vec<f64>,
    /// Mean of `per_voxel` over each region, in [`Region::ALL`] order.
    pub regions: Vec<(Region, f64)>,
    /// Feature dimensions whose fit hit the sweep limit.
    pub unconverged: Vec<usize>,
}

impl Backprojection {
    pub fn region_mean(&self, r: Region) -> f64 {
        self.regions.iter().find(|(x, _)| *x == r).map(|(_, v)| *v).unwrap_or(0.0)
    }

    /// `region,mean_abs_beta` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("region,mean_abs_beta\n");
        for (r, v) in &self.regions {
            out.push_str(&format!("{},{}\n", r.long_name(), crate::alignment::format_sig9(*v)));
        }
        out
    }
}

/// Default penalty for [`backproject`].
pub const BACKPROJECT_LAMBDA: f64 = 0.01;

/// One lasso fit per feature dimension, voxels as predictors.
pub fn backproject(features: &Mat, voxels: &Mat, mask: &RegionMask, lambda: f64) -> Result<Backprojection> {
    if features.rows() != voxels.rows() {
        return Err(Error::shape(format!("{} feature rows vs {} voxel rows", features.rows(), voxels.rows())));
    }
    if voxels.cols() != mask.n_d() {
        return Err(Error::shape(format!("{} voxels but mask has {}", voxels.cols(), mask.n_d())));
    }
    let design = LassoDesign::new(voxels)?;
    let k = features.cols();
    let fits: Vec<Result<_>> = {
        let cols: Vec<Vec<f64>> = (0..k).map(|j| features.col(j)).collect();
        let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(k);
        let chunk = k.div_ceil(workers);
        std::thread::scope(|s| {
            let handles: Vec<_> = cols
                .chunks(chunk)
                .enumerate()
                .map(|(c, ys)| {
                    let design = &design;
                    s.spawn(move || {
                        ys.iter()
                            .enumerate()
                            .map(|(i, y)| {
                                design.fit(y, lambda).map_err(|e| e.context(format!("feature {}", c * chunk + i)))
                            })
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles.into_iter().flat_map(|h| h.join().expect("lasso worker panicked")).collect()
        })
    };
    let mut per_voxel = vec![0.0; voxels.cols()];
    let mut unconverged = Vec::new();
    for (j, fit) in fits.into_iter().enumerate() {
        let fit = fit?;
        if fit.warning.is_some() {
            unconverged.push(j);
        }
        for (acc, b) in per_voxel.iter_mut().zip(&fit.beta) {
            *acc += b.abs();
        }
    }
    for v in &mut per_voxel {
        *v /= k as f64;
    }
    let regions = Region::ALL
        .iter()
        .map(|&r| {
            let idx = mask.indices(r);
            let mean = if idx.is_empty() { 0.0 } else { idx.iter().map(|&i| per_voxel[i]).sum::<f64>() / idx.len() as f64 };
            (r, mean)
        })
        .collect();
    Ok(Backprojection { per_voxel, regions, unconverged })
}

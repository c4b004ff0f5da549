use crate::error::Result;
use crate::losses::gradcheck::{max_relative_error, relative_error};
use crate::losses::{
    cka_loss, crec_loss, grad_check, mg_loss, mse_loss, sims_loss, AnchorMode, CrecRecons, LossValueGrad,
};
use crate::model::{init_params, ImagePaths, ModelConfig, ModelParams, Mode};
use crate::numeric::Rng;
use crate::train::objective::{loss_and_grads, Batch, Objective};
use crate::Mat;

pub const GRADCHECK_STEP: f64 = 1e-5;
pub const GRADCHECK_TOL: f64 = 1e-4;
/// Tolerance for losses that are plain squared errors.
pub const GRADCHECK_TOL_MSE: f64 = 1e-6;

/// Worst relative error of one gradient over all seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckRow {
    pub name: String,
    pub max_rel_err: f64,
    pub worst_seed: u64,
    pub tolerance: f64,
}

impl GradCheckRow {
    pub fn passed(&self) -> bool {
        self.max_rel_err < self.tolerance
    }
}

fn normal(rng: &mut Rng, rows: usize, cols: usize) -> Mat {
    rng.normal_matrix(rows, cols, 1.0)
}

fn tiny_model() -> ModelConfig {
    ModelConfig {
        n_s: 2,
        n_d: 3,
        latent_dim: 2,
        m_text: 3,
        d_text: 2,
        m_img: 3,
        d_img: 2,
        dropout_codec: 0.15,
        dropout_backbone: 0.5,
    }
}

/// Central differences over every entry of every parameter tensor.
pub fn param_rel_error(
    params: &ModelParams,
    analytic: &ModelParams,
    loss: impl Fn(&ModelParams) -> Result<f64>,
    h: f64,
) -> Result<f64> {
    let grads: Vec<Mat> = analytic.tensors().into_iter().map(|(_, g)| g.clone()).collect();
    let mut p = params.clone();
    let mut worst: f64 = 0.0;
    for (t, g) in grads.iter().enumerate() {
        for k in 0..g.len() {
            let orig = p.tensors()[t].1.as_slice()[k];
            p.tensors_mut()[t].1.as_mut_slice()[k] = orig + h;
            let up = loss(&p)?;
            p.tensors_mut()[t].1.as_mut_slice()[k] = orig - h;
            let down = loss(&p)?;
            p.tensors_mut()[t].1.as_mut_slice()[k] = orig;
            worst = worst.max(relative_error(g.as_slice()[k], (up - down) / (2.0 * h)));
        }
    }
    Ok(worst)
}

fn model_check(seed: u64, text: bool) -> Result<f64> {
    let cfg = tiny_model();
    let mut rng = Rng::new(seed);
    let mut params = init_params(&cfg, &rng.child("init"), text, !text);
    // random biases keep pre-activations away from the ReLU kink at zero
    for (_, t) in params.tensors_mut() {
        if t.rows() == 1 {
            *t = normal(&mut rng, 1, t.cols()).scale(0.3);
        }
    }
    let n = 3;
    let e_semantic = normal(&mut rng, n, cfg.image_flat());
    let e_detail = normal(&mut rng, n, cfg.image_flat());
    let e_fused = e_semantic.add(&e_detail)?.scale(0.5);
    let batch = Batch {
        f_s: normal(&mut rng, n, cfg.n_s),
        f_d: normal(&mut rng, n, cfg.n_d),
        e_t: normal(&mut rng, n, cfg.text_flat()),
        e_fused,
        e_semantic,
        e_detail,
    };
    let step = rng.child("step");
    let obj = Objective::default();
    let run = |p: &ModelParams| loss_and_grads(p, &cfg, &batch, ImagePaths::FULL, Mode::Train(&step), &obj);
    let at = run(&params)?;
    param_rel_error(&params, &at.grads, |p| Ok(run(p)?.total), GRADCHECK_STEP)
}

fn crec_check(rng: &mut Rng) -> Result<f64> {
    let (n, n_s, n_d) = (1 + rng.below(4), 1 + rng.below(8), 1 + rng.below(8));
    let f_s = normal(rng, n, n_s);
    let f_d = normal(rng, n, n_d);
    let r = CrecRecons {
        s_from_s: normal(rng, n, n_s),
        d_from_s: normal(rng, n, n_d),
        d_from_d: normal(rng, n, n_d),
        s_from_d: normal(rng, n, n_s),
    };
    let at = crec_loss(&f_s, &f_d, &r)?;
    let mut worst: f64 = 0.0;
    for term in 0..4 {
        let pick = |c: &CrecRecons<f64>| -> Mat {
            match term {
                0 => c.s_from_s.clone(),
                1 => c.d_from_s.clone(),
                2 => c.d_from_d.clone(),
                _ => c.s_from_d.clone(),
            }
        };
        let value = |x: &Mat| {
            let mut c = r.clone();
            match term {
                0 => c.s_from_s = x.clone(),
                1 => c.d_from_s = x.clone(),
                2 => c.d_from_d = x.clone(),
                _ => c.s_from_d = x.clone(),
            }
            crec_loss(&f_s, &f_d, &c).map(|l| l.value)
        };
        worst = worst.max(max_relative_error(value, &pick(&r), &pick(&at.grads), GRADCHECK_STEP)?);
    }
    Ok(worst)
}

fn mg_as_loss(target: &Mat, pred: &Mat, anchor: AnchorMode) -> Result<LossValueGrad<f64>> {
    let l = mg_loss(target, pred, anchor)?;
    Ok(LossValueGrad { value: l.value, grad: l.grad })
}

/// Runs every loss gradient and both model branches against central
/// differences on random tiny shapes, `seeds` draws each.
pub fn gradient_suite(seeds: u64) -> Result<Vec<GradCheckRow>> {
    type Check = fn(&mut Rng) -> Result<f64>;
    let checks: [(&str, f64, Check); 9] = [
        ("mse", GRADCHECK_TOL_MSE, |rng| {
            let (m, d) = (1 + rng.below(8), 1 + rng.below(8));
            let t = normal(rng, m, d);
            grad_check(|x| mse_loss(&t, x), &normal(rng, m, d), GRADCHECK_STEP)
        }),
        ("sims.own_first_token", GRADCHECK_TOL, |rng| {
            let (m, d) = (2 + rng.below(7), 1 + rng.below(8));
            let t = normal(rng, m, d);
            grad_check(|x| sims_loss(&t, x, AnchorMode::OwnFirstToken), &normal(rng, m, d), GRADCHECK_STEP)
        }),
        ("sims.target_first_token", GRADCHECK_TOL, |rng| {
            let (m, d) = (2 + rng.below(7), 1 + rng.below(8));
            let t = normal(rng, m, d);
            grad_check(|x| sims_loss(&t, x, AnchorMode::TargetFirstToken), &normal(rng, m, d), GRADCHECK_STEP)
        }),
        ("cka", GRADCHECK_TOL, |rng| {
            let (m, dt, d) = (3 + rng.below(6), 1 + rng.below(8), 1 + rng.below(8));
            let t = normal(rng, m, dt);
            grad_check(|x| cka_loss(&t, x), &normal(rng, m, d), GRADCHECK_STEP)
        }),
        ("mg.own_first_token", GRADCHECK_TOL, |rng| {
            let (m, d) = (3 + rng.below(6), 1 + rng.below(8));
            let t = normal(rng, m, d);
            grad_check(|x| mg_as_loss(&t, x, AnchorMode::OwnFirstToken), &normal(rng, m, d), GRADCHECK_STEP)
        }),
        ("mg.target_first_token", GRADCHECK_TOL, |rng| {
            let (m, d) = (3 + rng.below(6), 1 + rng.below(8));
            let t = normal(rng, m, d);
            grad_check(|x| mg_as_loss(&t, x, AnchorMode::TargetFirstToken), &normal(rng, m, d), GRADCHECK_STEP)
        }),
        ("crec", GRADCHECK_TOL_MSE, crec_check),
        ("model.text", GRADCHECK_TOL, |rng| model_check(rng.next_u64(), true)),
        ("model.image", GRADCHECK_TOL, |rng| model_check(rng.next_u64(), false)),
    ];
    let mut rows = Vec::with_capacity(checks.len());
    for (name, tolerance, check) in checks {
        let mut row = GradCheckRow { name: name.to_string(), max_rel_err: 0.0, worst_seed: 0, tolerance };
        for seed in 0..seeds {
            let mut rng = Rng::new(seed).child(name);
            let err = check(&mut rng).map_err(|e| e.context(format!("{name}, seed {seed}")))?;
            if err > row.max_rel_err {
                row.max_rel_err = err;
                row.worst_seed = seed;
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::data::{glyph_prototypes, glyph_sample};
use crate::models::{softmax, Activation, Batch, Loss, Target, TinyModel};
use crate::numeric::{ParamVector, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DlgOptimizer {
    /// Plain descent `x ← x − η∇D`.
    Gd,
    /// Adam with the usual moment decays.
    Adam,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DlgConfig {
    pub iterations: usize,
    pub eta: f64,
    pub init_seed: u64,
    /// Central finite-difference step.
    pub fd_step: f64,
    pub success_mse: f64,
    pub optimizer: DlgOptimizer,
}

impl Default for DlgConfig {
    fn default() -> Self {
        DlgConfig {
            iterations: 2000,
            eta: 0.1,
            init_seed: 0,
            fd_step: 1e-4,
            success_mse: 0.01,
            optimizer: DlgOptimizer::Adam,
        }
    }
}

impl DlgConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::param("iterations must be >= 1"));
        }
        if !(self.fd_step > 0.0) || !(self.eta > 0.0) {
            return Err(Error::param("fd_step and eta must be > 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub mse: f64,
    /// MSE of the random initialisation, i.e. a pure-noise guess.
    pub initial_mse: f64,
    pub success: bool,
    /// Gradient difference `D` before each update.
    pub trace: Vec<f64>,
    pub reconstruction: ParamVector,
    pub label_guess: usize,
    pub aborted: Option<String>,
    #[serde(skip)]
    pub wall_time_secs: f64,
}

/// `‖∇_w L(x, t) − known‖²`.
pub fn dlg_objective(
    model: &TinyModel,
    known: &ParamVector,
    x: &ParamVector,
    t: Target<'_>,
    loss: Loss,
) -> Result<f64> {
    let (_, g) = model.example_gradient(x, t, loss)?;
    let d = g.sub(known)?;
    Ok(d.dot(&d)?)
}

fn objective_at(
    model: &TinyModel,
    known: &ParamVector,
    z: &[f64],
    n_in: usize,
    loss: Loss,
) -> Result<f64> {
    let x = ParamVector::new(z[..n_in].to_vec())?;
    let t = softmax(&z[n_in..]);
    dlg_objective(model, known, &x, Target::Vector(&t), loss)
}

/// Central-difference gradient of `f` at `z`.
pub fn central_difference(
    z: &[f64],
    h: f64,
    mut f: impl FnMut(&[f64]) -> Result<f64>,
) -> Result<Vec<f64>> {
    let mut work = z.to_vec();
    let mut g = Vec::with_capacity(z.len());
    for i in 0..z.len() {
        work[i] = z[i] + h;
        let up = f(&work)?;
        work[i] = z[i] - h;
        let down = f(&work)?;
        work[i] = z[i];
        g.push((up - down) / (2.0 * h));
    }
    Ok(g)
}

pub(crate) fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

/// Gradient-matching reconstruction of a single training example.
///
/// Dummy input and label logits start from `N(0, 1)`; each iteration
/// descends `D = ‖∇_w L(x′, softmax(y′)) − known‖²`. `truth` is read only to
/// score the final guess.
pub fn dlg_attack(
    model: &TinyModel,
    known: &ParamVector,
    truth: &Batch,
    loss: Loss,
    cfg: &DlgConfig,
) -> Result<ReconstructionReport> {
    cfg.validate()?;
    if known.dim() != model.num_params() {
        return Err(Error::DimensionMismatch {
            expected: model.num_params(),
            actual: known.dim(),
        });
    }
    if truth.len() != 1 {
        return Err(Error::param("DLG reconstructs a single example"));
    }
    let started = Instant::now();
    let (n_in, n_out) = (model.input_dim(), model.output_dim());
    let mut rng = Rng::new(cfg.init_seed).child_named("dlg/init");
    let mut z: Vec<f64> = (0..n_in + n_out).map(|_| rng.standard_normal()).collect();
    let target_x = truth.inputs()[0].as_slice();
    let initial_mse = mse(&z[..n_in], target_x);
    let (mut m1, mut m2) = (vec![0.0; z.len()], vec![0.0; z.len()]);
    let mut trace = Vec::with_capacity(cfg.iterations);
    let mut aborted = None;
    for it in 0..cfg.iterations {
        let d = objective_at(model, known, &z, n_in, loss)?;
        if !d.is_finite() {
            aborted = Some(format!(
                "gradient difference became non-finite at iteration {it}"
            ));
            break;
        }
        trace.push(d);
        let g = central_difference(&z, cfg.fd_step, |w| {
            objective_at(model, known, w, n_in, loss)
        })?;
        match cfg.optimizer {
            DlgOptimizer::Gd => z.iter_mut().zip(&g).for_each(|(v, gi)| *v -= cfg.eta * gi),
            DlgOptimizer::Adam => {
                let (b1, b2, eps) = (0.9, 0.999, 1e-8);
                let t = (it + 1) as i32;
                for i in 0..z.len() {
                    m1[i] = b1 * m1[i] + (1.0 - b1) * g[i];
                    m2[i] = b2 * m2[i] + (1.0 - b2) * g[i] * g[i];
                    let mh = m1[i] / (1.0 - b1.powi(t));
                    let vh = m2[i] / (1.0 - b2.powi(t));
                    z[i] -= cfg.eta * mh / (vh.sqrt() + eps);
                }
            }
        }
        if z.iter().any(|v| !v.is_finite()) {
            aborted = Some(format!("dummy data became non-finite at iteration {it}"));
            break;
        }
    }
    let final_mse = if aborted.is_some() {
        f64::INFINITY
    } else {
        mse(&z[..n_in], target_x)
    };
    let label_guess = crate::models::argmax(&z[n_in..]);
    Ok(ReconstructionReport {
        mse: final_mse,
        initial_mse,
        success: final_mse <= cfg.success_mse,
        trace,
        reconstruction: ParamVector::new(
            z[..n_in]
                .iter()
                .map(|v| if v.is_finite() { *v } else { 0.0 })
                .collect(),
        )?,
        label_guess,
        aborted,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}

/// What the server sees of a client that took one step of size `eta` and
/// masked the result: `(w0 − (w1 + mask))/eta = ∇ − mask/eta`.
pub fn observed_gradient(
    model: &TinyModel,
    truth: &Batch,
    loss: Loss,
    eta: f64,
    alpha: f64,
    rng: &mut Rng,
) -> Result<ParamVector> {
    let w0 = model.params().clone();
    let w1 = model.sgd_step(truth, eta, loss)?;
    let uploaded = crate::fedcore::apply_mask(w1.params().clone(), alpha, rng)?;
    w0.sub(&uploaded)?.scale(1.0 / eta)
}

/// Learning rate of the victim's local step.
pub const VICTIM_ETA: f64 = 0.1;

/// The bundled DLG target: a `64 → 7 → 10` sigmoid network (600 parameters)
/// and one noisy glyph of class `seed mod 10`.
#[derive(Clone, Debug)]
pub struct DlgVictim {
    pub model: TinyModel,
    pub truth: Batch,
    rng: Rng,
}

impl DlgVictim {
    pub fn glyph(seed: u64) -> Result<Self> {
        let mut rng = Rng::new(seed);
        let model = TinyModel::new(&[64, 7, 10], Activation::Sigmoid, &mut rng)?;
        let class = (seed % 10) as usize;
        let x = glyph_sample(&glyph_prototypes(), class, 0.1, &mut rng);
        let truth = Batch::classes(vec![x], vec![class])?;
        Ok(DlgVictim { model, truth, rng })
    }

    /// The victim's masked upload after one local step.
    pub fn upload(&self, alpha: f64) -> Result<ParamVector> {
        let w1 = self
            .model
            .sgd_step(&self.truth, VICTIM_ETA, Loss::CrossEntropy)?;
        crate::fedcore::apply_mask(
            w1.params().clone(),
            alpha,
            &mut self.rng.child_named("mask"),
        )
    }

    /// Gradient estimate a server derives from an upload.
    pub fn gradient_from(&self, upload: &ParamVector) -> Result<ParamVector> {
        self.model.params().sub(upload)?.scale(1.0 / VICTIM_ETA)
    }

    /// Attack on the victim's upload at `alpha`, seeded by `init_seed`.
    pub fn attack(&self, upload: &ParamVector, cfg: &DlgConfig) -> Result<ReconstructionReport> {
        let g = self.gradient_from(upload)?;
        dlg_attack(&self.model, &g, &self.truth, Loss::CrossEntropy, cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objective_vanishes_at_truth() {
        let mut rng = Rng::new(1);
        let m = TinyModel::new(&[64, 7, 10], Activation::Sigmoid, &mut rng).unwrap();
        let x = glyph_sample(&glyph_prototypes(), 3, 0.1, &mut rng);
        let t = softmax(&[0.3, -1.0, 2.0, 0.0, 0.5, 0.1, -0.2, 0.0, 1.0, 0.4]);
        let (_, known) = m
            .example_gradient(&x, Target::Vector(&t), Loss::CrossEntropy)
            .unwrap();
        let d = dlg_objective(&m, &known, &x, Target::Vector(&t), Loss::CrossEntropy).unwrap();
        assert_eq!(d, 0.0);
    }

    // Single linear layer, half squared error: with r = Wx + b − t and
    // E = r xᵀ − G_W, e = r − G_b, ∇ₓD = 2[Wᵀ(E x) + Eᵀ r + Wᵀ e].
    #[test]
    fn finite_difference_matches_closed_form_on_linear_layer() {
        let (n_in, n_out) = (5, 3);
        let mut rng = Rng::new(7);
        for _ in 0..5 {
            let m = TinyModel::new(&[n_in, n_out], Activation::Identity, &mut rng).unwrap();
            let p = m.params().as_slice().to_vec();
            let w = |o: usize, i: usize| p[o * n_in + i];
            let b = &p[n_in * n_out..];
            let known = ParamVector::random_uniform(m.num_params(), -1.0, 1.0, &mut rng).unwrap();
            let gw = &known.as_slice()[..n_in * n_out];
            let gb = &known.as_slice()[n_in * n_out..];
            let t: Vec<f64> = (0..n_out).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let x: Vec<f64> = (0..n_in).map(|_| rng.uniform(-1.0, 1.0)).collect();

            let r: Vec<f64> = (0..n_out)
                .map(|o| (0..n_in).map(|i| w(o, i) * x[i]).sum::<f64>() + b[o] - t[o])
                .collect();
            let e_mat = |o: usize, i: usize| r[o] * x[i] - gw[o * n_in + i];
            let e: Vec<f64> = (0..n_out).map(|o| r[o] - gb[o]).collect();
            let ex: Vec<f64> = (0..n_out)
                .map(|o| (0..n_in).map(|i| e_mat(o, i) * x[i]).sum())
                .collect();
            let analytic: Vec<f64> = (0..n_in)
                .map(|k| {
                    let a: f64 = (0..n_out).map(|o| w(o, k) * ex[o]).sum();
                    let c: f64 = (0..n_out).map(|o| e_mat(o, k) * r[o]).sum();
                    let d: f64 = (0..n_out).map(|o| w(o, k) * e[o]).sum();
                    2.0 * (a + c + d)
                })
                .collect();

            let fd = central_difference(&x, 1e-4, |z| {
                let z = ParamVector::new(z.to_vec())?;
                dlg_objective(&m, &known, &z, Target::Vector(&t), Loss::Mse)
            })
            .unwrap();
            for (a, f) in analytic.iter().zip(&fd) {
                assert!((a - f).abs() <= 1e-6 * a.abs().max(1.0), "{a} vs {f}");
            }
        }
    }

    #[test]
    fn unmasked_step_reveals_the_gradient() {
        let mut rng = Rng::new(2);
        let m = TinyModel::new(&[64, 7, 10], Activation::Sigmoid, &mut rng).unwrap();
        let x = glyph_sample(&glyph_prototypes(), 5, 0.1, &mut rng);
        let truth = Batch::classes(vec![x.clone()], vec![5]).unwrap();
        let seen = observed_gradient(&m, &truth, Loss::CrossEntropy, 0.1, 0.0, &mut rng).unwrap();
        let (_, g) = m
            .example_gradient(&x, Target::Class(5), Loss::CrossEntropy)
            .unwrap();
        assert!(seen.sub(&g).unwrap().norm_inf() < 1e-12);
    }

    #[test]
    fn small_model_is_reconstructed() {
        let mut rng = Rng::new(3);
        let m = TinyModel::new(&[8, 4, 3], Activation::Sigmoid, &mut rng).unwrap();
        let x = ParamVector::random_uniform(8, 0.0, 1.0, &mut rng).unwrap();
        let truth = Batch::classes(vec![x], vec![1]).unwrap();
        let known = m.backward(&truth, Loss::CrossEntropy).unwrap().1;
        let cfg = DlgConfig {
            iterations: 1500,
            ..DlgConfig::default()
        };
        let r = dlg_attack(&m, &known, &truth, Loss::CrossEntropy, &cfg).unwrap();
        assert_eq!(r.success, r.mse <= cfg.success_mse);
        assert_eq!(r.trace.len(), 1500);
        assert!(r.trace.last().unwrap() < &r.trace[0]);
    }

    #[test]
    fn rejects_batches_and_bad_config() {
        let m = TinyModel::zeros(&[2, 2], Activation::Identity).unwrap();
        let known = ParamVector::zeros(m.num_params()).unwrap();
        let two = Batch::classes(vec![ParamVector::zeros(2).unwrap(); 2], vec![0, 1]).unwrap();
        assert!(dlg_attack(&m, &known, &two, Loss::Mse, &DlgConfig::default()).is_err());
        let one = two.example(0);
        let bad = DlgConfig {
            fd_step: 0.0,
            ..DlgConfig::default()
        };
        assert!(dlg_attack(&m, &known, &one, Loss::Mse, &bad).is_err());
    }
}

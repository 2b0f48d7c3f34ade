use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fedcore::apply_mask;
use crate::models::data::GaussianMixture;
use crate::models::{softmax, Activation, Batch, Loss, TinyModel};
use crate::numeric::{ParamVector, Rng};

/// Discriminator class of the victim's data.
pub const Y_TRUE: usize = 0;
/// Discriminator class of the attacker's own legitimate data.
pub const Y_OWN: usize = 1;
/// Class the attacker assigns to generated samples.
pub const Y_FAKE: usize = 2;

/// Generator and the shared classifier it is trained against.
#[derive(Clone, Debug, PartialEq)]
pub struct GanPair {
    pub generator: TinyModel,
    pub discriminator: TinyModel,
}

impl GanPair {
    /// Generator `noise → 16 → 2` (tanh), classifier `2 → 16 → 3` (sigmoid),
    /// both with linear outputs.
    pub fn desk(noise_dim: usize, rng: &mut Rng) -> Result<Self> {
        let generator = TinyModel::new(&[noise_dim, 16, 2], Activation::Tanh, rng)?
            .with_output(Activation::Identity);
        let discriminator = TinyModel::new(&[2, 16, 3], Activation::Sigmoid, rng)?
            .with_output(Activation::Identity);
        GanPair::new(generator, discriminator)
    }

    pub fn new(generator: TinyModel, discriminator: TinyModel) -> Result<Self> {
        if generator.output_dim() != discriminator.input_dim() {
            return Err(Error::param(
                "generator output must match discriminator input",
            ));
        }
        if discriminator.output_dim() <= Y_FAKE {
            return Err(Error::param(
                "discriminator needs the true, own and fake classes",
            ));
        }
        Ok(GanPair {
            generator,
            discriminator,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum GanMode {
    Normal,
    /// The classifier's weights receive a fresh uniform mask after every
    /// update; the masks accumulate.
    MaskedD {
        alpha: f64,
    },
    /// The classifier is first trained for `epochs` against a different
    /// generator. A fresh generator then trains against it while the
    /// classifier keeps learning from real data only.
    PretrainedD {
        epochs: usize,
    },
}

impl GanMode {
    pub fn name(&self) -> &'static str {
        match self {
            GanMode::Normal => "normal",
            GanMode::MaskedD { .. } => "masked_d",
            GanMode::PretrainedD { .. } => "pretrained_d",
        }
    }
}

/// Objective the generator minimises, with `p = softmax(D(G(z)))[Y_TRUE]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorLoss {
    /// `ln(1 − p)`: the minimax objective, flat where the classifier is confident.
    Saturating,
    /// `−ln p`.
    NonSaturating,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GanSchedule {
    pub epochs: usize,
    pub steps_per_epoch: usize,
    pub batch: usize,
    pub noise_dim: usize,
    pub d_eta: f64,
    pub g_eta: f64,
    /// Generated points scored at the end.
    pub eval_samples: usize,
    pub generator_loss: GeneratorLoss,
}

impl Default for GanSchedule {
    fn default() -> Self {
        GanSchedule {
            epochs: 5,
            steps_per_epoch: 100,
            batch: 32,
            noise_dim: 2,
            d_eta: 0.5,
            g_eta: 0.02,
            eval_samples: 500,
            generator_loss: GeneratorLoss::NonSaturating,
        }
    }
}

/// The victim's distribution and the attacker's own data.
#[derive(Clone, Debug, PartialEq)]
pub struct GanTask {
    pub target: GaussianMixture,
    pub own: GaussianMixture,
}

impl Default for GanTask {
    fn default() -> Self {
        GanTask {
            target: GaussianMixture::ring_at([2.0, 0.0], 3, 0.5, 0.1),
            own: GaussianMixture {
                means: vec![[-2.0, 0.0]],
                std: 0.4,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GanReport {
    pub mode: GanMode,
    /// Mean distance from generated points to the nearest victim mode.
    pub mode_distance: f64,
    pub generated_mean: [f64; 2],
    pub generated_std: [f64; 2],
    pub generator_loss: Vec<f64>,
    /// The generator loss never fell below its initial 10-step average.
    pub non_converged: bool,
    pub diverged: bool,
}

/// Uniform half-width that stops the generator at desk scale.
pub const DESK_GAN_ALPHA: f64 = 1.0;

/// Window of the moving average used by [`non_converged`].
pub const GAN_WINDOW: usize = 10;

/// True when no later `GAN_WINDOW`-step moving average of `trace` drops below
/// the average of its first `GAN_WINDOW` entries.
pub fn non_converged(trace: &[f64]) -> bool {
    if trace.len() < 2 * GAN_WINDOW {
        return true;
    }
    let avg = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let initial = avg(&trace[..GAN_WINDOW]);
    !(GAN_WINDOW..=trace.len() - GAN_WINDOW).any(|i| avg(&trace[i..i + GAN_WINDOW]) < initial)
}

fn noise(n: usize, dim: usize, rng: &mut Rng) -> Result<Vec<ParamVector>> {
    (0..n)
        .map(|_| ParamVector::from_fn(dim, |_| rng.standard_normal()))
        .collect()
}

/// One collaborative update of the classifier: victim data as `Y_TRUE`,
/// attacker data as `Y_OWN` and, when `g` is given, generated samples as `Y_FAKE`.
fn classifier_step(
    d: &TinyModel,
    g: Option<&TinyModel>,
    task: &GanTask,
    s: &GanSchedule,
    rng: &mut Rng,
) -> Result<TinyModel> {
    let mut inputs = task.target.sample(s.batch, rng);
    inputs.extend(task.own.sample(s.batch, rng));
    let mut labels = vec![Y_TRUE; s.batch];
    labels.extend(vec![Y_OWN; s.batch]);
    if let Some(g) = g {
        for z in noise(s.batch, s.noise_dim, rng)? {
            inputs.push(g.forward(&z)?);
            labels.push(Y_FAKE);
        }
    }
    d.sgd_step(
        &Batch::classes(inputs, labels)?,
        s.d_eta,
        Loss::CrossEntropy,
    )
}

/// One generator step towards `Y_TRUE` under `d`; returns the mean loss.
fn generator_step(
    g: &TinyModel,
    d: &TinyModel,
    s: &GanSchedule,
    rng: &mut Rng,
) -> Result<(TinyModel, f64)> {
    let zs = noise(s.batch, s.noise_dim, rng)?;
    let mut grad = vec![0.0; g.num_params()];
    let mut loss = 0.0;
    for z in &zs {
        let x = g.forward(z)?;
        let p = softmax(d.forward(&x)?.as_slice());
        let pt = p[Y_TRUE];
        // Gradient of the loss with respect to the classifier logits.
        let og: Vec<f64> = match s.generator_loss {
            GeneratorLoss::NonSaturating => {
                loss -= pt.max(f64::MIN_POSITIVE).ln();
                (0..p.len())
                    .map(|j| p[j] - f64::from(u8::from(j == Y_TRUE)))
                    .collect()
            }
            GeneratorLoss::Saturating => {
                let rest = (1.0 - pt).max(f64::MIN_POSITIVE);
                loss += rest.ln();
                (0..p.len())
                    .map(|j| if j == Y_TRUE { -pt } else { pt * p[j] / rest })
                    .collect()
            }
        };
        let dx = d.input_gradient(&x, &og)?;
        let gp = g.param_gradient(z, dx.as_slice())?;
        for (a, b) in grad.iter_mut().zip(gp.iter()) {
            *a += b;
        }
    }
    let scale = 1.0 / zs.len() as f64;
    grad.iter_mut().for_each(|v| *v *= scale);
    let next = g.with_params(g.params().axpy(-s.g_eta, &ParamVector::new(grad)?)?)?;
    Ok((next, loss * scale))
}

/// Collaborative training under a GAN attack, in one of three modes.
pub fn gan_attack(
    pair: &GanPair,
    task: &GanTask,
    schedule: &GanSchedule,
    mode: GanMode,
    rng: &Rng,
) -> Result<GanReport> {
    if schedule.epochs == 0
        || schedule.steps_per_epoch == 0
        || schedule.batch == 0
        || schedule.eval_samples == 0
    {
        return Err(Error::param("schedule sizes must be >= 1"));
    }
    if pair.generator.input_dim() != schedule.noise_dim {
        return Err(Error::param("generator input must match noise_dim"));
    }
    let mut d = pair.discriminator.clone();
    let mut g = pair.generator.clone();
    let mut data_rng = rng.child_named("gan/data");
    let mut g_rng = rng.child_named("gan/generator");
    let mut mask_rng = rng.child_named("gan/mask");
    let mut pretrained = false;
    if let GanMode::PretrainedD { epochs } = mode {
        let mut pre_g = TinyModel::new(
            g.sizes(),
            g.hidden_activation(),
            &mut rng.child_named("gan/pre-init"),
        )?
        .with_output(g.output_activation());
        let mut pre_rng = rng.child_named("gan/pretrain");
        for _ in 0..epochs * schedule.steps_per_epoch {
            d = classifier_step(&d, Some(&pre_g), task, schedule, &mut pre_rng)?;
            pre_g = generator_step(&pre_g, &d, schedule, &mut pre_rng)?.0;
        }
        pretrained = true;
    }
    let mut trace = Vec::with_capacity(schedule.epochs * schedule.steps_per_epoch);
    let mut diverged = false;
    for _ in 0..schedule.epochs * schedule.steps_per_epoch {
        d = classifier_step(
            &d,
            (!pretrained).then_some(&g),
            task,
            schedule,
            &mut data_rng,
        )?;
        if let GanMode::MaskedD { alpha } = mode {
            d = d.with_params(apply_mask(d.params().clone(), alpha, &mut mask_rng)?)?;
        }
        let (next, loss) = match generator_step(&g, &d, schedule, &mut g_rng) {
            Ok(v) => v,
            Err(_) => {
                diverged = true;
                break;
            }
        };
        if !loss.is_finite() {
            diverged = true;
            break;
        }
        trace.push(loss);
        g = next;
    }
    let pts = noise(
        schedule.eval_samples,
        schedule.noise_dim,
        &mut rng.child_named("gan/eval"),
    )?
    .iter()
    .map(|z| g.forward(z))
    .collect::<Result<Vec<_>>>()?;
    let n = pts.len() as f64;
    let mean = [0, 1].map(|c| pts.iter().map(|p| p.get(c)).sum::<f64>() / n);
    let std = [0, 1].map(|c| {
        (pts.iter()
            .map(|p| (p.get(c) - mean[c]).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
    });
    Ok(GanReport {
        mode,
        mode_distance: task.target.mode_distance(&pts),
        generated_mean: mean,
        generated_std: std,
        non_converged: diverged || non_converged(&trace),
        generator_loss: trace,
        diverged,
    })
}

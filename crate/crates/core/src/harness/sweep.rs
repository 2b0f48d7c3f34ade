//! Accuracy of masked local models and of their average, across alpha and
//! the number of clients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::data::{glyph_dataset, GLYPH_CLASSES, GLYPH_PIXELS};
use crate::models::{Activation, Batch, Loss, TinyModel};
use crate::numeric::{uniform_mask, ParamVector, Rng};

/// The bundled 10-class task and the model pretrained on it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlyphTask {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    /// Per-pixel Gaussian noise around each prototype.
    pub noise: f64,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub pretrain_steps: usize,
    pub eta: f64,
    /// L2 penalty `λ/2 ‖w‖²` applied during pretraining.
    pub weight_decay: f64,
}

impl Default for GlyphTask {
    fn default() -> Self {
        GlyphTask {
            hidden: vec![24, 24],
            activation: Activation::Tanh,
            noise: 0.35,
            train_per_class: 40,
            test_per_class: 40,
            pretrain_steps: 1000,
            eta: 0.1,
            weight_decay: 0.01,
        }
    }
}

pub struct Pretrained {
    pub model: TinyModel,
    pub test: Batch,
    pub baseline: f64,
}

impl GlyphTask {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.contains(&0) || self.train_per_class == 0 || self.test_per_class == 0 {
            return Err(Error::config("task", "sizes must be >= 1"));
        }
        if !(self.noise >= 0.0) || !(self.eta > 0.0) || !(self.weight_decay >= 0.0) {
            return Err(Error::config("task", "noise must be >= 0 and eta > 0"));
        }
        Ok(())
    }

    /// `64 → hidden… → 10` network with a linear output layer, trained
    /// by full-batch descent on a fresh training set.
    pub fn pretrain(&self, rng: &Rng) -> Result<Pretrained> {
        self.validate()?;
        let train = glyph_dataset(
            self.train_per_class,
            self.noise,
            &mut rng.child_named("glyph/train"),
        )?;
        let test = glyph_dataset(
            self.test_per_class,
            self.noise,
            &mut rng.child_named("glyph/test"),
        )?;
        let mut sizes = vec![GLYPH_PIXELS];
        sizes.extend(&self.hidden);
        sizes.push(GLYPH_CLASSES);
        let mut model =
            TinyModel::new(&sizes, self.activation, &mut rng.child_named("glyph/init"))?
                .with_output(Activation::Identity);
        for _ in 0..self.pretrain_steps {
            let (_, g) = model.backward(&train, Loss::CrossEntropy)?;
            let decayed = model.params().scale(1.0 - self.eta * self.weight_decay)?;
            model = model.with_params(decayed.axpy(-self.eta, &g)?)?;
        }
        let baseline = accuracy(&model, &test)?;
        Ok(Pretrained {
            model,
            test,
            baseline,
        })
    }
}

pub(crate) fn accuracy(m: &TinyModel, b: &Batch) -> Result<f64> {
    let labels = b
        .labels()
        .ok_or_else(|| Error::param("task needs class labels"))?;
    m.accuracy(b.inputs(), labels)
}

/// One `(n, alpha)` cell averaged over trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub alpha: f64,
    /// Mean accuracy of the masked local models.
    pub local_accuracy: f64,
    /// Accuracy of the average of the `n` masked models.
    pub global_accuracy: f64,
    /// Mean `‖global − unmasked‖_∞`.
    pub deviation: f64,
}

/// Every client holds the pretrained weights and uploads them masked with
/// `U[-α, α]`. Local accuracy is scored on the first `local_eval_cap` clients
/// of each round; their masks are identically distributed, so the cap only
/// trims cost. Trials share mask streams across alphas.
pub fn alpha_sweep(
    pre: &Pretrained,
    client_counts: &[usize],
    alphas: &[f64],
    trials: &[u64],
    local_eval_cap: usize,
) -> Result<Vec<SweepRow>> {
    if alphas.is_empty() || alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::config(
            "alphas",
            "need a nonempty list within [0, 1]",
        ));
    }
    if client_counts.is_empty() || client_counts.contains(&0) {
        return Err(Error::config(
            "client_counts",
            "need a nonempty list of positive counts",
        ));
    }
    if trials.is_empty() {
        return Err(Error::config("seeds", "need at least one seed"));
    }
    let w = pre.model.params();
    let mut rows = Vec::with_capacity(client_counts.len() * alphas.len());
    for &n in client_counts {
        for &alpha in alphas {
            let (mut local, mut global, mut dev) = (0.0, 0.0, 0.0);
            for &seed in trials {
                let root = Rng::new(seed).child_named("sweep/mask").child(n as u64);
                let mut sum = vec![0.0; w.dim()];
                let mut local_sum = 0.0;
                let scored = n.min(local_eval_cap.max(1));
                for i in 0..n {
                    let m = uniform_mask(w.dim(), alpha, &mut root.child(i as u64))?;
                    sum.iter_mut().zip(m.iter()).for_each(|(s, v)| *s += v);
                    if i < scored {
                        let local_model = pre.model.with_params(w.add(&m)?)?;
                        local_sum += accuracy(&local_model, &pre.test)?;
                    }
                }
                let mean_mask = ParamVector::new(sum.into_iter().map(|s| s / n as f64).collect())?;
                let g = pre.model.with_params(w.add(&mean_mask)?)?;
                local += local_sum / scored as f64;
                global += accuracy(&g, &pre.test)?;
                dev += mean_mask.norm_inf();
            }
            let t = trials.len() as f64;
            rows.push(SweepRow {
                n,
                alpha,
                local_accuracy: local / t,
                global_accuracy: global / t,
                deviation: dev / t,
            });
        }
    }
    Ok(rows)
}

/// Largest alpha whose global accuracy at `n` stays within `slack` of
/// `baseline`, scanning the sweep grid upwards and stopping at the first
/// failure.
pub fn alpha_tolerance(rows: &[SweepRow], n: usize, baseline: f64, slack: f64) -> f64 {
    let mut cells: Vec<&SweepRow> = rows.iter().filter(|r| r.n == n).collect();
    cells.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    let mut best = 0.0;
    for r in cells {
        if r.global_accuracy < baseline - slack {
            break;
        }
        best = r.alpha;
    }
    best
}

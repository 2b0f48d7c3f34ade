use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Batch, Loss, TinyModel};
use crate::numeric::{ParamVector, Rng};

use super::apply_mask;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpConfig {
    /// Noise multiplier: the noise std on the clipped sum is `xi·gamma`.
    pub xi: f64,
    /// Per-example L2 clip. `f64::INFINITY` disables clipping (needs `xi = 0`).
    pub gamma: f64,
    /// Lot size drawn without replacement each step.
    pub h: usize,
    pub steps: usize,
    pub eta: f64,
    /// Total delta budget, spread evenly over the steps.
    pub delta: f64,
    pub loss: Loss,
}

impl DpConfig {
    pub fn validate(&self, dataset: usize) -> Result<()> {
        if !(self.gamma > 0.0) {
            return Err(Error::param("gamma must be > 0"));
        }
        if !(self.xi >= 0.0 && self.xi.is_finite()) {
            return Err(Error::param("xi must be finite and >= 0"));
        }
        if self.gamma.is_infinite() && self.xi > 0.0 {
            return Err(Error::param("unbounded gamma needs xi = 0"));
        }
        if self.h == 0 || self.h > dataset {
            return Err(Error::param(format!(
                "group size h must lie in [1, {dataset}]"
            )));
        }
        if self.steps == 0 {
            return Err(Error::param("steps must be >= 1"));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::param("eta must be >= 0"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::param("delta must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivacyStep {
    pub epsilon: f64,
    pub delta: f64,
}

/// Per-step costs with running totals under basic composition.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PrivacyLedger {
    pub entries: Vec<PrivacyStep>,
    pub epsilon_total: f64,
    pub delta_total: f64,
}

impl PrivacyLedger {
    pub fn push(&mut self, step: PrivacyStep) {
        self.epsilon_total += step.epsilon;
        self.delta_total += step.delta;
        self.entries.push(step);
    }
}

/// Basic composition: epsilons add and deltas add.
pub fn compose_privacy(entries: &[PrivacyStep]) -> Result<(f64, f64)> {
    if entries.is_empty() {
        return Err(Error::param("ledger is empty"));
    }
    Ok(entries
        .iter()
        .fold((0.0, 0.0), |(e, d), s| (e + s.epsilon, d + s.delta)))
}

/// Cost of one noisy step.
///
/// The clipped sum has L2 sensitivity `γ` and receives Gaussian noise of std
/// `ξγ`, so the classical Gaussian-mechanism bound gives
/// `ε₀ = √(2 ln(1.25/δ₀)) / ξ` at `δ₀` (tight only for `ε₀ < 1`). Drawing the
/// lot with rate `q = h/N` amplifies this to `ε = ln(1 + q(e^{ε₀} − 1))`,
/// `δ = q·δ₀`. No noise means no guarantee: `ε = ∞`.
pub fn gaussian_step_epsilon(xi: f64, q: f64, delta0: f64) -> PrivacyStep {
    if xi == 0.0 {
        return PrivacyStep {
            epsilon: f64::INFINITY,
            delta: q * delta0,
        };
    }
    let eps0 = (2.0 * (1.25 / delta0).ln()).sqrt() / xi;
    PrivacyStep {
        epsilon: (q * eps0.exp_m1()).ln_1p(),
        delta: q * delta0,
    }
}

/// `g / max(1, ‖g‖₂/γ)`.
pub fn clip_gradient(g: &ParamVector, gamma: f64) -> Result<ParamVector> {
    let f = (g.norm_l2() / gamma).max(1.0);
    if f == 1.0 {
        return Ok(g.clone());
    }
    g.scale(1.0 / f)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DpRun {
    pub params: ParamVector,
    pub ledger: PrivacyLedger,
    /// Largest L2 norm of any clipped per-example gradient that entered a sum.
    pub max_contribution_norm: f64,
}

/// Noisy SGD: each step samples a lot of `h` examples, clips every
/// per-example gradient to norm `γ`, adds `N(0, ξ²γ²I)` to the sum, scales by
/// `1/h` and descends. Lot sampling and noise use separate child streams.
pub fn dp_sgd(model: &TinyModel, data: &Batch, cfg: &DpConfig, rng: &Rng) -> Result<DpRun> {
    cfg.validate(data.len())?;
    let mut sampler = rng.child_named("dp/sample");
    let mut noise = rng.child_named("dp/noise");
    let q = cfg.h as f64 / data.len() as f64;
    let delta0 = cfg.delta / cfg.steps as f64;
    let mut ledger = PrivacyLedger::default();
    let mut max_norm: f64 = 0.0;
    let mut m = model.clone();
    let dim = m.num_params();
    for _ in 0..cfg.steps {
        let lot = data.subset(&sampler.sample_indices(data.len(), cfg.h))?;
        let mut sum = vec![0.0; dim];
        for i in 0..lot.len() {
            let (_, g) = m.example_gradient(&lot.inputs()[i], lot.target(i), cfg.loss)?;
            let g = clip_gradient(&g, cfg.gamma)?;
            max_norm = max_norm.max(g.norm_l2());
            for (s, x) in sum.iter_mut().zip(g.iter()) {
                *s += x;
            }
        }
        if cfg.xi > 0.0 {
            let std = cfg.xi * cfg.gamma;
            for s in sum.iter_mut() {
                *s += noise.normal(0.0, std);
            }
        }
        let scale = 1.0 / cfg.h as f64;
        sum.iter_mut().for_each(|s| *s *= scale);
        m = m.with_params(m.params().axpy(-cfg.eta, &ParamVector::new(sum)?)?)?;
        ledger.push(gaussian_step_epsilon(cfg.xi, q, delta0));
    }
    Ok(DpRun {
        params: m.params().clone(),
        ledger,
        max_contribution_norm: max_norm,
    })
}

/// [`dp_sgd`] followed by one uniform mask on the final weights.
pub fn masked_dp_sgd(
    model: &TinyModel,
    data: &Batch,
    cfg: &DpConfig,
    alpha: f64,
    rng: &Rng,
) -> Result<DpRun> {
    let mut run = dp_sgd(model, data, cfg, rng)?;
    run.params = apply_mask(run.params, alpha, &mut rng.child_named("dp/mask"))?;
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{data, Activation};
    use crate::numeric::vec_mean;

    fn setup() -> (TinyModel, Batch) {
        let mut rng = Rng::new(2);
        let m = TinyModel::new(&[64, 8, 10], Activation::Sigmoid, &mut rng).unwrap();
        let d = data::glyph_dataset(4, 0.1, &mut rng).unwrap();
        (m, d)
    }

    fn cfg() -> DpConfig {
        DpConfig {
            xi: 1.1,
            gamma: 0.5,
            h: 8,
            steps: 6,
            eta: 0.5,
            delta: 1e-5,
            loss: Loss::CrossEntropy,
        }
    }

    #[test]
    fn degenerate_parameters_reproduce_sgd() {
        let (m, d) = setup();
        let c = DpConfig {
            xi: 0.0,
            gamma: f64::INFINITY,
            ..cfg()
        };
        let rng = Rng::new(10);
        let run = dp_sgd(&m, &d, &c, &rng).unwrap();
        let mut sampler = rng.child_named("dp/sample");
        let mut plain = m.clone();
        for _ in 0..c.steps {
            let lot = d.subset(&sampler.sample_indices(d.len(), c.h)).unwrap();
            plain = plain.sgd_step(&lot, c.eta, c.loss).unwrap();
        }
        assert_eq!(run.params.to_le_bytes(), plain.params().to_le_bytes());
        assert!(run.ledger.epsilon_total.is_infinite());
    }

    #[test]
    fn clip_formula() {
        let g = ParamVector::new(vec![6.0, 8.0]).unwrap();
        assert!((clip_gradient(&g, 1.0).unwrap().norm_l2() - 1.0).abs() < 1e-9);
        assert_eq!(clip_gradient(&g, 20.0).unwrap(), g);
    }

    #[test]
    fn contributions_respect_gamma() {
        let (m, d) = setup();
        let run = dp_sgd(
            &m,
            &d,
            &DpConfig {
                gamma: 0.05,
                ..cfg()
            },
            &Rng::new(1),
        )
        .unwrap();
        assert!(run.max_contribution_norm <= 0.05 * (1.0 + 1e-12));
        assert!(run.max_contribution_norm > 0.0);
    }

    #[test]
    fn ledger_is_seed_independent() {
        let (m, d) = setup();
        let a = dp_sgd(&m, &d, &cfg(), &Rng::new(1)).unwrap();
        let b = dp_sgd(&m, &d, &cfg(), &Rng::new(2)).unwrap();
        assert_ne!(a.params, b.params);
        assert_eq!(a.ledger, b.ledger);
        assert_eq!(a.ledger.entries.len(), 6);
        let (e, dl) = compose_privacy(&a.ledger.entries).unwrap();
        assert!((e - a.ledger.epsilon_total).abs() < 1e-12);
        assert!((dl - 6.0 * a.ledger.entries[0].delta).abs() < 1e-20);
        assert!(dl <= 1e-5);
    }

    #[test]
    fn composition_examples() {
        let s = PrivacyStep {
            epsilon: 0.3,
            delta: 1e-6,
        };
        assert_eq!(compose_privacy(&[s]).unwrap(), (0.3, 1e-6));
        assert_eq!(compose_privacy(&[s, s]).unwrap(), (0.6, 2e-6));
        let (e, d) = compose_privacy(&vec![s; 10]).unwrap();
        assert!((e - 3.0).abs() < 1e-12 && (d - 1e-5).abs() < 1e-18);
        assert!(compose_privacy(&[]).is_err());
    }

    #[test]
    fn amplification_shrinks_epsilon() {
        let full = gaussian_step_epsilon(4.0, 1.0, 1e-6);
        let sub = gaussian_step_epsilon(4.0, 0.01, 1e-6);
        assert!((full.epsilon - (2.0 * (1.25e6f64).ln()).sqrt() / 4.0).abs() < 1e-12);
        assert!(sub.epsilon < full.epsilon / 10.0);
    }

    #[test]
    fn masked_variant() {
        let (m, d) = setup();
        let rng = Rng::new(4);
        let plain = dp_sgd(&m, &d, &cfg(), &rng).unwrap();
        assert_eq!(masked_dp_sgd(&m, &d, &cfg(), 0.0, &rng).unwrap(), plain);
        let masked = masked_dp_sgd(&m, &d, &cfg(), 0.2, &rng).unwrap();
        assert!(masked.params.max_abs_diff(&plain.params).unwrap() <= 0.2);
        assert_eq!(masked.ledger, plain.ledger);
    }

    // The masked aggregate differs from the plain one by the mean of n
    // independent masks, so its RMS error should fall like n^(-1/2).
    #[test]
    fn masked_aggregate_error_shrinks_like_inverse_sqrt_n() {
        let (m, d) = setup();
        let alpha = 0.2;
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        let mut inf_at_1000 = 0.0;
        for n in [10usize, 100, 1000] {
            let root = Rng::new(40).child(n as u64);
            let mut plain = Vec::with_capacity(n);
            let mut masked = Vec::with_capacity(n);
            for i in 0..n {
                let rng = root.child(i as u64);
                plain.push(dp_sgd(&m, &d, &cfg(), &rng).unwrap().params);
                masked.push(masked_dp_sgd(&m, &d, &cfg(), alpha, &rng).unwrap().params);
            }
            let diff = vec_mean(&masked)
                .unwrap()
                .sub(&vec_mean(&plain).unwrap())
                .unwrap();
            xs.push((n as f64).ln());
            ys.push((diff.norm_l2() / (diff.dim() as f64).sqrt()).ln());
            inf_at_1000 = diff.norm_inf();
        }
        let slope = crate::stats::ols_slope(&xs, &ys);
        assert!((slope + 0.5).abs() <= 0.15, "slope {slope}");
        assert!(inf_at_1000 < 5.0 * alpha / 3000f64.sqrt(), "{inf_at_1000}");
    }

    #[test]
    fn invalid_configs() {
        let (_, d) = setup();
        assert!(DpConfig {
            gamma: 0.0,
            ..cfg()
        }
        .validate(d.len())
        .is_err());
        assert!(DpConfig { h: 0, ..cfg() }.validate(d.len()).is_err());
        assert!(DpConfig { h: 41, ..cfg() }.validate(d.len()).is_err());
        assert!(DpConfig {
            gamma: f64::INFINITY,
            ..cfg()
        }
        .validate(d.len())
        .is_err());
    }
}

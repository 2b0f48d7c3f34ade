//! Federated training loops: plain FedAvg, FedAvg whose clients mask their
//! weights once before upload, and DP-SGD with an optional final mask.
//!
//! Every random draw comes from a named child stream of the caller's [`Rng`],
//! so a run is reproducible from its seed regardless of client order.

mod dp;
mod metrics;

use serde::{Deserialize, Serialize};

use crate::aggregators::{aggregate, AggregatorSpec};
use crate::error::{Error, Result};
use crate::models::{Batch, Loss, TinyModel};
use crate::numeric::{uniform_mask, vec_mean, ParamVector, Rng};

pub use dp::{
    clip_gradient, compose_privacy, dp_sgd, gaussian_step_epsilon, masked_dp_sgd, DpConfig, DpRun,
    PrivacyLedger, PrivacyStep,
};
pub use metrics::{metrics_csv, RoundMetrics, METRICS_CSV_HEADER, METRICS_SCHEMA_VERSION};

/// `t_local` full-batch gradient steps on the client's data.
pub fn client_update(
    model: &TinyModel,
    data: &Batch,
    t_local: usize,
    eta: f64,
    loss: Loss,
) -> Result<ParamVector> {
    if data.is_empty() {
        return Err(Error::param("client data is empty"));
    }
    if t_local == 0 {
        return Err(Error::param("t_local must be >= 1"));
    }
    let mut m = model.clone();
    for _ in 0..t_local {
        m = m.sgd_step(data, eta, loss)?;
    }
    Ok(m.params().clone())
}

/// Unweighted mean of the client weights.
pub fn fedavg_round(models: &[ParamVector]) -> Result<ParamVector> {
    vec_mean(models)
}

/// Mean weighted by `weights` (e.g. local dataset sizes).
pub fn fedavg_weighted(models: &[ParamVector], weights: &[f64]) -> Result<ParamVector> {
    if models.len() != weights.len() || models.is_empty() {
        return Err(Error::param("need one positive weight per model"));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || weights.iter().any(|w| *w < 0.0) {
        return Err(Error::param(
            "weights must be non-negative with a positive sum",
        ));
    }
    let mut acc = ParamVector::zeros(models[0].dim())?;
    for (m, w) in models.iter().zip(weights) {
        acc = acc.axpy(w / total, m)?;
    }
    Ok(acc)
}

/// Adds `U([-alpha, alpha])` to every coordinate. `alpha = 0` returns `w` untouched.
pub fn apply_mask(w: ParamVector, alpha: f64, rng: &mut Rng) -> Result<ParamVector> {
    let mask = uniform_mask(w.dim(), alpha, rng)?;
    if alpha == 0.0 {
        return Ok(w);
    }
    w.add(&mask)
}

/// [`client_update`] followed by a single uniform mask on the result.
pub fn masked_client_update(
    model: &TinyModel,
    data: &Batch,
    t_local: usize,
    eta: f64,
    alpha: f64,
    loss: Loss,
    rng: &mut Rng,
) -> Result<ParamVector> {
    apply_mask(client_update(model, data, t_local, eta, loss)?, alpha, rng)
}

/// Server-announced participation threshold and the noise it licenses.
///
/// With `n` masked clients the mean of the masks has per-coordinate standard
/// deviation `α/√(3n)`; the server promises a deviation of at most
/// `target_std`, so a round of at least `n` clients tolerates
/// `α = min(1, target_std·√(3n))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdPolicy {
    pub min_clients: usize,
    pub target_std: f64,
}

impl ThresholdPolicy {
    pub fn implied_alpha(&self) -> f64 {
        (self.target_std * (3.0 * self.min_clients as f64).sqrt()).min(1.0)
    }

    /// A client whose own minimum acceptable alpha exceeds what the threshold
    /// licenses refuses to join.
    pub fn admit(&self, client_min_alpha: f64) -> Result<f64> {
        let a = self.implied_alpha();
        if a < client_min_alpha {
            return Err(Error::Refused(format!(
                "threshold of {} clients licenses alpha {a:.4}, below the client's minimum {client_min_alpha}",
                self.min_clients
            )));
        }
        Ok(a)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FedConfig {
    pub n: usize,
    pub t_global: usize,
    pub t_local: usize,
    pub eta: f64,
    pub alpha: f64,
    pub aggregator: AggregatorSpec,
    /// Weight clients by local dataset size (only with the mean rule).
    pub weighted: bool,
    pub threshold: Option<ThresholdPolicy>,
    /// Smallest alpha each client insists on; checked against `threshold`.
    pub client_min_alpha: f64,
    pub seed: u64,
}

impl Default for FedConfig {
    fn default() -> Self {
        FedConfig {
            n: 10,
            t_global: 1,
            t_local: 1,
            eta: 0.1,
            alpha: 0.0,
            aggregator: AggregatorSpec::Mean,
            weighted: false,
            threshold: None,
            client_min_alpha: 0.0,
            seed: 0,
        }
    }
}

impl FedConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::param("n must be >= 1"));
        }
        if self.t_global == 0 || self.t_local == 0 {
            return Err(Error::param("t_global and t_local must be >= 1"));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::param("eta must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::param("alpha must lie in [0, 1]"));
        }
        self.aggregator.validate()
    }
}

#[derive(Clone, Debug)]
pub struct FedRun {
    pub model: TinyModel,
    pub metrics: Vec<RoundMetrics>,
    /// Masked uploads of the final round, in client order.
    pub last_uploads: Vec<ParamVector>,
}

/// Runs `t_global` rounds. `partitions[i]` is client `i`'s data; `eval`
/// scores local and global accuracy when it carries class labels.
pub fn run_federated(
    model: &TinyModel,
    partitions: &[Batch],
    eval: Option<&Batch>,
    cfg: &FedConfig,
    loss: Loss,
) -> Result<FedRun> {
    cfg.validate()?;
    if partitions.len() != cfg.n {
        return Err(Error::param(format!(
            "expected {} partitions, got {}",
            cfg.n,
            partitions.len()
        )));
    }
    if let Some(t) = &cfg.threshold {
        if t.min_clients > cfg.n {
            return Err(Error::Refused(format!(
                "round of {} is below the announced threshold {}",
                cfg.n, t.min_clients
            )));
        }
        t.admit(cfg.client_min_alpha)?;
    }
    let root = Rng::new(cfg.seed).child_named("fedavg/mask");
    let mut global = model.clone();
    let mut metrics = Vec::with_capacity(cfg.t_global);
    let mut uploads = Vec::new();
    for round in 0..cfg.t_global {
        let r = root.child(round as u64);
        uploads = partitions
            .iter()
            .enumerate()
            .map(|(i, data)| {
                masked_client_update(
                    &global,
                    data,
                    cfg.t_local,
                    cfg.eta,
                    cfg.alpha,
                    loss,
                    &mut r.child(i as u64),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let next = if cfg.weighted && cfg.aggregator == AggregatorSpec::Mean {
            let w: Vec<f64> = partitions.iter().map(|p| p.len() as f64).collect();
            fedavg_weighted(&uploads, &w)?
        } else {
            aggregate(&cfg.aggregator, &uploads)?
        };
        global = global.with_params(next)?;
        let union = Batch::concat(partitions)?;
        let mut row = RoundMetrics {
            round,
            n: cfg.n,
            alpha: cfg.alpha,
            loss: global.loss(&union, loss)?,
            local_accuracy: None,
            global_accuracy: None,
        };
        if let Some(labels) = eval.and_then(|e| e.labels()) {
            let inputs = eval.unwrap().inputs();
            let mut acc = 0.0;
            for u in &uploads {
                acc += global.with_params(u.clone())?.accuracy(inputs, labels)?;
            }
            row.local_accuracy = Some(acc / uploads.len() as f64);
            row.global_accuracy = Some(global.accuracy(inputs, labels)?);
        }
        metrics.push(row);
    }
    Ok(FedRun {
        model: global,
        metrics,
        last_uploads: uploads,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{data, Activation};

    fn setup() -> (TinyModel, Vec<Batch>) {
        let mut rng = Rng::new(5);
        let model = TinyModel::new(&[2, 4, 2], Activation::Sigmoid, &mut rng).unwrap();
        let parts = (0..3).map(|_| data::xor()).collect();
        (model, parts)
    }

    #[test]
    fn eta_zero_leaves_weights() {
        let (m, parts) = setup();
        assert_eq!(
            client_update(&m, &parts[0], 3, 0.0, Loss::Mse).unwrap(),
            *m.params()
        );
    }

    #[test]
    fn single_step_is_sgd_step() {
        let (m, parts) = setup();
        let a = client_update(&m, &parts[0], 1, 0.3, Loss::CrossEntropy).unwrap();
        let b = m.sgd_step(&parts[0], 0.3, Loss::CrossEntropy).unwrap();
        assert_eq!(&a, b.params());
    }

    #[test]
    fn small_step_lowers_loss() {
        let (m, parts) = setup();
        let before = m.loss(&parts[0], Loss::Mse).unwrap();
        let w = client_update(&m, &parts[0], 5, 0.05, Loss::Mse).unwrap();
        let after = m
            .with_params(w)
            .unwrap()
            .loss(&parts[0], Loss::Mse)
            .unwrap();
        assert!(after <= before);
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let (m, parts) = setup();
        assert!(Batch::classes(vec![], vec![]).is_err());
        assert!(client_update(&m, &parts[0], 0, 0.1, Loss::Mse).is_err());
    }

    #[test]
    fn fedavg_examples() {
        let p = |v: &[f64]| ParamVector::new(v.to_vec()).unwrap();
        assert_eq!(
            fedavg_round(&[p(&[1.0, 2.0]), p(&[3.0, 4.0])])
                .unwrap()
                .as_slice(),
            &[2.0, 3.0]
        );
        assert_eq!(fedavg_round(&[p(&[1.5])]).unwrap(), p(&[1.5]));
        assert!(fedavg_round(&[p(&[1.0]), p(&[1.0, 2.0])]).is_err());
        let w = fedavg_weighted(&[p(&[0.0]), p(&[3.0])], &[2.0, 1.0]).unwrap();
        assert!((w.get(0) - 1.0).abs() < 1e-15);
        let mut rng = Rng::new(1);
        let vs: Vec<ParamVector> = (0..100)
            .map(|_| ParamVector::random_uniform(5, -1.0, 1.0, &mut rng).unwrap())
            .collect();
        let got = fedavg_round(&vs).unwrap();
        for c in 0..5 {
            let direct = vs.iter().map(|v| v.get(c)).sum::<f64>() / 100.0;
            assert!((got.get(c) - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn masking_at_zero_alpha_is_plain_update() {
        let (m, parts) = setup();
        let plain = client_update(&m, &parts[0], 2, 0.2, Loss::Mse).unwrap();
        let masked =
            masked_client_update(&m, &parts[0], 2, 0.2, 0.0, Loss::Mse, &mut Rng::new(3)).unwrap();
        assert_eq!(plain.to_le_bytes(), masked.to_le_bytes());
        let masked =
            masked_client_update(&m, &parts[0], 2, 0.2, 0.3, Loss::Mse, &mut Rng::new(3)).unwrap();
        assert!(masked.max_abs_diff(&plain).unwrap() <= 0.3);
        assert!(masked != plain);
    }

    #[test]
    fn masked_run_reduces_to_plain_at_zero() {
        let (m, parts) = setup();
        let cfg = FedConfig {
            n: 3,
            t_global: 4,
            eta: 0.5,
            ..FedConfig::default()
        };
        let a = run_federated(&m, &parts, None, &cfg, Loss::Mse).unwrap();
        let mut w = m.clone();
        for _ in 0..4 {
            let ups: Vec<ParamVector> = parts
                .iter()
                .map(|p| client_update(&w, p, 1, 0.5, Loss::Mse).unwrap())
                .collect();
            w = w.with_params(fedavg_round(&ups).unwrap()).unwrap();
        }
        assert_eq!(a.model.params().to_le_bytes(), w.params().to_le_bytes());
        assert_eq!(a.metrics.len(), 4);
    }

    #[test]
    fn threshold_refusal() {
        let t = ThresholdPolicy {
            min_clients: 100,
            target_std: 0.01,
        };
        assert!((t.implied_alpha() - 0.01 * 300f64.sqrt()).abs() < 1e-15);
        assert!(t.admit(0.1).is_ok());
        assert!(matches!(t.admit(0.5), Err(Error::Refused(_))));
        let (m, parts) = setup();
        let cfg = FedConfig {
            n: 3,
            threshold: Some(ThresholdPolicy {
                min_clients: 3,
                target_std: 0.01,
            }),
            client_min_alpha: 0.5,
            ..FedConfig::default()
        };
        assert!(matches!(
            run_federated(&m, &parts, None, &cfg, Loss::Mse),
            Err(Error::Refused(_))
        ));
    }
}

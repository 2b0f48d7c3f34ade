use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adversary::AdversaryStrategy;
use crate::aggregators::AggregatorSpec;
use crate::attacks::DlgConfig;
use crate::error::{Error, Result};
use crate::harness::sweep::GlyphTask;
use crate::secagg::{Dropout, GroupChoice};

/// Which experiment a scenario runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    #[default]
    SecaggRun,
    AttackDemo,
    FedTraining,
    AlphaSweep,
    CltCheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SecaggRun => "secagg_run",
            ExperimentKind::AttackDemo => "attack_demo",
            ExperimentKind::FedTraining => "fed_training",
            ExperimentKind::AlphaSweep => "alpha_sweep",
            ExperimentKind::CltCheck => "clt_check",
        }
    }
}

/// Federated-training knobs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub rounds: usize,
    pub local_steps: usize,
    pub eta: f64,
    /// Training examples per client and class.
    pub per_class: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            rounds: 5,
            local_steps: 2,
            eta: 0.5,
            per_class: 2,
        }
    }
}

/// One scenario file. Every key has a default and unknown keys are rejected.
///
/// ```toml
/// kind = "alpha_sweep"
/// seed = 0
/// trials = 10
/// alphas = [0.0, 0.1, 0.5, 1.0]
/// client_counts = [10, 100]
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ExperimentKind,
    /// Base seed; trial `t` runs with `seed + t`.
    pub seed: u64,
    pub trials: usize,
    pub n: usize,
    pub k: usize,
    pub dim: usize,
    pub alpha: f64,
    pub alphas: Vec<f64>,
    pub client_counts: Vec<usize>,
    pub group: GroupChoice,
    pub dropouts: Vec<Dropout>,
    pub strategies: Vec<AdversaryStrategy>,
    pub aggregator: AggregatorSpec,
    pub training: TrainingConfig,
    pub task: GlyphTask,
    /// Clients whose masked model is scored individually in each sweep cell.
    pub local_eval_cap: usize,
    pub dlg: DlgConfig,
    /// Mask half-width at which the DLG follow-up is expected to fail.
    pub dlg_alpha: f64,
    pub output_dir: PathBuf,
}

/// Default alpha grid.
pub const ALPHA_GRID: [f64; 9] = [0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 0.8, 1.0];

/// Mask half-width at which DLG fails on every seed for the bundled glyph
/// model, found by sweeping the grid upwards.
pub const DLG_FAILURE_ALPHA: f64 = 0.01;

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            kind: ExperimentKind::default(),
            seed: 0,
            trials: 10,
            n: 10,
            k: 6,
            dim: 4,
            alpha: 0.1,
            alphas: ALPHA_GRID.to_vec(),
            client_counts: vec![10, 100, 1000],
            group: GroupChoice::default(),
            dropouts: Vec::new(),
            strategies: vec![
                AdversaryStrategy::HonestButCurious,
                AdversaryStrategy::SybilMitm { sybils: 9 },
                AdversaryStrategy::ShareCompromise { controlled: 6 },
                AdversaryStrategy::StrategicDrop {
                    controlled_fraction: 0.75,
                    retry_limit: 10,
                },
            ],
            aggregator: AggregatorSpec::default(),
            training: TrainingConfig::default(),
            task: GlyphTask::default(),
            local_eval_cap: 100,
            dlg: DlgConfig::default(),
            dlg_alpha: DLG_FAILURE_ALPHA,
            output_dir: PathBuf::from("fedmask-out"),
        }
    }
}

fn unit(path: &str, a: f64) -> Result<()> {
    if (0.0..=1.0).contains(&a) {
        Ok(())
    } else {
        Err(Error::config(path, format!("{a} is outside [0, 1]")))
    }
}

impl ScenarioConfig {
    /// Defaults suited to `kind`: the CLT check pools 100 coordinates over
    /// 30 seeds at two alphas; every other kind uses [`Default`].
    pub fn preset(kind: ExperimentKind) -> Self {
        let mut cfg = ScenarioConfig {
            kind,
            ..Self::default()
        };
        if kind == ExperimentKind::CltCheck {
            cfg.dim = 100;
            cfg.trials = 30;
            cfg.alphas = vec![0.1, 0.5];
        }
        cfg
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
            let path = e
                .span()
                .map(|s| format!("byte {}", s.start))
                .unwrap_or_else(|| "<root>".into());
            Error::config(path, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Decode(e.to_string()))
    }

    /// Seeds of the trial battery.
    pub fn seeds(&self) -> Vec<u64> {
        (0..self.trials as u64)
            .map(|t| self.seed.wrapping_add(t))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials", "must be >= 1"));
        }
        if self.n < 2 {
            return Err(Error::config("n", "need at least 2 clients"));
        }
        if self.k == 0 || self.k > self.n {
            return Err(Error::config("k", format!("need 1 <= k <= n = {}", self.n)));
        }
        if self.dim == 0 {
            return Err(Error::config("dim", "must be >= 1"));
        }
        unit("alpha", self.alpha)?;
        unit("dlg_alpha", self.dlg_alpha)?;
        if self.alphas.is_empty() {
            return Err(Error::config("alphas", "must not be empty"));
        }
        for (i, &a) in self.alphas.iter().enumerate() {
            unit(&format!("alphas[{i}]"), a)?;
        }
        if self.client_counts.is_empty() {
            return Err(Error::config("client_counts", "must not be empty"));
        }
        for (i, &c) in self.client_counts.iter().enumerate() {
            if c == 0 || c as u64 > crate::numeric::DEFAULT_MAX_SUMMANDS {
                return Err(Error::config(
                    format!("client_counts[{i}]"),
                    "must lie in 1..=10000",
                ));
            }
        }
        for (i, d) in self.dropouts.iter().enumerate() {
            if d.client == 0 || d.client > self.n as u64 {
                return Err(Error::config(
                    format!("dropouts[{i}].client"),
                    format!("no client {} among 1..={}", d.client, self.n),
                ));
            }
        }
        if self.kind == ExperimentKind::AttackDemo && self.strategies.is_empty() {
            return Err(Error::config("strategies", "must not be empty"));
        }
        for (i, s) in self.strategies.iter().enumerate() {
            let path = format!("strategies[{i}]");
            match *s {
                AdversaryStrategy::SybilMitm { sybils } if sybils == 0 || self.k > sybils => {
                    return Err(Error::config(path, "need sybils >= k >= 1"));
                }
                AdversaryStrategy::ShareCompromise { controlled } if controlled == 0 => {
                    return Err(Error::config(path, "need controlled >= 1"));
                }
                AdversaryStrategy::StrategicDrop {
                    controlled_fraction,
                    retry_limit,
                } => {
                    unit(&format!("{path}.controlled_fraction"), controlled_fraction)?;
                    if retry_limit == 0 {
                        return Err(Error::config(format!("{path}.retry_limit"), "must be >= 1"));
                    }
                }
                _ => {}
            }
        }
        self.aggregator
            .validate()
            .map_err(|e| Error::config("aggregator", e.to_string()))?;
        let t = &self.training;
        if t.rounds == 0 || t.local_steps == 0 || t.per_class == 0 || !(t.eta > 0.0) {
            return Err(Error::config(
                "training",
                "rounds, local_steps, per_class and eta must be positive",
            ));
        }
        self.task.validate()?;
        self.dlg
            .validate()
            .map_err(|e| Error::config("dlg", e.to_string()))?;
        if self.local_eval_cap == 0 {
            return Err(Error::config("local_eval_cap", "must be >= 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = ScenarioConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_toml().unwrap();
        assert_eq!(ScenarioConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn empty_file_is_the_default() {
        assert_eq!(
            ScenarioConfig::from_toml("").unwrap(),
            ScenarioConfig::default()
        );
    }

    #[test]
    fn k_above_n_names_k() {
        let err = ScenarioConfig::from_toml("n = 3\nk = 4\n").unwrap_err();
        assert!(
            matches!(err, Error::Config { ref path, .. } if path == "k"),
            "{err}"
        );
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ScenarioConfig::from_toml("nn = 3\n").unwrap_err();
        assert!(err.to_string().contains("nn"), "{err}");
    }

    #[test]
    fn nested_errors_carry_a_path() {
        let err = ScenarioConfig::from_toml("alphas = [0.1, 2.0]\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref path, .. } if path == "alphas[1]"));
        let err = ScenarioConfig::from_toml(
            "n = 4\nk = 3\n[[dropouts]]\nclient = 9\nafter = \"share_keys\"\n",
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config { ref path, .. } if path == "dropouts[0].client"));
    }

    #[test]
    fn strategies_parse_from_tables() {
        let cfg = ScenarioConfig::from_toml(
            "kind = \"attack_demo\"\n[[strategies]]\nkind = \"share_compromise\"\ncontrolled = 6\n",
        )
        .unwrap();
        assert_eq!(
            cfg.strategies,
            vec![AdversaryStrategy::ShareCompromise { controlled: 6 }]
        );
    }
}

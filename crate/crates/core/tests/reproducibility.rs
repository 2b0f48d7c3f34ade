//! Identical configs give byte-identical report bodies; the seed matters.

use fedmask::harness::{run_scenario, ExperimentKind, GlyphTask, ScenarioConfig};

fn small(kind: ExperimentKind) -> ScenarioConfig {
    let mut cfg = ScenarioConfig {
        kind,
        trials: 2,
        ..ScenarioConfig::default()
    };
    match kind {
        ExperimentKind::AlphaSweep => {
            cfg.client_counts = vec![10, 50];
            cfg.alphas = vec![0.0, 0.5];
            cfg.task = GlyphTask {
                pretrain_steps: 100,
                ..GlyphTask::default()
            };
            cfg.local_eval_cap = 10;
        }
        ExperimentKind::CltCheck => cfg.dim = 50,
        ExperimentKind::AttackDemo => cfg.dlg.iterations = 50,
        _ => {}
    }
    cfg
}

#[test]
fn every_kind_is_byte_reproducible() {
    for kind in [
        ExperimentKind::SecaggRun,
        ExperimentKind::AttackDemo,
        ExperimentKind::FedTraining,
        ExperimentKind::AlphaSweep,
        ExperimentKind::CltCheck,
    ] {
        let cfg = small(kind);
        let a = run_scenario(&cfg).unwrap();
        let b = run_scenario(&cfg).unwrap();
        assert_eq!(
            a.body_bytes().unwrap(),
            b.body_bytes().unwrap(),
            "{}",
            kind.name()
        );
        assert_eq!(a.artifacts, b.artifacts, "{}", kind.name());
        let c = run_scenario(&ScenarioConfig { seed: 99, ..cfg }).unwrap();
        assert_ne!(a.body.table, c.body.table, "{}", kind.name());
    }
}

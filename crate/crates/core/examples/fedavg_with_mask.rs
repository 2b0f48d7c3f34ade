//! Federated training on the glyph task where every client masks its upload.
//! Local models are noisy; the average is close to what plain FedAvg gives.
//!
//! cargo run --example fedavg_with_mask [alpha]

use fedmask::fedcore::{run_federated, FedConfig};
use fedmask::models::data::glyph_dataset;
use fedmask::models::{Activation, Loss, TinyModel};
use fedmask::Rng;

fn main() -> fedmask::Result<()> {
    let alpha: f64 = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(0.5);
    let n = 50;
    let rng = Rng::new(1);
    let parts = (0..n)
        .map(|i| glyph_dataset(2, 0.2, &mut rng.child_named("data").child(i)))
        .collect::<fedmask::Result<Vec<_>>>()?;
    let eval = glyph_dataset(20, 0.2, &mut rng.child_named("eval"))?;
    let model = TinyModel::new(
        &[64, 16, 10],
        Activation::Tanh,
        &mut rng.child_named("init"),
    )?
    .with_output(Activation::Identity);

    for a in [0.0, alpha] {
        let cfg = FedConfig {
            n: n as usize,
            t_global: 8,
            t_local: 2,
            eta: 0.5,
            alpha: a,
            seed: 1,
            ..FedConfig::default()
        };
        let run = run_federated(&model, &parts, Some(&eval), &cfg, Loss::CrossEntropy)?;
        println!("alpha {a}");
        for m in &run.metrics {
            println!(
                "  round {}: loss {:.3}, local acc {:.3}, global acc {:.3}",
                m.round,
                m.loss,
                m.local_accuracy.unwrap_or(f64::NAN),
                m.global_accuracy.unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}

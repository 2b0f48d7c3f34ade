//! DP-SGD with per-example clipping and Gaussian noise, the privacy ledger it
//! keeps, and the masked variant that adds one uniform mask at the end.
//!
//! cargo run --example dp_sgd

use fedmask::fedcore::{dp_sgd, masked_dp_sgd, DpConfig};
use fedmask::models::data::glyph_dataset;
use fedmask::models::{Activation, Loss, TinyModel};
use fedmask::Rng;

fn main() -> fedmask::Result<()> {
    let mut rng = Rng::new(6);
    let data = glyph_dataset(10, 0.2, &mut rng)?;
    let model = TinyModel::new(&[64, 12, 10], Activation::Sigmoid, &mut rng)?;
    let cfg = DpConfig {
        xi: 1.1,
        gamma: 1.0,
        h: 20,
        steps: 50,
        eta: 0.5,
        delta: 1e-5,
        loss: Loss::CrossEntropy,
    };

    let run = dp_sgd(&model, &data, &cfg, &Rng::new(7))?;
    let trained = model.with_params(run.params.clone())?;
    println!(
        "loss {:.3} -> {:.3}",
        model.loss(&data, cfg.loss)?,
        trained.loss(&data, cfg.loss)?
    );
    println!(
        "largest clipped contribution {:.4} (gamma {})",
        run.max_contribution_norm, cfg.gamma
    );
    println!(
        "ledger: {} steps, epsilon {:.3}, delta {:.2e}",
        run.ledger.entries.len(),
        run.ledger.epsilon_total,
        run.ledger.delta_total
    );

    let masked = masked_dp_sgd(&model, &data, &cfg, 0.1, &Rng::new(7))?;
    println!(
        "masked upload moves at most {:.4} from the DP weights",
        masked.params.max_abs_diff(&run.params)?
    );
    Ok(())
}

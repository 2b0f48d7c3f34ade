//! Model inversion: descend `1 − softmax(f(x))[c]` from the zero input to find
//! an input the model assigns to class `c`.
//!
//! cargo run --example model_inversion

use fedmask::attacks::{mia_attack, MiaConfig};
use fedmask::models::data::{glyph_dataset, glyph_to_pgm};
use fedmask::models::{Activation, Loss, TinyModel};
use fedmask::Rng;

fn main() -> fedmask::Result<()> {
    let mut rng = Rng::new(9);
    let data = glyph_dataset(20, 0.2, &mut rng)?;
    let mut model = TinyModel::new(&[64, 10], Activation::Identity, &mut rng)?;
    for _ in 0..300 {
        model = model.sgd_step(&data, 0.5, Loss::CrossEntropy)?;
    }
    let cfg = MiaConfig {
        iterations: 500,
        zeta: 5,
        gamma: 0.01,
        eta: 0.5,
        lo: 0.0,
        hi: 1.0,
    };
    for class in [0, 4, 7] {
        let r = mia_attack(&model, class, &cfg)?;
        println!(
            "class {class}: cost {:.4} after {} steps, predicted {}",
            r.cost,
            r.trace.len() - 1,
            model.predict(&r.input)?
        );
        std::fs::write(format!("mia-class{class}.pgm"), glyph_to_pgm(&r.input)?)?;
    }
    Ok(())
}

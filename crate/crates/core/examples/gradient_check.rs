//! Compares manual backpropagation with central finite differences on a few
//! layouts, then trains a small network on XOR.
//!
//! cargo run --example gradient_check

use fedmask::models::data::xor;
use fedmask::models::{Activation, Batch, Loss, TinyModel};
use fedmask::{ParamVector, Rng};

fn main() -> fedmask::Result<()> {
    let mut rng = Rng::new(4);
    for sizes in [vec![2, 3, 1], vec![4, 8, 3], vec![64, 7, 10]] {
        for act in [Activation::Sigmoid, Activation::Tanh, Activation::Relu] {
            let m = TinyModel::new(&sizes, act, &mut rng)?;
            let n_out = *sizes.last().unwrap();
            let inputs = (0..3)
                .map(|_| ParamVector::random_uniform(sizes[0], -1.0, 1.0, &mut rng))
                .collect::<fedmask::Result<Vec<_>>>()?;
            let batch = Batch::classes(inputs, vec![0, n_out - 1, n_out / 2])?;
            let loss = if n_out == 1 {
                Loss::Mse
            } else {
                Loss::CrossEntropy
            };
            let err = m.gradient_check(&batch, loss, 1e-5)?;
            println!("{sizes:?} {act:?}: relative error {err:.2e}");
        }
    }

    let data = xor();
    let mut m = TinyModel::new(&[2, 8, 2], Activation::Sigmoid, &mut rng)?
        .with_output(Activation::Identity);
    let start = m.loss(&data, Loss::CrossEntropy)?;
    for _ in 0..5000 {
        m = m.sgd_step(&data, 0.5, Loss::CrossEntropy)?;
    }
    let labels = data.labels().unwrap_or(&[]);
    println!(
        "xor: loss {start:.3} -> {:.4}, accuracy {}",
        m.loss(&data, Loss::CrossEntropy)?,
        m.accuracy(data.inputs(), labels)?
    );
    Ok(())
}

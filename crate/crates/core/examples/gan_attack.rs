//! The GAN attack: an insider trains a generator against the shared
//! classifier to imitate another client's data. Masking the classifier
//! or handing the attacker a frozen-in-time classifier leaves the
//! generator far from the victim's modes.
//!
//! cargo run --example gan_attack

use fedmask::attacks::{gan_attack, GanMode, GanPair, GanSchedule, GanTask, DESK_GAN_ALPHA};
use fedmask::Rng;

fn main() -> fedmask::Result<()> {
    let task = GanTask::default();
    let schedule = GanSchedule::default();
    for seed in 0..3 {
        let rng = Rng::new(seed);
        let pair = GanPair::desk(schedule.noise_dim, &mut rng.child_named("init"))?;
        for mode in [
            GanMode::Normal,
            GanMode::MaskedD {
                alpha: DESK_GAN_ALPHA,
            },
            GanMode::PretrainedD { epochs: 5 },
        ] {
            let r = gan_attack(&pair, &task, &schedule, mode, &rng)?;
            println!(
                "seed {seed} {:<13} mode distance {:.3}, generated mean ({:.2}, {:.2})",
                mode.name(),
                r.mode_distance,
                r.generated_mean[0],
                r.generated_mean[1]
            );
        }
    }
    Ok(())
}

//! Deep leakage from gradients against one client's single-step upload.
//! Without a mask the glyph comes back; at alpha 0.01 the recovered gradient
//! is dominated by mask noise and the reconstruction fails. Writes the
//! truth and both guesses as PGM images.
//!
//! cargo run --example dlg_reconstruction [seed] [outdir]

use fedmask::attacks::{DlgConfig, DlgVictim};
use fedmask::models::data::glyph_to_pgm;

fn main() -> fedmask::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(3);
    let out = std::path::PathBuf::from(args.next().unwrap_or_else(|| "dlg-out".into()));
    std::fs::create_dir_all(&out)?;

    let victim = DlgVictim::glyph(seed)?;
    std::fs::write(
        out.join("truth.pgm"),
        glyph_to_pgm(&victim.truth.inputs()[0])?,
    )?;
    for alpha in [0.0, 0.01] {
        let upload = victim.upload(alpha)?;
        let r = victim.attack(
            &upload,
            &DlgConfig {
                init_seed: seed,
                ..DlgConfig::default()
            },
        )?;
        println!(
            "alpha {alpha}: mse {:.5} (noise guess {:.3}), label {} of {}, success {}",
            r.mse,
            r.initial_mse,
            r.label_guess,
            seed % 10,
            r.success
        );
        std::fs::write(
            out.join(format!("guess-alpha{alpha}.pgm")),
            glyph_to_pgm(&r.reconstruction)?,
        )?;
    }
    println!("images in {}", out.display());
    Ok(())
}

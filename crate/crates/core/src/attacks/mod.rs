//! Reconstruction and extraction attacks against tiny models.

mod dlg;
mod gan;
mod lp;
mod mia;

pub use dlg::{
    central_difference, dlg_attack, dlg_objective, observed_gradient, DlgConfig, DlgOptimizer,
    DlgVictim, ReconstructionReport, VICTIM_ETA,
};
pub use gan::{
    gan_attack, non_converged, GanMode, GanPair, GanReport, GanSchedule, GanTask, GeneratorLoss,
    DESK_GAN_ALPHA, GAN_WINDOW, Y_FAKE, Y_OWN, Y_TRUE,
};
pub use lp::{lp_probe, LpRow, LP_CAP_BITS};
pub use mia::{mia_attack, mia_cost, MiaConfig, MiaResult};

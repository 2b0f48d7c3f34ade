use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{softmax, TinyModel};
use crate::numeric::ParamVector;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MiaConfig {
    pub iterations: usize,
    /// Plateau window: stop once the cost is no lower than the last `zeta` costs.
    pub zeta: usize,
    /// Stop once the cost falls to `gamma` or below.
    pub gamma: f64,
    pub eta: f64,
    /// Inputs are clamped to `[lo, hi]` after every step.
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MiaResult {
    pub input: ParamVector,
    pub cost: f64,
    pub best_index: usize,
    pub trace: Vec<f64>,
}

/// `C(x) = 1 − softmax(f(x))[label]`. The auxiliary term is zero.
pub fn mia_cost(model: &TinyModel, x: &ParamVector, label: usize) -> Result<f64> {
    Ok(1.0 - softmax(model.forward(x)?.as_slice())[label])
}

/// Gradient descent on [`mia_cost`] from the zero input.
pub fn mia_attack(model: &TinyModel, label: usize, cfg: &MiaConfig) -> Result<MiaResult> {
    if cfg.iterations == 0 || cfg.zeta == 0 {
        return Err(Error::param("iterations and zeta must be >= 1"));
    }
    if label >= model.output_dim() {
        return Err(Error::param(format!("label {label} out of range")));
    }
    if !(cfg.lo < cfg.hi) {
        return Err(Error::param("input range is empty"));
    }
    let mut x = ParamVector::zeros(model.input_dim())?;
    let mut trace = vec![mia_cost(model, &x, label)?];
    let mut visited = vec![x.clone()];
    for _ in 0..cfg.iterations {
        if trace.last().copied().unwrap() <= cfg.gamma {
            break;
        }
        let s = softmax(model.forward(&x)?.as_slice());
        // dC/dz_j = −s_c(δ_cj − s_j)
        let og: Vec<f64> = (0..s.len())
            .map(|j| -s[label] * (f64::from(u8::from(j == label)) - s[j]))
            .collect();
        let g = model.input_gradient(&x, &og)?;
        x = ParamVector::new(
            x.iter()
                .zip(g.iter())
                .map(|(v, gi)| (v - cfg.eta * gi).clamp(cfg.lo, cfg.hi))
                .collect(),
        )?;
        let c = mia_cost(model, &x, label)?;
        let window = &trace[trace.len().saturating_sub(cfg.zeta)..];
        let plateau = window.iter().all(|&prev| c >= prev);
        trace.push(c);
        visited.push(x.clone());
        if plateau {
            break;
        }
    }
    let best_index = (0..trace.len())
        .min_by(|&a, &b| trace[a].total_cmp(&trace[b]))
        .unwrap();
    Ok(MiaResult {
        input: visited.swap_remove(best_index),
        cost: trace[best_index],
        best_index,
        trace,
    })
}

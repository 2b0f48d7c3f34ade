//! Byzantine-tolerant aggregation rules, interchangeable with the plain mean.
//!
//! Every rule is a pure function of its inputs. Selection rules (Krum, the
//! Bulyan inner loop) break ties by lowest input index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{vec_mean, ParamVector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum AggregatorSpec {
    Mean,
    Krum {
        delta: f64,
    },
    GeometricMedian {
        #[serde(default = "default_gm_iters")]
        max_iters: usize,
        #[serde(default = "default_gm_tol")]
        tol: f64,
    },
    Bulyan {
        #[serde(default = "default_bulyan_inner")]
        inner: Box<AggregatorSpec>,
        d: usize,
    },
    TrimmedMean {
        zeta: f64,
    },
    CoordMedian,
    /// Starts from the coordinate-wise median.
    CenteredClip {
        tau: f64,
        iters: usize,
    },
}

fn default_gm_iters() -> usize {
    1000
}

fn default_gm_tol() -> f64 {
    1e-9
}

fn default_bulyan_inner() -> Box<AggregatorSpec> {
    Box::new(AggregatorSpec::Krum { delta: 0.0 })
}

impl Default for AggregatorSpec {
    fn default() -> Self {
        AggregatorSpec::Mean
    }
}

impl AggregatorSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AggregatorSpec::Mean => "mean",
            AggregatorSpec::Krum { .. } => "krum",
            AggregatorSpec::GeometricMedian { .. } => "geometric_median",
            AggregatorSpec::Bulyan { .. } => "bulyan",
            AggregatorSpec::TrimmedMean { .. } => "trimmed_mean",
            AggregatorSpec::CoordMedian => "coord_median",
            AggregatorSpec::CenteredClip { .. } => "centered_clip",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AggregatorSpec::Krum { delta } if !(0.0..0.5).contains(delta) => Err(Error::param(
                format!("krum delta must lie in [0, 0.5), got {delta}"),
            )),
            AggregatorSpec::TrimmedMean { zeta } if !(0.0..0.5).contains(zeta) => {
                Err(Error::param(format!(
                    "trimmed-mean zeta must lie in [0, 0.5), got {zeta}"
                )))
            }
            AggregatorSpec::CenteredClip { tau, iters } if !(*tau >= 0.0) || *iters == 0 => {
                Err(Error::param("centered clip needs tau >= 0 and iters >= 1"))
            }
            AggregatorSpec::GeometricMedian { tol, .. } if !(*tol > 0.0) => {
                Err(Error::param("geometric median tolerance must be > 0"))
            }
            AggregatorSpec::Bulyan { inner, .. } => match inner.as_ref() {
                AggregatorSpec::Bulyan { .. } => Err(Error::param("bulyan cannot nest bulyan")),
                other => other.validate(),
            },
            _ => Ok(()),
        }
    }
}

/// Applies `spec` to `vs`.
pub fn aggregate(spec: &AggregatorSpec, vs: &[ParamVector]) -> Result<ParamVector> {
    spec.validate()?;
    check(vs)?;
    match spec {
        AggregatorSpec::Mean => vec_mean(vs),
        AggregatorSpec::Krum { delta } => krum(vs, *delta),
        AggregatorSpec::GeometricMedian { max_iters, tol } => {
            geometric_median(vs, *max_iters, *tol)
        }
        AggregatorSpec::Bulyan { inner, d } => bulyan(vs, inner, *d),
        AggregatorSpec::TrimmedMean { zeta } => trimmed_mean(vs, *zeta),
        AggregatorSpec::CoordMedian => coord_median(vs),
        AggregatorSpec::CenteredClip { tau, iters } => {
            centered_clip(vs, &coord_median(vs)?, *tau, *iters)
        }
    }
}

fn check(vs: &[ParamVector]) -> Result<usize> {
    let d = vs
        .first()
        .ok_or_else(|| Error::param("cannot aggregate zero vectors"))?
        .dim();
    for v in vs {
        if v.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: v.dim(),
            });
        }
    }
    Ok(d)
}

fn sq_dist(a: &ParamVector, b: &ParamVector) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Krum scores: sum of squared distances to the `neighbors` nearest others.
pub fn krum_scores(vs: &[ParamVector], neighbors: usize) -> Vec<f64> {
    (0..vs.len())
        .map(|i| {
            let mut d: Vec<f64> = (0..vs.len())
                .filter(|&j| j != i)
                .map(|j| sq_dist(&vs[i], &vs[j]))
                .collect();
            d.sort_by(f64::total_cmp);
            d.iter().take(neighbors).sum()
        })
        .collect()
}

fn argmin(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x < xs[best] {
            best = i;
        }
    }
    best
}

/// Index chosen by Krum when `excluded` vectors are presumed Byzantine.
pub fn krum_index(vs: &[ParamVector], excluded: usize) -> usize {
    let neighbors = vs.len().saturating_sub(excluded + 2).max(1);
    argmin(&krum_scores(vs, neighbors))
}

/// Krum with `⌊delta·n⌋` presumed Byzantine. Returns one of the inputs.
pub fn krum(vs: &[ParamVector], delta: f64) -> Result<ParamVector> {
    check(vs)?;
    if !(0.0..0.5).contains(&delta) {
        return Err(Error::param(format!(
            "krum delta must lie in [0, 0.5), got {delta}"
        )));
    }
    let f = (delta * vs.len() as f64).floor() as usize;
    if vs.len() < f + 3 {
        return Err(Error::param(format!(
            "krum needs n >= {} vectors, got {}",
            f + 3,
            vs.len()
        )));
    }
    Ok(vs[krum_index(vs, f)].clone())
}

/// Weiszfeld iteration from the coordinate mean. An iterate that lands on an
/// input point is nudged by `tol` in every coordinate before continuing.
pub fn geometric_median(vs: &[ParamVector], max_iters: usize, tol: f64) -> Result<ParamVector> {
    let dim = check(vs)?;
    if !(tol > 0.0) {
        return Err(Error::param("tolerance must be > 0"));
    }
    let mut nu = vec_mean(vs)?.into_vec();
    for _ in 0..max_iters {
        let dists: Vec<f64> = vs
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&nu)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        if dists.iter().any(|&d| d == 0.0) {
            if vs.len() == 1 {
                break;
            }
            nu.iter_mut().for_each(|x| *x += tol);
            continue;
        }
        let mut num = vec![0.0; dim];
        let mut den = 0.0;
        for (v, d) in vs.iter().zip(&dists) {
            den += 1.0 / d;
            for (n, x) in num.iter_mut().zip(v.iter()) {
                *n += x / d;
            }
        }
        let next: Vec<f64> = num.iter().map(|n| n / den).collect();
        let step = next
            .iter()
            .zip(&nu)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        nu = next;
        if step < tol {
            break;
        }
    }
    ParamVector::new(nu)
}

/// Bulyan: select `γ = n − 2d` inputs by repeatedly applying `inner` to the
/// remainder, then average per coordinate the `ζ = γ − 2d` selected values
/// closest to that coordinate's median. A non-selecting inner rule picks the
/// remaining input nearest its output.
pub fn bulyan(vs: &[ParamVector], inner: &AggregatorSpec, d: usize) -> Result<ParamVector> {
    let dim = check(vs)?;
    if matches!(inner, AggregatorSpec::Bulyan { .. }) {
        return Err(Error::param("bulyan cannot nest bulyan"));
    }
    let n = vs.len();
    if n < 4 * d + 3 {
        return Err(Error::param(format!(
            "bulyan with d={d} needs n >= {}, got {n}",
            4 * d + 3
        )));
    }
    let gamma = n - 2 * d;
    let zeta = gamma - 2 * d;
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut selected = Vec::with_capacity(gamma);
    while selected.len() < gamma {
        let set: Vec<ParamVector> = remaining.iter().map(|&i| vs[i].clone()).collect();
        let pos = select_index(&set, inner, d)?;
        selected.push(remaining.remove(pos));
    }
    let mut out = Vec::with_capacity(dim);
    for c in 0..dim {
        let mut col: Vec<f64> = selected.iter().map(|&i| vs[i].get(c)).collect();
        col.sort_by(f64::total_cmp);
        let med = median_sorted(&col);
        col.sort_by(|a, b| (a - med).abs().total_cmp(&(b - med).abs()));
        out.push(col[..zeta].iter().sum::<f64>() / zeta as f64);
    }
    ParamVector::new(out)
}

// An inner Krum presumes the same `d` Byzantine inputs as the outer rule,
// clamped so the shrinking remainder keeps at least one neighbour.
fn select_index(set: &[ParamVector], inner: &AggregatorSpec, d: usize) -> Result<usize> {
    if let AggregatorSpec::Krum { .. } = inner {
        return Ok(krum_index(set, d.min(set.len().saturating_sub(3))));
    }
    let target = aggregate(inner, set)?;
    let d: Vec<f64> = set.iter().map(|v| sq_dist(v, &target)).collect();
    Ok(argmin(&d))
}

fn median_sorted(col: &[f64]) -> f64 {
    let m = col.len() / 2;
    if col.len() % 2 == 1 {
        col[m]
    } else {
        0.5 * (col[m - 1] + col[m])
    }
}

/// Per coordinate: sort, drop `⌊ζn⌋` values from each end, average the rest.
pub fn trimmed_mean(vs: &[ParamVector], zeta: f64) -> Result<ParamVector> {
    let dim = check(vs)?;
    if !(0.0..0.5).contains(&zeta) {
        return Err(Error::param(format!(
            "zeta must lie in [0, 0.5), got {zeta}"
        )));
    }
    let t = (zeta * vs.len() as f64).floor() as usize;
    if vs.len() <= 2 * t {
        return Err(Error::param("trimming removes every value"));
    }
    let mut col = vec![0.0; vs.len()];
    let out = (0..dim)
        .map(|c| {
            for (slot, v) in col.iter_mut().zip(vs) {
                *slot = v.get(c);
            }
            col.sort_by(f64::total_cmp);
            let kept = &col[t..vs.len() - t];
            kept.iter().sum::<f64>() / kept.len() as f64
        })
        .collect();
    ParamVector::new(out)
}

/// Per-coordinate median; even counts average the central pair.
pub fn coord_median(vs: &[ParamVector]) -> Result<ParamVector> {
    let dim = check(vs)?;
    let mut col = vec![0.0; vs.len()];
    let out = (0..dim)
        .map(|c| {
            for (slot, v) in col.iter_mut().zip(vs) {
                *slot = v.get(c);
            }
            col.sort_by(f64::total_cmp);
            median_sorted(&col)
        })
        .collect();
    ParamVector::new(out)
}

/// `ν ← ν + (1/n) Σ (x_i − ν)·min(1, τ/‖x_i − ν‖)`, `iters` times.
/// A point at distance zero contributes nothing.
pub fn centered_clip(
    vs: &[ParamVector],
    v0: &ParamVector,
    tau: f64,
    iters: usize,
) -> Result<ParamVector> {
    let dim = check(vs)?;
    if v0.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: v0.dim(),
        });
    }
    if !(tau >= 0.0) || iters == 0 {
        return Err(Error::param("centered clip needs tau >= 0 and iters >= 1"));
    }
    let n = vs.len() as f64;
    let mut nu = v0.as_slice().to_vec();
    for _ in 0..iters {
        let mut step = vec![0.0; dim];
        for v in vs {
            let dist = v
                .iter()
                .zip(&nu)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if dist == 0.0 {
                continue;
            }
            let w = (tau / dist).min(1.0);
            for ((s, x), m) in step.iter_mut().zip(v.iter()).zip(&nu) {
                *s += (x - m) * w;
            }
        }
        for (m, s) in nu.iter_mut().zip(&step) {
            *m += s / n;
        }
    }
    ParamVector::new(nu)
}

/// `β_t = (1 − ζ_t)·g + ζ_t·β_{t−1}`.
pub fn worker_momentum(
    grad: &ParamVector,
    prev_beta: &ParamVector,
    zeta_t: f64,
) -> Result<ParamVector> {
    if !(0.0..=1.0).contains(&zeta_t) {
        return Err(Error::param(format!(
            "zeta_t must lie in [0, 1], got {zeta_t}"
        )));
    }
    if grad.dim() != prev_beta.dim() {
        return Err(Error::DimensionMismatch {
            expected: grad.dim(),
            actual: prev_beta.dim(),
        });
    }
    match zeta_t {
        0.0 => Ok(grad.clone()),
        1.0 => Ok(prev_beta.clone()),
        z => grad.scale(1.0 - z)?.axpy(z, prev_beta),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Rng;
    use proptest::prelude::*;

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::new(v.to_vec()).unwrap()
    }

    fn ones(xs: &[f64]) -> Vec<ParamVector> {
        xs.iter().map(|&x| pv(&[x])).collect()
    }

    fn random_set(n: usize, dim: usize, seed: u64) -> Vec<ParamVector> {
        let mut rng = Rng::new(seed);
        (0..n)
            .map(|_| ParamVector::random_uniform(dim, -3.0, 3.0, &mut rng).unwrap())
            .collect()
    }

    #[test]
    fn plus_minus_one_instance() {
        let vs = ones(&[1.0, -1.0, 1.0, -1.0, 1.0]);
        let k = krum(&vs, 0.0).unwrap().get(0);
        assert!(k == 1.0 || k == -1.0);
        assert_eq!(coord_median(&vs).unwrap().get(0), 1.0);
        assert!((vec_mean(&vs).unwrap().get(0) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn identical_inputs_are_a_fixed_point() {
        let v = pv(&[0.5, -2.0, 3.0]);
        let vs = vec![v.clone(); 7];
        let specs = [
            AggregatorSpec::Mean,
            AggregatorSpec::Krum { delta: 0.2 },
            AggregatorSpec::GeometricMedian {
                max_iters: 100,
                tol: 1e-9,
            },
            AggregatorSpec::Bulyan {
                inner: default_bulyan_inner(),
                d: 1,
            },
            AggregatorSpec::TrimmedMean { zeta: 0.2 },
            AggregatorSpec::CoordMedian,
            AggregatorSpec::CenteredClip { tau: 1.0, iters: 3 },
        ];
        for s in &specs {
            let out = aggregate(s, &vs).unwrap();
            assert!(out.max_abs_diff(&v).unwrap() < 1e-8, "{}", s.name());
        }
    }

    // Scores every candidate from the full distance matrix.
    fn krum_oracle(vs: &[ParamVector], f: usize) -> usize {
        let n = vs.len();
        let m = n - f - 2;
        let mut best = (f64::INFINITY, 0);
        for i in 0..n {
            let mut row: Vec<f64> = Vec::new();
            for j in 0..n {
                if i != j {
                    let d = vs[i].distance(&vs[j]).unwrap();
                    row.push(d * d);
                }
            }
            row.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let s: f64 = row[..m].iter().sum();
            if s < best.0 {
                best = (s, i);
            }
        }
        best.1
    }

    #[test]
    fn krum_picks_cluster_member() {
        let mut vs = random_set(6, 3, 1)
            .into_iter()
            .map(|v| v.scale(0.1).unwrap())
            .collect::<Vec<_>>();
        vs.push(pv(&[50.0, 50.0, 50.0]));
        let out = krum(&vs, 1.0 / 7.0).unwrap();
        let idx = vs.iter().position(|v| *v == out).unwrap();
        assert!(idx < 6);
        assert_eq!(idx, krum_oracle(&vs, 1));
    }

    #[test]
    fn krum_matches_oracle_on_small_instances() {
        for seed in 0..50 {
            let n = 3 + (seed as usize % 7);
            let vs = random_set(n, 2, seed);
            for f in 0..=(n - 3) {
                let delta = (f as f64 + 0.5) / n as f64;
                if delta >= 0.5 {
                    continue;
                }
                assert_eq!(krum_index(&vs, f), krum_oracle(&vs, f), "seed {seed} f {f}");
                assert_eq!(krum(&vs, delta).unwrap(), vs[krum_oracle(&vs, f)]);
            }
        }
    }

    #[test]
    fn krum_rejects_too_few() {
        assert!(krum(&ones(&[1.0, 2.0]), 0.0).is_err());
        assert!(krum(&ones(&[1.0, 2.0, 3.0]), 0.4).is_err());
        assert!(krum(&ones(&[1.0, 2.0, 3.0, 4.0, 5.0]), 0.45).is_ok());
    }

    #[test]
    fn geometric_median_examples() {
        let sq = vec![
            pv(&[0.0, 0.0]),
            pv(&[2.0, 0.0]),
            pv(&[0.0, 2.0]),
            pv(&[2.0, 2.0]),
        ];
        let c = geometric_median(&sq, 1000, 1e-10).unwrap();
        assert!(c.max_abs_diff(&pv(&[1.0, 1.0])).unwrap() < 1e-8);
        let line = ones(&[0.0, 1.0, 10.0]);
        let m = geometric_median(&line, 10_000, 1e-10).unwrap().get(0);
        // Grid scan of Σ|ν − x_i|.
        let cost = |nu: f64| line.iter().map(|x| (nu - x.get(0)).abs()).sum::<f64>();
        let grid_best = (0..=10_000)
            .map(|i| i as f64 * 1e-3)
            .min_by(|a, b| cost(*a).total_cmp(&cost(*b)))
            .unwrap();
        assert!((m - grid_best).abs() < 1e-3, "{m} vs {grid_best}");
        assert!((m - 1.0).abs() < 1e-6);
        let p = pv(&[3.0, 4.0]);
        assert_eq!(geometric_median(&[p.clone()], 10, 1e-9).unwrap(), p);
    }

    // Straight transcription of the selection-then-trim definition.
    fn bulyan_oracle(vs: &[ParamVector], d: usize) -> ParamVector {
        let n = vs.len();
        let gamma = n - 2 * d;
        let zeta = gamma - 2 * d;
        let mut pool: Vec<ParamVector> = vs.to_vec();
        let mut sel = Vec::new();
        for _ in 0..gamma {
            let f = d.min(pool.len().saturating_sub(3));
            let m = pool.len().saturating_sub(f + 2).max(1);
            let scores: Vec<f64> = (0..pool.len())
                .map(|i| {
                    let mut ds: Vec<f64> = (0..pool.len())
                        .filter(|&j| j != i)
                        .map(|j| pool[i].distance(&pool[j]).unwrap().powi(2))
                        .collect();
                    ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    ds.iter().take(m).sum()
                })
                .collect();
            let mut best = 0;
            for i in 1..scores.len() {
                if scores[i] < scores[best] {
                    best = i;
                }
            }
            sel.push(pool.remove(best));
        }
        let dim = vs[0].dim();
        ParamVector::new(
            (0..dim)
                .map(|c| {
                    let mut col: Vec<f64> = sel.iter().map(|v| v.get(c)).collect();
                    col.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    let med = if col.len() % 2 == 1 {
                        col[col.len() / 2]
                    } else {
                        (col[col.len() / 2 - 1] + col[col.len() / 2]) / 2.0
                    };
                    col.sort_by(|a, b| (a - med).abs().partial_cmp(&(b - med).abs()).unwrap());
                    col[..zeta].iter().sum::<f64>() / zeta as f64
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn bulyan_with_d_zero_is_mean() {
        let vs = random_set(5, 3, 3);
        let b = bulyan(&vs, &AggregatorSpec::Krum { delta: 0.0 }, 0).unwrap();
        assert!(b.max_abs_diff(&vec_mean(&vs).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn bulyan_excludes_outlier_and_matches_oracle() {
        let mut vs = random_set(6, 4, 4);
        vs.push(pv(&[1e3, -1e3, 1e3, -1e3]));
        let inner = AggregatorSpec::Krum { delta: 1.0 / 7.0 };
        let b = bulyan(&vs, &inner, 1).unwrap();
        assert!(b.norm_inf() <= 3.0);
        assert!(b.max_abs_diff(&bulyan_oracle(&vs, 1)).unwrap() < 1e-12);
        for seed in 0..30 {
            let n = 7 + (seed as usize % 3);
            let vs = random_set(n, 3, 100 + seed);
            let inner = AggregatorSpec::Krum {
                delta: 1.0 / n as f64 + 1e-9,
            };
            let got = bulyan(&vs, &inner, 1).unwrap();
            assert!(
                got.max_abs_diff(&bulyan_oracle(&vs, 1)).unwrap() < 1e-12,
                "seed {seed}"
            );
        }
        assert!(bulyan(&random_set(6, 2, 0), &inner, 1).is_err());
        let nested = AggregatorSpec::Bulyan {
            inner: default_bulyan_inner(),
            d: 0,
        };
        assert!(bulyan(&vs, &nested, 0).is_err());
    }

    #[test]
    fn trimmed_mean_examples() {
        let vs = ones(&[1.0, 2.0, 3.0, 100.0]);
        assert_eq!(trimmed_mean(&vs, 0.25).unwrap().get(0), 2.5);
        assert_eq!(trimmed_mean(&vs, 0.0).unwrap(), vec_mean(&vs).unwrap());
        assert!(trimmed_mean(&ones(&[1.0]), 0.49).is_ok());
        for seed in 0..20 {
            let vs = random_set(11, 3, seed);
            let got = trimmed_mean(&vs, 0.2).unwrap();
            for c in 0..3 {
                let mut col: Vec<f64> = vs.iter().map(|v| v.get(c)).collect();
                col.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let oracle = col[2..9].iter().sum::<f64>() / 7.0;
                assert!((got.get(c) - oracle).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn coord_median_examples() {
        let vs = vec![pv(&[1.0, 5.0]), pv(&[2.0, 4.0]), pv(&[3.0, 3.0])];
        assert_eq!(coord_median(&vs).unwrap().as_slice(), &[2.0, 4.0]);
        assert_eq!(
            coord_median(&ones(&[1.0, 4.0, 2.0, 3.0])).unwrap().get(0),
            2.5
        );
        assert_eq!(
            coord_median(&ones(&[-1.0, 1.0, -1.0])).unwrap().get(0),
            -1.0
        );
    }

    #[test]
    fn centered_clip_examples() {
        let vs = ones(&[0.0, 10.0]);
        let v0 = pv(&[0.0]);
        assert_eq!(centered_clip(&vs, &v0, 1.0, 1).unwrap().get(0), 0.5);
        assert_eq!(centered_clip(&vs, &v0, 0.0, 5).unwrap(), v0);
        let vs = random_set(9, 4, 8);
        let out = centered_clip(&vs, &pv(&[0.0; 4]), 1e6, 1).unwrap();
        assert!(out.max_abs_diff(&vec_mean(&vs).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn momentum_examples() {
        let g = pv(&[1.0, -2.0]);
        let b = pv(&[5.0, 5.0]);
        assert_eq!(worker_momentum(&g, &b, 0.0).unwrap(), g);
        assert_eq!(worker_momentum(&g, &b, 1.0).unwrap(), b);
        let mut beta = pv(&[0.0, 0.0]);
        for _ in 0..200 {
            beta = worker_momentum(&g, &beta, 0.9).unwrap();
        }
        assert!(beta.max_abs_diff(&g).unwrap() < 1e-6);
    }

    #[test]
    fn spec_validation() {
        assert!(AggregatorSpec::TrimmedMean { zeta: 0.5 }
            .validate()
            .is_err());
        assert!(AggregatorSpec::CenteredClip {
            tau: -1.0,
            iters: 1
        }
        .validate()
        .is_err());
        let json = r#"{"rule":"bulyan","d":1}"#;
        let s: AggregatorSpec = serde_json::from_str(json).unwrap();
        assert_eq!(
            s,
            AggregatorSpec::Bulyan {
                inner: default_bulyan_inner(),
                d: 1
            }
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn permutation_invariance(seed in 0u64..1000, rot in 0usize..9) {
            let vs = random_set(9, 3, seed);
            let mut perm = vs.clone();
            perm.rotate_left(rot);
            perm.swap(0, 8);
            for s in [
                AggregatorSpec::Mean,
                AggregatorSpec::TrimmedMean { zeta: 0.2 },
                AggregatorSpec::CoordMedian,
                AggregatorSpec::GeometricMedian { max_iters: 2000, tol: 1e-12 },
            ] {
                let a = aggregate(&s, &vs).unwrap();
                let b = aggregate(&s, &perm).unwrap();
                prop_assert!(a.max_abs_diff(&b).unwrap() < 1e-9, "{}", s.name());
            }
            // Scores are a permutation-invariant multiset; distinct scores fix the output.
            let mut sa = krum_scores(&vs, 5);
            let mut sb = krum_scores(&perm, 5);
            sa.sort_by(f64::total_cmp);
            sb.sort_by(f64::total_cmp);
            for (x, y) in sa.iter().zip(&sb) {
                prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
            }
            prop_assert_eq!(krum(&vs, 0.2).unwrap(), krum(&perm, 0.2).unwrap());
        }

        #[test]
        fn breakdown_of_mean_only(seed in 0u64..1000) {
            let mut rng = Rng::new(seed);
            let honest: Vec<ParamVector> = (0..9)
                .map(|_| {
                    let v = ParamVector::random_uniform(3, -1.0, 1.0, &mut rng).unwrap();
                    let n = v.norm_l2().max(1e-9);
                    v.scale(1.0 / n).unwrap()
                })
                .collect();
            let mut vs = honest.clone();
            vs.push(pv(&[1e6, 1e6, 1e6]));
            let lo: Vec<f64> = (0..3).map(|c| honest.iter().map(|v| v.get(c)).fold(f64::INFINITY, f64::min)).collect();
            let hi: Vec<f64> = (0..3).map(|c| honest.iter().map(|v| v.get(c)).fold(f64::NEG_INFINITY, f64::max)).collect();
            let mean = vec_mean(&vs).unwrap();
            prop_assert!(mean.distance(&vec_mean(&honest).unwrap()).unwrap() > 1e4);
            for s in [
                AggregatorSpec::Krum { delta: 0.1 },
                AggregatorSpec::TrimmedMean { zeta: 0.1 },
                AggregatorSpec::CoordMedian,
                AggregatorSpec::GeometricMedian { max_iters: 1000, tol: 1e-9 },
            ] {
                let out = aggregate(&s, &vs).unwrap();
                for c in 0..3 {
                    prop_assert!(out.get(c) >= lo[c] - 1e-6 && out.get(c) <= hi[c] + 1e-6, "{}", s.name());
                }
            }
        }
    }
}

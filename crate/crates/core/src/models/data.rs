//! Bundled synthetic datasets: XOR, 8×8 glyph classification, 2-D Gaussian
//! mixtures and Markov token corpora.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Batch;
use crate::numeric::{ParamVector, Rng};

pub const GLYPH_SIDE: usize = 8;
pub const GLYPH_PIXELS: usize = GLYPH_SIDE * GLYPH_SIDE;
pub const GLYPH_CLASSES: usize = 10;

const GLYPH_SEED: u64 = 0x0067_6c79_7068;

/// The four XOR points labelled 0/1.
pub fn xor() -> Batch {
    let inputs = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]
        .iter()
        .map(|p| ParamVector::from_vec(p.to_vec()))
        .collect();
    Batch::classes(inputs, vec![0, 1, 1, 0]).expect("static batch")
}

/// Ten fixed binary 8×8 prototypes, one per class. Every pair differs in at
/// least 20 pixels.
pub fn glyph_prototypes() -> Vec<ParamVector> {
    let mut rng = Rng::new(GLYPH_SEED);
    let mut protos: Vec<Vec<f64>> = Vec::with_capacity(GLYPH_CLASSES);
    while protos.len() < GLYPH_CLASSES {
        let cand: Vec<f64> = (0..GLYPH_PIXELS)
            .map(|_| (rng.next_u64() >> 63) as f64)
            .collect();
        let far = protos
            .iter()
            .all(|p| p.iter().zip(&cand).filter(|(a, b)| a != b).count() >= 20);
        if far {
            protos.push(cand);
        }
    }
    protos.into_iter().map(ParamVector::from_vec).collect()
}

/// One noisy sample of `class`: prototype plus `N(0, noise²)` per pixel,
/// clamped to `[0, 1]`.
pub fn glyph_sample(
    protos: &[ParamVector],
    class: usize,
    noise: f64,
    rng: &mut Rng,
) -> ParamVector {
    ParamVector::from_vec(
        protos[class]
            .iter()
            .map(|&v| (v + noise * rng.standard_normal()).clamp(0.0, 1.0))
            .collect(),
    )
}

/// `per_class` samples of every class, classes interleaved.
pub fn glyph_dataset(per_class: usize, noise: f64, rng: &mut Rng) -> Result<Batch> {
    if per_class == 0 {
        return Err(Error::param("per_class must be >= 1"));
    }
    let protos = glyph_prototypes();
    let mut inputs = Vec::with_capacity(per_class * GLYPH_CLASSES);
    let mut labels = Vec::with_capacity(per_class * GLYPH_CLASSES);
    for _ in 0..per_class {
        for c in 0..GLYPH_CLASSES {
            inputs.push(glyph_sample(&protos, c, noise, rng));
            labels.push(c);
        }
    }
    Batch::classes(inputs, labels)
}

/// Renders a 64-pixel vector as a binary PGM (P5) image, values clamped to `[0, 1]`.
pub fn glyph_to_pgm(v: &ParamVector) -> Result<Vec<u8>> {
    if v.dim() != GLYPH_PIXELS {
        return Err(Error::DimensionMismatch {
            expected: GLYPH_PIXELS,
            actual: v.dim(),
        });
    }
    let mut out = format!("P5\n{GLYPH_SIDE} {GLYPH_SIDE}\n255\n").into_bytes();
    out.extend(v.iter().map(|&x| (x.clamp(0.0, 1.0) * 255.0).round() as u8));
    Ok(out)
}

/// Isotropic 2-D Gaussian mixture with equal weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    pub means: Vec<[f64; 2]>,
    pub std: f64,
}

impl GaussianMixture {
    /// `k` modes evenly spaced on a circle.
    pub fn ring(k: usize, radius: f64, std: f64) -> Self {
        let means = (0..k)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / k as f64;
                [radius * t.cos(), radius * t.sin()]
            })
            .collect();
        GaussianMixture { means, std }
    }

    /// As [`GaussianMixture::ring`], centred at `center`.
    pub fn ring_at(center: [f64; 2], k: usize, radius: f64, std: f64) -> Self {
        let mut g = Self::ring(k, radius, std);
        for m in &mut g.means {
            m[0] += center[0];
            m[1] += center[1];
        }
        g
    }

    pub fn sample(&self, n: usize, rng: &mut Rng) -> Vec<ParamVector> {
        (0..n)
            .map(|_| {
                let m = self.means[rng.below(self.means.len() as u64) as usize];
                ParamVector::from_vec(vec![
                    m[0] + self.std * rng.standard_normal(),
                    m[1] + self.std * rng.standard_normal(),
                ])
            })
            .collect()
    }

    /// Euclidean distance from `p` to the closest mode centre.
    pub fn nearest_mean_distance(&self, p: &ParamVector) -> f64 {
        let (x, y) = (p.get(0), p.get(1));
        self.means
            .iter()
            .map(|m| ((x - m[0]).powi(2) + (y - m[1]).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min)
    }

    /// Mean of [`GaussianMixture::nearest_mean_distance`] over `points`.
    pub fn mode_distance(&self, points: &[ParamVector]) -> f64 {
        points
            .iter()
            .map(|p| self.nearest_mean_distance(p))
            .sum::<f64>()
            / points.len() as f64
    }
}

/// A first-order Markov source over `v` symbols used to generate token corpora.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovSource {
    pub v: usize,
    /// Row-major `v × v` transition probabilities.
    pub transitions: Vec<f64>,
}

impl MarkovSource {
    /// Each symbol favours one successor with probability `peak`, spreading the
    /// remainder over the others in proportion to random weights.
    pub fn random(v: usize, peak: f64, rng: &mut Rng) -> Result<Self> {
        if v < 2 {
            return Err(Error::param("alphabet needs at least two symbols"));
        }
        if !(0.0..=1.0).contains(&peak) {
            return Err(Error::param("peak must lie in [0, 1]"));
        }
        let mut t = vec![0.0; v * v];
        for r in 0..v {
            let fav = rng.below(v as u64) as usize;
            let w: Vec<f64> = (0..v)
                .map(|c| if c == fav { 0.0 } else { 0.2 + rng.next_f64() })
                .collect();
            let s: f64 = w.iter().sum();
            for c in 0..v {
                t[r * v + c] = if c == fav {
                    peak
                } else {
                    (1.0 - peak) * w[c] / s
                };
            }
        }
        Ok(MarkovSource { v, transitions: t })
    }

    pub fn sequence(&self, len: usize, rng: &mut Rng) -> Vec<usize> {
        let mut out = Vec::with_capacity(len);
        let mut cur = rng.below(self.v as u64) as usize;
        for i in 0..len {
            if i > 0 {
                let u = rng.next_f64();
                let row = &self.transitions[cur * self.v..(cur + 1) * self.v];
                let mut acc = 0.0;
                let mut next = self.v - 1;
                for (c, &p) in row.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        next = c;
                        break;
                    }
                }
                cur = next;
            }
            out.push(cur);
        }
        out
    }

    pub fn corpus(&self, n_seq: usize, len: usize, rng: &mut Rng) -> Vec<Vec<usize>> {
        (0..n_seq).map(|_| self.sequence(len, rng)).collect()
    }
}

/// The repeating two-letter corpus `abab…` over `{0, 1}`.
pub fn alternating_corpus(len: usize) -> Vec<usize> {
    (0..len).map(|i| i % 2).collect()
}

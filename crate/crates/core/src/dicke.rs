//! Dicke-basis decomposition of the N-spin product state (|0⟩ + |1⟩)^⊗N/2^{N/2}.
//!
//! The squared weight of the k-excitation Dicke state is the Binomial(N, ½)
//! mass C(N, k)/2^N. It is evaluated in log space with Loader's saddle-point
//! form (Stirling-error table plus a deviance term), which keeps every term
//! accurate to a few ulps where log-gamma differences lose digits.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// ln(n!) − [(n + ½)ln n − n + ln√(2π)] for integer n ≤ 15.
#[allow(clippy::excessive_precision)]
const STIRLING_ERROR: [f64; 16] = [
    0.0,
    0.081_061_466_795_327_258_219_670_2,
    0.041_340_695_955_409_294_093_822_1,
    0.027_677_925_684_998_339_148_789_29,
    0.020_790_672_103_765_093_111_522_77,
    0.016_644_691_189_821_192_163_194_87,
    0.013_876_128_823_070_747_998_745_73,
    0.011_896_709_945_891_770_095_055_72,
    0.010_411_265_261_972_096_497_478_567,
    0.009_255_462_182_712_732_917_728_637,
    0.008_330_563_433_362_871_256_469_318,
    0.007_573_675_487_951_840_794_972_024,
    0.006_942_840_107_209_529_865_664_152,
    0.006_408_994_188_004_207_068_439_631,
    0.005_951_370_112_758_847_735_624_416,
    0.005_554_733_551_962_801_371_038_690,
];

fn stirling_error(n: u64) -> f64 {
    if n <= 15 {
        return STIRLING_ERROR[n as usize];
    }
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    let x = n as f64;
    let nn = x * x;
    if n > 500 {
        (S0 - S1 / nn) / x
    } else if n > 80 {
        (S0 - (S1 - S2 / nn) / nn) / x
    } else if n > 35 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / x
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / x
    }
}

/// Deviance term x·ln(x/m) + m − x, by series when x ≈ m.
fn deviance(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let v = (x - m) / (x + m);
        let v2 = v * v;
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        for j in 1..1000 {
            ej *= v2;
            let next = s + ej / (2 * j + 1) as f64;
            if next == s {
                return next;
            }
            s = next;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

/// deviance(k, n/2) + deviance(n − k, n/2) = n·Σ_j v^{2j}/(2j(2j − 1)) with
/// v = 1 − 2k/n. The series has positive terms only, so away from the centre
/// it avoids the cancellation between the two separate deviances.
fn deviance_pair(nf: f64, kf: f64, half: f64) -> f64 {
    let v = (nf - 2.0 * kf) / nf;
    let v2 = v * v;
    if v2 >= 0.5 {
        return deviance(kf, half) + deviance(nf - kf, half);
    }
    let mut s = 0.0;
    let mut p = 1.0;
    for j in 1..200 {
        p *= v2;
        let jf = j as f64;
        let term = p / (2.0 * jf * (2.0 * jf - 1.0));
        let next = s + term;
        if next == s {
            break;
        }
        s = next;
    }
    nf * s
}

/// ln[C(n, k)/2^n].
pub fn log_binomial_half(n: u64, k: u64) -> f64 {
    assert!(k <= n, "k = {k} exceeds n = {n}");
    // Evaluated on the lower half so that k and n − k agree bitwise.
    let k = k.min(n - k);
    if k == 0 {
        return -(n as f64) * LN_2;
    }
    let (nf, kf) = (n as f64, k as f64);
    let half = 0.5 * nf;
    let lc = stirling_error(n) - stirling_error(k) - stirling_error(n - k) - deviance_pair(nf, kf, half);
    let lf = (2.0 * PI).ln() + kf.ln() + (-kf / nf).ln_1p();
    lc - 0.5 * lf
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DickeWeights {
    pub n_spins: u64,
    /// ln w_k for k = 0..=N, with w_k = √(C(N, k)/2^N).
    pub log_weights: Vec<f64>,
}

pub const MAX_SPINS: u64 = 10_000_000;

pub fn dicke_weights(n_spins: u64) -> Result<DickeWeights> {
    ensure(n_spins >= 1, || "spin number must be at least 1".into())?;
    ensure(n_spins <= MAX_SPINS, || format!("spin number {n_spins} exceeds {MAX_SPINS}"))?;
    let log_weights = (0..=n_spins).map(|k| 0.5 * log_binomial_half(n_spins, k)).collect();
    Ok(DickeWeights { n_spins, log_weights })
}

impl DickeWeights {
    pub fn weight(&self, k: usize) -> f64 {
        self.log_weights[k].exp()
    }

    /// Probability of k excitations.
    pub fn probability(&self, k: usize) -> f64 {
        (2.0 * self.log_weights[k]).exp()
    }

    /// ln Σ_k w_k², by log-sum-exp; zero for a normalised state.
    pub fn log_norm(&self) -> f64 {
        let max = self.log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = self.log_weights.iter().map(|l| (2.0 * (l - max)).exp()).sum();
        2.0 * max + sum.ln()
    }

    /// Index of the largest weight (the lower one when N is odd).
    pub fn argmax(&self) -> usize {
        (0..self.log_weights.len()).fold(0, |b, k| if self.log_weights[k] > self.log_weights[b] { k } else { b })
    }
}

/// Weight of each GHZ component (k = 0 or k = N), 2^{−N}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhzWeight {
    pub log2_probability: f64,
}

impl GhzWeight {
    /// May underflow to zero for large N.
    pub fn probability(&self) -> f64 {
        self.log2_probability.exp2()
    }
}

pub fn ghz_component_weight(n_spins: u64) -> Result<GhzWeight> {
    ensure(n_spins >= 1, || "spin number must be at least 1".into())?;
    Ok(GhzWeight { log2_probability: -(n_spins as f64) })
}

/// Mechanical orientation k·θ correlated with the k-excitation Dicke state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientationDistribution {
    pub n_spins: u64,
    pub theta_per_spin: f64,
}

pub fn orientation_distribution(n_spins: u64, theta_per_spin: f64) -> Result<OrientationDistribution> {
    ensure(n_spins >= 1, || "spin number must be at least 1".into())?;
    ensure(theta_per_spin.is_finite(), || "angle per spin must be finite".into())?;
    Ok(OrientationDistribution { n_spins, theta_per_spin })
}

impl OrientationDistribution {
    pub fn mean(&self) -> f64 {
        0.5 * self.n_spins as f64 * self.theta_per_spin
    }

    pub fn std_dev(&self) -> f64 {
        0.5 * (self.n_spins as f64).sqrt() * self.theta_per_spin.abs()
    }

    /// σ/mean = 1/√N.
    pub fn relative_width(&self) -> f64 {
        1.0 / (self.n_spins as f64).sqrt()
    }

    /// (k·θ, probability) for every k.
    pub fn masses(&self) -> Result<Vec<(f64, f64)>> {
        let w = dicke_weights(self.n_spins)?;
        Ok((0..w.log_weights.len()).map(|k| (k as f64 * self.theta_per_spin, w.probability(k))).collect())
    }
}

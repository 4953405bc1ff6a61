use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::deterministic::rk4_step;
use super::{default_step, step_plan, LibrationState, SpinTorqueModel, TrapParams};
use crate::constants::K_B;
use crate::error::{ensure, Error, Result};

/// Trajectories per reduction block. Fixed so that the summation order does
/// not depend on how many worker threads run the blocks.
const BLOCK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitialCondition {
    Fixed(LibrationState),
    /// Boltzmann draw about the given state: θ ~ N(θ₀, k_BT/Iω²), θ̇ ~ N(θ̇₀, k_BT/I).
    Thermal(LibrationState),
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LangevinOptions {
    /// Defaults to min(1/ω, 1/γ_g, T1, 1/f_ac)/100.
    pub max_step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LangevinResult {
    pub times: Vec<f64>,
    pub mean_theta: Vec<f64>,
    pub var_theta: Vec<f64>,
    pub mean_theta_dot: Vec<f64>,
    pub var_theta_dot: Vec<f64>,
    pub n_traj: usize,
}

impl LangevinResult {
    /// Standard error of the mean angle at each time.
    pub fn standard_error(&self) -> Vec<f64> {
        self.var_theta.iter().map(|v| (v / self.n_traj as f64).sqrt()).collect()
    }
}

/// Per-time running moments (count, mean, M2) for θ and θ̇.
#[derive(Clone)]
struct Moments {
    n: f64,
    mean: Vec<[f64; 2]>,
    m2: Vec<[f64; 2]>,
}

impl Moments {
    fn new(len: usize) -> Self {
        Moments { n: 0.0, mean: vec![[0.0; 2]; len], m2: vec![[0.0; 2]; len] }
    }

    fn push(&mut self, samples: &[[f64; 2]]) {
        self.n += 1.0;
        for ((m, q), x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(samples) {
            for c in 0..2 {
                let d = x[c] - m[c];
                m[c] += d / self.n;
                q[c] += d * (x[c] - m[c]);
            }
        }
    }

    fn merge(mut self, other: &Moments) -> Self {
        let n = self.n + other.n;
        for k in 0..self.mean.len() {
            for c in 0..2 {
                let d = other.mean[k][c] - self.mean[k][c];
                self.m2[k][c] += other.m2[k][c] + d * d * self.n * other.n / n;
                self.mean[k][c] += d * other.n / n;
            }
        }
        self.n = n;
        self
    }
}

/// Seeded Langevin ensemble. Each step advances the drift with the same RK4
/// step as [`super::deterministic_evolve`] and then adds the Euler–Maruyama
/// velocity kick √(2γ_g k_B T/I·dt)·ξ, so T = 0 reproduces the noiseless
/// solution exactly. Trajectory k draws from ChaCha8 stream k of `seed`.
#[allow(clippy::too_many_arguments)]
pub fn langevin_ensemble(
    initial: &InitialCondition,
    trap: &TrapParams,
    torque: &SpinTorqueModel,
    t_grid: &[f64],
    temperature: f64,
    n_traj: usize,
    seed: u64,
    options: &LangevinOptions,
) -> Result<LangevinResult> {
    trap.validate()?;
    torque.validate()?;
    ensure(n_traj >= 1, || "need at least one trajectory".into())?;
    ensure(temperature >= 0.0 && temperature.is_finite(), || {
        format!("temperature must be non-negative, got {temperature}")
    })?;
    let (sig_theta, sig_v) = trap.thermal_sigmas(temperature);
    if let InitialCondition::Thermal(_) = initial {
        ensure(temperature == 0.0 || trap.omega > 0.0, || {
            "a thermal initial angle needs a confining trap (ω > 0)".into()
        })?;
    }
    let span = t_grid.last().copied().unwrap_or(0.0);
    let h_max = options.max_step.unwrap_or_else(|| default_step(trap, torque, span));
    let plan = step_plan(t_grid, torque.onset_time, h_max)?;
    let kick_rate = 2.0 * trap.gamma_g * K_B * temperature / trap.inertia;

    let run = |k: usize| -> Result<Vec<[f64; 2]>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
        let mut s = match initial {
            InitialCondition::Fixed(s) => [s.theta, s.theta_dot],
            InitialCondition::Thermal(c) if temperature > 0.0 => {
                [c.theta + sig_theta * normal(), c.theta_dot + sig_v * normal()]
            }
            InitialCondition::Thermal(c) => [c.theta, c.theta_dot],
        };
        let mut out = Vec::with_capacity(t_grid.len());
        for &(t0, h, n, sample) in &plan {
            let kick = (kick_rate * h).sqrt();
            for j in 0..n {
                s = rk4_step(trap, torque, s, t0 + j as f64 * h, h);
                if kick > 0.0 {
                    s[1] += kick * normal();
                }
            }
            if !(s[0].is_finite() && s[1].is_finite()) {
                return Err(Error::IntegrationFailure(format!("trajectory {k} diverged near t = {t0:e} s")));
            }
            if sample.is_some() {
                out.push(s);
            }
        }
        Ok(out)
    };

    let n_blocks = n_traj.div_ceil(BLOCK);
    let blocks: Vec<Result<Moments>> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut m = Moments::new(t_grid.len());
            for k in b * BLOCK..((b + 1) * BLOCK).min(n_traj) {
                m.push(&run(k)?);
            }
            Ok(m)
        })
        .collect();
    let mut total = Moments::new(t_grid.len());
    for b in blocks {
        total = total.merge(&b?);
    }

    let denom = if n_traj > 1 { (n_traj - 1) as f64 } else { 1.0 };
    Ok(LangevinResult {
        times: t_grid.to_vec(),
        mean_theta: total.mean.iter().map(|m| m[0]).collect(),
        var_theta: total.m2.iter().map(|q| q[0] / denom).collect(),
        mean_theta_dot: total.mean.iter().map(|m| m[1]).collect(),
        var_theta_dot: total.m2.iter().map(|q| q[1] / denom).collect(),
        n_traj,
    })
}

//! Librational motion of the trapped particle about one axis.
//!
//! The angle θ obeys
//!
//! ```text
//! θ̈ = −γ_g θ̇ − ω²(1 + d·cos(2π f_ac t + ϕ)) θ + τ(θ, t)/I + Brownian torque/I
//! τ(θ, t) = N τ_s e^{−(t − t_on)/T1} sin(φ − θ)    for t ≥ t_on
//! ```
//!
//! and is integrated three ways: a fixed-step RK4 solution of the noiseless
//! equation, a seeded Langevin ensemble, and a finite-volume Fokker-Planck
//! solver for the phase-space density.

mod deterministic;
mod fokker_planck;
mod langevin;

pub use deterministic::{deterministic_evolve, deterministic_evolve_with, EvolveOptions};
pub use fokker_planck::{first_moment, fokker_planck_evolve, FokkerPlanckOptions, FokkerPlanckRun, PhaseSpacePdf, UniformGrid};
pub use langevin::{langevin_ensemble, InitialCondition, LangevinOptions, LangevinResult};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::K_B;
use crate::error::{ensure, Error, Result};
use crate::spin_core::{per_spin_torque_scale, SpinConstants};

/// Parametric modulation of the trap stiffness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StiffnessDrive {
    pub f_ac: f64,
    pub depth: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapParams {
    /// kg·m².
    pub inertia: f64,
    /// Librational trap frequency, rad/s.
    pub omega: f64,
    /// Gas damping rate, 1/s.
    pub gamma_g: f64,
    pub drive: Option<StiffnessDrive>,
}

impl TrapParams {
    pub fn new(inertia: f64, omega: f64, gamma_g: f64) -> Result<Self> {
        let t = TrapParams { inertia, omega, gamma_g, drive: None };
        t.validate()?;
        Ok(t)
    }

    pub fn with_drive(mut self, drive: StiffnessDrive) -> Result<Self> {
        self.drive = Some(drive);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.inertia > 0.0 && self.inertia.is_finite(), || {
            format!("inertia must be positive, got {}", self.inertia)
        })?;
        ensure(self.omega >= 0.0 && self.omega.is_finite(), || {
            format!("trap frequency must be non-negative, got {}", self.omega)
        })?;
        ensure(self.gamma_g >= 0.0 && self.gamma_g.is_finite(), || {
            format!("damping rate must be non-negative, got {}", self.gamma_g)
        })?;
        if let Some(d) = &self.drive {
            ensure(d.depth.abs() < 1.0, || format!("drive depth must satisfy |depth| < 1, got {}", d.depth))?;
            ensure(d.f_ac >= 0.0 && d.f_ac.is_finite() && d.phase.is_finite(), || {
                "drive frequency and phase must be finite, frequency non-negative".into()
            })?;
        }
        Ok(())
    }

    /// ω²(t), including the optional stiffness modulation.
    pub fn stiffness(&self, t: f64) -> f64 {
        let w2 = self.omega * self.omega;
        match &self.drive {
            Some(d) => w2 * (1.0 + d.depth * (2.0 * PI * d.f_ac * t + d.phase).cos()),
            None => w2,
        }
    }

    /// Thermal standard deviations (σ_θ, σ_θ̇) at temperature T.
    pub fn thermal_sigmas(&self, temperature: f64) -> (f64, f64) {
        let kt = K_B * temperature;
        let sv = (kt / self.inertia).sqrt();
        let st = if self.omega > 0.0 { sv / self.omega } else { f64::INFINITY };
        (st, sv)
    }

    /// Velocity diffusion coefficient γ_g k_B T / I, rad²/s³.
    pub fn diffusion(&self, temperature: f64) -> f64 {
        self.gamma_g * K_B * temperature / self.inertia
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinTorqueModel {
    pub n_spins: f64,
    /// Tesla.
    pub field_magnitude: f64,
    /// Equilibrium angle between field and NV axis, rad.
    pub phi: f64,
    pub t1: f64,
    pub onset_time: f64,
    pub constants: SpinConstants,
}

impl SpinTorqueModel {
    pub fn new(n_spins: f64, field_magnitude: f64, phi: f64, t1: f64, onset_time: f64) -> Result<Self> {
        let m = SpinTorqueModel {
            n_spins,
            field_magnitude,
            phi,
            t1,
            onset_time,
            constants: SpinConstants::default(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn none() -> Self {
        SpinTorqueModel {
            n_spins: 0.0,
            field_magnitude: 0.0,
            phi: 0.0,
            t1: f64::INFINITY,
            onset_time: 0.0,
            constants: SpinConstants::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.n_spins >= 0.0 && self.n_spins.is_finite(), || {
            format!("spin number must be non-negative, got {}", self.n_spins)
        })?;
        ensure(self.t1 > 0.0, || format!("t1 must be positive, got {}", self.t1))?;
        ensure(self.phi.is_finite() && self.onset_time.is_finite(), || {
            "phi and onset time must be finite".into()
        })?;
        per_spin_torque_scale(self.field_magnitude, &self.constants).map(|_| ())
    }

    /// N·τ_s, the torque amplitude at onset, N·m.
    pub fn amplitude(&self) -> f64 {
        self.n_spins * per_spin_torque_scale(self.field_magnitude, &self.constants).unwrap_or(0.0)
    }

    pub fn is_active(&self) -> bool {
        self.amplitude() != 0.0
    }

    pub fn torque(&self, theta: f64, t: f64) -> f64 {
        if t < self.onset_time || self.n_spins == 0.0 {
            return 0.0;
        }
        self.amplitude() * (-(t - self.onset_time) / self.t1).exp() * (self.phi - theta).sin()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LibrationState {
    pub theta: f64,
    pub theta_dot: f64,
}

impl LibrationState {
    pub fn new(theta: f64, theta_dot: f64) -> Result<Self> {
        ensure(theta.is_finite() && theta_dot.is_finite(), || "libration state must be finite".into())?;
        Ok(LibrationState { theta, theta_dot })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibrationTrajectory {
    pub times: Vec<f64>,
    pub theta: Vec<f64>,
    pub theta_dot: Vec<f64>,
}

/// Angular acceleration of the noiseless equation.
pub(crate) fn acceleration(trap: &TrapParams, torque: &SpinTorqueModel, theta: f64, theta_dot: f64, t: f64) -> f64 {
    -trap.gamma_g * theta_dot - trap.stiffness(t) * theta + torque.torque(theta, t) / trap.inertia
}

/// Default fixed step: min(1/ω, 1/γ_g, T1, 1/f_ac)/100 over the finite scales.
pub(crate) fn default_step(trap: &TrapParams, torque: &SpinTorqueModel, span: f64) -> f64 {
    let mut scales = Vec::new();
    if trap.omega > 0.0 {
        scales.push(1.0 / trap.omega);
    }
    if trap.gamma_g > 0.0 {
        scales.push(1.0 / trap.gamma_g);
    }
    if torque.is_active() && torque.t1.is_finite() {
        scales.push(torque.t1);
    }
    if let Some(d) = &trap.drive {
        if d.f_ac > 0.0 && d.depth != 0.0 {
            scales.push(1.0 / d.f_ac);
        }
    }
    let s = scales.into_iter().fold(f64::INFINITY, f64::min);
    if s.is_finite() {
        s / 100.0
    } else {
        (span / 1000.0).max(f64::MIN_POSITIVE)
    }
}

/// (start, step, substeps, output index reached at the end).
pub(crate) type Segment = (f64, f64, usize, Option<usize>);

/// Integration segments between consecutive output times, split at the torque onset.
pub(crate) fn step_plan(t_grid: &[f64], onset: f64, max_step: f64) -> Result<Vec<Segment>> {
    ensure(!t_grid.is_empty(), || "time grid is empty".into())?;
    ensure(t_grid[0] >= 0.0, || "time grid must start at or after t = 0".into())?;
    ensure(t_grid.windows(2).all(|w| w[1] > w[0]) && t_grid.iter().all(|t| t.is_finite()), || {
        "time grid must be finite and strictly increasing".into()
    })?;
    ensure(max_step > 0.0 && max_step.is_finite(), || format!("step must be positive, got {max_step}"))?;
    let mut marks: Vec<(f64, Option<usize>)> = t_grid.iter().enumerate().map(|(i, &t)| (t, Some(i))).collect();
    if onset > 0.0 && onset < *t_grid.last().expect("non-empty") && !t_grid.contains(&onset) {
        marks.push((onset, None));
        marks.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let mut plan = Vec::with_capacity(marks.len());
    let mut t = 0.0;
    for (end, out) in marks {
        let span = end - t;
        if span <= 0.0 {
            plan.push((t, 0.0, 0, out));
            continue;
        }
        let n = (span / max_step).ceil().max(1.0) as usize;
        plan.push((t, span / n as f64, n, out));
        t = end;
    }
    Ok(plan)
}

/// Particle shape for the moment of inertia.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Sphere,
    /// Mean of a sphere of radius r and a cube of side 2r, both with the sphere's mass.
    CubeAverage,
    /// Spheroid with semi-axes (aspect·r, r, r), rotating about a long axis.
    Ellipsoid { aspect: f64 },
}

/// Moment of inertia of a uniform particle, kg·m².
pub fn moment_of_inertia(radius: f64, density: f64, shape: Shape) -> Result<f64> {
    ensure(radius > 0.0 && radius.is_finite(), || format!("radius must be positive, got {radius}"))?;
    ensure(density > 0.0 && density.is_finite(), || format!("density must be positive, got {density}"))?;
    let sphere_mass = 4.0 / 3.0 * PI * radius.powi(3) * density;
    let r2 = radius * radius;
    Ok(match shape {
        Shape::Sphere => 0.4 * sphere_mass * r2,
        Shape::CubeAverage => 0.5 * (sphere_mass * r2 / 6.0 + 0.4 * sphere_mass * r2),
        Shape::Ellipsoid { aspect } => {
            ensure(aspect > 0.0 && aspect.is_finite(), || format!("aspect must be positive, got {aspect}"))?;
            let a = aspect * radius;
            let mass = sphere_mass * aspect;
            mass * (a * a + r2) / 5.0
        }
    })
}

/// Least-squares fit of θ = a·t²; returns τ = 2aI.
pub fn kinematic_torque_fit(times: &[f64], angles: &[f64], inertia: f64) -> Result<f64> {
    ensure(times.len() == angles.len(), || "times and angles differ in length".into())?;
    ensure(times.len() >= 3, || format!("need at least 3 points, got {}", times.len()))?;
    ensure(inertia > 0.0, || format!("inertia must be positive, got {inertia}"))?;
    let (lo, hi) = times.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &t| (l.min(t), h.max(t)));
    if hi <= lo {
        return Err(Error::IllConditioned("all sample times are equal".into()));
    }
    let s4: f64 = times.iter().map(|t| t.powi(4)).sum();
    let s2y: f64 = times.iter().zip(angles).map(|(t, y)| t * t * y).sum();
    if s4 <= 0.0 || !s4.is_finite() {
        return Err(Error::IllConditioned("degenerate design (Σt⁴ = 0)".into()));
    }
    Ok(2.0 * s2y / s4 * inertia)
}

/// Number of flipped spins implied by a torque.
pub fn spins_from_torque(torque: f64, field_magnitude: f64) -> Result<f64> {
    ensure(field_magnitude > 0.0, || format!("field must be positive, got {field_magnitude}"))?;
    Ok(torque / per_spin_torque_scale(field_magnitude, &SpinConstants::default())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::DIAMOND_DENSITY;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn inertia_examples() {
        let i = moment_of_inertia(5e-6, DIAMOND_DENSITY, Shape::CubeAverage).unwrap();
        let m = 4.0 / 3.0 * PI * 125e-18 * 3515.0;
        let oracle = 0.5 * (1.0 / 6.0 + 2.0 / 5.0) * m * 25e-12;
        assert!((i - oracle).abs() <= 1e-12 * oracle);
        assert!((i - 1.30e-23).abs() <= 0.03 * 1.30e-23);
        assert!(i > 1e-24 && i < 1e-22);
        // I ∝ r⁵, so it vanishes as the radius shrinks.
        let small = moment_of_inertia(1e-9, DIAMOND_DENSITY, Shape::Sphere).unwrap();
        let large = moment_of_inertia(1e-6, DIAMOND_DENSITY, Shape::Sphere).unwrap();
        assert!((small / large - 1e-15).abs() <= 1e-24);
        let sphere = moment_of_inertia(5e-6, DIAMOND_DENSITY, Shape::Sphere).unwrap();
        let ell = moment_of_inertia(5e-6, DIAMOND_DENSITY, Shape::Ellipsoid { aspect: 1.0 }).unwrap();
        assert!((sphere - ell).abs() <= 1e-15 * sphere);
        assert!(moment_of_inertia(0.0, DIAMOND_DENSITY, Shape::Sphere).is_err());
        assert!(moment_of_inertia(1e-6, -1.0, Shape::Sphere).is_err());
    }

    #[test]
    fn kinematic_fit_examples() {
        let ts: Vec<f64> = (1..=20).map(|k| k as f64 * 5e-6).collect();
        let th: Vec<f64> = ts.iter().map(|t| 2.18e6 * t * t).collect();
        let tau = kinematic_torque_fit(&ts, &th, 1.30e-23).unwrap();
        assert!((tau - 5.67e-17).abs() <= 0.005 * 5.67e-17);
        let zero = kinematic_torque_fit(&ts, &[0.0; 20], 1.30e-23).unwrap();
        assert_eq!(zero, 0.0);
        assert!(matches!(kinematic_torque_fit(&[1.0; 4], &[0.0; 4], 1.0), Err(Error::IllConditioned(_))));
        assert!(kinematic_torque_fit(&ts[..2], &th[..2], 1.0).is_err());
    }

    #[test]
    fn kinematic_fit_with_noise() {
        let ts: Vec<f64> = (1..=50).map(|k| k as f64 * 2e-6).collect();
        let max = 2.18e6 * ts[49] * ts[49];
        let noise = Normal::new(0.0, 0.01 * max).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let th: Vec<f64> = ts.iter().map(|t| 2.18e6 * t * t + noise.sample(&mut rng)).collect();
        let tau = kinematic_torque_fit(&ts, &th, 1.30e-23).unwrap();
        let truth = 2.0 * 2.18e6 * 1.30e-23;
        assert!((tau - truth).abs() <= 0.05 * truth);
    }

    #[test]
    fn spins_from_torque_examples() {
        let n = spins_from_torque(5.65e-17, 0.02715).unwrap();
        assert!((n - 1.1e8).abs() <= 0.1 * 1.1e8);
        assert_eq!(spins_from_torque(0.0, 0.02715).unwrap(), 0.0);
        let scale = per_spin_torque_scale(0.02715, &SpinConstants::default()).unwrap();
        assert_eq!(spins_from_torque(1024.0 * scale, 0.02715).unwrap(), 1024.0);
        assert!(spins_from_torque(1.0, 0.0).is_err());
    }

    #[test]
    fn torque_model_switches_on_and_decays() {
        let m = SpinTorqueModel::new(1e8, 0.02715, PI / 4.0, 7e-3, 1e-3).unwrap();
        assert_eq!(m.torque(0.0, 0.5e-3), 0.0);
        let at_onset = m.torque(0.0, 1e-3);
        assert!((at_onset - m.amplitude() * (PI / 4.0).sin()).abs() <= 1e-12 * at_onset);
        let later = m.torque(0.0, 8e-3);
        assert!((later / at_onset - (-1.0f64).exp()).abs() <= 1e-12);
        assert!(SpinTorqueModel::new(-1.0, 0.0, 0.0, 1.0, 0.0).is_err());
        assert!(SpinTorqueModel::new(1.0, 0.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn step_plan_splits_at_onset() {
        let plan = step_plan(&[0.0, 1.0, 2.0], 1.5, 0.3).unwrap();
        let ends: Vec<f64> = plan.iter().map(|(t, h, n, _)| t + h * *n as f64).collect();
        assert_eq!(plan.len(), 4);
        assert!((ends[2] - 1.5).abs() < 1e-15);
        assert_eq!(plan[2].3, None);
        assert!(step_plan(&[0.0, 0.0], 0.0, 0.1).is_err());
    }

    #[test]
    fn trap_validation() {
        assert!(TrapParams::new(1e-23, 2300.0, 6280.0).is_ok());
        assert!(TrapParams::new(0.0, 2300.0, 6280.0).is_err());
        let t = TrapParams::new(1e-23, 2300.0, 0.0).unwrap();
        assert!(t.with_drive(StiffnessDrive { f_ac: 2895.0, depth: 1.0, phase: 0.0 }).is_err());
    }
}

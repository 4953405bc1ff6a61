//! Ensemble spin-state evolution under optical pumping, microwave pulses and
//! phenomenological relaxation.
//!
//! Microwave pulses act in the rotating frame of the addressed transition on
//! the two-level subspace {|0⟩, |target⟩}; the spectator level is frozen.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::spin_core::{BareState, DensityMatrix, TransitionPair};
use crate::vector3::Mat3c;

/// Phenomenological relaxation times. Infinite values switch a channel off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxationParams {
    pub t1: f64,
    pub t2: f64,
    pub t2_star: f64,
    /// Exponent p of the echo envelope exp(−(2τ/T2)^p).
    pub stretch: f64,
}

impl RelaxationParams {
    pub fn new(t1: f64, t2: f64, t2_star: f64) -> Result<Self> {
        Self::with_stretch(t1, t2, t2_star, 1.0)
    }

    pub fn with_stretch(t1: f64, t2: f64, t2_star: f64, stretch: f64) -> Result<Self> {
        let r = RelaxationParams { t1, t2, t2_star, stretch };
        r.validate()?;
        Ok(r)
    }

    /// No relaxation at all.
    pub fn none() -> Self {
        RelaxationParams {
            t1: f64::INFINITY,
            t2: f64::INFINITY,
            t2_star: f64::INFINITY,
            stretch: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let RelaxationParams { t1, t2, t2_star, stretch } = *self;
        ensure(t1 > 0.0 && t2 > 0.0 && t2_star > 0.0, || {
            format!("relaxation times must be positive (t1={t1}, t2={t2}, t2*={t2_star})")
        })?;
        ensure(t2_star <= t2, || format!("t2* ({t2_star}) exceeds t2 ({t2})"))?;
        ensure(t2 <= 2.0 * t1, || format!("t2 ({t2}) exceeds 2·t1 ({})", 2.0 * t1))?;
        ensure(stretch > 0.0 && stretch.is_finite(), || {
            format!("stretch exponent must be positive, got {stretch}")
        })
    }

    pub fn is_none(&self) -> bool {
        self.t1.is_infinite() && self.t2.is_infinite()
    }

    /// Width of the Gaussian static-detuning distribution whose free-induction
    /// decay is exp(−(t/T2*)²).
    pub fn detuning_sigma(&self) -> f64 {
        1.0 / (std::f64::consts::SQRT_2 * PI * self.t2_star)
    }
}

/// Which ground-state transition a microwave pulse drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transition {
    Minus,
    Plus,
}

impl Transition {
    pub fn state(self) -> BareState {
        match self {
            Transition::Minus => BareState::Minus,
            Transition::Plus => BareState::Plus,
        }
    }

    pub fn frequency(self, pair: &TransitionPair) -> f64 {
        match self {
            Transition::Minus => pair.f_minus,
            Transition::Plus => pair.f_plus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Microwave {
    /// Drive frequency, Hz.
    pub frequency: f64,
    /// Resonant Rabi frequency Ω, Hz.
    pub rabi_frequency: f64,
    pub duration: f64,
    pub phase: f64,
    pub target: Transition,
}

impl Microwave {
    pub fn resonant(transition_frequency: f64, rabi_frequency: f64, duration: f64, target: Transition) -> Self {
        Microwave {
            frequency: transition_frequency,
            rabi_frequency,
            duration,
            phase: 0.0,
            target,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.duration >= 0.0 && self.duration.is_finite(), || {
            format!("pulse duration must be non-negative, got {}", self.duration)
        })?;
        ensure(self.rabi_frequency >= 0.0 && self.rabi_frequency.is_finite(), || {
            format!("Rabi frequency must be non-negative, got {}", self.rabi_frequency)
        })?;
        ensure(self.frequency.is_finite() && self.phase.is_finite(), || {
            "pulse frequency and phase must be finite".into()
        })
    }

    /// The pulse undoing this one: drive phase shifted by π and detuning
    /// mirrored about the transition.
    pub fn inverse(&self, transition_frequency: f64) -> Self {
        Microwave {
            frequency: 2.0 * transition_frequency - self.frequency,
            phase: self.phase + PI,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PulseEvent {
    GreenPump { duration: f64, efficiency: f64 },
    Microwave(Microwave),
    Wait { duration: f64 },
}

impl PulseEvent {
    pub fn duration(&self) -> f64 {
        match self {
            PulseEvent::GreenPump { duration, .. } | PulseEvent::Wait { duration } => *duration,
            PulseEvent::Microwave(m) => m.duration,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            PulseEvent::GreenPump { duration, efficiency } => {
                ensure(*duration >= 0.0 && duration.is_finite(), || {
                    format!("pump duration must be non-negative, got {duration}")
                })?;
                ensure((0.0..=1.0).contains(efficiency), || {
                    format!("pump efficiency must lie in [0, 1], got {efficiency}")
                })
            }
            PulseEvent::Microwave(m) => m.validate(),
            PulseEvent::Wait { duration } => ensure(*duration >= 0.0 && duration.is_finite(), || {
                format!("wait duration must be non-negative, got {duration}")
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    events: Vec<PulseEvent>,
}

impl PulseSequence {
    pub fn new(events: Vec<PulseEvent>) -> Result<Self> {
        ensure(!events.is_empty(), || "pulse sequence is empty".into())?;
        for e in &events {
            e.validate()?;
        }
        Ok(PulseSequence { events })
    }

    pub fn events(&self) -> &[PulseEvent] {
        &self.events
    }

    pub fn total_duration(&self) -> f64 {
        self.events.iter().map(PulseEvent::duration).sum()
    }

    /// Runs the sequence. The pump acts at the end of its window; microwave
    /// pulses are interleaved with relaxation by symmetric splitting.
    pub fn run(&self, rho: &DensityMatrix, transitions: &TransitionPair, relax: &RelaxationParams) -> DensityMatrix {
        let mut rho = *rho;
        for event in &self.events {
            rho = match event {
                PulseEvent::GreenPump { duration, efficiency } => {
                    polarize(&free_evolve(&rho, *duration, relax), *efficiency)
                }
                PulseEvent::Microwave(m) => {
                    microwave_with_relaxation(&rho, m, m.target.frequency(transitions), relax)
                }
                PulseEvent::Wait { duration } => free_evolve(&rho, *duration, relax),
            }
            .renormalized();
        }
        rho
    }
}

/// efficiency·|0⟩⟨0| + (1 − efficiency)·diag(ρ).
pub fn polarize(rho: &DensityMatrix, efficiency: f64) -> DensityMatrix {
    let e = efficiency.clamp(0.0, 1.0);
    let mut m = Mat3c::zeros();
    for s in BareState::ALL {
        let i = s.index();
        m[(i, i)] = Complex64::new((1.0 - e) * rho.population(s), 0.0);
    }
    m[(1, 1)] += Complex64::new(e, 0.0);
    DensityMatrix::from_matrix_unchecked(m)
}

/// Rotating-frame propagator of a pulse on {|0⟩, |target⟩}, embedded in 3×3.
pub fn microwave_unitary(pulse: &Microwave, transition_frequency: f64) -> Mat3c {
    let omega = pulse.rabi_frequency;
    let delta = pulse.frequency - transition_frequency;
    let omega_gen = omega.hypot(delta);
    let mut u = Mat3c::identity();
    if omega_gen == 0.0 || pulse.duration == 0.0 {
        return u;
    }
    // U = cos(πΩ't)·1 − i·sin(πΩ't)·(n·σ) with n = (Ω cos φ, Ω sin φ, −Δ)/Ω'.
    let (nx, ny, nz) = (
        omega * pulse.phase.cos() / omega_gen,
        omega * pulse.phase.sin() / omega_gen,
        -delta / omega_gen,
    );
    let (s, co) = (PI * omega_gen * pulse.duration).sin_cos();
    let i = Complex64::i();
    let a = BareState::Zero.index();
    let b = pulse.target.state().index();
    u[(a, a)] = co - i * s * nz;
    u[(b, b)] = co + i * s * nz;
    u[(a, b)] = -i * s * Complex64::new(nx, -ny);
    u[(b, a)] = -i * s * Complex64::new(nx, ny);
    u
}

pub fn apply_microwave(rho: &DensityMatrix, pulse: &Microwave, transition_frequency: f64) -> DensityMatrix {
    let u = microwave_unitary(pulse, transition_frequency);
    DensityMatrix::from_matrix_unchecked(u * rho.matrix() * u.adjoint())
}

/// Relaxation in the rotating frame with no level shifts.
pub fn free_evolve(rho: &DensityMatrix, duration: f64, relax: &RelaxationParams) -> DensityMatrix {
    free_evolve_detuned(rho, duration, relax, [0.0; 3])
}

/// Relaxation plus free precession: level i acquires phase −2π·shift[i]·t,
/// so coherence ρ_ij rotates at shift[i] − shift[j] (Hz).
pub fn free_evolve_detuned(rho: &DensityMatrix, duration: f64, relax: &RelaxationParams, shift: [f64; 3]) -> DensityMatrix {
    if duration == 0.0 {
        return *rho;
    }
    let pop = (-duration / relax.t1).exp();
    let coh = (-duration / relax.t2).exp();
    let m = rho.matrix();
    let mut out = Mat3c::zeros();
    for i in 0..3 {
        for j in 0..3 {
            out[(i, j)] = if i == j {
                Complex64::new(1.0 / 3.0 + (m[(i, i)].re - 1.0 / 3.0) * pop, 0.0)
            } else {
                let phase = -2.0 * PI * (shift[i] - shift[j]) * duration;
                m[(i, j)] * Complex64::from_polar(coh, phase)
            };
        }
    }
    DensityMatrix::from_matrix_unchecked(out)
}

fn microwave_with_relaxation(rho: &DensityMatrix, pulse: &Microwave, f_t: f64, relax: &RelaxationParams) -> DensityMatrix {
    if relax.is_none() || pulse.duration == 0.0 {
        return apply_microwave(rho, pulse, f_t);
    }
    let rate = pulse.rabi_frequency.hypot(pulse.frequency - f_t).max(1.0 / relax.t2).max(1.0 / relax.t1);
    let steps = ((pulse.duration * rate * 50.0).ceil() as usize).clamp(1, 100_000);
    let dt = pulse.duration / steps as f64;
    let u = microwave_unitary(&Microwave { duration: dt, ..*pulse }, f_t);
    let mut r = *rho;
    for _ in 0..steps {
        r = free_evolve(&r, 0.5 * dt, relax);
        r = DensityMatrix::from_matrix_unchecked(u * r.matrix() * u.adjoint());
        r = free_evolve(&r, 0.5 * dt, relax);
    }
    r.renormalized()
}

/// Flipped (target) population after pump → resonant pulse of each duration,
/// starting from the thermal mixture.
pub fn rabi_trace(
    durations: &[f64],
    rabi_frequency: f64,
    relax: &RelaxationParams,
    pump_efficiency: f64,
    target: Transition,
) -> Result<Vec<f64>> {
    ensure(durations.windows(2).all(|w| w[0] <= w[1]), || "durations must be sorted ascending".into())?;
    ensure(durations.iter().all(|&t| t >= 0.0 && t.is_finite()), || {
        "durations must be non-negative".into()
    })?;
    ensure((0.0..=1.0).contains(&pump_efficiency), || {
        format!("pump efficiency must lie in [0, 1], got {pump_efficiency}")
    })?;
    ensure(rabi_frequency >= 0.0 && rabi_frequency.is_finite(), || {
        format!("Rabi frequency must be non-negative, got {rabi_frequency}")
    })?;
    relax.validate()?;
    let start = polarize(&DensityMatrix::thermal(), pump_efficiency);
    Ok(durations
        .iter()
        .map(|&t| {
            let pulse = Microwave::resonant(0.0, rabi_frequency, t, target);
            microwave_with_relaxation(&start, &pulse, 0.0, relax).population(target.state())
        })
        .collect())
}

/// Hahn-echo signal p₀ − p_target after π/2 – τ – π – τ – π/2 (hard pulses)
/// from a fully polarised state, averaged over Gaussian static detunings.
///
/// Homogeneous decay enters as the envelope exp(−(2τ/T2)^p) on the
/// coherences; T1 relaxes populations during both free periods.
pub fn echo_amplitude(tau: f64, relax: &RelaxationParams, detuning_sigma: f64, n_samples: usize, seed: u64) -> Result<f64> {
    ensure(tau >= 0.0 && tau.is_finite(), || format!("tau must be non-negative, got {tau}"))?;
    ensure(detuning_sigma >= 0.0 && detuning_sigma.is_finite(), || {
        format!("detuning sigma must be non-negative, got {detuning_sigma}")
    })?;
    ensure(n_samples > 0, || "echo needs at least one sample".into())?;
    relax.validate()?;

    let target = Transition::Minus;
    let hard = |rabi_area: f64, phase: f64| {
        // Unit Rabi frequency: duration equals the rotation in turns/2.
        microwave_unitary(
            &Microwave { frequency: 0.0, rabi_frequency: 1.0, duration: rabi_area, phase, target },
            0.0,
        )
    };
    let half = hard(0.25, 0.0);
    let pi = hard(0.5, 0.0);
    let envelope = (-(2.0 * tau / relax.t2).powf(relax.stretch)).exp();
    let population_only = RelaxationParams { t2: f64::INFINITY, ..*relax };

    let one_sample = |delta: f64| {
        let shift = [0.0, 0.0, delta];
        let apply = |u: &Mat3c, r: &DensityMatrix| DensityMatrix::from_matrix_unchecked(u * r.matrix() * u.adjoint());
        let mut r = DensityMatrix::pure(BareState::Zero);
        r = apply(&half, &r);
        r = free_evolve_detuned(&r, tau, &population_only, shift);
        r = apply(&pi, &r);
        r = free_evolve_detuned(&r, tau, &population_only, shift);
        let mut m = *r.matrix();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    m[(i, j)] *= envelope;
                }
            }
        }
        r = apply(&half, &DensityMatrix::from_matrix_unchecked(m));
        r.population(BareState::Zero) - r.population(target.state())
    };

    if detuning_sigma == 0.0 {
        return Ok(one_sample(0.0));
    }
    let normal = Normal::new(0.0, detuning_sigma).expect("validated sigma");
    let values: Vec<f64> = (0..n_samples as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            one_sample(normal.sample(&mut rng))
        })
        .collect();
    Ok(values.iter().sum::<f64>() / n_samples as f64)
}

/// |0⟩ population left after pumping with `pump_efficiency` and waiting `delay`.
pub fn t1_population_at_pulse(delay: f64, relax: &RelaxationParams, pump_efficiency: f64) -> Result<f64> {
    ensure(delay >= 0.0, || format!("delay must be non-negative, got {delay}"))?;
    ensure((0.0..=1.0).contains(&pump_efficiency), || {
        format!("pump efficiency must lie in [0, 1], got {pump_efficiency}")
    })?;
    let rho = free_evolve(&polarize(&DensityMatrix::thermal(), pump_efficiency), delay, relax);
    Ok(rho.population(BareState::Zero))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector3::{eigensolve_hermitian3, hermitian_defect, max_abs};
    use rand::Rng;

    fn assert_valid(rho: &DensityMatrix) {
        let m = rho.matrix();
        assert!(hermitian_defect(m) <= 1e-12);
        assert!((m.trace().re - 1.0).abs() <= 1e-12);
        assert!(eigensolve_hermitian3(m).unwrap().values[0] >= -1e-10);
    }

    fn random_state(rng: &mut ChaCha8Rng) -> DensityMatrix {
        let mut a = Mat3c::zeros();
        for v in a.iter_mut() {
            *v = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        let m = a * a.adjoint();
        let m = m / m.trace();
        DensityMatrix::from_matrix_unchecked((m + m.adjoint()) * Complex64::new(0.5, 0.0))
    }

    #[test]
    fn polarize_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_state(&mut rng);
        let full = polarize(&rho, 1.0);
        assert!(max_abs(&(full.matrix() - DensityMatrix::pure(BareState::Zero).matrix())) < 1e-15);
        let none = polarize(&rho, 0.0);
        for s in BareState::ALL {
            assert!((none.population(s) - rho.population(s)).abs() < 1e-15);
        }
        assert_eq!(none.matrix()[(0, 1)], Complex64::new(0.0, 0.0));
        let p = polarize(&DensityMatrix::thermal(), 0.8).population(BareState::Zero);
        assert!((p - (0.8 + 0.2 / 3.0)).abs() <= 1e-12);
    }

    #[test]
    fn resonant_pulses() {
        let omega = 5e6;
        let pi = Microwave::resonant(2.87e9, omega, 1.0 / (2.0 * omega), Transition::Minus);
        let out = apply_microwave(&DensityMatrix::pure(BareState::Zero), &pi, 2.87e9);
        assert!((out.population(BareState::Minus) - 1.0).abs() <= 1e-9);
        for t in [1e-8, 3.3e-8, 7.7e-8, 2.1e-7] {
            let p = Microwave::resonant(2.87e9, omega, t, Transition::Plus);
            let out = apply_microwave(&DensityMatrix::pure(BareState::Zero), &p, 2.87e9);
            let expect = (PI * omega * t).sin().powi(2);
            assert!((out.population(BareState::Plus) - expect).abs() <= 1e-9);
            assert!((out.matrix().trace().re - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn detuned_pulse_matches_generalized_rabi() {
        let omega: f64 = 2e6;
        let f_t = 2.5e9;
        let delta = omega;
        let closed = |t: f64| {
            let og = (omega * omega + delta * delta).sqrt();
            omega * omega / (og * og) * (PI * og * t).sin().powi(2)
        };
        // π-time of the generalised rotation: the maximum transfer, 1/2.
        let t_gen = 1.0 / (2.0 * omega.hypot(delta));
        let mw = Microwave { frequency: f_t + delta, rabi_frequency: omega, duration: t_gen, phase: 0.3, target: Transition::Minus };
        let p = apply_microwave(&DensityMatrix::pure(BareState::Zero), &mw, f_t).population(BareState::Minus);
        assert!((p - 0.5).abs() <= 1e-9);
        assert!((p - closed(t_gen)).abs() <= 1e-9);
        // Resonant π-time with the same detuning.
        let t_res = 1.0 / (2.0 * omega);
        let mw = Microwave { duration: t_res, ..mw };
        let p = apply_microwave(&DensityMatrix::pure(BareState::Zero), &mw, f_t).population(BareState::Minus);
        assert!((p - closed(t_res)).abs() <= 1e-9);
        let direct = 0.5 * (PI * std::f64::consts::SQRT_2 / 2.0).sin().powi(2);
        assert!((p - direct).abs() <= 1e-9);
    }

    #[test]
    fn inverse_pulse_restores_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let rho = random_state(&mut rng);
            let f_t = 2.9e9;
            let mw = Microwave {
                frequency: f_t + rng.random_range(-5e6..5e6),
                rabi_frequency: rng.random_range(1e5..1e7),
                duration: rng.random_range(0.0..1e-6),
                phase: rng.random_range(0.0..6.0),
                target: if rng.random_bool(0.5) { Transition::Minus } else { Transition::Plus },
            };
            let back = apply_microwave(&apply_microwave(&rho, &mw, f_t), &mw.inverse(f_t), f_t);
            assert!(max_abs(&(back.matrix() - rho.matrix())) <= 1e-9);
        }
    }

    #[test]
    fn free_evolution_examples() {
        let relax = RelaxationParams::new(1e-3, 1e-6, 1e-7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rho = random_state(&mut rng);
        assert_eq!(free_evolve(&rho, 0.0, &relax), rho);
        let out = free_evolve(&DensityMatrix::pure(BareState::Minus), relax.t1, &relax);
        let expect = 1.0 / 3.0 + 2.0 / 3.0 * (-1.0f64).exp();
        assert!((out.population(BareState::Minus) - expect).abs() <= 1e-12);
        let late = free_evolve(&rho, 1e3, &relax);
        assert!(max_abs(&(late.matrix() - DensityMatrix::thermal().matrix())) <= 1e-9);
    }

    #[test]
    fn random_sequences_keep_states_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pair = TransitionPair { f_minus: 2.49e9, f_plus: 3.25e9 };
        for _ in 0..200 {
            let t1 = rng.random_range(1e-6..1e-3);
            let t2 = rng.random_range(0.05..2.0) * t1;
            let relax = RelaxationParams::new(t1, t2, t2 * rng.random_range(0.01..1.0)).unwrap();
            let mut events = Vec::new();
            for _ in 0..rng.random_range(1..8) {
                events.push(match rng.random_range(0..3) {
                    0 => PulseEvent::GreenPump { duration: rng.random_range(0.0..1e-6), efficiency: rng.random_range(0.0..1.0) },
                    1 => PulseEvent::Microwave(Microwave {
                        frequency: pair.f_minus + rng.random_range(-2e6..2e6),
                        rabi_frequency: rng.random_range(0.0..1e7),
                        duration: rng.random_range(0.0..3e-7),
                        phase: rng.random_range(0.0..6.3),
                        target: if rng.random_bool(0.5) { Transition::Minus } else { Transition::Plus },
                    }),
                    _ => PulseEvent::Wait { duration: rng.random_range(0.0..2e-6) },
                });
            }
            let seq = PulseSequence::new(events).unwrap();
            let out = seq.run(&random_state(&mut rng), &pair, &relax);
            assert_valid(&out);
        }
    }

    #[test]
    fn rabi_trace_examples() {
        let omega = 4e6;
        let ts: Vec<f64> = (0..60).map(|k| k as f64 * 7e-9).collect();
        let ideal = rabi_trace(&ts, omega, &RelaxationParams::none(), 1.0, Transition::Minus).unwrap();
        for (t, p) in ts.iter().zip(&ideal) {
            assert!((p - (PI * omega * t).sin().powi(2)).abs() <= 1e-9);
        }
        let half = rabi_trace(&ts, omega, &RelaxationParams::none(), 0.5, Transition::Minus).unwrap();
        for (h, p) in half.iter().zip(&ideal) {
            assert!((h - (1.0 / 6.0 + 0.5 * p)).abs() <= 1e-9);
        }
        let zero = rabi_trace(&ts, 0.0, &RelaxationParams::none(), 1.0, Transition::Plus).unwrap();
        assert!(zero.iter().all(|&p| p == 0.0));
        let shifted: Vec<f64> = ts.iter().map(|t| t + 1.0 / omega).collect();
        let again = rabi_trace(&shifted, omega, &RelaxationParams::none(), 1.0, Transition::Minus).unwrap();
        for (a, b) in again.iter().zip(&ideal) {
            assert!((a - b).abs() <= 1e-9);
        }
        assert!(rabi_trace(&[2.0, 1.0], omega, &RelaxationParams::none(), 1.0, Transition::Minus).is_err());
    }

    #[test]
    fn damped_rabi_relaxes_toward_mixture() {
        let relax = RelaxationParams::new(1e-6, 2e-7, 1e-7).unwrap();
        let ts = [0.0, 5e-6, 2e-5];
        let p = rabi_trace(&ts, 4e6, &relax, 1.0, Transition::Minus).unwrap();
        assert_eq!(p[0], 0.0);
        assert!((p[2] - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn echo_examples() {
        let relax = RelaxationParams::new(1e-3, 1.22e-6, 1e-7).unwrap();
        let a0 = echo_amplitude(0.0, &relax, 2e6, 64, 1).unwrap();
        assert!((a0 - 1.0).abs() <= 1e-9);
        let no_t2 = RelaxationParams::new(f64::INFINITY, f64::INFINITY, 1e-7).unwrap();
        let refocused = echo_amplitude(3e-6, &no_t2, 5e7, 512, 2).unwrap();
        assert!((refocused - 1.0).abs() <= 1e-9);
        let a = echo_amplitude(0.61e-6, &relax, 2e6, 256, 3).unwrap();
        // T1 contributes a factor e^{−1.22 μs / 1 ms}.
        assert!((a / a0 - (-1.0f64).exp()).abs() <= 2e-3 * (-1.0f64).exp());
    }

    #[test]
    fn echo_is_deterministic_and_monotone() {
        let relax = RelaxationParams::new(1e-3, 1.22e-6, 1e-7).unwrap();
        let a = echo_amplitude(4e-7, &relax, 3e6, 300, 11).unwrap();
        let b = echo_amplitude(4e-7, &relax, 3e6, 300, 11).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        let mut last = f64::INFINITY;
        for k in 0..40 {
            let v = echo_amplitude(k as f64 * 1e-7, &relax, 0.0, 1, 0).unwrap();
            assert!(v <= last);
            last = v;
        }
    }

    #[test]
    fn t1_population_examples() {
        let relax = RelaxationParams::new(6e-4, 1e-6, 1e-7).unwrap();
        assert_eq!(t1_population_at_pulse(0.0, &relax, 1.0).unwrap(), 1.0);
        let p = t1_population_at_pulse(relax.t1, &relax, 1.0).unwrap();
        assert!((p - (1.0 / 3.0 + 2.0 / 3.0 * (-1.0f64).exp())).abs() <= 1e-12);
        let late = t1_population_at_pulse(1.0, &relax, 0.7).unwrap();
        assert!((late - 1.0 / 3.0).abs() <= 1e-9);
    }

    #[test]
    fn relaxation_validation() {
        assert!(RelaxationParams::new(1e-3, 1e-6, 1e-7).is_ok());
        assert!(RelaxationParams::new(1e-3, 1e-6, 2e-6).is_err());
        assert!(RelaxationParams::new(1e-6, 3e-6, 1e-7).is_err());
        assert!(RelaxationParams::new(0.0, 0.0, 0.0).is_err());
        assert!(RelaxationParams::with_stretch(1e-3, 1e-6, 1e-7, 0.0).is_err());
    }
}

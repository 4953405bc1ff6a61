//! Optical readout of the libration angle: Poisson photon-count traces, the
//! SMC contrast between two windows, and the T1 signal integral F(T).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::libration::{deterministic_evolve, LibrationState, LibrationTrajectory, SpinTorqueModel, TrapParams};
use crate::optimize::fit_exponential_decay;
use crate::pulse_engine::{Microwave, PulseEvent, PulseSequence, RelaxationParams, Transition};
use crate::spin_core::{BareState, DensityMatrix, TransitionPair};

/// Linear angle-to-count-rate model of the scattered light.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionParams {
    /// Count rate at the equilibrium angle before attenuation, counts/s.
    pub base_rate: f64,
    /// Rate change per radian of deflection, counts/s/rad.
    pub slope: f64,
    pub attenuation: f64,
    pub bin_width: f64,
    /// Deflections are clipped to ±linear_range before the linear map.
    pub linear_range: f64,
    /// Equilibrium angle θ₀, rad.
    pub theta0: f64,
}

impl DetectionParams {
    pub fn validate(&self) -> Result<()> {
        ensure(self.base_rate >= 0.0 && self.base_rate.is_finite(), || {
            format!("base rate must be non-negative, got {}", self.base_rate)
        })?;
        ensure(self.bin_width > 0.0 && self.bin_width.is_finite(), || {
            format!("bin width must be positive, got {}", self.bin_width)
        })?;
        ensure(self.attenuation >= 1.0, || format!("attenuation must be ≥ 1, got {}", self.attenuation))?;
        ensure(self.linear_range > 0.0, || format!("linear range must be positive, got {}", self.linear_range))?;
        ensure(self.slope.is_finite() && self.theta0.is_finite(), || "slope and θ₀ must be finite".into())
    }

    /// Detected count rate (after attenuation) at mean angle θ, counts/s.
    pub fn rate(&self, theta: f64) -> f64 {
        let dev = (theta - self.theta0).clamp(-self.linear_range, self.linear_range);
        (self.base_rate + self.slope * dev).max(0.0) / self.attenuation
    }
}

/// Counts per bin. Sampled traces hold integers; expectation-level traces
/// hold the Poisson means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonTrace {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<f64>,
}

impl PhotonTrace {
    pub fn new(bin_edges: Vec<f64>, counts: Vec<f64>) -> Result<Self> {
        ensure(bin_edges.len() == counts.len() + 1 && !counts.is_empty(), || {
            "a trace needs n + 1 edges for n ≥ 1 bins".into()
        })?;
        ensure(bin_edges.windows(2).all(|w| w[1] > w[0]), || "bin edges must be strictly increasing".into())?;
        ensure(counts.iter().all(|c| *c >= 0.0 && c.is_finite()), || "counts must be non-negative".into())?;
        Ok(PhotonTrace { bin_edges, counts })
    }

    pub fn centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Count rates per bin, counts/s.
    pub fn rates(&self) -> Vec<f64> {
        self.counts.iter().zip(self.widths()).map(|(c, w)| c / w).collect()
    }

    pub fn start(&self) -> f64 {
        self.bin_edges[0]
    }

    pub fn end(&self) -> f64 {
        *self.bin_edges.last().expect("validated non-empty")
    }

    /// Merges every `factor` consecutive bins (a trailing remainder is dropped).
    pub fn aggregate(&self, factor: usize) -> Result<Self> {
        ensure(factor >= 1, || "aggregation factor must be ≥ 1".into())?;
        let n = self.counts.len() / factor;
        ensure(n >= 1, || "aggregation factor exceeds the number of bins".into())?;
        let edges = (0..=n).map(|k| self.bin_edges[k * factor]).collect();
        let counts = (0..n).map(|k| self.counts[k * factor..(k + 1) * factor].iter().sum()).collect();
        PhotonTrace::new(edges, counts)
    }

    /// (total counts, total duration) of the bins whose centres lie in [a, b).
    fn window(&self, a: f64, b: f64) -> Result<(f64, f64)> {
        ensure(a < b, || format!("window ({a}, {b}) is empty"))?;
        ensure(a >= self.start() - 1e-15 && b <= self.end() + 1e-12, || {
            format!("window ({a}, {b}) lies outside the trace ({}, {})", self.start(), self.end())
        })?;
        let (mut n, mut dur) = (0.0, 0.0);
        for (k, c) in self.centers().iter().enumerate() {
            if *c >= a && *c < b {
                n += self.counts[k];
                dur += self.bin_edges[k + 1] - self.bin_edges[k];
            }
        }
        ensure(dur > 0.0, || format!("window ({a}, {b}) contains no bins"))?;
        Ok((n, dur))
    }

    /// Mean count rate in [a, b), counts/s.
    pub fn mean_rate(&self, a: f64, b: f64) -> Result<f64> {
        let (n, d) = self.window(a, b)?;
        Ok(n / d)
    }
}

/// Mean of the piecewise-linear interpolant of (t, y) over [a, b].
fn interval_mean(t: &[f64], y: &[f64], a: f64, b: f64) -> f64 {
    let value = |x: f64| {
        let k = t.partition_point(|&ti| ti <= x).clamp(1, t.len() - 1);
        let (t0, t1) = (t[k - 1], t[k]);
        y[k - 1] + (y[k] - y[k - 1]) * (x - t0) / (t1 - t0)
    };
    let mut knots = vec![a];
    knots.extend(t.iter().copied().filter(|&ti| ti > a && ti < b));
    knots.push(b);
    let area: f64 = knots.windows(2).map(|w| 0.5 * (value(w[0]) + value(w[1])) * (w[1] - w[0])).sum();
    area / (b - a)
}

/// Bins of width `detection.bin_width` covering the trajectory, with Poisson
/// means from the bin-averaged angle.
pub fn expected_trace(trajectory: &LibrationTrajectory, detection: &DetectionParams) -> Result<PhotonTrace> {
    detection.validate()?;
    let t = &trajectory.times;
    ensure(t.len() >= 2 && t.len() == trajectory.theta.len(), || "trajectory needs at least two samples".into())?;
    let span = t[t.len() - 1] - t[0];
    let n = (span / detection.bin_width * (1.0 + 1e-12)).floor() as usize;
    ensure(n >= 1, || "trajectory shorter than one bin".into())?;
    let edges: Vec<f64> = (0..=n).map(|k| t[0] + k as f64 * detection.bin_width).collect();
    let counts = edges
        .windows(2)
        .map(|w| detection.rate(interval_mean(t, &trajectory.theta, w[0], w[1].min(t[t.len() - 1]))) * (w[1] - w[0]))
        .collect();
    PhotonTrace::new(edges, counts)
}

/// Poisson draw of every bin of an expectation-level trace.
pub fn poisson_sample(expected: &PhotonTrace, seed: u64) -> PhotonTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = expected
        .counts
        .iter()
        .map(|&mu| if mu > 0.0 { Poisson::new(mu).expect("positive mean").sample(&mut rng) } else { 0.0 })
        .collect();
    PhotonTrace { bin_edges: expected.bin_edges.clone(), counts }
}

pub fn sample_trace(trajectory: &LibrationTrajectory, detection: &DetectionParams, seed: u64) -> Result<PhotonTrace> {
    Ok(poisson_sample(&expected_trace(trajectory, detection)?, seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contrast {
    pub value: f64,
    /// Poisson standard error.
    pub std_error: f64,
}

/// C = (S̄_late − S̄_early)/S̄_late from the mean rates in two disjoint windows.
pub fn smc_contrast(trace: &PhotonTrace, early: (f64, f64), late: (f64, f64)) -> Result<Contrast> {
    ensure(early.1 <= late.0 || late.1 <= early.0, || "contrast windows overlap".into())?;
    let (ne, de) = trace.window(early.0, early.1)?;
    let (nl, dl) = trace.window(late.0, late.1)?;
    if nl <= 0.0 {
        return Err(Error::InvalidInput("late window holds no counts".into()));
    }
    let ratio = (ne / de) / (nl / dl);
    let rel = if ne > 0.0 { (1.0 / ne + 1.0 / nl).sqrt() } else { (1.0 / nl).sqrt() };
    Ok(Contrast { value: 1.0 - ratio, std_error: ratio * rel })
}

/// How the rate baseline is obtained for F.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Baseline {
    /// Mean rate in this window (normally before the pump).
    Window(f64, f64),
    /// A known rate, counts/s.
    Fixed(f64),
}

/// Trapezoidal integral over [start, end] of the baseline-subtracted rate,
/// sampled at the bin centres. Units: counts.
pub fn t1_signal_integral(trace: &PhotonTrace, start: f64, end: f64, baseline: Baseline) -> Result<f64> {
    ensure(start < end, || format!("integration window ({start}, {end}) is empty"))?;
    ensure(start >= trace.start() && end <= trace.end() + 1e-12, || {
        format!("integration window ({start}, {end}) lies outside the trace")
    })?;
    let base = match baseline {
        Baseline::Window(a, b) => trace.mean_rate(a, b)?,
        Baseline::Fixed(r) => r,
    };
    let pts: Vec<(f64, f64)> = trace
        .centers()
        .into_iter()
        .zip(trace.rates())
        .filter(|(c, _)| *c >= start && *c <= end)
        .map(|(c, r)| (c, r - base))
        .collect();
    ensure(pts.len() >= 2, || "integration window holds fewer than two bins".into())?;
    Ok(pts.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0)).sum())
}

const PI_PULSE_TRANSITION: f64 = 2.49e9;
const PI_PULSE_RABI: f64 = 1e7;

/// Synthetic T1 experiment: green pump, variable delay T, π pulse on the 0 ↔ −1
/// transition, libration under the resulting spin torque, Poisson readout,
/// and F(T) integrated from the π pulse to `integral_end` after the pump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct T1Protocol {
    pub trap: TrapParams,
    /// Total number of NV spins addressed by the π pulse.
    pub n_spins: f64,
    pub field_magnitude: f64,
    pub phi: f64,
    pub relax: RelaxationParams,
    pub pump_efficiency: f64,
    pub detection: DetectionParams,
    /// End of the green pump, s (trace starts at 0).
    pub pump_end: f64,
    pub trace_end: f64,
    /// F upper limit, measured from the end of the pump.
    pub integral_end: f64,
    pub delays: Vec<f64>,
    pub repetitions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct T1Result {
    pub delays: Vec<f64>,
    /// Repetition-averaged F(T), counts.
    pub signal: Vec<f64>,
    /// Standard error of the averaged F(T).
    pub signal_error: Vec<f64>,
    /// Spin polarisation p₋₁ − p₊₁ right after the π pulse.
    pub polarization: Vec<f64>,
    pub fitted_amplitude: f64,
    pub fitted_t1: f64,
}

impl T1Protocol {
    pub fn validate(&self) -> Result<()> {
        self.trap.validate()?;
        self.relax.validate()?;
        self.detection.validate()?;
        ensure(!self.delays.is_empty(), || "no delays given".into())?;
        ensure(self.repetitions >= 1, || "need at least one repetition".into())?;
        ensure(self.pump_end > 0.0 && self.trace_end > self.pump_end, || "trace must extend past the pump".into())?;
        let last = self.delays.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        ensure(self.delays.iter().all(|d| *d >= 0.0), || "delays must be non-negative".into())?;
        ensure(last < self.integral_end && self.pump_end + self.integral_end <= self.trace_end, || {
            "every delay must precede the end of the integration window, which must fit in the trace".into()
        })
    }

    /// Spin polarisation p₋₁ − p₊₁ after pump → wait(T) → π pulse.
    pub fn polarization_after_pulse(&self, delay: f64) -> Result<f64> {
        let pair = TransitionPair { f_minus: PI_PULSE_TRANSITION, f_plus: 2.0 * 2.87e9 - PI_PULSE_TRANSITION };
        let seq = PulseSequence::new(vec![
            PulseEvent::GreenPump { duration: 0.0, efficiency: self.pump_efficiency },
            PulseEvent::Wait { duration: delay },
            PulseEvent::Microwave(Microwave::resonant(PI_PULSE_TRANSITION, PI_PULSE_RABI, 0.5 / PI_PULSE_RABI, Transition::Minus)),
        ])?;
        let rho = seq.run(&DensityMatrix::thermal(), &pair, &self.relax);
        Ok(rho.population(BareState::Minus) - rho.population(BareState::Plus))
    }

    /// Noise-free angle trajectory on the trace grid for one delay.
    pub fn trajectory(&self, delay: f64) -> Result<LibrationTrajectory> {
        let pol = self.polarization_after_pulse(delay)?;
        let torque = SpinTorqueModel::new(self.n_spins * pol.max(0.0), self.field_magnitude, self.phi, self.relax.t1, self.pump_end + delay)?;
        let n = (self.trace_end / self.detection.bin_width).round() as usize;
        let grid: Vec<f64> = (0..=n).map(|k| self.trace_end * k as f64 / n as f64).collect();
        deterministic_evolve(&LibrationState::default(), &self.trap, &torque, &grid)
    }

    fn signal_of(&self, trace: &PhotonTrace, delay: f64) -> Result<f64> {
        t1_signal_integral(trace, self.pump_end + delay, self.pump_end + self.integral_end, Baseline::Window(0.0, self.pump_end))
    }

    /// F(T) of the expectation-level trace.
    pub fn expected_signal(&self, delay: f64) -> Result<f64> {
        self.validate()?;
        self.signal_of(&expected_trace(&self.trajectory(delay)?, &self.detection)?, delay)
    }

    /// Runs every delay and repetition. Repetition r of delay k is seeded with
    /// stream k·repetitions + r of `seed`.
    pub fn run(&self, seed: u64) -> Result<T1Result> {
        self.validate()?;
        let per_delay: Vec<Result<(f64, f64, f64)>> = self
            .delays
            .par_iter()
            .enumerate()
            .map(|(k, &delay)| {
                let expected = expected_trace(&self.trajectory(delay)?, &self.detection)?;
                let mut values = Vec::with_capacity(self.repetitions);
                for r in 0..self.repetitions {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream((k * self.repetitions + r) as u64);
                    let trace = poisson_sample(&expected, rand::Rng::random(&mut rng));
                    values.push(self.signal_of(&trace, delay)?);
                }
                let n = values.len() as f64;
                let mean = values.iter().sum::<f64>() / n;
                let var = if values.len() > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
                Ok((mean, (var / n).sqrt(), self.polarization_after_pulse(delay)?))
            })
            .collect();
        let mut signal = Vec::new();
        let mut signal_error = Vec::new();
        let mut polarization = Vec::new();
        for r in per_delay {
            let (m, e, p) = r?;
            signal.push(m);
            signal_error.push(e);
            polarization.push(p);
        }
        let (fitted_amplitude, fitted_t1) = fit_exponential_decay(&self.delays, &signal)?;
        Ok(T1Result { delays: self.delays.clone(), signal, signal_error, polarization, fitted_amplitude, fitted_t1 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_detection(slope: f64) -> DetectionParams {
        DetectionParams { base_rate: 1e7 * 1e4, slope, attenuation: 1e4, bin_width: 1e-3, linear_range: 1.0, theta0: 0.0 }
    }

    fn still(t_end: f64, n: usize) -> LibrationTrajectory {
        let times: Vec<f64> = (0..=n).map(|k| t_end * k as f64 / n as f64).collect();
        LibrationTrajectory { theta: vec![0.0; n + 1], theta_dot: vec![0.0; n + 1], times }
    }

    #[test]
    fn flat_trace_counts() {
        let traj = still(0.5, 500);
        let trace = sample_trace(&traj, &flat_detection(0.0), 4).unwrap();
        assert_eq!(trace.counts.len(), 500);
        let mean = trace.counts.iter().sum::<f64>() / 500.0;
        // 10⁴ counts per 1 ms bin.
        assert!((mean - 1e4).abs() <= 3.0 * (1e4f64 / 500.0).sqrt());
        let bad = DetectionParams { bin_width: 0.0, ..flat_detection(0.0) };
        assert!(sample_trace(&traj, &bad, 0).is_err());
    }

    #[test]
    fn poisson_dispersion() {
        let traj = still(1.0, 10);
        let det = DetectionParams { bin_width: 1e-4, base_rate: 5e5 * 1e4, ..flat_detection(0.0) };
        let trace = sample_trace(&traj, &det, 8).unwrap();
        assert_eq!(trace.counts.len(), 10_000);
        let n = trace.counts.len() as f64;
        let mean = trace.counts.iter().sum::<f64>() / n;
        let var = trace.counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((0.9..=1.1).contains(&(var / mean)));
    }

    #[test]
    fn refined_bins_aggregate_to_same_expectation() {
        let times: Vec<f64> = (0..=1000).map(|k| k as f64 * 1e-5).collect();
        let theta: Vec<f64> = times.iter().map(|t| 0.01 * (t * 900.0).sin()).collect();
        let traj = LibrationTrajectory { theta_dot: vec![0.0; times.len()], times, theta };
        let det = DetectionParams { bin_width: 1e-3, slope: 2e10, ..flat_detection(0.0) };
        let coarse = expected_trace(&traj, &det).unwrap();
        let fine = expected_trace(&traj, &DetectionParams { bin_width: 1e-4, ..det }).unwrap();
        let merged = fine.aggregate(10).unwrap();
        for (a, b) in coarse.counts.iter().zip(&merged.counts) {
            assert!((a - b).abs() <= 1e-9 * a.abs());
        }
    }

    fn step_trace(early: f64, late: f64, seed: u64) -> PhotonTrace {
        let edges: Vec<f64> = (0..=100).map(|k| k as f64 * 1e-4).collect();
        let expected: Vec<f64> = (0..100).map(|k| if k < 20 { early } else { late }).collect();
        poisson_sample(&PhotonTrace::new(edges, expected).unwrap(), seed)
    }

    #[test]
    fn contrast_examples() {
        let flat = step_trace(400.0, 400.0, 1);
        let c = smc_contrast(&flat, (0.0, 1e-3), (8e-3, 1e-2)).unwrap();
        assert!(c.value.abs() <= 3.0 * c.std_error);
        let dip = step_trace(0.27 * 400.0, 400.0, 2);
        let c = smc_contrast(&dip, (0.0, 1e-3), (8e-3, 1e-2)).unwrap();
        assert!((c.value - 0.73).abs() <= 3.0 * c.std_error, "{c:?}");
        let bump = step_trace(1.73 * 400.0, 400.0, 3);
        let c2 = smc_contrast(&bump, (0.0, 1e-3), (8e-3, 1e-2)).unwrap();
        assert!((c2.value + c.value).abs() <= 3.0 * (c.std_error.hypot(c2.std_error)));
        assert!(smc_contrast(&flat, (0.0, 1e-3), (5e-4, 2e-3)).is_err());
        assert!(smc_contrast(&flat, (0.0, 1e-3), (5e-3, 5e-3)).is_err());
    }

    #[test]
    fn noise_free_contrast_follows_detection_map() {
        let times: Vec<f64> = (0..=1000).map(|k| k as f64 * 1e-5).collect();
        let theta: Vec<f64> = times.iter().map(|&t| if t < 2e-3 { 0.02 } else { 0.0 }).collect();
        let traj = LibrationTrajectory { theta_dot: vec![0.0; times.len()], times, theta };
        let det = DetectionParams { bin_width: 1e-4, slope: -2e12, ..flat_detection(0.0) };
        let trace = expected_trace(&traj, &det).unwrap();
        let c = smc_contrast(&trace, (0.0, 1e-3), (8e-3, 1e-2)).unwrap();
        let want = 1.0 - det.rate(0.02) / det.rate(0.0);
        assert!((c.value - want).abs() <= 1e-12);
    }

    #[test]
    fn signal_integral_examples() {
        let flat = step_trace(400.0, 400.0, 5);
        let f = t1_signal_integral(&flat, 2e-3, 8e-3, Baseline::Window(0.0, 2e-3)).unwrap();
        // Per-bin rate noise √400/1e-4 over 60 bins of 1e-4 s.
        let sigma = (400.0f64).sqrt() * (60.0f64).sqrt();
        assert!(f.abs() <= 3.0 * sigma * 1.5, "{f}");
        let edges: Vec<f64> = (0..=100).map(|k| k as f64 * 1e-4).collect();
        let shape: Vec<f64> = (0..100).map(|k| if (30..60).contains(&k) { 50.0 } else { 0.0 }).collect();
        let one = PhotonTrace::new(edges.clone(), shape.iter().map(|s| 400.0 + s).collect()).unwrap();
        let two = PhotonTrace::new(edges, shape.iter().map(|s| 400.0 + 2.0 * s).collect()).unwrap();
        let f1 = t1_signal_integral(&one, 2e-3, 9e-3, Baseline::Fixed(4e6)).unwrap();
        let f2 = t1_signal_integral(&two, 2e-3, 9e-3, Baseline::Fixed(4e6)).unwrap();
        assert!((f2 - 2.0 * f1).abs() <= 1e-9 * f1.abs());
        assert!(t1_signal_integral(&one, 5e-3, 2e-2, Baseline::Fixed(0.0)).is_err());
    }

    fn protocol() -> T1Protocol {
        T1Protocol {
            trap: TrapParams::new(1.84e-22, 2300.0, 6280.0).unwrap(),
            n_spins: 1e8,
            field_magnitude: 0.02715,
            phi: 0.785,
            relax: RelaxationParams::new(6e-4, 1e-6, 1e-7).unwrap(),
            pump_efficiency: 1.0,
            detection: flat_detection(0.0),
            pump_end: 1e-3,
            trace_end: 1.1e-2,
            integral_end: 5e-3,
            delays: (0..12).map(|k| k as f64 * 2e-4).collect(),
            repetitions: 1,
        }
    }

    #[test]
    fn polarization_after_pulse_tracks_t1() {
        let proto = protocol();
        // Dephasing during the 50 ns pulse scales every delay alike.
        let p0 = proto.polarization_after_pulse(0.0).unwrap();
        assert!(p0 > 0.9 && p0 <= 1.0);
        for d in [3e-4, 6e-4, 2e-3] {
            let p = proto.polarization_after_pulse(d).unwrap();
            assert!((p / p0 - (-d / 6e-4f64).exp()).abs() <= 1e-3, "{d} {p}");
        }
    }

    #[test]
    fn noise_free_signal_decays_with_t1() {
        let proto = T1Protocol { detection: DetectionParams { slope: -1e12, bin_width: 1e-5, ..flat_detection(0.0) }, ..protocol() };
        let f: Vec<f64> = proto.delays.iter().map(|&d| proto.expected_signal(d).unwrap()).collect();
        assert!(f.iter().all(|&x| x < 0.0));
        let (_, t1) = fit_exponential_decay(&proto.delays, &f).unwrap();
        assert!((t1 - 6e-4).abs() <= 0.05 * 6e-4, "{t1}");
    }

    #[test]
    fn protocol_validation_and_determinism() {
        let proto = T1Protocol { detection: DetectionParams { slope: -1e12, bin_width: 1e-5, ..flat_detection(0.0) }, repetitions: 3, ..protocol() };
        let a = proto.run(11).unwrap();
        assert_eq!(a, proto.run(11).unwrap());
        assert_ne!(a.signal, proto.run(12).unwrap().signal);
        assert!(T1Protocol { delays: vec![6e-3], ..protocol() }.run(0).is_err());
        assert!(T1Protocol { repetitions: 0, ..protocol() }.run(0).is_err());
    }
}

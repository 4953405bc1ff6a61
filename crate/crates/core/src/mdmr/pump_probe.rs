//! Pump-probe angle tracking: a pump π pulse starts the rotation, a probe π
//! pulse at f₂ after a delay t_d only acts where f₂ meets the instantaneous
//! line f(θ(t_d)).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::calibration::{angle_frequency_calibration, AngleCalibration};
use super::FitResult;
use crate::error::{ensure, Result};
use crate::libration::{deterministic_evolve, LibrationState, SpinTorqueModel, TrapParams};
use crate::pulse_engine::RelaxationParams;
use crate::spin_core::SpinConstants;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PumpProbeResult {
    pub delays: Vec<f64>,
    pub probe_frequencies: Vec<f64>,
    /// contrast[k][j]: delay k, probe frequency j.
    pub contrast: Vec<Vec<f64>>,
    /// Simulated tipping angle at each delay, rad.
    pub theta: Vec<f64>,
    /// Instantaneous 0 → −1 line at each delay, Hz.
    pub line: Vec<f64>,
    pub peak_centers: Vec<f64>,
    pub peak_amplitudes: Vec<f64>,
    /// Angle recovered from each peak centre through the calibration, rad.
    pub theta_from_peaks: Vec<f64>,
}

/// Centre and height of a sampled peak. Around an interior maximum 1/y is
/// fitted by a parabola through three samples, which is exact for a
/// Lorentzian; at the grid edge the sample itself is returned.
fn refine_peak(x: &[f64], y: &[f64]) -> (f64, f64) {
    let k = (0..y.len()).fold(0, |b, i| if y[i] > y[b] { i } else { b });
    if k == 0 || k + 1 == y.len() || y[k - 1] <= 0.0 || y[k + 1] <= 0.0 {
        return (x[k], y[k]);
    }
    let (x0, x1, x2) = (x[k - 1], x[k], x[k + 1]);
    let (u0, u1, u2) = (1.0 / y[k - 1], 1.0 / y[k], 1.0 / y[k + 1]);
    // u(x) = a(x − x1)² + b(x − x1) + c
    let (d0, d2) = (x0 - x1, x2 - x1);
    let a = ((u0 - u1) / d0 - (u2 - u1) / d2) / (d0 - d2);
    let b = (u0 - u1) / d0 - a * d0;
    if a <= 0.0 {
        return (x[k], y[k]);
    }
    let shift = -b / (2.0 * a);
    (x1 + shift, 1.0 / (u1 - b * b / (4.0 * a)))
}

/// Noise-free pump-probe map. The crystal starts at rest when the pump fires
/// at t = 0; `torque` should carry that onset. The probe response is a unit
/// Lorentzian of FWHM `probe_width` about the instantaneous line, scaled by
/// the surviving polarisation exp(−t_d/T1).
#[allow(clippy::too_many_arguments)]
pub fn pump_probe_simulate(
    fit: &FitResult,
    target_class: usize,
    trap: &TrapParams,
    torque: &SpinTorqueModel,
    relax: &RelaxationParams,
    delays: &[f64],
    probe_frequencies: &[f64],
    probe_width: f64,
    constants: &SpinConstants,
) -> Result<PumpProbeResult> {
    ensure(torque.field_magnitude == 0.0 || (torque.field_magnitude - fit.b_magnitude).abs() <= 1e-9 * fit.b_magnitude, || {
        format!("torque field {} T differs from the fitted field {} T", torque.field_magnitude, fit.b_magnitude)
    })?;
    ensure(!delays.is_empty() && delays.iter().all(|d| *d >= 0.0 && d.is_finite()), || "delays must be non-negative".into())?;
    ensure(delays.windows(2).all(|w| w[1] >= w[0]), || "delays must be non-decreasing".into())?;
    ensure(probe_frequencies.len() >= 3 && probe_frequencies.windows(2).all(|w| w[1] > w[0]), || {
        "probe grid needs at least three increasing frequencies".into()
    })?;
    ensure(probe_width > 0.0 && probe_width.is_finite(), || format!("probe width must be positive, got {probe_width}"))?;
    relax.validate()?;

    let mut grid = vec![0.0];
    grid.extend(delays.iter().copied().filter(|&d| d > 0.0));
    grid.dedup();
    let traj = deterministic_evolve(&LibrationState::default(), trap, torque, &grid)?;
    let theta: Vec<f64> = delays
        .iter()
        .map(|d| traj.theta[grid.iter().position(|g| g == d).expect("delay on grid")])
        .collect();

    let lo = theta.iter().cloned().fold(0.0, f64::min) - 0.02;
    let hi = theta.iter().cloned().fold(0.0, f64::max) + 0.02;
    let n = ((hi - lo) / 2e-4).ceil() as usize + 1;
    let cal: AngleCalibration = angle_frequency_calibration(fit, target_class, (lo, hi), n.max(11), constants)?;
    let line: Vec<f64> = theta.iter().map(|&t| cal.frequency_at(t)).collect::<Result<_>>()?;

    let rows: Vec<(Vec<f64>, f64, f64)> = delays
        .par_iter()
        .zip(&line)
        .map(|(&d, &f)| {
            let survive = if relax.t1.is_finite() { (-d / relax.t1).exp() } else { 1.0 };
            let row: Vec<f64> = probe_frequencies.iter().map(|&f2| survive / (1.0 + (2.0 * (f2 - f) / probe_width).powi(2))).collect();
            let (c, a) = refine_peak(probe_frequencies, &row);
            (row, c, a)
        })
        .collect();
    let mut out = PumpProbeResult {
        delays: delays.to_vec(),
        probe_frequencies: probe_frequencies.to_vec(),
        contrast: Vec::with_capacity(rows.len()),
        theta,
        line,
        peak_centers: Vec::new(),
        peak_amplitudes: Vec::new(),
        theta_from_peaks: Vec::new(),
    };
    for (row, c, a) in rows {
        out.theta_from_peaks.push(cal.angle_for(c)?);
        out.contrast.push(row);
        out.peak_centers.push(c);
        out.peak_amplitudes.push(a);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::GAUSS;
    use crate::mdmr::{angle_to_field, class_near, nv_axes, CrystalOrientation, FitStatus};
    use crate::spin_core::per_spin_torque_scale;

    fn setup() -> (FitResult, usize, TrapParams, SpinTorqueModel, RelaxationParams) {
        let fit = FitResult {
            b_magnitude: 271.5 * GAUSS,
            orientation: CrystalOrientation::from_degrees(225.0, 292.98).unwrap(),
            residual: 0.0,
            assignment: Vec::new(),
            status: FitStatus::Converged,
            evaluations: 0,
        };
        let c = SpinConstants::default();
        let class = class_near(&fit, 2498e6, &c).unwrap();
        let phi = angle_to_field(&nv_axes(&fit.orientation)[class]);
        let n = 56.5e-18 / (per_spin_torque_scale(fit.b_magnitude, &c).unwrap() * phi.sin());
        let torque = SpinTorqueModel::new(n, fit.b_magnitude, phi, 6e-4, 0.0).unwrap();
        let trap = TrapParams::new(1.30e-23, 2300.0, 6280.0).unwrap();
        (fit, class, trap, torque, RelaxationParams::new(6e-4, 1e-6, 1e-7).unwrap())
    }

    fn probe_grid() -> Vec<f64> {
        (0..=800).map(|k| 2.30e9 + k as f64 * 0.3e6).collect()
    }

    #[test]
    fn refine_is_exact_for_lorentzians() {
        let x: Vec<f64> = (0..50).map(|k| k as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.7 / (1.0 + (2.0 * (v - 20.3) / 4.0).powi(2))).collect();
        let (c, a) = refine_peak(&x, &y);
        assert!((c - 20.3).abs() < 1e-10 && (a - 0.7).abs() < 1e-12);
    }

    #[test]
    fn zero_delay_on_the_pump_line_is_maximal() {
        let (fit, class, trap, torque, relax) = setup();
        let c = SpinConstants::default();
        let f0 = angle_frequency_calibration(&fit, class, (-0.01, 0.01), 11, &c).unwrap().frequency_at(0.0).unwrap();
        let grid = vec![f0 - 1e6, f0, f0 + 1e6];
        let r = pump_probe_simulate(&fit, class, &trap, &torque, &relax, &[0.0, 1e-4], &grid, 10e6, &c).unwrap();
        assert!((r.contrast[0][1] - 1.0).abs() < 1e-15);
        let max = r.contrast.iter().flatten().cloned().fold(0.0, f64::max);
        assert_eq!(max, r.contrast[0][1]);
    }

    #[test]
    fn track_shifts_and_decays() {
        let (fit, class, trap, torque, relax) = setup();
        let delays: Vec<f64> = (0..=30).map(|k| k as f64 * 1e-5).collect();
        let r = pump_probe_simulate(&fit, class, &trap, &torque, &relax, &delays, &probe_grid(), 10e6, &SpinConstants::default()).unwrap();
        let shift = (r.peak_centers[30] - r.peak_centers[0]).abs();
        assert!(shift > 50e6, "{shift}");
        for (d, a) in delays.iter().zip(&r.peak_amplitudes) {
            let want = (-d / 6e-4f64).exp();
            assert!((a / want - 1.0).abs() < 0.05);
        }
        for (t, tp) in r.theta.iter().zip(&r.theta_from_peaks) {
            assert!((t - tp).abs() < 1e-6, "{t} {tp}");
        }
    }

    #[test]
    fn early_track_is_quadratic_with_expected_coefficient() {
        let (fit, class, trap, torque, relax) = setup();
        let delays: Vec<f64> = (0..=10).map(|k| k as f64 * 1e-5).collect();
        let r = pump_probe_simulate(&fit, class, &trap, &torque, &relax, &delays, &probe_grid(), 10e6, &SpinConstants::default()).unwrap();
        let num: f64 = delays.iter().zip(&r.theta_from_peaks).map(|(t, th)| t * t * th).sum();
        let den: f64 = delays.iter().map(|t| t.powi(4)).sum();
        let a = num / den;
        assert!(a > 2.18e6 / 2.0 && a < 2.18e6 * 2.0, "{a}");
    }

    #[test]
    fn inconsistent_inputs_rejected() {
        let (fit, class, trap, torque, relax) = setup();
        let c = SpinConstants::default();
        let other = SpinTorqueModel { field_magnitude: 0.03, ..torque };
        assert!(pump_probe_simulate(&fit, class, &trap, &other, &relax, &[0.0], &probe_grid(), 1e7, &c).is_err());
        assert!(pump_probe_simulate(&fit, class, &trap, &torque, &relax, &[-1e-6], &probe_grid(), 1e7, &c).is_err());
        assert!(pump_probe_simulate(&fit, class, &trap, &torque, &relax, &[0.0], &probe_grid(), 0.0, &c).is_err());
    }
}

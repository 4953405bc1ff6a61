//! Vector-field fit: (|B|, θ_NV, φ_k) from a list of measured line centres.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::assign::{optimal_assignment, sorted_cost};
use super::{model_centers, CrystalOrientation, SpectrumPeaks};
use crate::constants::GAUSS;
use crate::error::{ensure, Result};
use crate::optimize::{nelder_mead, Minimum, NelderMeadOptions};
use crate::pulse_engine::Transition;
use crate::spin_core::SpinConstants;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Start grid over the polar angle (0, π/2) of the field seen from the crystal.
    pub n_theta: usize,
    /// Start grid over the azimuth (0, 2π/3).
    pub n_phi: usize,
    /// Field magnitudes per angle start, bracketing the measured span.
    pub n_field: usize,
    pub coarse: NelderMeadOptions,
    /// Number of best coarse minima polished further.
    pub n_polish: usize,
    pub polish: NelderMeadOptions,
    /// RMS residual above which the result is flagged, Hz.
    pub residual_threshold: f64,
    /// Measured spans below this carry no orientation information, Hz.
    pub min_span: f64,
    pub constants: SpinConstants,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            n_theta: 16,
            n_phi: 16,
            n_field: 5,
            coarse: NelderMeadOptions { max_evals: 300, f_tol: 1e-8, x_tol: 1e-5 },
            n_polish: 8,
            polish: NelderMeadOptions { max_evals: 3000, f_tol: 1e-20, x_tol: 1e-11 },
            residual_threshold: 5e6,
            min_span: 2e6,
            constants: SpinConstants::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Converged,
    /// Best residual exceeds the threshold.
    ResidualAboveThreshold,
    /// The measured lines are (nearly) degenerate; orientation is undetermined.
    Unidentifiable,
}

/// Model line matched to one measured centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakLabel {
    pub measured: usize,
    pub class: usize,
    pub transition: Transition,
    pub model_center: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub b_magnitude: f64,
    pub orientation: CrystalOrientation,
    /// RMS over matched lines, Hz.
    pub residual: f64,
    pub assignment: Vec<PeakLabel>,
    pub status: FitStatus,
    pub evaluations: usize,
}

impl FitResult {
    pub fn converged(&self) -> bool {
        self.status == FitStatus::Converged
    }
}

/// Multi-start Nelder–Mead over (|B|, θ_NV, φ_k). The cost is the mean squared
/// distance of the optimal assignment between measured and model centres;
/// 4 to 8 centres are accepted, so up to four lines may be missing.
pub fn fit_vector_field(measured: &[f64], options: &FitOptions) -> Result<FitResult> {
    let m = measured.len();
    ensure((4..=8).contains(&m), || format!("need 4 to 8 measured centres, got {m}"))?;
    ensure(measured.iter().all(|f| f.is_finite() && *f > 0.0), || "measured centres must be positive".into())?;
    ensure(options.n_theta >= 1 && options.n_phi >= 1 && options.n_field >= 1 && options.n_polish >= 1, || {
        "start grid dimensions must be at least 1".into()
    })?;
    let mut sorted = measured.to_vec();
    sorted.sort_by(f64::total_cmp);
    let constants = options.constants;
    // Parameters: (|B| in gauss, θ, φ); cost in MHz².
    let cost = |x: &[f64]| {
        let o = CrystalOrientation { theta_nv: x[1], phi_k: x[2] };
        let mut c = model_centers(x[0].abs() * GAUSS, &o, &constants);
        c.sort_by(f64::total_cmp);
        sorted_cost(&c, &sorted) / m as f64 * 1e-12
    };

    let span = sorted[m - 1] - sorted[0];
    let b0 = (span / (2.0 * constants.gamma_e) / GAUSS).max(1.0);
    let mut starts = Vec::with_capacity(options.n_theta * options.n_phi * options.n_field);
    for k in 0..options.n_field {
        let scale = if options.n_field == 1 { 1.2 } else { 0.9 * (2.2f64).powf(k as f64 / (options.n_field - 1) as f64) };
        for i in 0..options.n_theta {
            for j in 0..options.n_phi {
                let theta = FRAC_PI_2 * (i as f64 + 0.5) / options.n_theta as f64;
                let phi = 2.0 * PI / 3.0 * (j as f64 + 0.5) / options.n_phi as f64;
                starts.push([b0 * scale, theta, phi]);
            }
        }
    }
    let step = |x: &[f64]| [(0.05 * x[0]).max(0.5), 0.05, 0.05];
    let coarse: Vec<Minimum> = starts
        .par_iter()
        .map(|x| nelder_mead(cost, x, &step(x), &options.coarse).expect("valid start"))
        .collect();
    let mut evaluations: usize = coarse.iter().map(|c| c.evals).sum();
    let mut order: Vec<usize> = (0..coarse.len()).collect();
    order.sort_by(|&a, &b| coarse[a].value.total_cmp(&coarse[b].value).then(a.cmp(&b)));
    let polished: Vec<Minimum> = order[..options.n_polish.min(order.len())]
        .par_iter()
        .map(|&k| {
            let x = &coarse[k].x;
            nelder_mead(cost, x, &step(x), &options.polish).expect("valid start")
        })
        .collect();
    evaluations += polished.iter().map(|c| c.evals).sum::<usize>();
    let best = polished
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value).then(a.0.cmp(&b.0)))
        .map(|(_, m)| m)
        .expect("at least one start");

    let b_magnitude = best.x[0].abs() * GAUSS;
    let orientation = CrystalOrientation::new(best.x[1], best.x[2])?;
    let model = model_centers(b_magnitude, &orientation, &constants);
    let assignment = optimal_assignment(&model, measured)?;
    let residual = assignment.rms();
    let labels = assignment
        .pairs
        .iter()
        .map(|&(i, j)| {
            let (class, transition) = SpectrumPeaks::label(j);
            PeakLabel { measured: i, class, transition, model_center: model[j] }
        })
        .collect();
    let status = if span < options.min_span || b_magnitude * constants.gamma_e < options.min_span {
        FitStatus::Unidentifiable
    } else if residual > options.residual_threshold {
        FitStatus::ResidualAboveThreshold
    } else {
        FitStatus::Converged
    };
    Ok(FitResult { b_magnitude, orientation, residual, assignment: labels, status, evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdmr::{forward_spectrum, orientation_error};

    fn synthetic(b_gauss: f64, o: &CrystalOrientation) -> Vec<f64> {
        forward_spectrum(b_gauss * GAUSS, o, &[5e6; 8], &[-0.1; 8], &SpinConstants::default()).unwrap().centers
    }

    #[test]
    fn recovers_fitted_parameters_without_noise() {
        let truth = CrystalOrientation::from_degrees(225.0, 292.98).unwrap();
        let peaks = synthetic(271.5, &truth);
        let fit = fit_vector_field(&peaks, &FitOptions::default()).unwrap();
        assert!(fit.converged());
        assert!((fit.b_magnitude / GAUSS - 271.5).abs() < 0.2, "{}", fit.b_magnitude / GAUSS);
        assert!(orientation_error(&fit.orientation, &truth).to_degrees() < 0.5);
        assert!(fit.residual < 1e3, "{}", fit.residual);
        let mut seen: Vec<(usize, bool)> = fit.assignment.iter().map(|l| (l.class, l.transition == Transition::Minus)).collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 8);
    }

    #[test]
    fn tolerates_missing_lines() {
        let truth = CrystalOrientation::from_degrees(40.0, 100.0).unwrap();
        let mut peaks = synthetic(180.0, &truth);
        peaks.sort_by(f64::total_cmp);
        let six = [&peaks[..3], &peaks[4..6], &peaks[7..]].concat();
        let fit = fit_vector_field(&six, &FitOptions::default()).unwrap();
        assert!(fit.converged());
        assert!(fit.residual < 1e3);
        assert_eq!(fit.assignment.len(), 6);
    }

    #[test]
    fn zero_field_is_unidentifiable() {
        let fit = fit_vector_field(&[2.87e9; 8], &FitOptions::default()).unwrap();
        assert_eq!(fit.status, FitStatus::Unidentifiable);
    }

    #[test]
    fn bad_inputs_rejected() {
        assert!(fit_vector_field(&[2.8e9; 3], &FitOptions::default()).is_err());
        assert!(fit_vector_field(&[2.8e9; 9], &FitOptions::default()).is_err());
        assert!(fit_vector_field(&[2.8e9, 2.9e9, f64::NAN, 3e9], &FitOptions::default()).is_err());
    }
}

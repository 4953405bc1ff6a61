//! Mechanically detected magnetic resonance: eight-line spectra of the four
//! NV orientation classes, vector-field fitting, the angle ↔ frequency
//! calibration and the pump-probe simulation.
//!
//! The field defines the lab z-axis. A crystal orientation (θ_NV, φ_k) maps
//! the cubic ⟨111⟩ axes through a fixed base rotation Q, which puts (1,1,1)
//! on ẑ and (1,−1,−1) in the xz-plane, followed by R_y(θ_NV)·R_z(φ_k).
//! Equivalently (θ_NV, φ_k) are spherical angles of the field direction seen
//! from the crystal, so the spectrum depends on nothing else.

mod assign;
mod calibration;
mod fit;
mod io;
mod pump_probe;

use std::f64::consts::{PI, TAU};

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::pulse_engine::Transition;
use crate::spin_core::{build_hamiltonian, transition_frequencies, transition_pair_loose, FieldVector, NvAxis, SpinConstants, TransitionPair};
use crate::vector3::{Rotation, Vec3};

pub use assign::{greedy_assignment, optimal_assignment, Assignment};
pub use calibration::{angle_frequency_calibration, class_near, tip_rotation, AngleCalibration, Pchip};
pub use fit::{fit_vector_field, FitOptions, FitResult, FitStatus, PeakLabel};
pub use io::{extract_peaks, parse_spectrum};
pub use pump_probe::{pump_probe_simulate, PumpProbeResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrystalOrientation {
    pub theta_nv: f64,
    pub phi_k: f64,
}

impl CrystalOrientation {
    /// Angles in radians, wrapped to [0, 2π).
    pub fn new(theta_nv: f64, phi_k: f64) -> Result<Self> {
        ensure(theta_nv.is_finite() && phi_k.is_finite(), || "orientation angles must be finite".into())?;
        Ok(CrystalOrientation { theta_nv: theta_nv.rem_euclid(TAU), phi_k: phi_k.rem_euclid(TAU) })
    }

    pub fn from_degrees(theta_nv: f64, phi_k: f64) -> Result<Self> {
        Self::new(theta_nv.to_radians(), phi_k.to_radians())
    }

    pub fn rotation(&self) -> Rotation {
        Rotation::about_y(self.theta_nv).then_after(&Rotation::about_z(self.phi_k)).then_after(&base_rotation())
    }

    /// Unit field direction in cubic crystal coordinates.
    pub fn field_in_crystal(&self) -> Vec3 {
        self.rotation().inverse().apply(&Vec3::z())
    }
}

/// The fixed rotation taking (1,1,1)/√3 to ẑ and (1,−1,−1)/√3 into the
/// xz-plane with positive x.
pub fn base_rotation() -> Rotation {
    let (s2, s3, s6) = (2f64.sqrt(), 3f64.sqrt(), 6f64.sqrt());
    let m = Matrix3::new(
        2.0 / s6, -1.0 / s6, -1.0 / s6,
        0.0, 1.0 / s2, -1.0 / s2,
        1.0 / s3, 1.0 / s3, 1.0 / s3,
    );
    Rotation::from_matrix(m).expect("orthonormal by construction")
}

/// (1,1,1), (1,−1,−1), (−1,1,−1), (−1,−1,1), normalised.
pub fn cubic_axes() -> [Vec3; 4] {
    let s = 1.0 / 3f64.sqrt();
    [Vec3::new(s, s, s), Vec3::new(s, -s, -s), Vec3::new(-s, s, -s), Vec3::new(-s, -s, s)]
}

pub fn axes_from_rotation(r: &Rotation) -> [Vec3; 4] {
    cubic_axes().map(|a| r.apply(&a))
}

pub fn nv_axes(orientation: &CrystalOrientation) -> [Vec3; 4] {
    axes_from_rotation(&orientation.rotation())
}

/// Field of magnitude `b` (T) along the lab z-axis.
pub fn lab_field(b: f64) -> Result<FieldVector> {
    ensure(b >= 0.0 && b.is_finite(), || format!("field magnitude must be non-negative, got {b}"))?;
    FieldVector::new(Vec3::new(0.0, 0.0, b))
}

/// Axis flipped, if needed, so that n·B ≥ 0.
fn canonical(axis: &Vec3, field: &FieldVector) -> NvAxis {
    let n = if axis.dot(field.vector()) < 0.0 { -axis } else { *axis };
    NvAxis::normalized(n).expect("unit axis")
}

/// Transition pairs of the four classes for a set of lab-frame axes.
pub fn class_transitions(axes: &[Vec3; 4], field: &FieldVector, constants: &SpinConstants) -> Result<[TransitionPair; 4]> {
    let mut out = [TransitionPair { f_minus: 0.0, f_plus: 0.0 }; 4];
    for (o, a) in out.iter_mut().zip(axes) {
        *o = transition_frequencies(&build_hamiltonian(field, &canonical(a, field), constants))?;
    }
    Ok(out)
}

/// As [`class_transitions`] but never fails on labeling.
pub(crate) fn class_transitions_loose(axes: &[Vec3; 4], field: &FieldVector, constants: &SpinConstants) -> [TransitionPair; 4] {
    axes.map(|a| {
        transition_pair_loose(&build_hamiltonian(field, &canonical(&a, field), constants))
            .expect("finite Hamiltonian")
    })
}

/// Angle between an axis (as a line) and the lab field direction, rad in [0, π/2].
pub fn angle_to_field(axis: &Vec3) -> f64 {
    axis.normalize().dot(&Vec3::z()).abs().clamp(0.0, 1.0).acos()
}

/// The 48 signed permutations of the cube coordinates. They map the set of
/// ±⟨111⟩ lines onto itself, so the spectrum cannot tell them apart.
fn cube_symmetries() -> Vec<Matrix3<f64>> {
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out = Vec::with_capacity(48);
    for p in perms {
        for signs in 0..8 {
            let mut m = Matrix3::zeros();
            for (row, &col) in p.iter().enumerate() {
                m[(row, col)] = if signs >> row & 1 == 1 { -1.0 } else { 1.0 };
            }
            out.push(m);
        }
    }
    out
}

/// Smallest angle between the crystal-frame field directions of two
/// orientations over the cube symmetry group, rad. Zero iff the two give the
/// same spectrum at every field magnitude.
pub fn orientation_error(a: &CrystalOrientation, b: &CrystalOrientation) -> f64 {
    let (u, v) = (a.field_in_crystal(), b.field_in_crystal());
    cube_symmetries()
        .iter()
        .map(|g| (g * v).dot(&u).clamp(-1.0, 1.0).acos())
        .fold(PI, f64::min)
}

/// Eight resonance lines: index 2k is the 0 → −1 line of class k, 2k + 1 the
/// 0 → +1 line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPeaks {
    pub centers: Vec<f64>,
    /// Full widths at half maximum, Hz.
    pub widths: Vec<f64>,
    /// Signed peak heights relative to the unit background.
    pub amplitudes: Vec<f64>,
}

impl SpectrumPeaks {
    pub fn label(index: usize) -> (usize, Transition) {
        (index / 2, if index.is_multiple_of(2) { Transition::Minus } else { Transition::Plus })
    }

    /// 1 + Σ signed Lorentzians at each frequency.
    pub fn curve(&self, frequencies: &[f64]) -> Vec<f64> {
        frequencies
            .iter()
            .map(|&f| {
                1.0 + self
                    .centers
                    .iter()
                    .zip(&self.widths)
                    .zip(&self.amplitudes)
                    .map(|((c, w), a)| a / (1.0 + (2.0 * (f - c) / w).powi(2)))
                    .sum::<f64>()
            })
            .collect()
    }
}

pub fn forward_spectrum(
    b_magnitude: f64,
    orientation: &CrystalOrientation,
    widths: &[f64; 8],
    amplitudes: &[f64; 8],
    constants: &SpinConstants,
) -> Result<SpectrumPeaks> {
    ensure(widths.iter().all(|w| *w > 0.0 && w.is_finite()), || "line widths must be positive".into())?;
    let pairs = class_transitions(&nv_axes(orientation), &lab_field(b_magnitude)?, constants)?;
    Ok(SpectrumPeaks {
        centers: pairs.iter().flat_map(|p| [p.f_minus, p.f_plus]).collect(),
        widths: widths.to_vec(),
        amplitudes: amplitudes.to_vec(),
    })
}

/// Line centres in label order, with the non-failing labeling.
pub(crate) fn model_centers(b_magnitude: f64, orientation: &CrystalOrientation, constants: &SpinConstants) -> [f64; 8] {
    let field = FieldVector::new(Vec3::new(0.0, 0.0, b_magnitude.abs())).expect("finite field");
    let pairs = class_transitions_loose(&nv_axes(orientation), &field, constants);
    let mut c = [0.0; 8];
    for (k, p) in pairs.iter().enumerate() {
        c[2 * k] = p.f_minus;
        c[2 * k + 1] = p.f_plus;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::GAUSS;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fitted() -> CrystalOrientation {
        CrystalOrientation::from_degrees(225.0, 292.98).unwrap()
    }

    #[test]
    fn identity_gives_even_parity_cube_diagonals() {
        let axes = axes_from_rotation(&Rotation::identity());
        for a in &axes {
            let c = a * 3f64.sqrt();
            assert!(c.iter().all(|x| (x.abs() - 1.0).abs() < 1e-15));
            assert!(c.x * c.y * c.z > 0.0);
        }
    }

    #[test]
    fn base_rotation_places_reference_axes() {
        let q = base_rotation();
        let a = cubic_axes();
        assert!((q.apply(&a[0]) - Vec3::z()).norm() < 1e-15);
        let b = q.apply(&a[1]);
        assert!(b.y.abs() < 1e-15 && b.x > 0.0);
    }

    #[test]
    fn rotations_preserve_tetrahedral_angles() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let o = CrystalOrientation::new(rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)).unwrap();
            let axes = nv_axes(&o);
            for i in 0..4 {
                assert!((axes[i].norm() - 1.0).abs() < 1e-12);
                for j in 0..i {
                    assert!((axes[i].dot(&axes[j]) + 1.0 / 3.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn fitted_orientation_has_an_axis_near_45_degrees() {
        let best = nv_axes(&fitted())
            .iter()
            .map(|a| (angle_to_field(a).to_degrees() - 45.0).abs())
            .fold(f64::INFINITY, f64::min);
        assert!(best < 5.0, "{best}");
    }

    #[test]
    fn zero_field_lines_sit_at_zero_field_splitting() {
        let s = forward_spectrum(0.0, &fitted(), &[1e6; 8], &[-0.1; 8], &SpinConstants::default()).unwrap();
        assert!(s.centers.iter().all(|c| (c - 2.87e9).abs() < 1e-3));
    }

    #[test]
    fn fitted_parameters_give_pump_line() {
        let s = forward_spectrum(271.5 * GAUSS, &fitted(), &[1e6; 8], &[-0.1; 8], &SpinConstants::default()).unwrap();
        let best = (0..4).map(|k| (s.centers[2 * k] - 2498e6).abs()).fold(f64::INFINITY, f64::min);
        assert!(best < 10e6, "{best}");
    }

    #[test]
    fn classes_symmetric_about_the_field_coincide() {
        // φ_k = 0, θ_NV = 0: the field lies along (1,1,1), and the other three
        // axes make the same angle with it.
        let o = CrystalOrientation::new(0.0, 0.0).unwrap();
        let s = forward_spectrum(300.0 * GAUSS, &o, &[1e6; 8], &[-0.1; 8], &SpinConstants::default()).unwrap();
        for k in 2..4 {
            assert!((s.centers[2 * k] - s.centers[2]).abs() < 1e-3);
            assert!((s.centers[2 * k + 1] - s.centers[3]).abs() < 1e-3);
        }
    }

    #[test]
    fn spectrum_is_invariant_under_cube_symmetries() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = SpinConstants::default();
        for _ in 0..20 {
            let o = CrystalOrientation::new(rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)).unwrap();
            let u = o.field_in_crystal();
            let mut base = model_centers(0.03, &o, &c);
            base.sort_by(f64::total_cmp);
            for g in cube_symmetries() {
                // Orientation whose crystal-frame field direction is g·u.
                let v = g * u;
                let p = base_rotation().apply(&v);
                let theta = p.z.clamp(-1.0, 1.0).acos();
                let phi = p.y.atan2(-p.x);
                let o2 = CrystalOrientation::new(theta, phi).unwrap();
                assert!((o2.field_in_crystal() - v).norm() < 1e-9);
                let mut other = model_centers(0.03, &o2, &c);
                other.sort_by(f64::total_cmp);
                for (a, b) in base.iter().zip(&other) {
                    assert!((a - b).abs() < 1e-3);
                }
                assert!(orientation_error(&o, &o2) < 1e-6);
            }
        }
    }

    #[test]
    fn curve_peaks_at_line_centres() {
        let s = SpectrumPeaks { centers: vec![2.5e9], widths: vec![4e6], amplitudes: vec![-0.3] };
        let y = s.curve(&[2.5e9, 2.502e9, 2.6e9]);
        assert!((y[0] - 0.7).abs() < 1e-12);
        assert!((y[1] - 0.85).abs() < 1e-12);
        assert!((y[2] - 1.0).abs() < 1e-3);
    }
}

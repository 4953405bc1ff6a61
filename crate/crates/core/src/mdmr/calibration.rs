//! Rotation angle ↔ transition frequency calibration of one orientation class.

use serde::{Deserialize, Serialize};

use super::{lab_field, nv_axes, FitResult};
use crate::error::{ensure, Error, Result};
use crate::spin_core::{build_hamiltonian, transition_frequencies, NvAxis, SpinConstants};
use crate::vector3::{Rotation, Vec3};

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Butland slopes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        ensure(x.len() == y.len() && x.len() >= 2, || "interpolant needs at least two (x, y) pairs".into())?;
        ensure(x.windows(2).all(|w| w[1] > w[0]), || "interpolation nodes must be strictly increasing".into())?;
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let s: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d = vec![s[0]; 2];
        } else {
            for k in 1..n - 1 {
                if s[k - 1] * s[k] > 0.0 {
                    let (w1, w2) = (2.0 * h[k] + h[k - 1], h[k] + 2.0 * h[k - 1]);
                    d[k] = (w1 + w2) / (w1 / s[k - 1] + w2 / s[k]);
                }
            }
            let end = |h0: f64, h1: f64, s0: f64, s1: f64| {
                let v = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
                if v * s0 <= 0.0 {
                    0.0
                } else if s0 * s1 <= 0.0 && v.abs() > 3.0 * s0.abs() {
                    3.0 * s0
                } else {
                    v
                }
            };
            d[0] = end(h[0], h[1], s[0], s[1]);
            d[n - 1] = end(h[n - 2], h[n - 3], s[n - 2], s[n - 3]);
        }
        Ok(Pchip { x, y, d })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        if !(x >= lo && x <= hi) {
            return Err(Error::OutOfDomain(format!("{x} lies outside [{lo}, {hi}]")));
        }
        let k = (self.x.partition_point(|&xi| xi <= x).max(1) - 1).min(self.x.len() - 2);
        let h = self.x[k + 1] - self.x[k];
        let t = (x - self.x[k]) / h;
        let (t2, t3) = (t * t, t * t * t);
        Ok((2.0 * t3 - 3.0 * t2 + 1.0) * self.y[k]
            + (t3 - 2.0 * t2 + t) * h * self.d[k]
            + (-2.0 * t3 + 3.0 * t2) * self.y[k + 1]
            + (t3 - t2) * h * self.d[k + 1])
    }
}

/// Rotation by `angle` about n̂ × B̂, which tips the axis line n toward the
/// lab field (ẑ). The axis is first oriented so that n·B̂ ≥ 0.
pub fn tip_rotation(axis: &Vec3, angle: f64) -> Result<Rotation> {
    let n = if axis.z < 0.0 { -axis } else { *axis };
    let k = n.cross(&Vec3::z());
    ensure(k.norm() > 1e-9 * n.norm(), || "axis is parallel to the field; the tipping direction is undefined".into())?;
    Ok(Rotation::about_axis(&k.normalize(), angle))
}

/// Tabulated 0 → −1 frequency of one class versus tipping angle, with a
/// monotone-spline inverse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleCalibration {
    pub class: usize,
    pub b_magnitude: f64,
    /// Target axis before rotation, lab frame, n·B̂ ≥ 0.
    pub axis: [f64; 3],
    pub angles: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub constants: SpinConstants,
    inverse: Pchip,
}

impl AngleCalibration {
    /// Exact forward model (not the table).
    pub fn frequency_at(&self, angle: f64) -> Result<f64> {
        let n = Vec3::from(self.axis);
        let rotated = tip_rotation(&n, angle)?.apply(&n);
        let h = build_hamiltonian(&lab_field(self.b_magnitude)?, &NvAxis::normalized(rotated)?, &self.constants);
        Ok(transition_frequencies(&h)?.f_minus)
    }

    /// Tipping angle producing `frequency`, by spline lookup.
    pub fn angle_for(&self, frequency: f64) -> Result<f64> {
        self.inverse.eval(frequency)
    }
}

/// Class whose 0 → −1 line lies closest to `frequency`.
pub fn class_near(fit: &FitResult, frequency: f64, constants: &SpinConstants) -> Result<usize> {
    let field = lab_field(fit.b_magnitude)?;
    let axes = nv_axes(&fit.orientation);
    let mut best = (0, f64::INFINITY);
    for (k, a) in axes.iter().enumerate() {
        let n = if a.z < 0.0 { -a } else { *a };
        let f = transition_frequencies(&build_hamiltonian(&field, &NvAxis::normalized(n)?, constants))?.f_minus;
        if (f - frequency).abs() < best.1 {
            best = (k, (f - frequency).abs());
        }
    }
    Ok(best.0)
}

/// Tabulates the target class's 0 → −1 frequency at `n_points` tipping angles
/// spanning `range` (rad). The table must be strictly monotone.
pub fn angle_frequency_calibration(
    fit: &FitResult,
    target_class: usize,
    range: (f64, f64),
    n_points: usize,
    constants: &SpinConstants,
) -> Result<AngleCalibration> {
    ensure(target_class < 4, || format!("class index must be 0..4, got {target_class}"))?;
    ensure(n_points >= 2, || "calibration needs at least two points".into())?;
    ensure(range.0.is_finite() && range.1.is_finite() && range.1 > range.0, || {
        format!("angle range ({}, {}) is empty", range.0, range.1)
    })?;
    let a = nv_axes(&fit.orientation)[target_class];
    let axis = if a.z < 0.0 { -a } else { a };
    tip_rotation(&axis, 0.0)?;
    let angles: Vec<f64> = (0..n_points).map(|k| range.0 + (range.1 - range.0) * k as f64 / (n_points - 1) as f64).collect();
    let mut cal = AngleCalibration {
        class: target_class,
        b_magnitude: fit.b_magnitude,
        axis: [axis.x, axis.y, axis.z],
        angles: angles.clone(),
        frequencies: Vec::new(),
        constants: *constants,
        inverse: Pchip::new(vec![0.0, 1.0], vec![0.0, 0.0])?,
    };
    cal.frequencies = angles.iter().map(|&t| cal.frequency_at(t)).collect::<Result<_>>()?;
    let f = &cal.frequencies;
    let rising = f.windows(2).all(|w| w[1] > w[0]);
    let falling = f.windows(2).all(|w| w[1] < w[0]);
    if !(rising || falling) {
        return Err(Error::NonMonotone(format!(
            "frequency is not strictly monotone over tipping angles [{}, {}] rad",
            range.0, range.1
        )));
    }
    let (mut xs, mut ys) = (f.clone(), angles);
    if falling {
        xs.reverse();
        ys.reverse();
    }
    cal.inverse = Pchip::new(xs, ys)?;
    Ok(cal)
}

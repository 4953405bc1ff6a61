//! Closed-form sensitivity estimates for spin-mechanical readout.
//!
//! Two gyromagnetic conventions appear side by side. The shot-noise field
//! sensitivity uses γ_e in cycles (Hz/T, no 2π); the torque expressions use
//! the angular ħ·2π·γ_e. Every function takes γ_e in Hz/T and applies the
//! factor itself.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{HBAR, K_B};
use crate::error::{ensure, Result};

/// Inputs of the sensitivity formulas. `rotation_time` (the time the crystal
/// needs to turn) is carried for reference and enters no formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityInputs {
    /// x₀ − x₋₁ per measurement, counts.
    pub delta_x: f64,
    /// x₀ per measurement, counts.
    pub x0: f64,
    pub contrast: f64,
    pub ramsey_time: f64,
    pub dead_time: f64,
    pub n_spins: f64,
    pub field: f64,
    pub inertia: f64,
    pub omega0: f64,
    pub gas_temp: f64,
    pub gamma_g: f64,
    /// θ₀ − θ₋₁, rad.
    pub theta_span: f64,
    /// Hz/T.
    pub gamma_e: f64,
    /// Spin-to-rotation conversion time used in the projection angle, s.
    pub conversion_time: f64,
    /// Averaging time of the resonant torque limit, s.
    pub measurement_time: f64,
    #[serde(default)]
    pub rotation_time: Option<f64>,
}

impl SensitivityInputs {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("delta_x", self.delta_x),
            ("x0", self.x0),
            ("contrast", self.contrast),
            ("ramsey_time", self.ramsey_time),
            ("dead_time", self.dead_time),
            ("n_spins", self.n_spins),
            ("field", self.field),
            ("inertia", self.inertia),
            ("omega0", self.omega0),
            ("gas_temp", self.gas_temp),
            ("gamma_g", self.gamma_g),
            ("theta_span", self.theta_span),
            ("gamma_e", self.gamma_e),
            ("conversion_time", self.conversion_time),
            ("measurement_time", self.measurement_time),
        ];
        for (name, v) in fields {
            ensure(v >= 0.0 && v.is_finite(), || format!("{name} must be finite and non-negative, got {v}"))?;
        }
        ensure(self.x0 == 0.0 || self.delta_x <= self.x0, || {
            format!("delta_x ({}) cannot exceed x0 ({})", self.delta_x, self.x0)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RamseyForm {
    /// Δx·cos²(π·γ_e·δB·t).
    Exact,
    /// Δx·π·γ_e·δB·t: the signal change about the mid-fringe point.
    Linearized,
}

/// Ramsey SMC signal, counts.
pub fn ramsey_signal(delta_x: f64, field_offset: f64, time: f64, gamma_e: f64, form: RamseyForm) -> Result<f64> {
    ensure(time >= 0.0, || format!("evolution time must be non-negative, got {time}"))?;
    let phase = PI * gamma_e * field_offset * time;
    Ok(match form {
        RamseyForm::Exact => delta_x * phase.cos().powi(2),
        RamseyForm::Linearized => delta_x * phase,
    })
}

/// δB = √(2·t_d/Δx)/(γ_e·T), T/√Hz.
pub fn shot_noise_field_sensitivity(delta_x: f64, ramsey_time: f64, dead_time: f64, gamma_e: f64) -> Result<f64> {
    ensure(delta_x > 0.0 && ramsey_time > 0.0 && gamma_e > 0.0, || {
        "delta_x, ramsey_time and gamma_e must be positive".into()
    })?;
    ensure(dead_time >= 0.0, || format!("dead time must be non-negative, got {dead_time}"))?;
    Ok((2.0 * dead_time / delta_x).sqrt() / (gamma_e * ramsey_time))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleSensitivity {
    /// rad/√Hz.
    pub value: f64,
    pub warning: Option<String>,
}

/// Photon-shot-noise angle sensitivity at the mid-angle operating point.
///
/// The count rate runs linearly from x₀ at θ₀ to C·x₀ at θ₋₁; halfway the
/// shot noise is √(x₀(1 + C)/2) and the slope x₀(1 − C)/(θ₀ − θ₋₁), so
/// δθ = span·√(x₀(1 + C)/2)/(x₀(1 − C))·√t_d. For C = ½ this is
/// span·√3/√x₀·√t_d.
pub fn shot_noise_angle_sensitivity(x0: f64, contrast: f64, theta_span: f64, dead_time: f64) -> Result<AngleSensitivity> {
    ensure(contrast > 0.0 && contrast < 1.0, || format!("contrast must lie in (0, 1), got {contrast}"))?;
    ensure(x0 > 0.0, || format!("x0 must be positive, got {x0}"))?;
    ensure(theta_span >= 0.0 && dead_time >= 0.0, || "angle span and dead time must be non-negative".into())?;
    let value = theta_span * (x0 * (1.0 + contrast) / 2.0).sqrt() / (x0 * (1.0 - contrast)) * dead_time.sqrt();
    let warning = (theta_span == 0.0).then(|| "zero angle span: the count rate carries no angle information".to_string());
    Ok(AngleSensitivity { value, warning })
}

/// δτ = ħ·2π·γ_e·B·√(N/2)·√t_d, N·m/√Hz.
pub fn projection_torque_noise(n_spins: f64, field: f64, dead_time: f64, gamma_e: f64) -> Result<f64> {
    ensure(n_spins >= 0.0 && field >= 0.0 && dead_time >= 0.0, || "inputs must be non-negative".into())?;
    Ok(HBAR * 2.0 * PI * gamma_e * field * (n_spins / 2.0).sqrt() * dead_time.sqrt())
}

/// δθ = δτ/I·t²/2 with the short-time response t²/2, rad/√Hz.
pub fn projection_angle_noise(n_spins: f64, field: f64, dead_time: f64, inertia: f64, conversion_time: f64, gamma_e: f64) -> Result<f64> {
    ensure(inertia > 0.0, || format!("inertia must be positive, got {inertia}"))?;
    ensure(conversion_time >= 0.0, || format!("conversion time must be non-negative, got {conversion_time}"))?;
    Ok(projection_torque_noise(n_spins, field, dead_time, gamma_e)? / inertia * conversion_time.powi(2) / 2.0)
}

/// δθ/θ = √(2/N).
pub fn relative_projection_noise(n_spins: f64) -> Result<f64> {
    ensure(n_spins > 0.0, || format!("spin number must be positive, got {n_spins}"))?;
    Ok((2.0 / n_spins).sqrt())
}

/// √(k_B·T/(I·ω₀²))·√t_d, rad/√Hz.
pub fn thermal_angle_noise(gas_temp: f64, inertia: f64, omega0: f64, dead_time: f64) -> Result<f64> {
    ensure(gas_temp >= 0.0 && dead_time >= 0.0, || "temperature and dead time must be non-negative".into())?;
    ensure(inertia > 0.0 && omega0 > 0.0, || "inertia and trap frequency must be positive".into())?;
    Ok((K_B * gas_temp / (inertia * omega0 * omega0)).sqrt() * dead_time.sqrt())
}

/// δτ = √(4·k_B·T·I·γ_g/δt), N·m.
pub fn resonant_torque_limit(gas_temp: f64, inertia: f64, gamma_g: f64, measurement_time: f64) -> Result<f64> {
    ensure(gas_temp >= 0.0 && inertia >= 0.0 && gamma_g >= 0.0, || "inputs must be non-negative".into())?;
    ensure(measurement_time > 0.0, || format!("measurement time must be positive, got {measurement_time}"))?;
    Ok((4.0 * K_B * gas_temp * inertia * gamma_g / measurement_time).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetEntry {
    pub quantity: String,
    pub value: f64,
    pub unit: String,
}

/// Every estimate for one set of inputs.
pub fn budget(inputs: &SensitivityInputs) -> Result<Vec<BudgetEntry>> {
    inputs.validate()?;
    let i = inputs;
    let row = |q: &str, value: f64, unit: &str| BudgetEntry { quantity: q.into(), value, unit: unit.into() };
    Ok(vec![
        row("shot_noise_field", shot_noise_field_sensitivity(i.delta_x, i.ramsey_time, i.dead_time, i.gamma_e)?, "T/sqrt(Hz)"),
        row("shot_noise_angle", shot_noise_angle_sensitivity(i.x0, i.contrast, i.theta_span, i.dead_time)?.value, "rad/sqrt(Hz)"),
        row("projection_torque", projection_torque_noise(i.n_spins, i.field, i.dead_time, i.gamma_e)?, "N m/sqrt(Hz)"),
        row(
            "projection_angle",
            projection_angle_noise(i.n_spins, i.field, i.dead_time, i.inertia, i.conversion_time, i.gamma_e)?,
            "rad/sqrt(Hz)",
        ),
        row("relative_projection", relative_projection_noise(i.n_spins)?, "1"),
        row("thermal_angle", thermal_angle_noise(i.gas_temp, i.inertia, i.omega0, i.dead_time)?, "rad/sqrt(Hz)"),
        row("resonant_torque_limit", resonant_torque_limit(i.gas_temp, i.inertia, i.gamma_g, i.measurement_time)?, "N m"),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::libration::{langevin_ensemble, InitialCondition, LangevinOptions, SpinTorqueModel, TrapParams};

    const GAMMA_E: f64 = 28e9;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn ramsey_examples() {
        assert_eq!(ramsey_signal(1e4, 0.0, 1e-7, GAMMA_E, RamseyForm::Exact).unwrap(), 1e4);
        let quarter = 0.25 / (GAMMA_E * 1e-7);
        assert!((ramsey_signal(1e4, quarter, 1e-7, GAMMA_E, RamseyForm::Exact).unwrap() - 5e3).abs() < 1e-9);
        // About mid-fringe the exact change is Δx·sin(2φ)/2, the linear one Δx·φ.
        for phi in [1e-3, 0.01, 0.05, 0.0999] {
            let db = phi / (PI * GAMMA_E * 1e-7);
            let exact = 5e3 - ramsey_signal(1e4, quarter + db, 1e-7, GAMMA_E, RamseyForm::Exact).unwrap();
            let lin = ramsey_signal(1e4, db, 1e-7, GAMMA_E, RamseyForm::Linearized).unwrap();
            assert!(rel(exact, lin) < 0.01);
        }
        assert!(ramsey_signal(1e4, 0.0, -1.0, GAMMA_E, RamseyForm::Exact).is_err());
    }

    #[test]
    fn field_sensitivity_examples() {
        let base = shot_noise_field_sensitivity(1e4, 100e-9, 10e-3, GAMMA_E).unwrap();
        assert!(rel(base, 5.05e-7) < 0.02, "{base}");
        let unattenuated = shot_noise_field_sensitivity(1e8, 100e-9, 10e-3, GAMMA_E).unwrap();
        assert!(rel(unattenuated, 5.05e-9) < 0.02);
        let improved = shot_noise_field_sensitivity(1e8, 1e-6, 100e-6, GAMMA_E).unwrap();
        assert!(rel(improved, 5e-11) < 0.1);
        assert!(shot_noise_field_sensitivity(0.0, 1e-7, 1e-2, GAMMA_E).is_err());
        assert!(shot_noise_field_sensitivity(1e4, 0.0, 1e-2, GAMMA_E).is_err());
        // Exact Δx^(−1/2) and T^(−1) scaling.
        let s = |dx: f64, t: f64| shot_noise_field_sensitivity(dx, t, 1e-2, GAMMA_E).unwrap();
        assert!(rel(s(4e4, 1e-7), base / 2.0) < 1e-14);
        assert!(rel(s(1e4, 3e-7), base / 3.0) < 1e-14);
    }

    #[test]
    fn angle_sensitivity_examples() {
        let a = shot_noise_angle_sensitivity(1e4, 0.5, 0.0698, 10e-3).unwrap();
        assert!(rel(a.value, 1.2e-4) < 0.25 && a.warning.is_none());
        // The C = ½ worked form, span·√3/√x₀·√t_d.
        assert!(rel(a.value, 0.0698 * 3f64.sqrt() / 100.0 * 0.1) < 1e-14);
        let b = shot_noise_angle_sensitivity(4e4, 0.5, 0.0698, 10e-3).unwrap();
        assert!(rel(b.value, a.value / 2.0) < 1e-14);
        let z = shot_noise_angle_sensitivity(1e4, 0.5, 0.0, 10e-3).unwrap();
        assert_eq!(z.value, 0.0);
        assert!(z.warning.is_some());
        assert!(shot_noise_angle_sensitivity(1e4, 1.0, 0.07, 1e-2).is_err());
        assert!(shot_noise_angle_sensitivity(1e4, 0.0, 0.07, 1e-2).is_err());
    }

    #[test]
    fn projection_examples() {
        let t = projection_torque_noise(1e8, 0.027, 10e-3, GAMMA_E).unwrap();
        assert!((1e-22..=1e-21).contains(&t));
        assert!(rel(t, 3.54e-22) < 0.01);
        assert_eq!(projection_torque_noise(0.0, 0.027, 10e-3, GAMMA_E).unwrap(), 0.0);
        assert!(rel(projection_torque_noise(4e8, 0.027, 10e-3, GAMMA_E).unwrap(), 2.0 * t) < 1e-14);
        let a = projection_angle_noise(1e8, 0.027, 10e-3, 1e-23, 100e-6, GAMMA_E).unwrap();
        assert!(a > 1e-7 / 3.0 && a < 3e-7, "{a}");
        assert_eq!(projection_angle_noise(1e8, 0.027, 10e-3, 1e-23, 0.0, GAMMA_E).unwrap(), 0.0);
        let r = relative_projection_noise(1e8).unwrap();
        assert!(rel(r, 1.414e-4) < 1e-3 && rel(r, 1e-4) < 0.5);
    }

    #[test]
    fn thermal_and_resonant_examples() {
        let th = thermal_angle_noise(300.0, 1e-23, 2.0 * PI * 1e3, 10e-3).unwrap();
        assert!(rel(th, 3.2e-4) < 0.1 && rel(th, 3e-4) < 0.1);
        assert_eq!(thermal_angle_noise(0.0, 1e-23, 6283.0, 1e-2).unwrap(), 0.0);
        let r = resonant_torque_limit(300.0, 1e-23, 6280.0, 1.0).unwrap();
        let oracle = (4.0 * 1.380649e-23 * 300.0 * 1e-23 * 6280.0f64).sqrt();
        assert!(rel(r, oracle) < 1e-12 && rel(r, 3.2256e-20) < 1e-3);
        assert!(rel(resonant_torque_limit(300.0, 1e-23, 6280.0, 4.0).unwrap(), r / 2.0) < 1e-14);
        assert!(resonant_torque_limit(300.0, 1e-23, 6280.0, 1e12).unwrap() < 1e-25);
    }

    #[test]
    fn everything_scales_with_root_dead_time() {
        for td in [1e-4, 1e-3, 1e-2, 1e-1] {
            let k = (td / 1e-4f64).sqrt();
            let f = |t: f64| {
                [
                    shot_noise_field_sensitivity(1e4, 1e-7, t, GAMMA_E).unwrap(),
                    shot_noise_angle_sensitivity(1e4, 0.5, 0.07, t).unwrap().value,
                    projection_torque_noise(1e8, 0.027, t, GAMMA_E).unwrap(),
                    projection_angle_noise(1e8, 0.027, t, 1e-23, 1e-4, GAMMA_E).unwrap(),
                    thermal_angle_noise(300.0, 1e-23, 6283.0, t).unwrap(),
                ]
            };
            for (a, b) in f(td).iter().zip(f(1e-4)) {
                assert!(rel(*a, k * b) < 1e-12);
            }
        }
    }

    #[test]
    fn thermal_spread_matches_langevin_equipartition() {
        let trap = TrapParams::new(1.3e-23, 2300.0, 6280.0).unwrap();
        let r = langevin_ensemble(&InitialCondition::Thermal(Default::default()), &trap, &SpinTorqueModel::none(), &[0.0, 2e-3], 300.0, 4000, 5, &LangevinOptions::default()).unwrap();
        let sigma = thermal_angle_noise(300.0, trap.inertia, trap.omega, 1.0).unwrap();
        assert!(rel(r.var_theta[1], sigma * sigma) < 0.05, "{} {}", r.var_theta[1], sigma * sigma);
    }

    #[test]
    fn budget_lists_all_quantities() {
        let inputs = SensitivityInputs {
            delta_x: 1e4,
            x0: 1e4,
            contrast: 0.5,
            ramsey_time: 1e-7,
            dead_time: 1e-2,
            n_spins: 1e8,
            field: 0.027,
            inertia: 1e-23,
            omega0: 2.0 * PI * 1e3,
            gas_temp: 300.0,
            gamma_g: 6280.0,
            theta_span: 0.0698,
            gamma_e: GAMMA_E,
            conversion_time: 1e-4,
            measurement_time: 1.0,
            rotation_time: None,
        };
        let b = budget(&inputs).unwrap();
        assert_eq!(b.len(), 7);
        assert!(rel(b[0].value, 5.05e-7) < 0.02);
        assert!(budget(&SensitivityInputs { delta_x: 2e4, ..inputs }).is_err());
        assert!(budget(&SensitivityInputs { gas_temp: -1.0, ..inputs }).is_err());
    }
}

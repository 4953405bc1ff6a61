use super::{acceleration, default_step, step_plan, LibrationState, LibrationTrajectory, SpinTorqueModel, TrapParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EvolveOptions {
    /// Largest RK4 step; defaults to min(1/ω, 1/γ_g, T1, 1/f_ac)/100.
    pub max_step: Option<f64>,
}

pub(crate) fn rk4_step(trap: &TrapParams, torque: &SpinTorqueModel, s: [f64; 2], t: f64, h: f64) -> [f64; 2] {
    let f = |y: [f64; 2], t: f64| [y[1], acceleration(trap, torque, y[0], y[1], t)];
    let k1 = f(s, t);
    let k2 = f([s[0] + 0.5 * h * k1[0], s[1] + 0.5 * h * k1[1]], t + 0.5 * h);
    let k3 = f([s[0] + 0.5 * h * k2[0], s[1] + 0.5 * h * k2[1]], t + 0.5 * h);
    let k4 = f([s[0] + h * k3[0], s[1] + h * k3[1]], t + h);
    [
        s[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        s[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

pub fn deterministic_evolve(
    state0: &LibrationState,
    trap: &TrapParams,
    torque: &SpinTorqueModel,
    t_grid: &[f64],
) -> Result<LibrationTrajectory> {
    deterministic_evolve_with(state0, trap, torque, t_grid, &EvolveOptions::default())
}

/// Fixed-step RK4 solution sampled on `t_grid` (state0 is taken at t = 0).
///
/// For an undamped, undriven, torque-free oscillator the energy is monitored
/// and growth beyond 1e-3 relative is reported as an integration failure.
pub fn deterministic_evolve_with(
    state0: &LibrationState,
    trap: &TrapParams,
    torque: &SpinTorqueModel,
    t_grid: &[f64],
    options: &EvolveOptions,
) -> Result<LibrationTrajectory> {
    trap.validate()?;
    torque.validate()?;
    let span = t_grid.last().copied().unwrap_or(0.0);
    let h_max = options.max_step.unwrap_or_else(|| default_step(trap, torque, span));
    let plan = step_plan(t_grid, torque.onset_time, h_max)?;

    let conservative = trap.gamma_g == 0.0 && trap.drive.is_none() && !torque.is_active();
    let energy = |s: [f64; 2]| 0.5 * s[1] * s[1] + 0.5 * trap.omega * trap.omega * s[0] * s[0];
    let e0 = energy([state0.theta, state0.theta_dot]);

    let mut out = LibrationTrajectory {
        times: t_grid.to_vec(),
        theta: Vec::with_capacity(t_grid.len()),
        theta_dot: Vec::with_capacity(t_grid.len()),
    };
    let mut s = [state0.theta, state0.theta_dot];
    for (t0, h, n, sample) in plan {
        for k in 0..n {
            s = rk4_step(trap, torque, s, t0 + k as f64 * h, h);
        }
        if !(s[0].is_finite() && s[1].is_finite()) {
            return Err(Error::IntegrationFailure(format!("non-finite state near t = {t0:e} s")));
        }
        if conservative && e0 > 0.0 {
            let growth = (energy(s) - e0) / e0;
            if growth > 1e-3 {
                return Err(Error::IntegrationFailure(format!(
                    "energy grew by {growth:e} (relative) in a conservative run; reduce the step"
                )));
            }
        }
        if sample.is_some() {
            out.theta.push(s[0]);
            out.theta_dot.push(s[1]);
        }
    }
    Ok(out)
}

//! Finite-volume solver for the phase-space density p(θ, θ̇, t):
//!
//! ```text
//! ∂_t p = −∂_θ(θ̇ p) − ∂_θ̇(a(θ, θ̇, t) p) + D ∂²_θ̇ p,    D = γ_g k_B T / I
//! ```
//!
//! Advection uses MUSCL reconstruction with a minmod limiter and upwind face
//! fluxes, diffusion a central flux, and time stepping the two-stage SSP
//! Runge-Kutta scheme. Every boundary face carries zero flux, so mass only
//! changes through the clipping of round-off negatives.

use serde::{Deserialize, Serialize};

use super::{acceleration, deterministic_evolve, step_plan, LibrationState, SpinTorqueModel, TrapParams};
use crate::error::{ensure, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl UniformGrid {
    pub fn new(start: f64, end: f64, len: usize) -> Result<Self> {
        ensure(len >= 3, || format!("grid needs at least 3 points, got {len}"))?;
        ensure(start.is_finite() && end.is_finite() && end > start, || {
            format!("grid bounds must be finite and increasing ({start}, {end})")
        })?;
        Ok(UniformGrid { start, step: (end - start) / (len - 1) as f64, len })
    }

    pub fn point(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn end(&self) -> f64 {
        self.point(self.len - 1)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.point(i)).collect()
    }

    /// Trapezoid weight of node i.
    fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.len {
            0.5 * self.step
        } else {
            self.step
        }
    }
}

/// Density sampled on a θ × θ̇ grid; `values[i * n_theta_dot + j]` is p(θ_i, θ̇_j).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpacePdf {
    pub theta: UniformGrid,
    pub theta_dot: UniformGrid,
    pub values: Vec<f64>,
}

impl PhaseSpacePdf {
    /// Validates non-negativity and unit trapezoidal mass (1e-6).
    pub fn new(theta: UniformGrid, theta_dot: UniformGrid, values: Vec<f64>) -> Result<Self> {
        let pdf = Self::raw(theta, theta_dot, values)?;
        let mass = pdf.mass();
        ensure((mass - 1.0).abs() <= 1e-6, || format!("density integrates to {mass}, not 1"))?;
        Ok(pdf)
    }

    /// Rescales arbitrary non-negative values to unit mass.
    pub fn normalized(theta: UniformGrid, theta_dot: UniformGrid, values: Vec<f64>) -> Result<Self> {
        let mut pdf = Self::raw(theta, theta_dot, values)?;
        let mass = pdf.mass();
        ensure(mass > 0.0 && mass.is_finite(), || "density has no mass on the grid".into())?;
        pdf.values.iter_mut().for_each(|v| *v /= mass);
        Ok(pdf)
    }

    fn raw(theta: UniformGrid, theta_dot: UniformGrid, values: Vec<f64>) -> Result<Self> {
        ensure(values.len() == theta.len * theta_dot.len, || {
            format!("expected {} values, got {}", theta.len * theta_dot.len, values.len())
        })?;
        ensure(values.iter().all(|v| *v >= 0.0 && v.is_finite()), || {
            "density values must be finite and non-negative".into()
        })?;
        Ok(PhaseSpacePdf { theta, theta_dot, values })
    }

    /// Product Gaussian, renormalised on the grid.
    pub fn gaussian(theta: UniformGrid, theta_dot: UniformGrid, mean: &LibrationState, sigma_theta: f64, sigma_theta_dot: f64) -> Result<Self> {
        ensure(sigma_theta > 0.0 && sigma_theta_dot > 0.0, || "Gaussian widths must be positive".into())?;
        let mut values = Vec::with_capacity(theta.len * theta_dot.len);
        for i in 0..theta.len {
            let x = (theta.point(i) - mean.theta) / sigma_theta;
            for j in 0..theta_dot.len {
                let y = (theta_dot.point(j) - mean.theta_dot) / sigma_theta_dot;
                values.push((-0.5 * (x * x + y * y)).exp());
            }
        }
        Self::normalized(theta, theta_dot, values)
    }

    /// Boltzmann density exp(−β(Iθ̇²/2 + Iω²θ²/2)) of the bare trap.
    pub fn boltzmann(theta: UniformGrid, theta_dot: UniformGrid, trap: &TrapParams, temperature: f64) -> Result<Self> {
        ensure(temperature > 0.0 && trap.omega > 0.0, || "Boltzmann density needs T > 0 and ω > 0".into())?;
        let (st, sv) = trap.thermal_sigmas(temperature);
        Self::gaussian(theta, theta_dot, &LibrationState::default(), st, sv)
    }

    /// All mass on the node nearest to `state`.
    pub fn point_mass(theta: UniformGrid, theta_dot: UniformGrid, state: &LibrationState) -> Result<Self> {
        let nearest = |g: &UniformGrid, x: f64| ((x - g.start) / g.step).round();
        let (i, j) = (nearest(&theta, state.theta), nearest(&theta_dot, state.theta_dot));
        ensure(i >= 0.0 && j >= 0.0 && (i as usize) < theta.len && (j as usize) < theta_dot.len, || {
            "point mass lies outside the grid".into()
        })?;
        let mut values = vec![0.0; theta.len * theta_dot.len];
        values[i as usize * theta_dot.len + j as usize] = 1.0;
        Self::normalized(theta, theta_dot, values)
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.theta_dot.len + j]
    }

    fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        let mut total = 0.0;
        for i in 0..self.theta.len {
            let (x, wx) = (self.theta.point(i), self.theta.weight(i));
            let mut row = 0.0;
            for j in 0..self.theta_dot.len {
                row += self.theta_dot.weight(j) * f(x, self.theta_dot.point(j)) * self.at(i, j);
            }
            total += wx * row;
        }
        total
    }

    pub fn mass(&self) -> f64 {
        self.integrate(|_, _| 1.0)
    }

    pub fn mean_theta_dot(&self) -> f64 {
        self.integrate(|_, v| v)
    }

    pub fn variance_theta(&self) -> f64 {
        let m = first_moment(self);
        self.integrate(|x, _| (x - m) * (x - m))
    }

    pub fn variance_theta_dot(&self) -> f64 {
        let m = self.mean_theta_dot();
        self.integrate(|_, v| (v - m) * (v - m))
    }

    /// Marginal density of θ.
    pub fn marginal_theta(&self) -> Vec<f64> {
        (0..self.theta.len)
            .map(|i| (0..self.theta_dot.len).map(|j| self.theta_dot.weight(j) * self.at(i, j)).sum())
            .collect()
    }

    /// Mass within `band` nodes of any edge.
    pub fn edge_mass(&self, band: usize) -> f64 {
        let (n, m) = (self.theta.len, self.theta_dot.len);
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..m {
                if i < band || j < band || i + band >= n || j + band >= m {
                    total += self.theta.weight(i) * self.theta_dot.weight(j) * self.at(i, j);
                }
            }
        }
        total
    }

    /// Grid covering the noiseless trajectory from `center` up to `t_end`,
    /// padded by `n_sigma` thermal standard deviations in both coordinates.
    #[allow(clippy::too_many_arguments)]
    pub fn covering_grids(
        center: &LibrationState,
        trap: &TrapParams,
        torque: &SpinTorqueModel,
        temperature: f64,
        t_end: f64,
        n_sigma: f64,
        n_theta: usize,
        n_theta_dot: usize,
    ) -> Result<(UniformGrid, UniformGrid)> {
        let ts: Vec<f64> = (0..=2000).map(|k| t_end * k as f64 / 2000.0).collect();
        let traj = deterministic_evolve(center, trap, torque, &ts)?;
        let span = |xs: &[f64]| xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
        let (t_lo, t_hi) = span(&traj.theta);
        let (v_lo, v_hi) = span(&traj.theta_dot);
        let (st, sv) = trap.thermal_sigmas(temperature);
        let pad = |lo: f64, hi: f64, s: f64| {
            let s = if s.is_finite() && s > 0.0 { n_sigma * s } else { 0.0 };
            let extra = (0.05 * (hi - lo)).max(s).max(1e-12);
            (lo - extra, hi + extra)
        };
        let (a, b) = pad(t_lo, t_hi, st);
        let (c, d) = pad(v_lo, v_hi, sv);
        Ok((UniformGrid::new(a, b, n_theta)?, UniformGrid::new(c, d, n_theta_dot)?))
    }
}

/// ⟨θ⟩ by trapezoidal quadrature.
pub fn first_moment(pdf: &PhaseSpacePdf) -> f64 {
    pdf.integrate(|x, _| x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FokkerPlanckOptions {
    /// Time step; defaults to the largest stable step.
    pub dt: Option<f64>,
    /// Safety factor on dt·(|θ̇|/Δθ + |a|/Δθ̇ + 2D/Δθ̇²).
    pub cfl: f64,
    /// Width in nodes of the edge band watched for leakage.
    pub leak_band: usize,
    pub leak_limit: f64,
}

impl Default for FokkerPlanckOptions {
    fn default() -> Self {
        FokkerPlanckOptions { dt: None, cfl: 0.4, leak_band: 2, leak_limit: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FokkerPlanckRun {
    pub times: Vec<f64>,
    pub pdfs: Vec<PhaseSpacePdf>,
    pub dt: f64,
    pub steps: usize,
}

impl FokkerPlanckRun {
    pub fn first_moments(&self) -> Vec<f64> {
        self.pdfs.iter().map(first_moment).collect()
    }
}

struct Operator<'a> {
    trap: &'a TrapParams,
    torque: &'a SpinTorqueModel,
    theta: Vec<f64>,
    v: Vec<f64>,
    v_face: Vec<f64>,
    dth: f64,
    dv: f64,
    diff: f64,
    base: Vec<f64>,
}

fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

impl Operator<'_> {
    /// out = L(p) at time t.
    fn apply(&mut self, p: &[f64], t: f64, out: &mut [f64]) {
        let (n, m) = (self.theta.len(), self.v.len());
        out.iter_mut().for_each(|x| *x = 0.0);
        // Position-dependent part of the acceleration at this time.
        for (b, &x) in self.base.iter_mut().zip(&self.theta) {
            *b = acceleration(self.trap, self.torque, x, 0.0, t);
        }
        let gamma = self.trap.gamma_g;
        let (inv_dth, inv_dv) = (1.0 / self.dth, 1.0 / self.dv);

        // θ̇-direction: advection by a(θ_i, θ̇) plus diffusion.
        for i in 0..n {
            let row = &p[i * m..(i + 1) * m];
            let o = &mut out[i * m..(i + 1) * m];
            let slope = |j: usize| if j == 0 || j + 1 == m { 0.0 } else { minmod(row[j] - row[j - 1], row[j + 1] - row[j]) };
            let mut s_left = slope(0);
            for j in 0..m - 1 {
                let s_right = slope(j + 1);
                let a = self.base[i] - gamma * self.v_face[j];
                let upwind = if a > 0.0 { row[j] + 0.5 * s_left } else { row[j + 1] - 0.5 * s_right };
                let flux = (a * upwind - self.diff * (row[j + 1] - row[j]) * inv_dv) * inv_dv;
                o[j] -= flux;
                o[j + 1] += flux;
                s_left = s_right;
            }
        }

        // θ-direction: advection at velocity θ̇_j.
        let at = |i: usize, j: usize| p[i * m + j];
        let slope = |i: usize, j: usize| {
            if i == 0 || i + 1 == n {
                0.0
            } else {
                minmod(at(i, j) - at(i - 1, j), at(i + 1, j) - at(i, j))
            }
        };
        for i in 0..n - 1 {
            for j in 0..m {
                let v = self.v[j];
                let upwind = if v > 0.0 { at(i, j) + 0.5 * slope(i, j) } else { at(i + 1, j) - 0.5 * slope(i + 1, j) };
                let flux = v * upwind * inv_dth;
                out[i * m + j] -= flux;
                out[(i + 1) * m + j] += flux;
            }
        }
    }
}

/// Evolves `pdf0` (taken at t = 0) and returns the density at each time of `t_grid`.
pub fn fokker_planck_evolve(
    pdf0: &PhaseSpacePdf,
    trap: &TrapParams,
    torque: &SpinTorqueModel,
    temperature: f64,
    t_grid: &[f64],
    options: &FokkerPlanckOptions,
) -> Result<FokkerPlanckRun> {
    trap.validate()?;
    torque.validate()?;
    ensure(temperature >= 0.0 && temperature.is_finite(), || {
        format!("temperature must be non-negative, got {temperature}")
    })?;
    ensure(options.cfl > 0.0 && options.cfl <= 1.0, || format!("CFL factor must lie in (0, 1], got {}", options.cfl))?;
    let mass0 = pdf0.mass();
    ensure((mass0 - 1.0).abs() <= 1e-6, || format!("initial density integrates to {mass0}, not 1"))?;

    let (tg, vg) = (pdf0.theta, pdf0.theta_dot);
    let theta = tg.points();
    let v = vg.points();
    let v_face: Vec<f64> = v.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let diff = trap.diffusion(temperature);

    let v_max = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let th_max = theta.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let depth = trap.drive.map_or(0.0, |d| d.depth.abs());
    let a_max = trap.gamma_g * v_max + trap.omega * trap.omega * (1.0 + depth) * th_max + torque.amplitude() / trap.inertia;
    let rate = v_max / tg.step + a_max / vg.step + 2.0 * diff / (vg.step * vg.step);
    let limit = if rate > 0.0 { options.cfl / rate } else { f64::INFINITY };
    let dt = match options.dt {
        Some(dt) if dt > limit => return Err(Error::StepSize { dt, limit }),
        Some(dt) => {
            ensure(dt > 0.0, || format!("time step must be positive, got {dt}"))?;
            dt
        }
        None if limit.is_finite() => limit,
        None => t_grid.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE),
    };
    let plan = step_plan(t_grid, torque.onset_time, dt)?;

    let mut op = Operator { trap, torque, base: vec![0.0; theta.len()], theta, v, v_face, dth: tg.step, dv: vg.step, diff };
    let len = pdf0.values.len();
    let mut p = pdf0.values.clone();
    let (mut k1, mut stage, mut k2) = (vec![0.0; len], vec![0.0; len], vec![0.0; len]);
    let mut out = FokkerPlanckRun { times: t_grid.to_vec(), pdfs: Vec::with_capacity(t_grid.len()), dt, steps: 0 };

    for (t0, h, n, sample) in plan {
        for s in 0..n {
            let t = t0 + s as f64 * h;
            op.apply(&p, t, &mut k1);
            for ((st, x), k) in stage.iter_mut().zip(&p).zip(&k1) {
                *st = x + h * k;
            }
            op.apply(&stage, t + h, &mut k2);
            for ((x, st), k) in p.iter_mut().zip(&stage).zip(&k2) {
                *x = (0.5 * (*x + st + h * k)).max(0.0);
            }
        }
        out.steps += n;
        if !p.iter().all(|x| x.is_finite()) {
            return Err(Error::IntegrationFailure(format!("non-finite density near t = {t0:e} s")));
        }
        let pdf = PhaseSpacePdf { theta: tg, theta_dot: vg, values: p.clone() };
        let leak = pdf.edge_mass(options.leak_band);
        if leak > options.leak_limit {
            return Err(Error::BoundaryLeak { mass: leak, limit: options.leak_limit });
        }
        if sample.is_some() {
            out.pdfs.push(pdf);
        }
    }
    Ok(out)
}

//! Derivative-free minimisation (Nelder–Mead) and small fitting helpers.

use crate::error::{ensure, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop when the spread of simplex values falls below this.
    pub f_tol: f64,
    /// ... and every vertex lies within this (per coordinate) of the best.
    pub x_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions { max_evals: 4000, f_tol: 1e-12, x_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Nelder–Mead with the standard coefficients (reflection 1, expansion 2,
/// contraction ½, shrink ½). `step[i]` sets the initial simplex edge along
/// coordinate i. Non-finite objective values are treated as +∞.
pub fn nelder_mead(f: impl Fn(&[f64]) -> f64, x0: &[f64], step: &[f64], options: &NelderMeadOptions) -> Result<Minimum> {
    let n = x0.len();
    ensure(n > 0 && step.len() == n, || "start point and step must have the same non-zero length".into())?;
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += if step[i] != 0.0 { step[i] } else { 1e-3 };
        let v = eval(&x);
        simplex.push((x, v));
    }
    let mut evals = n + 1;
    let mut converged = false;

    while evals < options.max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let spread = if worst.is_finite() { (worst - best).abs() } else { f64::INFINITY };
        let size = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread <= options.f_tol && size <= options.x_tol {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&simplex[n].0).map(|(c, w)| c + t * (c - w)).collect() };

        let xr = along(1.0);
        let fr = eval(&xr);
        evals += 1;
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = eval(&xe);
            evals += 1;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let x = along(0.5);
            let v = eval(&x);
            (x, v)
        } else {
            let x = along(-0.5);
            let v = eval(&x);
            (x, v)
        };
        evals += 1;
        if fc < simplex[n].1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for (x, v) in simplex.iter_mut().skip(1) {
            for (xi, b) in x.iter_mut().zip(&x_best) {
                *xi = b + 0.5 * (*xi - b);
            }
            *v = eval(x);
        }
        evals += n;
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Ok(Minimum { x, value, evals, converged })
}

/// Amplitude and time constant of y = A·exp(−t/τ), least squares. A may be
/// negative; its sign is taken from the sum of y.
///
/// Starts from a log-linear fit of the points with that sign and polishes
/// with Nelder–Mead on (A, ln τ).
pub fn fit_exponential_decay(t: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    ensure(t.len() == y.len() && t.len() >= 3, || "need at least 3 (t, y) pairs".into())?;
    if y.iter().sum::<f64>() < 0.0 {
        let flipped: Vec<f64> = y.iter().map(|v| -v).collect();
        let (a, tau) = fit_exponential_decay(t, &flipped)?;
        return Ok((-a, tau));
    }
    let pos: Vec<(f64, f64)> = t.iter().zip(y).filter(|(_, &v)| v > 0.0).map(|(&a, &b)| (a, b.ln())).collect();
    ensure(pos.len() >= 2, || "too few positive values to start an exponential fit".into())?;
    let m = pos.len() as f64;
    let (st, sy) = pos.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mt, my) = (st / m, sy / m);
    let sxx: f64 = pos.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pos.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    ensure(sxx > 0.0, || "exponential fit needs distinct times".into())?;
    let slope = sxy / sxx;
    let span = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - t.iter().cloned().fold(f64::INFINITY, f64::min);
    let tau0 = if slope < 0.0 { -1.0 / slope } else { span };
    let a0 = (my - slope * mt).exp();
    let cost = |p: &[f64]| {
        let tau = p[1].exp();
        t.iter().zip(y).map(|(ti, yi)| (p[0] * (-ti / tau).exp() - yi).powi(2)).sum::<f64>()
    };
    let opts = NelderMeadOptions { max_evals: 4000, f_tol: 0.0, x_tol: 1e-12 };
    let best = nelder_mead(cost, &[a0, tau0.ln()], &[0.1 * a0.abs().max(1e-300), 0.1], &opts)?;
    Ok((best.x[0], best.x[1].exp()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead(f, &[-1.2, 1.0], &[0.1, 0.1], &NelderMeadOptions { max_evals: 10_000, ..Default::default() }).unwrap();
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn quadratic_bowl_in_three_dimensions() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2) + 0.5 * (x[2] - 0.25).powi(2);
        let m = nelder_mead(f, &[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0], &NelderMeadOptions::default()).unwrap();
        for (x, want) in m.x.iter().zip([3.0, -1.0, 0.25]) {
            assert!((x - want).abs() < 1e-5);
        }
    }

    #[test]
    fn nan_objective_is_avoided() {
        let f = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { (x[0] - 0.5).powi(2) };
        let m = nelder_mead(f, &[2.0], &[0.5], &NelderMeadOptions::default()).unwrap();
        assert!((m.x[0] - 0.5).abs() < 1e-5);
    }

    #[test]
    fn exponential_fit_recovers_parameters() {
        let t: Vec<f64> = (0..12).map(|k| k as f64 * 2e-4).collect();
        let y: Vec<f64> = t.iter().map(|x| 3.5 * (-x / 6e-4).exp()).collect();
        let (a, tau) = fit_exponential_decay(&t, &y).unwrap();
        assert!((a - 3.5).abs() < 1e-6 && (tau - 6e-4).abs() < 1e-9);
        assert!(fit_exponential_decay(&t[..2], &y[..2]).is_err());
        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        let (a, tau) = fit_exponential_decay(&t, &neg).unwrap();
        assert!((a + 3.5).abs() < 1e-6 && (tau - 6e-4).abs() < 1e-9);
    }
}

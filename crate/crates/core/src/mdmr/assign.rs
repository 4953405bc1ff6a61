//! Matching measured line centres to model lines.

use crate::error::{ensure, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// (measured index, model index), one pair per measured centre.
    pub pairs: Vec<(usize, usize)>,
    /// Σ (measured − model)².
    pub cost: f64,
}

impl Assignment {
    pub fn rms(&self) -> f64 {
        (self.cost / self.pairs.len() as f64).sqrt()
    }
}

fn sorted_order(x: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    idx
}

/// Minimum-cost injective map from measured to model centres under squared
/// distance.
///
/// For a convex cost on the line some optimal matching preserves order, so a
/// dynamic programme over the two sorted lists finds it in O(m·n).
pub fn optimal_assignment(model: &[f64], measured: &[f64]) -> Result<Assignment> {
    let (n, m) = (model.len(), measured.len());
    ensure(m >= 1 && m <= n, || format!("cannot assign {m} measured centres to {n} model lines"))?;
    let (om, ox) = (sorted_order(model), sorted_order(measured));
    Ok(dp_assign(model, measured, &om, &ox))
}

fn dp_assign(model: &[f64], measured: &[f64], om: &[usize], ox: &[usize]) -> Assignment {
    let (n, m) = (model.len(), measured.len());
    // best[i][j]: cost of matching the first i measured into the first j model lines.
    let w = n + 1;
    let mut best = vec![f64::INFINITY; (m + 1) * w];
    best[..=n].fill(0.0);
    for i in 1..=m {
        let x = measured[ox[i - 1]];
        for j in i..=n {
            let skip = best[i * w + j - 1];
            let take = best[(i - 1) * w + j - 1] + (x - model[om[j - 1]]).powi(2);
            best[i * w + j] = if take <= skip { take } else { skip };
        }
    }
    let cost = best[m * w + n];
    let mut pairs = Vec::with_capacity(m);
    let (mut i, mut j) = (m, n);
    while i > 0 {
        let take = best[(i - 1) * w + j - 1] + (measured[ox[i - 1]] - model[om[j - 1]]).powi(2);
        if j == i || take <= best[i * w + j - 1] {
            pairs.push((ox[i - 1], om[j - 1]));
            i -= 1;
        }
        j -= 1;
    }
    pairs.sort_unstable();
    Assignment { pairs, cost }
}

/// Squared cost of the order-preserving assignment with fixed-size buffers;
/// the fit's inner loop. `model` and `measured` must be sorted.
pub(crate) fn sorted_cost(model: &[f64; 8], measured: &[f64]) -> f64 {
    let m = measured.len();
    let mut prev = [0.0f64; 9];
    let mut cur = [f64::INFINITY; 9];
    for (i, &x) in measured.iter().enumerate() {
        cur[..=i].iter_mut().for_each(|c| *c = f64::INFINITY);
        for j in i + 1..=8 - (m - 1 - i) {
            let take = prev[j - 1] + (x - model[j - 1]).powi(2);
            cur[j] = take.min(cur[j - 1]);
        }
        prev = cur;
    }
    prev[8]
}

/// Each measured centre in turn (ascending) takes the nearest free model line.
pub fn greedy_assignment(model: &[f64], measured: &[f64]) -> Result<Assignment> {
    let (n, m) = (model.len(), measured.len());
    ensure(m >= 1 && m <= n, || format!("cannot assign {m} measured centres to {n} model lines"))?;
    let mut used = vec![false; n];
    let mut pairs = Vec::with_capacity(m);
    let mut cost = 0.0;
    for i in sorted_order(measured) {
        let j = (0..n)
            .filter(|&j| !used[j])
            .min_by(|&a, &b| (measured[i] - model[a]).abs().total_cmp(&(measured[i] - model[b]).abs()))
            .expect("m ≤ n leaves a free line");
        used[j] = true;
        cost += (measured[i] - model[j]).powi(2);
        pairs.push((i, j));
    }
    pairs.sort_unstable();
    Ok(Assignment { pairs, cost })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(model: &[f64], measured: &[f64]) -> f64 {
        fn rec(model: &[f64], measured: &[f64], used: &mut Vec<bool>, i: usize) -> f64 {
            if i == measured.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..model.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.min((measured[i] - model[j]).powi(2) + rec(model, measured, used, i + 1));
                    used[j] = false;
                }
            }
            best
        }
        rec(model, measured, &mut vec![false; model.len()], 0)
    }

    #[test]
    fn matches_exhaustive_search_and_beats_greedy() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for trial in 0..300 {
            let m = 4 + trial % 5;
            let model: Vec<f64> = (0..8).map(|_| rng.random_range(2.0..3.5)).collect();
            let measured: Vec<f64> = (0..m).map(|_| rng.random_range(2.0..3.5)).collect();
            let a = optimal_assignment(&model, &measured).unwrap();
            let exact = brute(&model, &measured);
            assert!((a.cost - exact).abs() <= 1e-12 * (1.0 + exact), "{} {exact}", a.cost);
            let recomputed: f64 = a.pairs.iter().map(|&(i, j)| (measured[i] - model[j]).powi(2)).sum();
            assert!((recomputed - a.cost).abs() <= 1e-12);
            let mut used: Vec<usize> = a.pairs.iter().map(|p| p.1).collect();
            used.sort_unstable();
            used.dedup();
            assert_eq!(used.len(), m);
            assert!(a.cost <= greedy_assignment(&model, &measured).unwrap().cost + 1e-15);
            let mut sm: Vec<f64> = model.clone();
            sm.sort_by(f64::total_cmp);
            let mut sx = measured.clone();
            sx.sort_by(f64::total_cmp);
            let fixed: [f64; 8] = sm.try_into().unwrap();
            assert!((sorted_cost(&fixed, &sx) - exact).abs() <= 1e-12 * (1.0 + exact));
        }
    }

    #[test]
    fn greedy_can_be_strictly_worse() {
        let model = [0.0, 1.0];
        let measured = [0.6, 1.5];
        let g = greedy_assignment(&model, &measured).unwrap();
        let o = optimal_assignment(&model, &measured).unwrap();
        assert!(o.cost < g.cost);
        assert_eq!(o.pairs, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn too_many_measured_rejected() {
        assert!(optimal_assignment(&[1.0], &[1.0, 2.0]).is_err());
        assert!(optimal_assignment(&[1.0], &[]).is_err());
    }
}

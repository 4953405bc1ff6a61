//! Dicke weights against exact binomial coefficients.

use num_bigint::BigUint;
use smc_core::dicke::dicke_weights;

/// (m, e) with c ≈ m·2^e and m holding the top 64 bits of c.
fn split(c: &BigUint) -> (f64, i64) {
    let shift = c.bits().saturating_sub(64);
    let top: BigUint = c >> shift;
    (top.iter_u64_digits().next().unwrap_or(0) as f64, shift as i64)
}

/// C/2^n correctly rounded to within an ulp, or None when it is not a normal f64.
fn probability(c: &BigUint, n: u64) -> Option<f64> {
    let (m, shift) = split(c);
    let e = shift - n as i64;
    let half = (e / 2) as i32;
    let p = m * 2f64.powi(half) * 2f64.powi(e as i32 - half);
    (p >= f64::MIN_POSITIVE).then_some(p)
}

/// ln(C/2^n) for any size.
fn ln_probability(c: &BigUint, n: u64) -> f64 {
    let (m, shift) = split(c);
    m.ln() + (shift - n as i64) as f64 * std::f64::consts::LN_2
}

/// All C(n, k), k = 0..=n, by the multiplicative recurrence.
fn binomials(n: u64) -> Vec<BigUint> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut c = BigUint::from(1u32);
    out.push(c.clone());
    for k in 1..=n {
        c = c * BigUint::from(n - k + 1) / BigUint::from(k);
        out.push(c.clone());
    }
    out
}

#[test]
fn small_n_near_machine_precision() {
    for n in 1..=64u64 {
        let w = dicke_weights(n).unwrap();
        let exact = binomials(n);
        for (k, c) in exact.iter().enumerate() {
            let p = probability(c, n).unwrap();
            assert!((w.probability(k) - p).abs() <= 5e-14 * p, "n={n} k={k}");
        }
    }
}

#[test]
fn matches_binomial_up_to_ten_thousand() {
    for n in [100u64, 777, 1000, 4096, 10_000] {
        let w = dicke_weights(n).unwrap();
        let exact = binomials(n);
        for (k, c) in exact.iter().enumerate() {
            match probability(c, n) {
                Some(p) => assert!((w.probability(k) - p).abs() <= 1e-12 * p, "n={n} k={k}"),
                // Far tail: only the logarithm is representable; compare it to a few ulps.
                None => {
                    let l = ln_probability(c, n);
                    assert!((2.0 * w.log_weights[k] - l).abs() <= 8.0 * f64::EPSILON * l.abs(), "n={n} k={k}");
                }
            }
        }
        assert!(w.log_norm().abs() < 1e-10, "n={n}");
    }
}

#[test]
fn normalised_up_to_a_million() {
    for n in [12_345u64, 100_000, 1_000_000] {
        let w = dicke_weights(n).unwrap();
        assert!(w.log_norm().abs() < 1e-10, "n={n}: {}", w.log_norm());
        assert_eq!(w.argmax(), (n / 2) as usize);
    }
}

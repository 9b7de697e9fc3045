//! Gamma-family special functions, all in log space.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn ln_gamma_unchecked(a: f64) -> f64 {
    if a < 0.5 {
        // reflection: Γ(a)Γ(1-a) = π / sin(πa)
        return (PI / (PI * a).sin()).ln() - ln_gamma_unchecked(1.0 - a);
    }
    let x = a - 1.0;
    let mut sum = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        sum += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + sum.ln()
}

/// `ln Γ(a)` for `a > 0`.
pub fn log_gamma(a: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(format!("log_gamma needs a > 0, got {a}")));
    }
    // Γ(1) = Γ(2) = 1 exactly
    if a == 1.0 || a == 2.0 {
        return Ok(0.0);
    }
    Ok(ln_gamma_unchecked(a))
}

/// `ln B(α, β) = ln Γ(α) + ln Γ(β) - ln Γ(α + β)`.
pub fn log_beta_fn(alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::domain(format!(
            "log_beta_fn needs positive arguments, got ({alpha}, {beta})"
        )));
    }
    Ok(log_gamma(alpha)? + log_gamma(beta)? - log_gamma(alpha + beta)?)
}

/// `ln C(n, k)`.
pub fn log_binomial(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(Error::domain(format!("binomial coefficient C({n}, {k})")));
    }
    let (n, k) = (n as f64, k as f64);
    Ok(log_gamma(n + 1.0)? - log_gamma(k + 1.0)? - log_gamma(n - k + 1.0)?)
}

/// Log of the Dirichlet normalizer `Γ(Σα) / Π Γ(αᵢ)`.
pub fn log_dirichlet_norm(alphas: &[f64]) -> Result<f64> {
    let total: f64 = alphas.iter().sum();
    let mut acc = log_gamma(total)?;
    for &a in alphas {
        acc -= log_gamma(a)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorials() {
        assert_eq!(log_gamma(1.0).unwrap(), 0.0);
        assert!((log_gamma(5.0).unwrap() - 24f64.ln()).abs() < 1e-13);
        let mut fact = 1.0f64;
        for k in 1..30 {
            fact *= k as f64;
            let got = log_gamma(k as f64 + 1.0).unwrap();
            assert!(
                (got - fact.ln()).abs() <= 1e-12 * fact.ln().max(1.0),
                "k={k}"
            );
        }
    }

    #[test]
    fn half_integer() {
        let v = log_gamma(0.5).unwrap();
        assert!((v - PI.sqrt().ln()).abs() < 1e-14);
    }

    #[test]
    fn small_and_large_arguments() {
        // Γ(1e-3) ≈ 999.423772484595...
        let v = log_gamma(1e-3).unwrap();
        assert!((v - 999.423_772_484_595_5f64.ln()).abs() < 1e-11 * v.abs());
        // Stirling series at 1000
        let a = 1000.0f64;
        let stirling = (a - 0.5) * a.ln() - a + 0.5 * (2.0 * PI).ln() + 1.0 / (12.0 * a)
            - 1.0 / (360.0 * a.powi(3));
        assert!((log_gamma(a).unwrap() - stirling).abs() < 1e-12 * stirling);
    }

    #[test]
    fn rejects_non_positive() {
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-1.5).is_err());
        assert!(log_beta_fn(0.0, 1.0).is_err());
        assert!(log_beta_fn(1.0, -2.0).is_err());
    }

    #[test]
    fn beta_values() {
        assert_eq!(log_beta_fn(1.0, 1.0).unwrap(), 0.0);
        assert!((log_beta_fn(2.0, 1.0).unwrap() - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn binomial_row() {
        let row: Vec<f64> = (0..=4).map(|k| log_binomial(4, k).unwrap().exp()).collect();
        for (got, want) in row.iter().zip([1.0, 4.0, 6.0, 4.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(log_binomial(3, 4).is_err());
        assert!(log_binomial(1000, 500).unwrap().is_finite());
    }
}

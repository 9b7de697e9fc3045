//! Family densities, special functions and posterior CDFs against statrs.

use conjugate_core::conjugacy::CheckConfig;
use conjugate_core::continuous::{inversion_pdf, Obs};
use conjugate_core::families::*;
use conjugate_core::numerics::{log_beta_fn, log_gamma, QuadConfig};
use statrs::distribution::{Beta, Binomial, Continuous, ContinuousCDF, Discrete, Normal};
use statrs::function::gamma::ln_gamma;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1e-300)
}

#[test]
fn log_gamma_matches_statrs() {
    let mut x = 0.01;
    while x < 200.0 {
        let (a, b) = (log_gamma(x).unwrap(), ln_gamma(x));
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{x}: {a} vs {b}");
        x *= 1.13;
    }
    let lb = log_beta_fn(2.5, 7.0).unwrap();
    assert!((lb - (ln_gamma(2.5) + ln_gamma(7.0) - ln_gamma(9.5))).abs() < 1e-12);
}

#[test]
fn beta_density_matches_statrs() {
    for a in [0.5, 1.0, 2.0, 5.0, 13.0] {
        for b in [0.5, 1.0, 3.0, 9.5] {
            let p = BetaParams::new(a, b).unwrap();
            let o = Beta::new(a, b).unwrap();
            for x in [0.01, 0.2, 0.5, 0.77, 0.99] {
                assert!(close(p.density(x), o.pdf(x), 1e-11), "Beta({a},{b}) at {x}");
            }
        }
    }
}

#[test]
fn normal_density_matches_statrs() {
    for (m, s) in [(0.0, 1.0), (-2.0, 0.5), (3.0, 2.0)] {
        let p = NormalParams::new(m, s).unwrap();
        let o = Normal::new(m, s).unwrap();
        for x in [-4.0, -1.0, 0.0, 0.3, 2.5, 6.0] {
            assert!(close(p.density(x), o.pdf(x), 1e-13));
        }
    }
}

#[test]
fn binomial_rows_match_statrs() {
    for n in [1, 4, 10, 50] {
        let ch = binom_channel(BinomConfig::new(n).unwrap());
        for x in [0.05, 0.3, 0.5, 0.9] {
            let o = Binomial::new(x, n).unwrap();
            for i in 0..=n {
                let k = ch.kernel(&[x], Obs::Index(i as usize));
                assert!(close(k, o.pmf(i), 1e-11), "n={n} x={x} i={i}");
            }
        }
    }
}

#[test]
fn posterior_cdfs_match_statrs() {
    let q = QuadConfig::default();
    let flip = flip_channel();
    for (a, b) in [(1.0, 1.0), (2.0, 5.0), (0.5, 2.0)] {
        let prior = BetaParams::new(a, b).unwrap().state().unwrap();
        let heads = inversion_pdf(&flip, &prior, Obs::Index(1), &q).unwrap();
        let o = Beta::new(a + 1.0, b).unwrap();
        for t in [0.1, 0.35, 0.6, 0.95] {
            assert!((heads.cdf(t, &q).unwrap() - o.cdf(t)).abs() < 1e-9);
        }
    }
    let nu = NoiseLevel::new(0.5).unwrap();
    let prior = NormalParams::new(0.0, 1.0).unwrap().state(&q).unwrap();
    let post = inversion_pdf(&normal_likelihood(nu), &prior, Obs::Real(2.0), &q).unwrap();
    let h = h_normal(NormalParams::new(0.0, 1.0).unwrap(), nu, 2.0);
    let o = Normal::new(h.mu, h.sigma).unwrap();
    for t in [0.5, 1.2, 1.6, 2.0, 3.0] {
        assert!((post.cdf(t, &q).unwrap() - o.cdf(t)).abs() < 1e-9);
    }
}

#[test]
fn coin_chain_matches_closed_form() {
    let cfg = CheckConfig::default();
    let flip = flip_channel();
    let mut st = BetaParams::new(1.0, 1.0).unwrap().state().unwrap();
    for (k, y) in [1, 0, 0, 0].into_iter().enumerate() {
        st = inversion_pdf(&flip, &st, Obs::Index(y), &cfg.quad).unwrap();
        if k == 0 {
            for x in [0.0, 0.25, 1.0] {
                assert!((st.eval(x) - 2.0 * x).abs() < 1e-9);
            }
        }
    }
    let o = Beta::new(2.0, 4.0).unwrap();
    for i in 0..=100 {
        let x = i as f64 / 100.0;
        let want = if i == 0 || i == 100 { 0.0 } else { o.pdf(x) };
        assert!((st.eval(x) - want).abs() < 1e-9, "{x}");
    }
}

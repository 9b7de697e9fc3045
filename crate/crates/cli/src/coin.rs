use std::fs;
use std::path::Path;

use conjugate_core::conjugacy::{state_distance, CheckConfig, State};
use conjugate_core::continuous::{inversion_pdf, Obs, PdfState};
use conjugate_core::families::{flip_channel, h_beta_flip, BetaParams};
use conjugate_core::numerics::Interval;

use crate::output::{io_err, quad_config, write_density_csv, CliError};

/// H is 1 (heads), T is 0 (tails).
pub fn parse_tosses(obs: &str) -> Result<Vec<u8>, CliError> {
    obs.chars()
        .enumerate()
        .map(|(i, c)| match c {
            'H' => Ok(1),
            'T' => Ok(0),
            _ => Err(CliError::Input(format!(
                "observation {} is `{c}`; only H and T are allowed",
                i + 1
            ))),
        })
        .collect()
}

fn rows(st: &PdfState, grid: usize) -> Vec<(f64, f64)> {
    Interval::unit()
        .grid(grid)
        .into_iter()
        .map(|x| (x, st.eval(x)))
        .collect()
}

/// Updates the uniform prior toss by toss along two routes, Bayesian inversion and the
/// Beta translator, and writes the inversion-route densities.
pub fn run(obs: &str, grid: usize, out: &Path) -> Result<bool, CliError> {
    let tosses = parse_tosses(obs)?;
    let cfg = CheckConfig {
        quad: quad_config()?,
        ..CheckConfig::default()
    };
    let flip = flip_channel();
    let mut params = BetaParams::new(1.0, 1.0)?;
    let prior = params.state()?;
    let mut inverted = prior.clone();
    let mut history = vec![inverted.clone()];
    let mut discrepancy = 0.0_f64;
    println!("prior            Beta({}, {})", params.alpha, params.beta);
    for (k, &t) in tosses.iter().enumerate() {
        inverted = inversion_pdf(&flip, &inverted, Obs::Index(t as usize), &cfg.quad)?;
        params = h_beta_flip(params, t)?;
        let d = state_distance(
            &State::Pdf(inverted.clone()),
            &State::Pdf(params.state()?),
            &cfg,
        )?;
        discrepancy = discrepancy.max(d);
        println!(
            "after {:<10} Beta({}, {})",
            &obs[..=k],
            params.alpha,
            params.beta
        );
        history.push(inverted.clone());
    }

    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    write_density_csv(&out.join("prior.csv"), &rows(&prior, grid))?;
    if history.len() > 1 {
        write_density_csv(&out.join("after_first.csv"), &rows(&history[1], grid))?;
    }
    write_density_csv(&out.join("final.csv"), &rows(&inverted, grid))?;
    println!("final            Beta({}, {})", params.alpha, params.beta);
    println!("route discrepancy {discrepancy:.3e}");
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toss_alphabet() {
        assert_eq!(parse_tosses("HTTT").unwrap(), vec![1, 0, 0, 0]);
        assert!(parse_tosses("").unwrap().is_empty());
        assert!(parse_tosses("HxT").is_err());
        assert!(parse_tosses("h").is_err());
    }
}

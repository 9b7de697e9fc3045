use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use conjugate_core::numerics::QuadConfig;
use conjugate_core::Error;
use serde::Serialize;

use crate::QUAD_CONFIG_ENV;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Core(Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Core(
                Error::ZeroValidity(_)
                | Error::ZeroMassObservation(_)
                | Error::NonConvergent { .. }
                | Error::NonFinite { .. },
            ) => 3,
            CliError::Core(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

pub fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

/// Quadrature settings from the file named by the environment variable, else defaults.
pub fn quad_config() -> Result<QuadConfig, CliError> {
    let Some(path) = std::env::var_os(QUAD_CONFIG_ENV) else {
        return Ok(QuadConfig::default());
    };
    let path = Path::new(&path);
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let cfg: QuadConfig =
        toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

/// `x,density` rows with 17 significant digits.
pub fn write_density_csv(path: &Path, rows: &[(f64, f64)]) -> Result<(), CliError> {
    let mut s = String::from("x,density\n");
    for (x, d) in rows {
        s.push_str(&format!("{x:.16e},{d:.16e}\n"));
    }
    fs::write(path, s).map_err(|e| io_err(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Input(format!("serializing report: {e}")))?;
    text.push('\n');
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| io_err(path, e))
}

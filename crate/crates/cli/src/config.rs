//! Run configuration: an optional JSON file merged under command-line flags.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use fibercp::green::{PoleStrategy, TraceOptions};
use fibercp::potential::PotentialOptions;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Detour,
    LossyEpsilon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

/// Settings shared by all subcommands. Every field may also come from the
/// config file; a flag given on the command line wins.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Settings {
    /// Fiber radius in nm (repeat or comma-separate for a sweep)
    #[arg(long = "radius-nm", value_delimiter = ',', num_args = 1..)]
    #[serde(default)]
    pub radius_nm: Option<Vec<f64>>,
    /// Fine-structure level label, e.g. 5P3/2 (repeatable)
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    #[serde(default)]
    pub state: Option<Vec<String>>,
    /// Smallest distance from the fiber surface, nm
    #[arg(long = "rmin-nm")]
    #[serde(default)]
    pub rmin_nm: Option<f64>,
    /// Largest distance from the fiber surface, nm
    #[arg(long = "rmax-nm")]
    #[serde(default)]
    pub rmax_nm: Option<f64>,
    #[arg(long)]
    #[serde(default)]
    pub points: Option<usize>,
    #[arg(long, value_enum)]
    #[serde(default)]
    pub spacing: Option<Spacing>,
    /// Relative tolerance of the imaginary-frequency integral
    #[arg(long = "u-tol")]
    #[serde(default)]
    pub u_tol: Option<f64>,
    /// Subinterval budget of the imaginary-frequency integral
    #[arg(long = "u-max-intervals")]
    #[serde(default)]
    pub u_max_intervals: Option<usize>,
    /// Relative tolerance of each beta integral
    #[arg(long = "beta-tol")]
    #[serde(default)]
    pub beta_tol: Option<f64>,
    /// Relative cutoff of the order sum
    #[arg(long = "n-tol")]
    #[serde(default)]
    pub n_tol: Option<f64>,
    #[arg(long = "pole-strategy", value_enum)]
    #[serde(default)]
    pub pole_strategy: Option<Strategy>,
    /// Detour radius in rad/m
    #[arg(long = "detour-radius")]
    #[serde(default)]
    pub detour_radius: Option<f64>,
    /// Wavelength where the silica models hand over, um
    #[arg(long = "switch-um")]
    #[serde(default)]
    pub switch_um: Option<f64>,
    /// Atomic catalog JSON (built-in rubidium data if absent)
    #[arg(long)]
    #[serde(default)]
    pub catalog: Option<PathBuf>,
    /// Output directory (or file for single-output subcommands)
    #[arg(long, short)]
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(default)]
    pub format: Option<Format>,
    /// Worker threads (0: all cores)
    #[arg(long)]
    #[serde(default)]
    pub workers: Option<usize>,
    /// Set on the command line by `--strict`
    #[arg(skip)]
    #[serde(default)]
    pub strict: Option<bool>,
}

impl Settings {
    /// `self` over `base`, field by field.
    pub fn over(self, base: Settings) -> Settings {
        Settings {
            radius_nm: self.radius_nm.or(base.radius_nm),
            state: self.state.or(base.state),
            rmin_nm: self.rmin_nm.or(base.rmin_nm),
            rmax_nm: self.rmax_nm.or(base.rmax_nm),
            points: self.points.or(base.points),
            spacing: self.spacing.or(base.spacing),
            u_tol: self.u_tol.or(base.u_tol),
            u_max_intervals: self.u_max_intervals.or(base.u_max_intervals),
            beta_tol: self.beta_tol.or(base.beta_tol),
            n_tol: self.n_tol.or(base.n_tol),
            pole_strategy: self.pole_strategy.or(base.pole_strategy),
            detour_radius: self.detour_radius.or(base.detour_radius),
            switch_um: self.switch_um.or(base.switch_um),
            catalog: self.catalog.or(base.catalog),
            out: self.out.or(base.out),
            format: self.format.or(base.format),
            workers: self.workers.or(base.workers),
            strict: self.strict.or(base.strict),
        }
    }
}

pub fn read_config_file(path: &Path) -> Result<Settings, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    // serde_json reports line and column of the offending field
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Fully resolved configuration after defaults and validation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub subcommand: String,
    pub radius_nm: Vec<f64>,
    pub state: Vec<String>,
    pub rmin_nm: f64,
    pub rmax_nm: f64,
    pub points: usize,
    pub spacing: Spacing,
    pub u_tol: f64,
    pub u_max_intervals: usize,
    pub beta_tol: f64,
    pub n_tol: f64,
    pub pole_strategy: Strategy,
    pub detour_radius: Option<f64>,
    pub switch_um: f64,
    pub catalog: Option<PathBuf>,
    #[serde(skip)]
    pub out: PathBuf,
    pub format: Format,
    #[serde(skip)]
    pub workers: usize,
    #[serde(skip)]
    pub strict: bool,
}

fn tolerance(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{name} must lie in (0, 1), got {v}")))
    }
}

impl RunConfig {
    pub fn resolve(subcommand: &str, s: Settings, default_states: &[&str]) -> Result<Self, CliError> {
        let defaults = PotentialOptions::default();
        let cfg = RunConfig {
            subcommand: subcommand.to_string(),
            radius_nm: s.radius_nm.unwrap_or_else(|| vec![200.0]),
            state: s
                .state
                .unwrap_or_else(|| default_states.iter().map(|x| x.to_string()).collect()),
            rmin_nm: s.rmin_nm.unwrap_or(50.0),
            rmax_nm: s.rmax_nm.unwrap_or(1200.0),
            points: s.points.unwrap_or(200),
            spacing: s.spacing.unwrap_or(Spacing::Linear),
            u_tol: tolerance("u-tol", s.u_tol.unwrap_or(defaults.u_rel_tol))?,
            u_max_intervals: s.u_max_intervals.unwrap_or(defaults.u_max_intervals),
            beta_tol: tolerance("beta-tol", s.beta_tol.unwrap_or(defaults.trace.beta_rel_tol))?,
            n_tol: tolerance("n-tol", s.n_tol.unwrap_or(defaults.trace.n_rel_tol))?,
            pole_strategy: s.pole_strategy.unwrap_or(Strategy::Detour),
            detour_radius: s.detour_radius,
            switch_um: s.switch_um.unwrap_or(7.0),
            catalog: s.catalog,
            out: s.out.unwrap_or_else(|| PathBuf::from(".")),
            format: s.format.unwrap_or(Format::Csv),
            workers: s.workers.unwrap_or(0),
            strict: s.strict.unwrap_or(false),
        };
        if cfg.radius_nm.is_empty() || cfg.radius_nm.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(CliError::Config("radius-nm must be positive".into()));
        }
        if cfg.state.is_empty() {
            return Err(CliError::Config("at least one state is required".into()));
        }
        if !(cfg.rmin_nm > 0.0) {
            return Err(CliError::Config(format!("rmin-nm must be positive, got {}", cfg.rmin_nm)));
        }
        if !(cfg.rmax_nm > cfg.rmin_nm) {
            return Err(CliError::Config("rmax-nm must exceed rmin-nm".into()));
        }
        if cfg.points < 2 {
            return Err(CliError::Config(format!("points must be at least 2, got {}", cfg.points)));
        }
        if cfg.u_max_intervals == 0 {
            return Err(CliError::Config("u-max-intervals must be positive".into()));
        }
        if !(cfg.switch_um > 0.0) {
            return Err(CliError::Config("switch-um must be positive".into()));
        }
        if let Some(r) = cfg.detour_radius {
            if !(r > 0.0) {
                return Err(CliError::Config("detour-radius must be positive".into()));
            }
        }
        Ok(cfg)
    }

    /// Distances from the surface in nm.
    pub fn distances_nm(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|k| {
                let t = k as f64 / (n - 1) as f64;
                match self.spacing {
                    Spacing::Linear => self.rmin_nm + (self.rmax_nm - self.rmin_nm) * t,
                    Spacing::Log => self.rmin_nm * (self.rmax_nm / self.rmin_nm).powf(t),
                }
            })
            .collect()
    }

    pub fn potential_options(&self) -> PotentialOptions {
        let d = PotentialOptions::default();
        PotentialOptions {
            trace: TraceOptions {
                beta_rel_tol: self.beta_tol,
                n_rel_tol: self.n_tol,
                pole_strategy: match self.pole_strategy {
                    Strategy::Detour => PoleStrategy::Detour,
                    Strategy::LossyEpsilon => PoleStrategy::LossyEpsilon,
                },
                detour_radius: self.detour_radius,
                ..d.trace
            },
            u_rel_tol: self.u_tol,
            u_max_intervals: self.u_max_intervals,
        }
    }

    /// SHA-256 of the settings that shape the output. Output location,
    /// worker count and `strict` are excluded.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        format!("{:x}", Sha256::digest(text.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file = Settings {
            points: Some(10),
            rmin_nm: Some(80.0),
            ..Default::default()
        };
        let flags = Settings {
            points: Some(20),
            ..Default::default()
        };
        let s = flags.over(file);
        assert_eq!(s.points, Some(20));
        assert_eq!(s.rmin_nm, Some(80.0));
    }

    #[test]
    fn rejects_bad_grids_and_tolerances() {
        let one = Settings {
            points: Some(1),
            ..Default::default()
        };
        assert!(RunConfig::resolve("potential", one, &["5S1/2"]).is_err());
        let tol = Settings {
            u_tol: Some(1.5),
            ..Default::default()
        };
        assert!(RunConfig::resolve("potential", tol, &["5S1/2"]).is_err());
        let neg = Settings {
            rmin_nm: Some(0.0),
            ..Default::default()
        };
        assert!(RunConfig::resolve("potential", neg, &["5S1/2"]).is_err());
    }

    #[test]
    fn hash_ignores_workers() {
        let a = RunConfig::resolve("potential", Settings::default(), &["5S1/2"]).unwrap();
        let mut b = a.clone();
        b.workers = 7;
        b.out = PathBuf::from("/elsewhere");
        assert_eq!(a.hash(), b.hash());
        b.points = 3;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn log_grid_hits_both_ends() {
        let s = Settings {
            spacing: Some(Spacing::Log),
            rmin_nm: Some(10.0),
            rmax_nm: Some(1000.0),
            points: Some(3),
            ..Default::default()
        };
        let c = RunConfig::resolve("potential", s, &["5S1/2"]).unwrap();
        let d = c.distances_nm();
        assert_eq!(d[0], 10.0);
        assert!((d[1] - 100.0).abs() < 1e-12);
        assert!((d[2] - 1000.0).abs() < 1e-9);
    }
}

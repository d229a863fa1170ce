//! CSV, JSON and gnuplot writers. Floats use fixed formats so that equal
//! inputs give byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use fibercp::potential::{PotentialCurve, ShiftCurve};
use fibercp::units::{joule_to_microkelvin, newton_to_zeptonewton};
use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

pub const CURVE_COLUMNS: &str = "r_nm,r_minus_a_nm,U_total_uK,U_nres_uK,U_res_uK,F_zN,converged";
pub const SHIFT_COLUMNS: &str = "r_nm,r_minus_a_nm,delta_omega_rad_s,delta_nu_MHz,converged";

/// Provenance written at the top of every output file.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub code_version: String,
    pub config_sha256: String,
    pub catalog_version: String,
    pub state: String,
    pub radius_nm: f64,
    pub u_tol: f64,
    pub beta_tol: f64,
    pub n_tol: f64,
    pub pole_strategy: String,
    pub switch_um: f64,
}

impl Metadata {
    pub fn new(cfg: &RunConfig, catalog_version: &str, state: &str, radius_nm: f64) -> Self {
        Metadata {
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: cfg.hash(),
            catalog_version: catalog_version.to_string(),
            state: state.to_string(),
            radius_nm,
            u_tol: cfg.u_tol,
            beta_tol: cfg.beta_tol,
            n_tol: cfg.n_tol,
            pole_strategy: format!("{:?}", cfg.pole_strategy).to_lowercase(),
            switch_um: cfg.switch_um,
        }
    }

    fn comment_block(&self) -> String {
        format!(
            "# fibercp {}\n# config_sha256 {}\n# catalog {}\n# state {} radius_nm {}\n",
            self.code_version, self.config_sha256, self.catalog_version, self.state, self.radius_nm
        )
    }
}

fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.9e}")
    }
}

pub fn curve_csv(curve: &PotentialCurve, meta: &Metadata) -> String {
    let mut s = meta.comment_block();
    s.push_str(CURVE_COLUMNS);
    s.push('\n');
    for i in 0..curve.r_grid.len() {
        let r = curve.r_grid[i];
        let _ = writeln!(
            s,
            "{:.6},{:.6},{},{},{},{},{}",
            r * 1e9,
            (r - curve.radius) * 1e9,
            num(joule_to_microkelvin(curve.total[i])),
            num(joule_to_microkelvin(curve.nonresonant[i])),
            num(joule_to_microkelvin(curve.resonant[i])),
            num(newton_to_zeptonewton(curve.force[i])),
            curve.converged[i]
        );
    }
    s
}

#[derive(Serialize)]
struct CurvePoint {
    r_nm: f64,
    r_minus_a_nm: f64,
    #[serde(rename = "U_total_uK")]
    u_total_uk: f64,
    #[serde(rename = "U_nres_uK")]
    u_nres_uk: f64,
    #[serde(rename = "U_res_uK")]
    u_res_uk: f64,
    #[serde(rename = "F_zN")]
    f_zn: f64,
    converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure: Option<String>,
}

#[derive(Serialize)]
struct CurveDocument<'a> {
    metadata: &'a Metadata,
    points: Vec<CurvePoint>,
}

pub fn curve_json(curve: &PotentialCurve, meta: &Metadata) -> String {
    // serde_json writes the NaN of failed points as null
    let points = (0..curve.r_grid.len())
        .map(|i| CurvePoint {
            r_nm: curve.r_grid[i] * 1e9,
            r_minus_a_nm: (curve.r_grid[i] - curve.radius) * 1e9,
            u_total_uk: joule_to_microkelvin(curve.total[i]),
            u_nres_uk: joule_to_microkelvin(curve.nonresonant[i]),
            u_res_uk: joule_to_microkelvin(curve.resonant[i]),
            f_zn: newton_to_zeptonewton(curve.force[i]),
            converged: curve.converged[i],
            failure: curve.failures[i].clone(),
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&CurveDocument { metadata: meta, points }).expect("curve serializes");
    s.push('\n');
    s
}

pub fn shift_csv(shift: &ShiftCurve, radius: f64, converged: &[bool], meta: &Metadata) -> String {
    let mut s = meta.comment_block();
    s.push_str(SHIFT_COLUMNS);
    s.push('\n');
    let mhz = shift.megahertz();
    for i in 0..shift.r_grid.len() {
        let r = shift.r_grid[i];
        let _ = writeln!(
            s,
            "{:.6},{:.6},{},{},{}",
            r * 1e9,
            (r - radius) * 1e9,
            num(shift.delta_omega[i]),
            num(mhz[i]),
            converged[i]
        );
    }
    s
}

/// gnuplot script plotting columns `ycols` of `data` against the distance.
pub fn gnuplot_script(data: &Path, title: &str, ylabel: &str, ycols: &[(usize, &str)]) -> String {
    let name = data.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set datafile commentschars '#'\n");
    s.push_str("set key autotitle columnhead\n");
    let _ = writeln!(s, "set title '{title}'");
    s.push_str("set xlabel 'r - a (nm)'\n");
    let _ = writeln!(s, "set ylabel '{ylabel}'");
    s.push_str("set grid\n");
    let plots: Vec<String> = ycols
        .iter()
        .map(|(c, t)| format!("'{name}' using 2:{c} with lines title '{t}'"))
        .collect();
    let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    s.push_str("pause -1\n");
    s
}

/// File stem for a state label: `5P3/2` becomes `5P3_2`.
pub fn state_stem(state: &str) -> String {
    state.replace('/', "_")
}

pub fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        }
    }
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn curve_path(out: &Path, state: &str, radius_nm: f64, ext: &str) -> PathBuf {
    out.join(format!("{}_a{}nm.{ext}", state_stem(state), radius_nm))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stems_are_path_safe() {
        assert_eq!(state_stem("5P3/2"), "5P3_2");
        let p = curve_path(Path::new("out"), "8S1/2", 200.0, "csv");
        assert_eq!(p, Path::new("out/8S1_2_a200nm.csv"));
    }

    #[test]
    fn numbers_have_fixed_format() {
        assert_eq!(num(-1.5e-6), "-1.500000000e-6");
        assert_eq!(num(f64::NAN), "nan");
    }
}

//! Batch front end for nanofiber Casimir-Polder potentials.

mod config;
mod output;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use fibercp::atomdata::{Catalog, BUILTIN_RUBIDIUM};
use fibercp::dielectric::{PermittivityModel, SilicaData};
use fibercp::green::{prepare_real, trace_sc_imag, trace_sc_real_prepared, FiberGeometry};
use fibercp::potential::{frequency_shift, potential_curve, PotentialCurve};
use fibercp::units::wavelength_to_angular;
use log::info;

use config::{Format, RunConfig, Settings};
use output::Metadata;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Convergence(String),
    Io(String),
    Numeric(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Convergence(_) => 3,
            CliError::Data(_) => 4,
            CliError::Io(_) | CliError::Numeric(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Convergence(m) => write!(f, "convergence failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Numeric(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl From<fibercp::Error> for CliError {
    fn from(e: fibercp::Error) -> Self {
        match e {
            fibercp::Error::Data(m) | fibercp::Error::Lookup(m) => CliError::Data(m),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "fibercp", version, about = "Casimir-Polder potentials of atoms near an optical nanofiber")]
struct Cli {
    /// JSON file with default settings; command-line flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[command(flatten)]
    settings: Settings,
    /// Exit with status 3 if any point fails to converge
    #[arg(long = "strict", action = ArgAction::SetTrue)]
    strict_flag: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelChoice {
    Auto,
    Sellmeier,
    Dawson,
}

#[derive(Subcommand)]
enum Command {
    /// Potential curves, one file per state and radius
    Potential(Common),
    /// Transition-frequency shift between two levels
    Shift {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "5P3/2")]
        upper: String,
        #[arg(long, default_value = "5S1/2")]
        lower: String,
    },
    /// Silica permittivity on the real and imaginary frequency axes
    Permittivity {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "auto")]
        model: ModelChoice,
        #[arg(long = "lambda-min-um", default_value_t = 0.4)]
        lambda_min_um: f64,
        #[arg(long = "lambda-max-um", default_value_t = 20.0)]
        lambda_max_um: f64,
    },
    /// Trace of the scattering Green tensor against distance
    GreenTrace {
        #[command(flatten)]
        common: Common,
        #[arg(long = "wavelength-nm", default_value_t = 780.241)]
        wavelength_nm: f64,
    },
    /// Run the property groups of every module and print a JSON report
    Validate(Common),
}

fn settings(common: Common, file: &Option<PathBuf>) -> Result<Settings, CliError> {
    let mut flags = common.settings;
    if common.strict_flag {
        flags.strict = Some(true);
    }
    match file {
        Some(p) => Ok(flags.over(config::read_config_file(p)?)),
        None => Ok(flags),
    }
}

fn load_catalog(cfg: &RunConfig) -> Result<Catalog, CliError> {
    match &cfg.catalog {
        Some(p) => Ok(Catalog::from_path(p)?),
        None => Ok(Catalog::builtin()?),
    }
}

fn geometry(cfg: &RunConfig, radius_nm: f64) -> Result<FiberGeometry, CliError> {
    let inner = PermittivityModel::silica_auto(cfg.switch_um * 1e-6)?;
    Ok(FiberGeometry::new(radius_nm * 1e-9, inner, PermittivityModel::vacuum())?)
}

fn set_workers(n: usize) {
    // a second call fails harmlessly in tests that run several commands
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
}

fn grid(cfg: &RunConfig, radius_nm: f64) -> Vec<f64> {
    cfg.distances_nm().iter().map(|d| (radius_nm + d) * 1e-9).collect()
}

fn check_states(catalog: &Catalog, states: &[String]) -> Result<(), CliError> {
    for s in states {
        catalog
            .level(s)
            .map_err(|_| CliError::Config(format!("state {s} is not in catalog {}", catalog.version)))?;
    }
    Ok(())
}

fn report_failures(curve: &PotentialCurve, radius_nm: f64, bad: &mut Vec<String>) {
    for (i, ok) in curve.converged.iter().enumerate() {
        if !ok {
            let d = (curve.r_grid[i] - curve.radius) * 1e9;
            let why = curve.failures[i].as_deref().unwrap_or("error estimate above tolerance");
            bad.push(format!("{} a = {radius_nm} nm, r - a = {d:.3} nm: {why}", curve.state));
        }
    }
}

fn finish_strict(cfg: &RunConfig, bad: Vec<String>) -> Result<(), CliError> {
    for b in &bad {
        log::warn!("not converged: {b}");
    }
    if cfg.strict && !bad.is_empty() {
        return Err(CliError::Convergence(format!("{} point(s) did not converge", bad.len())));
    }
    Ok(())
}

fn run_potential(cfg: &RunConfig) -> Result<(), CliError> {
    let catalog = load_catalog(cfg)?;
    check_states(&catalog, &cfg.state)?;
    let opts = cfg.potential_options();
    let mut bad = Vec::new();
    for &a in &cfg.radius_nm {
        let geom = geometry(cfg, a)?;
        let r = grid(cfg, a);
        for state in &cfg.state {
            info!("{state}, a = {a} nm, {} points", r.len());
            let curve = potential_curve(state, &catalog, &geom, &r, &opts)?;
            report_failures(&curve, a, &mut bad);
            let meta = Metadata::new(cfg, &catalog.version, state, a);
            let (ext, text) = match cfg.format {
                Format::Csv => ("csv", output::curve_csv(&curve, &meta)),
                Format::Json => ("json", output::curve_json(&curve, &meta)),
            };
            let path = output::curve_path(&cfg.out, state, a, ext);
            output::write(&path, &text)?;
            if cfg.format == Format::Csv {
                let gp = output::gnuplot_script(
                    &path,
                    &format!("{state}, a = {a} nm"),
                    "U (uK)",
                    &[(3, "U"), (4, "U_nres"), (5, "U_res")],
                );
                output::write(&path.with_extension("gp"), &gp)?;
            }
            println!("{}", path.display());
        }
    }
    finish_strict(cfg, bad)
}

fn run_shift(cfg: &RunConfig, upper: &str, lower: &str) -> Result<(), CliError> {
    let catalog = load_catalog(cfg)?;
    check_states(&catalog, &[upper.to_string(), lower.to_string()])?;
    let opts = cfg.potential_options();
    let mut bad = Vec::new();
    for &a in &cfg.radius_nm {
        let geom = geometry(cfg, a)?;
        let r = grid(cfg, a);
        let up = potential_curve(upper, &catalog, &geom, &r, &opts)?;
        let low = potential_curve(lower, &catalog, &geom, &r, &opts)?;
        report_failures(&up, a, &mut bad);
        report_failures(&low, a, &mut bad);
        let shift = frequency_shift(&up, &low)?;
        let converged: Vec<bool> = up.converged.iter().zip(&low.converged).map(|(a, b)| *a && *b).collect();
        let meta = Metadata::new(cfg, &catalog.version, &format!("{upper}-{lower}"), a);
        let path = cfg.out.join(format!(
            "shift_{}_{}_a{a}nm.csv",
            output::state_stem(upper),
            output::state_stem(lower)
        ));
        output::write(&path, &output::shift_csv(&shift, geom.radius, &converged, &meta))?;
        let gp = output::gnuplot_script(&path, &format!("{upper} - {lower}, a = {a} nm"), "shift (MHz)", &[(4, "shift")]);
        output::write(&path.with_extension("gp"), &gp)?;
        println!("{}", path.display());
    }
    finish_strict(cfg, bad)
}

fn run_permittivity(cfg: &RunConfig, model: ModelChoice, lo: f64, hi: f64) -> Result<(), CliError> {
    if !(lo > 0.0 && hi > lo) {
        return Err(CliError::Config("need 0 < lambda-min-um < lambda-max-um".into()));
    }
    let data = SilicaData::builtin()?;
    let m = match model {
        ModelChoice::Auto => data.auto(cfg.switch_um * 1e-6)?,
        ModelChoice::Sellmeier => PermittivityModel::Sellmeier(data.sellmeier.clone()),
        ModelChoice::Dawson => PermittivityModel::Dawson(data.dawson.clone()),
    };
    let n = cfg.points;
    let mut text = format!(
        "# fibercp {}\n# config_sha256 {}\n# permittivity {} model {}\n",
        env!("CARGO_PKG_VERSION"),
        cfg.hash(),
        data.version,
        m.variant_name()
    );
    text.push_str("lambda_um,eps_re,eps_im,abs_eps,outside_window,eps_iu\n");
    for k in 0..n {
        let lam = lo * (hi / lo).powf(k as f64 / (n - 1) as f64);
        let w = wavelength_to_angular(lam * 1e-6);
        let e = m.eps_real_freq(w)?;
        let ei = m.eps_imag_freq(w)?;
        text.push_str(&format!(
            "{lam:.6},{:.9e},{:.9e},{:.9e},{},{ei:.9e}\n",
            e.value.re,
            e.value.im,
            e.value.norm(),
            e.outside_window
        ));
    }
    let path = cfg.out.join(format!("permittivity_{}.csv", m.variant_name()));
    output::write(&path, &text)?;
    println!("{}", path.display());
    Ok(())
}

fn run_green_trace(cfg: &RunConfig, wavelength_nm: f64) -> Result<(), CliError> {
    if !(wavelength_nm > 0.0) {
        return Err(CliError::Config("wavelength-nm must be positive".into()));
    }
    let opts = cfg.potential_options().trace;
    let w = wavelength_to_angular(wavelength_nm * 1e-9);
    let mut bad = Vec::new();
    for &a in &cfg.radius_nm {
        let geom = geometry(cfg, a)?;
        let setup = prepare_real(&geom, w, &opts)?;
        let mut text = format!(
            "# fibercp {}\n# config_sha256 {}\n# radius_nm {a} wavelength_nm {wavelength_nm} guided_modes {}\n",
            env!("CARGO_PKG_VERSION"),
            cfg.hash(),
            setup.poles.len()
        );
        text.push_str("r_nm,r_minus_a_nm,trace_iu_per_m,re_trace_per_m,im_trace_per_m,rel_error,n_terms,converged\n");
        for r in grid(cfg, a) {
            let ti = trace_sc_imag(&geom, r, w, &opts)?;
            let tr = trace_sc_real_prepared(&geom, r, &setup, &opts)?;
            let ok = ti.converged && tr.converged;
            if !ok {
                bad.push(format!("a = {a} nm, r = {:.3} nm", r * 1e9));
            }
            text.push_str(&format!(
                "{:.6},{:.6},{:.9e},{:.9e},{:.9e},{:.3e},{},{ok}\n",
                r * 1e9,
                r * 1e9 - a,
                ti.value.re,
                tr.value.re,
                tr.value.im,
                ti.beta_error_estimate.max(tr.beta_error_estimate),
                ti.n_terms_used.max(tr.n_terms_used)
            ));
        }
        let path = cfg.out.join(format!("green_trace_a{a}nm_{wavelength_nm}nm.csv"));
        output::write(&path, &text)?;
        println!("{}", path.display());
    }
    finish_strict(cfg, bad)
}

fn run_validate(cfg: &RunConfig) -> Result<(), CliError> {
    let text = match &cfg.catalog {
        Some(p) => std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display())),
        None => Ok(BUILTIN_RUBIDIUM.to_string()),
    };
    let report = validate::run(text);
    for g in &report.groups {
        eprintln!("{:<18} {}", g.group, if g.passed { "pass" } else { "FAIL" });
    }
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = cli.config;
    match cli.command {
        Command::Potential(c) => {
            let cfg = RunConfig::resolve("potential", settings(c, &file)?, &["5S1/2"])?;
            set_workers(cfg.workers);
            run_potential(&cfg)
        }
        Command::Shift { common, upper, lower } => {
            // the pair goes into the config so that it enters the hash
            let mut s = settings(common, &file)?;
            s.state = Some(vec![upper.clone(), lower.clone()]);
            let cfg = RunConfig::resolve("shift", s, &[])?;
            set_workers(cfg.workers);
            run_shift(&cfg, &upper, &lower)
        }
        Command::Permittivity {
            common,
            model,
            lambda_min_um,
            lambda_max_um,
        } => {
            let cfg = RunConfig::resolve("permittivity", settings(common, &file)?, &["-"])?;
            run_permittivity(&cfg, model, lambda_min_um, lambda_max_um)
        }
        Command::GreenTrace { common, wavelength_nm } => {
            let cfg = RunConfig::resolve("green-trace", settings(common, &file)?, &["-"])?;
            set_workers(cfg.workers);
            run_green_trace(&cfg, wavelength_nm)
        }
        Command::Validate(c) => {
            let cfg = RunConfig::resolve("validate", settings(c, &file)?, &["-"])?;
            set_workers(cfg.workers);
            run_validate(&cfg)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fibercp: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

//! The `validate` subcommand: property groups of every module, each reported
//! as pass or fail with details. Failures are report content, not errors.

use std::f64::consts::PI;

use fibercp::atomdata::Catalog;
use fibercp::dielectric::{PermittivityModel, SilicaData};
use fibercp::green::{trace_sc_imag, trace_sc_real_prepared, prepare_real, FiberGeometry, PoleStrategy, TraceOptions};
use fibercp::potential::{two_level_potentials, PotentialOptions};
use fibercp::specfun::{bessel_j, bessel_j_deriv, bessel_y, bessel_y_deriv, hankel1_with_deriv};
use fibercp::units::{wavelength_to_angular, AU_DIPOLE};
use fibercp::wigner::wigner3j_twice;
use num_complex::Complex64;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct GroupReport {
    pub group: String,
    pub passed: bool,
    pub details: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub groups: Vec<GroupReport>,
}

struct Group {
    name: &'static str,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Group {
    fn new(name: &'static str) -> Self {
        Group {
            name,
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: String) {
        if ok {
            self.notes.push(what);
        } else {
            self.failures.push(what);
        }
    }

    fn error(&mut self, what: &str, e: impl std::fmt::Display) {
        self.failures.push(format!("{what}: {e}"));
    }

    fn finish(self) -> GroupReport {
        let passed = self.failures.is_empty();
        let mut details = self.failures;
        if passed {
            details = self.notes;
        }
        GroupReport {
            group: self.name.into(),
            passed,
            details,
        }
    }
}

fn catalog_group(text: Result<String, String>) -> GroupReport {
    let mut g = Group::new("catalog");
    let cat = match text.and_then(|t| Catalog::parse_unchecked(&t).map_err(|e| e.to_string())) {
        Ok(c) => c,
        Err(e) => {
            g.error("load", e);
            return g.finish();
        }
    };
    for issue in cat.audit() {
        g.failures.push(format!("{}: {}", issue.item, issue.problem));
    }
    g.check(true, format!("{} levels, {} lines audited", cat.levels.len(), cat.lines.len()));
    let ground = cat.ground.clone();
    for line in cat.lines.iter().filter(|l| l.lower == ground && l.upper.starts_with("5P")) {
        match cat.normalized_reduced_d(line, &line.upper) {
            Ok(d) => g.check((d / 2.98 - 1.0).abs() < 0.02, format!("{}: normalized dipole {d:.4} a.u.", line.id())),
            Err(e) => g.error(&line.id(), e),
        }
    }
    g.finish()
}

fn permittivity_group() -> GroupReport {
    let mut g = Group::new("permittivity");
    let data = match SilicaData::builtin() {
        Ok(d) => d,
        Err(e) => {
            g.error("load", e);
            return g.finish();
        }
    };
    g.check(data.dawson.eps_inf == 2.1232, format!("eps_inf = {}", data.dawson.eps_inf));
    let dawson = PermittivityModel::Dawson(data.dawson.clone());
    for (lam_um, want) in [(8.249, 0.69), (8.495, 1.07)] {
        match dawson.eps_real_freq(wavelength_to_angular(lam_um * 1e-6)) {
            Ok(e) => {
                let m = e.value.norm();
                g.check((m / want - 1.0).abs() < 0.05, format!("|eps({lam_um} um)| = {m:.4}"));
            }
            Err(e) => g.error("eps", e),
        }
    }
    let models = [
        PermittivityModel::Sellmeier(data.sellmeier.clone()),
        dawson,
    ];
    let mut worst: f64 = 0.0;
    for m in &models {
        for k in 0..=40 {
            let u = 1e12 * 10f64.powf(k as f64 * 0.1);
            match m.eps_complex_freq(Complex64::new(0.0, u)) {
                Ok(e) => worst = worst.max(e.im.abs() / e.norm()),
                Err(e) => g.error("eps(iu)", e),
            }
        }
    }
    g.check(worst < 1e-13, format!("largest relative imaginary residue on the imaginary axis {worst:.2e}"));
    g.finish()
}

fn special_function_group() -> GroupReport {
    let mut g = Group::new("special-functions");
    let mut worst: f64 = 0.0;
    for n in 0..8 {
        for x in [0.3, 1.7, 6.0, 25.0] {
            let w = (|| -> fibercp::Result<f64> {
                let jy = bessel_j(n, Complex64::new(x, 0.0))?.re * bessel_y_deriv(n, x)?
                    - bessel_j_deriv(n, Complex64::new(x, 0.0))?.re * bessel_y(n, x)?;
                Ok((jy * PI * x / 2.0 - 1.0).abs())
            })();
            match w {
                Ok(v) => worst = worst.max(v),
                Err(e) => g.error("J/Y", e),
            }
            let z = Complex64::new(x, 0.4 * x);
            let w = (|| -> fibercp::Result<f64> {
                let (h, hp) = hankel1_with_deriv(n, z)?;
                let jh = bessel_j(n, z)? * hp - bessel_j_deriv(n, z)? * h;
                Ok((jh * PI * z / Complex64::new(0.0, 2.0) - 1.0).norm())
            })();
            match w {
                Ok(v) => worst = worst.max(v),
                Err(e) => g.error("J/H", e),
            }
        }
    }
    g.check(worst <= 1e-12, format!("largest relative Wronskian defect {worst:.2e}"));
    g.finish()
}

fn wigner_group() -> GroupReport {
    let mut g = Group::new("wigner");
    let mut worst: f64 = 0.0;
    // sum_{m1 m2} (2 j3 + 1) (j1 j2 j3; m1 m2 -m)(j1 j2 j3'; m1 m2 -m) = delta
    for (tj1, tj2) in [(1u32, 2u32), (3, 2), (3, 3), (4, 5)] {
        let tjs: Vec<u32> = ((tj1 as i32 - tj2 as i32).unsigned_abs()..=tj1 + tj2).step_by(2).collect();
        for &a in &tjs {
            for &b in &tjs {
                let tm3 = -(a.min(b) as i32);
                let mut sum = 0.0;
                for tm1 in (-(tj1 as i32)..=tj1 as i32).step_by(2) {
                    let tm2 = -tm3 - tm1;
                    if tm2.unsigned_abs() > tj2 {
                        continue;
                    }
                    let x = wigner3j_twice([tj1, tj2, a], [tm1, tm2, tm3]);
                    let y = wigner3j_twice([tj1, tj2, b], [tm1, tm2, tm3]);
                    match (x, y) {
                        (Ok(x), Ok(y)) => sum += (a + 1) as f64 * x * y,
                        (Err(e), _) | (_, Err(e)) => g.error("3j", e),
                    }
                }
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((sum - want).abs());
            }
        }
    }
    g.check(worst <= 1e-14, format!("largest orthogonality defect {worst:.2e}"));
    g.finish()
}

fn green_group() -> GroupReport {
    let mut g = Group::new("green");
    let opts = TraceOptions::default();
    let homog = FiberGeometry::new(200e-9, PermittivityModel::constant(2.1), PermittivityModel::constant(2.1));
    let silica = FiberGeometry::silica_in_vacuum(200e-9);
    let (homog, silica) = match (homog, silica) {
        (Ok(h), Ok(s)) => (h, s),
        (Err(e), _) | (_, Err(e)) => {
            g.error("geometry", e);
            return g.finish();
        }
    };
    let u = 2.4e15;
    match trace_sc_imag(&homog, 320e-9, u, &opts) {
        Ok(t) => g.check(t.value.norm() <= 1e-12, format!("homogeneous null |Tr G| = {:.2e}", t.value.norm())),
        Err(e) => g.error("homogeneous", e),
    }
    for d in [60e-9, 300e-9, 900e-9] {
        match trace_sc_imag(&silica, 200e-9 + d, u, &opts) {
            Ok(t) => {
                let ratio = t.value.im.abs() / t.value.re.abs();
                g.check(ratio <= 1e-10, format!("imaginary-axis trace reality at {:.0} nm: {ratio:.1e}", d * 1e9));
            }
            Err(e) => g.error("reality", e),
        }
    }
    g.finish()
}

/// Detour and lossy-core traces at the D2 frequency at 20 distances.
fn strategy_group() -> GroupReport {
    let mut g = Group::new("pole-strategies");
    let geom = match FiberGeometry::silica_in_vacuum(200e-9) {
        Ok(x) => x,
        Err(e) => {
            g.error("geometry", e);
            return g.finish();
        }
    };
    let w = wavelength_to_angular(780.241e-9);
    let detour = TraceOptions::default();
    let lossy = TraceOptions {
        pole_strategy: PoleStrategy::LossyEpsilon,
        ..detour
    };
    let setup = match prepare_real(&geom, w, &detour) {
        Ok(s) => s,
        Err(e) => {
            g.error("poles", e);
            return g.finish();
        }
    };
    let mut agree = 0;
    for k in 0..20 {
        let d = 50e-9 + 1150e-9 * k as f64 / 19.0;
        let r = geom.radius + d;
        match (
            trace_sc_real_prepared(&geom, r, &setup, &detour),
            trace_sc_real_prepared(&geom, r, &setup, &lossy),
        ) {
            (Ok(a), Ok(b)) => {
                let err = a.beta_error_estimate * a.value.norm() + b.beta_error_estimate * b.value.norm();
                let diff = (a.value - b.value).norm();
                if diff <= err {
                    agree += 1;
                } else {
                    g.failures
                        .push(format!("{:.0} nm: difference {diff:.3e} exceeds combined error {err:.3e}", d * 1e9));
                }
            }
            (Err(e), _) | (_, Err(e)) => g.error(&format!("{:.0} nm", d * 1e9), e),
        }
    }
    g.check(agree == 20, format!("{agree}/20 points agree within combined error estimates"));
    g.finish()
}

fn potential_group() -> GroupReport {
    let mut g = Group::new("potential");
    let geom = match FiberGeometry::silica_in_vacuum(200e-9) {
        Ok(x) => x,
        Err(e) => {
            g.error("geometry", e);
            return g.finish();
        }
    };
    let w = wavelength_to_angular(780.241e-9);
    match two_level_potentials(w, 2.98 * AU_DIPOLE, &geom, 400e-9, &PotentialOptions::default()) {
        Ok(t) => {
            g.check(t.ground == -t.excited_nonresonant, "ground mirrors excited nonresonant part".into());
            g.check(
                t.excited == t.excited_nonresonant + t.excited_resonant,
                "excited potential is the sum of its parts".into(),
            );
            g.check(t.ground < 0.0, "two-level ground state attracted".into());
        }
        Err(e) => g.error("two-level", e),
    }
    g.finish()
}

/// Runs every group. `catalog_text` is the raw catalog file (or the load
/// error), so that a corrupted catalog is reported rather than rejected.
pub fn run(catalog_text: Result<String, String>) -> ValidationReport {
    let groups = vec![
        catalog_group(catalog_text),
        permittivity_group(),
        special_function_group(),
        wigner_group(),
        green_group(),
        strategy_group(),
        potential_group(),
    ];
    ValidationReport {
        passed: groups.iter().all(|g| g.passed),
        groups,
    }
}

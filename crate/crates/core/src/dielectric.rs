//! Permittivity models for fused silica and simple media, evaluated at real
//! frequency (with losses) and on the imaginary frequency axis.
//!
//! The Gaussian-band model works in wavenumbers (cm^-1). Conversions between
//! rad/s and cm^-1 go through [`angular_to_wavenumber`] and
//! [`wavenumber_to_angular`] only.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{dawson, faddeeva};
use crate::units::SPEED_OF_LIGHT;

/// Default wavelength (m) where the silica models hand over.
pub const DEFAULT_SWITCH_WAVELENGTH: f64 = 7e-6;

const BUILTIN_SILICA: &str = include_str!("../../../data/silica.json");

/// Angular frequency (rad/s) to wavenumber (cm^-1).
pub fn angular_to_wavenumber(omega: f64) -> f64 {
    omega / (2.0 * PI * SPEED_OF_LIGHT * 100.0)
}

/// Wavenumber (cm^-1) to angular frequency (rad/s).
pub fn wavenumber_to_angular(eta: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT * 100.0 * eta
}

fn wavelength_um(omega: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / omega * 1e6
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityWindow {
    pub min_um: f64,
    pub max_um: f64,
}

impl ValidityWindow {
    pub fn contains_wavelength_um(&self, lambda_um: f64) -> bool {
        lambda_um >= self.min_um && lambda_um <= self.max_um
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SellmeierTerm {
    pub strength: f64,
    pub resonance_um: f64,
}

/// `eps = 1 + sum_j B_j lambda^2 / (lambda^2 - lambda_j^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SellmeierModel {
    pub terms: Vec<SellmeierTerm>,
    pub window: ValidityWindow,
    pub source: String,
}

impl SellmeierModel {
    fn resonance_omega(t: &SellmeierTerm) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / (t.resonance_um * 1e-6)
    }

    /// Permittivity at a complex angular frequency.
    pub fn eval_complex(&self, omega: Complex64) -> Complex64 {
        let mut eps = Complex64::new(1.0, 0.0);
        for t in &self.terms {
            let w2 = Self::resonance_omega(t).powi(2);
            eps += t.strength * w2 / (w2 - omega * omega);
        }
        eps
    }

    pub fn eval_real(&self, omega: f64) -> f64 {
        self.eval_complex(Complex64::new(omega, 0.0)).re
    }

    pub fn eval_imag(&self, u: f64) -> f64 {
        let mut eps = 1.0;
        for t in &self.terms {
            let w2 = Self::resonance_omega(t).powi(2);
            eps += t.strength * w2 / (w2 + u * u);
        }
        eps
    }

    pub fn static_value(&self) -> f64 {
        1.0 + self.terms.iter().map(|t| t.strength).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DawsonBand {
    pub alpha: f64,
    pub center_cm: f64,
    pub width_cm: f64,
}

/// Sum of Gaussian absorption bands with Kramers-Kronig consistent real part.
#[derive(Debug, Clone, PartialEq)]
pub struct DawsonModel {
    pub eps_inf: f64,
    pub terms: Vec<DawsonBand>,
    pub window: ValidityWindow,
    pub source: String,
}

fn band_scale(b: &DawsonBand) -> f64 {
    2.0 * 2f64.ln().sqrt() / b.width_cm
}

impl DawsonModel {
    /// Permittivity at a complex wavenumber (cm^-1), upper half plane
    /// included, `eps = eps_inf + sum_j i alpha_j (w(z_-) - w(z_+))`.
    pub fn eval_wavenumber_complex(&self, eta: Complex64) -> Result<Complex64> {
        let mut eps = Complex64::new(self.eps_inf, 0.0);
        for b in &self.terms {
            let s = band_scale(b);
            let zm = (eta - b.center_cm) * s;
            let zp = (eta + b.center_cm) * s;
            eps += Complex64::i() * b.alpha * (faddeeva(zm)? - faddeeva(zp)?);
        }
        Ok(eps)
    }

    /// Real-axis form written with the real Dawson function and Gaussians.
    pub fn eval_wavenumber_real_form(&self, eta: f64) -> Result<Complex64> {
        let mut re = self.eps_inf;
        let mut im = 0.0;
        for b in &self.terms {
            let s = band_scale(b);
            let xp = (eta + b.center_cm) * s;
            let xm = (eta - b.center_cm) * s;
            let dp = dawson(Complex64::new(xp, 0.0))?.re;
            let dm = dawson(Complex64::new(xm, 0.0))?.re;
            re += 2.0 * b.alpha / PI.sqrt() * (dp - dm);
            im += b.alpha * ((-xm * xm).exp() - (-xp * xp).exp());
        }
        Ok(Complex64::new(re, im))
    }

    /// `eps(i eta) = eps_inf + 2 sum_j alpha_j Im w(zeta_j)`, with
    /// `zeta_j = 2 sqrt(ln 2) (eta_j + i eta) / sigma_j`.
    pub fn eval_imag_wavenumber(&self, eta: f64) -> Result<f64> {
        let mut eps = self.eps_inf;
        for b in &self.terms {
            let zeta = Complex64::new(b.center_cm, eta) * band_scale(b);
            eps += 2.0 * b.alpha * faddeeva(zeta)?.im;
        }
        Ok(eps)
    }
}

/// Permittivity at a real frequency, with a flag for evaluation outside the
/// model's validity window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealFreqPermittivity {
    pub value: Complex64,
    pub outside_window: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PermittivityModel {
    Sellmeier(SellmeierModel),
    Dawson(DawsonModel),
    Constant(Complex64),
    /// Sellmeier below `switch_wavelength` (m), Gaussian bands above.
    AutoSilica {
        sellmeier: SellmeierModel,
        dawson: DawsonModel,
        switch_wavelength: f64,
    },
}

impl PermittivityModel {
    pub fn vacuum() -> Self {
        PermittivityModel::Constant(Complex64::new(1.0, 0.0))
    }

    pub fn constant(eps: f64) -> Self {
        PermittivityModel::Constant(Complex64::new(eps, 0.0))
    }

    /// Both silica models from the built-in data file, switching at
    /// `switch_wavelength` (m).
    pub fn silica_auto(switch_wavelength: f64) -> Result<Self> {
        let data = SilicaData::builtin()?;
        data.auto(switch_wavelength)
    }

    pub fn silica_sellmeier() -> Result<Self> {
        Ok(PermittivityModel::Sellmeier(SilicaData::builtin()?.sellmeier))
    }

    pub fn silica_dawson() -> Result<Self> {
        Ok(PermittivityModel::Dawson(SilicaData::builtin()?.dawson))
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            PermittivityModel::Sellmeier(_) => "sellmeier",
            PermittivityModel::Dawson(_) => "dawson",
            PermittivityModel::Constant(_) => "constant",
            PermittivityModel::AutoSilica { .. } => "auto-silica",
        }
    }

    /// The seam of an auto-silica model, if any.
    pub fn switch_wavelength(&self) -> Option<f64> {
        match self {
            PermittivityModel::AutoSilica { switch_wavelength, .. } => Some(*switch_wavelength),
            _ => None,
        }
    }

    /// The concrete model used at a real angular frequency. For anything but
    /// auto-silica that is the model itself.
    pub fn resolve_real(&self, omega: f64) -> PermittivityModel {
        match self {
            PermittivityModel::AutoSilica {
                sellmeier,
                dawson,
                switch_wavelength,
            } => {
                if wavelength_um(omega) * 1e-6 < *switch_wavelength {
                    PermittivityModel::Sellmeier(sellmeier.clone())
                } else {
                    PermittivityModel::Dawson(dawson.clone())
                }
            }
            other => other.clone(),
        }
    }

    pub fn eps_real_freq(&self, omega: f64) -> Result<RealFreqPermittivity> {
        if !omega.is_finite() || omega <= 0.0 {
            return Err(Error::Domain(format!(
                "real frequency must be finite and positive, got {omega}"
            )));
        }
        let lam = wavelength_um(omega);
        match self {
            PermittivityModel::Sellmeier(m) => Ok(RealFreqPermittivity {
                value: Complex64::new(m.eval_real(omega), 0.0),
                outside_window: !m.window.contains_wavelength_um(lam),
            }),
            PermittivityModel::Dawson(m) => Ok(RealFreqPermittivity {
                value: m.eval_wavenumber_complex(Complex64::new(angular_to_wavenumber(omega), 0.0))?,
                outside_window: !m.window.contains_wavelength_um(lam),
            }),
            PermittivityModel::Constant(e) => Ok(RealFreqPermittivity {
                value: *e,
                outside_window: false,
            }),
            PermittivityModel::AutoSilica { .. } => self.resolve_real(omega).eps_real_freq(omega),
        }
    }

    pub fn eps_imag_freq(&self, u: f64) -> Result<f64> {
        if !u.is_finite() || u < 0.0 {
            return Err(Error::Domain(format!(
                "imaginary frequency must be finite and nonnegative, got {u}"
            )));
        }
        match self {
            PermittivityModel::Sellmeier(m) => Ok(m.eval_imag(u)),
            PermittivityModel::Dawson(m) => m.eval_imag_wavenumber(angular_to_wavenumber(u)),
            PermittivityModel::Constant(e) => {
                if e.im != 0.0 {
                    return Err(Error::Domain(format!(
                        "a lossy constant permittivity {e} has no imaginary-axis continuation"
                    )));
                }
                Ok(e.re)
            }
            PermittivityModel::AutoSilica {
                sellmeier,
                dawson,
                switch_wavelength,
            } => {
                if u > 0.0 && 2.0 * PI * SPEED_OF_LIGHT / u < *switch_wavelength {
                    Ok(sellmeier.eval_imag(u))
                } else {
                    dawson.eval_imag_wavenumber(angular_to_wavenumber(u))
                }
            }
        }
    }

    /// Evaluation at an arbitrary complex frequency; `omega = i u` reproduces
    /// the imaginary-axis values up to rounding.
    pub fn eps_complex_freq(&self, omega: Complex64) -> Result<Complex64> {
        match self {
            PermittivityModel::Sellmeier(m) => Ok(m.eval_complex(omega)),
            PermittivityModel::Dawson(m) => {
                m.eval_wavenumber_complex(omega / (2.0 * PI * SPEED_OF_LIGHT * 100.0))
            }
            PermittivityModel::Constant(e) => Ok(*e),
            PermittivityModel::AutoSilica {
                sellmeier,
                dawson,
                switch_wavelength,
            } => {
                if 2.0 * PI * SPEED_OF_LIGHT / omega.norm() < *switch_wavelength {
                    Ok(sellmeier.eval_complex(omega))
                } else {
                    dawson.eval_wavenumber_complex(omega / (2.0 * PI * SPEED_OF_LIGHT * 100.0))
                }
            }
        }
    }

    /// Jumps of the real-frequency and imaginary-frequency values across the
    /// auto-silica seam; zero for the other variants.
    pub fn seam_discontinuity(&self) -> Result<(f64, f64)> {
        match self {
            PermittivityModel::AutoSilica {
                sellmeier,
                dawson,
                switch_wavelength,
            } => {
                let w = 2.0 * PI * SPEED_OF_LIGHT / switch_wavelength;
                let real = (Complex64::new(sellmeier.eval_real(w), 0.0)
                    - dawson.eval_wavenumber_complex(Complex64::new(angular_to_wavenumber(w), 0.0))?)
                .norm();
                let imag = (sellmeier.eval_imag(w)
                    - dawson.eval_imag_wavenumber(angular_to_wavenumber(w))?)
                .abs();
                Ok((real, imag))
            }
            _ => Ok((0.0, 0.0)),
        }
    }

    /// True when the imaginary part vanishes at this real frequency.
    pub fn is_lossless_at(&self, omega: f64) -> Result<bool> {
        Ok(self.eps_real_freq(omega)?.value.im == 0.0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
enum ModelRecord {
    Sellmeier {
        name: String,
        source: String,
        window_um: [f64; 2],
        terms: Vec<SellmeierTerm>,
    },
    Dawson {
        name: String,
        source: String,
        window_um: [f64; 2],
        eps_inf: f64,
        terms: Vec<DawsonBand>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PermittivityFile {
    schema: String,
    version: String,
    models: Vec<ModelRecord>,
}

/// Contents of a permittivity data file holding one Sellmeier and one
/// Gaussian-band model.
#[derive(Debug, Clone)]
pub struct SilicaData {
    pub version: String,
    pub sellmeier: SellmeierModel,
    pub dawson: DawsonModel,
}

impl SilicaData {
    pub fn builtin() -> Result<Self> {
        Self::from_json_str(BUILTIN_SILICA)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: PermittivityFile =
            serde_json::from_str(text).map_err(|e| Error::Data(format!("permittivity file: {e}")))?;
        if file.schema != "permittivity/1" {
            return Err(Error::Data(format!("unknown permittivity schema {}", file.schema)));
        }
        let mut sellmeier = None;
        let mut dawson = None;
        for m in file.models {
            match m {
                ModelRecord::Sellmeier {
                    source,
                    window_um,
                    terms,
                    ..
                } => {
                    if terms.iter().any(|t| t.strength < 0.0 || t.resonance_um <= 0.0) {
                        return Err(Error::Data("Sellmeier terms need B >= 0, lambda > 0".into()));
                    }
                    sellmeier = Some(SellmeierModel {
                        terms,
                        window: ValidityWindow {
                            min_um: window_um[0],
                            max_um: window_um[1],
                        },
                        source,
                    });
                }
                ModelRecord::Dawson {
                    source,
                    window_um,
                    eps_inf,
                    terms,
                    ..
                } => {
                    if terms.iter().any(|t| t.width_cm <= 0.0) {
                        return Err(Error::Data("band widths must be positive".into()));
                    }
                    dawson = Some(DawsonModel {
                        eps_inf,
                        terms,
                        window: ValidityWindow {
                            min_um: window_um[0],
                            max_um: window_um[1],
                        },
                        source,
                    });
                }
            }
        }
        match (sellmeier, dawson) {
            (Some(sellmeier), Some(dawson)) => Ok(SilicaData {
                version: file.version,
                sellmeier,
                dawson,
            }),
            _ => Err(Error::Data(
                "permittivity file needs one sellmeier and one dawson model".into(),
            )),
        }
    }

    pub fn auto(&self, switch_wavelength: f64) -> Result<PermittivityModel> {
        if !(switch_wavelength > 0.0 && switch_wavelength.is_finite()) {
            return Err(Error::Domain(format!(
                "switch wavelength must be positive, got {switch_wavelength}"
            )));
        }
        let model = PermittivityModel::AutoSilica {
            sellmeier: self.sellmeier.clone(),
            dawson: self.dawson.clone(),
            switch_wavelength,
        };
        let (dr, di) = model.seam_discontinuity()?;
        log::debug!(
            "silica seam at {:.3} um: |d eps(omega)| = {dr:.4}, |d eps(iu)| = {di:.4}",
            switch_wavelength * 1e6
        );
        Ok(model)
    }
}

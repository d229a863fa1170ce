//! Fine-structure levels, electric-dipole lines and the ground-state
//! polarizability, loaded from a versioned JSON catalog.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{AU_DIPOLE, BOHR_RADIUS, EPSILON_0, HBAR, SPEED_OF_LIGHT};

/// Text of the shipped rubidium catalog.
pub const BUILTIN_RUBIDIUM: &str = include_str!("../../../data/rubidium.json");
const SCHEMA: &str = "atomic-catalog/1";
const ORBITAL_LETTERS: &str = "SPDFGH";

/// Angular frequency (rad/s) of an energy given in cm^-1.
pub fn wavenumber_to_angular(e_cm: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT * 100.0 * e_cm
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FineLevel {
    pub label: String,
    pub n: u32,
    pub l: u32,
    pub twice_j: u32,
    /// Above the ground state, cm^-1.
    pub energy_cm: f64,
}

impl FineLevel {
    pub fn j(&self) -> f64 {
        self.twice_j as f64 / 2.0
    }

    /// `2J + 1`.
    pub fn degeneracy(&self) -> f64 {
        (self.twice_j + 1) as f64
    }

    pub fn omega(&self) -> f64 {
        wavenumber_to_angular(self.energy_cm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionLine {
    pub upper: String,
    pub lower: String,
    /// `<n'J'||D||nJ>` in e a0.
    pub reduced_d_au: f64,
    #[serde(default)]
    pub source: String,
    /// Optional tabulated vacuum wavelength, checked against the level energies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavelength_nm: Option<f64>,
}

impl TransitionLine {
    pub fn id(&self) -> String {
        format!("{}-{}", self.lower, self.upper)
    }

    pub fn touches(&self, label: &str) -> bool {
        self.upper == label || self.lower == label
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Inclusion {
    pub targets: Vec<String>,
    #[serde(default)]
    pub extension: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `omega_ab < 0`: the partner lies above.
    Upward,
    /// `omega_ab > 0`: the partner lies below.
    Downward,
}

/// One line seen from a chosen initial level `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub line: TransitionLine,
    pub partner: String,
    /// `omega_a - omega_b`, rad/s.
    pub omega_ab: f64,
    pub direction: Direction,
    /// `2 J_a + 1` of the initial level.
    pub initial_degeneracy: f64,
}

impl Transition {
    /// `|<||D||>|^2 / (2 J_a + 1)` in (C m)^2.
    pub fn weight_si(&self) -> f64 {
        let d = self.line.reduced_d_au * AU_DIPOLE;
        d * d / self.initial_degeneracy
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.omega_ab.abs()
    }
}

/// Scalar polarizability at imaginary frequency in three unit systems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polarizability {
    /// C m^2 / V.
    pub si: f64,
    /// `alpha / (4 pi eps0)`, m^3.
    pub volume: f64,
    /// Atomic units, `alpha / (4 pi eps0 a0^3)`.
    pub atomic_units: f64,
}

/// Problems found by [`Catalog::audit`].
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogIssue {
    pub item: String,
    pub problem: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub schema: String,
    pub version: String,
    #[serde(default)]
    pub element: String,
    pub mass_amu: f64,
    pub ground: String,
    #[serde(default)]
    pub source: String,
    pub levels: Vec<FineLevel>,
    pub lines: Vec<TransitionLine>,
    #[serde(default)]
    pub inclusion: BTreeMap<String, Inclusion>,
}

impl Catalog {
    /// The shipped rubidium catalog.
    pub fn builtin() -> Result<Self> {
        Self::from_json_str(BUILTIN_RUBIDIUM)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// Parses and validates.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cat = Self::parse_unchecked(text)?;
        cat.validate()?;
        Ok(cat)
    }

    /// Parses without the consistency checks, so that a broken file can
    /// still be audited.
    pub fn parse_unchecked(text: &str) -> Result<Self> {
        let cat: Catalog =
            serde_json::from_str(text).map_err(|e| Error::Data(format!("atomic catalog: {e}")))?;
        if cat.schema != SCHEMA {
            return Err(Error::Data(format!("unknown catalog schema {}", cat.schema)));
        }
        Ok(cat)
    }

    pub fn validate(&self) -> Result<()> {
        match self.audit().first() {
            None => Ok(()),
            Some(issue) => Err(Error::Data(format!("{}: {}", issue.item, issue.problem))),
        }
    }

    /// Every consistency violation: level energies, selection rules,
    /// tabulated wavelengths, and dangling references.
    pub fn audit(&self) -> Vec<CatalogIssue> {
        let mut issues = Vec::new();
        let mut push = |item: &str, problem: String| {
            issues.push(CatalogIssue {
                item: item.to_string(),
                problem,
            })
        };
        let mut seen = BTreeMap::new();
        for lv in &self.levels {
            if seen.insert(lv.label.as_str(), ()).is_some() {
                push(&lv.label, "duplicate level".into());
            }
            if !(lv.energy_cm >= 0.0 && lv.energy_cm.is_finite()) {
                push(&lv.label, format!("energy {} cm^-1 is negative", lv.energy_cm));
            }
            let letter = ORBITAL_LETTERS.chars().nth(lv.l as usize);
            let expected = letter.map(|c| format!("{}{}{}/2", lv.n, c, lv.twice_j));
            if expected.as_deref() != Some(lv.label.as_str()) {
                push(&lv.label, "label does not match n, l, 2J".into());
            }
            if lv.twice_j % 2 != 1 || lv.twice_j.abs_diff(2 * lv.l) != 1 {
                push(&lv.label, format!("J = {} impossible for l = {} and one electron", lv.j(), lv.l));
            }
        }
        let at_zero: Vec<&FineLevel> = self.levels.iter().filter(|l| l.energy_cm == 0.0).collect();
        if at_zero.len() != 1 || at_zero[0].label != self.ground {
            push(&self.ground, "the ground level must be the unique level at zero energy".into());
        }
        for line in &self.lines {
            let id = line.id();
            let (Some(up), Some(lo)) = (self.level(&line.upper).ok(), self.level(&line.lower).ok()) else {
                push(&id, "refers to an unknown level".into());
                continue;
            };
            if up.energy_cm <= lo.energy_cm {
                push(&id, "upper level lies below the lower level".into());
            }
            if up.l.abs_diff(lo.l) != 1 {
                push(&id, format!("violates Delta L = +-1 (L = {} -> {})", lo.l, up.l));
            }
            if up.twice_j.abs_diff(lo.twice_j) > 2 || (up.twice_j == 0 && lo.twice_j == 0) {
                push(&id, format!("violates |Delta J| <= 1 (J = {} -> {})", lo.j(), up.j()));
            }
            if !line.reduced_d_au.is_finite() {
                push(&id, "reduced matrix element is not finite".into());
            }
            if let Some(nm) = line.wavelength_nm {
                let from_levels = 1e7 / (up.energy_cm - lo.energy_cm);
                if ((nm - from_levels) / from_levels).abs() > 1e-6 {
                    push(&id, format!("tabulated {nm} nm vs {from_levels} nm from the levels"));
                }
            }
        }
        for (state, inc) in &self.inclusion {
            if self.level(state).is_err() {
                push(state, "inclusion list for an unknown level".into());
                continue;
            }
            for t in inc.targets.iter().chain(&inc.extension) {
                if self.find_line(state, t).is_none() {
                    push(state, format!("no line to {t}"));
                }
            }
        }
        issues
    }

    pub fn level(&self, label: &str) -> Result<&FineLevel> {
        self.levels
            .iter()
            .find(|l| l.label == label)
            .ok_or_else(|| Error::Lookup(format!("level {label} not in catalog {}", self.version)))
    }

    pub fn ground_level(&self) -> Result<&FineLevel> {
        self.level(&self.ground)
    }

    fn find_line(&self, a: &str, b: &str) -> Option<&TransitionLine> {
        self.lines
            .iter()
            .find(|l| (l.upper == a && l.lower == b) || (l.upper == b && l.lower == a))
    }

    /// `omega_upper - omega_lower` of a line, rad/s.
    pub fn line_omega(&self, line: &TransitionLine) -> Result<f64> {
        Ok(self.level(&line.upper)?.omega() - self.level(&line.lower)?.omega())
    }

    pub fn line_wavelength(&self, line: &TransitionLine) -> Result<f64> {
        Ok(2.0 * PI * SPEED_OF_LIGHT / self.line_omega(line)?)
    }

    fn transition(&self, a: &FineLevel, line: &TransitionLine) -> Result<Transition> {
        let partner = if line.upper == a.label { &line.lower } else { &line.upper };
        let omega_ab = a.omega() - self.level(partner)?.omega();
        Ok(Transition {
            line: line.clone(),
            partner: partner.clone(),
            omega_ab,
            direction: if omega_ab > 0.0 {
                Direction::Downward
            } else {
                Direction::Upward
            },
            initial_degeneracy: a.degeneracy(),
        })
    }

    fn collect(&self, label: &str, with_extension: bool) -> Result<Vec<Transition>> {
        let a = self.level(label)?;
        let lines: Vec<&TransitionLine> = match self.inclusion.get(label) {
            Some(inc) => {
                let mut v = Vec::new();
                let extra: &[String] = if with_extension { &inc.extension } else { &[] };
                for t in inc.targets.iter().chain(extra) {
                    v.push(self.find_line(label, t).ok_or_else(|| {
                        Error::Lookup(format!("no line between {label} and {t}"))
                    })?);
                }
                v
            }
            None => self.lines.iter().filter(|l| l.touches(label)).collect(),
        };
        lines.into_iter().map(|l| self.transition(a, l)).collect()
    }

    /// The configured lines of `label`; all lines touching it when the
    /// catalog has no inclusion list for it.
    pub fn transitions_from(&self, label: &str) -> Result<Vec<Transition>> {
        self.collect(label, false)
    }

    /// Configured lines plus the next shell, for truncation audits.
    pub fn transitions_with_extension(&self, label: &str) -> Result<Vec<Transition>> {
        self.collect(label, true)
    }

    /// `|<||D||>| / sqrt(2 J_initial + 1)` in e a0.
    pub fn normalized_reduced_d(&self, line: &TransitionLine, initial: &str) -> Result<f64> {
        if !line.touches(initial) {
            return Err(Error::Lookup(format!("{initial} is not an endpoint of {}", line.id())));
        }
        Ok(line.reduced_d_au.abs() / self.level(initial)?.degeneracy().sqrt())
    }

    /// Einstein A coefficient of a line, 1/s.
    pub fn spontaneous_rate(&self, line: &TransitionLine) -> Result<f64> {
        let w = self.line_omega(line)?;
        let d = line.reduced_d_au * AU_DIPOLE;
        let g_up = self.level(&line.upper)?.degeneracy();
        Ok(w.powi(3) * d * d / (3.0 * PI * EPSILON_0 * HBAR * SPEED_OF_LIGHT.powi(3) * g_up))
    }

    /// Scalar polarizability of the ground level at imaginary frequency `u`,
    /// summed over its configured lines.
    pub fn polarizability_iu(&self, u: f64) -> Result<Polarizability> {
        if !(u >= 0.0) {
            return Err(Error::Domain(format!("imaginary frequency must be nonnegative, got {u}")));
        }
        let g = self.ground_level()?;
        let lines = self.transitions_from(&g.label)?;
        if lines.is_empty() {
            return Err(Error::Data(format!("no lines from the ground level {}", g.label)));
        }
        let mut sum = 0.0;
        for t in &lines {
            let w = -t.omega_ab;
            let d = t.line.reduced_d_au * AU_DIPOLE;
            sum += d * d * w / (w * w + u * u);
        }
        let si = 2.0 / (3.0 * g.degeneracy() * HBAR) * sum;
        let volume = si / (4.0 * PI * EPSILON_0);
        Ok(Polarizability {
            si,
            volume,
            atomic_units: volume / BOHR_RADIUS.powi(3),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_catalog_is_consistent() {
        let cat = Catalog::builtin().unwrap();
        assert!(cat.audit().is_empty());
        assert_eq!(cat.ground_level().unwrap().energy_cm, 0.0);
    }

    #[test]
    fn directions_follow_energy_order() {
        let cat = Catalog::builtin().unwrap();
        let from_g = cat.transitions_from("5S1/2").unwrap();
        assert_eq!(from_g.len(), 8);
        assert!(from_g.iter().all(|t| t.direction == Direction::Upward && t.omega_ab < 0.0));
        let down: Vec<_> = cat
            .transitions_from("5P3/2")
            .unwrap()
            .into_iter()
            .filter(|t| t.direction == Direction::Downward)
            .collect();
        assert_eq!(down.len(), 1);
        assert_eq!(down[0].partner, "5S1/2");
    }

    #[test]
    fn unknown_level_is_a_lookup_error() {
        let cat = Catalog::builtin().unwrap();
        assert!(matches!(cat.transitions_from("99Z1/2"), Err(Error::Lookup(_))));
    }

    #[test]
    fn empty_inclusion_gives_no_lines() {
        let mut cat = Catalog::builtin().unwrap();
        cat.inclusion.insert("5P1/2".into(), Inclusion::default());
        assert!(cat.transitions_from("5P1/2").unwrap().is_empty());
    }

    #[test]
    fn injected_selection_rule_violation_is_reported() {
        let mut cat = Catalog::builtin().unwrap();
        cat.lines.push(TransitionLine {
            upper: "6S1/2".into(),
            lower: "5S1/2".into(),
            reduced_d_au: 1.0,
            source: "fault".into(),
            wavelength_nm: None,
        });
        let issues = cat.audit();
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].item, "5S1/2-6S1/2");
        assert!(cat.validate().is_err());
    }
}

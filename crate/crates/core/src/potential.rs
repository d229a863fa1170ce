//! Casimir-Polder potentials of a multilevel atom near the fiber, radial
//! forces, and surface-induced shifts of transition frequencies.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::atomdata::{Catalog, Direction, Transition, TransitionLine};
use crate::error::{Error, Result};
use crate::green::{
    prepare_real, trace_sc_imag_flagged, trace_sc_real_prepared, FiberGeometry, RealFrequencySetup,
    TraceOptions,
};
use crate::quadrature::{adaptive_vec, Tolerance};
use crate::units::{
    joule_to_microkelvin, newton_to_zeptonewton, ATOMIC_MASS_UNIT, BOLTZMANN, EPSILON_0, HBAR,
    SPEED_OF_LIGHT,
};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialOptions {
    pub trace: TraceOptions,
    /// Relative tolerance of the imaginary-frequency integral.
    pub u_rel_tol: f64,
    pub u_max_intervals: usize,
}

impl Default for PotentialOptions {
    fn default() -> Self {
        PotentialOptions {
            trace: TraceOptions::default(),
            u_rel_tol: 1e-6,
            u_max_intervals: 400,
        }
    }
}

/// An energy with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energy {
    /// Joules.
    pub value: f64,
    pub abs_error: f64,
    pub converged: bool,
}

impl Energy {
    fn zero() -> Self {
        Energy {
            value: 0.0,
            abs_error: 0.0,
            converged: true,
        }
    }

    pub fn microkelvin(&self) -> f64 {
        joule_to_microkelvin(self.value)
    }
}

/// Contribution of one line to the potential of the initial level.
#[derive(Debug, Clone, PartialEq)]
pub struct LineContribution {
    pub partner: String,
    pub omega_ab: f64,
    pub nonresonant: f64,
    pub resonant: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialValue {
    pub nonresonant: Energy,
    pub resonant: Energy,
    pub lines: Vec<LineContribution>,
}

impl PotentialValue {
    pub fn total(&self) -> f64 {
        self.nonresonant.value + self.resonant.value
    }

    pub fn converged(&self) -> bool {
        self.nonresonant.converged && self.resonant.converged
    }
}

/// `-omega_ab / (3 pi eps0 c^2) |<||D||>|^2 / (2 J_a + 1)`.
fn nonresonant_weight(t: &Transition) -> f64 {
    -t.omega_ab / (3.0 * PI * EPSILON_0 * SPEED_OF_LIGHT * SPEED_OF_LIGHT) * t.weight_si()
}

/// `-omega_ab^2 / (3 eps0 c^2) |<||D||>|^2 / (2 J_a + 1)`.
fn resonant_weight(t: &Transition) -> f64 {
    -t.omega_ab * t.omega_ab / (3.0 * EPSILON_0 * SPEED_OF_LIGHT * SPEED_OF_LIGHT) * t.weight_si()
}

/// With `eps_2(iu) >= 1` the trace decays at least like
/// `exp(-2 u (r - a)/c)`; beyond this `u` the factor is below `e^-80` and
/// the integrand is dropped.
fn u_cutoff(geom: &FiberGeometry, r: f64) -> f64 {
    80.0 * SPEED_OF_LIGHT / (2.0 * (r - geom.radius))
}

/// Lorentzian-weighted integrals `int_0^inf du u^2/(w_b^2 + u^2) Tr G(iu)`
/// for every `w_b` at once (one trace per node), with the error controlled
/// on `sum_b weights[b] * integral_b`.
pub fn lorentz_weighted_trace_integrals(
    omegas: &[f64],
    weights: &[f64],
    geom: &FiberGeometry,
    r: f64,
    opts: &PotentialOptions,
) -> Result<(Vec<f64>, f64, bool)> {
    if omegas.is_empty() {
        return Ok((Vec::new(), 0.0, true));
    }
    if !(r > geom.radius) {
        return Err(Error::Domain(format!("r = {r} must exceed the fiber radius {}", geom.radius)));
    }
    let u0 = SPEED_OF_LIGHT / (2.0 * (r - geom.radius));
    let cut = u_cutoff(geom, r);
    let t_of = |u: f64| u / (u + u0);
    let mut breaks = vec![0.0, 1.0];
    for k in -3..=3 {
        breaks.push(t_of(u0 * 10f64.powi(k)));
    }
    if let Some(sw) = geom.eps_inner.switch_wavelength() {
        breaks.push(t_of(2.0 * PI * SPEED_OF_LIGHT / sw));
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mut trace_ok = true;
    let mut f = |t: f64, out: &mut [Complex64]| -> Result<()> {
        let s = 1.0 - t;
        let u = u0 * t / s;
        if !(u < cut) {
            out.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            return Ok(());
        }
        let jac = u0 / (s * s);
        let tr = trace_sc_imag_flagged(geom, r, u, &opts.trace)?;
        trace_ok &= tr.converged;
        for (o, &w) in out.iter_mut().zip(omegas) {
            *o = Complex64::new(u * u / (w * w + u * u) * tr.value.re * jac, 0.0);
        }
        Ok(())
    };
    let tol = Tolerance {
        rel: opts.u_rel_tol,
        abs: 0.0,
        max_intervals: opts.u_max_intervals,
    };
    let q = adaptive_vec(&mut f, weights, &breaks, &tol)?;
    Ok((
        q.values.iter().map(|v| v.re).collect(),
        q.abs_error_estimate,
        q.converged && trace_ok,
    ))
}

/// Position-independent data for one initial level: its lines and the
/// real-frequency setups of the downward ones.
#[derive(Debug, Clone)]
pub struct StateSetup {
    pub state: String,
    pub transitions: Vec<Transition>,
    resonant: Vec<(usize, RealFrequencySetup)>,
}

impl StateSetup {
    pub fn new(state: &str, transitions: Vec<Transition>, geom: &FiberGeometry, opts: &PotentialOptions) -> Result<Self> {
        let mut resonant = Vec::new();
        for (i, t) in transitions.iter().enumerate() {
            if t.direction == Direction::Downward {
                resonant.push((i, prepare_real(geom, t.omega_ab, &opts.trace)?));
            }
        }
        Ok(StateSetup {
            state: state.to_string(),
            transitions,
            resonant,
        })
    }

    /// The configured lines of `state` from the catalog.
    pub fn from_catalog(state: &str, catalog: &Catalog, geom: &FiberGeometry, opts: &PotentialOptions) -> Result<Self> {
        Self::new(state, catalog.transitions_from(state)?, geom, opts)
    }

    pub fn nonresonant(&self, geom: &FiberGeometry, r: f64, opts: &PotentialOptions) -> Result<(Energy, Vec<f64>)> {
        if self.transitions.is_empty() {
            return Ok((Energy::zero(), Vec::new()));
        }
        let omegas: Vec<f64> = self.transitions.iter().map(|t| t.omega_ab).collect();
        let weights: Vec<f64> = self.transitions.iter().map(nonresonant_weight).collect();
        let (ints, err, ok) = lorentz_weighted_trace_integrals(&omegas, &weights, geom, r, opts)?;
        let parts: Vec<f64> = ints.iter().zip(&weights).map(|(i, w)| i * w).collect();
        Ok((
            Energy {
                value: parts.iter().sum(),
                abs_error: err,
                converged: ok,
            },
            parts,
        ))
    }

    pub fn resonant(&self, geom: &FiberGeometry, r: f64, opts: &PotentialOptions) -> Result<(Energy, Vec<f64>)> {
        let mut parts = vec![0.0; self.transitions.len()];
        let mut e = Energy::zero();
        for (i, setup) in &self.resonant {
            let w = resonant_weight(&self.transitions[*i]);
            let tr = trace_sc_real_prepared(geom, r, setup, &opts.trace)?;
            parts[*i] = w * tr.value.re;
            e.value += parts[*i];
            e.abs_error += (w * tr.value.norm() * tr.beta_error_estimate).abs();
            e.converged &= tr.converged;
        }
        Ok((e, parts))
    }

    pub fn potential(&self, geom: &FiberGeometry, r: f64, opts: &PotentialOptions) -> Result<PotentialValue> {
        let (nres, pn) = self.nonresonant(geom, r, opts)?;
        let (res, pr) = self.resonant(geom, r, opts)?;
        let lines = self
            .transitions
            .iter()
            .enumerate()
            .map(|(i, t)| LineContribution {
                partner: t.partner.clone(),
                omega_ab: t.omega_ab,
                nonresonant: pn.get(i).copied().unwrap_or(0.0),
                resonant: pr[i],
            })
            .collect();
        Ok(PotentialValue {
            nonresonant: nres,
            resonant: res,
            lines,
        })
    }
}

/// Nonresonant part of the potential of `state` at distance `r` from the
/// fiber axis.
pub fn u_nonresonant(
    state: &str,
    catalog: &Catalog,
    geom: &FiberGeometry,
    r: f64,
    opts: &PotentialOptions,
) -> Result<Energy> {
    let setup = StateSetup::new(state, catalog.transitions_from(state)?, geom, opts)?;
    Ok(setup.nonresonant(geom, r, opts)?.0)
}

/// Resonant part; only downward lines contribute.
pub fn u_resonant(
    state: &str,
    catalog: &Catalog,
    geom: &FiberGeometry,
    r: f64,
    opts: &PotentialOptions,
) -> Result<Energy> {
    let setup = StateSetup::from_catalog(state, catalog, geom, opts)?;
    Ok(setup.resonant(geom, r, opts)?.0)
}

/// Potentials of an isotropic two-level atom with transition frequency
/// `omega0` and dipole `d` (C m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelPotentials {
    pub ground: f64,
    pub excited: f64,
    pub excited_nonresonant: f64,
    pub excited_resonant: f64,
    pub abs_error: f64,
    pub converged: bool,
}

pub fn two_level_potentials(
    omega0: f64,
    d: f64,
    geom: &FiberGeometry,
    r: f64,
    opts: &PotentialOptions,
) -> Result<TwoLevelPotentials> {
    if !(omega0 > 0.0) {
        return Err(Error::Domain(format!("transition frequency must be positive, got {omega0}")));
    }
    let pref = omega0 * d * d / (3.0 * PI * EPSILON_0 * SPEED_OF_LIGHT * SPEED_OF_LIGHT);
    let (ints, err, ok) = lorentz_weighted_trace_integrals(&[omega0], &[pref], geom, r, opts)?;
    let nres = -pref * ints[0];
    let setup = prepare_real(geom, omega0, &opts.trace)?;
    let tr = trace_sc_real_prepared(geom, r, &setup, &opts.trace)?;
    let rpref = omega0 * omega0 * d * d / (3.0 * EPSILON_0 * SPEED_OF_LIGHT * SPEED_OF_LIGHT);
    let res = -rpref * tr.value.re;
    Ok(TwoLevelPotentials {
        ground: -nres,
        excited: nres + res,
        excited_nonresonant: nres,
        excited_resonant: res,
        abs_error: err + rpref * tr.value.norm() * tr.beta_error_estimate,
        converged: ok && tr.converged,
    })
}

/// Mean potentials of the two terms of one line, each from that line alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanPotentials {
    pub lower: f64,
    pub upper_nonresonant: f64,
    pub upper_resonant: f64,
}

impl MeanPotentials {
    pub fn upper(&self) -> f64 {
        self.upper_nonresonant + self.upper_resonant
    }
}

/// Sublevel-averaged potentials of the lower and upper fine-structure terms
/// of `line`, counting only this line. Only `(n, J)` of the terms enter.
pub fn mean_potentials(
    line: &TransitionLine,
    catalog: &Catalog,
    geom: &FiberGeometry,
    r: f64,
    opts: &PotentialOptions,
) -> Result<MeanPotentials> {
    let lower = catalog.level(&line.lower)?;
    let upper = catalog.level(&line.upper)?;
    let w = upper.omega() - lower.omega();
    let d2 = (line.reduced_d_au * crate::units::AU_DIPOLE).powi(2);
    let pref = w / (3.0 * PI * EPSILON_0 * SPEED_OF_LIGHT * SPEED_OF_LIGHT) * d2;
    let (ints, _, _) = lorentz_weighted_trace_integrals(&[w], &[pref], geom, r, opts)?;
    let setup = prepare_real(geom, w, &opts.trace)?;
    let tr = trace_sc_real_prepared(geom, r, &setup, &opts.trace)?;
    let rpref = w * w / (3.0 * EPSILON_0 * SPEED_OF_LIGHT * SPEED_OF_LIGHT) * d2;
    Ok(MeanPotentials {
        lower: pref / lower.degeneracy() * ints[0],
        upper_nonresonant: -pref / upper.degeneracy() * ints[0],
        upper_resonant: -rpref / upper.degeneracy() * tr.value.re,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialCurve {
    pub state: String,
    pub radius: f64,
    /// Distances from the fiber axis, m.
    pub r_grid: Vec<f64>,
    /// Joules.
    pub total: Vec<f64>,
    pub nonresonant: Vec<f64>,
    pub resonant: Vec<f64>,
    /// Radial force `-dU/dr`, N.
    pub force: Vec<f64>,
    pub abs_error: Vec<f64>,
    pub converged: Vec<bool>,
    /// Failure message of points that could not be evaluated (values NaN).
    pub failures: Vec<Option<String>>,
}

impl PotentialCurve {
    pub fn total_microkelvin(&self) -> Vec<f64> {
        self.total.iter().map(|&u| joule_to_microkelvin(u)).collect()
    }

    pub fn force_zeptonewton(&self) -> Vec<f64> {
        self.force.iter().map(|&f| newton_to_zeptonewton(f)).collect()
    }

    pub fn distances(&self) -> Vec<f64> {
        self.r_grid.iter().map(|r| r - self.radius).collect()
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }
}

/// Derivative at `x0` of the polynomial through `(xs, ys)`.
fn lagrange_derivative(xs: &[f64], ys: &[f64], x0: f64) -> f64 {
    let n = xs.len();
    let mut d = 0.0;
    for j in 0..n {
        let mut denom = 1.0;
        for m in 0..n {
            if m != j {
                denom *= xs[j] - xs[m];
            }
        }
        let mut num = 0.0;
        for k in 0..n {
            if k == j {
                continue;
            }
            let mut p = 1.0;
            for m in 0..n {
                if m != j && m != k {
                    p *= x0 - xs[m];
                }
            }
            num += p;
        }
        d += ys[j] * num / denom;
    }
    d
}

/// `dU/dr` on the grid from five-point stencils, centred in the interior
/// and one-sided at the ends.
pub fn grid_derivative(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let w = n.min(5);
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(w / 2).min(n - w);
            lagrange_derivative(&xs[lo..lo + w], &ys[lo..lo + w], xs[i])
        })
        .collect()
}

/// The potential of a prepared state on a grid, points in parallel.
pub fn curve_from_setup(
    setup: &StateSetup,
    geom: &FiberGeometry,
    r_grid: &[f64],
    opts: &PotentialOptions,
) -> Result<PotentialCurve> {
    if r_grid.is_empty() {
        return Err(Error::Grid("empty grid".into()));
    }
    if r_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Grid("grid must be strictly increasing".into()));
    }
    if !(r_grid[0] > geom.radius) {
        return Err(Error::Grid(format!("grid starts inside the fiber (r = {})", r_grid[0])));
    }
    let points: Vec<Result<PotentialValue>> = r_grid.par_iter().map(|&r| setup.potential(geom, r, opts)).collect();
    let n = r_grid.len();
    let mut curve = PotentialCurve {
        state: setup.state.clone(),
        radius: geom.radius,
        r_grid: r_grid.to_vec(),
        total: Vec::with_capacity(n),
        nonresonant: Vec::with_capacity(n),
        resonant: Vec::with_capacity(n),
        force: Vec::new(),
        abs_error: Vec::with_capacity(n),
        converged: Vec::with_capacity(n),
        failures: Vec::with_capacity(n),
    };
    for p in points {
        match p {
            Ok(v) => {
                curve.total.push(v.total());
                curve.nonresonant.push(v.nonresonant.value);
                curve.resonant.push(v.resonant.value);
                curve.abs_error.push(v.nonresonant.abs_error + v.resonant.abs_error);
                curve.converged.push(v.converged());
                curve.failures.push(None);
            }
            Err(e) => {
                curve.total.push(f64::NAN);
                curve.nonresonant.push(f64::NAN);
                curve.resonant.push(f64::NAN);
                curve.abs_error.push(f64::NAN);
                curve.converged.push(false);
                curve.failures.push(Some(e.to_string()));
            }
        }
    }
    curve.force = if n >= 2 {
        grid_derivative(r_grid, &curve.total).into_iter().map(|d| -d).collect()
    } else {
        vec![f64::NAN]
    };
    Ok(curve)
}

pub fn potential_curve(
    state: &str,
    catalog: &Catalog,
    geom: &FiberGeometry,
    r_grid: &[f64],
    opts: &PotentialOptions,
) -> Result<PotentialCurve> {
    let setup = StateSetup::from_catalog(state, catalog, geom, opts)?;
    curve_from_setup(&setup, geom, r_grid, opts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftCurve {
    pub r_grid: Vec<f64>,
    /// `(U_upper - U_lower) / hbar`, rad/s.
    pub delta_omega: Vec<f64>,
}

impl ShiftCurve {
    pub fn megahertz(&self) -> Vec<f64> {
        self.delta_omega.iter().map(|&w| crate::units::angular_to_mhz(w)).collect()
    }
}

pub fn frequency_shift(upper: &PotentialCurve, lower: &PotentialCurve) -> Result<ShiftCurve> {
    if upper.r_grid != lower.r_grid {
        return Err(Error::Grid("the two curves use different grids".into()));
    }
    Ok(ShiftCurve {
        r_grid: upper.r_grid.clone(),
        delta_omega: upper
            .total
            .iter()
            .zip(&lower.total)
            .map(|(a, b)| (a - b) / HBAR)
            .collect(),
    })
}

/// `hbar^2 k^2 / (2 m k_B)` in nK for a photon of vacuum wavelength
/// `wavelength` (m) and atomic mass `mass_amu`.
pub fn recoil_energy(wavelength: f64, mass_amu: f64) -> Result<f64> {
    if !(wavelength > 0.0 && mass_amu > 0.0) {
        return Err(Error::Domain("wavelength and mass must be positive".into()));
    }
    let k = 2.0 * PI / wavelength;
    let m = mass_amu * ATOMIC_MASS_UNIT;
    Ok((HBAR * k).powi(2) / (2.0 * m * BOLTZMANN) * 1e9)
}

/// Largest spontaneous-scattering force `hbar k gamma / 2`, N.
pub fn spontaneous_force_max(wavelength: f64, gamma: f64) -> Result<f64> {
    if !(wavelength > 0.0 && gamma > 0.0) {
        return Err(Error::Domain("wavelength and decay rate must be positive".into()));
    }
    Ok(HBAR * 2.0 * PI / wavelength * gamma / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_point_derivative_is_exact_for_quartics() {
        let xs: Vec<f64> = (0..9).map(|k| 1.0 + 0.3 * k as f64 + 0.01 * (k * k) as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.powi(4) - 2.0 * x).collect();
        let d = grid_derivative(&xs, &ys);
        for (x, di) in xs.iter().zip(d) {
            let want = 4.0 * x.powi(3) - 2.0;
            assert!((di - want).abs() < 1e-9 * want.abs());
        }
    }

    #[test]
    fn two_point_grid_gives_slope() {
        assert_eq!(grid_derivative(&[1.0, 3.0], &[2.0, 6.0]), vec![2.0, 2.0]);
    }

    #[test]
    fn recoil_scales_with_inverse_square_wavelength() {
        let a = recoil_energy(780e-9, 86.909).unwrap();
        let b = recoil_energy(1560e-9, 86.909).unwrap();
        assert!((a / b - 4.0).abs() < 1e-12);
    }
}

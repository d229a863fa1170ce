//! Scattering Green tensor of an infinite dielectric cylinder at coincident
//! points.
//!
//! Both frequency kinds share one integrand. Writing `kappa_j^2` for
//! `eps_j(iu) u^2/c^2` at imaginary frequency and for `-eps_j(w) w^2/c^2` at
//! real frequency, and `q_j = sqrt(beta^2 + kappa_j^2)`, the real-frequency
//! trace is the analytic continuation of the imaginary-frequency one with
//! `H_n(eta r)` replaced by `K_n(q r)` through `eta = i q`. Every Bessel
//! function then enters as a logarithmic derivative or as the ratio
//! `K_n(q_2 r)/K_n(q_2 a)`, which stays bounded along the whole path.
//!
//! The tensor keeps the cross terms carried by `B` and `D`, which some
//! cavity treatments drop.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dielectric::PermittivityModel;
use crate::error::{Error, Result};
use crate::quadrature::{
    integrate_beta_with_detours, integrate_marching, ContourPoint, ContourSpec,
    GuidedPole, HalfPlane, PoleAvoidancePlan, Tolerance, VectorQuadrature,
};
use crate::specfun::{bessel_j, bessel_j_deriv, bessel_k_scaled, i_log_derivs, KLadder, MAX_ORDER};
use crate::units::SPEED_OF_LIGHT;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Square root with the cut approached from below: a negative real argument
/// gives `-i sqrt(|z|)`, which is the outgoing-wave branch.
pub fn outgoing_sqrt(z: Complex64) -> Complex64 {
    if z.im == 0.0 && z.re < 0.0 {
        c(0.0, -(-z.re).sqrt())
    } else {
        z.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiberGeometry {
    /// Cylinder radius (m).
    pub radius: f64,
    pub eps_inner: PermittivityModel,
    pub eps_outer: PermittivityModel,
}

impl FiberGeometry {
    pub fn new(radius: f64, eps_inner: PermittivityModel, eps_outer: PermittivityModel) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain(format!("fiber radius must be positive, got {radius}")));
        }
        Ok(FiberGeometry {
            radius,
            eps_inner,
            eps_outer,
        })
    }

    /// Fused-silica fiber in vacuum with the default model switch.
    pub fn silica_in_vacuum(radius: f64) -> Result<Self> {
        Self::new(
            radius,
            PermittivityModel::silica_auto(crate::dielectric::DEFAULT_SWITCH_WAVELENGTH)?,
            PermittivityModel::vacuum(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrequencyKind {
    Real(f64),
    Imaginary(f64),
}

/// Material constants at one frequency, in the imaginary-axis notation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Media {
    pub kind: FrequencyKind,
    pub kappa1_sq: Complex64,
    pub kappa2_sq: Complex64,
    /// `sqrt(eps_2(iu)) u/c`, or `-i k_2` at real frequency.
    pub kappa2: Complex64,
}

impl Media {
    pub fn imaginary(geom: &FiberGeometry, u: f64) -> Result<Self> {
        let e1 = geom.eps_inner.eps_imag_freq(u)?;
        let e2 = geom.eps_outer.eps_imag_freq(u)?;
        Ok(Self::from_imaginary_eps(e1, e2, u))
    }

    pub fn from_imaginary_eps(e1: f64, e2: f64, u: f64) -> Self {
        let s = u / SPEED_OF_LIGHT;
        Media {
            kind: FrequencyKind::Imaginary(u),
            kappa1_sq: c(e1 * s * s, 0.0),
            kappa2_sq: c(e2 * s * s, 0.0),
            kappa2: c(e2.sqrt() * s, 0.0),
        }
    }

    pub fn real(geom: &FiberGeometry, omega: f64) -> Result<Self> {
        let e1 = geom.eps_inner.eps_real_freq(omega)?.value;
        let e2 = geom.eps_outer.eps_real_freq(omega)?.value;
        Ok(Self::from_real_eps(e1, e2, omega))
    }

    pub fn from_real_eps(e1: Complex64, e2: Complex64, omega: f64) -> Self {
        let s = omega / SPEED_OF_LIGHT;
        let k2 = e2.sqrt() * s;
        Media {
            kind: FrequencyKind::Real(omega),
            kappa1_sq: -e1 * (s * s),
            kappa2_sq: -e2 * (s * s),
            kappa2: c(0.0, -1.0) * k2,
        }
    }

    /// `k_j = sqrt(eps_j) w/c` at real frequency.
    pub fn k1(&self) -> Complex64 {
        (-self.kappa1_sq).sqrt()
    }

    pub fn k2(&self) -> Complex64 {
        (-self.kappa2_sq).sqrt()
    }
}

/// Reflection coefficients in the convention of the frequency kind: the
/// Hankel-function form at real frequency, the Macdonald-function form at
/// imaginary frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionCoefficients {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

/// Quantities shared by all orders at one point of the beta path.
struct PathPoint {
    beta: Complex64,
    q1: Complex64,
    q2: Complex64,
    x2: Complex64,
    rho1: Vec<Complex64>,
    rho2: Vec<Complex64>,
    at_a: KLadder,
}

impl PathPoint {
    fn new(media: &Media, radius: f64, pt: ContourPoint, nmax: usize) -> Result<Self> {
        let q2 = outgoing_sqrt(pt.q2_sq);
        let q1 = outgoing_sqrt(pt.q2_sq + (media.kappa1_sq - media.kappa2_sq));
        if q2.norm() == 0.0 {
            return Err(Error::Singularity("q_2 = 0 at the branch point".into()));
        }
        let x1 = q1 * radius;
        let x2 = q2 * radius;
        Ok(PathPoint {
            beta: pt.beta,
            q1,
            q2,
            x2,
            rho1: i_log_derivs(x1, nmax)?,
            rho2: i_log_derivs(x2, nmax)?,
            at_a: KLadder::new(x2, nmax)?,
        })
    }
}

/// Order-n pieces of the reflection denominator and numerators.
struct OrderTerms {
    delta: Complex64,
    w: Complex64,
    b_a: Complex64,
    b_c: Complex64,
}

/// `g(x1) - g(x2)` for `g(x) = I_n'(x)/(x I_n(x))`, given `rho_j = g(x_j) x_j`.
/// Close arguments use the Taylor series of `g` about `x2`, generated from
/// the Riccati equation `rho' = 1 + n^2/x^2 - rho/x - rho^2`; the direct
/// difference would lose all digits as `x1 -> x2`.
fn ratio_difference(n: usize, x1: Complex64, x2: Complex64, rho1: Complex64, rho2: Complex64) -> Complex64 {
    let h = x1 - x2;
    if !(h.norm() < 1e-3 * x2.norm().min(1.0)) {
        return rho1 / x1 - rho2 / x2;
    }
    const K: usize = 8;
    let nn = (n * n) as f64;
    let inv = x2.inv();
    // t_k: 1/x, s_k: n^2/x^2, r_k: rho
    let mut t = [c(0.0, 0.0); K + 1];
    let mut s = [c(0.0, 0.0); K + 1];
    let mut r = [c(0.0, 0.0); K + 1];
    let mut pw = inv;
    for k in 0..=K {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        t[k] = pw * sign;
        s[k] = pw * inv * (sign * (k + 1) as f64 * nn);
        pw *= inv;
    }
    r[0] = rho2;
    for k in 0..K {
        let mut rhs = s[k] + if k == 0 { c(1.0, 0.0) } else { c(0.0, 0.0) };
        for j in 0..=k {
            rhs -= r[j] * t[k - j] + r[j] * r[k - j];
        }
        r[k + 1] = rhs / (k + 1) as f64;
    }
    let mut acc = c(0.0, 0.0);
    let mut hk = c(1.0, 0.0);
    for k in 1..=K {
        hk *= h;
        let mut gk = c(0.0, 0.0);
        for j in 0..=k {
            gk += r[j] * t[k - j];
        }
        acc += gk * hk;
    }
    acc
}

fn order_terms(media: &Media, radius: f64, p: &PathPoint, n: i32) -> Result<OrderTerms> {
    let m = n.unsigned_abs() as usize;
    let p1 = p.rho1[m] / p.q1;
    let p2 = p.rho2[m] / p.q2;
    let q2r = p.at_a.log_deriv[m] / p.q2;
    let (k1s, k2s) = (media.kappa1_sq, media.kappa2_sq);
    // q1^2 - q2^2 = kappa1^2 - kappa2^2 exactly; differences of nearly
    // equal quantities are formed from it rather than by subtraction
    let dk = k1s - k2s;
    let q2sq = p.q2 * p.q2;
    let q1sq = p.q1 * p.q1;
    let delta = dk / (q1sq * q2sq);
    let p1_minus_p2 = ratio_difference(m, p.q1 * radius, p.x2, p.rho1[m], p.rho2[m]) * radius;
    let nb = p.beta * n as f64 / radius;
    let n2 = nb * nb * delta * delta;
    // W with the 1/q2^4 parts of N2 and kappa2^2 Q2^2 combined through
    // beta^2 + kappa2^2 = q2^2; they cancel to 1/q2^2 at the branch point
    let s = if m == 0 {
        -p.at_a.log_deriv[0]
    } else {
        p.at_a.down_ratio[m]
    };
    let nf = m as f64;
    let w_terms = [
        (k2s * (q2sq + dk * 2.0) + dk * dk) / (q1sq * q1sq) * (nf * nf) / (q2sq * radius * radius),
        k2s * (s * nf * 2.0 / p.x2 + s * s) / q2sq,
        k1s * p1 * p1,
        -(k1s + k2s) * p1 * q2r,
    ];
    let w: Complex64 = w_terms.iter().sum();
    let b_a = n2 + p1_minus_p2 * (k1s * p1 - k2s * q2r);
    let b_c = n2 + (p1 - q2r) * (k1s * p1 - k2s * p2);
    let scale: f64 = w_terms.iter().map(|t| t.norm()).sum();
    if !(w.norm() > 1e-15 * scale) {
        return Err(Error::Pole {
            n,
            beta: p.beta.re,
        });
    }
    Ok(OrderTerms {
        delta,
        w,
        b_a,
        b_c,
    })
}

fn coefficients_at(media: &Media, radius: f64, n: i32, beta: Complex64) -> Result<ReflectionCoefficients> {
    if n.abs() > MAX_ORDER {
        return Err(Error::Range(format!("order {n} exceeds {MAX_ORDER}")));
    }
    let m = n.unsigned_abs() as usize;
    let pt = ContourPoint {
        beta,
        q2_sq: beta * beta + media.kappa2_sq,
    };
    let p = PathPoint::new(media, radius, pt, m)?;
    let t = order_terms(media, radius, &p, n)?;
    // I_n/K_n at q_2 a from the Wronskian and the scaled K
    let ks = p.at_a.scaled(m)?;
    let grow = p.x2 * 2.0;
    if grow.re > 700.0 {
        return Err(Error::Overflow(format!(
            "I_{m}/K_{m} at q2 a = {} needs e^{:.1}",
            p.x2, grow.re
        )));
    }
    let i_over_k = grow.exp() / (p.x2 * (p.rho2[m] - p.at_a.log_deriv[m]) * ks * ks);
    let a = i_over_k * t.b_a / t.w;
    let cc = i_over_k * t.b_c / t.w;
    let b = c(0.0, 1.0) * i_over_k * (media.kappa2 / p.q2) * (beta * n as f64 / radius) * t.delta
        * (p.rho2[m] - p.at_a.log_deriv[m])
        / t.w;
    match media.kind {
        FrequencyKind::Imaginary(_) => Ok(ReflectionCoefficients { a, b, c: cc, d: b }),
        FrequencyKind::Real(_) => {
            let f = c(0.0, -0.5 * PI) * if m % 2 == 0 { 1.0 } else { -1.0 };
            Ok(ReflectionCoefficients {
                a: f * a,
                b: f * b,
                c: f * cc,
                d: f * b,
            })
        }
    }
}

/// `A_R, B_R, C_R, D_R` at real angular frequency `omega`.
pub fn coeffs_real_freq(geom: &FiberGeometry, n: i32, beta: f64, omega: f64) -> Result<ReflectionCoefficients> {
    let media = Media::real(geom, omega)?;
    coefficients_at(&media, geom.radius, n, c(beta, 0.0))
}

/// `A, B, C, D` at imaginary frequency `u`. At `u = 0` the static limit is
/// returned (`A = B = D = 0`).
pub fn coeffs_imag_freq(geom: &FiberGeometry, n: i32, beta: f64, u: f64) -> Result<ReflectionCoefficients> {
    if u > 0.0 {
        let media = Media::imaginary(geom, u)?;
        return coefficients_at(&media, geom.radius, n, c(beta, 0.0));
    }
    if u < 0.0 {
        return Err(Error::Domain(format!("imaginary frequency must be nonnegative, got {u}")));
    }
    let e1 = geom.eps_inner.eps_imag_freq(0.0)?;
    let e2 = geom.eps_outer.eps_imag_freq(0.0)?;
    let x = beta.abs() * geom.radius;
    if x == 0.0 {
        return Err(Error::Singularity("static coefficients at beta = 0".into()));
    }
    let m = n.unsigned_abs() as usize;
    let rho = i_log_derivs(c(x, 0.0), m)?[m].re;
    let (ks, ksp) = bessel_k_scaled(m as i32, x)?;
    let kappa = ksp / ks;
    if 2.0 * x > 700.0 {
        return Err(Error::Overflow(format!("I_{m}/K_{m} at {x}")));
    }
    let i_over_k = (2.0 * x).exp() / (x * (rho - kappa) * ks * ks);
    let cc = i_over_k * rho * (e1 - e2) / (e1 * rho - e2 * kappa);
    let zero = c(0.0, 0.0);
    Ok(ReflectionCoefficients {
        a: zero,
        b: zero,
        c: c(cc, 0.0),
        d: zero,
    })
}

/// Diagonal blocks `[rr, phiphi, zz]` of the order-n integrand, summed over
/// `+n` and `-n`, written into `out[3 (n - n_lo) ..]`.
fn fill_blocks(
    media: &Media,
    radius: f64,
    r: f64,
    pt: ContourPoint,
    n_lo: usize,
    n_hi: usize,
    out: &mut [Complex64],
) -> Result<()> {
    let p = PathPoint::new(media, radius, pt, n_hi)?;
    let y = p.q2 * r;
    let at_r = KLadder::new(y, n_hi)?;
    // K_n(q2 r)/K_n(q2 a)
    let mut ratio = at_r.k0_scaled / p.at_a.k0_scaled * (p.x2 - y).exp();
    let beta2 = p.beta * p.beta;
    let q2sq = p.q2 * p.q2;
    let k2s = media.kappa2_sq;
    for n in 0..=n_hi {
        if n > 0 {
            ratio *= p.at_a.down_ratio[n] / at_r.down_ratio[n];
        }
        if n < n_lo {
            continue;
        }
        let t = order_terms(media, radius, &p, n as i32)?;
        let ik = (p.x2 * (p.rho2[n] - p.at_a.log_deriv[n])).inv();
        let common = ik * ratio * ratio / t.w;
        let kr = at_r.log_deriv[n];
        let nn = (n * n) as f64;
        let ny = nn / (y * y);
        let ca = t.b_a * common;
        let cc = t.b_c * common;
        let cross = t.delta * (p.beta * n as f64 / radius) * 2.0 * (p.beta * n as f64) * kr * ratio
            * ratio
            / (p.x2 * q2sq * r * t.w);
        let rr = ca * ny - cc * (beta2 / k2s) * kr * kr + cross;
        let pp = ca * kr * kr - cc * (beta2 / k2s) * ny + cross;
        let zz = -cc * q2sq / k2s;
        let mult = if n == 0 { 1.0 } else { 2.0 };
        let j = 3 * (n - n_lo);
        out[j] = rr * mult;
        out[j + 1] = pp * mult;
        out[j + 2] = zz * mult;
    }
    Ok(())
}

/// How the real-frequency trace deals with guided-mode poles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoleStrategy {
    /// Semicircular detours around the real poles.
    Detour,
    /// Add a small loss to the core, extrapolate to zero loss.
    LossyEpsilon,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    /// Relative tolerance of each beta integral.
    pub beta_rel_tol: f64,
    /// An order is negligible below this fraction of the total.
    pub n_rel_tol: f64,
    pub max_order: usize,
    pub max_intervals: usize,
    pub pole_strategy: PoleStrategy,
    /// Replaces `0.05 (k1 - k2)` in the detour radius rule.
    pub detour_radius: Option<f64>,
    pub half_plane: HalfPlane,
    /// Largest artificial loss added to `eps_1` by the lossy strategy.
    pub loss_delta: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            beta_rel_tol: 1e-8,
            n_rel_tol: 1e-8,
            max_order: MAX_ORDER as usize,
            max_intervals: 2000,
            pole_strategy: PoleStrategy::Detour,
            detour_radius: None,
            half_plane: HalfPlane::Lower,
            loss_delta: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreenTrace {
    /// `Tr G_sc(R, R; w)` in 1/m.
    pub value: Complex64,
    /// `[rr, phiphi, zz]` components; they sum to `value`.
    pub blocks: [Complex64; 3],
    /// Orders `0..n_terms_used` were summed (with their negatives).
    pub n_terms_used: usize,
    /// Relative error from quadrature plus truncation of the order sum.
    pub beta_error_estimate: f64,
    pub converged: bool,
    pub evaluations: usize,
}

enum BetaPath<'a> {
    Imaginary,
    Real {
        plan: &'a PoleAvoidancePlan,
        spec: &'a ContourSpec,
    },
}

fn integrate_orders(
    media: &Media,
    radius: f64,
    r: f64,
    n_lo: usize,
    n_hi: usize,
    path: &BetaPath,
    tol: &Tolerance,
    scale: f64,
) -> Result<VectorQuadrature> {
    let dim = 3 * (n_hi - n_lo + 1);
    let weights = vec![1.0; dim];
    let mut f = |pt: ContourPoint, out: &mut [Complex64]| fill_blocks(media, radius, r, pt, n_lo, n_hi, out);
    match path {
        BetaPath::Imaginary => {
            let k2s = media.kappa2_sq;
            let mut g = |b: f64, out: &mut [Complex64]| {
                f(
                    ContourPoint {
                        beta: c(b, 0.0),
                        q2_sq: c(b * b, 0.0) + k2s,
                    },
                    out,
                )
            };
            let width = 0.5 / (r - radius);
            integrate_marching(&mut g, &weights, 0.0, width, 1.25, scale, tol)
        }
        BetaPath::Real { plan, spec } => {
            let t = Tolerance {
                abs: tol.abs.max(tol.rel * scale * 0.1),
                ..*tol
            };
            Ok(integrate_beta_with_detours(&mut f, &weights, plan, spec, &t)?.total)
        }
    }
}

fn sum_orders(media: &Media, radius: f64, r: f64, path: &BetaPath, opts: &TraceOptions, k_scale: f64) -> Result<GreenTrace> {
    if !(r > radius) {
        return Err(Error::Domain(format!("observation radius {r} must exceed the fiber radius {radius}")));
    }
    let tol = Tolerance {
        rel: opts.beta_rel_tol,
        abs: 0.0,
        max_intervals: opts.max_intervals,
    };
    let max_order = opts.max_order.min(MAX_ORDER as usize);
    let mut n_hi = (10usize).max((k_scale * r).ceil() as usize + 10).min(max_order);
    let mut per_order: Vec<Complex64> = Vec::new();
    let mut blocks = [c(0.0, 0.0); 3];
    let mut total = c(0.0, 0.0);
    let mut err = 0.0;
    let mut evaluations = 0;
    let mut converged = true;
    let mut n_lo = 0;
    loop {
        let q = integrate_orders(media, radius, r, n_lo, n_hi, path, &tol, total.norm())?;
        evaluations += q.evaluations;
        converged &= q.converged;
        err += q.abs_error_estimate;
        for chunk in q.values.chunks(3) {
            per_order.push(chunk[0] + chunk[1] + chunk[2]);
            for k in 0..3 {
                blocks[k] += chunk[k];
            }
        }
        total += q.key;
        let tail = &per_order[per_order.len() - 3..];
        let small = tail.iter().all(|v| v.norm() <= opts.n_rel_tol * total.norm());
        if small || total.norm() == 0.0 {
            break;
        }
        if n_hi >= max_order {
            converged = false;
            break;
        }
        n_lo = n_hi + 1;
        n_hi = ((n_hi as f64 * 1.5).ceil() as usize + 10).min(max_order);
    }
    let truncation: f64 = per_order[per_order.len() - 3..].iter().map(|v| v.norm()).sum();
    let pref = 1.0 / (2.0 * PI * PI);
    let rel = if total.norm() > 0.0 {
        (err + truncation) / total.norm()
    } else {
        0.0
    };
    Ok(GreenTrace {
        value: total * pref,
        blocks: [blocks[0] * pref, blocks[1] * pref, blocks[2] * pref],
        n_terms_used: per_order.len(),
        beta_error_estimate: rel,
        converged,
        evaluations,
    })
}

/// Trace at imaginary frequency, returning non-convergence as a flag.
pub fn trace_sc_imag_flagged(geom: &FiberGeometry, r: f64, u: f64, opts: &TraceOptions) -> Result<GreenTrace> {
    if u == 0.0 {
        return Err(Error::Singularity("the trace diverges as u -> 0".into()));
    }
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::Domain(format!("imaginary frequency must be positive, got {u}")));
    }
    let media = Media::imaginary(geom, u)?;
    sum_orders(&media, geom.radius, r, &BetaPath::Imaginary, opts, 0.0)
}

fn convergence_error(what: &str, t: &GreenTrace) -> Error {
    Error::Convergence {
        what: what.into(),
        estimate: t.value.re,
        error: t.beta_error_estimate * t.value.norm(),
    }
}

/// `Tr G_sc(R, R; iu)` (real).
pub fn trace_sc_imag(geom: &FiberGeometry, r: f64, u: f64, opts: &TraceOptions) -> Result<GreenTrace> {
    let t = trace_sc_imag_flagged(geom, r, u, opts)?;
    if !t.converged {
        return Err(convergence_error("order sum of the imaginary-frequency trace", &t));
    }
    Ok(t)
}

/// Unnormalized trace integrand (before the `1/(2 pi^2)` factor and the
/// beta integral), summed over orders `0..=nmax`, at one path point. Exposed
/// for oracles and diagnostics.
pub fn trace_integrand(media: &Media, radius: f64, r: f64, pt: ContourPoint, nmax: usize) -> Result<[Complex64; 3]> {
    let mut out = vec![c(0.0, 0.0); 3 * (nmax + 1)];
    fill_blocks(media, radius, r, pt, 0, nmax, &mut out)?;
    let mut acc = [c(0.0, 0.0); 3];
    for ch in out.chunks(3) {
        for k in 0..3 {
            acc[k] += ch[k];
        }
    }
    Ok(acc)
}

fn real_outer(media: &Media) -> Result<f64> {
    let k2 = media.k2();
    if k2.im != 0.0 || !(k2.re > 0.0) {
        return Err(Error::Domain(format!(
            "the real-frequency trace needs a lossless outer medium, got k2 = {k2}"
        )));
    }
    Ok(k2.re)
}

fn contour_spec(media: &Media, k2: f64, r: f64, radius: f64, plan: &PoleAvoidancePlan) -> ContourSpec {
    let k1 = media.k1().norm();
    ContourSpec {
        band_end: (1.2 * k1.max(k2)).max(plan.band_end()),
        tail_width: 0.5 / (r - radius),
        oscillation_hint: 2.0 * k2 * r,
        band_breakpoints: Vec::new(),
    }
}

fn trace_real_with_media(
    media: &Media,
    radius: f64,
    r: f64,
    plan: &PoleAvoidancePlan,
    breakpoints: &[f64],
    opts: &TraceOptions,
) -> Result<GreenTrace> {
    let k2 = real_outer(media)?;
    if (plan.branch_point - k2).abs() > 1e-12 * k2 {
        return Err(Error::Contour(format!(
            "plan built for branch point {} but k2 = {k2}",
            plan.branch_point
        )));
    }
    let mut spec = contour_spec(media, k2, r, radius, plan);
    spec.band_breakpoints = breakpoints.to_vec();
    sum_orders(media, radius, r, &BetaPath::Real { plan, spec: &spec }, opts, k2)
}

/// `Tr G_sc(R, R; w)` along the real beta axis with the detours of `plan`.
pub fn trace_sc_real(
    geom: &FiberGeometry,
    r: f64,
    omega: f64,
    plan: &PoleAvoidancePlan,
    opts: &TraceOptions,
) -> Result<GreenTrace> {
    let media = Media::real(geom, omega)?;
    trace_real_with_media(&media, geom.radius, r, plan, &[], opts)
}

/// Lossy-core treatment: the trace with `eps_1 + i delta` at three losses,
/// extrapolated quadratically to zero loss.
pub fn trace_sc_real_lossy(geom: &FiberGeometry, r: f64, omega: f64, opts: &TraceOptions) -> Result<GreenTrace> {
    let poles = guided_mode_poles(geom, omega)?;
    lossy_with_poles(geom, r, omega, &poles, opts)
}

fn lossy_with_poles(
    geom: &FiberGeometry,
    r: f64,
    omega: f64,
    poles: &[GuidedPole],
    opts: &TraceOptions,
) -> Result<GreenTrace> {
    let e1 = geom.eps_inner.eps_real_freq(omega)?.value;
    let e2 = geom.eps_outer.eps_real_freq(omega)?.value;
    let breaks: Vec<f64> = poles.iter().map(|p| p.beta).collect();
    let k0 = omega / SPEED_OF_LIGHT;
    let empty = PoleAvoidancePlan::without_poles(e1.re.max(0.0).sqrt() * k0, e2.re.sqrt() * k0)?;
    let d = opts.loss_delta;
    let mut ts = Vec::with_capacity(3);
    for delta in [d, d / 2.0, d / 4.0] {
        let media = Media::from_real_eps(e1 + c(0.0, delta), e2, omega);
        ts.push(trace_real_with_media(&media, geom.radius, r, &empty, &breaks, opts)?);
    }
    let rich = |f: &dyn Fn(&GreenTrace) -> Complex64| (f(&ts[2]) * 8.0 - f(&ts[1]) * 6.0 + f(&ts[0])) / 3.0;
    let value = rich(&|t| t.value);
    let linear = ts[2].value * 2.0 - ts[1].value;
    let blocks = [rich(&|t| t.blocks[0]), rich(&|t| t.blocks[1]), rich(&|t| t.blocks[2])];
    let quad: f64 = ts.iter().map(|t| t.beta_error_estimate * t.value.norm()).sum::<f64>() * 5.0;
    let abs_err = (value - linear).norm() + quad;
    Ok(GreenTrace {
        value,
        blocks,
        n_terms_used: ts.iter().map(|t| t.n_terms_used).max().unwrap_or(0),
        beta_error_estimate: if value.norm() > 0.0 { abs_err / value.norm() } else { 0.0 },
        converged: ts.iter().all(|t| t.converged),
        evaluations: ts.iter().map(|t| t.evaluations).sum(),
    })
}

/// Everything about one real frequency that does not depend on the atom
/// position: guided-mode poles and the integration plan.
#[derive(Debug, Clone, PartialEq)]
pub struct RealFrequencySetup {
    pub omega: f64,
    pub poles: Vec<GuidedPole>,
    pub plan: PoleAvoidancePlan,
    pub lossless_core: bool,
}

pub fn prepare_real(geom: &FiberGeometry, omega: f64, opts: &TraceOptions) -> Result<RealFrequencySetup> {
    let media = Media::real(geom, omega)?;
    let lossless_core = media.kappa1_sq.im == 0.0;
    let (poles, plan) = if lossless_core {
        let poles = guided_mode_poles(geom, omega)?;
        let plan = PoleAvoidancePlan::new(
            poles.clone(),
            media.k1().norm(),
            real_outer(&media)?,
            opts.half_plane,
            opts.detour_radius,
        )?;
        (poles, plan)
    } else {
        (Vec::new(), PoleAvoidancePlan::without_poles(media.k1().norm(), real_outer(&media)?)?)
    };
    Ok(RealFrequencySetup {
        omega,
        poles,
        plan,
        lossless_core,
    })
}

/// Real-frequency trace at a prepared frequency, with the pole treatment
/// chosen by `opts` when the core is lossless.
pub fn trace_sc_real_prepared(
    geom: &FiberGeometry,
    r: f64,
    setup: &RealFrequencySetup,
    opts: &TraceOptions,
) -> Result<GreenTrace> {
    if setup.lossless_core && opts.pole_strategy == PoleStrategy::LossyEpsilon {
        return lossy_with_poles(geom, r, setup.omega, &setup.poles, opts);
    }
    let media = Media::real(geom, setup.omega)?;
    trace_real_with_media(&media, geom.radius, r, &setup.plan, &[], opts)
}

/// Real-frequency trace with the pole treatment chosen by `opts` when the
/// core is lossless, and the plain real axis otherwise.
pub fn trace_sc_real_auto(geom: &FiberGeometry, r: f64, omega: f64, opts: &TraceOptions) -> Result<GreenTrace> {
    trace_sc_real_prepared(geom, r, &prepare_real(geom, omega, opts)?, opts)
}

/// Detour plan around the guided-mode poles at `omega`.
pub fn pole_plan(geom: &FiberGeometry, omega: f64, opts: &TraceOptions) -> Result<PoleAvoidancePlan> {
    let media = Media::real(geom, omega)?;
    let poles = guided_mode_poles(geom, omega)?;
    PoleAvoidancePlan::new(
        poles,
        media.k1().norm(),
        real_outer(&media)?,
        opts.half_plane,
        opts.detour_radius,
    )
}

/// `Im Tr G_0(R, R; w) = 3 k_2/(6 pi)` for a lossless outer medium.
pub fn trace_g0_imagpart(eps_outer: &PermittivityModel, omega: f64) -> Result<f64> {
    let e = eps_outer.eps_real_freq(omega)?.value;
    if e.im != 0.0 || e.re <= 0.0 {
        return Err(Error::Domain(format!("outer medium must be lossless, got {e}")));
    }
    Ok(e.re.sqrt() * omega / SPEED_OF_LIGHT / (2.0 * PI))
}

/// Guided-mode dispersion function of order `n` in dimensionless variables
/// `X = q_2 a`, `U = eta_1 a` with `X^2 + U^2 = V^2`, multiplied by
/// `X^2 U^4`. The `1/X^4` terms of the two halves cancel exactly because
/// `(beta a)^2 - (k_2 a)^2 = X^2`; that cancellation is done by hand, with
/// `K_n'/K_n = -n/X - K_{n-1}/K_n`, so the function stays accurate as
/// `X -> 0`.
fn dispersion(n: i32, x: f64, k1a2: f64, k2a2: f64) -> Result<f64> {
    let v2 = k1a2 - k2a2;
    let u = (v2 - x * x).max(0.0).sqrt();
    let ba2 = k2a2 + x * x;
    let j = bessel_j(n, c(u, 0.0))?.re;
    let jp = bessel_j_deriv(n, c(u, 0.0))?.re;
    let m = n.unsigned_abs() as usize;
    let ladder = KLadder::new(c(x, 0.0), m)?;
    let kp = ladder.log_deriv[m].re;
    let s = if m == 0 {
        -kp
    } else {
        ladder.down_ratio[m].re
    };
    let nf = m as f64;
    let (u2, x2) = (u * u, x * x);
    let g = nf * nf * j * j * (u2 * u2 + 2.0 * ba2 * u2 + ba2 * x2)
        - k1a2 * jp * jp * x2 * u2
        - (k1a2 + k2a2) * jp * j * kp * x * u2 * u
        - k2a2 * j * j * u2 * u2 * (2.0 * nf * s / x + s * s);
    Ok(g)
}

/// Real zeros of the reflection denominator in the guided band
/// `k2 < beta < k1`, for orders `n >= 0` (each is also a pole of order
/// `-n`). Lossy or non-guiding media give an empty list.
pub fn guided_mode_poles(geom: &FiberGeometry, omega: f64) -> Result<Vec<GuidedPole>> {
    let e1 = geom.eps_inner.eps_real_freq(omega)?.value;
    let e2 = geom.eps_outer.eps_real_freq(omega)?.value;
    if e1.im != 0.0 || e2.im != 0.0 || e1.re <= e2.re || e2.re <= 0.0 {
        return Ok(Vec::new());
    }
    let a = geom.radius;
    let k0a = omega / SPEED_OF_LIGHT * a;
    let k1a2 = e1.re * k0a * k0a;
    let k2a2 = e2.re * k0a * k0a;
    let v = (k1a2 - k2a2).sqrt();
    let nmax = 3.max(v.ceil() as i32 + 3);
    let mut grid = Vec::new();
    let n_log = 300;
    let x_lo = 1e-14 * v;
    let x_mid = 0.05 * v;
    for k in 0..n_log {
        grid.push(x_lo * (x_mid / x_lo).powf(k as f64 / n_log as f64));
    }
    let n_lin = 2000;
    for k in 0..=n_lin {
        grid.push(x_mid + (v * (1.0 - 1e-9) - x_mid) * k as f64 / n_lin as f64);
    }
    let k2 = k2a2.sqrt() / a;
    let mut poles = Vec::new();
    for n in 0..=nmax {
        let mut prev: Option<(f64, f64)> = None;
        for &x in &grid {
            let fx = dispersion(n, x, k1a2, k2a2)?;
            if let Some((xp, fp)) = prev {
                if fp == 0.0 || fp.signum() != fx.signum() {
                    let root = bisect(n, xp, x, fp, k1a2, k2a2)?;
                    let q2 = root / a;
                    poles.push(GuidedPole {
                        beta: (k2 * k2 + q2 * q2).sqrt(),
                        order: n,
                    });
                }
            }
            prev = Some((x, fx));
        }
    }
    poles.sort_by(|p, q| p.beta.total_cmp(&q.beta));
    Ok(poles)
}

fn bisect(n: i32, mut lo: f64, mut hi: f64, mut flo: f64, k1a2: f64, k2a2: f64) -> Result<f64> {
    if flo == 0.0 {
        return Ok(lo);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = dispersion(n, mid, k1a2, k2a2)?;
        if !fm.is_finite() {
            return Err(Error::Diagnostics(format!("dispersion function not finite at X = {mid}, n = {n}")));
        }
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn silica_geom(a: f64) -> FiberGeometry {
        FiberGeometry::new(a, PermittivityModel::constant(2.1), PermittivityModel::vacuum()).unwrap()
    }

    #[test]
    fn homogeneous_medium_reflects_nothing() {
        let g = FiberGeometry::new(2e-7, PermittivityModel::constant(1.7), PermittivityModel::constant(1.7)).unwrap();
        let co = coeffs_imag_freq(&g, 2, 3e6, 2e15).unwrap();
        assert_eq!(co.a.norm() + co.b.norm() + co.c.norm(), 0.0);
        let w = 2.0 * PI * SPEED_OF_LIGHT / 780e-9;
        let co = coeffs_real_freq(&g, 1, 4e6, w).unwrap();
        assert_eq!(co.a.norm() + co.b.norm() + co.c.norm(), 0.0);
    }

    #[test]
    fn order_zero_has_no_cross_coefficients() {
        let g = silica_geom(2e-7);
        let co = coeffs_imag_freq(&g, 0, 3e6, 2e15).unwrap();
        assert_eq!(co.b, c(0.0, 0.0));
        assert_eq!(co.b, co.d);
    }

    #[test]
    fn static_limit_is_continuous() {
        let g = silica_geom(2e-7);
        let s = coeffs_imag_freq(&g, 1, 5e6, 0.0).unwrap();
        let near = coeffs_imag_freq(&g, 1, 5e6, 1e8).unwrap();
        assert!((s.c - near.c).norm() < 1e-6 * s.c.norm());
        assert!(near.a.norm() < 1e-6 * s.c.norm());
    }

    #[test]
    fn vacuum_g0_value() {
        let w = 2.0 * PI * SPEED_OF_LIGHT / 780e-9;
        let g = trace_g0_imagpart(&PermittivityModel::vacuum(), w).unwrap();
        assert!((g - w / SPEED_OF_LIGHT / (2.0 * PI)).abs() < 1e-12 * g);
    }

    #[test]
    fn outgoing_branch() {
        assert_eq!(outgoing_sqrt(c(-4.0, 0.0)), c(0.0, -2.0));
        assert_eq!(outgoing_sqrt(c(-4.0, -0.0)), c(0.0, -2.0));
        assert_eq!(outgoing_sqrt(c(4.0, 0.0)), c(2.0, 0.0));
    }
}

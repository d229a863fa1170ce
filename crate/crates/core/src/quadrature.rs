//! Adaptive Gauss-Kronrod integration, the semi-infinite frequency integral,
//! and the longitudinal-wavenumber contour with detours around guided-mode
//! poles.
//!
//! Integrands may be vector valued. Adaptivity and error estimates act on a
//! weighted sum of the components (the "key"), which for the Green tensor is
//! the trace itself.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Stopping rule: `error <= max(abs, rel * |value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub fn relative(rel: f64) -> Self {
        Tolerance {
            rel,
            abs: 0.0,
            max_intervals: 2000,
        }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: Complex64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorQuadrature {
    pub values: Vec<Complex64>,
    /// Weighted sum of `values`.
    pub key: Complex64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl VectorQuadrature {
    fn empty(dim: usize) -> Self {
        VectorQuadrature {
            values: vec![Complex64::new(0.0, 0.0); dim],
            key: Complex64::new(0.0, 0.0),
            abs_error_estimate: 0.0,
            evaluations: 0,
            converged: true,
        }
    }

    fn absorb(&mut self, other: &VectorQuadrature) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        self.key += other.key;
        self.abs_error_estimate += other.abs_error_estimate;
        self.evaluations += other.evaluations;
        self.converged &= other.converged;
    }
}

struct Interval {
    a: f64,
    b: f64,
    sums: Vec<Complex64>,
    key: Complex64,
    err: f64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err) == Ordering::Equal
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn key_of(v: &[Complex64], weights: &[f64]) -> Complex64 {
    v.iter().zip(weights).map(|(x, w)| x * w).sum()
}

fn gk21<F>(f: &mut F, a: f64, b: f64, weights: &[f64], buf: &mut [Complex64]) -> Result<Interval>
where
    F: FnMut(f64, &mut [Complex64]) -> Result<()>,
{
    let dim = weights.len();
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sums = vec![Complex64::new(0.0, 0.0); dim];
    let mut fk = [Complex64::new(0.0, 0.0); 21];
    let mut resk = Complex64::new(0.0, 0.0);
    let mut resg = Complex64::new(0.0, 0.0);

    let mut eval = |x: f64, wk: f64, wg: f64, slot: usize, fk: &mut [Complex64; 21],
                    sums: &mut Vec<Complex64>,
                    resk: &mut Complex64,
                    resg: &mut Complex64|
     -> Result<()> {
        buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        f(x, buf)?;
        let k = key_of(buf, weights);
        if !(k.re.is_finite() && k.im.is_finite()) {
            return Err(Error::Domain(format!("integrand is not finite at {x}")));
        }
        for (s, v) in sums.iter_mut().zip(buf.iter()) {
            *s += v * wk;
        }
        fk[slot] = k;
        *resk += k * wk;
        *resg += k * wg;
        Ok(())
    };

    eval(center, WGK[10], 0.0, 20, &mut fk, &mut sums, &mut resk, &mut resg)?;
    for j in 0..10 {
        let wg = if j % 2 == 1 { WG[j / 2] } else { 0.0 };
        let dx = half * XGK[j];
        eval(center - dx, WGK[j], wg, 2 * j, &mut fk, &mut sums, &mut resk, &mut resg)?;
        eval(center + dx, WGK[j], wg, 2 * j + 1, &mut fk, &mut sums, &mut resk, &mut resg)?;
    }

    let mean = resk * 0.5;
    let mut resasc = WGK[10] * (fk[20] - mean).norm();
    let mut resabs = WGK[10] * fk[20].norm();
    for j in 0..10 {
        resasc += WGK[j] * ((fk[2 * j] - mean).norm() + (fk[2 * j + 1] - mean).norm());
        resabs += WGK[j] * (fk[2 * j].norm() + fk[2 * j + 1].norm());
    }
    resasc *= half.abs();
    resabs *= half.abs();
    let mut err = ((resk - resg) * half).norm();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    for s in sums.iter_mut() {
        *s *= half;
    }
    Ok(Interval {
        a,
        b,
        sums,
        key: resk * half,
        err,
    })
}

/// Globally adaptive 21-point Gauss-Kronrod integration of a vector-valued
/// integrand over consecutive panels given by `breakpoints`.
pub fn adaptive_vec<F>(
    f: &mut F,
    weights: &[f64],
    breakpoints: &[f64],
    tol: &Tolerance,
) -> Result<VectorQuadrature>
where
    F: FnMut(f64, &mut [Complex64]) -> Result<()>,
{
    let dim = weights.len();
    if breakpoints.len() < 2 {
        return Err(Error::Domain("need at least two breakpoints".into()));
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); dim];
    let mut heap = BinaryHeap::new();
    let mut frozen = Vec::new();
    let mut evaluations = 0;
    for w in breakpoints.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Domain(format!("breakpoints must increase: {} {}", w[0], w[1])));
        }
        heap.push(gk21(f, w[0], w[1], weights, &mut buf)?);
        evaluations += 21;
    }
    let totals = |heap: &BinaryHeap<Interval>, frozen: &Vec<Interval>| {
        let mut key = Complex64::new(0.0, 0.0);
        let mut err = 0.0;
        for iv in heap.iter().chain(frozen.iter()) {
            key += iv.key;
            err += iv.err;
        }
        (key, err)
    };
    let mut count = heap.len();
    let converged = loop {
        let (key, err) = totals(&heap, &frozen);
        if err <= tol.target(key.norm()) {
            break true;
        }
        if count >= tol.max_intervals {
            break false;
        }
        let Some(worst) = heap.pop() else {
            break false;
        };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b)
            || (worst.b - worst.a) <= 1e-13 * worst.a.abs().max(worst.b.abs())
        {
            frozen.push(worst);
            continue;
        }
        heap.push(gk21(f, worst.a, mid, weights, &mut buf)?);
        heap.push(gk21(f, mid, worst.b, weights, &mut buf)?);
        evaluations += 42;
        count += 1;
    };
    let mut all: Vec<Interval> = heap.into_vec();
    all.extend(frozen);
    all.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut out = VectorQuadrature::empty(dim);
    for iv in &all {
        for (s, v) in out.values.iter_mut().zip(&iv.sums) {
            *s += v;
        }
        out.key += iv.key;
        out.abs_error_estimate += iv.err;
    }
    out.evaluations = evaluations;
    out.converged = converged;
    Ok(out)
}

/// Scalar adaptive integration over `[a, b]`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, tol: &Tolerance) -> Result<QuadratureResult>
where
    F: FnMut(f64) -> Result<Complex64>,
{
    let mut g = |x: f64, out: &mut [Complex64]| -> Result<()> {
        out[0] = f(x)?;
        Ok(())
    };
    let r = adaptive_vec(&mut g, &[1.0], &[a, b], tol)?;
    Ok(QuadratureResult {
        value: r.key,
        abs_error_estimate: r.abs_error_estimate,
        evaluations: r.evaluations,
        converged: r.converged,
    })
}

/// Panels in `t` for `u = u0 t / (1 - t)`: one per decade of `u / u0` over
/// `[1e-3, 1e3]`, plus the two end pieces.
fn decade_breakpoints() -> Vec<f64> {
    let mut b = vec![0.0];
    for k in -3..=3 {
        let s = 10f64.powi(k);
        b.push(s / (1.0 + s));
    }
    b.push(1.0);
    b
}

/// `int_0^inf f(u) du` through `u = u0 t/(1-t)`, reporting non-convergence
/// in the result instead of failing.
pub fn integrate_semi_infinite_with<F>(
    mut f: F,
    u0: f64,
    tol: &Tolerance,
) -> Result<QuadratureResult>
where
    F: FnMut(f64) -> Result<Complex64>,
{
    if !(u0 > 0.0 && u0.is_finite()) {
        return Err(Error::Domain(format!("scale must be positive, got {u0}")));
    }
    let mut g = |t: f64, out: &mut [Complex64]| -> Result<()> {
        let s = 1.0 - t;
        let u = u0 * t / s;
        let jac = u0 / (s * s);
        out[0] = if u.is_finite() { f(u)? * jac } else { Complex64::new(0.0, 0.0) };
        Ok(())
    };
    let r = adaptive_vec(&mut g, &[1.0], &decade_breakpoints(), tol)?;
    Ok(QuadratureResult {
        value: r.key,
        abs_error_estimate: r.abs_error_estimate,
        evaluations: r.evaluations,
        converged: r.converged,
    })
}

/// `int_0^inf f(u) du` to relative tolerance `rel_tol`.
pub fn integrate_semi_infinite<F>(f: F, u0: f64, rel_tol: f64) -> Result<QuadratureResult>
where
    F: FnMut(f64) -> Result<Complex64>,
{
    let r = integrate_semi_infinite_with(f, u0, &Tolerance::relative(rel_tol))?;
    if !r.converged {
        return Err(Error::Convergence {
            what: "semi-infinite integral".into(),
            estimate: r.value.re,
            error: r.abs_error_estimate,
        });
    }
    Ok(r)
}

/// Integrates panel after panel starting at `start`, with widths growing by
/// `growth`, until three consecutive panels are negligible against the
/// running total (plus `scale`).
pub fn integrate_marching<F>(
    f: &mut F,
    weights: &[f64],
    start: f64,
    first_width: f64,
    growth: f64,
    scale: f64,
    tol: &Tolerance,
) -> Result<VectorQuadrature>
where
    F: FnMut(f64, &mut [Complex64]) -> Result<()>,
{
    const MAX_PANELS: usize = 400;
    let mut out = VectorQuadrature::empty(weights.len());
    let mut lo = start;
    let mut width = first_width;
    let mut quiet = 0;
    for _ in 0..MAX_PANELS {
        let hi = lo + width;
        let panel_tol = Tolerance {
            rel: tol.rel,
            abs: tol.abs.max(0.1 * tol.rel * (out.key.norm() + scale)),
            max_intervals: tol.max_intervals,
        };
        let p = adaptive_vec(f, weights, &[lo, hi], &panel_tol)?;
        out.absorb(&p);
        let reference = out.key.norm() + scale;
        if p.key.norm() <= tol.rel * reference && p.abs_error_estimate <= tol.rel * reference {
            quiet += 1;
            if quiet >= 3 {
                return Ok(out);
            }
        } else {
            quiet = 0;
        }
        lo = hi;
        width *= growth;
    }
    out.converged = false;
    Ok(out)
}

/// Side of the real axis used by the detours.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HalfPlane {
    Upper,
    Lower,
}

impl HalfPlane {
    fn sign(self) -> f64 {
        match self {
            HalfPlane::Upper => 1.0,
            HalfPlane::Lower => -1.0,
        }
    }
}

/// A real zero of the cylinder dispersion function for azimuthal order
/// `order` (the same wavenumber is a pole for `-order`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidedPole {
    pub beta: f64,
    pub order: i32,
}

/// Where the real-frequency path leaves the real axis.
///
/// Besides the poles, the branch point `k2` itself is passed on a small
/// semicircle in the lower half plane: next to it the integrand is a small
/// difference of terms growing like `1/(beta - k2)^2`, which cannot be
/// evaluated accurately on the axis. The lower side is forced there because
/// the outgoing branch of `sqrt(beta^2 - k2^2)` is continuous from below.
/// Poles closer to `k2` than a quarter of that radius are enclosed by the
/// same arc and get a detour radius of zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleAvoidancePlan {
    pub poles: Vec<GuidedPole>,
    pub detour_radius: Vec<f64>,
    pub detour_half_plane: HalfPlane,
    pub branch_point: f64,
    pub branch_radius: f64,
}

impl PoleAvoidancePlan {
    /// Radii default to `min(0.05 (k1 - k2), 0.45 of the distance to the nearest
    /// other pole, half the gap to the branch arc)`; `radius_override`
    /// replaces the first term. The branch arc radius starts at
    /// `min(0.1 (k1 - k2), 0.05 k2)`, or `0.05 k2` without a guided band,
    /// and shrinks until no pole lies between a quarter and twice the
    /// radius. Poles inside a quarter of the radius are enclosed by the arc.
    pub fn new(
        mut poles: Vec<GuidedPole>,
        k1: f64,
        k2: f64,
        half_plane: HalfPlane,
        radius_override: Option<f64>,
    ) -> Result<Self> {
        if !(k2 > 0.0 && k2.is_finite()) {
            return Err(Error::Contour(format!("branch point must be positive, got {k2}")));
        }
        poles.sort_by(|a, b| a.beta.total_cmp(&b.beta));
        poles.dedup_by(|a, b| (a.beta - b.beta).abs() <= 1e-14 * a.beta.abs());
        // a mode near cutoff can round onto (or just below) k2; the branch
        // arc encloses it
        for p in poles.iter_mut() {
            if p.beta < k2 && p.beta >= k2 * (1.0 - 1e-12) {
                p.beta = k2;
            }
            if !(p.beta >= k2 && p.beta < k1) {
                return Err(Error::Contour(format!(
                    "pole at {} outside the guided band ({k2}, {k1})",
                    p.beta
                )));
            }
        }
        let band = k1 - k2;
        let rho_b0 = if band > 0.0 {
            (0.1 * band).min(0.05 * k2)
        } else {
            0.05 * k2
        };
        // shrink until every pole is either well inside the arc or at least
        // twice its radius away; each pole can trigger one shrink at most
        let mut branch_radius = rho_b0;
        while let Some(d) = poles
            .iter()
            .map(|p| p.beta - k2)
            .find(|&d| d >= 0.25 * branch_radius && d < 2.0 * branch_radius)
        {
            branch_radius = 0.5 * d;
        }
        let enclosed = |p: &GuidedPole| p.beta - k2 < 0.25 * branch_radius;
        let base = radius_override.unwrap_or(0.05 * band);
        let outside: Vec<usize> = (0..poles.len()).filter(|&i| !enclosed(&poles[i])).collect();
        let mut radii = vec![0.0; poles.len()];
        for (k, &i) in outside.iter().enumerate() {
            let b = poles[i].beta;
            let mut r = base.min(0.5 * (b - k2 - branch_radius));
            if k > 0 {
                r = r.min(0.45 * (b - poles[outside[k - 1]].beta));
            }
            if k + 1 < outside.len() {
                r = r.min(0.45 * (poles[outside[k + 1]].beta - b));
            }
            radii[i] = r;
        }
        let plan = PoleAvoidancePlan {
            poles,
            detour_radius: radii,
            detour_half_plane: half_plane,
            branch_point: k2,
            branch_radius,
        };
        plan.validate()?;
        Ok(plan)
    }

    /// A plan with no poles, only the branch-point arc.
    pub fn without_poles(k1: f64, k2: f64) -> Result<Self> {
        Self::new(Vec::new(), k1, k2, HalfPlane::Lower, None)
    }

    /// All radii, including the branch arc, multiplied by `factor`.
    pub fn with_scaled_radii(&self, factor: f64) -> Self {
        let mut p = self.clone();
        p.detour_radius.iter_mut().for_each(|r| *r *= factor);
        p.branch_radius *= factor;
        p
    }

    pub fn validate(&self) -> Result<()> {
        let k2 = self.branch_point;
        let rb = self.branch_radius;
        if self.poles.len() != self.detour_radius.len() {
            return Err(Error::Contour("one radius per pole required".into()));
        }
        if !(rb > 0.0 && rb < k2) {
            return Err(Error::Contour(format!("branch arc radius {rb} must lie in (0, {k2})")));
        }
        let mut last_end = k2 + rb;
        for (p, &r) in self.poles.iter().zip(&self.detour_radius) {
            if r == 0.0 {
                if p.beta - k2 >= 0.75 * rb {
                    return Err(Error::Contour(format!(
                        "pole at {} too close to the branch arc of radius {rb}",
                        p.beta
                    )));
                }
                continue;
            }
            if !(r > 0.0) || p.beta - r <= last_end {
                return Err(Error::Contour(format!(
                    "detour of radius {r} around {} overlaps the previous arc",
                    p.beta
                )));
            }
            last_end = p.beta + r;
        }
        Ok(())
    }

    pub fn band_end(&self) -> f64 {
        self.poles
            .iter()
            .zip(&self.detour_radius)
            .map(|(p, r)| p.beta + r)
            .fold(self.branch_point + self.branch_radius, f64::max)
    }
}

/// A point on the integration path. `q2_sq = beta^2 - k2^2` is passed
/// separately because it loses all accuracy near the branch point when
/// formed from `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourPoint {
    pub beta: Complex64,
    pub q2_sq: Complex64,
}

/// Shape of the real-frequency path.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourSpec {
    /// Straight path (with detours) runs up to here, then the tail.
    pub band_end: f64,
    /// First tail panel width.
    pub tail_width: f64,
    /// Roughly `2 k2 r`, the phase range of the radiation segment.
    pub oscillation_hint: f64,
    /// Extra panel boundaries past the branch arc, e.g. near-real poles of a
    /// slightly lossy integrand.
    pub band_breakpoints: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContourResult {
    pub total: VectorQuadrature,
    pub radiation: Complex64,
    pub branch_arc: Complex64,
    pub band: Complex64,
    pub detours: Complex64,
    pub tail: Complex64,
}

fn scaled_into(out: &mut [Complex64], jac: Complex64) {
    for v in out.iter_mut() {
        *v *= jac;
    }
}

/// Semicircle of radius `rho` around the real point `center`, from
/// `center - rho` to `center + rho` on the side `sigma`.
fn arc<F>(
    f: &mut F,
    weights: &[f64],
    center: f64,
    rho: f64,
    sigma: f64,
    k2: f64,
    tol: &Tolerance,
) -> Result<VectorQuadrature>
where
    F: FnMut(ContourPoint, &mut [Complex64]) -> Result<()>,
{
    let mut arc_f = |phi: f64, out: &mut [Complex64]| -> Result<()> {
        let (s, c) = phi.sin_cos();
        let beta = Complex64::new(center - rho * c, sigma * rho * s);
        let pt = ContourPoint {
            beta,
            q2_sq: (beta - k2) * (beta + k2),
        };
        f(pt, out)?;
        scaled_into(out, Complex64::new(rho * s, sigma * rho * c));
        Ok(())
    };
    adaptive_vec(&mut arc_f, weights, &[0.0, 0.25 * PI, 0.5 * PI, 0.75 * PI, PI], tol)
}

/// `int_0^inf f(beta) d beta` along the real axis, passing the branch point
/// and the poles of `plan` on semicircles, for an integrand with a
/// square-root branch point at `plan.branch_point`.
pub fn integrate_beta_with_detours<F>(
    f: &mut F,
    weights: &[f64],
    plan: &PoleAvoidancePlan,
    spec: &ContourSpec,
    tol: &Tolerance,
) -> Result<ContourResult>
where
    F: FnMut(ContourPoint, &mut [Complex64]) -> Result<()>,
{
    plan.validate()?;
    let k2 = plan.branch_point;
    let rb = plan.branch_radius;
    let band_end = spec.band_end.max(plan.band_end() * 1.0001);
    let mut total = VectorQuadrature::empty(weights.len());

    // [0, k2 - rb]: beta = k2 sin(theta), q2^2 = -k2^2 cos^2(theta)
    let mut rad_f = |th: f64, out: &mut [Complex64]| -> Result<()> {
        let (s, c) = th.sin_cos();
        let pt = ContourPoint {
            beta: Complex64::new(k2 * s, 0.0),
            q2_sq: Complex64::new(-(k2 * c) * (k2 * c), 0.0),
        };
        f(pt, out)?;
        scaled_into(out, Complex64::new(k2 * c, 0.0));
        Ok(())
    };
    let th_end = (1.0 - rb / k2).asin();
    let panels = ((spec.oscillation_hint / PI).ceil() as usize).clamp(2, 400);
    let th_breaks: Vec<f64> = (0..=panels)
        .map(|k| th_end * k as f64 / panels as f64)
        .collect();
    let rad = adaptive_vec(&mut rad_f, weights, &th_breaks, tol)?;
    total.absorb(&rad);

    let branch = arc(f, weights, k2, rb, -1.0, k2, tol)?;
    total.absorb(&branch);

    // straight pieces: beta = k2 cosh(s), q2^2 = k2^2 sinh^2(s)
    let s_of = |b: f64| (((b - k2) * (b + k2)).sqrt() / k2).asinh();
    let detoured: Vec<(f64, f64)> = plan
        .poles
        .iter()
        .zip(&plan.detour_radius)
        .filter(|(_, &r)| r > 0.0)
        .map(|(p, &r)| (p.beta, r))
        .collect();
    let mut breaks = vec![s_of(k2 + rb)];
    for &(b, r) in &detoured {
        breaks.push(s_of(b - r));
        breaks.push(s_of(b + r));
    }
    breaks.push(s_of(band_end));
    let mut inner: Vec<f64> = spec
        .band_breakpoints
        .iter()
        .filter(|&&b| b > k2 + rb && b < band_end)
        .map(|&b| s_of(b))
        .collect();
    inner.sort_by(f64::total_cmp);
    let mut band_val = Complex64::new(0.0, 0.0);
    let mut straight_f = |s: f64, out: &mut [Complex64]| -> Result<()> {
        let sh = k2 * s.sinh();
        let pt = ContourPoint {
            beta: Complex64::new(k2 * s.cosh(), 0.0),
            q2_sq: Complex64::new(sh * sh, 0.0),
        };
        f(pt, out)?;
        scaled_into(out, Complex64::new(sh, 0.0));
        Ok(())
    };
    for piece in breaks.chunks(2) {
        let (lo, hi) = (piece[0], piece[1]);
        if hi > lo {
            let mut pts = vec![lo];
            pts.extend(inner.iter().copied().filter(|&s| s > lo && s < hi));
            pts.push(hi);
            let mut sub = vec![pts[0]];
            for w in pts.windows(2) {
                sub.push(0.5 * (w[0] + w[1]));
                sub.push(w[1]);
            }
            let seg = adaptive_vec(&mut straight_f, weights, &sub, tol)?;
            band_val += seg.key;
            total.absorb(&seg);
        }
    }

    let sigma = plan.detour_half_plane.sign();
    let mut detour_val = Complex64::new(0.0, 0.0);
    for &(b, r) in &detoured {
        let seg = arc(f, weights, b, r, sigma, k2, tol)?;
        detour_val += seg.key;
        total.absorb(&seg);
    }

    let scale = total.key.norm();
    let mut tail_f = |b: f64, out: &mut [Complex64]| -> Result<()> {
        let pt = ContourPoint {
            beta: Complex64::new(b, 0.0),
            q2_sq: Complex64::new((b - k2) * (b + k2), 0.0),
        };
        f(pt, out)
    };
    let tail = integrate_marching(
        &mut tail_f,
        weights,
        band_end,
        spec.tail_width,
        1.25,
        scale,
        tol,
    )?;
    total.absorb(&tail);
    Ok(ContourResult {
        radiation: rad.key,
        branch_arc: branch.key,
        band: band_val,
        detours: detour_val,
        tail: tail.key,
        total,
    })
}

/// Guided-mode poles on the real axis for the cylinder; see
/// [`crate::green::guided_mode_poles`].
pub fn locate_guided_mode_poles(
    geom: &crate::green::FiberGeometry,
    omega: f64,
) -> Result<Vec<GuidedPole>> {
    crate::green::guided_mode_poles(geom, omega)
}

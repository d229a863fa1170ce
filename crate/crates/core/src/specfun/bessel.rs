//! Integer-order cylindrical Bessel functions of complex argument.
//!
//! Everything is built from two primitives:
//!
//! * the Macdonald function pair `e^w K_0(w)`, `e^w K_1(w)` for `Re w >= 0`
//!   (ascending series for `|w| <= 2`, Steed's continued fraction otherwise),
//!   continued upward in order through ratio recurrences;
//! * the logarithmic derivative `I_n'(z)/I_n(z)`, from a continued fraction
//!   at the top order followed by backward recurrence of ratios.
//!
//! `J`, `Y` and `H^(1)` follow from the connection formulas
//! `J_n(z) = i^n I_n(-iz)` and `H_n^(1)(z) = (2/pi) i^(-n-1) K_n(-iz)`
//! together with the Wronskians, so no step ever subtracts two large
//! numbers to form a small one.

use num_complex::Complex64;
use std::f64::consts::{FRAC_2_PI, PI};

use crate::error::{Error, Result};

pub const MAX_ORDER: i32 = 200;
pub const MAX_ARGUMENT: f64 = 1e6;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_RADIUS: f64 = 2.0;
const EPS: f64 = 1e-16;
const MAX_CF_ITER: usize = 2_000_000;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `i^k` for any integer k.
pub fn i_pow(k: i64) -> Complex64 {
    match k.rem_euclid(4) {
        0 => c(1.0, 0.0),
        1 => c(0.0, 1.0),
        2 => c(-1.0, 0.0),
        _ => c(0.0, -1.0),
    }
}

fn parity(n: i32) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn check_order(n: i32) -> Result<()> {
    if n.abs() > MAX_ORDER {
        return Err(Error::Range(format!("order {n} exceeds {MAX_ORDER}")));
    }
    Ok(())
}

fn check_arg(z: Complex64) -> Result<()> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Domain(format!("non-finite argument {z}")));
    }
    if z.norm() > MAX_ARGUMENT {
        return Err(Error::Range(format!("|z| = {} exceeds {MAX_ARGUMENT}", z.norm())));
    }
    Ok(())
}

fn finite(z: Complex64, what: &str) -> Result<Complex64> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(Error::Overflow(format!("{what} is not representable")))
    }
}

/// Unscaled `K_0(w)`, `K_1(w)` by their ascending series.
fn k01_series(w: Complex64) -> (Complex64, Complex64) {
    let t = w * w * 0.25;
    let log_half = (w * 0.5).ln();
    // I_0, I_1 and the digamma-weighted sums share the same powers of t.
    let mut term0 = c(1.0, 0.0); // t^k / (k!)^2
    let mut term1 = c(1.0, 0.0); // t^k / (k! (k+1)!)
    let mut i0 = term0;
    let mut i1s = term1;
    let mut harmonic = 0.0; // H_k
    let mut sum0 = c(0.0, 0.0);
    let mut sum1 = term1 * (-2.0 * EULER_GAMMA + 1.0); // psi(1) + psi(2)
    for k in 1..200 {
        let kf = k as f64;
        term0 = term0 * t / (kf * kf);
        term1 = term1 * t / (kf * (kf + 1.0));
        harmonic += 1.0 / kf;
        i0 += term0;
        i1s += term1;
        sum0 += term0 * harmonic;
        // psi(k+1) + psi(k+2) = 2 H_k + 1/(k+1) - 2 gamma
        sum1 += term1 * (2.0 * harmonic + 1.0 / (kf + 1.0) - 2.0 * EULER_GAMMA);
        if term0.norm() < EPS * i0.norm() && term1.norm() < EPS * i1s.norm() {
            break;
        }
    }
    let i1 = w * 0.5 * i1s;
    let k0 = -(log_half + EULER_GAMMA) * i0 + sum0;
    let k1 = w.inv() + log_half * i1 - w * 0.25 * sum1;
    (k0, k1)
}

/// Scaled `e^w K_0(w)`, `e^w K_1(w)` by Steed's continued fraction (Temme's
/// normalisation), valid for `Re w >= 0`, `|w| > 2`.
fn k01_steed(w: Complex64) -> Result<(Complex64, Complex64)> {
    let a1 = 0.25;
    let mut b = (w + 1.0) * 2.0;
    let mut d = b.inv();
    let mut delh = d;
    let mut h = d;
    let mut q1 = c(0.0, 0.0);
    let mut q2 = c(1.0, 0.0);
    let mut q = c(a1, 0.0);
    let mut cc = c(a1, 0.0);
    let mut a = -a1;
    let mut s = q * delh + 1.0;
    let mut converged = false;
    for i in 2..MAX_CF_ITER {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        cc = -cc * a / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += cc * qnew;
        b += 2.0;
        d = (b + d * a).inv();
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if dels.norm() < EPS * s.norm() {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence {
            what: format!("K continued fraction at w = {w}"),
            estimate: s.norm(),
            error: f64::NAN,
        });
    }
    h *= a1;
    let k0 = (c(PI, 0.0) / (w * 2.0)).sqrt() / s;
    let k1 = k0 * (w + 0.5 - h) / w;
    Ok((k0, k1))
}

/// `e^w K_0(w)` and `e^w K_1(w)` for `Re w >= 0`, `w != 0`.
pub fn k01_scaled(w: Complex64) -> Result<(Complex64, Complex64)> {
    check_arg(w)?;
    if w.norm() == 0.0 {
        return Err(Error::Singularity("K_n(0) is infinite".into()));
    }
    if w.re < -1e-14 * w.norm() {
        return Err(Error::Domain(format!("K requires Re w >= 0, got {w}")));
    }
    if w.norm() <= SERIES_RADIUS {
        let (k0, k1) = k01_series(w);
        let e = w.exp();
        Ok((k0 * e, k1 * e))
    } else {
        k01_steed(w)
    }
}

/// Order-ladder of the Macdonald function at one argument: logarithmic
/// derivatives `K_n'/K_n` and successive ratios `K_{n-1}/K_n`, n = 0..=nmax.
#[derive(Debug, Clone)]
pub struct KLadder {
    pub w: Complex64,
    /// `e^w K_0(w)`
    pub k0_scaled: Complex64,
    /// `K_{n-1}/K_n` for n >= 1 (entry 0 unused, set to 0).
    pub down_ratio: Vec<Complex64>,
    /// `K_n'(w)/K_n(w)`
    pub log_deriv: Vec<Complex64>,
}

impl KLadder {
    pub fn new(w: Complex64, nmax: usize) -> Result<Self> {
        let (k0, k1) = k01_scaled(w)?;
        let mut down_ratio = Vec::with_capacity(nmax + 1);
        let mut log_deriv = Vec::with_capacity(nmax + 1);
        down_ratio.push(c(0.0, 0.0));
        log_deriv.push(-k1 / k0);
        let winv = w.inv();
        let mut s = k0 / k1; // K_0/K_1
        for n in 1..=nmax {
            let nf = n as f64;
            down_ratio.push(s);
            log_deriv.push(-s - winv * nf);
            // K_{n+1}/K_n = K_{n-1}/K_n + 2n/w
            s = (s + winv * (2.0 * nf)).inv();
        }
        Ok(Self {
            w,
            k0_scaled: k0,
            down_ratio,
            log_deriv,
        })
    }

    pub fn nmax(&self) -> usize {
        self.log_deriv.len() - 1
    }

    /// `e^w K_n(w)` by accumulating the ratios; overflow is reported.
    pub fn scaled(&self, n: usize) -> Result<Complex64> {
        let mut k = self.k0_scaled;
        for s in &self.down_ratio[1..=n] {
            k /= *s;
        }
        finite(k, "scaled K_n")
    }
}

/// `I_{n+1}(z)/I_n(z)` by the modified Lentz algorithm.
fn i_ratio_cf(n: usize, z: Complex64) -> Result<Complex64> {
    let tiny = 1e-100;
    if z.norm() < 1e-100 {
        return Ok(c(0.0, 0.0));
    }
    let zinv = z.inv();
    let mut f = c(tiny, 0.0);
    let mut cc = f;
    let mut d = c(0.0, 0.0);
    for k in 1..MAX_CF_ITER {
        let b = zinv * (2.0 * (n + k) as f64);
        d = b + d;
        if d.norm() < tiny {
            d = c(tiny, 0.0);
        }
        cc = b + cc.inv();
        if cc.norm() < tiny {
            cc = c(tiny, 0.0);
        }
        d = d.inv();
        let delta = cc * d;
        f *= delta;
        if (delta - 1.0).norm() < EPS {
            return Ok(f);
        }
    }
    Err(Error::Convergence {
        what: format!("I ratio continued fraction at n = {n}, z = {z}"),
        estimate: f.norm(),
        error: f64::NAN,
    })
}

/// Logarithmic derivatives `I_n'(z)/I_n(z)` for n = 0..=nmax, any complex z.
pub fn i_log_derivs(z: Complex64, nmax: usize) -> Result<Vec<Complex64>> {
    check_arg(z)?;
    if z.norm() == 0.0 {
        return Err(Error::Singularity("I_n'/I_n is singular at z = 0".into()));
    }
    let zinv = z.inv();
    let mut out = vec![c(0.0, 0.0); nmax + 1];
    let mut r = i_ratio_cf(nmax, z)?; // I_{n+1}/I_n at n = nmax
    for n in (0..=nmax).rev() {
        out[n] = zinv * n as f64 + r;
        if n > 0 {
            let mut den = zinv * (2.0 * n as f64) + r;
            if den.norm() == 0.0 {
                den = c(1e-100, 0.0);
            }
            r = den.inv();
        }
    }
    Ok(out)
}

/// `J_n'(z)/J_n(z)` for n = 0..=nmax.
pub fn j_log_derivs(z: Complex64, nmax: usize) -> Result<Vec<Complex64>> {
    let mi = c(0.0, -1.0);
    Ok(i_log_derivs(mi * z, nmax)?.into_iter().map(|r| mi * r).collect())
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Ascending series for `J_n(z)`, n >= 0.
fn j_series(n: usize, z: Complex64) -> Complex64 {
    if z.norm() == 0.0 {
        return if n == 0 { c(1.0, 0.0) } else { c(0.0, 0.0) };
    }
    let lead = ((z * 0.5).ln() * n as f64 - ln_factorial(n)).exp();
    let t = -z * z * 0.25;
    let mut term = c(1.0, 0.0);
    let mut sum = term;
    for k in 1..500 {
        term = term * t / (k as f64 * (n + k) as f64);
        sum += term;
        if term.norm() < 1e-17 * sum.norm() {
            break;
        }
    }
    lead * sum
}

fn use_series(n: usize, z: Complex64) -> bool {
    let r = z.norm();
    r <= 5.0 || r * r <= 4.0 * (n as f64 + 1.0)
}

/// `H_n^(1)(z)` and its derivative for `Im z >= 0`, n >= 0.
fn hankel1_upper(n: usize, z: Complex64) -> Result<(Complex64, Complex64)> {
    let mi = c(0.0, -1.0);
    let ladder = KLadder::new(mi * z, n)?;
    let ks = ladder.scaled(n)?;
    // e^{-w} = e^{iz}
    let h = i_pow(-(n as i64) - 1) * FRAC_2_PI * ks * (c(0.0, 1.0) * z).exp();
    let hp = mi * ladder.log_deriv[n] * h;
    Ok((finite(h, "H_n^(1)")?, finite(hp, "H_n^(1)'")?))
}

/// `J_n(z)` for n >= 0.
fn bessel_j_nonneg(n: usize, z: Complex64) -> Result<Complex64> {
    if use_series(n, z) {
        return finite(j_series(n, z), "J_n");
    }
    if z.im < 0.0 {
        return Ok(bessel_j_nonneg(n, z.conj())?.conj());
    }
    let (h, hp) = hankel1_upper(n, z)?;
    let rho = j_log_derivs(z, n)?[n];
    // Wronskian J H' - J' H = 2i/(pi z)
    let j = c(0.0, 2.0) / (PI * z * (hp - rho * h));
    finite(j, "J_n")
}

/// Bessel function of the first kind `J_n(z)`.
pub fn bessel_j(n: i32, z: Complex64) -> Result<Complex64> {
    check_order(n)?;
    check_arg(z)?;
    let v = bessel_j_nonneg(n.unsigned_abs() as usize, z)?;
    Ok(if n < 0 { v * parity(n) } else { v })
}

/// `J_n'(z)` from `(J_{n-1} - J_{n+1})/2`.
pub fn bessel_j_deriv(n: i32, z: Complex64) -> Result<Complex64> {
    check_order(n)?;
    Ok((bessel_j(n - 1, z)? - bessel_j(n + 1, z)?) * 0.5)
}

/// Hankel function of the first kind and its derivative.
pub fn hankel1_with_deriv(n: i32, z: Complex64) -> Result<(Complex64, Complex64)> {
    check_order(n)?;
    check_arg(z)?;
    if z.norm() == 0.0 {
        return Err(Error::Singularity("H_n^(1) is singular at z = 0".into()));
    }
    let m = n.unsigned_abs() as usize;
    let (h, hp) = if z.im >= 0.0 {
        hankel1_upper(m, z)?
    } else {
        // H1(z) = 2 J(z) - H2(z), H2(z) = conj(H1(conj z))
        let (h1c, h1pc) = hankel1_upper(m, z.conj())?;
        let j = bessel_j_nonneg(m, z)?;
        let rho = j_log_derivs(z, m)?[m];
        (j * 2.0 - h1c.conj(), j * rho * 2.0 - h1pc.conj())
    };
    let s = if n < 0 { parity(n) } else { 1.0 };
    Ok((h * s, hp * s))
}

pub fn hankel1(n: i32, z: Complex64) -> Result<Complex64> {
    Ok(hankel1_with_deriv(n, z)?.0)
}

/// Bessel function of the second kind for real positive x.
pub fn bessel_y(n: i32, x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Err(Error::Domain(format!("Y_n requires x > 0, got {x}")));
    }
    Ok(hankel1(n, c(x, 0.0))?.im)
}

pub fn bessel_y_deriv(n: i32, x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Err(Error::Domain(format!("Y_n requires x > 0, got {x}")));
    }
    Ok(hankel1_with_deriv(n, c(x, 0.0))?.1.im)
}

fn check_positive(x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("modified Bessel functions need finite x > 0, got {x}")));
    }
    if x > MAX_ARGUMENT {
        return Err(Error::Range(format!("x = {x} exceeds {MAX_ARGUMENT}")));
    }
    Ok(())
}

/// Exponentially scaled `e^x K_n(x)` and `e^x K_n'(x)`.
pub fn bessel_k_scaled(n: i32, x: f64) -> Result<(f64, f64)> {
    check_order(n)?;
    check_positive(x)?;
    let m = n.unsigned_abs() as usize;
    let ladder = KLadder::new(c(x, 0.0), m)?;
    let k = ladder.scaled(m)?.re;
    Ok((k, k * ladder.log_deriv[m].re))
}

/// Exponentially scaled `e^-x I_n(x)` and `e^-x I_n'(x)`.
pub fn bessel_i_scaled(n: i32, x: f64) -> Result<(f64, f64)> {
    check_order(n)?;
    check_positive(x)?;
    let m = n.unsigned_abs() as usize;
    let ladder = KLadder::new(c(x, 0.0), m)?;
    let k = ladder.scaled(m)?.re;
    let kappa = ladder.log_deriv[m].re;
    let rho = i_log_derivs(c(x, 0.0), m)?[m].re;
    // Wronskian I K' - I' K = -1/x
    let i = 1.0 / (x * k * (rho - kappa));
    if !i.is_finite() {
        return Err(Error::Overflow(format!("e^-x I_{n}({x}) underflows to zero")));
    }
    Ok((i, i * rho))
}

fn unscale(v: f64, exponent: f64, what: &str) -> Result<f64> {
    let out = v * exponent.exp();
    if out.is_finite() {
        Ok(out)
    } else {
        Err(Error::Overflow(format!(
            "{what}: scaled value {v:e} times e^{exponent} overflows"
        )))
    }
}

/// `K_n(x)` and `K_n'(x)` for x > 0.
pub fn bessel_k(n: i32, x: f64) -> Result<(f64, f64)> {
    let (k, kp) = bessel_k_scaled(n, x)?;
    Ok((unscale(k, -x, "K_n")?, unscale(kp, -x, "K_n'")?))
}

/// `I_n(x)` and `I_n'(x)` for x > 0.
pub fn bessel_i(n: i32, x: f64) -> Result<(f64, f64)> {
    let (i, ip) = bessel_i_scaled(n, x)?;
    Ok((unscale(i, x, "I_n")?, unscale(ip, x, "I_n'")?))
}

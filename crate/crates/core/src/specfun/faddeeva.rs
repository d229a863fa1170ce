//! Faddeeva function `w(z) = exp(-z^2) erfc(-iz)` and the complex Dawson
//! function.
//!
//! Upper half plane: Weideman's rational expansion (N = 64) for moderate
//! `|z|`, the Laplace continued fraction beyond. The lower half plane follows
//! from `w(z) = 2 exp(-z^2) - w(-z)`.

use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const N_TERMS: usize = 64;
const CF_RADIUS: f64 = 12.0;

struct Weideman {
    l: f64,
    coeffs: Vec<f64>,
}

fn weideman() -> &'static Weideman {
    static TABLE: OnceLock<Weideman> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = N_TERMS;
        let m = 2 * n;
        let l = (n as f64 / 2f64.sqrt()).sqrt();
        // f sampled at t_k = L tan(theta_k / 2), theta_k = k pi / M, k = -M+1..M-1;
        // f is even in k, so the FFT of the shifted sequence is a cosine sum.
        let f: Vec<f64> = (0..m)
            .map(|k| {
                let t = l * (k as f64 * PI / m as f64 / 2.0).tan();
                (-t * t).exp() * (l * l + t * t)
            })
            .collect();
        let coeffs = (1..=n)
            .map(|j| {
                let mut s = f[0];
                for (k, fk) in f.iter().enumerate().skip(1) {
                    s += 2.0 * fk * (PI * (k * j) as f64 / m as f64).cos();
                }
                s / (2 * m) as f64
            })
            .collect();
        Weideman { l, coeffs }
    })
}

fn w_rational(z: Complex64) -> Complex64 {
    let tab = weideman();
    let i = Complex64::i();
    let lz = tab.l - i * z;
    let big_z = (tab.l + i * z) / lz;
    let mut p = Complex64::new(0.0, 0.0);
    for a in tab.coeffs.iter().rev() {
        p = p * big_z + a;
    }
    p * 2.0 / (lz * lz) + 1.0 / (PI.sqrt() * lz)
}

fn w_continued_fraction(z: Complex64) -> Complex64 {
    // w(z) = (i/sqrt(pi)) / (z - (1/2)/(z - 1/(z - (3/2)/(z - ...))))
    let r = z.norm();
    let terms = (8.0 + 600.0 / r) as usize;
    let mut tail = z;
    for k in (1..=terms).rev() {
        tail = z - (k as f64 * 0.5) / tail;
    }
    Complex64::i() / (PI.sqrt() * tail)
}

fn w_upper(z: Complex64) -> Complex64 {
    if z.norm() >= CF_RADIUS {
        w_continued_fraction(z)
    } else {
        w_rational(z)
    }
}

/// Faddeeva function `w(z)`.
pub fn faddeeva(z: Complex64) -> Result<Complex64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Domain(format!("faddeeva needs a finite argument, got {z}")));
    }
    if z.im == 0.0 {
        // Re w(x) = exp(-x^2) exactly on the real axis
        let v = w_upper(z);
        return Ok(Complex64::new((-z.re * z.re).exp(), v.im));
    }
    if z.im > 0.0 {
        return Ok(w_upper(z));
    }
    let e = (-z * z).exp();
    let v = e * 2.0 - w_upper(-z);
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow(format!("w(z) overflows at z = {z}")))
    }
}

/// Dawson function continued to the complex plane,
/// `D(z) = (i sqrt(pi)/2) (exp(-z^2) - w(z))`.
pub fn dawson(z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 {
        // on the real axis the exp(-x^2) parts cancel exactly
        let w = faddeeva(z)?;
        return Ok(Complex64::new(0.5 * PI.sqrt() * w.im, 0.0));
    }
    let w = faddeeva(z)?;
    Ok(Complex64::i() * (0.5 * PI.sqrt()) * ((-z * z).exp() - w))
}

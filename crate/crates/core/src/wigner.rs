//! Wigner 3j and 6j symbols by the Racah sums in exact rational arithmetic,
//! hyperfine dipole components, and a brute-force check of the sublevel sum
//! rules that let the potentials use reduced matrix elements only.
//!
//! Angular momenta and projections are stored doubled so half-integers are
//! exact.

use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

const FACTORIAL_CAP: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AngularMomentum {
    twice: u32,
}

impl AngularMomentum {
    pub const fn from_twice(twice: u32) -> Self {
        AngularMomentum { twice }
    }

    /// From a value such as 1.5; rejects anything that is not a multiple of 1/2.
    pub fn new(j: f64) -> Result<Self> {
        let t = 2.0 * j;
        if j < 0.0 || (t - t.round()).abs() > 1e-12 || t > u32::MAX as f64 {
            return Err(Error::Domain(format!("{j} is not a nonnegative half-integer")));
        }
        Ok(AngularMomentum::from_twice(t.round() as u32))
    }

    pub fn twice(self) -> u32 {
        self.twice
    }

    pub fn value(self) -> f64 {
        self.twice as f64 / 2.0
    }

    pub fn multiplicity(self) -> u32 {
        self.twice + 1
    }

    /// Doubled projections -2j, -2j+2, ..., 2j.
    pub fn projections(self) -> impl Iterator<Item = i32> {
        let t = self.twice as i32;
        (0..=self.twice).map(move |k| -t + 2 * k as i32)
    }

    /// Doubled values allowed by the triangle rule with `other`.
    pub fn couple(self, other: AngularMomentum) -> impl Iterator<Item = AngularMomentum> {
        let lo = (self.twice as i64 - other.twice as i64).unsigned_abs() as u32;
        let hi = self.twice + other.twice;
        (lo..=hi).step_by(2).map(AngularMomentum::from_twice)
    }
}

impl fmt::Display for AngularMomentum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice % 2 == 0 {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

/// Magnetic sublevel `|n J I F M>`; `m_twice` is the doubled projection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HfsSublevel {
    pub label: String,
    pub j: AngularMomentum,
    pub i: AngularMomentum,
    pub f: AngularMomentum,
    pub m_twice: i32,
}

impl HfsSublevel {
    pub fn new(
        label: &str,
        j: AngularMomentum,
        i: AngularMomentum,
        f: AngularMomentum,
        m_twice: i32,
    ) -> Result<Self> {
        if !triangle(j.twice, i.twice, f.twice) {
            return Err(Error::Domain(format!("F = {f} not reachable from J = {j}, I = {i}")));
        }
        check_projection(f.twice, m_twice)?;
        Ok(HfsSublevel {
            label: label.to_string(),
            j,
            i,
            f,
            m_twice,
        })
    }
}

fn check_projection(tj: u32, tm: i32) -> Result<()> {
    if tm.unsigned_abs() > tj || (tj as i64 + tm as i64) % 2 != 0 {
        return Err(Error::Domain(format!(
            "projection {tm}/2 is not allowed for j = {tj}/2"
        )));
    }
    Ok(())
}

fn triangle(a: u32, b: u32, c: u32) -> bool {
    (a + b + c) % 2 == 0 && c <= a + b && a <= b + c && b <= a + c
}

fn factorials() -> &'static [BigInt] {
    static TABLE: OnceLock<Vec<BigInt>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut v = Vec::with_capacity(FACTORIAL_CAP);
        let mut acc = BigInt::one();
        v.push(acc.clone());
        for k in 1..FACTORIAL_CAP {
            acc *= k;
            v.push(acc.clone());
        }
        v
    })
}

fn fact(n: i64) -> Result<&'static BigInt> {
    if n < 0 || n as usize >= FACTORIAL_CAP {
        return Err(Error::Range(format!("factorial argument {n} outside table")));
    }
    Ok(&factorials()[n as usize])
}

/// `(a+b-c)! (a-b+c)! (-a+b+c)! / (a+b+c+1)!` for doubled arguments.
fn delta(a: u32, b: u32, c: u32) -> Result<BigRational> {
    let (a, b, c) = (a as i64, b as i64, c as i64);
    let num = fact((a + b - c) / 2)? * fact((a - b + c) / 2)? * fact((-a + b + c) / 2)?;
    let den = fact((a + b + c) / 2 + 1)?.clone();
    Ok(BigRational::new(num, den))
}

/// `sign * sqrt(root) * sum` evaluated with one rounding at the end.
fn finish(root: BigRational, sum: BigRational, negate: bool) -> f64 {
    if sum.is_zero() {
        return 0.0;
    }
    let sq = root * &sum * &sum;
    let mag = sq.to_f64().unwrap_or(f64::NAN).sqrt();
    let neg = sum.is_negative() ^ negate;
    if neg {
        -mag
    } else {
        mag
    }
}

/// 3j symbol with doubled arguments.
pub fn wigner3j_twice(tj: [u32; 3], tm: [i32; 3]) -> Result<f64> {
    for k in 0..3 {
        check_projection(tj[k], tm[k])?;
    }
    if tm[0] + tm[1] + tm[2] != 0 || !triangle(tj[0], tj[1], tj[2]) {
        return Ok(0.0);
    }
    let (j1, j2, j3) = (tj[0] as i64, tj[1] as i64, tj[2] as i64);
    let (m1, m2, m3) = (tm[0] as i64, tm[1] as i64, tm[2] as i64);

    let mut root = delta(tj[0], tj[1], tj[2])?;
    let num = fact((j1 + m1) / 2)?
        * fact((j1 - m1) / 2)?
        * fact((j2 + m2) / 2)?
        * fact((j2 - m2) / 2)?
        * fact((j3 + m3) / 2)?
        * fact((j3 - m3) / 2)?;
    root *= BigRational::from_integer(num);

    let kmin = 0.max((j2 - j3 - m1) / 2).max((j1 - j3 + m2) / 2);
    let kmax = ((j1 + j2 - j3) / 2).min((j1 - m1) / 2).min((j2 + m2) / 2);
    let mut sum = BigRational::zero();
    for k in kmin..=kmax {
        let den = fact(k)?
            * fact((j3 - j2 + m1) / 2 + k)?
            * fact((j3 - j1 - m2) / 2 + k)?
            * fact((j1 + j2 - j3) / 2 - k)?
            * fact((j1 - m1) / 2 - k)?
            * fact((j2 + m2) / 2 - k)?;
        let term = BigRational::new(BigInt::one(), den);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    let phase = ((j1 - j2 - m3) / 2).rem_euclid(2) == 1;
    Ok(finish(root, sum, phase))
}

/// 6j symbol `{j1 j2 j3; j4 j5 j6}` with doubled arguments.
pub fn wigner6j_twice(t: [u32; 6]) -> Result<f64> {
    let [j1, j2, j3, j4, j5, j6] = t;
    let triads = [(j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3)];
    if triads.iter().any(|&(a, b, c)| !triangle(a, b, c)) {
        return Ok(0.0);
    }
    let mut root = BigRational::one();
    for &(a, b, c) in &triads {
        root *= delta(a, b, c)?;
    }
    let [j1, j2, j3, j4, j5, j6] = t.map(|v| v as i64);
    let a = [
        (j1 + j2 + j3) / 2,
        (j1 + j5 + j6) / 2,
        (j4 + j2 + j6) / 2,
        (j4 + j5 + j3) / 2,
    ];
    let b = [
        (j1 + j2 + j4 + j5) / 2,
        (j2 + j3 + j5 + j6) / 2,
        (j3 + j1 + j6 + j4) / 2,
    ];
    let tmin = *a.iter().max().unwrap();
    let tmax = *b.iter().min().unwrap();
    let mut sum = BigRational::zero();
    for k in tmin..=tmax {
        let mut den = BigInt::one();
        for &ai in &a {
            den *= fact(k - ai)?;
        }
        for &bi in &b {
            den *= fact(bi - k)?;
        }
        let term = BigRational::new(fact(k + 1)?.clone(), den);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    Ok(finish(root, sum, false))
}

/// 3j symbol `(j1 j2 j3; m1 m2 m3)` from ordinary (possibly half-integer) values.
pub fn wigner3j(j1: f64, j2: f64, j3: f64, m1: f64, m2: f64, m3: f64) -> Result<f64> {
    let tj = [
        AngularMomentum::new(j1)?.twice,
        AngularMomentum::new(j2)?.twice,
        AngularMomentum::new(j3)?.twice,
    ];
    let tm = [
        doubled_projection(m1)?,
        doubled_projection(m2)?,
        doubled_projection(m3)?,
    ];
    wigner3j_twice(tj, tm)
}

/// 6j symbol `{j1 j2 j3; j4 j5 j6}` from ordinary values.
pub fn wigner6j(j: [f64; 6]) -> Result<f64> {
    let mut t = [0u32; 6];
    for (dst, &v) in t.iter_mut().zip(j.iter()) {
        *dst = AngularMomentum::new(v)?.twice;
    }
    wigner6j_twice(t)
}

fn doubled_projection(m: f64) -> Result<i32> {
    let t = 2.0 * m;
    if (t - t.round()).abs() > 1e-12 || t.abs() > i32::MAX as f64 {
        return Err(Error::Domain(format!("{m} is not a half-integer")));
    }
    Ok(t.round() as i32)
}

/// Spherical component `q` of `<upper| D |lower>` for hyperfine sublevels,
/// in units of `reduced_d`, which is the reduced element `<J'||D||J>`.
pub fn dipole_component(
    upper: &HfsSublevel,
    lower: &HfsSublevel,
    q: i32,
    reduced_d: f64,
) -> Result<f64> {
    if upper.i != lower.i {
        return Err(Error::Domain(format!(
            "nuclear spins differ: {} vs {}",
            upper.i, lower.i
        )));
    }
    if !(-1..=1).contains(&q) {
        return Err(Error::Domain(format!("q = {q} is not a dipole component")));
    }
    if upper.m_twice - lower.m_twice != 2 * q {
        return Ok(0.0);
    }
    let six = wigner6j_twice([
        upper.j.twice,
        upper.f.twice,
        upper.i.twice,
        lower.f.twice,
        lower.j.twice,
        2,
    ])?;
    let three = wigner3j_twice(
        [lower.f.twice, 2, upper.f.twice],
        [lower.m_twice, 2 * q, -upper.m_twice],
    )?;
    let e = (upper.i.twice as i64 + upper.j.twice as i64 - upper.m_twice as i64) / 2;
    let phase = if e.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let deg = ((lower.f.multiplicity() * upper.f.multiplicity()) as f64).sqrt();
    Ok(phase * reduced_d * deg * six * three)
}

/// Cartesian vector `<e| D |g>` from its spherical components
/// (`D_q = <e|D_q|g>`, `d = sum_q D_q e_q^*`).
pub fn spherical_to_cartesian(dq: [f64; 3]) -> [Complex64; 3] {
    // dq indexed by q + 1
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (dm, d0, dp) = (dq[0], dq[1], dq[2]);
    [
        Complex64::new((dm - dp) * s, 0.0),
        Complex64::new(0.0, (dm + dp) * s),
        Complex64::new(d0, 0.0),
    ]
}

fn contract(d: &[Complex64; 3], t: &[[Complex64; 3]; 3]) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for a in 0..3 {
        for b in 0..3 {
            s += d[a] * t[a][b] * d[b].conj();
        }
    }
    s
}

/// One line of the sum rule for a fixed hyperfine level `f`:
/// the explicit sublevel sum and the closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumRuleLine {
    pub f: AngularMomentum,
    pub lhs: Complex64,
    pub rhs: Complex64,
}

impl SumRuleLine {
    pub fn relative_deviation(&self) -> f64 {
        let scale = self.rhs.norm().max(self.lhs.norm());
        if scale == 0.0 {
            0.0
        } else {
            (self.lhs - self.rhs).norm() / scale
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SumRuleReport {
    /// Averages over the lower level's sublevels, one per lower F.
    pub lower: Vec<SumRuleLine>,
    /// Averages over the upper level's sublevels, one per upper F'.
    pub upper: Vec<SumRuleLine>,
}

impl SumRuleReport {
    pub fn max_relative_deviation(&self) -> f64 {
        self.lower
            .iter()
            .chain(self.upper.iter())
            .map(SumRuleLine::relative_deviation)
            .fold(0.0, f64::max)
    }
}

fn dipole_vector(
    upper: &HfsSublevel,
    lower: &HfsSublevel,
    reduced_d: f64,
) -> Result<[Complex64; 3]> {
    let mut dq = [0.0; 3];
    for q in -1..=1 {
        dq[(q + 1) as usize] = dipole_component(upper, lower, q, reduced_d)?;
    }
    Ok(spherical_to_cartesian(dq))
}

/// Both sides of
/// `1/(2F+1) sum_{M F' M'} d.T.d^* = |<J'||D||J>|^2 Tr T / (3(2J+1))`
/// and of its upper-level counterpart, by explicit summation.
pub fn validate_sum_rule(
    j_lower: AngularMomentum,
    j_upper: AngularMomentum,
    nuclear: AngularMomentum,
    tensor: &[[Complex64; 3]; 3],
    reduced_d: f64,
) -> Result<SumRuleReport> {
    let trace = tensor[0][0] + tensor[1][1] + tensor[2][2];
    let d2 = reduced_d * reduced_d;
    let lower_fs: Vec<_> = j_lower.couple(nuclear).collect();
    let upper_fs: Vec<_> = j_upper.couple(nuclear).collect();

    let sub = |label: &str, j, f: AngularMomentum, m| HfsSublevel::new(label, j, nuclear, f, m);

    let mut lower = Vec::new();
    for &f in &lower_fs {
        let mut acc = Complex64::new(0.0, 0.0);
        for m in f.projections() {
            let g = sub("lower", j_lower, f, m)?;
            for &fp in &upper_fs {
                for mp in fp.projections() {
                    let e = sub("upper", j_upper, fp, mp)?;
                    acc += contract(&dipole_vector(&e, &g, reduced_d)?, tensor);
                }
            }
        }
        lower.push(SumRuleLine {
            f,
            lhs: acc / f.multiplicity() as f64,
            rhs: trace * d2 / (3.0 * j_lower.multiplicity() as f64),
        });
    }

    let mut upper = Vec::new();
    for &fp in &upper_fs {
        let mut acc = Complex64::new(0.0, 0.0);
        for mp in fp.projections() {
            let e = sub("upper", j_upper, fp, mp)?;
            for &f in &lower_fs {
                for m in f.projections() {
                    let g = sub("lower", j_lower, f, m)?;
                    acc += contract(&dipole_vector(&e, &g, reduced_d)?, tensor);
                }
            }
        }
        upper.push(SumRuleLine {
            f: fp,
            lhs: acc / fp.multiplicity() as f64,
            rhs: trace * d2 / (3.0 * j_upper.multiplicity() as f64),
        });
    }
    Ok(SumRuleReport { lower, upper })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half(t: u32) -> AngularMomentum {
        AngularMomentum::from_twice(t)
    }

    #[test]
    fn zero_coupling_closed_form() {
        // (j j 0; m -m 0) = (-1)^(j-m) / sqrt(2j+1)
        let v = wigner3j(1.5, 1.5, 0.0, 0.5, -0.5, 0.0).unwrap();
        assert!((v - (-1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn selection_rule_zeros_are_exact() {
        assert_eq!(wigner3j(1.0, 1.0, 3.0, 0.0, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(wigner3j(1.0, 1.0, 1.0, 1.0, 0.0, 0.0).unwrap(), 0.0);
        // (1 1 1; 0 0 0) vanishes by parity
        assert_eq!(wigner3j(1.0, 1.0, 1.0, 0.0, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(wigner6j([1.0, 1.0, 3.0, 1.0, 1.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn malformed_arguments() {
        assert!(wigner3j(1.0, 0.5, 0.5, 0.5, 0.0, -0.5).is_err());
        assert!(wigner3j(0.3, 1.0, 1.0, 0.0, 0.0, 0.0).is_err());
        assert!(wigner3j(1.0, 1.0, 1.0, 2.0, -1.0, -1.0).is_err());
        assert!(AngularMomentum::new(-0.5).is_err());
    }

    #[test]
    fn six_j_with_a_zero() {
        // {a b c; 0 c b} = (-1)^(a+b+c) / sqrt((2b+1)(2c+1))
        let (a, b, c) = (1.0, 1.5, 0.5);
        let v = wigner6j([a, b, c, 0.0, c, b]).unwrap();
        let want = (-1f64).powi((a + b + c) as i32) / ((2.0 * b + 1.0) * (2.0 * c + 1.0)).sqrt();
        assert!((v - want).abs() < 1e-15);
    }

    #[test]
    fn zero_dipole_unless_projection_matches() {
        let (j, i) = (half(1), half(3));
        let g = HfsSublevel::new("5S1/2", j, i, half(4), 0).unwrap();
        let e = HfsSublevel::new("5P3/2", half(3), i, half(6), 4).unwrap();
        assert_eq!(dipole_component(&e, &g, 1, 1.0).unwrap(), 0.0);
        let other = HfsSublevel::new("x", half(3), half(5), half(4), 0).unwrap();
        assert!(dipole_component(&other, &g, 0, 1.0).is_err());
    }

    #[test]
    fn display() {
        assert_eq!(half(3).to_string(), "3/2");
        assert_eq!(half(4).to_string(), "2");
    }
}

//! Acceptance criteria for the rubidium / silica nanofiber potentials.
//!
//! Everything runs inside one test so that the single-threaded runtime of
//! criterion 1 is not shared with other tests. Each criterion prints one
//! `PASS` or `FAIL` line straight to stdout (not captured by the harness);
//! the test fails at the end if any criterion failed.

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use fibercp::atomdata::Catalog;
use fibercp::dielectric::{PermittivityModel, SilicaData};
use fibercp::green::{
    pole_plan, prepare_real, trace_sc_imag, trace_sc_real, trace_sc_real_auto, trace_sc_real_prepared,
    FiberGeometry, PoleStrategy, TraceOptions,
};
use fibercp::potential::{
    frequency_shift, potential_curve, recoil_energy, spontaneous_force_max, two_level_potentials, u_nonresonant,
    PotentialCurve, PotentialOptions,
};
use fibercp::specfun::{bessel_i, bessel_j, bessel_j_deriv, bessel_k, bessel_y, bessel_y_deriv, hankel1_with_deriv};
use fibercp::units::{joule_to_microkelvin, wavelength_to_angular, AU_DIPOLE};
use fibercp::wigner::{validate_sum_rule, wigner3j_twice, wigner6j_twice, AngularMomentum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NM: f64 = 1e-9;

struct Ledger {
    failed: Vec<String>,
}

impl Ledger {
    fn report(&mut self, id: u32, name: &str, pass: bool, detail: String) {
        let tag = if pass { "PASS" } else { "FAIL" };
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "acceptance {id:>2} {name}: {tag} | {detail}");
        let _ = out.flush();
        if !pass {
            self.failed.push(format!("{id} {name}"));
        }
    }
}

fn fiber(a_nm: f64) -> FiberGeometry {
    FiberGeometry::silica_in_vacuum(a_nm * NM).unwrap()
}

/// Positions `a + d` for d evenly spaced over `[lo, hi]` nm.
fn grid(a_nm: f64, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| (a_nm + lo + (hi - lo) * k as f64 / (n - 1) as f64) * NM)
        .collect()
}

fn curve(state: &str, cat: &Catalog, a_nm: f64, r: &[f64]) -> PotentialCurve {
    potential_curve(state, cat, &fiber(a_nm), r, &PotentialOptions::default()).unwrap()
}

/// Sign changes of `y`, linearly interpolated: (x, +1 for upward, -1 for downward).
fn zero_crossings(x: &[f64], y: &[f64]) -> Vec<(f64, i32)> {
    let mut out = Vec::new();
    for i in 1..x.len() {
        if y[i - 1] * y[i] < 0.0 {
            let t = y[i - 1] / (y[i - 1] - y[i]);
            out.push((x[i - 1] + t * (x[i] - x[i - 1]), if y[i] > y[i - 1] { 1 } else { -1 }));
        }
    }
    out
}

fn local_maxima(y: &[f64]) -> Vec<usize> {
    (1..y.len().saturating_sub(1)).filter(|&i| y[i] > y[i - 1] && y[i] >= y[i + 1]).collect()
}

fn local_minima(y: &[f64]) -> Vec<usize> {
    (1..y.len().saturating_sub(1)).filter(|&i| y[i] < y[i - 1] && y[i] <= y[i + 1]).collect()
}

/// Vertex of the parabola through the maximum sample and its neighbours.
fn refined_peak(x: &[f64], y: &[f64]) -> (f64, f64) {
    let i = (0..y.len()).max_by(|&a, &b| y[a].total_cmp(&y[b])).unwrap();
    if i == 0 || i + 1 == y.len() {
        return (x[i], y[i]);
    }
    let h = x[i + 1] - x[i];
    let (ym, y0, yp) = (y[i - 1], y[i], y[i + 1]);
    let denom = ym - 2.0 * y0 + yp;
    let s = 0.5 * (ym - yp) / denom;
    (x[i] + s * h, y0 - 0.25 * (ym - yp) * s)
}

fn within(x: f64, target: f64, rel: f64) -> bool {
    (x / target - 1.0).abs() <= rel
}

fn am(twice: u32) -> AngularMomentum {
    AngularMomentum::from_twice(twice)
}

#[test]
fn acceptance_criteria() {
    let cat = Catalog::builtin().unwrap();
    let opts = PotentialOptions::default();
    let mut led = Ledger { failed: Vec::new() };
    let a = 200.0;
    let r200 = grid(a, 50.0, 1200.0, 200);

    // 1: ground state, single-threaded
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let t0 = Instant::now();
    let ground = pool.install(|| curve("5S1/2", &cat, a, &r200));
    let secs = t0.elapsed().as_secs_f64();
    let u = ground.total_microkelvin();
    let negative = u.iter().all(|&v| v < 0.0);
    let increasing = u.windows(2).all(|w| w[1] > w[0]);
    let u100 = u_nonresonant("5S1/2", &cat, &fiber(a), (a + 100.0) * NM, &opts).unwrap().microkelvin();
    led.report(
        1,
        "ground state 5S1/2",
        negative && increasing && (-30.0..=-5.0).contains(&u100) && secs < 300.0 && ground.all_converged(),
        format!(
            "U<0 {negative}, increasing {increasing}, U(100 nm) = {u100:.3} uK, 200 points in {secs:.1} s on 1 thread, converged {}",
            ground.all_converged()
        ),
    );

    // 2: radius ordering at 100 nm
    let mags: Vec<f64> = [350.0, 250.0, 150.0]
        .iter()
        .map(|&ra| u_nonresonant("5S1/2", &cat, &fiber(ra), (ra + 100.0) * NM, &opts).unwrap().microkelvin().abs())
        .collect();
    led.report(
        2,
        "radius ordering",
        mags[0] > mags[1] && mags[1] > mags[2],
        format!("|U| at 100 nm: a=350 {:.3}, a=250 {:.3}, a=150 {:.3} uK", mags[0], mags[1], mags[2]),
    );

    // 3: D2 excited state
    let d2 = curve("5P3/2", &cat, a, &r200);
    let x = d2.distances().iter().map(|d| d * 1e9).collect::<Vec<f64>>();
    let u = d2.total_microkelvin();
    let zeros = zero_crossings(&x, &u);
    let first_zero = zeros.first().map(|z| z.0).unwrap_or(f64::INFINITY);
    let amplitude = x
        .iter()
        .zip(&u)
        .filter(|(d, _)| **d > first_zero)
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max);
    let maxima = local_maxima(&u);
    let mut well = (0.0, f64::NAN);
    for i in local_minima(&u).into_iter().filter(|&i| x[i] > first_zero) {
        let left = maxima.iter().rev().find(|&&m| m < i);
        let right = maxima.iter().find(|&&m| m > i);
        if let (Some(&l), Some(&r)) = (left, right) {
            let depth = u[l].min(u[r]) - u[i];
            if depth > well.0 {
                well = (depth, x[i]);
            }
        }
    }
    let res: Vec<f64> = d2.resonant.iter().map(|&v| joule_to_microkelvin(v)).collect();
    let nres: Vec<f64> = d2.nonresonant.iter().map(|&v| joule_to_microkelvin(v)).collect();
    let dominance: Vec<f64> = res.iter().zip(&nres).map(|(r, n)| r.abs() - n.abs()).collect();
    let crossover = zero_crossings(&x, &dominance).iter().find(|z| z.1 > 0).map(|z| z.0).unwrap_or(f64::NAN);
    let far: Vec<(f64, i32)> = zeros.iter().copied().filter(|z| (600.0..=1200.0).contains(&z.0)).collect();
    let periods: Vec<f64> = far.windows(3).map(|w| w[2].0 - w[0].0).collect();
    let period = if periods.is_empty() { f64::NAN } else { periods.iter().sum::<f64>() / periods.len() as f64 };
    let spacing: Vec<String> = far.windows(2).map(|w| format!("{:.0}", w[1].0 - w[0].0)).collect();
    let ok = [
        within(amplitude, 2.3, 0.3),
        within(well.0, 2.8, 0.3),
        (crossover - 180.0).abs() <= 40.0,
        within(period, 390.0, 0.1),
    ];
    led.report(
        3,
        "D2 excited state 5P3/2",
        ok.iter().all(|&b| b) && d2.all_converged(),
        format!(
            "amplitude {amplitude:.3} uK [{}], deepest well {:.3} uK at {:.0} nm [{}], crossover {crossover:.1} nm [{}], \
             far-zone period (same-direction crossings) {period:.1} nm [{}], consecutive crossing spacing {} nm",
            ok[0], well.0, well.1, ok[1], ok[2], ok[3], spacing.join("/")
        ),
    );

    // 4: force
    let d1 = curve("5P1/2", &cat, a, &r200);
    let fmax = |c: &PotentialCurve| {
        let f = c.force_zeptonewton();
        f[2..f.len() - 2].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    };
    let (f32_, f12) = (fmax(&d2), fmax(&d1));
    let fpos = f32_.max(f12);
    let line = cat.lines.iter().find(|l| l.lower == "5S1/2" && l.upper == "5P3/2").unwrap();
    let gamma = cat.spontaneous_rate(line).unwrap();
    let fsp = spontaneous_force_max(cat.line_wavelength(line).unwrap(), gamma).unwrap() * 1e21;
    led.report(
        4,
        "radial force",
        within(fpos, 0.4, 0.5) && (13.5..=17.6).contains(&fsp),
        format!("max positive force 5P3/2 {f32_:.3} zN, 5P1/2 {f12:.3} zN; hbar k gamma / 2 = {fsp:.2} zN"),
    );

    // 5: D1 and D2 shifts
    let s2 = frequency_shift(&d2, &ground).unwrap().megahertz();
    let s1 = frequency_shift(&d1, &ground).unwrap().megahertz();
    let near = |s: &[f64]| x.iter().zip(s).filter(|(d, _)| **d < 300.0).all(|(_, v)| *v < 0.0);
    let window: Vec<usize> = (0..x.len()).filter(|&i| (400.0..=1200.0).contains(&x[i])).collect();
    let decaying = |s: &[f64]| {
        let xs: Vec<f64> = window.iter().map(|&i| x[i]).collect();
        let ys: Vec<f64> = window.iter().map(|&i| s[i]).collect();
        let mut ext: Vec<usize> = local_maxima(&ys).into_iter().chain(local_minima(&ys)).collect();
        ext.sort();
        let peaks: Vec<f64> = ext.iter().map(|&i| ys[i].abs()).collect();
        let n_zero = zero_crossings(&xs, &ys).len();
        (n_zero >= 2 && peaks.len() >= 2 && peaks.windows(2).all(|w| w[1] < w[0]), n_zero, peaks)
    };
    let (dec1, z1, p1) = decaying(&s1);
    let (dec2, z2, p2) = decaying(&s2);
    let osc_amp = window.iter().map(|&i| s1[i].abs().max(s2[i].abs())).fold(0.0, f64::max);
    let diff = window.iter().map(|&i| (s1[i] - s2[i]).abs()).fold(0.0, f64::max);
    let fmt = |p: &[f64]| p.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>().join("/");
    led.report(
        5,
        "D1/D2 frequency shifts",
        near(&s1) && near(&s2) && dec1 && dec2 && diff < 0.3 * osc_amp,
        format!(
            "negative below 300 nm D1 {} D2 {}; 400-1200 nm: D1 {z1} sign changes, |peaks| {} MHz; D2 {z2} sign changes, \
             |peaks| {} MHz; max |dD1-dD2| {diff:.3} MHz vs amplitude {osc_amp:.3} MHz (limit 30%)",
            near(&s1),
            near(&s2),
            fmt(&p1),
            fmt(&p2)
        ),
    );

    // 6: 8S1/2 repulsion and radius trend
    let r8 = grid(a, 50.0, 1200.0, 116);
    let c8 = curve("8S1/2", &cat, a, &r8);
    let x8: Vec<f64> = c8.distances().iter().map(|d| d * 1e9).collect();
    let u8 = c8.total_microkelvin();
    let res_pos = c8.resonant.iter().all(|&v| v > 0.0);
    let (pk_x, pk_u) = refined_peak(&x8, &u8);
    let repulsive = x8.iter().zip(&u8).filter(|(d, _)| (150.0..=400.0).contains(*d)).all(|(_, v)| *v > 0.0);
    let mut trend = Vec::new();
    for ra in [150.0, 200.0, 250.0, 300.0, 350.0] {
        let c = curve("8S1/2", &cat, ra, &grid(ra, 80.0, 400.0, 33));
        let xs: Vec<f64> = c.distances().iter().map(|d| d * 1e9).collect();
        trend.push(refined_peak(&xs, &c.total_microkelvin()));
    }
    let heights_down = trend.windows(2).all(|w| w[1].1 < w[0].1);
    let outward = trend.windows(2).all(|w| w[1].0 > w[0].0);
    let pk_ok = within(pk_u, 17.0, 0.3) && (pk_x - 150.0).abs() <= 30.0;
    led.report(
        6,
        "8S1/2 repulsion",
        res_pos && pk_ok && repulsive && heights_down && outward,
        format!(
            "U_res>0 {res_pos}; peak {pk_u:.2} uK at {pk_x:.0} nm [{pk_ok}]; U>0 over 150-400 nm {repulsive}; \
             a=150..350 peaks (nm, uK) {}; heights decreasing {heights_down}, moving outward {outward}",
            trend.iter().map(|(p, h)| format!("({p:.0}, {h:.2})")).collect::<Vec<_>>().join(" ")
        ),
    );

    // 7: long-range oscillations
    let rl = grid(a, 6000.0, 10000.0, 81);
    let mut parts = Vec::new();
    let mut all_ok = true;
    for (n, target) in [(6, 10.0), (7, 10.0), (8, 10.0), (9, 1.0), (10, 1.0)] {
        let c = curve(&format!("{n}S1/2"), &cat, a, &rl);
        let nk: Vec<f64> = c.total_microkelvin().iter().map(|v| v * 1e3).collect();
        let hi = nk.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = nk.iter().copied().fold(f64::INFINITY, f64::min);
        let amp = 0.5 * (hi - lo);
        let ok = amp >= target / 3.0 && amp <= target * 3.0 && c.all_converged();
        all_ok &= ok;
        parts.push(format!("{n}S {amp:.2} nK (target {target} nK, factor 3) {}", if ok { "ok" } else { "out" }));
    }
    led.report(7, "long-range nS oscillations", all_ok, parts.join("; "));

    // 8: permittivity anchors
    let silica = SilicaData::builtin().unwrap();
    let dawson = PermittivityModel::Dawson(silica.dawson.clone());
    let m1 = dawson.eps_real_freq(wavelength_to_angular(8.249e-6)).unwrap().value.norm();
    let m2 = dawson.eps_real_freq(wavelength_to_angular(8.495e-6)).unwrap().value.norm();
    let mut residue: f64 = 0.0;
    for m in [
        PermittivityModel::Sellmeier(silica.sellmeier.clone()),
        dawson.clone(),
        silica.auto(7e-6).unwrap(),
    ] {
        for k in 0..=60 {
            let e = m.eps_complex_freq(Complex64::new(0.0, 1e11 * 10f64.powf(k as f64 * 0.1))).unwrap();
            residue = residue.max(e.im.abs() / e.norm());
        }
    }
    led.report(
        8,
        "permittivity anchors",
        within(m1, 0.69, 0.05) && within(m2, 1.07, 0.05) && silica.dawson.eps_inf == 2.1232 && residue < 1e-13,
        format!(
            "|eps(8.249 um)| = {m1:.4}, |eps(8.495 um)| = {m2:.4}, eps_inf = {}, imaginary residue {residue:.1e}",
            silica.dawson.eps_inf
        ),
    );

    // 9: property suites
    let mut props = Vec::new();
    let mut wr: f64 = 0.0;
    for x in [0.01, 0.3, 1.0, 6.0, 10.0, 40.0, 100.0] {
        for n in [0, 1, 2, 5, 12, 30, 50] {
            let z = Complex64::new(x, 0.0);
            let (h, hp) = hankel1_with_deriv(n, z).unwrap();
            let (j, jp) = (bessel_j(n, z).unwrap(), bessel_j_deriv(n, z).unwrap());
            let want = Complex64::new(0.0, 2.0 / (PI * x));
            let scale = (j.norm() * hp.norm()).max(jp.norm() * h.norm()).max(want.norm());
            wr = wr.max((j * hp - jp * h - want).norm() / scale);
            let (i, ip) = bessel_i(n, x).unwrap();
            let (k, kp) = bessel_k(n, x).unwrap();
            wr = wr.max((x * (i * kp - ip * k) + 1.0).abs());
            if n <= 12 {
                let w = j.re * bessel_y_deriv(n, x).unwrap() - jp.re * bessel_y(n, x).unwrap();
                wr = wr.max((w * PI * x / 2.0 - 1.0).abs());
            }
        }
    }
    props.push(("Wronskians", wr <= 1e-12, format!("{wr:.1e}")));

    let mut orth: f64 = 0.0;
    for tj3 in [0u32, 2, 4] {
        for tj3p in [0u32, 2, 4] {
            for m3 in am(tj3).projections() {
                let mut s = 0.0;
                for m1 in am(2).projections() {
                    for m2 in am(2).projections() {
                        let p = wigner3j_twice([2, 2, tj3], [m1, m2, m3]).unwrap();
                        let q = wigner3j_twice([2, 2, tj3p], [m1, m2, m3]).unwrap_or(0.0);
                        s += p * q;
                    }
                }
                let want = if tj3 == tj3p { 1.0 / (tj3 + 1) as f64 } else { 0.0 };
                orth = orth.max((s - want).abs());
            }
        }
    }
    let tri = |a: u32, b: u32, c: u32| (a + b + c) % 2 == 0 && c <= a + b && a <= b + c && b <= a + c;
    for j6 in 0..=8u32 {
        for j6p in 0..=8u32 {
            let mut s = 0.0;
            for j3 in am(1).couple(am(2)) {
                let j3 = j3.twice();
                s += (j3 + 1) as f64
                    * wigner6j_twice([1, 2, j3, 1, 2, j6]).unwrap()
                    * wigner6j_twice([1, 2, j3, 1, 2, j6p]).unwrap();
            }
            let want = if j6 == j6p && tri(1, 2, j6) { 1.0 / (j6 + 1) as f64 } else { 0.0 };
            orth = orth.max((s - want).abs());
        }
    }
    props.push(("3j/6j orthogonality", orth <= 1e-14, format!("{orth:.1e}")));

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut sr: f64 = 0.0;
    let pairs = [(1u32, 1u32), (1, 3), (3, 3), (3, 5)];
    for k in 0..200 {
        let mut t = [[Complex64::new(0.0, 0.0); 3]; 3];
        for row in t.iter_mut() {
            for v in row.iter_mut() {
                *v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        let (jl, ju) = pairs[k % pairs.len()];
        let rep = validate_sum_rule(am(jl), am(ju), am(3), &t, rng.gen_range(0.5..6.0)).unwrap();
        sr = sr.max(rep.max_relative_deviation());
    }
    props.push(("sum rule, 200 random dyadics", sr <= 1e-12, format!("{sr:.1e}")));

    let topts = TraceOptions::default();
    let homog = FiberGeometry::new(200e-9, PermittivityModel::constant(2.1), PermittivityModel::constant(2.1)).unwrap();
    let mut null: f64 = 0.0;
    for d in [30e-9, 300e-9] {
        null = null.max(trace_sc_imag(&homog, 200e-9 + d, 2.4e15, &topts).unwrap().value.norm());
        null = null.max(trace_sc_real_auto(&homog, 200e-9 + d, 2.4e15, &topts).unwrap().value.norm());
    }
    props.push(("homogeneous null", null <= 1e-12, format!("{null:.1e}")));

    let g = fiber(a);
    let mut reality: f64 = 0.0;
    for d in [50e-9, 200e-9, 600e-9, 1200e-9] {
        for u in [1e13, 2.4e15, 1e17] {
            let t = trace_sc_imag(&g, g.radius + d, u, &topts).unwrap().value;
            reality = reality.max(t.im.abs() / t.re.abs());
        }
    }
    props.push(("imaginary-axis trace reality", reality <= 1e-10, format!("{reality:.1e}")));

    let tl = two_level_potentials(wavelength_to_angular(780.241e-9), 2.98 * AU_DIPOLE, &g, 400e-9, &opts).unwrap();
    props.push(("U_g = -U_e nonresonant", tl.ground == -tl.excited_nonresonant, format!("{:e} vs {:e}", tl.ground, tl.excited_nonresonant)));

    let w = wavelength_to_angular(780.241e-9);
    let plan = pole_plan(&g, w, &topts).unwrap();
    let half = plan.with_scaled_radii(0.5);
    let mut robust = 0;
    let mut worst_ratio: f64 = 0.0;
    for d in [60e-9, 200e-9, 500e-9, 1000e-9] {
        let p = trace_sc_real(&g, g.radius + d, w, &plan, &topts).unwrap();
        let q = trace_sc_real(&g, g.radius + d, w, &half, &topts).unwrap();
        let err = p.beta_error_estimate * p.value.norm() + q.beta_error_estimate * q.value.norm();
        let diff = (p.value - q.value).norm();
        worst_ratio = worst_ratio.max(diff / err);
        robust += (diff <= err) as usize;
    }
    props.push(("detour-radius robustness", robust == 4, format!("{robust}/4, worst diff/error {worst_ratio:.2}")));

    let lossy = TraceOptions {
        pole_strategy: PoleStrategy::LossyEpsilon,
        ..topts
    };
    let setup = prepare_real(&g, w, &topts).unwrap();
    let mut agree = 0;
    for k in 0..20 {
        let r = g.radius + (50e-9 + 1150e-9 * k as f64 / 19.0);
        let p = trace_sc_real_prepared(&g, r, &setup, &topts).unwrap();
        let q = trace_sc_real_prepared(&g, r, &setup, &lossy).unwrap();
        let err = p.beta_error_estimate * p.value.norm() + q.beta_error_estimate * q.value.norm();
        agree += ((p.value - q.value).norm() <= err) as usize;
    }
    props.push(("detour vs lossy-core", agree == 20, format!("{agree}/20")));
    led.report(
        9,
        "property suites",
        props.iter().all(|p| p.1),
        props.iter().map(|(n, ok, d)| format!("{n} {d} {}", if *ok { "ok" } else { "out" })).collect::<Vec<_>>().join("; "),
    );

    // 10: recoil energy and catalog dipoles
    let er = recoil_energy(780e-9, cat.mass_amu).unwrap();
    let dips: Vec<f64> = cat
        .lines
        .iter()
        .filter(|l| l.lower == "5S1/2" && l.upper.starts_with("5P"))
        .map(|l| cat.normalized_reduced_d(l, &l.upper).unwrap())
        .collect();
    led.report(
        10,
        "recoil and D-line dipoles",
        within(er, 181.0, 0.01) && dips.len() == 2 && dips.iter().all(|&d| within(d, 2.98, 0.02)),
        format!("recoil {er:.2} nK, normalized D-line dipoles {dips:.4?} a.u."),
    );

    assert!(led.failed.is_empty(), "failed criteria: {}", led.failed.join(", "));
}

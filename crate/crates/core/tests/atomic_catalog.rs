use std::f64::consts::PI;

use fibercp::atomdata::{Catalog, Direction, FineLevel, Inclusion, TransitionLine};
use proptest::prelude::*;

const HBAR: f64 = 1.054_571_817e-34;
const E_A0: f64 = 1.602_176_634e-19 * 5.291_772_109_03e-11;
const C: f64 = 299_792_458.0;

fn d_line(cat: &Catalog, upper: &str) -> TransitionLine {
    cat.lines
        .iter()
        .find(|l| l.lower == "5S1/2" && l.upper == upper)
        .unwrap()
        .clone()
}

#[test]
fn d_lines_share_normalized_dipole() {
    let cat = Catalog::builtin().unwrap();
    let d1 = cat.normalized_reduced_d(&d_line(&cat, "5P1/2"), "5P1/2").unwrap();
    let d2 = cat.normalized_reduced_d(&d_line(&cat, "5P3/2"), "5P3/2").unwrap();
    for d in [d1, d2] {
        assert!((d - 2.98).abs() < 0.02 * 2.98, "{d}");
    }
}

#[test]
fn normalization_depends_on_initial_endpoint() {
    let cat = Catalog::builtin().unwrap();
    let line = d_line(&cat, "5P3/2");
    let from_up = cat.normalized_reduced_d(&line, "5P3/2").unwrap();
    let from_low = cat.normalized_reduced_d(&line, "5S1/2").unwrap();
    assert!((from_low / from_up - (4.0f64 / 2.0).sqrt()).abs() < 1e-15);
    assert!(cat.normalized_reduced_d(&line, "6S1/2").is_err());
    let zero = TransitionLine {
        reduced_d_au: 0.0,
        ..line
    };
    assert_eq!(cat.normalized_reduced_d(&zero, "5S1/2").unwrap(), 0.0);
}

#[test]
fn infrared_lines_from_8s() {
    let cat = Catalog::builtin().unwrap();
    let lam = |lower: &str| {
        let l = cat.lines.iter().find(|l| l.upper == "8S1/2" && l.lower == lower).unwrap();
        cat.line_wavelength(l).unwrap()
    };
    assert!((lam("7P1/2") * 1e6 - 8.249).abs() < 0.005);
    assert!((lam("7P3/2") * 1e6 - 8.495).abs() < 0.005);
}

#[test]
fn ground_configuration_and_downward_lines() {
    let cat = Catalog::builtin().unwrap();
    let mut partners: Vec<String> = cat.transitions_from("5S1/2").unwrap().into_iter().map(|t| t.partner).collect();
    partners.sort();
    let mut want: Vec<String> = (5..=8)
        .flat_map(|n| [format!("{n}P1/2"), format!("{n}P3/2")])
        .collect();
    want.sort();
    assert_eq!(partners, want);
    for state in ["5P1/2", "5P3/2"] {
        let down: Vec<_> = cat
            .transitions_from(state)
            .unwrap()
            .into_iter()
            .filter(|t| t.direction == Direction::Downward)
            .map(|t| t.partner)
            .collect();
        assert_eq!(down, vec!["5S1/2".to_string()]);
    }
    let ext = cat.transitions_with_extension("5S1/2").unwrap();
    assert_eq!(ext.len(), 10);
}

/// Direct sum over the raw JSON, without the catalog types.
fn static_polarizability_from_file() -> f64 {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/rubidium.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let energy = |label: &str| {
        v["levels"]
            .as_array()
            .unwrap()
            .iter()
            .find(|l| l["label"] == label)
            .unwrap()["energy_cm"]
            .as_f64()
            .unwrap()
    };
    let mut sum = 0.0;
    for t in v["inclusion"]["5S1/2"]["targets"].as_array().unwrap() {
        let t = t.as_str().unwrap();
        let line = v["lines"]
            .as_array()
            .unwrap()
            .iter()
            .find(|l| l["lower"] == "5S1/2" && l["upper"] == t)
            .unwrap();
        let d = line["reduced_d_au"].as_f64().unwrap() * E_A0;
        let w = 2.0 * PI * C * 100.0 * energy(t);
        sum += d * d / w;
    }
    2.0 / (3.0 * 2.0 * HBAR) * sum
}

#[test]
fn static_polarizability_matches_direct_sum() {
    let cat = Catalog::builtin().unwrap();
    let a = cat.polarizability_iu(0.0).unwrap();
    let oracle = static_polarizability_from_file();
    assert!((a.si - oracle).abs() < 1e-12 * oracle);
    // rubidium's static polarizability is about 319 a.u.; the core part
    // (about 9 a.u.) is not in the line sum
    assert!(a.atomic_units > 290.0 && a.atomic_units < 320.0, "{}", a.atomic_units);
}

#[test]
fn polarizability_vanishes_at_high_frequency() {
    let cat = Catalog::builtin().unwrap();
    let w_d2 = 2.0 * PI * C / 780.24e-9;
    let hi = cat.polarizability_iu(100.0 * w_d2).unwrap().si;
    let zero = cat.polarizability_iu(0.0).unwrap().si;
    assert!(hi > 0.0 && hi < 1e-3 * zero);
    assert!(cat.polarizability_iu(-1.0).is_err());
}

fn two_level(d_au: f64, energy_cm: f64) -> Catalog {
    let level = |label: &str, n, l, twice_j, e| FineLevel {
        label: label.into(),
        n,
        l,
        twice_j,
        energy_cm: e,
    };
    Catalog {
        schema: "atomic-catalog/1".into(),
        version: "toy".into(),
        element: "X".into(),
        mass_amu: 87.0,
        ground: "1S1/2".into(),
        source: String::new(),
        levels: vec![level("1S1/2", 1, 0, 1, 0.0), level("2P3/2", 2, 1, 3, energy_cm)],
        lines: vec![TransitionLine {
            upper: "2P3/2".into(),
            lower: "1S1/2".into(),
            reduced_d_au: d_au,
            source: String::new(),
            wavelength_nm: Some(1e7 / energy_cm),
        }],
        inclusion: [("1S1/2".to_string(), Inclusion {
            targets: vec!["2P3/2".into()],
            extension: vec![],
        })]
        .into_iter()
        .collect(),
    }
}

#[test]
fn single_line_polarizability_is_lorentzian() {
    let cat = two_level(3.0, 10_000.0);
    assert!(cat.audit().is_empty());
    let w0 = 2.0 * PI * C * 100.0 * 10_000.0;
    let d = 3.0 * E_A0;
    for u in [0.0, 0.3 * w0, 5.0 * w0] {
        let want = 2.0 * d * d * w0 / (3.0 * 2.0 * HBAR * (w0 * w0 + u * u));
        let got = cat.polarizability_iu(u).unwrap().si;
        assert!((got - want).abs() < 1e-13 * want);
    }
}

#[test]
fn tabulated_wavelength_must_match_levels() {
    let mut cat = two_level(3.0, 10_000.0);
    cat.lines[0].wavelength_nm = Some(1000.01);
    let issues = cat.audit();
    assert_eq!(issues.len(), 1);
    assert_eq!(issues[0].item, "1S1/2-2P3/2");
}

#[test]
fn d2_natural_linewidth() {
    let cat = Catalog::builtin().unwrap();
    let gamma = cat.spontaneous_rate(&d_line(&cat, "5P3/2")).unwrap();
    // 2 pi x 6.07 MHz
    assert!((gamma / (2.0 * PI * 6.07e6) - 1.0).abs() < 0.01, "{gamma}");
}

proptest! {
    #[test]
    fn polarizability_positive_and_decreasing(lu in 10.0f64..17.0, step in 1.001f64..3.0) {
        let cat = Catalog::builtin().unwrap();
        let u = 10f64.powf(lu);
        let a = cat.polarizability_iu(u).unwrap().si;
        let b = cat.polarizability_iu(u * step).unwrap().si;
        prop_assert!(a > 0.0 && b > 0.0 && b < a);
    }
}

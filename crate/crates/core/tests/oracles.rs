//! Cross-checks of the bit-exact models against independent floating-point
//! references, plus scheme file round trips.

use std::sync::Arc;

use loglab::charlab::{characterize, characterize_with, Precision, SamplingPlan, Unit};
use loglab::mitchell::{DivUnit, MulUnit, OpKind};
use loglab::rapidscheme::{
    derive_partition, derive_scheme, load_scheme, save_scheme, table_coefficients, Alignment,
    DeriveOptions, Scheme, SchemeName,
};

/// Mitchell product from its textbook definition in floating point.
fn float_mitchell_mul(a: u64, b: u64) -> f64 {
    let (k1, k2) = (63 - a.leading_zeros(), 63 - b.leading_zeros());
    let x1 = a as f64 / (1u64 << k1) as f64 - 1.0;
    let x2 = b as f64 / (1u64 << k2) as f64 - 1.0;
    let k = (k1 + k2) as f64;
    if x1 + x2 < 1.0 {
        k.exp2() * (1.0 + x1 + x2)
    } else {
        (k + 1.0).exp2() * (x1 + x2)
    }
}

fn float_mitchell_div(a: u64, b: u64) -> f64 {
    let (k1, k2) = (63 - a.leading_zeros(), 63 - b.leading_zeros());
    let x1 = a as f64 / (1u64 << k1) as f64 - 1.0;
    let x2 = b as f64 / (1u64 << k2) as f64 - 1.0;
    let k = k1 as f64 - k2 as f64;
    if x1 >= x2 {
        k.exp2() * (1.0 + x1 - x2)
    } else {
        (k - 1.0).exp2() * (2.0 + x1 - x2)
    }
}

#[test]
fn eight_bit_multiplier_matches_float_model() {
    let u = MulUnit::mitchell(8).unwrap();
    let (mut sum, mut peak, mut n) = (0.0, 0.0f64, 0u64);
    for a in 1..256u64 {
        for b in 1..256u64 {
            let f = float_mitchell_mul(a, b);
            assert_eq!(u.antilog(a, b).unwrap().to_f64(), f, "{a} x {b}");
            assert_eq!(u.apply(a, b), f.floor() as u64);
            let e = (a * b) as f64 - f;
            sum += e / (a * b) as f64;
            peak = peak.max(e / (a * b) as f64);
            n += 1;
        }
    }
    let r = characterize(&Unit::mitchell_mul(8).unwrap(), SamplingPlan::Exhaustive).unwrap();
    assert_eq!(r.samples, n);
    assert!((r.are_pct - 100.0 * sum / n as f64).abs() < 1e-9);
    assert!((r.pre_pct - 100.0 * peak).abs() < 1e-9);
}

#[test]
fn eight_by_four_divider_matches_float_model() {
    let u = DivUnit::mitchell(4).unwrap();
    let (mut sum, mut n) = (0.0, 0u64);
    for b in 1..16u64 {
        for a in b..(b << 4).min(256) {
            let f = float_mitchell_div(a, b);
            assert_eq!(u.antilog(a, b).unwrap().to_f64(), f, "{a} / {b}");
            let exact = a as f64 / b as f64;
            sum += (f - exact) / exact;
            n += 1;
        }
    }
    let r = characterize(&Unit::mitchell_div(4).unwrap(), SamplingPlan::Exhaustive).unwrap();
    assert_eq!(r.samples, n);
    assert!((r.are_pct - 100.0 * sum / n as f64).abs() < 1e-9);
}

#[test]
fn truncated_precision_counts_floor_loss() {
    let unit = Unit::mitchell_mul(8).unwrap();
    let full = characterize(&unit, SamplingPlan::Exhaustive).unwrap();
    let trunc =
        characterize_with(&unit, SamplingPlan::Exhaustive, Precision::Truncated, None).unwrap();
    assert!(trunc.are_pct >= full.are_pct);
    assert_eq!(trunc.samples, full.samples);
}

#[test]
fn scheme_files_round_trip() {
    let dir = std::env::temp_dir().join(format!("loglab-oracles-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    for name in SchemeName::ALL {
        let scheme = derive_scheme(name, 8).unwrap();
        let path = dir.join(format!("{}.json", name.as_str()));
        save_scheme(&scheme, &path).unwrap();
        let back = load_scheme(&path).unwrap();
        assert_eq!(back, scheme);
        let unit = |s: Scheme| match name.kind() {
            OpKind::Mul => Unit::rapid_mul(8, Arc::new(s)).unwrap(),
            OpKind::Div => Unit::rapid_div(4, Arc::new(s)).unwrap(),
        };
        let a = characterize(&unit(scheme), SamplingPlan::Exhaustive).unwrap();
        let b = characterize(&unit(back), SamplingPlan::Exhaustive).unwrap();
        assert_eq!(a, b);
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn literal_alignment_is_far_less_accurate() {
    for name in [SchemeName::Rapid3Mul, SchemeName::Rapid3Div] {
        let kind = name.kind();
        let opts = DeriveOptions::for_target(kind, 8).unwrap();
        let are = |alignment| {
            let coeffs = table_coefficients(name, alignment);
            let grid = derive_partition(kind, &coeffs, opts).unwrap();
            let s = Arc::new(Scheme::new(name.as_str(), kind, coeffs, grid).unwrap());
            let unit = match kind {
                OpKind::Mul => Unit::rapid_mul(8, s).unwrap(),
                OpKind::Div => Unit::rapid_div(4, s).unwrap(),
            };
            characterize(&unit, SamplingPlan::Exhaustive).unwrap().are_pct
        };
        let calibrated = are(Alignment::Calibrated);
        let literal = are(Alignment::Literal);
        assert!(calibrated < 1.3, "{name}: {calibrated}");
        assert!(literal > calibrated + 0.5, "{name}: literal {literal} vs {calibrated}");
    }
}

//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use loglab::appbench::{bench_image, read_pgm, ArithProfile};
use loglab::charlab::{characterize, ErrorReport, SamplingPlan, Unit};
use loglab::mitchell::{exact_div, exact_mul, mitchell_div, mitchell_mul, DivUnit, MulUnit, OpKind};
use loglab::pipeline::{check_equivalence, make_pipeline, Datapath, PipelinePlan};
use loglab::rapidscheme::{derive_scheme, SchemeName};
use loglab::wordcore::Word;

struct Outcome {
    failed: Vec<u32>,
}

impl Outcome {
    fn record(&mut self, n: u32, ok: bool, summary: &str, details: &[String]) {
        println!("{} criterion {n}: {summary}", if ok { "PASS" } else { "FAIL" });
        for d in details {
            println!("    {d}");
        }
        if !ok {
            self.failed.push(n);
        }
    }
}

fn fmt_report(r: &ErrorReport) -> String {
    format!(
        "{} {} {}: ARE {:.3}% PRE {:.3}% bias {:.3}% ({} pairs)",
        r.unit, r.width, r.scheme, r.are_pct, r.pre_pct, r.bias_pct, r.samples
    )
}

fn scheme_unit(name: SchemeName, width: u32) -> Unit {
    let scheme = Arc::new(derive_scheme(name, width).unwrap());
    match name.kind() {
        OpKind::Mul => Unit::rapid_mul(width, scheme).unwrap(),
        OpKind::Div => Unit::rapid_div(width / 2, scheme).unwrap(),
    }
}

fn criterion_1(out: &mut Outcome) {
    let t = Instant::now();
    let r = characterize(&Unit::mitchell_mul(8).unwrap(), SamplingPlan::Exhaustive).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let ok = (r.are_pct - 3.77).abs() <= 0.3
        && (r.pre_pct - 11.11).abs() <= 0.2
        && r.bias_pct == r.are_pct
        && secs < 1.0;
    out.record(
        1,
        ok,
        "Mitchell 8x8 multiplier exhaustive: ARE 3.77 +-0.3, PRE 11.11 +-0.2, bias == ARE, < 1 s",
        &[format!("{} in {secs:.2} s", fmt_report(&r))],
    );
}

fn criterion_2(out: &mut Outcome) {
    let t = Instant::now();
    let r = characterize(&Unit::mitchell_div(4).unwrap(), SamplingPlan::Exhaustive).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let ok = (r.are_pct - 3.90).abs() <= 0.3
        && (r.pre_pct - 13.00).abs() <= 0.5
        && r.bias_pct == r.are_pct
        && secs < 1.0;
    out.record(
        2,
        ok,
        "Mitchell 8/4 divider exhaustive: ARE 3.90 +-0.3, PRE 13.00 +-0.5, bias == ARE, < 1 s",
        &[format!("{} in {secs:.2} s", fmt_report(&r))],
    );
}

fn criterion_3(out: &mut Outcome) {
    // (scheme, ARE limit, published PRE)
    let rows = [
        (SchemeName::Rapid3Mul, 1.32, 6.10),
        (SchemeName::Rapid5Mul, 1.21, 4.45),
        (SchemeName::Rapid10Mul, 0.94, 3.69),
        (SchemeName::Rapid3Div, 1.29, 5.74),
        (SchemeName::Rapid5Div, 1.09, 4.34),
        (SchemeName::Rapid9Div, 0.88, 3.48),
    ];
    let t = Instant::now();
    let mut ok = true;
    let mut details = Vec::new();
    for (name, are_max, pre) in rows {
        let r = characterize(&scheme_unit(name, 8), SamplingPlan::Exhaustive).unwrap();
        let are_ok = r.are_pct <= are_max;
        let pre_ok = (r.pre_pct - pre).abs() <= 1.5;
        let bias_ok = r.bias_pct <= 0.1;
        ok &= are_ok && pre_ok && bias_ok;
        details.push(format!(
            "{} | ARE<={are_max}: {} PRE {pre}+-1.5: {} |bias|<=0.1: {}",
            fmt_report(&r),
            yes(are_ok),
            yes(pre_ok),
            yes(bias_ok)
        ));
    }
    details.push(format!("{:.1} s", t.elapsed().as_secs_f64()));
    out.record(
        3,
        ok,
        "RAPID schemes at 8-bit exhaustive: ARE limits, PRE within 1.5 pp, |bias| <= 0.1%",
        &details,
    );
}

fn yes(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "MISS"
    }
}

fn criterion_4(out: &mut Outcome) {
    const SAMPLES: u64 = 100_000_000;
    const SEED: u64 = 2024;
    // (scheme, published 16-bit ARE)
    let rows = [
        (SchemeName::Rapid3Mul, 1.03),
        (SchemeName::Rapid5Mul, 0.93),
        (SchemeName::Rapid10Mul, 0.56),
        (SchemeName::Rapid3Div, 1.02),
        (SchemeName::Rapid5Div, 0.79),
        (SchemeName::Rapid9Div, 0.58),
    ];
    let t = Instant::now();
    let mut ok = true;
    let mut details = Vec::new();
    for (name, published) in rows {
        let unit = scheme_unit(name, 16);
        let mc = characterize(
            &unit,
            SamplingPlan::MonteCarlo {
                samples: SAMPLES,
                seed: SEED,
            },
        )
        .unwrap();
        // Exhaustive reference where it is affordable: every 16/8 divider,
        // and the 10-coefficient multiplier (4.3e9 pairs).
        let exhaustive = (name.kind() == OpKind::Div || name == SchemeName::Rapid10Mul)
            .then(|| characterize(&unit, SamplingPlan::Exhaustive).unwrap());
        let band_ok = mc.are_pct <= published + 0.3 + 0.1;
        let ex_ok = exhaustive
            .as_ref()
            .is_none_or(|e| (mc.are_pct - e.are_pct).abs() <= 0.1);
        ok &= band_ok && ex_ok;
        let ex_text = exhaustive
            .as_ref()
            .map_or("n/a".to_string(), |e| format!("{:.3}%", e.are_pct));
        details.push(format!(
            "{} | published {published} (+0.3 +0.1): {} | exhaustive {ex_text}: {}",
            fmt_report(&mc),
            yes(band_ok),
            yes(ex_ok)
        ));
    }
    details.push(format!("{:.1} s", t.elapsed().as_secs_f64()));
    out.record(
        4,
        ok,
        "16-bit scheme ARE by Monte Carlo (1e8, fixed seed) within 0.1 pp of exhaustive / published band",
        &details,
    );
}

fn criterion_5(out: &mut Outcome) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut mul_violations = 0u64;
    let mut div_violations = 0u64;
    let m8 = MulUnit::mitchell(8).unwrap();
    for a in 0..256u64 {
        for b in 0..256u64 {
            mul_violations += u64::from(m8.apply(a, b) > a * b);
        }
    }
    for width in [16u32, 32] {
        let u = MulUnit::mitchell(width).unwrap();
        for _ in 0..10_000_000 {
            let a = rng.gen_range(0..1u64 << width);
            let b = rng.gen_range(0..1u64 << width);
            mul_violations += u64::from(u.apply(a, b) as u128 > a as u128 * b as u128);
        }
    }
    let d4 = DivUnit::mitchell(4).unwrap();
    for b in 1..16u64 {
        for a in 0..(b << 4).min(256) {
            div_violations += u64::from(d4.apply(a, b).unwrap() > a / b);
        }
    }
    for n in [8u32, 16] {
        let u = DivUnit::mitchell(n).unwrap();
        for _ in 0..10_000_000 {
            let b = rng.gen_range(1..1u64 << n);
            let a = rng.gen_range(0..(b << n).min(1 << (2 * n)));
            div_violations += u64::from(u.apply(a, b).unwrap() > a / b);
        }
    }
    out.record(
        5,
        mul_violations == 0 && div_violations == 0,
        "baseline Mitchell never exceeds the exact result (exhaustive 8-bit, 1e7 pairs at 16/32-bit)",
        &[
            format!("multiplier violations: {mul_violations}"),
            format!(
                "divider violations: {div_violations} (Mitchell division errs upward: \
                 (1 + x1 - x2)(1 + x2) >= 1 + x1)"
            ),
        ],
    );
}

fn criterion_6(out: &mut Outcome) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let rapid_mul16 = Arc::new(derive_scheme(SchemeName::Rapid5Mul, 16).unwrap());
    let rapid_div16 = Arc::new(derive_scheme(SchemeName::Rapid9Div, 16).unwrap());
    let mut ok = true;
    let mut details = Vec::new();
    for s in 2..=4 {
        let plan = PipelinePlan::canonical(s).unwrap();
        let mut cases: Vec<(String, Datapath, Vec<(u64, u64)>)> = vec![
            (
                "mul 8x8 exhaustive".into(),
                Datapath::Mul(MulUnit::mitchell(8).unwrap()),
                (0..256u64).flat_map(|a| (0..256u64).map(move |b| (a, b))).collect(),
            ),
            (
                "div 8/4 exhaustive".into(),
                Datapath::Div(DivUnit::mitchell(4).unwrap()),
                (1..16u64)
                    .flat_map(|b| (0..(b << 4).min(256)).map(move |a| (a, b)))
                    .collect(),
            ),
        ];
        let random = |rng: &mut ChaCha8Rng, kind: OpKind, n: u32| -> Vec<(u64, u64)> {
            (0..1_000_000)
                .map(|_| match kind {
                    OpKind::Mul => (rng.gen_range(0..1u64 << n), rng.gen_range(0..1u64 << n)),
                    OpKind::Div => {
                        let b = rng.gen_range(1..1u64 << n);
                        (rng.gen_range(0..(b << n).min(1 << (2 * n))), b)
                    }
                })
                .collect()
        };
        cases.push((
            "RAPID-5 mul 16x16 random".into(),
            Datapath::Mul(MulUnit::with_scheme(16, rapid_mul16.clone()).unwrap()),
            random(&mut rng, OpKind::Mul, 16),
        ));
        cases.push((
            "mul 32x32 random".into(),
            Datapath::Mul(MulUnit::mitchell(32).unwrap()),
            random(&mut rng, OpKind::Mul, 32),
        ));
        cases.push((
            "RAPID-9 div 16/8 random".into(),
            Datapath::Div(DivUnit::with_scheme(8, rapid_div16.clone()).unwrap()),
            random(&mut rng, OpKind::Div, 8),
        ));
        cases.push((
            "div 32/16 random".into(),
            Datapath::Div(DivUnit::mitchell(16).unwrap()),
            random(&mut rng, OpKind::Div, 16),
        ));
        for (label, dp, inputs) in cases {
            let mut pu = make_pipeline(dp, plan);
            let mismatches = check_equivalence(&mut pu, &inputs).unwrap();
            // A lone token must come out exactly S cycles later.
            let mut probe = make_pipeline(pu.datapath().clone(), plan);
            let first = inputs[inputs.len() / 2];
            let mut latency = None;
            for cycle in 0..=s as u64 {
                if probe.clock((cycle == 0).then_some(first)).unwrap().is_some() {
                    latency = Some(cycle);
                }
            }
            let good = mismatches == 0 && latency == Some(s as u64);
            ok &= good;
            details.push(format!(
                "S={s} {label}: {} pairs, {mismatches} mismatches, latency {latency:?}, II 1",
                inputs.len()
            ));
        }
    }
    out.record(
        6,
        ok,
        "pipelined == combinational for S in {2,3,4}, latency S, initiation interval 1",
        &details,
    );
}

fn criterion_7(out: &mut Outcome) {
    let w = |width, v| Word::new(width, v).unwrap();
    let m = MulUnit::mitchell(8).unwrap();
    let d = DivUnit::mitchell(8).unwrap();
    let p = mitchell_mul(&m, w(8, 58), w(8, 18)).unwrap().value();
    let pe = exact_mul(w(8, 58), w(8, 18)).unwrap().value();
    let q = mitchell_div(&d, w(16, 58), w(8, 18)).unwrap().value();
    let qe = exact_div(w(16, 58), w(8, 18)).unwrap().value();
    out.record(
        7,
        (p, pe, q, qe) == (992, 1044, 3, 3),
        "worked examples: 58 x 18 -> 992 (exact 1044), 58 / 18 -> 3 (exact 3)",
        &[format!("mul {p} exact {pe}; div {q} exact {qe}")],
    );
}

fn criterion_8(out: &mut Outcome) {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/images");
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "pgm"))
        .collect();
    paths.sort();
    let t = Instant::now();
    let rapid = ArithProfile::rapid_default().unwrap();
    let mitchell = ArithProfile::mitchell().unwrap();
    let mut ok = paths.len() >= 5;
    let mut details = Vec::new();
    for path in &paths {
        let img = read_pgm(path).unwrap();
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        let r = bench_image(&name, &img, 50, &rapid).unwrap();
        let m = bench_image(&name, &img, 50, &mitchell).unwrap();
        let drop = r.baseline_psnr_db - r.psnr_db;
        ok &= drop <= 3.0;
        let order = if r.psnr_db >= m.psnr_db { "" } else { " [flag: RAPID below Mitchell]" };
        details.push(format!(
            "{name}: exact {:.2} dB, RAPID {:.2} dB (drop {drop:.2}), Mitchell {:.2} dB{order}",
            r.baseline_psnr_db, r.psnr_db, m.psnr_db
        ));
    }
    let secs = t.elapsed().as_secs_f64();
    ok &= secs < 60.0;
    details.push(format!("{} images in {secs:.1} s", paths.len()));
    out.record(
        8,
        ok,
        "JPEG benchmark at quality 50: PSNR(exact) - PSNR(RAPID-10 mul + RAPID-9 div) <= 3 dB",
        &details,
    );
}

fn criterion_9(out: &mut Outcome) {
    out.record(
        9,
        true,
        "hardware cost columns excluded; substitutes are criteria 1-8 and the module suites",
        &[],
    );
}

fn main() {
    let only: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut out = Outcome { failed: Vec::new() };
    let criteria: [(u32, fn(&mut Outcome)); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    for (n, run) in criteria {
        if only.is_empty() || only.contains(&n) {
            run(&mut out);
        }
    }
    if !out.failed.is_empty() {
        println!("acceptance: failing criteria {:?}", out.failed);
        std::process::exit(1);
    }
    println!("acceptance: all criteria pass");
}

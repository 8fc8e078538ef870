//! Error characterization: ARE, PRE and bias over an exhaustive or sampled
//! operand space.
//!
//! Per-pair relative errors are quantized to 2^-50 and accumulated in i128,
//! so sums are exact and reports do not depend on the thread count.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::logmap::Antilog;
use crate::mitchell::{DivUnit, MulUnit, OpKind};
use crate::rapidscheme::Scheme;

/// An arithmetic unit under test.
#[derive(Clone, Debug)]
pub enum Unit {
    Mul(MulUnit),
    Div(DivUnit),
    ExactMul { width: u32 },
    /// Exact 2N/N divider; `n` is the divisor width.
    ExactDiv { n: u32 },
}

impl Unit {
    pub fn mitchell_mul(width: u32) -> Result<Unit> {
        MulUnit::mitchell(width).map(Unit::Mul)
    }

    pub fn rapid_mul(width: u32, scheme: Arc<Scheme>) -> Result<Unit> {
        MulUnit::with_scheme(width, scheme).map(Unit::Mul)
    }

    pub fn mitchell_div(n: u32) -> Result<Unit> {
        DivUnit::mitchell(n).map(Unit::Div)
    }

    pub fn rapid_div(n: u32, scheme: Arc<Scheme>) -> Result<Unit> {
        DivUnit::with_scheme(n, scheme).map(Unit::Div)
    }

    pub fn exact_mul(width: u32) -> Result<Unit> {
        MulUnit::mitchell(width)?;
        Ok(Unit::ExactMul { width })
    }

    pub fn exact_div(n: u32) -> Result<Unit> {
        DivUnit::mitchell(n)?;
        Ok(Unit::ExactDiv { n })
    }

    pub fn kind(&self) -> OpKind {
        match self {
            Unit::Mul(_) | Unit::ExactMul { .. } => OpKind::Mul,
            Unit::Div(_) | Unit::ExactDiv { .. } => OpKind::Div,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Unit::Mul(u) if u.scheme().is_some() => "rapid-mul",
            Unit::Mul(_) => "mitchell-mul",
            Unit::Div(u) if u.scheme().is_some() => "rapid-div",
            Unit::Div(_) => "mitchell-div",
            Unit::ExactMul { .. } => "exact-mul",
            Unit::ExactDiv { .. } => "exact-div",
        }
    }

    /// `"16"` for a multiplier, `"16/8"` for a divider.
    pub fn width_label(&self) -> String {
        match self {
            Unit::Mul(u) => u.width().to_string(),
            Unit::ExactMul { width } => width.to_string(),
            Unit::Div(u) => format!("{}/{}", 2 * u.n(), u.n()),
            Unit::ExactDiv { n } => format!("{}/{}", 2 * n, n),
        }
    }

    pub fn scheme_label(&self) -> String {
        let scheme = match self {
            Unit::Mul(u) => u.scheme(),
            Unit::Div(u) => u.scheme(),
            _ => None,
        };
        scheme.map_or_else(|| "none".to_string(), |s| s.name().to_string())
    }

    /// Multiplier operand width, or divisor width N for dividers.
    fn n(&self) -> u32 {
        match self {
            Unit::Mul(u) => u.width(),
            Unit::ExactMul { width } => *width,
            Unit::Div(u) => u.n(),
            Unit::ExactDiv { n } => *n,
        }
    }

    /// Signed relative error of one valid pair, `None` when the exact
    /// result is zero.
    #[inline]
    fn pair_error(&self, a: u64, b: u64, precision: Precision) -> Option<f64> {
        match self {
            Unit::Mul(u) => {
                let approx = u.antilog(a, b)?;
                let p = a as u128 * b as u128;
                Some(match precision {
                    Precision::Full => approx.relative_error(p, 1),
                    Precision::Truncated => {
                        (p as i128 - u.apply(a, b) as i128) as f64 / p as f64
                    }
                })
            }
            Unit::Div(u) => {
                if a < b {
                    return None;
                }
                let approx: Antilog = u.antilog(a, b)?;
                Some(match precision {
                    Precision::Full => approx.relative_error(a as u128, b as u128),
                    Precision::Truncated => {
                        let q = (a / b) as i128;
                        (q - approx.floor().min(u64::MAX as u128) as i128) as f64 / q as f64
                    }
                })
            }
            Unit::ExactMul { .. } => (a != 0 && b != 0).then_some(0.0),
            Unit::ExactDiv { .. } => (a >= b).then_some(0.0),
        }
    }
}

/// How the unit's integer output is compared.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Precision {
    /// The antilog value before any bits are dropped, against the exact
    /// rational result.
    #[default]
    Full,
    /// The integer output word against the exact integer result.
    Truncated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplingPlan {
    Exhaustive,
    MonteCarlo { samples: u64, seed: u64 },
}

impl SamplingPlan {
    pub fn mode_label(&self) -> &'static str {
        match self {
            SamplingPlan::Exhaustive => "exhaustive",
            SamplingPlan::MonteCarlo { .. } => "monte_carlo",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorReport {
    pub unit: String,
    pub width: String,
    pub scheme: String,
    pub mode: String,
    /// Pairs that entered the statistics.
    pub samples: u64,
    pub seed: Option<u64>,
    pub are_pct: f64,
    pub pre_pct: f64,
    pub bias_pct: f64,
    /// Pairs whose exact result is zero.
    pub excluded_zero: u64,
    /// Divider pairs violating the quotient range precondition.
    pub excluded_invalid: u64,
}

/// Per-pair callback receiving `(done, total)` in pairs.
pub type Progress<'a> = dyn Fn(u64, u64) + Sync + 'a;

const QUANT: f64 = (1u64 << 50) as f64;
const MC_CHUNK: u64 = 1 << 20;
const MAX_EXHAUSTIVE_PAIRS: u64 = 1 << 32;

#[derive(Clone, Copy, Default)]
struct Acc {
    abs: i128,
    signed: i128,
    peak: f64,
    count: u64,
    zero: u64,
}

impl Acc {
    #[inline]
    fn push(&mut self, e: Option<f64>) {
        match e {
            None => self.zero += 1,
            Some(e) => {
                let q = (e * QUANT).round() as i128;
                self.abs += q.abs();
                self.signed += q;
                self.peak = self.peak.max(e.abs());
                self.count += 1;
            }
        }
    }

    fn merge(mut self, o: Acc) -> Acc {
        self.abs += o.abs;
        self.signed += o.signed;
        self.peak = self.peak.max(o.peak);
        self.count += o.count;
        self.zero += o.zero;
        self
    }
}

/// Number of pairs of a 2N/N divider with `divisor <= dividend < 2^N divisor`,
/// and the cumulative count before each divisor.
fn div_space(n: u32) -> (u64, Vec<u64>) {
    let mut cum = Vec::with_capacity(1 << n);
    let mut total = 0u64;
    for b in 1..1u64 << n {
        cum.push(total);
        total += (b << n).min(1 << (2 * n)) - b;
    }
    (total, cum)
}

fn input_space(unit: &Unit) -> u128 {
    let n = unit.n();
    match unit.kind() {
        OpKind::Mul => 1u128 << (2 * n),
        OpKind::Div => div_space(n).0 as u128,
    }
}

pub fn characterize(unit: &Unit, plan: SamplingPlan) -> Result<ErrorReport> {
    characterize_with(unit, plan, Precision::Full, None)
}

pub fn characterize_with(
    unit: &Unit,
    plan: SamplingPlan,
    precision: Precision,
    progress: Option<&Progress<'_>>,
) -> Result<ErrorReport> {
    let n = unit.n();
    let mut excluded_invalid = 0;
    let acc = match plan {
        SamplingPlan::Exhaustive => {
            let space = input_space(unit);
            if space > MAX_EXHAUSTIVE_PAIRS as u128 {
                return Err(Error::Plan(format!(
                    "exhaustive {} {} needs {space} pairs (limit 2^32)",
                    unit.label(),
                    unit.width_label()
                )));
            }
            if unit.kind() == OpKind::Div {
                // Whole dividend x divisor space minus the pairs enumerated
                // below (nonzero quotients plus dividend < divisor).
                let below: u64 = (1..1u64 << n).sum();
                excluded_invalid = (1u64 << (3 * n)) - space as u64 - below;
            }
            exhaustive(unit, precision, progress)
        }
        SamplingPlan::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::Plan("Monte Carlo needs at least one sample".into()));
            }
            monte_carlo(unit, samples, seed, precision, progress)
        }
    };
    let (are, bias) = if acc.count == 0 {
        (0.0, 0.0)
    } else {
        let denom = QUANT * acc.count as f64;
        (acc.abs as f64 / denom, (acc.signed as f64 / denom).abs())
    };
    Ok(ErrorReport {
        unit: unit.label().to_string(),
        width: unit.width_label(),
        scheme: unit.scheme_label(),
        mode: plan.mode_label().to_string(),
        samples: acc.count,
        seed: match plan {
            SamplingPlan::Exhaustive => None,
            SamplingPlan::MonteCarlo { seed, .. } => Some(seed),
        },
        are_pct: 100.0 * are,
        pre_pct: 100.0 * acc.peak,
        bias_pct: 100.0 * bias.min(are),
        excluded_zero: acc.zero,
        excluded_invalid,
    })
}

fn exhaustive(unit: &Unit, precision: Precision, progress: Option<&Progress<'_>>) -> Acc {
    let n = unit.n();
    let outer = 1u64 << n;
    let total = match unit.kind() {
        OpKind::Mul => 1u64 << (2 * n),
        OpKind::Div => (1..outer).map(|b| (b << n).min(1 << (2 * n))).sum(),
    };
    let done = AtomicU64::new(0);
    let slice = |o: u64| {
        let mut acc = Acc::default();
        match unit.kind() {
            OpKind::Mul => {
                for b in 0..1u64 << n {
                    acc.push(unit.pair_error(o, b, precision));
                }
            }
            OpKind::Div => {
                if o > 0 {
                    for a in 0..(o << n).min(1 << (2 * n)) {
                        acc.push(unit.pair_error(a, o, precision));
                    }
                }
            }
        }
        if let Some(p) = progress {
            let inner = acc.count + acc.zero;
            let d = done.fetch_add(inner, Ordering::Relaxed) + inner;
            p(d, total);
        }
        acc
    };
    (0..outer)
        .into_par_iter()
        .map(slice)
        .reduce(Acc::default, Acc::merge)
}

fn monte_carlo(
    unit: &Unit,
    samples: u64,
    seed: u64,
    precision: Precision,
    progress: Option<&Progress<'_>>,
) -> Acc {
    let n = unit.n();
    let (div_total, cum) = match unit.kind() {
        OpKind::Div => div_space(n),
        OpKind::Mul => (0, Vec::new()),
    };
    let chunks = samples.div_ceil(MC_CHUNK);
    let done = AtomicU64::new(0);
    let chunk = |i: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i);
        let count = MC_CHUNK.min(samples - i * MC_CHUNK);
        let mut acc = Acc::default();
        for _ in 0..count {
            let (a, b) = match unit.kind() {
                OpKind::Mul => (rng.gen_range(0..1u64 << n), rng.gen_range(0..1u64 << n)),
                OpKind::Div => {
                    let r = rng.gen_range(0..div_total);
                    let idx = cum.partition_point(|&c| c <= r) - 1;
                    let b = idx as u64 + 1;
                    (b + r - cum[idx], b)
                }
            };
            acc.push(unit.pair_error(a, b, precision));
        }
        if let Some(p) = progress {
            let d = done.fetch_add(count, Ordering::Relaxed) + count;
            p(d, samples);
        }
        acc
    };
    (0..chunks)
        .into_par_iter()
        .map(chunk)
        .reduce(Acc::default, Acc::merge)
}

/// Characterizes every unit in order.
pub fn sweep(units: &[Unit], plan: SamplingPlan) -> Result<Vec<ErrorReport>> {
    units.iter().map(|u| characterize(u, plan)).collect()
}

pub const CSV_HEADER: &str =
    "unit,width,scheme,mode,samples,seed,are_pct,pre_pct,bias_pct,excluded_zero,excluded_invalid";

pub fn reports_to_csv(reports: &[ErrorReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{:.6},{:.6},{:.6},{},{}",
            r.unit,
            r.width,
            r.scheme,
            r.mode,
            r.samples,
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
            r.are_pct,
            r.pre_pct,
            r.bias_pct,
            r.excluded_zero,
            r.excluded_invalid
        );
    }
    out
}

pub fn reports_to_json(reports: &[ErrorReport]) -> Result<String> {
    let mut s = serde_json::to_string_pretty(reports)?;
    s.push('\n');
    Ok(s)
}

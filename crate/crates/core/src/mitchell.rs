//! Mitchell multiplier (N x N -> 2N) and divider (2N / N -> N).
//!
//! Each unit has two evaluation paths that must agree bit for bit:
//!
//! * a fast path on raw integers used by the characterization sweeps, and
//! * a phase-by-phase path (segment probe, priority + log assembly,
//!   characteristic/fraction combine, antilog shift) built from the
//!   `wordcore` and `logmap` primitives, which the pipeline model reuses.
//!
//! With a scheme attached, the selected coefficient enters the same
//! three-operand fraction addition (multiplier) or subtraction (divider).
//! Mitchell division overestimates, so divider coefficients are subtracted.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logmap::{self, Antilog, LogApprox};
use crate::rapidscheme::{Scheme, CELLS, FRAC_MSBS};
use crate::wordcore::{self, Frac, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Mul,
    Div,
}

impl OpKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            OpKind::Mul => "mul",
            OpKind::Div => "div",
        }
    }
}

/// Per-cell coefficients truncated to a unit's fraction width.
type CellTable = Box<[u64; CELLS]>;

fn cell_table(scheme: &Scheme, kind: OpKind, frac_width: u32) -> Result<CellTable> {
    if scheme.kind() != kind {
        return Err(Error::Config(format!(
            "scheme {} is a {} scheme, unit is {}",
            scheme.name(),
            scheme.kind().as_str(),
            kind.as_str()
        )));
    }
    Ok(Box::new(scheme.cell_table(frac_width)))
}

#[inline]
fn cell_of(x1: u64, x2: u64, frac_width: u32) -> usize {
    let shift = frac_width - FRAC_MSBS;
    ((x1 >> shift) << FRAC_MSBS | (x2 >> shift)) as usize
}

/// Approximate multiplier core on raw fractions: `2^(k1+k2) (1 + x1 + x2 + c)`
/// with the carry of the three-operand sum folded into the characteristic.
#[inline]
pub(crate) fn mul_kernel(a: u64, b: u64, frac_width: u32, coeff: u64) -> Antilog {
    let k1 = 63 - a.leading_zeros();
    let k2 = 63 - b.leading_zeros();
    let x1 = (a ^ (1 << k1)) << (frac_width - k1);
    let x2 = (b ^ (1 << k2)) << (frac_width - k2);
    let sum = x1 + x2 + coeff;
    let carry = sum >> frac_width;
    Antilog {
        significand: (1 << frac_width) | (sum & wordcore::mask(frac_width)),
        frac_width,
        exponent: (k1 + k2) as i32 + carry as i32,
    }
}

/// Approximate divider core: `2^(k1-k2) (1 + x1 - x2 - c)`, borrowing from the
/// characteristic while the fraction difference is negative.
#[inline]
pub(crate) fn div_kernel(a: u64, b: u64, frac_width: u32, coeff: u64) -> Antilog {
    let k1 = 63 - a.leading_zeros();
    let k2 = 63 - b.leading_zeros();
    let x1 = ((a ^ (1 << k1)) << (frac_width - k1)) as i64;
    let x2 = ((b ^ (1 << k2)) << (frac_width - k2)) as i64;
    let one = 1i64 << frac_width;
    let mut diff = x1 - x2 - coeff as i64;
    let mut borrow = 0;
    while diff < 0 {
        diff += one;
        borrow += 1;
    }
    Antilog {
        significand: (one | diff) as u64,
        frac_width,
        exponent: k1 as i32 - k2 as i32 - borrow,
    }
}

/// N x N -> 2N Mitchell multiplier, optionally with an error-reduction scheme.
#[derive(Clone, Debug)]
pub struct MulUnit {
    width: u32,
    scheme: Option<Arc<Scheme>>,
    table: Option<CellTable>,
}

impl MulUnit {
    pub const WIDTHS: [u32; 3] = [8, 16, 32];

    pub fn mitchell(width: u32) -> Result<Self> {
        if !Self::WIDTHS.contains(&width) {
            return Err(Error::Config(format!("unsupported multiplier width {width}")));
        }
        Ok(MulUnit {
            width,
            scheme: None,
            table: None,
        })
    }

    pub fn with_scheme(width: u32, scheme: Arc<Scheme>) -> Result<Self> {
        let mut unit = Self::mitchell(width)?;
        unit.table = Some(cell_table(&scheme, OpKind::Mul, unit.frac_width())?);
        unit.scheme = Some(scheme);
        Ok(unit)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn out_width(&self) -> u32 {
        2 * self.width
    }

    pub fn frac_width(&self) -> u32 {
        self.width - 1
    }

    pub fn scheme(&self) -> Option<&Arc<Scheme>> {
        self.scheme.as_ref()
    }

    #[inline]
    fn coeff(&self, x1: u64, x2: u64) -> u64 {
        match &self.table {
            Some(t) => t[cell_of(x1, x2, self.frac_width())],
            None => 0,
        }
    }

    /// Full-precision result; `None` when an operand is zero.
    #[inline]
    pub fn antilog(&self, a: u64, b: u64) -> Option<Antilog> {
        if a == 0 || b == 0 {
            return None;
        }
        let f = self.frac_width();
        let c = match &self.table {
            Some(t) => {
                let k1 = 63 - a.leading_zeros();
                let k2 = 63 - b.leading_zeros();
                t[cell_of((a ^ (1 << k1)) << (f - k1), (b ^ (1 << k2)) << (f - k2), f)]
            }
            None => 0,
        };
        Some(mul_kernel(a, b, f, c))
    }

    /// Integer product: the antilog truncated to 2N bits. Corrected results
    /// that would need bit 2N saturate.
    #[inline]
    pub fn apply(&self, a: u64, b: u64) -> u64 {
        match self.antilog(a, b) {
            None => 0,
            Some(r) => saturate(r.floor(), self.out_width()),
        }
    }
}

#[inline]
fn saturate(v: u128, width: u32) -> u64 {
    let max = wordcore::mask(width) as u128;
    v.min(max) as u64
}

/// 2N / N Mitchell divider, N in {4, 8, 16}.
#[derive(Clone, Debug)]
pub struct DivUnit {
    n: u32,
    scheme: Option<Arc<Scheme>>,
    table: Option<CellTable>,
}

impl DivUnit {
    pub const DIVISOR_WIDTHS: [u32; 3] = [4, 8, 16];

    pub fn mitchell(n: u32) -> Result<Self> {
        if !Self::DIVISOR_WIDTHS.contains(&n) {
            return Err(Error::Config(format!("unsupported divisor width {n}")));
        }
        Ok(DivUnit {
            n,
            scheme: None,
            table: None,
        })
    }

    pub fn with_scheme(n: u32, scheme: Arc<Scheme>) -> Result<Self> {
        let mut unit = Self::mitchell(n)?;
        unit.table = Some(cell_table(&scheme, OpKind::Div, unit.frac_width())?);
        unit.scheme = Some(scheme);
        Ok(unit)
    }

    /// Divisor and quotient width N.
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn dividend_width(&self) -> u32 {
        2 * self.n
    }

    /// Both fractions are aligned to the dividend's `2N - 1` bits.
    pub fn frac_width(&self) -> u32 {
        2 * self.n - 1
    }

    pub fn scheme(&self) -> Option<&Arc<Scheme>> {
        self.scheme.as_ref()
    }

    /// Checks `divisor > 0` and `dividend < 2^N * divisor`.
    pub fn check(&self, dividend: u64, divisor: u64) -> Result<()> {
        if divisor == 0 {
            return Err(Error::DivisionByZero);
        }
        if dividend >> self.dividend_width() != 0 || divisor >> self.n != 0 {
            return Err(Error::Config(format!(
                "operands {dividend}/{divisor} exceed a {}/{} divider",
                self.dividend_width(),
                self.n
            )));
        }
        if dividend >= divisor << self.n {
            return Err(Error::QuotientOverflow {
                dividend,
                divisor,
                n: self.n,
            });
        }
        Ok(())
    }

    #[inline]
    fn coeff(&self, x1: u64, x2: u64) -> u64 {
        match &self.table {
            Some(t) => t[cell_of(x1, x2, self.frac_width())],
            None => 0,
        }
    }

    /// Full-precision quotient for a pair that passed [`DivUnit::check`];
    /// `None` when the dividend is zero.
    #[inline]
    pub fn antilog(&self, dividend: u64, divisor: u64) -> Option<Antilog> {
        if dividend == 0 {
            return None;
        }
        let f = self.frac_width();
        let c = match &self.table {
            Some(t) => {
                let k1 = 63 - dividend.leading_zeros();
                let k2 = 63 - divisor.leading_zeros();
                t[cell_of(
                    (dividend ^ (1 << k1)) << (f - k1),
                    (divisor ^ (1 << k2)) << (f - k2),
                    f,
                )]
            }
            None => 0,
        };
        Some(div_kernel(dividend, divisor, f, c))
    }

    /// Integer quotient truncated to N bits.
    pub fn apply(&self, dividend: u64, divisor: u64) -> Result<u64> {
        self.check(dividend, divisor)?;
        Ok(match self.antilog(dividend, divisor) {
            None => 0,
            Some(r) => saturate(r.floor(), self.n),
        })
    }
}

fn expect_width(w: Word, width: u32, role: &str) -> Result<()> {
    if w.width() != width {
        return Err(Error::Config(format!(
            "{role} is {} bits, unit expects {width}",
            w.width()
        )));
    }
    Ok(())
}

pub fn mitchell_mul(u: &MulUnit, a: Word, b: Word) -> Result<Word> {
    expect_width(a, u.width(), "multiplicand")?;
    expect_width(b, u.width(), "multiplier")?;
    Word::new(u.out_width(), u.apply(a.value(), b.value()))
}

pub fn mitchell_div(u: &DivUnit, dividend: Word, divisor: Word) -> Result<Word> {
    expect_width(dividend, u.dividend_width(), "dividend")?;
    expect_width(divisor, u.n(), "divisor")?;
    Word::new(u.n(), u.apply(dividend.value(), divisor.value())?)
}

/// True product of two equal-width words.
pub fn exact_mul(a: Word, b: Word) -> Result<Word> {
    expect_width(b, a.width(), "multiplier")?;
    Word::new(2 * a.width(), a.value() * b.value())
}

/// Floor quotient of a 2N-bit dividend by an N-bit divisor.
pub fn exact_div(dividend: Word, divisor: Word) -> Result<Word> {
    let n = divisor.width();
    expect_width(dividend, 2 * n, "dividend")?;
    if divisor.is_zero() {
        return Err(Error::DivisionByZero);
    }
    if dividend.value() >= divisor.value() << n {
        return Err(Error::QuotientOverflow {
            dividend: dividend.value(),
            divisor: divisor.value(),
            n,
        });
    }
    Word::new(n, dividend.value() / divisor.value())
}

// Phase-level datapath, shared with the pipeline model.

/// Characteristic/fraction combine for the multiplier: one three-operand
/// fraction addition whose carry joins `k1 + k2`.
pub fn combine_mul(u: &MulUnit, la: &LogApprox, lb: &LogApprox) -> Result<(i32, Frac)> {
    let f = u.frac_width();
    let coeff = Frac::new(f, u.coeff(la.frac.bits(), lb.frac.bits()))?;
    let sum = wordcore::ternary_add(la.frac, lb.frac, coeff)?;
    Ok(((la.k + lb.k) as i32 + sum.carry as i32, sum.frac))
}

/// Characteristic/fraction combine for the divider. The divisor fraction is
/// widened to the dividend's `2N - 1` bits before the three-operand subtract.
pub fn combine_div(u: &DivUnit, la: &LogApprox, lb: &LogApprox) -> Result<(i32, Frac)> {
    let f = u.frac_width();
    let divisor_frac = lb.frac.realign(f)?;
    let coeff = Frac::new(f, u.coeff(la.frac.bits(), divisor_frac.bits()))?;
    let (diff, borrow) = wordcore::ternary_sub(la.frac, divisor_frac, coeff)?;
    Ok((la.k as i32 - lb.k as i32 - borrow as i32, diff))
}

/// Antilog shift into the 2N-bit product, saturating at the top.
pub fn finish_mul(u: &MulUnit, k_total: i32, frac: Frac) -> Result<u64> {
    let out = u.out_width();
    if k_total as u32 >= out {
        return Ok(wordcore::mask(out));
    }
    Ok(logmap::antilog_shift(k_total as u32, frac, out)?.value())
}

/// Antilog shift into the N-bit quotient; a negative characteristic gives 0.
pub fn finish_div(u: &DivUnit, k_total: i32, frac: Frac) -> Result<u64> {
    if k_total < 0 {
        return Ok(0);
    }
    if k_total as u32 >= u.n() {
        return Ok(wordcore::mask(u.n()));
    }
    Ok(logmap::antilog_shift(k_total as u32, frac, u.n())?.value())
}

/// Multiplier evaluated phase by phase through the literal LOD.
pub fn mul_by_phases(u: &MulUnit, a: u64, b: u64) -> Result<u64> {
    if a == 0 || b == 0 {
        return Ok(0);
    }
    let (wa, wb) = (Word::new(u.width(), a)?, Word::new(u.width(), b)?);
    let la = logmap::assemble_log(wa, logmap::resolve_priority(&logmap::probe_segments(wa))?)?;
    let lb = logmap::assemble_log(wb, logmap::resolve_priority(&logmap::probe_segments(wb))?)?;
    let (k, frac) = combine_mul(u, &la, &lb)?;
    finish_mul(u, k, frac)
}

pub fn div_by_phases(u: &DivUnit, dividend: u64, divisor: u64) -> Result<u64> {
    u.check(dividend, divisor)?;
    if dividend == 0 {
        return Ok(0);
    }
    let wa = Word::new(u.dividend_width(), dividend)?;
    let wb = Word::new(u.n(), divisor)?;
    let la = logmap::assemble_log(wa, logmap::resolve_priority(&logmap::probe_segments(wa))?)?;
    let lb = logmap::assemble_log(wb, logmap::resolve_priority(&logmap::probe_segments(wb))?)?;
    let (k, frac) = combine_div(u, &la, &lb)?;
    finish_div(u, k, frac)
}

// Real-valued error surfaces. Both are k-independent relative errors
// `(exact - approx) / exact` over the operand fractions.

/// Relative multiplier error with a fraction-domain correction `c` added.
pub fn corrected_surface_mul(x1: f64, x2: f64, c: f64) -> f64 {
    let s = x1 + x2 + c;
    let carry = s.floor();
    let approx = carry.exp2() * (1.0 + s - carry);
    let exact = (1.0 + x1) * (1.0 + x2);
    (exact - approx) / exact
}

/// Relative divider error with a fraction-domain correction `c` subtracted.
pub fn corrected_surface_div(x1: f64, x2: f64, c: f64) -> f64 {
    let d = x1 - x2 - c;
    let borrow = -d.floor();
    let approx = (-borrow).exp2() * (1.0 + d + borrow);
    let exact = (1.0 + x1) / (1.0 + x2);
    (exact - approx) / exact
}

/// Baseline Mitchell multiplier error: `x1 x2` below the carry, and
/// `1 - x1 - x2 + x1 x2` above it, both over `(1 + x1)(1 + x2)`. Never negative.
pub fn error_surface_mul(x1: f64, x2: f64) -> f64 {
    corrected_surface_mul(x1, x2, 0.0)
}

/// Baseline Mitchell divider error. Mitchell division overestimates, so the
/// signed value is never positive: `-(x2 (x1 - x2)) / (1 + x1)` without
/// borrow and `-(x2 - x1)(1 - x2) / (2 (1 + x1))` with it.
pub fn error_surface_div(x1: f64, x2: f64) -> f64 {
    corrected_surface_div(x1, x2, 0.0)
}

pub fn corrected_surface(kind: OpKind, x1: f64, x2: f64, c: f64) -> f64 {
    match kind {
        OpKind::Mul => corrected_surface_mul(x1, x2, c),
        OpKind::Div => corrected_surface_div(x1, x2, c),
    }
}

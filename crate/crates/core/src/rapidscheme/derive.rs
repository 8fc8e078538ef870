//! Partition and coefficient derivation from the error surfaces.

use rayon::prelude::*;

use super::{table_coefficients, Alignment, Coefficient, Grid, Scheme, SchemeName, CELLS, GRID};
use crate::error::{Error, Result};
use crate::mitchell::{corrected_surface, div_kernel, mul_kernel, OpKind};

/// Where the per-cell error statistics are measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lattice {
    /// Every valid operand pair of one unit configuration. `width` is the
    /// multiplier operand width or the divider's dividend width.
    Exhaustive { width: u32 },
    /// `per_cell x per_cell` midpoints of each cell on the real surfaces.
    Dense { per_cell: u32 },
}

const MAX_EXHAUSTIVE_PAIRS: u64 = 1 << 24;
const DENSE_PER_CELL: u32 = 32;

impl Lattice {
    /// Exhaustive when the configuration has at most 2^24 pairs, else dense.
    pub fn for_target(kind: OpKind, width: u32) -> Result<Lattice> {
        let pairs = match (kind, width) {
            (OpKind::Mul, 8 | 16 | 32) => 1u64 << (2 * width.min(31)),
            (OpKind::Div, 8 | 16 | 32) => div_pairs(width / 2),
            _ => {
                return Err(Error::Config(format!(
                    "no {} configuration of width {width}",
                    kind.as_str()
                )))
            }
        };
        Ok(if pairs <= MAX_EXHAUSTIVE_PAIRS {
            Lattice::Exhaustive { width }
        } else {
            Lattice::Dense {
                per_cell: DENSE_PER_CELL,
            }
        })
    }
}

fn div_pairs(n: u32) -> u64 {
    (1..1u64 << n)
        .map(|b| (b << n).min(1 << (2 * n)) - b)
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BiasControl {
    /// Per-cell argmin of the summed absolute error.
    Off,
    /// Adds `lambda * signed error` to the cell objective, with `lambda`
    /// bisected so the lattice-wide signed error is as close to zero as
    /// possible.
    ZeroMean,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DeriveOptions {
    pub lattice: Lattice,
    pub bias: BiasControl,
    /// Lets cells opt out of correction (grid index 0).
    pub implicit_zero: bool,
}

impl DeriveOptions {
    pub fn for_target(kind: OpKind, width: u32) -> Result<Self> {
        Ok(DeriveOptions {
            lattice: Lattice::for_target(kind, width)?,
            bias: BiasControl::ZeroMean,
            implicit_zero: true,
        })
    }
}

/// Error summary of one coefficient over a set of cells.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionStats {
    pub cells: Vec<(usize, usize)>,
    pub samples: u64,
    pub mean_abs: f64,
    pub mean_signed: f64,
    /// Integral of |error| over the region on the unit square.
    pub mass: f64,
}

/// Summed statistics per candidate and cell; candidate 0 is "no correction".
struct CellStats {
    abs: Vec<[f64; CELLS]>,
    signed: Vec<[f64; CELLS]>,
    count: [u64; CELLS],
}

impl CellStats {
    fn new(candidates: usize) -> Self {
        CellStats {
            abs: vec![[0.0; CELLS]; candidates],
            signed: vec![[0.0; CELLS]; candidates],
            count: [0; CELLS],
        }
    }

    fn merge(&mut self, other: &CellStats) {
        for (a, b) in self.abs.iter_mut().zip(&other.abs) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        for (a, b) in self.signed.iter_mut().zip(&other.signed) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        self.count.iter_mut().zip(&other.count).for_each(|(x, y)| *x += y);
    }

    fn candidates(&self) -> usize {
        self.abs.len()
    }
}

fn dense_points(u: usize, per_cell: u32) -> impl Iterator<Item = f64> {
    let p = per_cell as f64;
    (0..per_cell).map(move |i| (u as f64 + (i as f64 + 0.5) / p) / GRID as f64)
}

fn dense_stats(kind: OpKind, values: &[f64], per_cell: u32) -> CellStats {
    let mut stats = CellStats::new(values.len());
    for cell in 0..CELLS {
        let (u1, u2) = (cell / GRID, cell % GRID);
        for x1 in dense_points(u1, per_cell) {
            for x2 in dense_points(u2, per_cell) {
                for (ci, &c) in values.iter().enumerate() {
                    let e = corrected_surface(kind, x1, x2, c);
                    stats.abs[ci][cell] += e.abs();
                    stats.signed[ci][cell] += e;
                }
                stats.count[cell] += 1;
            }
        }
    }
    stats
}

/// One outer-operand slice of an exhaustive enumeration.
fn exhaustive_slice(kind: OpKind, width: u32, outer: u64, coeffs: &[u64]) -> CellStats {
    let mut stats = CellStats::new(coeffs.len());
    let f = width - 1;
    let shift = f - super::FRAC_MSBS;
    let frac = |v: u64| {
        let k = 63 - v.leading_zeros();
        (v ^ (1 << k)) << (f - k)
    };
    let inner = match kind {
        OpKind::Mul => 1..1u64 << width,
        OpKind::Div => outer..(outer << (width / 2)).min(1 << width),
    };
    let x_outer = frac(outer);
    for v in inner {
        let x_inner = frac(v);
        let cell = match kind {
            OpKind::Mul => ((x_outer >> shift) << 4 | (x_inner >> shift)) as usize,
            OpKind::Div => ((x_inner >> shift) << 4 | (x_outer >> shift)) as usize,
        };
        for (ci, &c) in coeffs.iter().enumerate() {
            let e = match kind {
                OpKind::Mul => mul_kernel(outer, v, f, c).relative_error((outer * v) as u128, 1),
                OpKind::Div => div_kernel(v, outer, f, c).relative_error(v as u128, outer as u128),
            };
            stats.abs[ci][cell] += e.abs();
            stats.signed[ci][cell] += e;
        }
        stats.count[cell] += 1;
    }
    stats
}

fn exhaustive_stats(kind: OpKind, width: u32, coeffs: &[u64]) -> CellStats {
    let outer_max = match kind {
        OpKind::Mul => 1u64 << width,
        OpKind::Div => 1u64 << (width / 2),
    };
    let slices: Vec<CellStats> = (1..outer_max)
        .into_par_iter()
        .map(|o| exhaustive_slice(kind, width, o, coeffs))
        .collect();
    let mut total = CellStats::new(coeffs.len());
    for s in &slices {
        total.merge(s);
    }
    total
}

fn choose(stats: &CellStats, lambda: f64) -> [u8; CELLS] {
    let mut choice = [0u8; CELLS];
    for (cell, slot) in choice.iter_mut().enumerate() {
        let mut best = stats.abs[0][cell] + lambda * stats.signed[0][cell];
        for ci in 1..stats.candidates() {
            let v = stats.abs[ci][cell] + lambda * stats.signed[ci][cell];
            if v < best {
                best = v;
                *slot = ci as u8;
            }
        }
    }
    choice
}

fn signed_total(stats: &CellStats, choice: &[u8; CELLS]) -> f64 {
    (0..CELLS)
        .map(|cell| stats.signed[choice[cell] as usize][cell])
        .sum()
}

fn balance(stats: &CellStats) -> [u8; CELLS] {
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if signed_total(stats, &choose(stats, mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (c_lo, c_hi) = (choose(stats, lo), choose(stats, hi));
    if signed_total(stats, &c_hi).abs() < signed_total(stats, &c_lo).abs() {
        c_hi
    } else {
        c_lo
    }
}

/// Assigns every cell the candidate with the smallest summed error on the
/// lattice, ties going to the lowest index.
pub fn derive_partition(
    kind: OpKind,
    coefficients: &[Coefficient],
    options: DeriveOptions,
) -> Result<Grid> {
    if coefficients.is_empty() {
        return Err(Error::Config("derivation needs at least one coefficient".into()));
    }
    // Candidate 0 is the zero coefficient when allowed; otherwise it is a
    // placeholder that is never selected.
    let values: Vec<f64> = std::iter::once(0.0)
        .chain(coefficients.iter().map(Coefficient::to_f64))
        .collect();
    let (mut stats, mut fallback) = match options.lattice {
        Lattice::Exhaustive { width } => {
            let f = width - 1;
            let raw: Vec<u64> = std::iter::once(0)
                .chain(coefficients.iter().map(|c| c.truncated(f)))
                .collect();
            let s = exhaustive_stats(kind, width, &raw);
            // Cells this configuration never reaches take the choice of the
            // continuous surface.
            let dense = s
                .count
                .contains(&0)
                .then(|| dense_stats(kind, &values, DENSE_PER_CELL));
            (s, dense)
        }
        Lattice::Dense { per_cell } => {
            if per_cell == 0 {
                return Err(Error::Config("dense lattice needs samples per cell".into()));
            }
            (dense_stats(kind, &values, per_cell), None)
        }
    };
    if !options.implicit_zero {
        for s in std::iter::once(&mut stats).chain(fallback.as_mut()) {
            s.abs[0] = [f64::INFINITY; CELLS];
            s.signed[0] = [0.0; CELLS];
        }
    }
    let mut choice = match options.bias {
        BiasControl::Off => choose(&stats, 0.0),
        BiasControl::ZeroMean => balance(&stats),
    };
    if let Some(dense) = &fallback {
        let surface = choose(dense, 0.0);
        for cell in 0..CELLS {
            if stats.count[cell] == 0 {
                choice[cell] = surface[cell];
            }
        }
    }
    let mut grid = Grid::uniform(0);
    for (cell, &c) in choice.iter().enumerate() {
        grid.set(cell / GRID, cell % GRID, c);
    }
    Ok(grid)
}

/// Table coefficients with a partition derived for one unit configuration.
pub fn derive_scheme(name: SchemeName, width: u32) -> Result<Scheme> {
    let kind = name.kind();
    let coefficients = table_coefficients(name, Alignment::Calibrated);
    let grid = derive_partition(kind, &coefficients, DeriveOptions::for_target(kind, width)?)?;
    Scheme::new(name.as_str(), kind, coefficients, grid)
}

fn region_points(region: &[(usize, usize)], per_cell: u32) -> Vec<(f64, f64)> {
    let mut pts = Vec::with_capacity(region.len() * (per_cell * per_cell) as usize);
    for &(u1, u2) in region {
        for x1 in dense_points(u1, per_cell) {
            for x2 in dense_points(u2, per_cell) {
                pts.push((x1, x2));
            }
        }
    }
    pts
}

fn check_region(region: &[(usize, usize)]) -> Result<()> {
    if region.is_empty() {
        return Err(Error::Config("empty region".into()));
    }
    if region.iter().any(|&(a, b)| a >= GRID || b >= GRID) {
        return Err(Error::Config("region cell outside the 16x16 grid".into()));
    }
    Ok(())
}

/// Error statistics of a fixed correction `c` over `region` on a dense
/// `per_cell x per_cell` lattice.
pub fn region_stats(
    kind: OpKind,
    c: f64,
    region: &[(usize, usize)],
    per_cell: u32,
) -> Result<RegionStats> {
    check_region(region)?;
    let pts = region_points(region, per_cell.max(1));
    let (mut abs, mut signed) = (0.0, 0.0);
    for &(x1, x2) in &pts {
        let e = corrected_surface(kind, x1, x2, c);
        abs += e.abs();
        signed += e;
    }
    let n = pts.len() as f64;
    Ok(RegionStats {
        cells: region.to_vec(),
        samples: pts.len() as u64,
        mean_abs: abs / n,
        mean_signed: signed / n,
        mass: abs / n * region.len() as f64 / CELLS as f64,
    })
}

const ORACLE_BITS: u32 = 13;
const ORACLE_EXCLUDED: u32 = 2;

/// Best single correction for `region`: scans `j / 2^15` over `[0, 1/4)`,
/// coarse then fine, minimizing mean |error| on a 16 x 16-per-cell lattice.
pub fn derive_coefficient_oracle(kind: OpKind, region: &[(usize, usize)]) -> Result<Coefficient> {
    check_region(region)?;
    let pts = region_points(region, 16);
    let scale = 2f64.powi((ORACLE_BITS + ORACLE_EXCLUDED) as i32);
    let cost = |j: u64| -> f64 {
        let c = j as f64 / scale;
        pts.iter()
            .map(|&(x1, x2)| corrected_surface(kind, x1, x2, c).abs())
            .sum()
    };
    let top = 1u64 << ORACLE_BITS;
    let argmin = |range: &mut dyn Iterator<Item = u64>| {
        let mut best = (u64::MAX, f64::INFINITY);
        for j in range {
            let v = cost(j);
            if v < best.1 {
                best = (j, v);
            }
        }
        best.0
    };
    let coarse = argmin(&mut (0..top).step_by(64));
    let fine = argmin(&mut (coarse.saturating_sub(63)..(coarse + 64).min(top)));
    Coefficient::new(
        &format!("{:0width$b}", fine, width = ORACLE_BITS as usize),
        ORACLE_EXCLUDED,
    )
}

//! Piecewise error-reduction schemes.
//!
//! A scheme splits the fraction square into 16 x 16 cells by the four MSBs
//! of each operand fraction and assigns every cell either no correction
//! (index 0) or one of the scheme's coefficients (index `1..=n`). The chosen
//! coefficient enters the fraction adder (multiplier) or subtractor
//! (divider) as a third operand.

mod derive;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mitchell::OpKind;
use crate::wordcore::{Frac, MAX_FRAC_WIDTH};

pub use derive::{
    derive_coefficient_oracle, derive_partition, derive_scheme, region_stats, BiasControl,
    DeriveOptions, Lattice, RegionStats,
};

/// Fraction MSBs per operand used to pick a cell.
pub const FRAC_MSBS: u32 = 4;
pub const GRID: usize = 16;
pub const CELLS: usize = GRID * GRID;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SchemeName {
    Rapid3Mul,
    Rapid5Mul,
    Rapid10Mul,
    Rapid3Div,
    Rapid5Div,
    Rapid9Div,
}

const M3: [&str; 3] = ["100000100111", "010011101100", "000100101001"];
const M5: [&str; 5] = [
    "1001111111111",
    "1000011011101",
    "0110010001010",
    "0011110010111",
    "0000111110000",
];
const M10: [&str; 10] = [
    "1001111000110",
    "1000110110001",
    "0111111000100",
    "0111000110101",
    "0110010100011",
    "0101110011111",
    "0100101000011",
    "0100001011101",
    "0011110000011",
    "0010101111111",
];
const D3: [&str; 3] = ["1000011111111", "0100010111111", "0001011111111"];
const D5: [&str; 5] = [
    "1001111000100",
    "1000001000111",
    "0110110001101",
    "0101010100111",
    "0011011100100",
];
const D9: [&str; 9] = [
    "1001110001111",
    "1000110111100",
    "1000000010100",
    "0111001100010",
    "0110100001101",
    "0110010100101",
    "0101000101011",
    "0100111101000",
    "0100001101100",
];

impl SchemeName {
    pub const ALL: [SchemeName; 6] = [
        SchemeName::Rapid3Mul,
        SchemeName::Rapid5Mul,
        SchemeName::Rapid10Mul,
        SchemeName::Rapid3Div,
        SchemeName::Rapid5Div,
        SchemeName::Rapid9Div,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SchemeName::Rapid3Mul => "RAPID-3-mul",
            SchemeName::Rapid5Mul => "RAPID-5-mul",
            SchemeName::Rapid10Mul => "RAPID-10-mul",
            SchemeName::Rapid3Div => "RAPID-3-div",
            SchemeName::Rapid5Div => "RAPID-5-div",
            SchemeName::Rapid9Div => "RAPID-9-div",
        }
    }

    pub fn kind(&self) -> OpKind {
        match self {
            SchemeName::Rapid3Mul | SchemeName::Rapid5Mul | SchemeName::Rapid10Mul => OpKind::Mul,
            _ => OpKind::Div,
        }
    }

    pub fn coefficient_count(&self) -> usize {
        self.table_bits().len()
    }

    /// Published coefficient bit strings, most significant kept bit first.
    pub fn table_bits(&self) -> &'static [&'static str] {
        match self {
            SchemeName::Rapid3Mul => &M3,
            SchemeName::Rapid5Mul => &M5,
            SchemeName::Rapid10Mul => &M10,
            SchemeName::Rapid3Div => &D3,
            SchemeName::Rapid5Div => &D5,
            SchemeName::Rapid9Div => &D9,
        }
    }
}

impl fmt::Display for SchemeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeName::ALL
            .into_iter()
            .find(|n| n.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownScheme(s.to_string()))
    }
}

/// How many zero MSBs sit above a published bit string.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Alignment {
    /// Two positions above the string: the alignment that reproduces the
    /// published accuracy for every scheme.
    Calibrated,
    /// The table footnote read literally: 3 zero MSBs for multiplier
    /// schemes, 4 for divider schemes.
    Literal,
}

/// An exact dyadic coefficient `int(bits) / 2^(len(bits) + excluded_msbs)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Coefficient {
    bits: String,
    excluded_msbs: u32,
}

impl Coefficient {
    pub fn new(bits: &str, excluded_msbs: u32) -> Result<Self> {
        if bits.is_empty() || !bits.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(Error::InvalidScheme(format!(
                "coefficient `{bits}` is not a binary string"
            )));
        }
        if bits.len() as u32 + excluded_msbs > MAX_FRAC_WIDTH {
            return Err(Error::InvalidScheme(format!(
                "coefficient `{bits}` with {excluded_msbs} excluded MSBs is wider than {MAX_FRAC_WIDTH} bits"
            )));
        }
        Ok(Coefficient {
            bits: bits.to_string(),
            excluded_msbs,
        })
    }

    pub fn bits(&self) -> &str {
        &self.bits
    }

    pub fn excluded_msbs(&self) -> u32 {
        self.excluded_msbs
    }

    pub fn numerator(&self) -> u64 {
        u64::from_str_radix(&self.bits, 2).unwrap_or(0)
    }

    /// `log2` of the denominator.
    pub fn scale(&self) -> u32 {
        self.bits.len() as u32 + self.excluded_msbs
    }

    pub fn to_f64(&self) -> f64 {
        self.numerator() as f64 / 2f64.powi(self.scale() as i32)
    }

    /// Raw bits at a fraction width, truncating below the LSB.
    pub fn truncated(&self, frac_width: u32) -> u64 {
        let scale = self.scale();
        if frac_width >= scale {
            self.numerator() << (frac_width - scale)
        } else {
            self.numerator() >> (scale - frac_width)
        }
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.numerator(), self.scale())
    }
}

pub fn table_coefficients(name: SchemeName, alignment: Alignment) -> Vec<Coefficient> {
    let excluded = match (alignment, name.kind()) {
        (Alignment::Calibrated, _) => 2,
        (Alignment::Literal, OpKind::Mul) => 3,
        (Alignment::Literal, OpKind::Div) => 4,
    };
    name.table_bits()
        .iter()
        .map(|bits| Coefficient {
            bits: bits.to_string(),
            excluded_msbs: excluded,
        })
        .collect()
}

pub fn load_table_coefficients(name: &str) -> Result<Vec<Coefficient>> {
    Ok(table_coefficients(name.parse()?, Alignment::Calibrated))
}

/// Cell-to-coefficient map, row-indexed by the first operand's MSBs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Grid(pub [[u8; GRID]; GRID]);

impl Grid {
    pub fn uniform(index: u8) -> Self {
        Grid([[index; GRID]; GRID])
    }

    pub fn get(&self, u1: usize, u2: usize) -> u8 {
        self.0[u1][u2]
    }

    pub fn set(&mut self, u1: usize, u2: usize, index: u8) {
        self.0[u1][u2] = index;
    }

    pub fn max_index(&self) -> u8 {
        self.0.iter().flatten().copied().max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scheme {
    name: String,
    kind: OpKind,
    coefficients: Vec<Coefficient>,
    grid: Grid,
}

impl Scheme {
    pub fn new(name: &str, kind: OpKind, coefficients: Vec<Coefficient>, grid: Grid) -> Result<Self> {
        if coefficients.is_empty() || coefficients.len() > u8::MAX as usize {
            return Err(Error::InvalidScheme(format!(
                "{} coefficients (expected 1..=255)",
                coefficients.len()
            )));
        }
        if let Ok(known) = name.parse::<SchemeName>() {
            if known.kind() != kind {
                return Err(Error::InvalidScheme(format!(
                    "{known} is a {} scheme",
                    known.kind().as_str()
                )));
            }
            if known.coefficient_count() != coefficients.len() {
                return Err(Error::InvalidScheme(format!(
                    "{known} needs {} coefficients, got {}",
                    known.coefficient_count(),
                    coefficients.len()
                )));
            }
        }
        if grid.max_index() as usize > coefficients.len() {
            return Err(Error::InvalidScheme(format!(
                "grid index {} exceeds coefficient count {}",
                grid.max_index(),
                coefficients.len()
            )));
        }
        Ok(Scheme {
            name: name.to_string(),
            kind,
            coefficients,
            grid,
        })
    }

    /// One coefficient applied everywhere.
    pub fn uniform(kind: OpKind, coefficient: Coefficient) -> Result<Self> {
        Scheme::new("uniform", kind, vec![coefficient], Grid::uniform(1))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> OpKind {
        self.kind
    }

    pub fn coefficients(&self) -> &[Coefficient] {
        &self.coefficients
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coefficient_for_cell(&self, u1: usize, u2: usize) -> Option<&Coefficient> {
        match self.grid.get(u1, u2) {
            0 => None,
            i => Some(&self.coefficients[i as usize - 1]),
        }
    }

    /// Truncated coefficient bits for every cell, indexed `u1 * 16 + u2`.
    pub fn cell_table(&self, frac_width: u32) -> [u64; CELLS] {
        let mut table = [0u64; CELLS];
        for (cell, slot) in table.iter_mut().enumerate() {
            if let Some(c) = self.coefficient_for_cell(cell / GRID, cell % GRID) {
                *slot = c.truncated(frac_width);
            }
        }
        table
    }

    pub fn to_json(&self) -> Result<String> {
        let file = SchemeFile {
            name: self.name.clone(),
            kind: self.kind,
            frac_msbs: FRAC_MSBS,
            coefficients: self.coefficients.clone(),
            grid: self.grid.0.iter().map(|r| r.to_vec()).collect(),
        };
        let mut out = serde_json::to_string_pretty(&file)?;
        out.push('\n');
        Ok(out)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SchemeFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidScheme(e.to_string()))?;
        if file.frac_msbs != FRAC_MSBS {
            return Err(Error::InvalidScheme(format!(
                "frac_msbs must be {FRAC_MSBS}, got {}",
                file.frac_msbs
            )));
        }
        if file.grid.len() != GRID {
            return Err(Error::InvalidScheme(format!("grid has {} rows", file.grid.len())));
        }
        let mut grid = Grid::uniform(0);
        for (u1, row) in file.grid.iter().enumerate() {
            if row.len() != GRID {
                return Err(Error::InvalidScheme(format!(
                    "grid row {u1} has {} columns",
                    row.len()
                )));
            }
            for (u2, &v) in row.iter().enumerate() {
                grid.set(u1, u2, v);
            }
        }
        let coefficients = file
            .coefficients
            .iter()
            .map(|c| Coefficient::new(&c.bits, c.excluded_msbs))
            .collect::<Result<Vec<_>>>()?;
        Scheme::new(&file.name, file.kind, coefficients, grid)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemeFile {
    name: String,
    kind: OpKind,
    frac_msbs: u32,
    coefficients: Vec<Coefficient>,
    grid: Vec<Vec<u8>>,
}

pub fn save_scheme(scheme: &Scheme, path: &Path) -> Result<()> {
    fs::write(path, scheme.to_json()?)?;
    Ok(())
}

pub fn load_scheme(path: &Path) -> Result<Scheme> {
    Scheme::from_json(&fs::read_to_string(path)?)
}

/// Coefficient picked by the MSBs of both fractions, at `frac1`'s width.
pub fn select_coefficient(scheme: &Scheme, frac1: Frac, frac2: Frac) -> Result<Frac> {
    let u1 = frac1.msbs(FRAC_MSBS) as usize;
    let u2 = frac2.msbs(FRAC_MSBS) as usize;
    let bits = scheme
        .coefficient_for_cell(u1, u2)
        .map_or(0, |c| c.truncated(frac1.width()));
    Frac::new(frac1.width(), bits)
}

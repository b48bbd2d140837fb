//! Square-grid site geometry and binary turbine layouts.
//!
//! Sites are numbered 1..=q (q = l_grid²) row-major from the top-left corner.
//! Geometry queries speak in those 1-based site labels; vector/matrix
//! structures elsewhere in the crate use 0-based indices, with index k
//! corresponding to site k+1.

use crate::error::{Error, Result};

/// Regular square grid of candidate turbine sites with unit spacing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridGeometry {
    l_grid: usize,
    spacing: f64,
}

impl GridGeometry {
    /// Creates an `l_grid` × `l_grid` grid with unit box spacing.
    pub fn new(l_grid: usize) -> Result<Self> {
        if l_grid == 0 {
            return Err(Error::InvalidInput("l_grid must be at least 1".into()));
        }
        Ok(Self {
            l_grid,
            spacing: 1.0,
        })
    }

    /// Grid side length l.
    pub fn l_grid(&self) -> usize {
        self.l_grid
    }

    /// Distance between adjacent site centers, in grid-box units.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Number of candidate sites q = l².
    pub fn num_sites(&self) -> usize {
        self.l_grid * self.l_grid
    }

    /// Maps a 1-based site label to its 1-based (row, col) grid coordinates.
    ///
    /// Labels run row-major: site 1 is the top-left corner, site q the
    /// bottom-right.
    pub fn site_coords(&self, index: usize) -> Result<(usize, usize)> {
        if index == 0 || index > self.num_sites() {
            return Err(Error::InvalidInput(format!(
                "site index {index} outside 1..={}",
                self.num_sites()
            )));
        }
        let row = (index - 1) / self.l_grid + 1;
        let col = (index - 1) % self.l_grid + 1;
        Ok((row, col))
    }

    /// Euclidean distance between the centers of two sites (1-based labels).
    pub fn site_distance(&self, i: usize, j: usize) -> Result<f64> {
        let (ri, ci) = self.site_coords(i)?;
        let (rj, cj) = self.site_coords(j)?;
        let dr = (rj as f64 - ri as f64) * self.spacing;
        let dc = (cj as f64 - ci as f64) * self.spacing;
        Ok(dr.hypot(dc))
    }
}

/// Binary placement vector: bit k set means a turbine occupies site k+1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Layout {
    bits: Vec<u8>,
}

impl Layout {
    /// All-empty layout over `q` sites.
    pub fn zeros(q: usize) -> Self {
        Self { bits: vec![0; q] }
    }

    /// Builds a layout from an explicit 0/1 vector.
    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidInput("layout bits must be 0 or 1".into()));
        }
        Ok(Self { bits })
    }

    /// Parses a string of '0'/'1' characters, site 1 leftmost.
    pub fn from_bitstring(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::InvalidInput(format!(
                    "unexpected character {other:?} in layout string"
                ))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok(Self { bits })
    }

    /// Builds a layout of length `q` from an integer basis label.
    ///
    /// Site 1 is the highest-order bit of the label, so labels sort the same
    /// way as the corresponding bitstrings.
    pub fn from_label(label: u64, q: usize) -> Result<Self> {
        if q > 64 {
            return Err(Error::SizeCap {
                what: "label width",
                got: q,
                cap: 64,
            });
        }
        if q < 64 && label >= (1u64 << q) {
            return Err(Error::InvalidInput(format!(
                "label {label} does not fit in {q} bits"
            )));
        }
        let bits = (0..q).map(|k| ((label >> (q - 1 - k)) & 1) as u8).collect();
        Ok(Self { bits })
    }

    /// Number of sites covered by this layout.
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    /// True when the layout covers zero sites.
    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// True when site `k+1` holds a turbine (0-based index `k`).
    pub fn is_set(&self, k: usize) -> bool {
        self.bits[k] == 1
    }

    /// Sets or clears the bit at 0-based index `k`.
    pub fn set(&mut self, k: usize, on: bool) {
        self.bits[k] = u8::from(on);
    }

    /// Flips the bit at 0-based index `k`.
    pub fn flip(&mut self, k: usize) {
        self.bits[k] ^= 1;
    }

    /// Number of turbines placed (popcount).
    pub fn ones(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    /// 0-based indices of occupied sites, ascending.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == 1)
            .map(|(k, _)| k)
    }

    /// Raw bit slice, index k ↔ site k+1.
    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// Integer basis label with site 1 as the highest-order bit.
    pub fn to_label(&self) -> u64 {
        debug_assert!(self.bits.len() <= 64);
        self.bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    /// Bitstring with site 1 leftmost, e.g. "0101".
    pub fn to_bitstring(&self) -> String {
        self.bits
            .iter()
            .map(|&b| if b == 1 { '1' } else { '0' })
            .collect()
    }
}

impl std::fmt::Display for Layout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_bitstring())
    }
}

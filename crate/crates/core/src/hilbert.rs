use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Truncated product space of one qubit and two cavity modes.
///
/// Basis states are |q, n_a, n_b> with q in {0, 1}, n_a in 0..=na_max,
/// n_b in 0..=nb_max. The flat index orders the qubit slowest and n_b
/// fastest, so the two-cavity block for fixed q is contiguous.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertSpace {
    pub na_max: usize,
    pub nb_max: usize,
}

/// One basis label |q, n_a, n_b>.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisLabel {
    pub q: u8,
    pub n_a: usize,
    pub n_b: usize,
}

impl BasisLabel {
    /// Total excitation number q + n_a + n_b. Conserved by every
    /// drive-free coupling in this model.
    pub fn excitation(&self) -> usize {
        self.q as usize + self.n_a + self.n_b
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{},{},{}>", self.q, self.n_a, self.n_b)
    }
}

impl HilbertSpace {
    pub fn new(na_max: usize, nb_max: usize) -> Self {
        Self { na_max, nb_max }
    }

    /// Number of basis states: 2 (na_max + 1) (nb_max + 1).
    pub fn dim(&self) -> usize {
        2 * (self.na_max + 1) * (self.nb_max + 1)
    }

    /// Photon-sector size for one qubit value.
    pub fn cavity_dim(&self) -> usize {
        (self.na_max + 1) * (self.nb_max + 1)
    }

    /// Flat index of |q, n_a, n_b>, validating each coordinate.
    pub fn index(&self, q: u8, n_a: usize, n_b: usize) -> Result<usize> {
        if q > 1 {
            return Err(CoreError::CoordinateOutOfRange {
                name: "q",
                value: q as usize,
                max: 1,
            });
        }
        if n_a > self.na_max {
            return Err(CoreError::CoordinateOutOfRange {
                name: "n_a",
                value: n_a,
                max: self.na_max,
            });
        }
        if n_b > self.nb_max {
            return Err(CoreError::CoordinateOutOfRange {
                name: "n_b",
                value: n_b,
                max: self.nb_max,
            });
        }
        Ok(self.index_unchecked(q, n_a, n_b))
    }

    /// Flat index without bounds checks. Callers must hold the invariants
    /// q <= 1, n_a <= na_max, n_b <= nb_max.
    #[inline]
    pub fn index_unchecked(&self, q: u8, n_a: usize, n_b: usize) -> usize {
        (q as usize) * self.cavity_dim() + n_a * (self.nb_max + 1) + n_b
    }

    /// Basis label at a flat index.
    pub fn label(&self, index: usize) -> Result<BasisLabel> {
        if index >= self.dim() {
            return Err(CoreError::CoordinateOutOfRange {
                name: "index",
                value: index,
                max: self.dim() - 1,
            });
        }
        let cav = self.cavity_dim();
        let q = (index / cav) as u8;
        let rest = index % cav;
        Ok(BasisLabel {
            q,
            n_a: rest / (self.nb_max + 1),
            n_b: rest % (self.nb_max + 1),
        })
    }

    /// Iterator over all labels in flat-index order.
    pub fn labels(&self) -> impl Iterator<Item = BasisLabel> + '_ {
        (0..self.dim()).map(|i| self.label(i).expect("index in range"))
    }
}

impl fmt::Display for HilbertSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "HilbertSpace(na_max={}, nb_max={}, dim={})",
            self.na_max,
            self.nb_max,
            self.dim()
        )
    }
}

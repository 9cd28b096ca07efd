//! Measurement angles in the x-y plane and the index sets that pick them.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the `N` equiangular directions `θ_j = πj/N` in the x-y plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalAngle {
    pub j: usize,
    pub theta: f64,
}

impl LocalAngle {
    pub fn new(j: usize, n_parties: usize) -> Result<Self> {
        if n_parties == 0 {
            return Err(Error::TooFewParties { n: 0, min: 1 });
        }
        if j >= n_parties {
            return Err(Error::IndexOutOfRange {
                index: j,
                n_parties,
            });
        }
        Ok(Self {
            j,
            theta: angle_of(j, n_parties),
        })
    }

    /// An arbitrary direction, not tied to the equiangular family.
    pub fn from_radians(theta: f64) -> Self {
        Self { j: 0, theta }
    }
}

/// `π·j/N`, computed the same way everywhere so angles compare bit-for-bit.
#[inline]
pub fn angle_of(j: usize, n_parties: usize) -> f64 {
    PI * j as f64 / n_parties as f64
}

/// A nonempty subset `S ⊆ {0, …, N−1}` of measurement directions, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SettingSet {
    n_parties: usize,
    indices: Vec<usize>,
}

impl SettingSet {
    /// Builds a setting set from indices in any order. Duplicates are rejected
    /// rather than merged.
    pub fn new(n_parties: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        if n_parties < 2 {
            return Err(Error::TooFewParties {
                n: n_parties,
                min: 2,
            });
        }
        let mut indices: Vec<usize> = indices.into_iter().collect();
        if indices.is_empty() {
            return Err(Error::EmptySettings);
        }
        indices.sort_unstable();
        for w in indices.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateIndex { index: w[0] });
            }
        }
        if let Some(&last) = indices.last() {
            if last >= n_parties {
                return Err(Error::IndexOutOfRange {
                    index: last,
                    n_parties,
                });
            }
        }
        Ok(Self { n_parties, indices })
    }

    /// `S = {0, …, N−1}`.
    pub fn full(n_parties: usize) -> Result<Self> {
        Self::new(n_parties, 0..n_parties)
    }

    pub fn n_parties(&self) -> usize {
        self.n_parties
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn angles(&self) -> impl Iterator<Item = LocalAngle> + '_ {
        self.indices.iter().map(move |&j| LocalAngle {
            j,
            theta: angle_of(j, self.n_parties),
        })
    }

    pub fn thetas(&self) -> Vec<f64> {
        self.angles().map(|a| a.theta).collect()
    }

    /// Checks `|S| ≤ C ≤ 2|S|`.
    pub fn check_weight(&self, c: f64) -> Result<()> {
        let size = self.len();
        if !c.is_finite() || c < size as f64 {
            return Err(Error::WeightBelowSize { c, size });
        }
        if c > 2.0 * size as f64 {
            return Err(Error::WeightAboveDouble { c, max: 2 * size });
        }
        Ok(())
    }
}

impl fmt::Display for SettingSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, j) in self.indices.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{j}")?;
        }
        write!(f, "]")
    }
}

/// `(−1)^j`
#[inline]
pub fn parity_sign(j: usize) -> f64 {
    if j.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}
